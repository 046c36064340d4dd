//! Renderer container.
//!
//! Layout, little endian: magic `AURR`, `u32` version, `u32` kind, `u32`
//! inputs, `u32` taps, `u32` latency, `f64` sample rate, 64 bytes of grid
//! fingerprint, realised bins (`2 x L` complex per bin, row-major), the FIR
//! bank, a decode section (`u32` channel count, zero when absent, then
//! `2 x M` complex per bin), an EQ section (`u32` taps, zero when absent,
//! then the FIR and one gain per bin) and finally a JSON metadata trailer
//! preceded by its `u64` byte length.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{EqFilter, FirBank, RendererKind, RendererMatrix, RendererMeta};
use crate::dsp::FreqAxis;
use crate::error::{invalid_data, Error, Result};
use crate::linalg::CMat;

pub const RENDERER_MAGIC: &[u8; 4] = b"AURR";
pub const RENDERER_FORMAT_VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn c64(&mut self, v: Complex64) {
        self.f64(v.re);
        self.f64(v.im);
    }
    fn mats(&mut self, mats: &[CMat]) {
        for m in mats {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    self.c64(m[(i, j)]);
                }
            }
        }
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(invalid_data!("renderer file is truncated"));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn c64(&mut self) -> Result<Complex64> {
        Ok(Complex64::new(self.f64()?, self.f64()?))
    }
    fn mats(&mut self, count: usize, rows: usize, cols: usize) -> Result<Vec<CMat>> {
        // Guard the allocation against corrupt sizes.
        let need = count.saturating_mul(rows).saturating_mul(cols).saturating_mul(16);
        if need > self.data.len() - self.pos {
            return Err(invalid_data!("renderer file is truncated"));
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut m = CMat::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = self.c64()?;
                }
            }
            out.push(m);
        }
        Ok(out)
    }
}

fn kind_code(kind: RendererKind) -> u32 {
    match kind {
        RendererKind::Ambisonic => 0,
        RendererKind::Direct => 1,
    }
}

pub fn renderer_to_bytes(r: &RendererMatrix) -> Result<Vec<u8>> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(RENDERER_MAGIC);
    w.u32(RENDERER_FORMAT_VERSION);
    w.u32(kind_code(r.meta.kind));
    w.u32(r.fir.inputs as u32);
    w.u32(r.fir.taps as u32);
    w.u32(r.meta.latency_samples as u32);
    w.f64(r.axis.sample_rate);
    let mut fp = [b' '; 64];
    let bytes = r.meta.grid_fingerprint.as_bytes();
    fp[..bytes.len().min(64)].copy_from_slice(&bytes[..bytes.len().min(64)]);
    w.0.extend_from_slice(&fp);
    w.mats(&r.bins);
    for v in &r.fir.data {
        w.f64(*v);
    }
    match &r.decode {
        Some(dec) => {
            w.u32(dec[0].ncols() as u32);
            w.mats(dec);
        }
        None => w.u32(0),
    }
    match &r.eq {
        Some(eq) => {
            w.u32(eq.fir.len() as u32);
            for v in eq.fir.iter().chain(&eq.gain) {
                w.f64(*v);
            }
        }
        None => w.u32(0),
    }
    let json = serde_json::to_vec(&r.meta)?;
    w.0.extend_from_slice(&(json.len() as u64).to_le_bytes());
    w.0.extend_from_slice(&json);
    Ok(w.0)
}

pub fn renderer_from_bytes(data: &[u8]) -> Result<RendererMatrix> {
    let mut r = Reader { data, pos: 0 };
    if r.take(4)? != RENDERER_MAGIC {
        return Err(invalid_data!("not a renderer file"));
    }
    let version = r.u32()?;
    if version != RENDERER_FORMAT_VERSION {
        return Err(invalid_data!("unsupported renderer format version {version}"));
    }
    let kind = r.u32()?;
    let inputs = r.u32()? as usize;
    let taps = r.u32()? as usize;
    let latency = r.u32()? as usize;
    let fs = r.f64()?;
    let fp = String::from_utf8_lossy(r.take(64)?).trim_end().to_string();
    if taps < 2 || taps % 2 != 0 || !(fs > 0.0) || inputs == 0 {
        return Err(invalid_data!("renderer header is inconsistent"));
    }
    let axis = FreqAxis::new(fs, taps);
    let bins = r.mats(axis.bins(), 2, inputs)?;
    let n = 2 * inputs * taps;
    if n * 8 > data.len() - r.pos {
        return Err(invalid_data!("renderer file is truncated"));
    }
    let fir = FirBank {
        inputs,
        taps,
        data: (0..n).map(|_| r.f64()).collect::<Result<_>>()?,
    };
    let m = r.u32()? as usize;
    let decode = if m > 0 { Some(r.mats(axis.bins(), 2, m)?) } else { None };
    let eq_taps = r.u32()? as usize;
    let eq = if eq_taps > 0 {
        let fir = (0..eq_taps).map(|_| r.f64()).collect::<Result<_>>()?;
        let gain = (0..axis.bins()).map(|_| r.f64()).collect::<Result<_>>()?;
        Some(EqFilter { gain, fir })
    } else {
        None
    };
    let len = r.u64()? as usize;
    let meta: RendererMeta = serde_json::from_slice(r.take(len)?)?;
    if r.pos != data.len() {
        return Err(invalid_data!("trailing bytes after the metadata"));
    }
    if kind_code(meta.kind) != kind || meta.taps != taps || meta.latency_samples != latency || meta.grid_fingerprint != fp {
        return Err(invalid_data!("renderer header and metadata disagree"));
    }
    if meta.grid_nodes != inputs {
        return Err(invalid_data!("renderer metadata node count disagrees with the bank"));
    }
    Ok(RendererMatrix {
        meta,
        axis,
        bins,
        fir,
        decode,
        eq,
    })
}

pub fn save_renderer(r: &RendererMatrix, path: &Path) -> Result<()> {
    let bytes = renderer_to_bytes(r)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn load_renderer(path: &Path) -> Result<RendererMatrix> {
    let mut data = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|e| Error::io(path, e))?;
    renderer_from_bytes(&data)
}
