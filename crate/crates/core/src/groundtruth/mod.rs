//! Reference data for validation: binaural responses and node signals
//! derived from the same per-sample directional room response.

mod io;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use io::{load_sdm, save_sdm, SDM_FORMAT_VERSION};

use crate::dsp::FreqAxis;
use crate::error::{invalid_arg, invalid_data, Result};
use crate::fields::{default_predelay, NodeSpectra, NodeSignals};
use crate::geometry::{dot, norm, Vec3};
use crate::grids::SamplingGrid;
use crate::hrtf::HrtfSet;

/// Events weaker than this fraction of the strongest are skipped when
/// synthesising node signals.
pub const EVENT_THRESHOLD: f64 = 1e-6;

/// A pressure impulse response with one incidence direction per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SdmResponse {
    pub h: Vec<f64>,
    pub u: Vec<Vec3>,
    pub sample_rate: f64,
}

impl SdmResponse {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.h.len() != self.u.len() {
            return Err(invalid_data!("{} samples but {} directions", self.h.len(), self.u.len()));
        }
        if !(self.sample_rate > 0.0) {
            return Err(invalid_data!("sample rate must be positive"));
        }
        for (t, (h, u)) in self.h.iter().zip(&self.u).enumerate() {
            if !h.is_finite() {
                return Err(invalid_data!("sample {t} is not finite"));
            }
            if *h != 0.0 && (norm(*u) - 1.0).abs() > 1e-9 {
                return Err(invalid_data!("direction at sample {t} is not a unit vector"));
            }
        }
        Ok(())
    }

    /// Indices of samples at or above the event threshold.
    fn events(&self) -> Vec<usize> {
        let peak = self.h.iter().fold(0.0f64, |a, h| a.max(h.abs()));
        (0..self.h.len())
            .filter(|&t| self.h[t] != 0.0 && self.h[t].abs() >= EVENT_THRESHOLD * peak)
            .collect()
    }
}

/// Binaural response: each sample adds the nearest stored HRTF pair scaled
/// by `h[t]` at offset `t`. Length `T + hrtf length - 1`.
pub fn brir_from_sdm(r: &SdmResponse, hrtf: &HrtfSet) -> Result<[Vec<f64>; 2]> {
    r.validate()?;
    if (r.sample_rate - hrtf.sample_rate).abs() > 1e-9 {
        return Err(invalid_arg!(
            "response sample rate {} differs from the HRTF rate {}",
            r.sample_rate,
            hrtf.sample_rate
        ));
    }
    let n = hrtf.ir_length();
    let total = (r.len() + n).saturating_sub(1);
    let mut out = [vec![0.0; total], vec![0.0; total]];
    for (t, (h, u)) in r.h.iter().zip(&r.u).enumerate() {
        if *h == 0.0 {
            continue;
        }
        let i = hrtf.nearest(*u);
        for (ear, ir) in [&hrtf.left[i], &hrtf.right[i]].into_iter().enumerate() {
            for (j, v) in ir.iter().enumerate() {
                out[ear][t + j] += h * v;
            }
        }
    }
    Ok(out)
}

/// Node-signal length that holds every event, the predelay on both sides
/// and some room for band-limited ringing, rounded up to an even count.
pub fn default_field_length(r: &SdmResponse, grid: &SamplingGrid, c: f64) -> usize {
    let pre = default_predelay(grid, r.sample_rate, c);
    let n = r.len() + 2 * pre + 64;
    n + n % 2
}

/// Node signals of the superposition of one plane wave per sample, from
/// `u[t]` with amplitude `h[t]`, delayed by `t` samples beyond the global
/// predelay. Realised on the bins of a `length`-point transform.
pub fn field_from_sdm(r: &SdmResponse, grid: &SamplingGrid, length: usize, c: f64) -> Result<NodeSignals> {
    r.validate()?;
    let pre = default_predelay(grid, r.sample_rate, c);
    if length % 2 != 0 || length < 2 * pre || length < 2 {
        return Err(invalid_arg!(
            "length {length} must be even and at least twice the predelay ({pre} samples)"
        ));
    }
    let axis = FreqAxis::new(r.sample_rate, length);
    let bins = axis.bins();
    let fs = r.sample_rate;
    let zero = Complex64::new(0.0, 0.0);
    let events = r.events();
    let mut pressure = vec![vec![zero; bins]; grid.len()];
    let mut gradient = grid.normals().map(|_| vec![vec![zero; bins]; grid.len()]);
    // Bins are filled by a phase recurrence, reseeded to stay accurate.
    const RESEED: usize = 64;
    for (l, x) in grid.nodes().iter().enumerate() {
        let normal = grid.normals().map(|n| n[l]);
        for &t in &events {
            let u = r.u[t];
            let amp = r.h[t];
            let delay = (pre + t) as f64 / fs - dot(u, *x) / c;
            let step_phase = -2.0 * PI * axis.freq(1) * delay;
            let step = Complex64::from_polar(1.0, step_phase);
            let nu = normal.map(|n| dot(n, u));
            let mut z = Complex64::new(amp, 0.0);
            for k in 0..bins - 1 {
                if k % RESEED == 0 {
                    z = Complex64::from_polar(amp, step_phase * k as f64);
                }
                pressure[l][k] += z;
                if let (Some(g), Some(nu)) = (gradient.as_mut(), nu) {
                    g[l][k] += Complex64::new(0.0, axis.omega(k) / c * nu) * z;
                }
                z *= step;
            }
        }
    }
    let spectra = NodeSpectra {
        grid_fingerprint: grid.fingerprint(),
        axis,
        predelay_samples: pre,
        pressure,
        gradient,
    };
    Ok(spectra.to_signals())
}

/// Image-source response of a rectangular room with walls at `0` and
/// `dims` on each axis.
///
/// Every image up to `order` reflections arrives at `round(fs d / c)` with
/// amplitude `beta^reflections / d`, `beta = sqrt(1 - absorption)`, from the
/// direction of the image. Arrivals sharing a sample add their amplitudes
/// and keep the direction of the strongest.
pub fn synth_shoebox(
    dims: Vec3,
    source: Vec3,
    receiver: Vec3,
    absorption: f64,
    order: usize,
    sample_rate: f64,
    c: f64,
) -> Result<SdmResponse> {
    if dims.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(invalid_arg!("room dimensions must be positive"));
    }
    for (name, p) in [("source", source), ("receiver", receiver)] {
        if (0..3).any(|i| !(p[i] > 0.0 && p[i] < dims[i])) {
            return Err(invalid_arg!("{name} must lie strictly inside the room"));
        }
    }
    if !(absorption > 0.0 && absorption <= 1.0) {
        return Err(invalid_arg!("absorption must be in (0, 1], got {absorption}"));
    }
    let beta = (1.0 - absorption).sqrt();
    let ord = order as i64;
    // (sample, amplitude, direction, strongest magnitude)
    let mut arrivals: Vec<(usize, f64, Vec3)> = Vec::new();
    let axis_images = |i: usize| -> Vec<(f64, i64)> {
        let mut v = Vec::new();
        for n in -ord..=ord {
            for q in 0..2i64 {
                let pos = if q == 0 { source[i] } else { -source[i] } + 2.0 * n as f64 * dims[i];
                let count = (n - q).abs() + n.abs();
                if count <= ord {
                    v.push((pos, count));
                }
            }
        }
        v
    };
    let (ix, iy, iz) = (axis_images(0), axis_images(1), axis_images(2));
    for &(x, cx) in &ix {
        for &(y, cy) in &iy {
            if cx + cy > ord {
                continue;
            }
            for &(z, cz) in &iz {
                let count = cx + cy + cz;
                if count > ord {
                    continue;
                }
                let v = [x - receiver[0], y - receiver[1], z - receiver[2]];
                let d = norm(v);
                let amp = beta.powi(count as i32) / d;
                if amp == 0.0 {
                    continue;
                }
                let t = (sample_rate * d / c).round() as usize;
                arrivals.push((t, amp, [v[0] / d, v[1] / d, v[2] / d]));
            }
        }
    }
    let len = arrivals.iter().map(|a| a.0 + 1).max().unwrap_or(1);
    let mut h = vec![0.0; len];
    let mut u = vec![[1.0, 0.0, 0.0]; len];
    let mut strongest = vec![0.0f64; len];
    // Deterministic order: by sample, then by decreasing amplitude.
    arrivals.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
    for (t, amp, dir) in arrivals {
        h[t] += amp;
        if amp > strongest[t] {
            strongest[t] = amp;
            u[t] = dir;
        }
    }
    Ok(SdmResponse { h, u, sample_rate })
}

/// Sabine reverberation time `0.161 V / (S alpha)` of a shoebox room.
pub fn sabine_t60(dims: Vec3, absorption: f64) -> f64 {
    let v = dims[0] * dims[1] * dims[2];
    let s = 2.0 * (dims[0] * dims[1] + dims[0] * dims[2] + dims[1] * dims[2]);
    0.161 * v / (s * absorption)
}

/// Absorption that gives a Sabine reverberation time `t60`.
pub fn sabine_absorption(dims: Vec3, t60: f64) -> f64 {
    sabine_t60(dims, 1.0) / t60
}

/// Reverberation time from the Schroeder decay, fitted between `-5` and
/// `-25` dB and extrapolated to 60 dB.
pub fn schroeder_t60(h: &[f64], sample_rate: f64) -> Option<f64> {
    let mut edc = vec![0.0; h.len() + 1];
    for t in (0..h.len()).rev() {
        edc[t] = edc[t + 1] + h[t] * h[t];
    }
    let total = edc[0];
    if total <= 0.0 {
        return None;
    }
    let level = |t: usize| 10.0 * (edc[t] / total).log10();
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in 0..h.len() {
        let l = level(t);
        if l <= -5.0 && l >= -25.0 {
            let x = t as f64 / sample_rate;
            sx += x;
            sy += l;
            sxx += x * x;
            sxy += x * l;
            n += 1.0;
        }
    }
    if n < 2.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope < 0.0).then(|| -60.0 / slope)
}
