//! Streaming MIMO convolution with a uniformly partitioned overlap-save
//! scheme. Transforms are `2B` points; the filter is cut into partitions of
//! `B` taps and input spectra are kept in a frequency-domain delay line.

use num_complex::Complex64;

use crate::dsp::Fft;
use crate::error::{invalid_arg, invalid_data, Result};
use crate::fields::NodeSignals;
use crate::renderers::{FirBank, RendererMatrix};

/// State of one stream.
#[derive(Debug, Clone)]
pub struct Convolver {
    block: usize,
    inputs: usize,
    partitions: usize,
    latency: usize,
    fft: Fft,
    /// `[ear][input][partition]`, `B + 1` bins each.
    filters: Vec<Vec<Complex64>>,
    /// Last `2B` input samples per channel.
    history: Vec<Vec<f64>>,
    /// `[input][slot]` spectra; slot `head` is the newest.
    delay_line: Vec<Vec<Vec<Complex64>>>,
    head: usize,
    /// Input not yet forming a whole block, used by [`Convolver::push`].
    pending: Vec<Vec<f64>>,
}

impl Convolver {
    /// Convolver for an FIR bank with block size `block`, a power of two in
    /// `64..=8192`.
    pub fn new(bank: &FirBank, block: usize, latency: usize) -> Result<Self> {
        Self::with_block_limits(bank, block, latency, 64)
    }

    /// As [`Convolver::new`] with the renderer's bank and latency.
    pub fn for_renderer(r: &RendererMatrix, block: usize) -> Result<Self> {
        Self::new(&r.fir, block, r.latency())
    }

    fn with_block_limits(bank: &FirBank, block: usize, latency: usize, min_block: usize) -> Result<Self> {
        if !block.is_power_of_two() || block < min_block || block > 8192 {
            return Err(invalid_arg!("block size must be a power of two in {min_block}..=8192, got {block}"));
        }
        let partitions = bank.taps.div_ceil(block).max(1);
        let n = 2 * block;
        let fft = Fft::new(n);
        let mut filters = Vec::with_capacity(2 * bank.inputs * partitions);
        let mut buf = vec![0.0; n];
        for ear in 0..2 {
            for l in 0..bank.inputs {
                let h = bank.filter(ear, l);
                for p in 0..partitions {
                    buf.fill(0.0);
                    let start = p * block;
                    let end = (start + block).min(h.len());
                    if start < end {
                        buf[..end - start].copy_from_slice(&h[start..end]);
                    }
                    filters.push(fft.forward(&buf));
                }
            }
        }
        let zero = Complex64::new(0.0, 0.0);
        Ok(Convolver {
            block,
            inputs: bank.inputs,
            partitions,
            latency,
            fft,
            filters,
            history: vec![vec![0.0; n]; bank.inputs],
            delay_line: vec![vec![vec![zero; block + 1]; partitions]; bank.inputs],
            head: 0,
            pending: vec![Vec::new(); bank.inputs],
        })
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn latency(&self) -> usize {
        self.latency
    }

    /// Consumes one block per input channel and returns one block per ear.
    /// Non-finite input leaves the state untouched.
    pub fn process(&mut self, input: &[Vec<f64>]) -> Result<[Vec<f64>; 2]> {
        if input.len() != self.inputs {
            return Err(invalid_data!("expected {} input channels, got {}", self.inputs, input.len()));
        }
        for (l, ch) in input.iter().enumerate() {
            if ch.len() != self.block {
                return Err(invalid_data!("channel {l} block has {} samples, expected {}", ch.len(), self.block));
            }
            if ch.iter().any(|v| !v.is_finite()) {
                return Err(invalid_data!("channel {l} block contains non-finite samples"));
            }
        }
        let b = self.block;
        let p = self.partitions;
        self.head = (self.head + p - 1) % p;
        let mut scratch = vec![0.0; 2 * b];
        for (l, ch) in input.iter().enumerate() {
            let hist = &mut self.history[l];
            hist.copy_within(b.., 0);
            hist[b..].copy_from_slice(ch);
            scratch.copy_from_slice(hist);
            self.fft.forward_into(&mut scratch, &mut self.delay_line[l][self.head]);
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut out = [vec![0.0; b], vec![0.0; b]];
        let mut acc = vec![zero; b + 1];
        let mut time = vec![0.0; 2 * b];
        for (ear, o) in out.iter_mut().enumerate() {
            acc.fill(zero);
            for l in 0..self.inputs {
                for part in 0..p {
                    let x = &self.delay_line[l][(self.head + part) % p];
                    let h = &self.filters[(ear * self.inputs + l) * p + part];
                    for ((a, x), h) in acc.iter_mut().zip(x).zip(h) {
                        *a += x * h;
                    }
                }
            }
            self.fft.inverse_into(&mut acc, &mut time);
            o.copy_from_slice(&time[b..]);
        }
        Ok(out)
    }

    /// Accepts any number of samples per channel and returns the output of
    /// every block completed by them. The concatenated output does not
    /// depend on how the input stream is split.
    pub fn push(&mut self, input: &[Vec<f64>]) -> Result<[Vec<f64>; 2]> {
        if input.len() != self.inputs {
            return Err(invalid_data!("expected {} input channels, got {}", self.inputs, input.len()));
        }
        let n = input.first().map_or(0, |c| c.len());
        for (l, ch) in input.iter().enumerate() {
            if ch.len() != n {
                return Err(invalid_data!("channel {l} has {} samples, channel 0 has {n}", ch.len()));
            }
            if ch.iter().any(|v| !v.is_finite()) {
                return Err(invalid_data!("channel {l} contains non-finite samples"));
            }
        }
        for (p, ch) in self.pending.iter_mut().zip(input) {
            p.extend_from_slice(ch);
        }
        let mut out = [Vec::new(), Vec::new()];
        while self.pending.first().is_some_and(|p| p.len() >= self.block) {
            let block: Vec<Vec<f64>> = self.pending.iter_mut().map(|p| p.drain(..self.block).collect()).collect();
            let [a, b] = self.process(&block)?;
            out[0].extend_from_slice(&a);
            out[1].extend_from_slice(&b);
        }
        Ok(out)
    }

    /// Samples per channel buffered by [`Convolver::push`].
    pub fn pending(&self) -> usize {
        self.pending.first().map_or(0, |p| p.len())
    }
}

/// Full convolution of `input` (`L x T`) with `bank`, `T + taps - 1`
/// samples per ear, computed by streaming with block size `block`.
pub fn convolve_bank(bank: &FirBank, input: &[Vec<f64>], block: usize) -> Result<[Vec<f64>; 2]> {
    let mut conv = Convolver::with_block_limits(bank, block, 0, 1)?;
    if input.len() != bank.inputs {
        return Err(invalid_data!("expected {} input channels, got {}", bank.inputs, input.len()));
    }
    let t = input.first().map_or(0, |c| c.len());
    let total = t + bank.taps - 1;
    let blocks = total.div_ceil(block);
    let mut out = [Vec::with_capacity(blocks * block), Vec::with_capacity(blocks * block)];
    let mut chunk = vec![vec![0.0; block]; bank.inputs];
    for i in 0..blocks {
        for (l, c) in chunk.iter_mut().enumerate() {
            c.fill(0.0);
            let start = i * block;
            if start < t {
                let end = (start + block).min(t);
                c[..end - start].copy_from_slice(&input[l][start..end]);
            }
        }
        let [a, b] = conv.process(&chunk)?;
        out[0].extend_from_slice(&a);
        out[1].extend_from_slice(&b);
    }
    out[0].truncate(total);
    out[1].truncate(total);
    Ok(out)
}

/// Default block size of [`render_offline`].
pub const DEFAULT_BLOCK: usize = 512;

/// Renders node signals through a renderer, `T + taps - 1` samples per ear.
pub fn render_offline(r: &RendererMatrix, signals: &NodeSignals, block: usize) -> Result<[Vec<f64>; 2]> {
    if signals.grid_fingerprint != r.meta.grid_fingerprint {
        return Err(crate::Error::FingerprintMismatch {
            expected: r.meta.grid_fingerprint.clone(),
            found: signals.grid_fingerprint.clone(),
        });
    }
    if (signals.sample_rate - r.axis.sample_rate).abs() > 1e-9 {
        return Err(invalid_data!(
            "signal sample rate {} differs from the renderer's {}",
            signals.sample_rate,
            r.axis.sample_rate
        ));
    }
    let input = signals.renderer_input(r.meta.speed_of_sound)?;
    if !(block.is_power_of_two() && (64..=8192).contains(&block)) {
        return Err(invalid_arg!("block size must be a power of two in 64..=8192, got {block}"));
    }
    convolve_bank(&r.fir, &input, block)
}

/// Writes a stereo RIFF/WAVE file with 32-bit float samples.
pub fn write_stereo_wav(path: &std::path::Path, ears: &[Vec<f64>; 2], sample_rate: f64) -> Result<()> {
    if ears[0].len() != ears[1].len() {
        return Err(invalid_data!("ear signals differ in length"));
    }
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: sample_rate.round() as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for (l, r) in ears[0].iter().zip(&ears[1]) {
        w.write_sample(*l as f32)?;
        w.write_sample(*r as f32)?;
    }
    w.finalize()?;
    Ok(())
}

/// Reads a stereo float WAV file written by [`write_stereo_wav`].
pub fn read_stereo_wav(path: &std::path::Path) -> Result<([Vec<f64>; 2], f64)> {
    let mut r = hound::WavReader::open(path)?;
    let spec = r.spec();
    if spec.channels != 2 || spec.sample_format != hound::SampleFormat::Float {
        return Err(invalid_data!("{} is not a stereo float WAV file", path.display()));
    }
    let s: Vec<f32> = r.samples::<f32>().collect::<std::result::Result<_, _>>()?;
    let left = s.iter().step_by(2).map(|v| *v as f64).collect();
    let right = s.iter().skip(1).step_by(2).map(|v| *v as f64).collect();
    Ok(([left, right], spec.sample_rate as f64))
}

/// Brute-force time-domain convolution, for reference.
pub fn direct_convolution(bank: &FirBank, input: &[Vec<f64>]) -> [Vec<f64>; 2] {
    let t = input.first().map_or(0, |c| c.len());
    let total = t + bank.taps - 1;
    let mut out = [vec![0.0; total], vec![0.0; total]];
    for (ear, o) in out.iter_mut().enumerate() {
        for (l, x) in input.iter().enumerate() {
            let h = bank.filter(ear, l);
            for (i, xi) in x.iter().enumerate() {
                if *xi == 0.0 {
                    continue;
                }
                for (j, hj) in h.iter().enumerate() {
                    o[i + j] += xi * hj;
                }
            }
        }
    }
    out
}
