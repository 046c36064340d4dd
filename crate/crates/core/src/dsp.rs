//! Real-signal transforms, fractional-octave smoothing and minimum-phase
//! construction.
//!
//! Spectra are half spectra of length `n/2 + 1` without normalisation on the
//! forward transform; [`irfft`] divides by `n`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

/// Bins `0..=n/2` of an `n`-point real transform at a sample rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqAxis {
    pub sample_rate: f64,
    pub n_fft: usize,
}

impl FreqAxis {
    pub fn new(sample_rate: f64, n_fft: usize) -> Self {
        assert!(n_fft >= 2 && n_fft % 2 == 0, "transform size must be even, got {n_fft}");
        assert!(sample_rate > 0.0);
        FreqAxis { sample_rate, n_fft }
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn freq(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate / self.n_fft as f64
    }

    pub fn omega(&self, k: usize) -> f64 {
        2.0 * PI * self.freq(k)
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.bins()).map(|k| self.freq(k)).collect()
    }
}

/// Forward and inverse plans for one transform size.
#[derive(Clone)]
pub struct Fft {
    n: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl std::fmt::Debug for Fft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft").field("n", &self.n).finish()
    }
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n % 2 == 0, "transform size must be even, got {n}");
        let mut planner = RealFftPlanner::<f64>::new();
        Fft {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bins(&self) -> usize {
        self.n / 2 + 1
    }

    /// Forward transform of `x`, zero-padded or truncated to the plan size.
    pub fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![0.0; self.n];
        let m = x.len().min(self.n);
        buf[..m].copy_from_slice(&x[..m]);
        let mut out = vec![Complex64::new(0.0, 0.0); self.bins()];
        self.forward
            .process(&mut buf, &mut out)
            .expect("buffer sizes match the plan");
        out
    }

    /// In-place variant; `input` is used as scratch.
    pub fn forward_into(&self, input: &mut [f64], out: &mut [Complex64]) {
        self.forward
            .process(input, out)
            .expect("buffer sizes match the plan");
    }

    /// Inverse transform, scaled by `1/n`. Imaginary parts of the DC and
    /// Nyquist bins are ignored.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        let mut out = vec![0.0; self.n];
        self.inverse_into(&mut buf, &mut out);
        out
    }

    /// In-place variant; `spectrum` is used as scratch.
    pub fn inverse_into(&self, spectrum: &mut [Complex64], out: &mut [f64]) {
        assert_eq!(spectrum.len(), self.bins());
        spectrum[0].im = 0.0;
        let last = spectrum.len() - 1;
        spectrum[last].im = 0.0;
        self.inverse
            .process(spectrum, out)
            .expect("buffer sizes match the plan");
        let scale = 1.0 / self.n as f64;
        for v in out.iter_mut() {
            *v *= scale;
        }
    }
}

pub fn rfft(x: &[f64], n: usize) -> Vec<Complex64> {
    Fft::new(n).forward(x)
}

pub fn irfft(spectrum: &[Complex64], n: usize) -> Vec<f64> {
    Fft::new(n).inverse(spectrum)
}

/// Bin centre frequencies of an `n`-point real transform.
pub fn bin_frequencies(n: usize, sample_rate: f64) -> Vec<f64> {
    (0..=n / 2).map(|k| k as f64 * sample_rate / n as f64).collect()
}

/// Multiplies bin `k` by `exp(-i 2 pi k delay / n)`, a delay of `delay`
/// samples.
pub fn apply_delay(spectrum: &mut [Complex64], n: usize, delay: f64) {
    for (k, z) in spectrum.iter_mut().enumerate() {
        let phase = -2.0 * PI * k as f64 * delay / n as f64;
        *z *= Complex64::from_polar(1.0, phase);
    }
}

/// Averages `values` over a band of `1/fraction` octave centred on each bin.
/// The DC bin is left unchanged.
pub fn fractional_octave_smooth(values: &[f64], freqs: &[f64], fraction: f64) -> Vec<f64> {
    assert_eq!(values.len(), freqs.len());
    let half = 2f64.powf(0.5 / fraction);
    // Prefix sums give each band average in constant time.
    let mut prefix = vec![0.0; values.len() + 1];
    for (i, v) in values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    let mut out = values.to_vec();
    let mut lo = 0;
    let mut hi = 0;
    for k in 1..values.len() {
        let f = freqs[k];
        let (flo, fhi) = (f / half, f * half);
        while lo < k && freqs[lo] < flo {
            lo += 1;
        }
        while hi + 1 < values.len() && freqs[hi + 1] <= fhi {
            hi += 1;
        }
        let a = lo.max(1).min(k);
        let b = hi.max(k);
        out[k] = (prefix[b + 1] - prefix[a]) / (b + 1 - a) as f64;
    }
    out
}

/// Minimum-phase impulse response of length `taps` whose magnitude follows
/// `magnitude`, sampled on the bins of an `n`-point transform.
///
/// The real cepstrum is evaluated on a grid `oversample` times denser than
/// the input to keep cepstral aliasing small; the magnitude is linearly
/// interpolated onto that grid.
pub fn minimum_phase_fir(magnitude: &[f64], taps: usize, oversample: usize) -> Vec<f64> {
    let bins = magnitude.len();
    assert!(bins >= 2);
    let n = 2 * (bins - 1);
    let big = n * oversample.max(1);
    let fft = Fft::new(big);
    let floor = 1e-12;
    let log_mag: Vec<Complex64> = (0..fft.bins())
        .map(|k| {
            let pos = k as f64 / oversample.max(1) as f64;
            let i = (pos.floor() as usize).min(bins - 1);
            let frac = pos - i as f64;
            let m = if i + 1 < bins {
                magnitude[i] * (1.0 - frac) + magnitude[i + 1] * frac
            } else {
                magnitude[i]
            };
            Complex64::new(m.max(floor).ln(), 0.0)
        })
        .collect();
    let cep = fft.inverse(&log_mag);
    // Fold the cepstrum onto positive quefrencies.
    let mut folded = vec![0.0; big];
    folded[0] = cep[0];
    for q in 1..big / 2 {
        folded[q] = 2.0 * cep[q];
    }
    folded[big / 2] = cep[big / 2];
    let spec: Vec<Complex64> = fft.forward(&folded).into_iter().map(|z| z.exp()).collect();
    let ir = fft.inverse(&spec);
    ir[..taps.min(big)]
        .iter()
        .copied()
        .chain(std::iter::repeat(0.0))
        .take(taps)
        .collect()
}

/// Raised-cosine fade applied in place to the last `len` samples.
pub fn fade_out(x: &mut [f64], len: usize) {
    let n = x.len();
    let len = len.min(n);
    for i in 0..len {
        let t = (i as f64 + 1.0) / (len as f64 + 1.0);
        let w = 0.5 * (1.0 + (PI * t).cos());
        x[n - len + i] *= w;
    }
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn db(x: f64) -> f64 {
    20.0 * x.max(1e-300).log10()
}

pub fn next_pow2(n: usize) -> usize {
    n.max(2).next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let x: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let fft = Fft::new(64);
        let y = fft.inverse(&fft.forward(&x));
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn delay_moves_impulse() {
        let fft = Fft::new(32);
        let mut s = fft.forward(&[1.0]);
        apply_delay(&mut s, 32, 5.0);
        let y = fft.inverse(&s);
        for (i, v) in y.iter().enumerate() {
            let e = if i == 5 { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_keeps_constants() {
        let f = bin_frequencies(256, 48000.0);
        let v = vec![3.0; f.len()];
        for s in fractional_octave_smooth(&v, &f, 3.0) {
            assert!((s - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn minimum_phase_of_flat_magnitude_is_impulse() {
        let h = minimum_phase_fir(&vec![2.0; 129], 64, 8);
        assert!((h[0] - 2.0).abs() < 1e-9);
        assert!(h[1..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn minimum_phase_matches_target_magnitude() {
        // One-pole lowpass magnitude; its minimum-phase response is causal
        // and decays quickly.
        let n = 256;
        let mag: Vec<f64> = (0..=n / 2)
            .map(|k| {
                let w = 2.0 * PI * k as f64 / n as f64;
                let z = Complex64::from_polar(1.0, -w);
                (1.0 / (Complex64::new(1.0, 0.0) - z * 0.5)).norm()
            })
            .collect();
        // Expected impulse response 0.5^t. Without oversampling the
        // magnitude is used exactly; with it, interpolation adds a small
        // error.
        for (over, tol) in [(1, 1e-12), (16, 1e-4)] {
            let h = minimum_phase_fir(&mag, n, over);
            for (t, v) in h.iter().take(20).enumerate() {
                assert!((v - 0.5f64.powi(t as i32)).abs() < tol, "t={t}: {v}");
            }
        }
    }
}
