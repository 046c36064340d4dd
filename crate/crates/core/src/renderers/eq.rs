//! Global minimum-phase equalization of the ambisonic route.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::training_responses;
use crate::dsp::{fractional_octave_smooth, minimum_phase_fir, FreqAxis, Fft};
use crate::error::{invalid_arg, Result};
use crate::geometry::Vec3;
use crate::grids::SamplingGrid;
use crate::hrtf::HrtfSet;
use crate::linalg::CMat;

pub const EQ_CLAMP_DB: f64 = 12.0;

/// Fraction of an octave used for gain smoothing.
pub const EQ_SMOOTHING: f64 = 3.0;

/// Renderer-input floor below which the gain is clamped.
const RENDERED_FLOOR: f64 = 1e-12;

/// One minimum-phase filter applied to both ears.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqFilter {
    /// Smoothed, clamped linear gain per design bin.
    pub gain: Vec<f64>,
    pub fir: Vec<f64>,
}

impl EqFilter {
    /// Pass-through filter on `bins` bins.
    pub fn unity(bins: usize) -> Self {
        EqFilter {
            gain: vec![1.0; bins],
            fir: vec![1.0],
        }
    }

    /// Complex response of the FIR on the bins of an `n_fft` transform.
    pub fn spectrum(&self, n_fft: usize) -> Vec<Complex64> {
        Fft::new(n_fft).forward(&self.fir)
    }
}

/// Linear gain per bin from RMS magnitudes, smoothed then clamped.
pub fn eq_gains(truth_rms: &[f64], rendered_rms: &[f64], freqs: &[f64]) -> Vec<f64> {
    let clamp = 10f64.powf(EQ_CLAMP_DB / 20.0);
    let raw: Vec<f64> = truth_rms
        .iter()
        .zip(rendered_rms)
        .map(|(t, r)| if *r < RENDERED_FLOOR { clamp } else { t / r })
        .map(|g| g.clamp(1.0 / clamp, clamp))
        .collect();
    fractional_octave_smooth(&raw, freqs, EQ_SMOOTHING)
        .into_iter()
        .map(|g| g.clamp(1.0 / clamp, clamp))
        .collect()
}

/// Designs the equalizer from plane-wave renderings of `training_dirs`
/// through the unequalized renderer `bins` (`2 x L` per bin of `axis`).
pub fn design_eq_filter(
    grid: &SamplingGrid,
    bins: &[CMat],
    axis: FreqAxis,
    c: f64,
    hrtf: &HrtfSet,
    training_dirs: &[Vec3],
    eq_taps: usize,
) -> Result<EqFilter> {
    if bins.len() != axis.bins() {
        return Err(invalid_arg!("{} renderer bins for a {}-bin axis", bins.len(), axis.bins()));
    }
    if eq_taps == 0 || eq_taps > axis.n_fft {
        return Err(invalid_arg!("EQ tap count must be in 1..={}", axis.n_fft));
    }
    if training_dirs.is_empty() {
        return Err(invalid_arg!("no training directions"));
    }
    let (left, right) = hrtf.pairs_at(training_dirs);
    let fft = Fft::new(axis.n_fft);
    let truth: [Vec<Vec<Complex64>>; 2] = [
        left.iter().map(|h| fft.forward(h)).collect(),
        right.iter().map(|h| fft.forward(h)).collect(),
    ];
    let mut truth_rms = vec![0.0; axis.bins()];
    let mut rendered_rms = vec![0.0; axis.bins()];
    let count = 2.0 * training_dirs.len() as f64;
    for k in 0..axis.bins() {
        let p = training_responses(grid, training_dirs, axis.omega(k), c);
        let r = &bins[k] * &p;
        let (mut t2, mut r2) = (0.0, 0.0);
        for ear in 0..2 {
            for q in 0..training_dirs.len() {
                t2 += truth[ear][q][k].norm_sqr();
                r2 += r[(ear, q)].norm_sqr();
            }
        }
        truth_rms[k] = (t2 / count).sqrt();
        rendered_rms[k] = (r2 / count).sqrt();
    }
    Ok(eq_from_rms(&truth_rms, &rendered_rms, axis, eq_taps))
}

fn eq_from_rms(truth_rms: &[f64], rendered_rms: &[f64], axis: FreqAxis, eq_taps: usize) -> EqFilter {
    let gain = eq_gains(truth_rms, rendered_rms, &axis.freqs());
    let fir = minimum_phase_fir(&gain, eq_taps, 8);
    EqFilter { gain, fir }
}
