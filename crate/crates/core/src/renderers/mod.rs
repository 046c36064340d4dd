//! Binaural renderer design.
//!
//! Both routes produce a `2 x L` complex matrix per frequency bin that maps
//! node observations (pressure, or cardioid combinations on surface grids)
//! to the two ear signals, and an FIR bank realising those matrices.

mod ambisonic;
mod container;
mod direct;
mod eq;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use ambisonic::{
    binaural_decode, build_ambisonic, decode_matrices, design_ambisonic, renderer_decomposition, rotate_sh,
    rotated_renderer,
    AmbisonicOptions,
};
pub use container::{load_renderer, renderer_from_bytes, renderer_to_bytes, save_renderer, RENDERER_FORMAT_VERSION};
pub use direct::{build_direct, design_direct, direct_ls_bins, relative_residual, DirectOptions};
pub use eq::{design_eq_filter, eq_gains, EqFilter, EQ_CLAMP_DB};

use crate::dsp::{apply_delay, energy, fade_out, FreqAxis, Fft};
use crate::error::{invalid_arg, Error, Result};
use crate::fields::cardioid_combine_or_dc;
use crate::geometry::{dot, Vec3};
use crate::grids::SamplingGrid;
use crate::linalg::CMat;
use crate::sht::RegProfile;

/// Largest admissible share of FIR energy in the tail window.
pub const TIME_ALIASING_LIMIT: f64 = 1e-4;

/// Fraction of the taps covered by the tail window.
pub const TAIL_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RendererKind {
    Ambisonic,
    Direct,
}

/// Design parameters recorded with a renderer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RendererMeta {
    pub kind: RendererKind,
    pub grid_fingerprint: String,
    pub grid_family: String,
    pub grid_nodes: usize,
    pub grid_size_m: f64,
    pub hrtf_fingerprint: String,
    /// SH order of the ambisonic route.
    pub order: Option<usize>,
    pub sample_rate: f64,
    pub taps: usize,
    pub latency_samples: usize,
    pub speed_of_sound: f64,
    pub reg: RegProfile,
    pub transition_hz: Option<f64>,
    pub training_directions: usize,
    pub eq_taps: Option<usize>,
    /// Bank-wide tail-energy share measured when the FIR bank was built.
    pub time_aliasing: f64,
    /// Free-form creation note; not part of any fingerprint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<String>,
}

/// FIR filters for two ears and `inputs` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FirBank {
    pub inputs: usize,
    pub taps: usize,
    /// `[ear][input]` flattened, `taps` samples each.
    pub data: Vec<f64>,
}

impl FirBank {
    pub fn zeros(inputs: usize, taps: usize) -> Self {
        FirBank {
            inputs,
            taps,
            data: vec![0.0; 2 * inputs * taps],
        }
    }

    pub fn filter(&self, ear: usize, input: usize) -> &[f64] {
        let start = (ear * self.inputs + input) * self.taps;
        &self.data[start..start + self.taps]
    }

    pub fn filter_mut(&mut self, ear: usize, input: usize) -> &mut [f64] {
        let start = (ear * self.inputs + input) * self.taps;
        &mut self.data[start..start + self.taps]
    }
}

/// A designed renderer with its per-bin matrices and FIR realisation.
#[derive(Debug, Clone)]
pub struct RendererMatrix {
    pub meta: RendererMeta,
    pub axis: FreqAxis,
    /// `2 x L` per bin, as realised by `fir` with the latency removed.
    pub bins: Vec<CMat>,
    pub fir: FirBank,
    /// Ambisonic route: `2 x (N+1)^2` decode (EQ included) per bin.
    pub decode: Option<Vec<CMat>>,
    pub eq: Option<EqFilter>,
}

impl RendererMatrix {
    pub fn inputs(&self) -> usize {
        self.fir.inputs
    }

    pub fn latency(&self) -> usize {
        self.meta.latency_samples
    }

    /// Binaural transfer pair for a unit plane wave from `u` at bin `k`,
    /// without node predelay or latency.
    pub fn plane_wave_response(&self, grid: &SamplingGrid, u: Vec3, k: usize) -> [Complex64; 2] {
        let p = training_responses(grid, &[u], self.axis.omega(k), self.meta.speed_of_sound);
        let w = &self.bins[k];
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for (ear, o) in out.iter_mut().enumerate() {
            for l in 0..w.ncols() {
                *o += w[(ear, l)] * p[(l, 0)];
            }
        }
        out
    }
}

/// `L x Q` node observations of unit plane waves from `dirs` at angular
/// frequency `omega`, referenced to the origin. Surface grids see the
/// cardioid combination.
pub fn training_responses(grid: &SamplingGrid, dirs: &[Vec3], omega: f64, c: f64) -> CMat {
    let k = omega / c;
    let normals = grid.normals();
    Mat::from_fn(grid.len(), dirs.len(), |l, q| {
        let x = grid.nodes()[l];
        let u = dirs[q];
        let p = Complex64::from_polar(1.0, k * dot(u, x));
        match normals {
            Some(n) => {
                let g = Complex64::new(0.0, k * dot(n[l], u)) * p;
                cardioid_combine_or_dc(p, g, omega, c)
            }
            None => p,
        }
    })
}

/// Realises per-bin `2 x L` matrices as FIR filters of `axis.n_fft` taps.
///
/// Each entry is delayed by `latency` samples, transformed back, and the
/// last tenth of the taps is faded out with a raised cosine. The share of
/// bank energy inside that tail before fading is the time-aliasing metric.
/// Returns the bank, the metric and the bins the bank realises (latency
/// removed).
pub fn renderer_to_fir(bins: &[CMat], axis: FreqAxis, latency: usize) -> Result<(FirBank, f64, Vec<CMat>)> {
    let taps = axis.n_fft;
    if bins.len() != axis.bins() {
        return Err(invalid_arg!("{} bins given for a {taps}-point transform", bins.len()));
    }
    if latency >= taps {
        return Err(invalid_arg!("latency {latency} must be below the tap count {taps}"));
    }
    let inputs = bins[0].ncols();
    let tail = ((taps as f64 * TAIL_FRACTION).round() as usize).max(1);
    let fft = Fft::new(taps);
    let mut bank = FirBank::zeros(inputs, taps);
    let mut spec = vec![Complex64::new(0.0, 0.0); axis.bins()];
    let (mut tail_energy, mut total_energy) = (0.0, 0.0);
    for ear in 0..2 {
        for l in 0..inputs {
            for (k, s) in spec.iter_mut().enumerate() {
                *s = bins[k][(ear, l)];
            }
            apply_delay(&mut spec, taps, latency as f64);
            let h = bank.filter_mut(ear, l);
            fft.inverse_into(&mut spec, h);
            total_energy += energy(h);
            tail_energy += energy(&h[taps - tail..]);
            fade_out(h, tail);
        }
    }
    let metric = if total_energy > 0.0 { tail_energy / total_energy } else { 0.0 };
    if metric > TIME_ALIASING_LIMIT {
        return Err(Error::TimeAliasing {
            metric,
            limit: TIME_ALIASING_LIMIT,
        });
    }
    let realized = fir_spectra(&bank, axis, latency);
    Ok((bank, metric, realized))
}

/// Per-bin `2 x L` spectra of an FIR bank with `latency` removed.
pub fn fir_spectra(bank: &FirBank, axis: FreqAxis, latency: usize) -> Vec<CMat> {
    let fft = Fft::new(axis.n_fft);
    let mut out = vec![CMat::zeros(2, bank.inputs); axis.bins()];
    for ear in 0..2 {
        for l in 0..bank.inputs {
            let mut s = fft.forward(bank.filter(ear, l));
            apply_delay(&mut s, axis.n_fft, -(latency as f64));
            for (k, v) in s.into_iter().enumerate() {
                out[k][(ear, l)] = v;
            }
        }
    }
    out
}

/// Checks that a tap count is usable as a transform size.
pub(crate) fn check_taps(taps: usize) -> Result<()> {
    if taps < 16 || taps % 2 != 0 {
        return Err(invalid_arg!("tap count must be even and at least 16, got {taps}"));
    }
    Ok(())
}
