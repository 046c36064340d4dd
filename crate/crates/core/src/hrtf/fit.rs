//! Spherical-harmonic representations of an HRTF set.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::HrtfSet;
use crate::dsp::FreqAxis;
use crate::error::{invalid_arg, Error, Result};
use crate::math::sh::n_channels;
use crate::sht::sh_basis;

/// Smallest admissible `sigma_min / sigma_max` of the direction basis.
const RANK_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitKind {
    Ls,
    Magls,
}

/// SH coefficients of both ears on the bins of one transform.
#[derive(Debug, Clone, PartialEq)]
pub struct HrtfSh {
    pub order: usize,
    pub axis: FreqAxis,
    /// `coeffs[bin][ear][channel]`.
    pub coeffs: Vec<[Vec<Complex64>; 2]>,
    pub fit_kind: Vec<FitKind>,
    /// `None` for a plain least-squares fit.
    pub transition_hz: Option<f64>,
}

impl HrtfSh {
    pub fn channels(&self) -> usize {
        n_channels(self.order)
    }

    /// Re-synthesised response of `ear` at bin `k` for unit direction `dir`.
    pub fn eval(&self, k: usize, ear: usize, dir: crate::geometry::Vec3) -> Complex64 {
        let y = crate::math::sh::real_sh(self.order, dir);
        self.coeffs[k][ear].iter().zip(&y).map(|(c, y)| c * y).sum()
    }
}

/// Default MagLS transition: `N c / (2 pi 0.085 m)`.
pub fn default_transition(order: usize, c: f64) -> f64 {
    order as f64 * c / (2.0 * std::f64::consts::PI * 0.085)
}

/// Real pseudo-inverse of the `Q x (N+1)^2` basis, rejecting ill-posed sets.
fn basis_pinv(set: &HrtfSet, order: usize) -> Result<Mat<f64>> {
    let nch = n_channels(order);
    if set.len() < nch {
        return Err(invalid_arg!(
            "order {order} needs at least {nch} directions, the set has {}",
            set.len()
        ));
    }
    let y = sh_basis(order, &set.directions);
    let svd = y
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let s: Vec<f64> = (0..nch).map(|i| svd.S()[i]).collect();
    let smax = s.iter().fold(0.0f64, |a, &b| a.max(b));
    let smin = s.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if !(smin > RANK_GUARD * smax) {
        return Err(Error::RankDeficient(format!(
            "direction basis of order {order} has condition {:.3e}",
            smax / smin
        )));
    }
    let mut v = svd.V().to_owned();
    for (j, sj) in s.iter().enumerate() {
        for i in 0..nch {
            v[(i, j)] /= sj;
        }
    }
    Ok(&v * svd.U().transpose())
}

fn apply(pinv: &Mat<f64>, target: &[Complex64]) -> Vec<Complex64> {
    (0..pinv.nrows())
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (q, t) in target.iter().enumerate() {
                acc += t * pinv[(i, q)];
            }
            acc
        })
        .collect()
}

fn resynthesize(y: &Mat<f64>, coeffs: &[Complex64]) -> Vec<Complex64> {
    (0..y.nrows())
        .map(|q| coeffs.iter().enumerate().map(|(j, c)| c * y[(q, j)]).sum())
        .collect()
}

/// Per-bin least-squares coefficients on the measurement directions.
pub fn fit_ls(set: &HrtfSet, order: usize, n_fft: usize) -> Result<HrtfSh> {
    fit(set, order, n_fft, None)
}

/// LS below `transition_hz`; above, ascending in frequency, the target phase
/// at each direction is the phase re-synthesised from the previous bin.
pub fn fit_magls(set: &HrtfSet, order: usize, transition_hz: f64, n_fft: usize) -> Result<HrtfSh> {
    if !(transition_hz > 0.0) {
        return Err(invalid_arg!("transition frequency must be positive"));
    }
    fit(set, order, n_fft, Some(transition_hz))
}

fn fit(set: &HrtfSet, order: usize, n_fft: usize, transition: Option<f64>) -> Result<HrtfSh> {
    set.validate()?;
    let pinv = basis_pinv(set, order)?;
    let y = sh_basis(order, &set.directions);
    let spectra = set.spectra(n_fft)?;
    let axis = FreqAxis::new(set.sample_rate, n_fft);
    let mut coeffs: Vec<[Vec<Complex64>; 2]> = Vec::with_capacity(axis.bins());
    let mut kinds = Vec::with_capacity(axis.bins());
    let q = set.len();
    let mut target = vec![Complex64::new(0.0, 0.0); q];
    for k in 0..axis.bins() {
        let magls = transition.is_some_and(|ft| axis.freq(k) >= ft) && k > 0;
        let mut pair: [Vec<Complex64>; 2] = [Vec::new(), Vec::new()];
        for ear in 0..2 {
            let h = &spectra[ear];
            if magls {
                let prev = resynthesize(&y, &coeffs[k - 1][ear]);
                for (d, t) in target.iter_mut().enumerate() {
                    *t = Complex64::from_polar(h[d][k].norm(), prev[d].arg());
                }
            } else {
                for (d, t) in target.iter_mut().enumerate() {
                    *t = h[d][k];
                }
            }
            pair[ear] = apply(&pinv, &target);
        }
        coeffs.push(pair);
        kinds.push(if magls { FitKind::Magls } else { FitKind::Ls });
    }
    Ok(HrtfSh {
        order,
        axis,
        coeffs,
        fit_kind: kinds,
        transition_hz: transition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::sphere_design;
    use crate::hrtf::{sphere_hrtf, DEFAULT_EAR_AZIMUTHS, DEFAULT_HEAD_RADIUS};

    fn model_set(q: usize) -> HrtfSet {
        let dirs = sphere_design(q).unwrap();
        sphere_hrtf(DEFAULT_HEAD_RADIUS, DEFAULT_EAR_AZIMUTHS, dirs, 48000.0, 256, 343.0).unwrap()
    }

    #[test]
    fn transition_above_nyquist_equals_ls() {
        let set = model_set(64);
        let a = fit_ls(&set, 4, 256).unwrap();
        let b = fit_magls(&set, 4, 30000.0, 256).unwrap();
        assert_eq!(a.coeffs, b.coeffs);
        assert!(b.fit_kind.iter().all(|k| *k == FitKind::Ls));
    }

    #[test]
    fn low_band_is_identical() {
        let set = model_set(64);
        let a = fit_ls(&set, 4, 256).unwrap();
        let b = fit_magls(&set, 4, 3000.0, 256).unwrap();
        for k in 0..a.axis.bins() {
            if a.axis.freq(k) < 3000.0 {
                assert_eq!(a.coeffs[k], b.coeffs[k]);
            } else {
                assert_eq!(b.fit_kind[k], FitKind::Magls);
            }
        }
    }

    #[test]
    fn clustered_directions_are_rejected() {
        let mut set = model_set(36);
        for (i, d) in set.directions.iter_mut().enumerate() {
            let t = 0.01 * i as f64;
            *d = [t.cos(), t.sin(), 0.0];
        }
        assert!(matches!(fit_ls(&set, 3, 256), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn too_few_directions_is_an_argument_error() {
        let set = model_set(16);
        assert!(matches!(fit_ls(&set, 4, 256), Err(Error::InvalidArgument(_))));
    }
}
