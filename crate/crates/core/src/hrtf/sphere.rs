//! Rigid-sphere head model.
//!
//! A plane wave arriving from `u` onto a rigid sphere of radius `a` gives, at
//! a surface point `e`, relative to the free-field pressure at the centre,
//!
//! `H = sum_n (2n+1) i^n P_n(u.e) (-i) / ((ka)^2 h_n'(ka))`
//!
//! with the outgoing Hankel function `h_n = j_n - i y_n` for `e^{+i omega t}`.

use num_complex::Complex64;

use crate::math::bessel::{sph_derivative, sph_jn, sph_yn};

/// Truncation threshold on the ratio of a term to the running sum.
const TERM_RATIO: f64 = 1e-10;

/// Series coefficients of the surface response at one `ka`.
#[derive(Debug, Clone)]
pub struct SphereSeries {
    coeffs: Vec<Complex64>,
}

impl SphereSeries {
    pub fn new(ka: f64) -> Self {
        if ka == 0.0 {
            return SphereSeries {
                coeffs: vec![Complex64::new(1.0, 0.0)],
            };
        }
        let nmax = (ka + 20.0 + 4.0 * ka.cbrt()) as usize;
        let j = sph_jn(nmax + 1, ka);
        let y = sph_yn(nmax + 1, ka);
        let jp = sph_derivative(&j, ka);
        let yp = sph_derivative(&y, ka);
        let i = Complex64::new(0.0, 1.0);
        let mut coeffs = Vec::new();
        let mut bound = 0.0;
        for n in 0..=nmax {
            let hp = Complex64::new(jp[n], -yp[n]);
            let c = if hp.norm().is_finite() {
                i.powi(n as i32) * (2 * n + 1) as f64 * (-i) / (hp * (ka * ka))
            } else {
                Complex64::new(0.0, 0.0)
            };
            bound += c.norm();
            coeffs.push(c);
            if n as f64 > ka && c.norm() < TERM_RATIO * bound {
                break;
            }
        }
        SphereSeries { coeffs }
    }

    pub fn terms(&self) -> usize {
        self.coeffs.len()
    }

    /// Response at `cos_theta = u . e`.
    pub fn eval(&self, cos_theta: f64) -> Complex64 {
        let x = cos_theta.clamp(-1.0, 1.0);
        let mut p_prev = 1.0;
        let mut p = x;
        let mut sum = self.coeffs[0];
        for (n, c) in self.coeffs.iter().enumerate().skip(1) {
            if n > 1 {
                let nf = n as f64;
                let next = ((2.0 * nf - 1.0) * x * p - (nf - 1.0) * p_prev) / nf;
                p_prev = p;
                p = next;
            }
            sum += c * p;
        }
        sum
    }
}
