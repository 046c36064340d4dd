//! Dense complex linear algebra used by the design stages.
//!
//! Regularization clamps the singular spectrum from below: every singular
//! value under `sigma_max * 10^(-range_db / 20)` is raised to that floor
//! before inversion.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::householder::{
    apply_block_householder_sequence_transpose_on_the_left_in_place_scratch,
    apply_block_householder_sequence_transpose_on_the_left_in_place_with_conj,
};
use faer::{Conj, Mat, MatRef, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

/// Singular-value floor implied by a dynamic-range limit in dB.
pub fn sigma_floor(sigma_max: f64, range_db: f64) -> f64 {
    sigma_max * 10f64.powf(-range_db / 20.0)
}

/// Result of a floor-regularized inversion.
#[derive(Debug, Clone)]
pub struct RegInverse {
    pub inverse: CMat,
    pub singular_values: Vec<f64>,
    pub floor: f64,
}

impl RegInverse {
    /// Operator-norm bound of the inverse, `1 / max(sigma_min, floor)`.
    pub fn norm_bound(&self) -> f64 {
        let smallest = self
            .singular_values
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        1.0 / smallest.max(self.floor)
    }
}

/// Floor-regularized pseudo-inverse `V diag(1/max(s, floor)) U^H`.
pub fn reg_pinv(a: MatRef<'_, Complex64>, range_db: f64) -> Result<RegInverse> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Ok(RegInverse {
            inverse: Mat::zeros(n, m),
            singular_values: Vec::new(),
            floor: 0.0,
        });
    }
    check_finite(a)?;
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let s: Vec<f64> = (0..m.min(n)).map(|i| svd.S()[i].re).collect();
    let smax = s.iter().fold(0.0f64, |a, &b| a.max(b));
    let floor = sigma_floor(smax, range_db);
    if smax == 0.0 {
        return Ok(RegInverse {
            inverse: Mat::zeros(n, m),
            singular_values: s,
            floor,
        });
    }
    let u = svd.U();
    let v = svd.V();
    let mut vs = v.to_owned();
    for (j, &sj) in s.iter().enumerate() {
        let inv = 1.0 / sj.max(floor);
        for i in 0..n {
            vs[(i, j)] *= inv;
        }
    }
    let inverse = &vs * u.adjoint();
    Ok(RegInverse {
        inverse,
        singular_values: s,
        floor,
    })
}

/// Singular values and floor of a regularized solve.
#[derive(Debug, Clone)]
pub struct RegSpectrum {
    pub singular_values: Vec<f64>,
    pub floor: f64,
}

/// Solves `min ||W P - H||_F` with the singular values of `P` floored.
///
/// `P` is `L x Q` and `H` is `E x Q`; the result is `E x L`. When `Q` is much
/// larger than `L` the problem is first reduced with a QR factorization of
/// `P^H`, whose triangular factor has the same singular values.
pub fn reg_solve_right(
    h: MatRef<'_, Complex64>,
    p: MatRef<'_, Complex64>,
    range_db: f64,
) -> Result<(CMat, RegSpectrum)> {
    assert_eq!(h.ncols(), p.ncols());
    let (e, l, q) = (h.nrows(), p.nrows(), p.ncols());
    if l == 0 || q == 0 {
        let spec = RegSpectrum {
            singular_values: Vec::new(),
            floor: 0.0,
        };
        return Ok((Mat::zeros(e, l), spec));
    }
    check_finite(p)?;
    // With P^H = Q R, P = R^H Q^H and W = (H Q) pinv(R^H).
    let (a, rhs) = if q > 2 * l {
        let qr = p.adjoint().to_owned().qr();
        let mut hh = h.adjoint().to_owned();
        let block = qr.Q_coeff().nrows();
        let mut buf = MemBuffer::new(apply_block_householder_sequence_transpose_on_the_left_in_place_scratch::<
            Complex64,
        >(q, block, e));
        apply_block_householder_sequence_transpose_on_the_left_in_place_with_conj(
            qr.Q_basis(),
            qr.Q_coeff(),
            Conj::Yes,
            hh.as_mut(),
            Par::Seq,
            MemStack::new(&mut buf),
        );
        let hq = hh.get(0..l, ..).adjoint().to_owned();
        (qr.thin_R().adjoint().to_owned(), hq)
    } else {
        (p.to_owned(), h.to_owned())
    };
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let s: Vec<f64> = (0..a.nrows().min(a.ncols())).map(|i| svd.S()[i].re).collect();
    let smax = s.iter().fold(0.0f64, |a, &b| a.max(b));
    let floor = sigma_floor(smax, range_db);
    let spec = RegSpectrum {
        singular_values: s,
        floor,
    };
    if smax == 0.0 {
        return Ok((Mat::zeros(e, l), spec));
    }
    let mut hv = &rhs * svd.V();
    for (j, &sj) in spec.singular_values.iter().enumerate() {
        let inv = 1.0 / sj.max(floor);
        for i in 0..e {
            hv[(i, j)] *= inv;
        }
    }
    Ok((&hv * svd.U().adjoint(), spec))
}

/// Largest over smallest singular value.
pub fn condition_number(a: MatRef<'_, Complex64>) -> Result<f64> {
    check_finite(a)?;
    let s = a
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let smax = s.iter().fold(0.0f64, |a, &b| a.max(b));
    let smin = s.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(if smin == 0.0 { f64::INFINITY } else { smax / smin })
}

/// Largest singular value.
pub fn spectral_norm(a: MatRef<'_, Complex64>) -> Result<f64> {
    let s = a
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    Ok(s.iter().fold(0.0f64, |a, &b| a.max(b)))
}

fn check_finite(a: MatRef<'_, Complex64>) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Numerical(format!("non-finite matrix entry at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_matrix(m: usize, n: usize, seed: u64) -> CMat {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        Mat::from_fn(m, n, |_, _| c(next(), next()))
    }

    #[test]
    fn identity_inverts_to_identity() {
        let id = CMat::identity(5, 5);
        let inv = reg_pinv(id.as_ref(), 20.0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((inv.inverse[(i, j)] - c(e, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn floor_raises_small_singular_values() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 0)] = c(1.0, 0.0);
        a[(1, 1)] = c(1e-6, 0.0);
        let inv = reg_pinv(a.as_ref(), 40.0).unwrap();
        assert!((inv.floor - 1e-2).abs() < 1e-15);
        assert!((inv.inverse[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!((inv.inverse[(1, 1)].re - 100.0).abs() < 1e-9);
    }

    #[test]
    fn unregularized_pinv_of_tall_matrix_is_left_inverse() {
        let a = test_matrix(30, 12, 7);
        let inv = reg_pinv(a.as_ref(), 300.0).unwrap();
        let prod = &inv.inverse * &a;
        for i in 0..12 {
            for j in 0..12 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - c(e, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn qr_path_matches_direct_svd() {
        let p = test_matrix(6, 40, 3);
        let h = test_matrix(2, 40, 9);
        let (w_qr, inv_qr) = reg_solve_right(h.as_ref(), p.as_ref(), 10.0).unwrap();
        let (w_plain, _) = reg_solve_right(h.get(.., 0..12), p.get(.., 0..12), 10.0).unwrap();
        let direct12 = reg_pinv(p.get(.., 0..12), 10.0).unwrap();
        let w12 = h.get(.., 0..12) * &direct12.inverse;
        assert!((&w_plain - &w12).norm_l2() < 1e-12);
        let direct = reg_pinv(p.as_ref(), 10.0).unwrap();
        let w_direct = &h * &direct.inverse;
        for i in 0..2 {
            for j in 0..6 {
                assert!((w_qr[(i, j)] - w_direct[(i, j)]).norm() < 1e-12);
            }
        }
        assert!((inv_qr.floor - direct.floor).abs() < 1e-12);
    }

    #[test]
    fn norm_bound_holds() {
        let a = test_matrix(9, 9, 11);
        for db in [0.0, 10.0, 40.0] {
            let inv = reg_pinv(a.as_ref(), db).unwrap();
            let norm = spectral_norm(inv.inverse.as_ref()).unwrap();
            assert!(norm <= 1.0 / inv.floor * (1.0 + 1e-12));
            assert!(norm <= inv.norm_bound() * (1.0 + 1e-12));
        }
    }
}
