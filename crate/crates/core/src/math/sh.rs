//! Real spherical harmonics, ACN channel order, orthonormal normalisation
//! (`Y_00 = 1/sqrt(4 pi)`), no Condon-Shortley phase.
//!
//! Values are produced from the Cartesian recurrence for regular solid
//! harmonics `S_nm(x) = |x|^n Y_nm(x/|x|)`. The recurrence only involves
//! polynomials in `x, y, z`, so carrying forward-mode derivatives through it
//! yields exact Cartesian gradients without any pole singularity.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use crate::geometry::Vec3;

/// Number of channels of an order-`order` representation, `(N+1)^2`.
pub const fn n_channels(order: usize) -> usize {
    (order + 1) * (order + 1)
}

/// ACN channel index of degree `n`, order `m` (`-n <= m <= n`).
pub const fn acn(n: usize, m: i64) -> usize {
    ((n * n + n) as i64 + m) as usize
}

/// Inverse of [`acn`].
pub fn degree_order(index: usize) -> (usize, i64) {
    let n = (index as f64).sqrt() as usize;
    let n = if (n + 1) * (n + 1) <= index { n + 1 } else { n };
    (n, index as i64 - (n * n + n) as i64)
}

/// Degree of every ACN channel up to `order`.
pub fn channel_degrees(order: usize) -> Vec<usize> {
    (0..=order).flat_map(|n| std::iter::repeat_n(n, 2 * n + 1)).collect()
}

trait Poly: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn scale(self, s: f64) -> Self;
    fn constant(c: f64) -> Self;
}

impl Poly for f64 {
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn constant(c: f64) -> Self {
        c
    }
}

/// Value plus gradient with respect to `(x, y, z)`.
#[derive(Clone, Copy, Debug)]
struct Dual {
    v: f64,
    d: Vec3,
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]],
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2]],
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
                self.d[2] * o.v + self.v * o.d[2],
            ],
        }
    }
}

impl Poly for Dual {
    fn scale(self, s: f64) -> Self {
        Dual {
            v: self.v * s,
            d: [self.d[0] * s, self.d[1] * s, self.d[2] * s],
        }
    }
    fn constant(c: f64) -> Self {
        Dual {
            v: c,
            d: [0.0; 3],
        }
    }
}

/// Solid harmonics `S_nm(x)` for all channels up to `order`, written into
/// `out` in ACN order.
fn solid_harmonics<T: Poly>(order: usize, x: T, y: T, z: T, out: &mut [T]) {
    let nch = n_channels(order);
    assert!(out.len() >= nch);
    let r2 = x * x + y * y + z * z;
    let sqrt2 = std::f64::consts::SQRT_2;

    // (x + iy)^m
    let mut cm = T::constant(1.0);
    let mut sm = T::constant(0.0);
    // Normalised sectoral constant for Q_m^m.
    let mut qmm = 1.0 / (4.0 * PI).sqrt();

    for m in 0..=order {
        if m > 0 {
            let c_new = x * cm - y * sm;
            let s_new = x * sm + y * cm;
            cm = c_new;
            sm = s_new;
            qmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        }
        // Q_l^m for l = m, m+1, ...; kept as a two-term window.
        let mut q_lm2 = T::constant(0.0);
        let mut q_lm1 = T::constant(qmm);
        for l in m..=order {
            let q = if l == m {
                q_lm1
            } else if l == m + 1 {
                z.scale(((2 * m + 3) as f64).sqrt()) * q_lm1
            } else {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) * (2.0 * lf + 1.0)
                    / ((2.0 * lf - 3.0) * (lf * lf - mf * mf)))
                    .sqrt();
                z.scale(a) * q_lm1 - (r2 * q_lm2).scale(b)
            };
            if l > m {
                q_lm2 = q_lm1;
                q_lm1 = q;
            }
            if m == 0 {
                out[acn(l, 0)] = q;
            } else {
                out[acn(l, m as i64)] = (q * cm).scale(sqrt2);
                out[acn(l, -(m as i64))] = (q * sm).scale(sqrt2);
            }
        }
    }
}

/// Real SH values `Y_nm(dir)` up to `order`. `dir` must be a unit vector.
pub fn real_sh(order: usize, dir: Vec3) -> Vec<f64> {
    let mut out = vec![0.0; n_channels(order)];
    real_sh_into(order, dir, &mut out);
    out
}

pub fn real_sh_into(order: usize, dir: Vec3, out: &mut [f64]) {
    solid_harmonics(order, dir[0], dir[1], dir[2], out);
}

/// Solid harmonics `S_nm(x)` and their Cartesian gradients at `x`.
///
/// At a unit vector `S_nm = Y_nm`, and since `S_nm` is homogeneous of degree
/// `n`, `grad S_nm = n Y_nm x + grad_tangential Y_nm` there.
pub fn solid_sh_with_gradient(order: usize, x: Vec3) -> (Vec<f64>, Vec<Vec3>) {
    let nch = n_channels(order);
    let mut out = vec![Dual::constant(0.0); nch];
    let var = |i: usize| {
        let mut d = [0.0; 3];
        d[i] = 1.0;
        Dual { v: x[i], d }
    };
    solid_harmonics(order, var(0), var(1), var(2), &mut out);
    (
        out.iter().map(|q| q.v).collect(),
        out.iter().map(|q| q.d).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{from_spherical, normalize};

    /// Closed forms of the first few real harmonics.
    fn reference(dir: Vec3) -> Vec<f64> {
        let [x, y, z] = dir;
        let c0 = 1.0 / (4.0 * PI).sqrt();
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        let c2 = (15.0 / (4.0 * PI)).sqrt();
        let c20 = (5.0 / (16.0 * PI)).sqrt();
        vec![
            c0,
            c1 * y,
            c1 * z,
            c1 * x,
            c2 * x * y,
            c2 * y * z,
            c20 * (3.0 * z * z - 1.0),
            c2 * x * z,
            0.5 * c2 * (x * x - y * y),
        ]
    }

    #[test]
    fn acn_round_trip() {
        for i in 0..400 {
            let (n, m) = degree_order(i);
            assert_eq!(acn(n, m), i);
            assert!(m.unsigned_abs() as usize <= n);
        }
        assert_eq!(channel_degrees(2), vec![0, 1, 1, 1, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn low_orders_match_closed_form() {
        for &(az, el) in &[(0.3, 0.2), (2.0, -1.1), (-2.5, 1.4), (0.0, std::f64::consts::FRAC_PI_2)] {
            let d = from_spherical(az, el);
            let y = real_sh(2, d);
            for (a, b) in y.iter().zip(reference(d)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_mode() {
        let y = real_sh(0, [0.0, 0.6, 0.8]);
        assert!((y[0] - 0.28209479177387814).abs() < 1e-15);
    }

    #[test]
    fn antipodal_parity() {
        for &d in &[[0.48, 0.6, 0.64], [0.0, 0.0, 1.0], [-0.7, 0.1, 0.7071]] {
            let d = normalize(d);
            let a = real_sh(8, d);
            let b = real_sh(8, [-d[0], -d[1], -d[2]]);
            for (i, (p, q)) in a.iter().zip(&b).enumerate() {
                let (n, _) = degree_order(i);
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((q - sign * p).abs() < 1e-13, "channel {i}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let x = [0.031, -0.047, 0.052];
        let (_, grad) = solid_sh_with_gradient(12, x);
        let h = 1e-7;
        for axis in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[axis] += h;
            xm[axis] -= h;
            let (sp, _) = solid_sh_with_gradient(12, xp);
            let (sm, _) = solid_sh_with_gradient(12, xm);
            for i in 0..n_channels(12) {
                let fd = (sp[i] - sm[i]) / (2.0 * h);
                let scale = grad[i].iter().map(|g| g.abs()).fold(1e-12, f64::max);
                assert!((fd - grad[i][axis]).abs() < 1e-6 * scale, "channel {i} axis {axis}");
            }
        }
    }

    #[test]
    fn gradient_regular_at_pole() {
        // The +z pole is where angle-based formulas break down.
        let (vals, grad) = solid_sh_with_gradient(6, [0.0, 0.0, 1.0]);
        for (i, g) in grad.iter().enumerate() {
            assert!(g.iter().all(|v| v.is_finite()));
            let (n, _) = degree_order(i);
            // Radial component equals n * Y by homogeneity.
            assert!((g[2] - n as f64 * vals[i]).abs() < 1e-12);
        }
    }
}
