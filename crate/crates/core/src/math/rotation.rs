//! Rotation matrices for real spherical harmonics.
//!
//! Blocks are built degree by degree with the Ivanic-Ruedenberg recurrence,
//! starting from the degree-1 block, which is the Cartesian rotation matrix
//! permuted into `(y, z, x)` order. The resulting block-diagonal matrix `M`
//! satisfies `Y(R u) = M Y(u)`, so applying it to the coefficients of a sound
//! field rotates the field by `R`.

use num_complex::Complex64;

use crate::geometry::Mat3;
use crate::math::sh::n_channels;

/// Block-diagonal real SH rotation up to a given order.
#[derive(Debug, Clone)]
pub struct ShRotation {
    /// `blocks[n]` is `(2n+1) x (2n+1)`, row-major, indexed by `m + n`.
    blocks: Vec<Vec<f64>>,
}

impl ShRotation {
    pub fn new(order: usize, r: &Mat3) -> Self {
        let mut blocks = vec![vec![1.0]];
        if order >= 1 {
            let p = [1usize, 2, 0];
            let mut b1 = vec![0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    b1[i * 3 + j] = r[p[i]][p[j]];
                }
            }
            blocks.push(b1);
        }
        for l in 2..=order {
            let next = band(l, &blocks[1], &blocks[l - 1]);
            blocks.push(next);
        }
        ShRotation { blocks }
    }

    pub fn order(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Element `(m, m')` of the degree-`n` block.
    pub fn element(&self, n: usize, m: i64, mp: i64) -> f64 {
        let w = 2 * n + 1;
        let i = (m + n as i64) as usize;
        let j = (mp + n as i64) as usize;
        self.blocks[n][i * w + j]
    }

    /// Dense `(N+1)^2 x (N+1)^2` matrix, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let nch = n_channels(self.order());
        let mut out = vec![0.0; nch * nch];
        for (n, block) in self.blocks.iter().enumerate() {
            let w = 2 * n + 1;
            let base = n * n;
            for i in 0..w {
                for j in 0..w {
                    out[(base + i) * nch + base + j] = block[i * w + j];
                }
            }
        }
        out
    }

    pub fn apply_real(&self, coeffs: &[f64]) -> Vec<f64> {
        self.apply_generic(coeffs, 0.0)
    }

    pub fn apply_complex(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        self.apply_generic(coeffs, Complex64::new(0.0, 0.0))
    }

    fn apply_generic<T>(&self, coeffs: &[T], zero: T) -> Vec<T>
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        assert_eq!(coeffs.len(), n_channels(self.order()));
        let mut out = vec![zero; coeffs.len()];
        for (n, block) in self.blocks.iter().enumerate() {
            let w = 2 * n + 1;
            let base = n * n;
            for i in 0..w {
                let mut acc = zero;
                for j in 0..w {
                    acc = acc + coeffs[base + j] * block[i * w + j];
                }
                out[base + i] = acc;
            }
        }
        out
    }
}

fn centered(block: &[f64], l: usize, i: i64, j: i64) -> f64 {
    let w = 2 * l + 1;
    block[(i + l as i64) as usize * w + (j + l as i64) as usize]
}

fn band(l: usize, r1: &[f64], prev: &[f64]) -> Vec<f64> {
    let li = l as i64;
    let p = |i: i64, a: i64, b: i64| -> f64 {
        if b == li {
            centered(r1, 1, i, 1) * centered(prev, l - 1, a, li - 1)
                - centered(r1, 1, i, -1) * centered(prev, l - 1, a, -li + 1)
        } else if b == -li {
            centered(r1, 1, i, 1) * centered(prev, l - 1, a, -li + 1)
                + centered(r1, 1, i, -1) * centered(prev, l - 1, a, li - 1)
        } else {
            centered(r1, 1, i, 0) * centered(prev, l - 1, a, b)
        }
    };
    let w = 2 * l + 1;
    let mut out = vec![0.0; w * w];
    for m in -li..=li {
        for n in -li..=li {
            let d = if m == 0 { 1.0 } else { 0.0 };
            let denom = if n.abs() == li {
                (2 * li * (2 * li - 1)) as f64
            } else {
                ((li + n) * (li - n)) as f64
            };
            let am = m.abs() as f64;
            let lf = l as f64;
            let u = (((li + m) * (li - m)) as f64 / denom).sqrt();
            let v = 0.5 * ((1.0 + d) * (lf + am - 1.0) * (lf + am) / denom).sqrt() * (1.0 - 2.0 * d);
            let wc = -0.5 * ((lf - am - 1.0) * (lf - am) / denom).max(0.0).sqrt() * (1.0 - d);

            let mut val = 0.0;
            if u != 0.0 {
                val += u * p(0, m, n);
            }
            if v != 0.0 {
                let vv = if m == 0 {
                    p(1, 1, n) + p(-1, -1, n)
                } else if m > 0 {
                    let k: f64 = if m == 1 { 1.0 } else { 0.0 };
                    p(1, m - 1, n) * (1.0 + k).sqrt() - p(-1, -m + 1, n) * (1.0 - k)
                } else {
                    let k: f64 = if m == -1 { 1.0 } else { 0.0 };
                    p(1, m + 1, n) * (1.0 - k) + p(-1, -m - 1, n) * (1.0 + k).sqrt()
                };
                val += v * vv;
            }
            if wc != 0.0 {
                let ww = if m > 0 {
                    p(1, m + 1, n) + p(-1, -m - 1, n)
                } else {
                    p(1, m - 1, n) - p(-1, -m + 1, n)
                };
                val += wc * ww;
            }
            out[(m + li) as usize * w + (n + li) as usize] = val;
        }
    }
    out
}
