//! Spherical-harmonic analysis of node signals.
//!
//! The interior field is expanded as `p(x) = sum a_nm j_n(k|x|) Y_nm(x/|x|)`.
//! A plane wave arriving from `u` has `a_nm = 4 pi i^n Y_nm(u)` under the
//! crate's sign convention. The mode-response matrix `G` maps coefficients to
//! node observations: pressure for volumetric grids, the cardioid combination
//! `p + c/(i omega) dp/dn` for surface grids. Its floor-regularized inverse
//! is the decomposition matrix.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::FreqAxis;
use crate::error::{invalid_arg, invalid_data, Result};
use crate::fields::NodeSpectra;
use crate::geometry::{dot, norm, scale, Vec3};
use crate::grids::{GridFamily, SamplingGrid};
use crate::linalg::{reg_pinv, CMat, RegInverse};
use crate::math::bessel::{sph_derivative, sph_jn};
use crate::math::sh::{channel_degrees, n_channels, real_sh, real_sh_into, solid_sh_with_gradient};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `Q x (N+1)^2` real SH values at unit `directions`.
pub fn sh_basis(order: usize, directions: &[Vec3]) -> Mat<f64> {
    let nch = n_channels(order);
    let mut out = Mat::<f64>::zeros(directions.len(), nch);
    let mut row = vec![0.0; nch];
    for (q, d) in directions.iter().enumerate() {
        real_sh_into(order, *d, &mut row);
        for (j, v) in row.iter().enumerate() {
            out[(q, j)] = *v;
        }
    }
    out
}

/// `i^n` for every ACN channel up to `order`.
pub fn i_pow_degrees(order: usize) -> Vec<Complex64> {
    channel_degrees(order).into_iter().map(|n| I.powi(n as i32)).collect()
}

/// Expansion coefficients of a unit plane wave arriving from `u`.
pub fn plane_wave_coefficients(order: usize, u: Vec3) -> Vec<Complex64> {
    let y = real_sh(order, u);
    i_pow_degrees(order)
        .into_iter()
        .zip(y)
        .map(|(p, y)| p * (4.0 * std::f64::consts::PI * y))
        .collect()
}

/// Response of one node with optional outward normal to every mode.
pub fn mode_response_node(x: Vec3, normal: Option<Vec3>, order: usize, k: f64, out: &mut [Complex64]) {
    let nch = n_channels(order);
    let r = norm(x);
    if r == 0.0 {
        out[..nch].fill(Complex64::new(0.0, 0.0));
        out[0] = Complex64::new(real_sh(0, [0.0, 0.0, 1.0])[0], 0.0);
        return;
    }
    let xhat = scale(x, 1.0 / r);
    let kr = k * r;
    let j = sph_jn(order + 1, kr);
    let degrees = channel_degrees(order);
    match normal {
        None => {
            let y = real_sh(order, xhat);
            for c in 0..nch {
                out[c] = Complex64::new(j[degrees[c]] * y[c], 0.0);
            }
        }
        Some(_) if k == 0.0 => {
            // The gradient weight vanishes at DC.
            let y = real_sh(order, xhat);
            for c in 0..nch {
                out[c] = Complex64::new(j[degrees[c]] * y[c], 0.0);
            }
        }
        Some(n) => {
            // grad(j_n(kr) Y) = -k j_{n+1} Y xhat + (j_n / r) grad S(xhat),
            // and gamma = c/(i omega) = -i/k.
            let (y, grad) = solid_sh_with_gradient(order, xhat);
            let ndotx = dot(n, xhat);
            for c in 0..nch {
                let deg = degrees[c];
                let dpdn_over_k = -j[deg + 1] * y[c] * ndotx + j[deg] / kr * dot(n, grad[c]);
                out[c] = Complex64::new(j[deg] * y[c], -dpdn_over_k);
            }
        }
    }
}

/// `L x (N+1)^2` node responses to unit-coefficient interior modes at
/// wavenumber `k`.
pub fn mode_response(grid: &SamplingGrid, order: usize, k: f64) -> CMat {
    let nch = n_channels(order);
    let l = grid.len();
    let mut g = CMat::zeros(l, nch);
    let mut row = vec![Complex64::new(0.0, 0.0); nch];
    if grid.family() == GridFamily::SphericalSurface && k > 0.0 {
        // Radial normals: [j_n(kR) - i j_n'(kR)] Y_nm.
        let degrees = channel_degrees(order);
        for (i, x) in grid.nodes().iter().enumerate() {
            let r = norm(*x);
            let j = sph_jn(order + 1, k * r);
            let jp = sph_derivative(&j, k * r);
            let y = real_sh(order, scale(*x, 1.0 / r));
            for c in 0..nch {
                g[(i, c)] = Complex64::new(j[degrees[c]], -jp[degrees[c]]) * y[c];
            }
        }
        return g;
    }
    let normals = grid.normals();
    for (i, x) in grid.nodes().iter().enumerate() {
        mode_response_node(*x, normals.map(|n| n[i]), order, k, &mut row);
        for c in 0..nch {
            g[(i, c)] = row[c];
        }
    }
    g
}

/// Frequency-dependent dynamic-range limit for the singular values, given
/// as `(frequency Hz, range dB)` breakpoints interpolated linearly over
/// log-frequency and held constant outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegProfile {
    pub points: Vec<(f64, f64)>,
}

impl Default for RegProfile {
    /// 20 dB below 200 Hz rising to 60 dB at 2 kHz and above.
    fn default() -> Self {
        RegProfile {
            points: vec![(200.0, 20.0), (2000.0, 60.0)],
        }
    }
}

impl RegProfile {
    pub fn constant(range_db: f64) -> Self {
        RegProfile {
            points: vec![(1.0, range_db)],
        }
    }

    /// A range so wide that the floor never engages in double precision.
    pub fn unlimited() -> Self {
        Self::constant(600.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(invalid_arg!("regularization profile has no breakpoints"));
        }
        for w in self.points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(invalid_arg!("regularization breakpoints must have increasing frequency"));
            }
        }
        for &(f, db) in &self.points {
            if !(f > 0.0 && f.is_finite() && db >= 0.0 && db.is_finite()) {
                return Err(invalid_arg!("invalid regularization breakpoint ({f}, {db})"));
            }
        }
        Ok(())
    }

    pub fn range_db(&self, freq: f64) -> f64 {
        let pts = &self.points;
        if freq <= pts[0].0 {
            return pts[0].1;
        }
        for w in pts.windows(2) {
            let ((f0, d0), (f1, d1)) = (w[0], w[1]);
            if freq <= f1 {
                let t = (freq / f0).ln() / (f1 / f0).ln();
                return d0 + t * (d1 - d0);
            }
        }
        pts[pts.len() - 1].1
    }
}

/// Per-bin decomposition matrices `D_k`, `(N+1)^2 x L`.
#[derive(Debug, Clone)]
pub struct DecompositionMatrix {
    pub grid_fingerprint: String,
    pub order: usize,
    pub axis: FreqAxis,
    pub speed_of_sound: f64,
    pub reg: RegProfile,
    pub matrices: Vec<CMat>,
    /// Singular-value floor applied at each bin.
    pub floors: Vec<f64>,
    /// Smallest singular value of `G` at each bin.
    pub sigma_min: Vec<f64>,
}

impl DecompositionMatrix {
    /// Bound on `||D_k||_2` implied by the floor.
    pub fn norm_bound(&self, k: usize) -> f64 {
        1.0 / self.floors[k].max(self.sigma_min[k])
    }
}

fn check_order(grid: &SamplingGrid, order: usize) -> Result<()> {
    let nch = n_channels(order);
    if nch > grid.len() {
        return Err(invalid_arg!(
            "order {order} needs {nch} coefficients but the grid has only {} nodes",
            grid.len()
        ));
    }
    Ok(())
}

/// Regularized inverse of the mode responses at bin `b` alone.
pub fn decomposition_bin(
    grid: &SamplingGrid,
    order: usize,
    axis: FreqAxis,
    b: usize,
    c: f64,
    reg: &RegProfile,
) -> Result<RegInverse> {
    check_order(grid, order)?;
    let g = mode_response(grid, order, axis.omega(b) / c);
    reg_pinv(g.as_ref(), reg.range_db(axis.freq(b)))
}

pub fn decomposition_matrix(
    grid: &SamplingGrid,
    order: usize,
    axis: FreqAxis,
    c: f64,
    reg: &RegProfile,
) -> Result<DecompositionMatrix> {
    reg.validate()?;
    check_order(grid, order)?;
    let mut matrices = Vec::with_capacity(axis.bins());
    let mut floors = Vec::with_capacity(axis.bins());
    let mut sigma_min = Vec::with_capacity(axis.bins());
    for b in 0..axis.bins() {
        let inv = decomposition_bin(grid, order, axis, b, c, reg)?;
        floors.push(inv.floor);
        sigma_min.push(inv.singular_values.iter().fold(f64::INFINITY, |a, &s| a.min(s)));
        matrices.push(inv.inverse);
    }
    Ok(DecompositionMatrix {
        grid_fingerprint: grid.fingerprint(),
        order,
        axis,
        speed_of_sound: c,
        reg: reg.clone(),
        matrices,
        floors,
        sigma_min,
    })
}

/// Ambisonic signal: `(N+1)^2` ACN/N3D channels as half spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct ShSignal {
    pub order: usize,
    pub axis: FreqAxis,
    /// `bins[k][channel]`.
    pub bins: Vec<Vec<Complex64>>,
}

impl ShSignal {
    pub fn channels(&self) -> usize {
        n_channels(self.order)
    }

    pub fn zeros(order: usize, axis: FreqAxis) -> Self {
        ShSignal {
            order,
            axis,
            bins: vec![vec![Complex64::new(0.0, 0.0); n_channels(order)]; axis.bins()],
        }
    }
}

/// `a_k = D_k s_k` for every bin, with surface-grid pressure and gradient
/// combined into cardioid channels first.
pub fn analyze(signals: &NodeSpectra, d: &DecompositionMatrix) -> Result<ShSignal> {
    if signals.grid_fingerprint != d.grid_fingerprint {
        return Err(crate::Error::FingerprintMismatch {
            expected: d.grid_fingerprint.clone(),
            found: signals.grid_fingerprint.clone(),
        });
    }
    if signals.axis != d.axis {
        return Err(invalid_data!("signal and decomposition frequency axes differ"));
    }
    let combined = signals.combined(d.speed_of_sound)?;
    let l = combined.len();
    let mut out = ShSignal::zeros(d.order, d.axis);
    for (b, a) in out.bins.iter_mut().enumerate() {
        let m = &d.matrices[b];
        if m.ncols() != l {
            return Err(invalid_data!("signal has {l} nodes, decomposition expects {}", m.ncols()));
        }
        for (c, ac) in a.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (node, s) in combined.iter().enumerate() {
                acc += m[(c, node)] * s[b];
            }
            *ac = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{make_cubical_surface, make_spherical_surface};

    #[test]
    fn gram_on_dense_design_is_identity() {
        let dirs = crate::grids::sphere_design(30 * 30).unwrap();
        let y = sh_basis(10, dirs);
        let gram = y.transpose() * &y;
        let w = 4.0 * std::f64::consts::PI / dirs.len() as f64;
        let mut err: f64 = 0.0;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let e = if i == j { 1.0 } else { 0.0 };
                err = err.max((w * gram[(i, j)] - e).abs());
            }
        }
        // A degree-28 design integrates products up to degree 20 exactly.
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn spherical_closed_form_matches_general_formula() {
        let grid = make_spherical_surface(64, 0.14).unwrap();
        let k = 2.0 / 0.07;
        let g = mode_response(&grid, 5, k);
        let mut row = vec![Complex64::new(0.0, 0.0); 36];
        for (i, x) in grid.nodes().iter().enumerate().take(10) {
            mode_response_node(*x, Some(grid.normals().unwrap()[i]), 5, k, &mut row);
            for c in 0..36 {
                assert!((g[(i, c)] - row[c]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn small_argument_limit() {
        let grid = make_spherical_surface(64, 0.14).unwrap();
        let g = mode_response(&grid, 4, 1e-9);
        let y00 = 0.5 / std::f64::consts::PI.sqrt();
        let degrees = channel_degrees(4);
        for (i, x) in grid.nodes().iter().enumerate() {
            assert!((g[(i, 0)] - Complex64::new(y00, 0.0)).norm() < 1e-9);
            // The gradient term keeps degree one finite: -i Y_1m / 3 on a
            // sphere.
            let y = real_sh(1, scale(*x, 1.0 / norm(*x)));
            for c in 1..4 {
                assert!((g[(i, c)] - Complex64::new(0.0, -y[c] / 3.0)).norm() < 1e-9);
            }
            for c in 4..25 {
                assert!(degrees[c] >= 2 && g[(i, c)].norm() < 1e-6);
            }
        }
        let g0 = mode_response(&grid, 4, 0.0);
        assert_eq!(g0[(0, 0)], Complex64::new(y00, 0.0));
        assert_eq!(g0[(0, 3)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cube_face_entry_matches_finite_difference() {
        let grid = make_cubical_surface(5, 0.14).unwrap();
        let i = grid
            .nodes()
            .iter()
            .position(|p| (p[0] - 0.07).abs() < 1e-15 && (p[1] - 0.035).abs() < 1e-15)
            .unwrap();
        let x = grid.nodes()[i];
        let n = grid.normals().unwrap()[i];
        let k = 2.0 / 0.07;
        let order = 6;
        let nch = n_channels(order);
        let mut analytic = vec![Complex64::new(0.0, 0.0); nch];
        mode_response_node(x, Some(n), order, k, &mut analytic);
        let h = 1e-5;
        let mut p_plus = vec![Complex64::new(0.0, 0.0); nch];
        let mut p_minus = p_plus.clone();
        let mut p0 = p_plus.clone();
        mode_response_node(crate::geometry::add(x, scale(n, h)), None, order, k, &mut p_plus);
        mode_response_node(crate::geometry::add(x, scale(n, -h)), None, order, k, &mut p_minus);
        mode_response_node(x, None, order, k, &mut p0);
        for c in 0..nch {
            let fd = (p_plus[c] - p_minus[c]) / (2.0 * h);
            let expected = p0[c] + fd * Complex64::new(0.0, -1.0 / k);
            let rel = (analytic[c] - expected).norm() / expected.norm().max(1e-12);
            assert!(rel < 1e-6, "channel {c}: {rel}");
        }
    }

    #[test]
    fn plane_wave_expansion_constant_from_quadrature() {
        // Project e^{i k u.x} on a sphere of radius r against Y_nm with a
        // dense quadrature; the ratio to j_n(kr) Y_nm(u) is 4 pi i^n.
        let u = crate::geometry::from_spherical(0.7, 0.3);
        let (k, r) = (20.0, 0.07);
        let dirs = crate::grids::sphere_design(900).unwrap();
        let w = 4.0 * std::f64::consts::PI / dirs.len() as f64;
        let order = 4;
        let j = sph_jn(order, k * r);
        let expected = plane_wave_coefficients(order, u);
        let mut proj = vec![Complex64::new(0.0, 0.0); n_channels(order)];
        for d in dirs {
            let p = Complex64::from_polar(1.0, k * r * dot(u, *d));
            for (c, y) in real_sh(order, *d).into_iter().enumerate() {
                proj[c] += p * (w * y);
            }
        }
        for (c, deg) in channel_degrees(order).into_iter().enumerate() {
            let a = proj[c] / j[deg];
            assert!((a - expected[c]).norm() < 1e-8 * expected[c].norm().max(1.0), "channel {c}");
        }
    }

    #[test]
    fn reg_profile_interpolates_in_log_frequency() {
        let p = RegProfile::default();
        assert_eq!(p.range_db(50.0), 20.0);
        assert_eq!(p.range_db(5000.0), 60.0);
        assert!((p.range_db((200.0f64 * 2000.0).sqrt()) - 40.0).abs() < 1e-12);
    }

    #[test]
    fn well_conditioned_bin_inverts_exactly() {
        let grid = make_spherical_surface(144, 0.14).unwrap();
        let axis = FreqAxis::new(48000.0, 48);
        // Bin 2 is 2 kHz.
        let d = decomposition_matrix(&grid, 10, axis, 343.0, &RegProfile::unlimited()).unwrap();
        let g = mode_response(&grid, 10, axis.omega(2) / 343.0);
        let prod = &d.matrices[2] * &g;
        for i in 0..prod.nrows() {
            for j in 0..prod.ncols() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - Complex64::new(e, 0.0)).norm() < 1e-6);
            }
        }
        // DC is finite.
        assert!(d.matrices[0].norm_l2().is_finite());
    }

    #[test]
    fn rejects_underdetermined_order() {
        let grid = make_spherical_surface(25, 0.14).unwrap();
        let axis = FreqAxis::new(48000.0, 16);
        assert!(decomposition_matrix(&grid, 4, axis, 343.0, &RegProfile::default()).is_ok());
        assert!(decomposition_matrix(&grid, 5, axis, 343.0, &RegProfile::default()).is_err());
    }
}
