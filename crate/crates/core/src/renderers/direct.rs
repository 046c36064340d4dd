//! Direct route: per-bin least squares from node observations to ear
//! signals over a set of training plane waves.

use faer::MatRef;
use num_complex::Complex64;

use super::{check_taps, renderer_to_fir, training_responses, RendererKind, RendererMatrix, RendererMeta};
use crate::dsp::{FreqAxis, Fft};
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::Vec3;
use crate::grids::{aliasing_frequency, default_max_order, SamplingGrid};
use crate::hrtf::HrtfSet;
use crate::linalg::{reg_solve_right, CMat};
use crate::sht::RegProfile;

/// Solves every bin of the direct design.
///
/// `p(k)` returns the `L x Q` training observations and `h[k]` is the
/// `2 x Q` target. Below `transition_hz` the target is used as is; from the
/// transition upwards, in ascending order, each target keeps its magnitude
/// and takes the phase of the previous bin's solution applied to the
/// current observations.
pub fn direct_ls_bins(
    axis: FreqAxis,
    mut p: impl FnMut(usize) -> CMat,
    h: &[CMat],
    transition_hz: f64,
    reg: &RegProfile,
) -> Result<Vec<CMat>> {
    let mut out: Vec<CMat> = Vec::with_capacity(axis.bins());
    for k in 0..axis.bins() {
        let pk = p(k);
        let range = reg.range_db(axis.freq(k));
        let hk = &h[k];
        let target = if k > 0 && axis.freq(k) >= transition_hz {
            let prev = &out[k - 1] * &pk;
            CMat::from_fn(hk.nrows(), hk.ncols(), |e, q| Complex64::from_polar(hk[(e, q)].norm(), prev[(e, q)].arg()))
        } else {
            hk.clone()
        };
        let (w, inv) = reg_solve_right(target.as_ref(), pk.as_ref(), range)?;
        if k > 0 && inv.singular_values.iter().all(|s| *s == 0.0) {
            return Err(Error::RankDeficient(format!("training observations vanish at bin {k}")));
        }
        out.push(w);
    }
    Ok(out)
}

/// Direct renderer over `training_dirs`, `2 x L` per bin.
#[allow(clippy::too_many_arguments)]
pub fn design_direct(
    grid: &SamplingGrid,
    hrtf: &HrtfSet,
    training_dirs: &[Vec3],
    transition_hz: f64,
    reg: &RegProfile,
    taps: usize,
    c: f64,
) -> Result<RendererMatrix> {
    check_taps(taps)?;
    reg.validate()?;
    hrtf.validate()?;
    if training_dirs.is_empty() {
        return Err(invalid_arg!("no training directions"));
    }
    if training_dirs.len() < 2 * grid.len() {
        log::warn!(
            "{} training directions for {} nodes; at least {} are advised",
            training_dirs.len(),
            grid.len(),
            2 * grid.len()
        );
    }
    if hrtf.ir_length() > taps {
        return Err(invalid_arg!("HRTF length {} exceeds the tap count {taps}", hrtf.ir_length()));
    }
    let axis = FreqAxis::new(hrtf.sample_rate, taps);
    let (left, right) = hrtf.pairs_at(training_dirs);
    let fft = Fft::new(taps);
    let ls: Vec<Vec<Complex64>> = left.iter().map(|x| fft.forward(x)).collect();
    let rs: Vec<Vec<Complex64>> = right.iter().map(|x| fft.forward(x)).collect();
    let h: Vec<CMat> = (0..axis.bins())
        .map(|k| CMat::from_fn(2, training_dirs.len(), |e, q| if e == 0 { ls[q][k] } else { rs[q][k] }))
        .collect();
    log::info!(
        "direct design: {} nodes, {} training directions, {} bins, MagLS above {transition_hz:.0} Hz",
        grid.len(),
        training_dirs.len(),
        axis.bins()
    );
    let bins = direct_ls_bins(
        axis,
        |k| training_responses(grid, training_dirs, axis.omega(k), c),
        &h,
        transition_hz,
        reg,
    )?;
    let latency = taps / 2;
    let (fir, metric, realized) = renderer_to_fir(&bins, axis, latency)?;
    let meta = RendererMeta {
        kind: RendererKind::Direct,
        grid_fingerprint: grid.fingerprint(),
        grid_family: grid.family().code().to_string(),
        grid_nodes: grid.len(),
        grid_size_m: grid.size_m(),
        hrtf_fingerprint: hrtf.fingerprint(),
        order: None,
        sample_rate: axis.sample_rate,
        taps,
        latency_samples: latency,
        speed_of_sound: c,
        reg: reg.clone(),
        transition_hz: Some(transition_hz),
        training_directions: training_dirs.len(),
        eq_taps: None,
        time_aliasing: metric,
        created: None,
    };
    Ok(RendererMatrix {
        meta,
        axis,
        bins: realized,
        fir,
        decode: None,
        eq: None,
    })
}

/// Parameters of [`build_direct`].
#[derive(Debug, Clone)]
pub struct DirectOptions {
    pub taps: usize,
    pub reg: RegProfile,
    /// Defaults to the aliasing frequency of the grid's default order.
    pub transition_hz: Option<f64>,
    /// Defaults to the HRTF set's own directions.
    pub training_dirs: Option<Vec<Vec3>>,
    pub speed_of_sound: f64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions {
            taps: 2048,
            reg: RegProfile::default(),
            transition_hz: None,
            training_dirs: None,
            speed_of_sound: crate::SPEED_OF_SOUND,
        }
    }
}

pub fn build_direct(grid: &SamplingGrid, hrtf: &HrtfSet, opts: &DirectOptions) -> Result<RendererMatrix> {
    let c = opts.speed_of_sound;
    let ft = opts
        .transition_hz
        .unwrap_or_else(|| aliasing_frequency(default_max_order(grid), grid.radius(), c));
    let dirs = opts.training_dirs.as_deref().unwrap_or(&hrtf.directions);
    design_direct(grid, hrtf, dirs, ft, &opts.reg, opts.taps, c)
}

/// `||W P - H||_F / ||H||_F`.
pub fn relative_residual(w: MatRef<'_, Complex64>, p: MatRef<'_, Complex64>, h: MatRef<'_, Complex64>) -> f64 {
    let r = w * p - h;
    r.norm_l2() / h.norm_l2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_single_direction_is_identity() {
        let axis = FreqAxis::new(48000.0, 16);
        let h: Vec<CMat> = (0..axis.bins())
            .map(|k| CMat::from_fn(2, 1, |e, _| Complex64::new(1.0 + k as f64, e as f64)))
            .collect();
        let w = direct_ls_bins(axis, |_| CMat::from_fn(1, 1, |_, _| Complex64::new(1.0, 0.0)), &h, 1e9, &RegProfile::default())
            .unwrap();
        for k in 0..axis.bins() {
            for e in 0..2 {
                assert!((w[k][(e, 0)] - h[k][(e, 0)]).norm() < 1e-14);
            }
        }
    }
}
