//! Ambisonic route: SH decomposition followed by binaural decoding.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_taps, renderer_to_fir, EqFilter, RendererKind, RendererMatrix, RendererMeta};
use crate::dsp::FreqAxis;
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::{rotation_matrix, Vec3};
use crate::grids::{aliasing_frequency, SamplingGrid};
use crate::hrtf::{default_transition, fit_magls, HrtfSet, HrtfSh};
use crate::linalg::CMat;
use crate::math::rotation::ShRotation;
use crate::math::sh::channel_degrees;
use crate::sht::{decomposition_bin, decomposition_matrix, DecompositionMatrix, RegProfile, ShSignal};

/// Rotates the sound field of `a` by `Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn rotate_sh(a: &ShSignal, yaw: f64, pitch: f64, roll: f64) -> ShSignal {
    let rot = ShRotation::new(a.order, &rotation_matrix(yaw, pitch, roll));
    ShSignal {
        order: a.order,
        axis: a.axis,
        bins: a.bins.iter().map(|b| rot.apply_complex(b)).collect(),
    }
}

/// Ear spectra of an SH signal: per bin and ear
/// `sum_nm a_nm h_nm (-i)^n / (4 pi)`, which maps the coefficients of a
/// plane wave from `u` to the fitted HRTF at `u`.
pub fn binaural_decode(a: &ShSignal, h: &HrtfSh) -> Result<[Vec<Complex64>; 2]> {
    if a.order != h.order {
        return Err(invalid_arg!("signal order {} differs from HRTF order {}", a.order, h.order));
    }
    if a.axis != h.axis {
        return Err(invalid_arg!("signal and HRTF frequency axes differ"));
    }
    let w = decode_weights(h.order);
    let mut out = [vec![Complex64::new(0.0, 0.0); a.bins.len()], vec![Complex64::new(0.0, 0.0); a.bins.len()]];
    for (k, ak) in a.bins.iter().enumerate() {
        for ear in 0..2 {
            out[ear][k] = ak
                .iter()
                .zip(&h.coeffs[k][ear])
                .zip(&w)
                .map(|((a, h), w)| a * h * w)
                .sum();
        }
    }
    Ok(out)
}

fn decode_weights(order: usize) -> Vec<Complex64> {
    let minus_i = Complex64::new(0.0, -1.0);
    channel_degrees(order)
        .into_iter()
        .map(|n| minus_i.powi(n as i32) / (4.0 * PI))
        .collect()
}

/// Per-bin `2 x (N+1)^2` decode matrices scaled by `eq[k]`.
pub fn decode_matrices(h: &HrtfSh, eq: &[Complex64]) -> Result<Vec<CMat>> {
    if eq.len() != h.coeffs.len() {
        return Err(invalid_arg!("EQ has {} bins, HRTF fit has {}", eq.len(), h.coeffs.len()));
    }
    let w = decode_weights(h.order);
    Ok(h.coeffs
        .iter()
        .zip(eq)
        .map(|(pair, g)| CMat::from_fn(2, w.len(), |ear, j| pair[ear][j] * w[j] * g))
        .collect())
}

/// Composes decode, EQ and decomposition into a renderer.
pub fn design_ambisonic(
    grid: &SamplingGrid,
    hrtf_sh: &HrtfSh,
    d: &DecompositionMatrix,
    eq: Option<&EqFilter>,
    hrtf_fingerprint: &str,
) -> Result<RendererMatrix> {
    if d.order != hrtf_sh.order {
        return Err(invalid_arg!(
            "decomposition order {} differs from HRTF order {}",
            d.order,
            hrtf_sh.order
        ));
    }
    if d.axis != hrtf_sh.axis {
        return Err(invalid_arg!("decomposition and HRTF frequency axes differ"));
    }
    let fp = grid.fingerprint();
    if fp != d.grid_fingerprint {
        return Err(Error::FingerprintMismatch {
            expected: d.grid_fingerprint.clone(),
            found: fp,
        });
    }
    let axis = d.axis;
    check_taps(axis.n_fft)?;
    let eq_spec = match eq {
        Some(e) => e.spectrum(axis.n_fft),
        None => vec![Complex64::new(1.0, 0.0); axis.bins()],
    };
    let decode = decode_matrices(hrtf_sh, &eq_spec)?;
    let meta = RendererMeta {
        kind: RendererKind::Ambisonic,
        grid_fingerprint: fp,
        grid_family: grid.family().code().to_string(),
        grid_nodes: grid.len(),
        grid_size_m: grid.size_m(),
        hrtf_fingerprint: hrtf_fingerprint.to_string(),
        order: Some(d.order),
        sample_rate: axis.sample_rate,
        taps: axis.n_fft,
        latency_samples: axis.n_fft / 2,
        speed_of_sound: d.speed_of_sound,
        reg: d.reg.clone(),
        transition_hz: hrtf_sh.transition_hz,
        training_directions: 0,
        eq_taps: eq.map(|e| e.fir.len()),
        time_aliasing: 0.0,
        created: None,
    };
    compose(meta, axis, decode, d, eq.cloned())
}

fn compose(
    mut meta: RendererMeta,
    axis: FreqAxis,
    decode: Vec<CMat>,
    d: &DecompositionMatrix,
    eq: Option<EqFilter>,
) -> Result<RendererMatrix> {
    let bins: Vec<CMat> = decode.iter().zip(&d.matrices).map(|(h, dk)| h * dk).collect();
    let (fir, metric, realized) = renderer_to_fir(&bins, axis, meta.latency_samples)?;
    meta.time_aliasing = metric;
    Ok(RendererMatrix {
        meta,
        axis,
        bins: realized,
        fir,
        decode: Some(decode),
        eq,
    })
}

/// `decode[k] D_k` for every bin, with each `D_k` computed and dropped in
/// turn so the full decomposition is never held in memory.
fn compose_streaming(
    grid: &SamplingGrid,
    order: usize,
    axis: FreqAxis,
    c: f64,
    reg: &RegProfile,
    decode: &[CMat],
) -> Result<Vec<CMat>> {
    reg.validate()?;
    decode
        .iter()
        .enumerate()
        .map(|(k, h)| Ok(h * decomposition_bin(grid, order, axis, k, c, reg)?.inverse))
        .collect()
}

/// Decomposition matrices matching an ambisonic renderer's design.
pub fn renderer_decomposition(r: &RendererMatrix, grid: &SamplingGrid) -> Result<DecompositionMatrix> {
    let order = r
        .meta
        .order
        .ok_or_else(|| invalid_arg!("rotation is only available for ambisonic renderers"))?;
    check_grid(r, grid)?;
    decomposition_matrix(grid, order, r.axis, r.meta.speed_of_sound, &r.meta.reg)
}

fn check_grid(r: &RendererMatrix, grid: &SamplingGrid) -> Result<()> {
    let fp = grid.fingerprint();
    if fp != r.meta.grid_fingerprint {
        return Err(Error::FingerprintMismatch {
            expected: r.meta.grid_fingerprint.clone(),
            found: fp,
        });
    }
    Ok(())
}

/// Ambisonic renderer with the sound field rotated by `(yaw, pitch, roll)`
/// before decoding. Zero angles return the renderer unchanged.
pub fn rotated_renderer(r: &RendererMatrix, grid: &SamplingGrid, yaw: f64, pitch: f64, roll: f64) -> Result<RendererMatrix> {
    let (Some(decode), Some(order)) = (r.decode.as_ref(), r.meta.order) else {
        return Err(invalid_arg!("rotation is only available for ambisonic renderers"));
    };
    if yaw == 0.0 && pitch == 0.0 && roll == 0.0 {
        return Ok(r.clone());
    }
    check_grid(r, grid)?;
    let rot = ShRotation::new(order, &rotation_matrix(yaw, pitch, roll));
    let nch = crate::math::sh::n_channels(order);
    let m = rot.to_dense();
    // decode' = decode M, so decode' D a = decode (M a).
    let rotated: Vec<CMat> = decode
        .iter()
        .map(|h| {
            CMat::from_fn(2, nch, |ear, j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..nch {
                    let mij = m[i * nch + j];
                    if mij != 0.0 {
                        acc += h[(ear, i)] * mij;
                    }
                }
                acc
            })
        })
        .collect();
    let bins = compose_streaming(grid, order, r.axis, r.meta.speed_of_sound, &r.meta.reg, &rotated)?;
    let mut meta = r.meta.clone();
    let (fir, metric, realized) = renderer_to_fir(&bins, r.axis, meta.latency_samples)?;
    meta.time_aliasing = metric;
    Ok(RendererMatrix {
        meta,
        axis: r.axis,
        bins: realized,
        fir,
        decode: Some(rotated),
        eq: r.eq.clone(),
    })
}

/// Parameters of [`build_ambisonic`].
#[derive(Debug, Clone)]
pub struct AmbisonicOptions {
    /// Defaults to the grid's maximum order.
    pub order: Option<usize>,
    /// Allow orders above the grid's maximum.
    pub force: bool,
    pub taps: usize,
    /// Defaults to a quarter of `taps`; `Some(0)` disables the EQ.
    pub eq_taps: Option<usize>,
    pub reg: RegProfile,
    /// MagLS transition; defaults to the head-sized order limit.
    pub transition_hz: Option<f64>,
    /// Defaults to the HRTF set's own directions.
    pub training_dirs: Option<Vec<Vec3>>,
    pub speed_of_sound: f64,
}

impl Default for AmbisonicOptions {
    fn default() -> Self {
        AmbisonicOptions {
            order: None,
            force: false,
            taps: 2048,
            eq_taps: None,
            reg: RegProfile::default(),
            transition_hz: None,
            training_dirs: None,
            speed_of_sound: crate::SPEED_OF_SOUND,
        }
    }
}

/// Full ambisonic design: MagLS HRTF fit, decomposition, EQ and composition.
pub fn build_ambisonic(grid: &SamplingGrid, hrtf: &HrtfSet, opts: &AmbisonicOptions) -> Result<RendererMatrix> {
    check_taps(opts.taps)?;
    hrtf.validate()?;
    let order = opts.order.unwrap_or(grid.max_order());
    if order > grid.max_order() && !opts.force {
        return Err(invalid_arg!(
            "order {order} exceeds the grid's supported order {}",
            grid.max_order()
        ));
    }
    if hrtf.ir_length() > opts.taps {
        return Err(invalid_arg!(
            "HRTF length {} exceeds the tap count {}",
            hrtf.ir_length(),
            opts.taps
        ));
    }
    let c = opts.speed_of_sound;
    let axis = FreqAxis::new(hrtf.sample_rate, opts.taps);
    let ft = opts.transition_hz.unwrap_or_else(|| default_transition(order, c));
    log::info!(
        "ambisonic design: {} nodes, order {order}, {} bins, MagLS above {ft:.0} Hz, f_a {:.0} Hz",
        grid.len(),
        axis.bins(),
        aliasing_frequency(order, grid.radius(), c)
    );
    let hrtf_sh = fit_magls(hrtf, order, ft, opts.taps)?;
    opts.reg.validate()?;
    let unity = vec![Complex64::new(1.0, 0.0); axis.bins()];
    let plain = compose_streaming(grid, order, axis, c, &opts.reg, &decode_matrices(&hrtf_sh, &unity)?)?;
    let eq_taps = opts.eq_taps.unwrap_or(opts.taps / 4);
    let dirs = opts.training_dirs.as_deref().unwrap_or(&hrtf.directions);
    let nch = hrtf_sh.channels();
    if eq_taps > 0 && dirs.len() < 2 * nch {
        log::warn!(
            "{} training directions for {nch} SH channels; at least {} are advised",
            dirs.len(),
            2 * nch
        );
    }
    let eq = if eq_taps > 0 {
        Some(super::design_eq_filter(grid, &plain, axis, c, hrtf, dirs, eq_taps)?)
    } else {
        None
    };
    let eq_spec = match &eq {
        Some(e) => e.spectrum(axis.n_fft),
        None => unity,
    };
    let bins: Vec<CMat> = plain.iter().zip(&eq_spec).map(|(w, g)| w * faer::Scale(*g)).collect();
    let decode = decode_matrices(&hrtf_sh, &eq_spec)?;
    let latency = opts.taps / 2;
    let (fir, metric, realized) = renderer_to_fir(&bins, axis, latency)?;
    let meta = RendererMeta {
        kind: RendererKind::Ambisonic,
        grid_fingerprint: grid.fingerprint(),
        grid_family: grid.family().code().to_string(),
        grid_nodes: grid.len(),
        grid_size_m: grid.size_m(),
        hrtf_fingerprint: hrtf.fingerprint(),
        order: Some(order),
        sample_rate: axis.sample_rate,
        taps: opts.taps,
        latency_samples: latency,
        speed_of_sound: c,
        reg: opts.reg.clone(),
        transition_hz: Some(ft),
        training_directions: if eq.is_some() { dirs.len() } else { 0 },
        eq_taps: eq.as_ref().map(|e| e.fir.len()),
        time_aliasing: metric,
        created: None,
    };
    Ok(RendererMatrix {
        meta,
        axis,
        bins: realized,
        fir,
        decode: Some(decode),
        eq,
    })
}
