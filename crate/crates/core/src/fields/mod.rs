//! Analytic sound fields sampled at grid nodes.
//!
//! Sign convention: time dependence `e^{+i omega t}`, plane-wave kernel
//! `e^{-i k_pw . x}` with propagation direction `d = -u` for a wave arriving
//! from `u`. Hence pressure `p = A e^{+i k u.x}`, normal gradient
//! `dp/dn = i k (u.n) p`, and Euler's equation gives `dp/dn = -i omega rho0 v_n`.

mod io;

use num_complex::Complex64;

pub use io::{load_node_signals, save_node_signals, NodeSignalsHeader, NODE_SIGNALS_FORMAT_VERSION};

use crate::dsp::{Fft, FreqAxis};
use crate::error::{invalid_arg, invalid_data, Result};
use crate::geometry::{dot, from_spherical, norm, Vec3};
use crate::grids::SamplingGrid;

/// A plane wave arriving from `direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveSpec {
    pub direction: Vec3,
    pub amplitude: f64,
}

impl PlaneWaveSpec {
    pub fn new(direction: Vec3, amplitude: f64) -> Result<Self> {
        let spec = PlaneWaveSpec { direction, amplitude };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_angles(azimuth: f64, elevation: f64) -> Self {
        PlaneWaveSpec {
            direction: from_spherical(azimuth, elevation),
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (norm(self.direction) - 1.0).abs() > 1e-12 {
            return Err(invalid_arg!("incidence direction must be a unit vector"));
        }
        if !self.amplitude.is_finite() {
            return Err(invalid_arg!("plane-wave amplitude must be finite"));
        }
        Ok(())
    }
}

/// Time-domain node signals, `pressure[node][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSignals {
    pub grid_fingerprint: String,
    pub sample_rate: f64,
    pub predelay_samples: usize,
    pub pressure: Vec<Vec<f64>>,
    pub gradient: Option<Vec<Vec<f64>>>,
}

/// Half-spectrum node signals, `pressure[node][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpectra {
    pub grid_fingerprint: String,
    pub axis: FreqAxis,
    pub predelay_samples: usize,
    pub pressure: Vec<Vec<Complex64>>,
    pub gradient: Option<Vec<Vec<Complex64>>>,
}

impl NodeSignals {
    pub fn channels(&self) -> usize {
        self.pressure.len()
    }

    pub fn len(&self) -> usize {
        self.pressure.first().map_or(0, |c| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.len();
        let blocks = std::iter::once(&self.pressure).chain(self.gradient.as_ref());
        for block in blocks {
            if block.len() != self.pressure.len() {
                return Err(invalid_data!("pressure and gradient channel counts differ"));
            }
            for (i, ch) in block.iter().enumerate() {
                if ch.len() != t {
                    return Err(invalid_data!("channel {i} has {} samples, expected {t}", ch.len()));
                }
                if ch.iter().any(|v| !v.is_finite()) {
                    return Err(invalid_data!("channel {i} contains non-finite samples"));
                }
            }
        }
        Ok(())
    }

    /// Checks channel layout against a grid.
    pub fn check_grid(&self, grid: &SamplingGrid) -> Result<()> {
        if self.channels() != grid.len() {
            return Err(invalid_data!(
                "signals have {} channels, grid has {} nodes",
                self.channels(),
                grid.len()
            ));
        }
        if grid.has_gradient() && self.gradient.is_none() {
            return Err(invalid_data!("surface grid signals need gradient channels"));
        }
        Ok(())
    }

    /// Zero-padded (or truncated) forward transform of every channel.
    pub fn to_spectra(&self, n_fft: usize) -> NodeSpectra {
        let fft = Fft::new(n_fft);
        let tf = |block: &Vec<Vec<f64>>| block.iter().map(|c| fft.forward(c)).collect::<Vec<_>>();
        NodeSpectra {
            grid_fingerprint: self.grid_fingerprint.clone(),
            axis: FreqAxis::new(self.sample_rate, n_fft),
            predelay_samples: self.predelay_samples,
            pressure: tf(&self.pressure),
            gradient: self.gradient.as_ref().map(tf),
        }
    }

    /// Node channels seen by a renderer: pressure for volumetric grids,
    /// cardioid combinations for surface grids. The combination is formed
    /// spectrally over the zero-padded signal.
    pub fn renderer_input(&self, c: f64) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        if self.gradient.is_none() {
            return Ok(self.pressure.clone());
        }
        let t = self.len();
        let n_fft = crate::dsp::next_pow2(2 * t.max(1));
        let spectra = self.to_spectra(n_fft);
        let fft = Fft::new(n_fft);
        Ok(spectra
            .combined(c)?
            .into_iter()
            .map(|s| fft.inverse(&s)[..t].to_vec())
            .collect())
    }
}

impl NodeSpectra {
    pub fn channels(&self) -> usize {
        self.pressure.len()
    }

    pub fn to_signals(&self) -> NodeSignals {
        let fft = Fft::new(self.axis.n_fft);
        let tf = |block: &Vec<Vec<Complex64>>| block.iter().map(|c| fft.inverse(c)).collect::<Vec<_>>();
        NodeSignals {
            grid_fingerprint: self.grid_fingerprint.clone(),
            sample_rate: self.axis.sample_rate,
            predelay_samples: self.predelay_samples,
            pressure: tf(&self.pressure),
            gradient: self.gradient.as_ref().map(tf),
        }
    }

    /// Per-node observation used by analysis: pressure, or the cardioid
    /// combination when gradient channels are present.
    pub fn combined(&self, c: f64) -> Result<Vec<Vec<Complex64>>> {
        let Some(gradient) = &self.gradient else {
            return Ok(self.pressure.clone());
        };
        if gradient.len() != self.pressure.len() {
            return Err(invalid_data!("pressure and gradient channel counts differ"));
        }
        Ok(self
            .pressure
            .iter()
            .zip(gradient)
            .map(|(p, g)| {
                p.iter()
                    .zip(g)
                    .enumerate()
                    .map(|(k, (p, g))| cardioid_combine_or_dc(*p, *g, self.axis.omega(k), c))
                    .collect()
            })
            .collect())
    }
}

/// Global predelay in samples that keeps every node arrival causal:
/// `ceil(fs (r_max + 1 mm) / c)` with `r_max` the largest node radius.
pub fn default_predelay(grid: &SamplingGrid, sample_rate: f64, c: f64) -> usize {
    (sample_rate * (grid.max_node_radius() + 0.001) / c).ceil() as usize
}

/// Half spectra of a plane wave at every node, `n_bins` bins of a
/// `2 (n_bins - 1)`-point transform.
///
/// Bin `k` at node `x` is `A e^{i k u.x} e^{-i omega tau0}` with the global
/// predelay `tau0`. The DC bin carries `A` in pressure and zero gradient; the
/// Nyquist bin is zeroed so the time-domain realisation is band-limited and
/// transforms back exactly.
pub fn plane_wave_bins(
    spec: &PlaneWaveSpec,
    grid: &SamplingGrid,
    sample_rate: f64,
    n_bins: usize,
    c: f64,
) -> Result<NodeSpectra> {
    spec.validate()?;
    if n_bins < 2 {
        return Err(invalid_arg!("need at least two bins, got {n_bins}"));
    }
    let axis = FreqAxis::new(sample_rate, 2 * (n_bins - 1));
    let predelay = default_predelay(grid, sample_rate, c);
    let tau0 = predelay as f64 / sample_rate;
    let u = spec.direction;
    let zero = Complex64::new(0.0, 0.0);
    let mut pressure = vec![vec![zero; n_bins]; grid.len()];
    let mut gradient = grid.normals().map(|_| vec![vec![zero; n_bins]; grid.len()]);
    for (i, x) in grid.nodes().iter().enumerate() {
        // Arrival time relative to the origin is -u.x/c.
        let delay = tau0 - dot(u, *x) / c;
        let ndotu = grid.normals().map(|n| dot(n[i], u));
        for k in 0..n_bins - 1 {
            let omega = axis.omega(k);
            let p = Complex64::from_polar(spec.amplitude, -omega * delay);
            pressure[i][k] = p;
            if let (Some(g), Some(nu)) = (gradient.as_mut(), ndotu) {
                g[i][k] = Complex64::new(0.0, omega / c * nu) * p;
            }
        }
    }
    Ok(NodeSpectra {
        grid_fingerprint: grid.fingerprint(),
        axis,
        predelay_samples: predelay,
        pressure,
        gradient,
    })
}

/// Time-domain plane-wave node signals of `length` samples.
pub fn plane_wave_ir(
    spec: &PlaneWaveSpec,
    grid: &SamplingGrid,
    sample_rate: f64,
    length: usize,
    c: f64,
) -> Result<NodeSignals> {
    let predelay = default_predelay(grid, sample_rate, c);
    if length < 2 * predelay || length < 2 || length % 2 != 0 {
        return Err(invalid_arg!(
            "length {length} must be even and at least twice the predelay ({predelay} samples)"
        ));
    }
    Ok(plane_wave_bins(spec, grid, sample_rate, length / 2 + 1, c)?.to_signals())
}

/// `p + gamma dp/dn` with `gamma = c / (i omega)`.
pub fn cardioid_combine(p: Complex64, dpdn: Complex64, omega: f64, c: f64) -> Complex64 {
    p + dpdn * Complex64::new(0.0, -c / omega)
}

/// [`cardioid_combine`] with the DC policy: pressure alone at `omega = 0`.
pub fn cardioid_combine_or_dc(p: Complex64, dpdn: Complex64, omega: f64, c: f64) -> Complex64 {
    if omega == 0.0 {
        p
    } else {
        cardioid_combine(p, dpdn, omega, c)
    }
}

/// Normal pressure gradient from normal particle velocity, `-i omega rho0 v_n`.
pub fn velocity_to_gradient(v_n: Complex64, omega: f64, rho0: f64) -> Complex64 {
    v_n * Complex64::new(0.0, -omega * rho0)
}

/// Result of [`gradient_from_double_layer`].
#[derive(Debug, Clone)]
pub struct DoubleLayerGradient {
    pub gradient: Vec<Vec<Complex64>>,
    /// Set when the layer spacing exceeds a tenth of the shortest wavelength.
    pub warning: Option<String>,
}

/// Finite-difference normal gradient `(p_outer - p_inner) / spacing` from
/// two closely spaced layers of nodes.
pub fn gradient_from_double_layer(
    p_outer: &[Vec<Complex64>],
    p_inner: &[Vec<Complex64>],
    spacing_m: f64,
    max_frequency: f64,
    c: f64,
) -> Result<DoubleLayerGradient> {
    if !(spacing_m > 0.0 && spacing_m.is_finite()) {
        return Err(invalid_arg!("layer spacing must be positive, got {spacing_m}"));
    }
    if p_outer.len() != p_inner.len() || p_outer.iter().zip(p_inner).any(|(a, b)| a.len() != b.len()) {
        return Err(invalid_data!("outer and inner layers differ in shape"));
    }
    let lambda_min = c / max_frequency;
    let warning = (spacing_m > lambda_min / 10.0).then(|| {
        let msg = format!(
            "layer spacing {spacing_m} m exceeds a tenth of the wavelength ({:.4} m) at {max_frequency} Hz",
            lambda_min
        );
        log::warn!("{msg}");
        msg
    });
    let gradient = p_outer
        .iter()
        .zip(p_inner)
        .map(|(o, i)| o.iter().zip(i).map(|(o, i)| (o - i) / spacing_m).collect())
        .collect();
    Ok(DoubleLayerGradient { gradient, warning })
}
