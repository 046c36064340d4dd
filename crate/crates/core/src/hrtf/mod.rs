//! Head-related impulse responses: storage, a rigid-sphere model, and
//! spherical-harmonic fits (plain least squares and magnitude least squares).

mod fit;
mod io;
mod sphere;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use fit::{default_transition, fit_ls, fit_magls, FitKind, HrtfSh};
pub use io::{load_hrtf, save_hrtf, HRTF_FORMAT_VERSION};
pub use sphere::SphereSeries;

use num_complex::Complex64;

use crate::dsp::{Fft, FreqAxis};
use crate::error::{invalid_arg, invalid_data, Result};
use crate::geometry::{distance, dot, from_spherical, Vec3};

/// Parameters of a rigid-sphere set, kept so exact responses can be
/// evaluated at directions outside the stored grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereModel {
    pub head_radius_m: f64,
    /// Left and right ear azimuths in radians.
    pub ear_azimuths: [f64; 2],
    pub speed_of_sound: f64,
    pub onset_delay_samples: f64,
}

/// Direction-indexed ear impulse-response pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct HrtfSet {
    pub directions: Vec<Vec3>,
    pub left: Vec<Vec<f64>>,
    pub right: Vec<Vec<f64>>,
    pub sample_rate: f64,
    /// Samples of bulk delay added ahead of the responses.
    pub onset_delay_samples: f64,
    pub model: Option<SphereModel>,
}

impl HrtfSet {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn ir_length(&self) -> usize {
        self.left.first().map_or(0, |v| v.len())
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.directions.len();
        if q < 4 {
            return Err(invalid_data!("an HRTF set needs at least 4 directions, got {q}"));
        }
        if self.left.len() != q || self.right.len() != q {
            return Err(invalid_data!("direction and response counts differ"));
        }
        let t = self.ir_length();
        if t == 0 {
            return Err(invalid_data!("empty impulse responses"));
        }
        for (i, (l, r)) in self.left.iter().zip(&self.right).enumerate() {
            if l.len() != t || r.len() != t {
                return Err(invalid_data!("response {i} length differs from {t}"));
            }
            if l.iter().chain(r).any(|v| !v.is_finite()) {
                return Err(invalid_data!("response {i} is not finite"));
            }
        }
        for (i, d) in self.directions.iter().enumerate() {
            if (crate::geometry::norm(*d) - 1.0).abs() > 1e-9 {
                return Err(invalid_data!("direction {i} is not a unit vector"));
            }
        }
        for i in 0..q {
            for j in (i + 1)..q {
                if distance(self.directions[i], self.directions[j]) < 1e-9 {
                    return Err(invalid_data!("directions {i} and {j} coincide"));
                }
            }
        }
        if !(self.sample_rate > 0.0) {
            return Err(invalid_data!("sample rate must be positive"));
        }
        Ok(())
    }

    /// Index of the stored direction closest to `dir`; ties go to the lowest
    /// index.
    pub fn nearest(&self, dir: Vec3) -> usize {
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, d) in self.directions.iter().enumerate() {
            let c = dot(*d, dir);
            if c > best_dot {
                best_dot = c;
                best = i;
            }
        }
        best
    }

    /// Response pair for `dir`: evaluated exactly when the set comes from
    /// the sphere model, otherwise the nearest stored pair.
    pub fn pair_at(&self, dir: Vec3) -> (Vec<f64>, Vec<f64>) {
        let (mut l, mut r) = self.pairs_at(&[dir]);
        (l.remove(0), r.remove(0))
    }

    /// Response pairs at several directions, `([dir][sample], [dir][sample])`.
    pub fn pairs_at(&self, dirs: &[Vec3]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        if let Some(m) = &self.model {
            return sphere_irs(m, dirs, self.sample_rate, self.ir_length());
        }
        dirs.iter()
            .map(|d| {
                let i = self.nearest(*d);
                (self.left[i].clone(), self.right[i].clone())
            })
            .unzip()
    }

    /// Half spectra of every response on the bins of an `n_fft` transform,
    /// `[ear][direction][bin]`.
    pub fn spectra(&self, n_fft: usize) -> Result<[Vec<Vec<Complex64>>; 2]> {
        if self.ir_length() > n_fft {
            return Err(invalid_arg!(
                "HRTF length {} exceeds the transform size {n_fft}",
                self.ir_length()
            ));
        }
        let fft = Fft::new(n_fft);
        Ok([
            self.left.iter().map(|h| fft.forward(h)).collect(),
            self.right.iter().map(|h| fft.forward(h)).collect(),
        ])
    }

    /// Hex SHA-256 over sample rate, directions and samples.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.sample_rate.to_le_bytes());
        for d in &self.directions {
            for c in d {
                h.update(c.to_le_bytes());
            }
        }
        for ir in self.left.iter().chain(&self.right) {
            for v in ir {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn sphere_irs(
    model: &SphereModel,
    directions: &[Vec3],
    sample_rate: f64,
    length: usize,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n_fft = length + length % 2;
    let axis = FreqAxis::new(sample_rate, n_fft);
    let ears = model.ear_azimuths.map(|az| from_spherical(az, 0.0));
    let bins = axis.bins();
    let zero = Complex64::new(0.0, 0.0);
    let mut spec = [
        vec![vec![zero; bins]; directions.len()],
        vec![vec![zero; bins]; directions.len()],
    ];
    for k in 0..bins {
        let omega = axis.omega(k);
        let ka = omega / model.speed_of_sound * model.head_radius_m;
        let series = SphereSeries::new(ka);
        let delay = Complex64::from_polar(1.0, -omega * model.onset_delay_samples / sample_rate);
        for (q, d) in directions.iter().enumerate() {
            for (e, ear) in ears.iter().enumerate() {
                spec[e][q][k] = series.eval(dot(*d, *ear)) * delay;
            }
        }
    }
    let fft = Fft::new(n_fft);
    // Samples are rounded to single precision so the container stores them
    // exactly.
    let to_time = |s: &Vec<Complex64>| -> Vec<f64> {
        fft.inverse(s)[..length].iter().map(|v| *v as f32 as f64).collect()
    };
    let [l, r] = spec;
    (l.iter().map(to_time).collect(), r.iter().map(to_time).collect())
}

/// Rigid-sphere HRTF set with ears at `ear_azimuths` (radians, left then
/// right) on the horizontal plane.
///
/// A bulk delay of `ceil(fs a / c) + 16` samples keeps the earliest
/// (ipsilateral) arrival and its band-limited pre-ringing causal; it is
/// recorded in the set.
pub fn sphere_hrtf(
    head_radius_m: f64,
    ear_azimuths: [f64; 2],
    directions: &[Vec3],
    sample_rate: f64,
    length: usize,
    c: f64,
) -> Result<HrtfSet> {
    if !(head_radius_m > 0.0 && head_radius_m.is_finite()) {
        return Err(invalid_arg!("head radius must be positive, got {head_radius_m}"));
    }
    if length < 2 {
        return Err(invalid_arg!("response length must be at least 2"));
    }
    let onset = (sample_rate * head_radius_m / c).ceil() + 16.0;
    if onset >= length as f64 / 2.0 {
        return Err(invalid_arg!("response length {length} too short for a {onset}-sample onset"));
    }
    let model = SphereModel {
        head_radius_m,
        ear_azimuths,
        speed_of_sound: c,
        onset_delay_samples: onset,
    };
    let (left, right) = sphere_irs(&model, directions, sample_rate, length);
    let set = HrtfSet {
        directions: directions.to_vec(),
        left,
        right,
        sample_rate,
        onset_delay_samples: onset,
        model: Some(model),
    };
    set.validate()?;
    Ok(set)
}

/// Default head radius of the sphere model in metres.
pub const DEFAULT_HEAD_RADIUS: f64 = 0.0875;

/// Ears at +90 and -90 degrees azimuth.
pub const DEFAULT_EAR_AZIMUTHS: [f64; 2] = [std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2];
