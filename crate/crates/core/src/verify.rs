//! Spectral comparison of rendered plane waves against the HRTF pair of
//! the incidence direction.

use std::fmt::Write as _;
use std::path::Path;

use crate::dsp::{bin_frequencies, db, fractional_octave_smooth, next_pow2, Fft};
use crate::engine::{convolve_bank, DEFAULT_BLOCK};
use crate::error::{invalid_arg, invalid_data, Error, Result};
use crate::fields::{plane_wave_bins, PlaneWaveSpec};
use crate::geometry::{from_degrees, Vec3};
use crate::grids::{aliasing_frequency, default_max_order, SamplingGrid};
use crate::hrtf::HrtfSet;
use crate::renderers::RendererMatrix;

pub const REPORT_VERSION: u32 = 1;

/// Lower edge of the band summarised below the aliasing frequency.
pub const BAND_LOW_HZ: f64 = 100.0;

/// Upper edge of that band as a fraction of the aliasing frequency.
pub const BAND_HIGH_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub ear: usize,
    pub freq_hz: f64,
    pub truth_db: f64,
    pub rendered_db: f64,
    pub error_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySummary {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub ear: usize,
    /// The ear facing the source; ties go to the left ear.
    pub ipsilateral: bool,
    pub rms_below_db: f64,
    pub rms_above_db: f64,
    pub aliasing_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
    pub summaries: Vec<VerifySummary>,
}

/// RMS of `err` over bins with `lo <= f <= hi`; NaN when the band is empty.
pub fn band_rms(freqs: &[f64], err: &[f64], lo: f64, hi: f64) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for (f, e) in freqs.iter().zip(err) {
        if *f >= lo && *f <= hi {
            s += e * e;
            n += 1;
        }
    }
    if n == 0 {
        f64::NAN
    } else {
        (s / n as f64).sqrt()
    }
}

/// Third-octave smoothed magnitude in dB of `x` on an `n`-point transform.
pub fn smoothed_db(x: &[f64], n: usize, sample_rate: f64) -> Vec<f64> {
    let spec = Fft::new(n).forward(x);
    let power: Vec<f64> = spec.iter().map(|z| z.norm_sqr()).collect();
    let f = bin_frequencies(n, sample_rate);
    fractional_octave_smooth(&power, &f, 3.0)
        .into_iter()
        .map(|p| db(p.sqrt()))
        .collect()
}

/// Per-ear smoothed magnitude errors between `rendered` and `truth`.
pub fn compare(rendered: &[Vec<f64>; 2], truth: &[Vec<f64>; 2], sample_rate: f64) -> (Vec<f64>, [[Vec<f64>; 2]; 2]) {
    let len = rendered[0].len().max(truth[0].len());
    let n = next_pow2(len);
    let f = bin_frequencies(n, sample_rate);
    let r = [smoothed_db(&rendered[0], n, sample_rate), smoothed_db(&rendered[1], n, sample_rate)];
    let t = [smoothed_db(&truth[0], n, sample_rate), smoothed_db(&truth[1], n, sample_rate)];
    (f, [t, r])
}

impl VerifyReport {
    fn check(&self) -> Result<()> {
        for s in &self.summaries {
            let rows: Vec<&VerifyRow> = self
                .rows
                .iter()
                .filter(|r| r.azimuth_deg == s.azimuth_deg && r.elevation_deg == s.elevation_deg && r.ear == s.ear)
                .collect();
            let f: Vec<f64> = rows.iter().map(|r| r.freq_hz).collect();
            let e: Vec<f64> = rows.iter().map(|r| r.error_db).collect();
            let below = band_rms(&f, &e, BAND_LOW_HZ, BAND_HIGH_FRACTION * s.aliasing_hz);
            let above = band_rms(&f, &e, s.aliasing_hz.next_up(), f64::INFINITY);
            let same = |a: f64, b: f64| (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-9 * (1.0 + a.abs());
            if !same(below, s.rms_below_db) || !same(above, s.rms_above_db) {
                return Err(invalid_data!(
                    "summary for azimuth {} elevation {} ear {} does not match its rows",
                    s.azimuth_deg,
                    s.elevation_deg,
                    s.ear
                ));
            }
        }
        Ok(())
    }

    /// CSV text with a versioned comment line. Fails when a summary cannot
    /// be recomputed from the rows.
    pub fn to_csv(&self) -> Result<String> {
        self.check()?;
        let mut out = String::new();
        let _ = writeln!(out, "# auralize verify report v{REPORT_VERSION}");
        out.push_str("kind,azimuth_deg,elevation_deg,ear,freq_hz,truth_db,rendered_db,error_db,rms_below_db,rms_above_db,aliasing_hz,ipsilateral\n");
        let ear = |e: usize| if e == 0 { "left" } else { "right" };
        for r in &self.rows {
            let _ = writeln!(
                out,
                "bin,{},{},{},{},{:.6},{:.6},{:.6},,,,",
                r.azimuth_deg,
                r.elevation_deg,
                ear(r.ear),
                r.freq_hz,
                r.truth_db,
                r.rendered_db,
                r.error_db
            );
        }
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "summary,{},{},{},,,,,{:.6},{:.6},{:.3},{}",
                s.azimuth_deg,
                s.elevation_deg,
                ear(s.ear),
                s.rms_below_db,
                s.rms_above_db,
                s.aliasing_hz,
                s.ipsilateral
            );
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let text = self.to_csv()?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// True when every ipsilateral summary is below `tol_db`.
    pub fn passes(&self, tol_db: f64) -> bool {
        self.summaries
            .iter()
            .filter(|s| s.ipsilateral)
            .all(|s| s.rms_below_db.is_finite() && s.rms_below_db <= tol_db)
    }
}

/// Aliasing frequency associated with a renderer on its grid.
pub fn renderer_aliasing_frequency(r: &RendererMatrix, grid: &SamplingGrid) -> f64 {
    let order = r.meta.order.unwrap_or_else(|| default_max_order(grid));
    aliasing_frequency(order, grid.radius(), r.meta.speed_of_sound)
}

/// Renders a plane wave from `dir` and returns `(rendered, truth)`.
///
/// The band-limited plane wave is periodic in `length` samples, so it is
/// combined into renderer channels at that length, streamed through the FIR
/// bank and folded back onto one period. The rendered bins then equal the
/// realized renderer response exactly, free of truncation effects.
pub fn render_plane_wave(r: &RendererMatrix, grid: &SamplingGrid, hrtf: &HrtfSet, dir: Vec3) -> Result<([Vec<f64>; 2], [Vec<f64>; 2])> {
    let fs = r.axis.sample_rate;
    if (fs - hrtf.sample_rate).abs() > 1e-9 {
        return Err(invalid_arg!("renderer rate {fs} differs from the HRTF rate {}", hrtf.sample_rate));
    }
    let fp = grid.fingerprint();
    if fp != r.meta.grid_fingerprint {
        return Err(Error::FingerprintMismatch {
            expected: r.meta.grid_fingerprint.clone(),
            found: fp,
        });
    }
    let length = next_pow2(r.meta.taps.max(2 * hrtf.ir_length()).max(1024));
    let c = r.meta.speed_of_sound;
    let spectra = plane_wave_bins(&PlaneWaveSpec::new(dir, 1.0)?, grid, fs, length / 2 + 1, c)?;
    let fft = Fft::new(length);
    let input: Vec<Vec<f64>> = spectra.combined(c)?.iter().map(|s| fft.inverse(s)).collect();
    let out = convolve_bank(&r.fir, &input, DEFAULT_BLOCK)?;
    let fold = |y: &[f64]| {
        let mut p = vec![0.0; length];
        for (i, v) in y.iter().enumerate() {
            p[i % length] += v;
        }
        p
    };
    let (l, rr) = hrtf.pair_at(dir);
    Ok(([fold(&out[0]), fold(&out[1])], [l, rr]))
}

/// Verification over `(azimuth, elevation)` pairs in degrees.
pub fn verify_renderer(
    r: &RendererMatrix,
    grid: &SamplingGrid,
    hrtf: &HrtfSet,
    directions_deg: &[(f64, f64)],
) -> Result<VerifyReport> {
    if directions_deg.is_empty() {
        return Err(invalid_arg!("no directions to verify"));
    }
    let fa = renderer_aliasing_frequency(r, grid);
    let mut report = VerifyReport::default();
    for &(az, el) in directions_deg {
        let dir = from_degrees(az, el);
        let (rendered, truth) = render_plane_wave(r, grid, hrtf, dir)?;
        let (f, [t, rd]) = compare(&rendered, &truth, r.axis.sample_rate);
        let energy = |x: &Vec<f64>| crate::dsp::energy(x);
        let ipsi = if energy(&truth[1]) > energy(&truth[0]) { 1 } else { 0 };
        for ear in 0..2 {
            let err: Vec<f64> = rd[ear].iter().zip(&t[ear]).map(|(a, b)| a - b).collect();
            for k in 1..f.len() {
                report.rows.push(VerifyRow {
                    azimuth_deg: az,
                    elevation_deg: el,
                    ear,
                    freq_hz: f[k],
                    truth_db: t[ear][k],
                    rendered_db: rd[ear][k],
                    error_db: err[k],
                });
            }
            report.summaries.push(VerifySummary {
                azimuth_deg: az,
                elevation_deg: el,
                ear,
                ipsilateral: ear == ipsi,
                rms_below_db: band_rms(&f[1..], &err[1..], BAND_LOW_HZ, BAND_HIGH_FRACTION * fa),
                rms_above_db: band_rms(&f[1..], &err[1..], fa.next_up(), f64::INFINITY),
                aliasing_hz: fa,
            });
        }
    }
    Ok(report)
}
