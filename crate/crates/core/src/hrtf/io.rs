//! HRTF container: a directory with `index.json` and one stereo float WAV
//! file per direction.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HrtfSet, SphereModel};
use crate::error::{invalid_data, Error, Result};
use crate::geometry::{to_spherical, Vec3};

pub const HRTF_FORMAT: &str = "auralize-hrtf";
pub const HRTF_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Index {
    format: String,
    version: u32,
    sample_rate: f64,
    length: usize,
    #[serde(default)]
    onset_delay_samples: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<SphereModel>,
    entries: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    file: String,
    azimuth_deg: f64,
    elevation_deg: f64,
    /// Exact unit vector; when absent the angles are used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<Vec3>,
}

/// Writes `set` into directory `dir`, creating it if needed. Samples are
/// stored as 32-bit floats.
pub fn save_hrtf(set: &HrtfSet, dir: &Path) -> Result<()> {
    set.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: set.sample_rate.round() as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut entries = Vec::with_capacity(set.len());
    for (i, d) in set.directions.iter().enumerate() {
        let file = format!("dir_{i:05}.wav");
        let path = dir.join(&file);
        let mut w = hound::WavWriter::create(&path, spec)?;
        for (l, r) in set.left[i].iter().zip(&set.right[i]) {
            w.write_sample(*l as f32)?;
            w.write_sample(*r as f32)?;
        }
        w.finalize()?;
        let (az, el) = to_spherical(*d);
        entries.push(Entry {
            file,
            azimuth_deg: az.to_degrees(),
            elevation_deg: el.to_degrees(),
            direction: Some(*d),
        });
    }
    let index = Index {
        format: HRTF_FORMAT.into(),
        version: HRTF_FORMAT_VERSION,
        sample_rate: set.sample_rate,
        length: set.ir_length(),
        onset_delay_samples: set.onset_delay_samples,
        model: set.model,
        entries,
    };
    let path = dir.join("index.json");
    let text = serde_json::to_string_pretty(&index)?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn load_hrtf(dir: &Path) -> Result<HrtfSet> {
    let path = dir.join("index.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let index: Index = serde_json::from_str(&text)?;
    if index.format != HRTF_FORMAT {
        return Err(invalid_data!("not an HRTF index (format {:?})", index.format));
    }
    if index.version > HRTF_FORMAT_VERSION {
        return Err(invalid_data!("HRTF format version {} is newer than {HRTF_FORMAT_VERSION}", index.version));
    }
    let mut set = HrtfSet {
        directions: Vec::with_capacity(index.entries.len()),
        left: Vec::with_capacity(index.entries.len()),
        right: Vec::with_capacity(index.entries.len()),
        sample_rate: index.sample_rate,
        onset_delay_samples: index.onset_delay_samples,
        model: index.model,
    };
    for entry in &index.entries {
        let wav = dir.join(&entry.file);
        if !wav.is_file() {
            return Err(invalid_data!("index entry {:?} has no audio file", entry.file));
        }
        let mut reader = hound::WavReader::open(&wav)?;
        let spec = reader.spec();
        if spec.channels != 2 || spec.sample_format != hound::SampleFormat::Float || spec.bits_per_sample != 32 {
            return Err(invalid_data!("{:?} is not a stereo 32-bit float WAV file", entry.file));
        }
        if spec.sample_rate != index.sample_rate.round() as u32 {
            return Err(invalid_data!("{:?} sample rate {} differs from the index", entry.file, spec.sample_rate));
        }
        let samples: Vec<f32> = reader.samples::<f32>().collect::<std::result::Result<_, _>>()?;
        if samples.len() != 2 * index.length {
            return Err(invalid_data!(
                "{:?} has {} frames, expected {}",
                entry.file,
                samples.len() / 2,
                index.length
            ));
        }
        set.left.push(samples.iter().step_by(2).map(|v| *v as f64).collect());
        set.right.push(samples.iter().skip(1).step_by(2).map(|v| *v as f64).collect());
        let d = match entry.direction {
            Some(d) => d,
            None => crate::geometry::from_degrees(entry.azimuth_deg, entry.elevation_deg),
        };
        set.directions.push(d);
    }
    set.validate()?;
    Ok(set)
}
