//! Directional room-response files: a JSON header and a sibling raw file
//! holding `h` followed by `T x 3` directions, little-endian `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SdmResponse;
use crate::error::{invalid_data, Error, Result};

pub const SDM_FORMAT: &str = "auralize-sdm";
pub const SDM_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    sample_rate: f64,
    length: usize,
    data_file: String,
}

pub fn save_sdm(r: &SdmResponse, path: &Path) -> Result<()> {
    r.validate()?;
    let data_path = path.with_extension("f64");
    let data_file = data_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| invalid_data!("unusable output path {}", path.display()))?
        .to_string();
    let mut raw = Vec::with_capacity(r.len() * 32);
    for h in &r.h {
        raw.extend_from_slice(&h.to_le_bytes());
    }
    for u in &r.u {
        for c in u {
            raw.extend_from_slice(&c.to_le_bytes());
        }
    }
    std::fs::write(&data_path, raw).map_err(|e| Error::io(&data_path, e))?;
    let header = Header {
        format: SDM_FORMAT.into(),
        version: SDM_FORMAT_VERSION,
        sample_rate: r.sample_rate,
        length: r.len(),
        data_file,
    };
    std::fs::write(path, serde_json::to_string_pretty(&header)? + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_sdm(path: &Path) -> Result<SdmResponse> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header: Header = serde_json::from_str(&text)?;
    if header.format != SDM_FORMAT {
        return Err(invalid_data!("{} is not a directional response header", path.display()));
    }
    if header.version > SDM_FORMAT_VERSION {
        return Err(invalid_data!("response format version {} is not supported", header.version));
    }
    let data_path = path.parent().unwrap_or(Path::new(".")).join(&header.data_file);
    let raw = std::fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    if raw.len() != header.length * 32 {
        return Err(invalid_data!(
            "{} holds {} bytes, header implies {}",
            data_path.display(),
            raw.len(),
            header.length * 32
        ));
    }
    let vals: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let (h, u) = vals.split_at(header.length);
    let r = SdmResponse {
        h: h.to_vec(),
        u: u.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        sample_rate: header.sample_rate,
    };
    r.validate()?;
    Ok(r)
}
