//! Node-signal container: raw little-endian `f64`, channel-interleaved, plus
//! a JSON sidecar describing the layout.
//!
//! With gradient data the channel order within a frame is all pressure
//! channels followed by all gradient channels.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::NodeSignals;
use crate::error::{invalid_data, Error, Result};

pub const NODE_SIGNALS_FORMAT: &str = "auralize-node-signals";
pub const NODE_SIGNALS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSignalsHeader {
    pub format: String,
    pub version: u32,
    pub sample_rate: f64,
    /// Interleaved channels per frame.
    pub channels: usize,
    pub length: usize,
    pub predelay_samples: usize,
    /// `"pressure"` or `"pressure+gradient"`.
    pub layout: String,
    /// Grid description file, relative to the sidecar when not absolute.
    pub grid_file: Option<String>,
    pub grid_fingerprint: String,
    /// Raw sample file, relative to the sidecar.
    pub data_file: String,
}

impl NodeSignalsHeader {
    pub fn resolve(&self, sidecar: &Path, name: &str) -> PathBuf {
        let p = Path::new(name);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            sidecar.parent().unwrap_or(Path::new(".")).join(p)
        }
    }

    pub fn grid_path(&self, sidecar: &Path) -> Option<PathBuf> {
        self.grid_file.as_deref().map(|g| self.resolve(sidecar, g))
    }
}

/// Writes `path` (JSON sidecar) and a sibling `.f64` data file.
pub fn save_node_signals(signals: &NodeSignals, path: &Path, grid_file: Option<&str>) -> Result<()> {
    signals.validate()?;
    let data_path = path.with_extension("f64");
    let data_name = data_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| invalid_data!("unusable output path {}", path.display()))?
        .to_string();
    let blocks: Vec<&Vec<f64>> = signals
        .pressure
        .iter()
        .chain(signals.gradient.iter().flatten())
        .collect();
    let length = signals.len();
    let header = NodeSignalsHeader {
        format: NODE_SIGNALS_FORMAT.into(),
        version: NODE_SIGNALS_FORMAT_VERSION,
        sample_rate: signals.sample_rate,
        channels: blocks.len(),
        length,
        predelay_samples: signals.predelay_samples,
        layout: if signals.gradient.is_some() { "pressure+gradient" } else { "pressure" }.into(),
        grid_file: grid_file.map(str::to_string),
        grid_fingerprint: signals.grid_fingerprint.clone(),
        data_file: data_name,
    };
    let mut raw = Vec::with_capacity(blocks.len() * length * 8);
    for t in 0..length {
        for ch in &blocks {
            raw.extend_from_slice(&ch[t].to_le_bytes());
        }
    }
    std::fs::write(&data_path, raw).map_err(|e| Error::io(&data_path, e))?;
    let json = serde_json::to_string_pretty(&header)?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_node_signals(path: &Path) -> Result<(NodeSignals, NodeSignalsHeader)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header: NodeSignalsHeader = serde_json::from_str(&text)?;
    if header.format != NODE_SIGNALS_FORMAT {
        return Err(invalid_data!("{} is not a node-signal sidecar", path.display()));
    }
    if header.version > NODE_SIGNALS_FORMAT_VERSION {
        return Err(invalid_data!("node-signal format version {} is not supported", header.version));
    }
    let with_gradient = match header.layout.as_str() {
        "pressure" => false,
        "pressure+gradient" => true,
        other => return Err(invalid_data!("unknown layout {other:?}")),
    };
    if with_gradient && header.channels % 2 != 0 {
        return Err(invalid_data!("pressure+gradient layout needs an even channel count"));
    }
    let data_path = header.resolve(path, &header.data_file);
    let raw = std::fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let expected = header.channels * header.length * 8;
    if raw.len() != expected {
        return Err(invalid_data!(
            "{} holds {} bytes, header implies {expected}",
            data_path.display(),
            raw.len()
        ));
    }
    let mut chans = vec![vec![0.0; header.length]; header.channels];
    for (i, chunk) in raw.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
        chans[i % header.channels][i / header.channels] = v;
    }
    let gradient = with_gradient.then(|| chans.split_off(header.channels / 2));
    let signals = NodeSignals {
        grid_fingerprint: header.grid_fingerprint.clone(),
        sample_rate: header.sample_rate,
        predelay_samples: header.predelay_samples,
        pressure: chans,
        gradient,
    };
    signals.validate()?;
    Ok((signals, header))
}
