//! Grid description files: UTF-8 JSON with 17 significant digits.
//!
//! The fingerprint of a grid is the SHA-256 of its canonical serialisation,
//! so files that differ only in whitespace or number spelling share it.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{GridFamily, SamplingGrid};
use crate::error::{invalid_data, Error, Result};
use crate::geometry::Vec3;

pub const GRID_FORMAT: &str = "auralize-grid";
pub const GRID_FORMAT_VERSION: u32 = 1;

fn push_vecs(out: &mut String, name: &str, vecs: &[Vec3]) {
    let _ = write!(out, "  \"{name}\": [\n");
    for (i, v) in vecs.iter().enumerate() {
        let sep = if i + 1 == vecs.len() { "" } else { "," };
        let _ = writeln!(out, "    [{:.16e}, {:.16e}, {:.16e}]{sep}", v[0], v[1], v[2]);
    }
    out.push_str("  ]");
}

impl SamplingGrid {
    /// Canonical JSON text of the grid.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"format\": \"{GRID_FORMAT}\",");
        let _ = writeln!(out, "  \"version\": {GRID_FORMAT_VERSION},");
        let family = serde_json::to_string(&self.family).expect("enum serialises");
        let _ = writeln!(out, "  \"family\": {family},");
        let _ = writeln!(out, "  \"size_m\": {:.16e},", self.size_m);
        let _ = writeln!(out, "  \"max_order\": {},", self.max_order);
        push_vecs(&mut out, "nodes", &self.nodes);
        if let Some(normals) = &self.normals {
            out.push_str(",\n");
            push_vecs(&mut out, "normals", normals);
        }
        out.push_str("\n}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            format: Option<String>,
            version: Option<u32>,
            family: GridFamily,
            size_m: f64,
            max_order: usize,
            nodes: Vec<Vec3>,
            normals: Option<Vec<Vec3>>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        if let Some(f) = &raw.format {
            if f != GRID_FORMAT {
                return Err(invalid_data!("not a grid file (format {f:?})"));
            }
        }
        if let Some(v) = raw.version {
            if v > GRID_FORMAT_VERSION {
                return Err(invalid_data!("grid format version {v} is newer than {GRID_FORMAT_VERSION}"));
            }
        }
        SamplingGrid::from_parts(raw.family, raw.nodes, raw.normals, raw.size_m, raw.max_order)
    }

    /// Hex SHA-256 of [`SamplingGrid::to_json`].
    pub fn fingerprint(&self) -> String {
        grid_fingerprint(self)
    }
}

pub fn grid_fingerprint(grid: &SamplingGrid) -> String {
    let digest = Sha256::digest(grid.to_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn save_grid(grid: &SamplingGrid, path: &Path) -> Result<()> {
    std::fs::write(path, grid.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_grid(path: &Path) -> Result<SamplingGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SamplingGrid::from_json(&text)
}
