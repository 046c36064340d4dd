//! Shipped spherical node tables.
//!
//! Table `N` holds `(N+2)^2` unit vectors whose equal-weight quadrature
//! integrates every real harmonic of degree `1..=N` to zero. The tables are
//! produced by `examples/gen_sphere_designs.rs`.

use std::sync::OnceLock;

use crate::geometry::Vec3;

static RAW: &[u8] = include_bytes!("../../data/sphere_designs.bin");

pub const MAX_DESIGN_ORDER: usize = 28;

fn tables() -> &'static Vec<Vec<Vec3>> {
    static TABLES: OnceLock<Vec<Vec<Vec3>>> = OnceLock::new();
    TABLES.get_or_init(|| parse(RAW).expect("embedded sphere design tables are well formed"))
}

fn parse(raw: &[u8]) -> Option<Vec<Vec<Vec3>>> {
    let u32_at = |pos: usize| -> Option<u32> {
        Some(u32::from_le_bytes(raw.get(pos..pos + 4)?.try_into().ok()?))
    };
    if raw.get(..4)? != b"SPHD" {
        return None;
    }
    let count = u32_at(4)? as usize;
    let mut pos = 8;
    let mut out = Vec::with_capacity(count);
    for expected in 0..count {
        let order = u32_at(pos)? as usize;
        let l = u32_at(pos + 4)? as usize;
        pos += 8;
        if order != expected || l != (order + 2) * (order + 2) {
            return None;
        }
        let mut pts = Vec::with_capacity(l);
        for _ in 0..l {
            let mut p = [0.0; 3];
            for c in p.iter_mut() {
                *c = f64::from_le_bytes(raw.get(pos..pos + 8)?.try_into().ok()?);
                pos += 8;
            }
            pts.push(p);
        }
        out.push(pts);
    }
    Some(out)
}

/// Unit directions of the table with `l` nodes, if one is shipped.
pub fn sphere_design(l: usize) -> Option<&'static [Vec3]> {
    tables()
        .iter()
        .find(|t| t.len() == l)
        .map(|t| t.as_slice())
}

/// Design order of a table size, `N` with `(N+2)^2 = l`.
pub fn design_order(l: usize) -> Option<usize> {
    let root = (l as f64).sqrt().round() as usize;
    (root >= 2 && root * root == l).then(|| root - 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sh::{n_channels, real_sh};

    #[test]
    fn all_tables_present() {
        for n in 0..=MAX_DESIGN_ORDER {
            let l = (n + 2) * (n + 2);
            assert_eq!(design_order(l), Some(n));
            assert_eq!(sphere_design(l).unwrap().len(), l);
        }
        assert!(sphere_design(26).is_none());
        assert_eq!(design_order(26), None);
        assert_eq!(design_order(1), None);
    }

    #[test]
    fn equal_weight_quadrature_annihilates_harmonics() {
        for n in 0..=MAX_DESIGN_ORDER {
            let l = (n + 2) * (n + 2);
            let pts = sphere_design(l).unwrap();
            let mut sums = vec![0.0; n_channels(n)];
            for p in pts {
                assert!((crate::geometry::norm(*p) - 1.0).abs() < 1e-12);
                for (s, y) in sums.iter_mut().zip(real_sh(n, *p)) {
                    *s += y;
                }
            }
            let w = 4.0 * std::f64::consts::PI / l as f64;
            for s in &sums[1..] {
                assert!((w * s).abs() < 1e-6, "order {n}: {}", w * s);
            }
        }
    }
}
