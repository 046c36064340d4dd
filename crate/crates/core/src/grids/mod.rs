//! Sampling grids: cubical volumes, cubical surfaces and spherical surfaces.
//!
//! Cubical lattices put nodes on the hull, at `-size/2 + i * size/(m-1)`.
//! Surface grids carry one outward unit normal per node; on cube edges and
//! corners it is the normalised sum of the adjacent face normals.

mod designs;
mod io;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub use designs::{design_order, sphere_design, MAX_DESIGN_ORDER};

use crate::error::{invalid_arg, invalid_data, Result};
use crate::geometry::{dot, norm, normalize, scale, Vec3};
use crate::math::sh::n_channels;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFamily {
    CubicalVolume,
    CubicalSurface,
    SphericalSurface,
}

impl GridFamily {
    pub fn is_surface(self) -> bool {
        !matches!(self, GridFamily::CubicalVolume)
    }

    pub fn code(self) -> &'static str {
        match self {
            GridFamily::CubicalVolume => "cv",
            GridFamily::CubicalSurface => "cs",
            GridFamily::SphericalSurface => "ss",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "cv" => Some(GridFamily::CubicalVolume),
            "cs" => Some(GridFamily::CubicalSurface),
            "ss" => Some(GridFamily::SphericalSurface),
            _ => None,
        }
    }
}

/// Node positions (metres, origin centred) plus outward normals for
/// surface families.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    family: GridFamily,
    nodes: Vec<Vec3>,
    normals: Option<Vec<Vec3>>,
    size_m: f64,
    max_order: usize,
}

impl SamplingGrid {
    /// Assembles a grid from raw parts and checks every invariant.
    pub fn from_parts(
        family: GridFamily,
        nodes: Vec<Vec3>,
        normals: Option<Vec<Vec3>>,
        size_m: f64,
        max_order: usize,
    ) -> Result<Self> {
        let grid = SamplingGrid {
            family,
            nodes,
            normals,
            size_m,
            max_order,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn family(&self) -> GridFamily {
        self.family
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn normals(&self) -> Option<&[Vec3]> {
        self.normals.as_deref()
    }

    pub fn size_m(&self) -> f64 {
        self.size_m
    }

    /// Half the edge length or diameter.
    pub fn radius(&self) -> f64 {
        0.5 * self.size_m
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn has_gradient(&self) -> bool {
        self.family.is_surface()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest distance of any node from the origin.
    pub fn max_node_radius(&self) -> f64 {
        self.nodes.iter().map(|p| norm(*p)).fold(0.0, f64::max)
    }

    /// Replaces the declared order.
    pub fn with_max_order(mut self, order: usize) -> Self {
        self.max_order = order;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.size_m.is_finite() && self.size_m > 0.0) {
            return Err(invalid_data!("grid size must be positive, got {}", self.size_m));
        }
        let l = self.nodes.len();
        match self.family {
            GridFamily::CubicalVolume => {
                if cube_side(l).is_none() {
                    return Err(invalid_data!("{l} nodes is not m^3 for any m >= 2"));
                }
            }
            GridFamily::CubicalSurface => {
                if shell_side(l).is_none() {
                    return Err(invalid_data!("{l} nodes is not 6m^2-12m+8 for any m >= 2"));
                }
            }
            GridFamily::SphericalSurface => {
                if design_order(l).is_none() {
                    return Err(invalid_data!("{l} nodes is not (N+2)^2 for any N >= 0"));
                }
            }
        }
        let half = self.radius();
        let tol = 1e-12;
        for (i, p) in self.nodes.iter().enumerate() {
            if !p.iter().all(|v| v.is_finite()) {
                return Err(invalid_data!("node {i} is not finite"));
            }
            let outside = match self.family {
                GridFamily::SphericalSurface => norm(*p) > half + tol,
                _ => p.iter().any(|v| v.abs() > half + tol),
            };
            if outside {
                return Err(invalid_data!("node {i} lies outside the grid bounds"));
            }
        }
        match (&self.normals, self.family.is_surface()) {
            (Some(normals), true) => {
                if normals.len() != l {
                    return Err(invalid_data!("{} normals for {l} nodes", normals.len()));
                }
                for (i, (n, p)) in normals.iter().zip(&self.nodes).enumerate() {
                    if (norm(*n) - 1.0).abs() > 1e-12 {
                        return Err(invalid_data!("normal {i} is not unit length"));
                    }
                    if dot(*n, *p) <= 0.0 {
                        return Err(invalid_data!("normal {i} does not point outward"));
                    }
                }
            }
            (None, false) => {}
            (Some(_), false) => return Err(invalid_data!("volumetric grids carry no normals")),
            (None, true) => return Err(invalid_data!("surface grids need one normal per node")),
        }
        check_distinct(&self.nodes)?;
        Ok(())
    }
}

fn check_distinct(nodes: &[Vec3]) -> Result<()> {
    // Bucket by a coarse cell so only neighbouring cells are compared.
    let cell = 1e-6;
    let key = |p: &Vec3| -> [i64; 3] { [0, 1, 2].map(|a| (p[a] / cell).floor() as i64) };
    let mut seen: std::collections::HashMap<[i64; 3], Vec<usize>> = Default::default();
    for (i, p) in nodes.iter().enumerate() {
        let k = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = seen.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &j in list {
                            if crate::geometry::distance(*p, nodes[j]) <= 1e-9 {
                                return Err(invalid_data!("nodes {j} and {i} coincide"));
                            }
                        }
                    }
                }
            }
        }
        seen.entry(k).or_default().push(i);
    }
    Ok(())
}

fn cube_side(l: usize) -> Option<usize> {
    let m = (l as f64).cbrt().round() as usize;
    (m >= 2 && m * m * m == l).then_some(m)
}

fn shell_side(l: usize) -> Option<usize> {
    (2..=l.max(2)).take_while(|m| 6 * m * m - 12 * m + 8 <= l).find(|m| 6 * m * m - 12 * m + 8 == l)
}

fn lattice(m: usize, size_m: f64) -> Vec<f64> {
    (0..m)
        .map(|i| -0.5 * size_m + i as f64 * size_m / (m - 1) as f64)
        .collect()
}

fn check_lattice_args(m: usize, size_m: f64) -> Result<()> {
    if m < 2 {
        return Err(invalid_arg!("lattice needs m >= 2, got {m}"));
    }
    if !(size_m.is_finite() && size_m > 0.0) {
        return Err(invalid_arg!("size must be positive, got {size_m}"));
    }
    Ok(())
}

/// `m^3` nodes on a regular lattice spanning `[-size/2, size/2]^3`.
pub fn make_cubical_volume(m: usize, size_m: f64) -> Result<SamplingGrid> {
    check_lattice_args(m, size_m)?;
    let x = lattice(m, size_m);
    let mut nodes = Vec::with_capacity(m * m * m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                nodes.push([x[i], x[j], x[k]]);
            }
        }
    }
    let mut grid = SamplingGrid::from_parts(GridFamily::CubicalVolume, nodes, None, size_m, 0)?;
    grid.max_order = default_max_order(&grid);
    Ok(grid)
}

/// The `6m^2 - 12m + 8` hull nodes of the `m x m x m` lattice.
pub fn make_cubical_surface(m: usize, size_m: f64) -> Result<SamplingGrid> {
    check_lattice_args(m, size_m)?;
    let x = lattice(m, size_m);
    let face = |i: usize| -> f64 {
        if i == 0 {
            -1.0
        } else if i == m - 1 {
            1.0
        } else {
            0.0
        }
    };
    let mut nodes = Vec::new();
    let mut normals = Vec::new();
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let n = [face(i), face(j), face(k)];
                if n == [0.0; 3] {
                    continue;
                }
                nodes.push([x[i], x[j], x[k]]);
                normals.push(normalize(n));
            }
        }
    }
    let mut grid =
        SamplingGrid::from_parts(GridFamily::CubicalSurface, nodes, Some(normals), size_m, 0)?;
    grid.max_order = default_max_order(&grid);
    Ok(grid)
}

/// `L = (N+2)^2` nodes from the shipped spherical tables on a sphere of
/// diameter `size_m`.
pub fn make_spherical_surface(l: usize, size_m: f64) -> Result<SamplingGrid> {
    let order = design_order(l)
        .ok_or_else(|| invalid_arg!("{l} nodes is not (N+2)^2 for any N >= 0"))?;
    let dirs = sphere_design(l)
        .ok_or_else(|| invalid_arg!("no shipped spherical table with {l} nodes (N <= {MAX_DESIGN_ORDER})"))?;
    if !(size_m.is_finite() && size_m > 0.0) {
        return Err(invalid_arg!("size must be positive, got {size_m}"));
    }
    let nodes = dirs.iter().map(|d| scale(*d, 0.5 * size_m)).collect();
    let normals = dirs.to_vec();
    SamplingGrid::from_parts(
        GridFamily::SphericalSurface,
        nodes,
        Some(normals),
        size_m,
        order,
    )
}

/// Builds a grid of `family` from a total node count.
pub fn make_grid(family: GridFamily, nodes: usize, size_m: f64) -> Result<SamplingGrid> {
    match family {
        GridFamily::CubicalVolume => {
            let m = cube_side(nodes)
                .ok_or_else(|| invalid_arg!("{nodes} is not a cube number m^3 with m >= 2"))?;
            make_cubical_volume(m, size_m)
        }
        GridFamily::CubicalSurface => {
            let m = shell_side(nodes)
                .ok_or_else(|| invalid_arg!("{nodes} is not 6m^2-12m+8 for any m >= 2"))?;
            make_cubical_surface(m, size_m)
        }
        GridFamily::SphericalSurface => make_spherical_surface(nodes, size_m),
    }
}

/// `f_a = N c / (2 pi R)`.
pub fn aliasing_frequency(order: usize, radius_m: f64, c: f64) -> f64 {
    order as f64 * c / (2.0 * std::f64::consts::PI * radius_m)
}

/// Condition-number limit of the fallback order rule.
pub const DEFAULT_COND_THRESHOLD: f64 = 1e4;

/// Highest SH order the grid supports.
///
/// Spherical grids follow `(N+2)^2 = L`. Cubical grids with the listed node
/// counts use the tabulated orders; any other count gets the largest `N`
/// with `(N+1)^2 <= L` whose mode-response matrix at `f_a(N)` has a
/// condition number below [`DEFAULT_COND_THRESHOLD`].
pub fn default_max_order(grid: &SamplingGrid) -> usize {
    default_max_order_with(grid, DEFAULT_COND_THRESHOLD)
}

pub fn default_max_order_with(grid: &SamplingGrid, cond_threshold: f64) -> usize {
    let l = grid.len();
    match (grid.family, l) {
        (GridFamily::SphericalSurface, _) => return design_order(l).unwrap_or(0),
        (GridFamily::CubicalVolume, 216) => return 7,
        (GridFamily::CubicalVolume, 2197) => return 20,
        (GridFamily::CubicalSurface, 98) => return 7,
        (GridFamily::CubicalSurface, 488) => return 17,
        _ => {}
    }
    let mut n = 0;
    while n_channels(n + 1) <= l {
        n += 1;
    }
    while n > 0 {
        // k R = N at the aliasing frequency, whatever the speed of sound.
        let k = n as f64 / grid.radius();
        let g = crate::sht::mode_response(grid, n, k);
        match crate::linalg::condition_number(g.as_ref()) {
            Ok(cond) if cond < cond_threshold => return n,
            _ => n -= 1,
        }
    }
    0
}

/// Node set as hashable integer keys, for set comparisons in tests.
pub fn node_keys(grid: &SamplingGrid, quantum: f64) -> HashSet<[i64; 3]> {
    grid.nodes
        .iter()
        .map(|p| [0, 1, 2].map(|a| (p[a] / quantum).round() as i64))
        .collect()
}

pub use io::{grid_fingerprint, load_grid, save_grid, GRID_FORMAT_VERSION};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_node_counts() {
        assert_eq!(make_cubical_volume(5, 0.14).unwrap().len(), 125);
        assert_eq!(make_cubical_volume(3, 0.14).unwrap().len(), 27);
        assert_eq!(make_cubical_surface(5, 0.14).unwrap().len(), 98);
        assert_eq!(make_cubical_surface(10, 0.14).unwrap().len(), 488);
        assert_eq!(make_spherical_surface(144, 0.14).unwrap().max_order(), 10);
        assert_eq!(make_spherical_surface(25, 0.14).unwrap().max_order(), 3);
    }

    #[test]
    fn lattice_spacing() {
        let g = make_cubical_volume(13, 0.14).unwrap();
        assert_eq!(g.len(), 2197);
        let p = g.nodes();
        let step = crate::geometry::distance(p[0], p[1]);
        assert!((step - 0.14 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn face_centre_normal() {
        let g = make_cubical_surface(5, 0.14).unwrap();
        let i = g
            .nodes()
            .iter()
            .position(|p| (p[0] - 0.07).abs() < 1e-15 && p[1].abs() < 1e-15 && p[2].abs() < 1e-15)
            .unwrap();
        assert_eq!(g.normals().unwrap()[i], [1.0, 0.0, 0.0]);
        // Corner normal is the normalised diagonal.
        let c = g.nodes().iter().position(|p| p.iter().all(|v| (v - 0.07).abs() < 1e-15)).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for v in g.normals().unwrap()[c] {
            assert!((v - s).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(make_cubical_volume(1, 0.14).is_err());
        assert!(make_cubical_surface(1, 0.14).is_err());
        assert!(make_spherical_surface(26, 0.14).is_err());
        assert!(make_spherical_surface(31 * 31, 0.14).is_err());
        assert!(make_grid(GridFamily::CubicalVolume, 26, 0.14).is_err());
    }

    #[test]
    fn aliasing_examples() {
        let fa = aliasing_frequency(10, 0.07, 343.0);
        assert!((fa / 7800.0 - 1.0).abs() < 0.01);
        assert_eq!(aliasing_frequency(0, 0.07, 343.0), 0.0);
        assert!((aliasing_frequency(18, 0.07, 343.0) - 14037.466).abs() < 1e-3);
    }

    #[test]
    fn table_orders() {
        let cv216 = make_cubical_volume(6, 0.14).unwrap();
        assert_eq!(cv216.max_order(), 7);
        assert_eq!(make_cubical_surface(5, 0.14).unwrap().max_order(), 7);
        assert_eq!(make_spherical_surface(400, 0.14).unwrap().max_order(), 18);
    }

    #[test]
    fn fallback_order_is_bounded_by_channel_count() {
        for m in 2..=5 {
            let g = make_cubical_volume(m, 0.14).unwrap();
            assert!(n_channels(g.max_order()) <= g.len());
        }
    }
}
