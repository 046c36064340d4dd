//! Small 3-vector helpers and direction conventions.
//!
//! Head-related coordinates: `x` points to the front, `y` to the left, `z`
//! up. Azimuth is measured from `+x` towards `+y`, elevation from the
//! horizontal plane towards `+z`. Angles are radians internally.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// Unit vector for `(azimuth, elevation)` in radians.
pub fn from_spherical(azimuth: f64, elevation: f64) -> Vec3 {
    let (sa, ca) = azimuth.sin_cos();
    let (se, ce) = elevation.sin_cos();
    [ce * ca, ce * sa, se]
}

/// `(azimuth, elevation)` in radians of a non-zero vector.
pub fn to_spherical(v: Vec3) -> (f64, f64) {
    let r = norm(v);
    (v[1].atan2(v[0]), (v[2] / r).clamp(-1.0, 1.0).asin())
}

pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64) -> Vec3 {
    from_spherical(azimuth_deg.to_radians(), elevation_deg.to_radians())
}

/// Near-uniform spherical Fibonacci point set with `n` points.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, o) in row.iter_mut().enumerate() {
            *o = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

/// Rotation `Rz(yaw) * Ry(pitch) * Rx(roll)`: roll about `x` first, then
/// pitch about `y`, then yaw about `z`. Positive yaw turns `+x` towards `+y`.
pub fn rotation_matrix(yaw: f64, pitch: f64, roll: f64) -> Mat3 {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    let rz = [[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]];
    let ry = [[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]];
    let rx = [[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]];
    mat_mul(&rz, &mat_mul(&ry, &rx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spherical_round_trip() {
        for &(az, el) in &[(0.0, 0.0), (1.2, -0.4), (-2.9, 1.3)] {
            let (a, e) = to_spherical(from_spherical(az, el));
            assert!((a - az).abs() < 1e-12 && (e - el).abs() < 1e-12);
        }
        let left = from_degrees(90.0, 0.0);
        assert!((left[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fibonacci_points_are_unit_and_balanced() {
        let pts = fibonacci_sphere(2702);
        let mut centroid = [0.0; 3];
        for p in &pts {
            assert!((norm(*p) - 1.0).abs() < 1e-12);
            centroid = add(centroid, *p);
        }
        assert!(norm(centroid) / (pts.len() as f64) < 1e-3);
    }

    #[test]
    fn yaw_turns_front_to_left() {
        let r = rotation_matrix(std::f64::consts::FRAC_PI_2, 0.0, 0.0);
        let v = mat_vec(&r, [1.0, 0.0, 0.0]);
        assert!((v[1] - 1.0).abs() < 1e-15 && v[0].abs() < 1e-15);
    }
}
