//! Regenerates `data/sphere_designs.bin`, the spherical node tables shipped
//! with the library.
//!
//! For every order `N` in `0..=28` the table holds `L = (N+2)^2` unit
//! vectors. Points start on a spherical Fibonacci lattice, are spread by a
//! few hundred steps of Riesz-energy descent, and are then moved by
//! minimum-norm Gauss-Newton steps until equal-weight quadrature integrates
//! every harmonic of degree `1..=N` to zero.
//!
//! Run with `cargo run --release -p auralize-core --example gen_sphere_designs`.
//!
//! File layout (little endian): `b"SPHD"`, `u32` table count, then per table
//! `u32 N`, `u32 L`, and `L x 3` `f64` coordinates.

use std::io::Write;

use auralize_core::geometry::{dot, fibonacci_sphere, normalize, scale, sub, Vec3};
use auralize_core::math::sh::{n_channels, real_sh, solid_sh_with_gradient};
use faer::Mat;

const MAX_ORDER: usize = 28;

fn repel(points: &mut [Vec3], steps: usize) {
    let n = points.len();
    let mut step = 0.2 / (n as f64).sqrt();
    for _ in 0..steps {
        let mut forces = vec![[0.0; 3]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = sub(points[i], points[j]);
                let r2 = dot(d, d).max(1e-18);
                let f = scale(d, 1.0 / (r2 * r2.sqrt()));
                for a in 0..3 {
                    forces[i][a] += f[a];
                    forces[j][a] -= f[a];
                }
            }
        }
        let fmax = forces
            .iter()
            .zip(points.iter())
            .map(|(f, p)| {
                let t = sub(*f, scale(*p, dot(*f, *p)));
                dot(t, t).sqrt()
            })
            .fold(0.0f64, f64::max);
        for (p, f) in points.iter_mut().zip(&forces) {
            let t = sub(*f, scale(*p, dot(*f, *p)));
            *p = normalize([
                p[0] + step * t[0] / fmax,
                p[1] + step * t[1] / fmax,
                p[2] + step * t[2] / fmax,
            ]);
        }
        step *= 0.99;
    }
}

fn residual(points: &[Vec3], order: usize) -> Vec<f64> {
    let nch = n_channels(order);
    let mut r = vec![0.0; nch - 1];
    for p in points {
        let y = real_sh(order, *p);
        for (ri, yi) in r.iter_mut().zip(&y[1..]) {
            *ri += yi;
        }
    }
    r
}

fn tangent_basis(p: Vec3) -> (Vec3, Vec3) {
    let helper = if p[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
    let t1 = normalize(sub(helper, scale(p, dot(helper, p))));
    let t2 = [
        p[1] * t1[2] - p[2] * t1[1],
        p[2] * t1[0] - p[0] * t1[2],
        p[0] * t1[1] - p[1] * t1[0],
    ];
    (t1, t2)
}

fn correct(points: &mut [Vec3], order: usize) -> f64 {
    let l = points.len();
    let m = n_channels(order) - 1;
    for _ in 0..50 {
        let r = residual(points, order);
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn < 1e-13 {
            return rn;
        }
        let bases: Vec<(Vec3, Vec3)> = points.iter().map(|p| tangent_basis(*p)).collect();
        let mut jac = Mat::<f64>::zeros(m, 2 * l);
        for (i, p) in points.iter().enumerate() {
            let (_, grad) = solid_sh_with_gradient(order, *p);
            let (t1, t2) = bases[i];
            for c in 0..m {
                jac[(c, 2 * i)] = dot(grad[c + 1], t1);
                jac[(c, 2 * i + 1)] = dot(grad[c + 1], t2);
            }
        }
        let svd = jac.thin_svd().expect("svd");
        let s: Vec<f64> = (0..m).map(|i| svd.S()[i]).collect();
        let smax = s[0];
        // delta = -V S^-1 U^T r
        let u = svd.U();
        let v = svd.V();
        let mut coef = vec![0.0; m];
        for k in 0..m {
            if s[k] > 1e-10 * smax {
                let mut acc = 0.0;
                for c in 0..m {
                    acc += u[(c, k)] * r[c];
                }
                coef[k] = -acc / s[k];
            }
        }
        for (i, p) in points.iter_mut().enumerate() {
            let (t1, t2) = bases[i];
            let mut a = 0.0;
            let mut b = 0.0;
            for k in 0..m {
                a += v[(2 * i, k)] * coef[k];
                b += v[(2 * i + 1, k)] * coef[k];
            }
            *p = normalize([
                p[0] + a * t1[0] + b * t2[0],
                p[1] + a * t1[1] + b * t2[1],
                p[2] + a * t1[2] + b * t2[2],
            ]);
        }
    }
    let r = residual(points, order);
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn main() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sphere_designs.bin");
    let mut buf = Vec::new();
    buf.extend_from_slice(b"SPHD");
    buf.extend_from_slice(&((MAX_ORDER + 1) as u32).to_le_bytes());
    for order in 0..=MAX_ORDER {
        let l = (order + 2) * (order + 2);
        let mut pts = fibonacci_sphere(l);
        repel(&mut pts, 300);
        let res = correct(&mut pts, order);
        let min_dist = (0..l)
            .flat_map(|i| (i + 1..l).map(move |j| (i, j)))
            .map(|(i, j)| {
                let d = sub(pts[i], pts[j]);
                dot(d, d).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        eprintln!("N={order:2} L={l:4} residual={res:.2e} min_dist={min_dist:.4}");
        assert!(res < 1e-10, "order {order} did not converge");
        buf.extend_from_slice(&(order as u32).to_le_bytes());
        buf.extend_from_slice(&(l as u32).to_le_bytes());
        for p in &pts {
            for c in p {
                buf.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::File::create(&path).unwrap().write_all(&buf).unwrap();
    eprintln!("wrote {}", path.display());
}
