//! Spherical Bessel functions of the first and second kind.
//!
//! `j_n` uses upward recurrence when the argument exceeds the highest order
//! requested and Miller's downward recurrence otherwise. `y_n` is always
//! computed upward, which is the stable direction for it.

/// `j_0(x) ..= j_nmax(x)` for `x >= 0`.
pub fn sph_jn(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    sph_jn_into(x, &mut out);
    out
}

/// Fills `out[n] = j_n(x)` for `n < out.len()`.
pub fn sph_jn_into(x: f64, out: &mut [f64]) {
    assert!(x >= 0.0, "sph_jn: negative argument {x}");
    let Some(nmax) = out.len().checked_sub(1) else {
        return;
    };
    if x == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    if x < 1e-4 {
        // Two-term series; the downward recurrence would need thousands of
        // rescalings to reach these magnitudes.
        let x2 = x * x;
        let mut lead = 1.0;
        for (n, o) in out.iter_mut().enumerate() {
            if n > 0 {
                lead *= x / (2 * n + 1) as f64;
            }
            *o = lead * (1.0 - x2 / (2.0 * (2 * n + 3) as f64));
        }
        return;
    }

    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;

    if x > nmax as f64 {
        out[0] = j0;
        if nmax >= 1 {
            out[1] = j1;
        }
        for n in 1..nmax {
            out[n + 1] = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
        }
        return;
    }

    let start = nmax + 40 + (2.0 * x.cbrt()) as usize;
    let mut f_next = 0.0; // f_{n+1}
    let mut f_cur = 1e-300; // f_n
    out.fill(0.0);
    for n in (1..=start).rev() {
        let f_prev = (2 * n + 1) as f64 / x * f_cur - f_next;
        f_next = f_cur;
        f_cur = f_prev;
        if n - 1 <= nmax {
            out[n - 1] = f_cur;
        }
        if f_cur.abs() > 1e250 {
            f_cur *= 1e-250;
            f_next *= 1e-250;
            for o in out.iter_mut().skip(n - 1) {
                *o *= 1e-250;
            }
        }
    }
    // `f_next` now holds the unnormalised j_1.
    let scale = if j0.abs() >= j1.abs() {
        j0 / out[0]
    } else {
        j1 / f_next
    };
    for o in out.iter_mut() {
        *o *= scale;
    }
}

/// `y_0(x) ..= y_nmax(x)` for `x > 0`. Large orders overflow to `-inf`.
pub fn sph_yn(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0, "sph_yn: non-positive argument {x}");
    let mut out = vec![0.0; nmax + 1];
    let (s, c) = x.sin_cos();
    out[0] = -c / x;
    if nmax >= 1 {
        out[1] = -c / (x * x) - s / x;
    }
    for n in 1..nmax {
        out[n + 1] = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
    }
    out
}

/// Derivatives `f_n'(x)` of a spherical Bessel sequence `f_0..=f_M` of
/// either kind, via `f_0' = -f_1` and `f_n' = f_{n-1} - (n+1)/x f_n`.
/// Needs at least two orders.
pub fn sph_derivative(values: &[f64], x: f64) -> Vec<f64> {
    let m = values.len();
    assert!(m >= 2, "sph_derivative needs orders 0 and 1");
    let mut d = vec![0.0; m];
    if x == 0.0 {
        // Only j_1 has a non-zero slope at the origin; y_n is singular there.
        d[1] = 1.0 / 3.0;
        return d;
    }
    d[0] = -values[1];
    for n in 1..m {
        d[n] = values[n - 1] - (n + 1) as f64 / x * values[n];
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series oracle, accurate for x well below the order.
    fn series_jn(n: usize, x: f64) -> f64 {
        let mut dfact = 1.0;
        for k in 0..=n {
            dfact *= (2 * k + 1) as f64;
        }
        let lead = x.powi(n as i32) / dfact;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            term *= -x * x / (2.0 * k as f64 * (2 * n + 2 * k + 1) as f64);
            sum += term;
        }
        lead * sum
    }

    #[test]
    fn closed_forms_low_orders() {
        for &x in &[0.3, 1.0, 2.5, 7.0, 19.0, 41.0] {
            let j = sph_jn(3, x);
            let (s, c) = (x.sin(), x.cos());
            let j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
            assert!((j[0] - s / x).abs() < 1e-14);
            assert!((j[1] - (s / (x * x) - c / x)).abs() < 1e-14);
            assert!((j[2] - j2).abs() < 1e-13, "x={x}: {} vs {}", j[2], j2);
        }
    }

    #[test]
    fn matches_series_at_small_argument() {
        for &x in &[1e-6, 1e-3, 0.05, 0.5, 1.5] {
            let j = sph_jn(30, x);
            for n in 0..=30 {
                let s = series_jn(n, x);
                let rel = (j[n] - s).abs() / s.abs().max(1e-300);
                assert!(rel < 1e-12, "n={n} x={x}: {} vs {s} (rel {rel})", j[n]);
            }
        }
    }

    #[test]
    fn upward_and_downward_agree_at_switch() {
        // x just above and below nmax exercise both branches.
        for &(nmax, x) in &[(20usize, 20.5f64), (20, 19.5), (60, 60.01), (60, 59.99)] {
            let a = sph_jn(nmax, x);
            let b = sph_jn(nmax + 25, x);
            for n in 0..=nmax {
                assert!((a[n] - b[n]).abs() < 1e-13 * (1.0 + b[n].abs()), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn wronskian_identity() {
        // j_n y_{n-1} - j_{n-1} y_n = 1/x^2
        for &x in &[0.7, 3.0, 12.0, 38.0] {
            let j = sph_jn(25, x);
            let y = sph_yn(25, x);
            for n in 1..=25 {
                let w = j[n] * y[n - 1] - j[n - 1] * y[n];
                let expected = 1.0 / (x * x);
                let scale = (j[n] * y[n - 1]).abs().max(expected);
                assert!((w - expected).abs() < 1e-11 * scale, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for &x in &[0.4, 2.0, 9.0, 30.0] {
            let h = 1e-6;
            let jp = sph_jn(21, x + h);
            let jm = sph_jn(21, x - h);
            let d = sph_derivative(&sph_jn(20, x), x);
            for n in 0..=20 {
                let fd = (jp[n] - jm[n]) / (2.0 * h);
                assert!((fd - d[n]).abs() < 1e-8, "n={n} x={x}: {fd} vs {}", d[n]);
            }
        }
        let d0 = sph_derivative(&sph_jn(3, 0.0), 0.0);
        assert_eq!(d0, vec![0.0, 1.0 / 3.0, 0.0, 0.0]);
    }
}
