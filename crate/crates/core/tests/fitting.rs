use auralize_core::dsp::{rfft, FreqAxis};
use auralize_core::geometry::fibonacci_sphere;
use auralize_core::hrtf::{fit_ls, fit_magls, sphere_hrtf, HrtfSet, DEFAULT_EAR_AZIMUTHS, DEFAULT_HEAD_RADIUS};
use auralize_core::math::sh::{n_channels, real_sh};
use auralize_core::SPEED_OF_SOUND;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Set whose responses are exactly order `order` in direction.
fn order_limited_set(order: usize, length: usize, seed: u64) -> (HrtfSet, [Vec<Vec<f64>>; 2]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nch = n_channels(order);
    let coeffs: [Vec<Vec<f64>>; 2] = std::array::from_fn(|_| {
        (0..nch).map(|_| (0..length).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    });
    let directions = fibonacci_sphere(3 * nch + 10);
    let synth = |c: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        directions
            .iter()
            .map(|u| {
                let y = real_sh(order, *u);
                (0..length).map(|t| (0..nch).map(|j| c[j][t] * y[j]).sum()).collect()
            })
            .collect()
    };
    let set = HrtfSet {
        left: synth(&coeffs[0]),
        right: synth(&coeffs[1]),
        directions,
        sample_rate: 48000.0,
        onset_delay_samples: 0.0,
        model: None,
    };
    (set, coeffs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ls_recovers_order_limited_sets(order in 0usize..6, seed in any::<u64>()) {
        let n = 32;
        let (set, coeffs) = order_limited_set(order, n, seed);
        let fit = fit_ls(&set, order, n).unwrap();
        for ear in 0..2 {
            let spectra: Vec<Vec<Complex64>> = coeffs[ear].iter().map(|c| rfft(c, n)).collect();
            for k in 0..=n / 2 {
                for (j, s) in spectra.iter().enumerate() {
                    prop_assert!((fit.coeffs[k][ear][j] - s[k]).norm() < 1e-9 * (1.0 + s[k].norm()));
                }
            }
        }
    }
}

#[test]
fn order_zero_fit_is_the_direction_average_on_a_uniform_set() {
    let (set, _) = order_limited_set(3, 16, 5);
    let fit = fit_ls(&set, 0, 16).unwrap();
    let y0 = real_sh(0, [0.0, 0.0, 1.0])[0];
    let spectra = set.spectra(16).unwrap();
    for k in 0..9 {
        let mean: Complex64 = spectra[0].iter().map(|s| s[k]).sum::<Complex64>() / set.len() as f64;
        // Fibonacci points are only near-uniform, hence the loose bound.
        assert!((fit.coeffs[k][0][0] * y0 - mean).norm() < 0.05 * (1.0 + mean.norm()));
    }
}

fn ls_error(set: &HrtfSet, order: usize, n: usize) -> f64 {
    let fit = fit_ls(set, order, n).unwrap();
    let spectra = set.spectra(n).unwrap();
    let mut e = 0.0;
    for k in 0..=n / 2 {
        for ear in 0..2 {
            for (q, u) in set.directions.iter().enumerate() {
                e += (fit.eval(k, ear, *u) - spectra[ear][q][k]).norm_sqr();
            }
        }
    }
    e
}

#[test]
fn ls_error_does_not_grow_with_order() {
    let dirs = fibonacci_sphere(200);
    let set = sphere_hrtf(DEFAULT_HEAD_RADIUS, DEFAULT_EAR_AZIMUTHS, &dirs, 48000.0, 64, SPEED_OF_SOUND).unwrap();
    let errors: Vec<f64> = (0..8).map(|n| ls_error(&set, n, 64)).collect();
    for w in errors.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{errors:?}");
    }
}

#[test]
fn magls_keeps_magnitude_above_transition() {
    let dirs = fibonacci_sphere(300);
    let set = sphere_hrtf(DEFAULT_HEAD_RADIUS, DEFAULT_EAR_AZIMUTHS, &dirs, 48000.0, 128, SPEED_OF_SOUND).unwrap();
    let n = 128;
    let axis = FreqAxis::new(48000.0, n);
    let ls = fit_ls(&set, 3, n).unwrap();
    let mag = fit_magls(&set, 3, 2000.0, n).unwrap();
    let spectra = set.spectra(n).unwrap();
    let err = |f: &auralize_core::hrtf::HrtfSh, k: usize| -> f64 {
        let mut e = 0.0;
        for ear in 0..2 {
            for (q, u) in set.directions.iter().enumerate() {
                e += (f.eval(k, ear, *u).norm() - spectra[ear][q][k].norm()).powi(2);
            }
        }
        e
    };
    let (mut better, mut total) = (0, 0);
    for k in 0..axis.bins() {
        if axis.freq(k) >= 4000.0 {
            total += 1;
            if err(&mag, k) < err(&ls, k) {
                better += 1;
            }
        }
    }
    assert!(better * 10 >= total * 9, "{better} of {total}");
}
