use auralize_core::dsp::FreqAxis;
use auralize_core::fields::{plane_wave_bins, PlaneWaveSpec};
use auralize_core::geometry::{fibonacci_sphere, from_degrees};
use auralize_core::grids::{make_cubical_volume, make_spherical_surface};
use auralize_core::hrtf::{fit_ls, sphere_hrtf, DEFAULT_EAR_AZIMUTHS, DEFAULT_HEAD_RADIUS};
use auralize_core::linalg::CMat;
use auralize_core::renderers::{binaural_decode, direct_ls_bins, relative_residual, training_responses};
use auralize_core::sht::{analyze, decomposition_matrix, plane_wave_coefficients, RegProfile, ShSignal};
use auralize_core::SPEED_OF_SOUND;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn decoding_a_plane_wave_gives_the_fitted_hrtf() {
    let dirs = fibonacci_sphere(120);
    let set = sphere_hrtf(DEFAULT_HEAD_RADIUS, DEFAULT_EAR_AZIMUTHS, &dirs, 48000.0, 64, SPEED_OF_SOUND).unwrap();
    let order = 5;
    let h = fit_ls(&set, order, 64).unwrap();
    for u in [from_degrees(0.0, 0.0), from_degrees(70.0, 20.0), from_degrees(-135.0, -40.0)] {
        let mut a = ShSignal::zeros(order, h.axis);
        for b in a.bins.iter_mut() {
            *b = plane_wave_coefficients(order, u);
        }
        let out = binaural_decode(&a, &h).unwrap();
        for k in 0..h.axis.bins() {
            for ear in 0..2 {
                let want = h.eval(k, ear, u);
                assert!((out[ear][k] - want).norm() < 1e-10 * (1.0 + want.norm()));
            }
        }
    }
}

#[test]
fn ambisonic_chain_reproduces_the_fit_below_aliasing() {
    let grid = make_spherical_surface(144, 0.14).unwrap();
    let order = 10;
    let n = 256;
    let axis = FreqAxis::new(48000.0, n);
    let dirs = fibonacci_sphere(300);
    let set = sphere_hrtf(DEFAULT_HEAD_RADIUS, DEFAULT_EAR_AZIMUTHS, &dirs, 48000.0, 128, SPEED_OF_SOUND).unwrap();
    let h = fit_ls(&set, order, n).unwrap();
    let d = decomposition_matrix(&grid, order, axis, SPEED_OF_SOUND, &RegProfile::unlimited()).unwrap();
    let u = from_degrees(30.0, 10.0);
    let s = plane_wave_bins(&PlaneWaveSpec::new(u, 1.0).unwrap(), &grid, 48000.0, axis.bins(), SPEED_OF_SOUND).unwrap();
    let a = analyze(&s, &d).unwrap();
    let out = binaural_decode(&a, &h).unwrap();
    let tau = s.predelay_samples as f64 / 48000.0;
    for k in 1..axis.bins() {
        let kr = axis.omega(k) / SPEED_OF_SOUND * grid.radius();
        if !(1.0..=order as f64 / 3.0).contains(&kr) {
            continue;
        }
        let delay = Complex64::from_polar(1.0, -axis.omega(k) * tau);
        for ear in 0..2 {
            let want = h.eval(k, ear, u) * delay;
            assert!((out[ear][k] - want).norm() < 1e-3 * want.norm(), "bin {k} ear {ear}");
        }
    }
}

#[test]
fn direct_fit_recovers_a_realizable_target() {
    let grid = make_cubical_volume(3, 0.14).unwrap();
    let l = grid.len();
    let dirs = fibonacci_sphere(3 * l);
    let axis = FreqAxis::new(48000.0, 32);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth: Vec<CMat> = (0..axis.bins())
        .map(|_| CMat::from_fn(2, l, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    let p = |k: usize| training_responses(&grid, &dirs, axis.omega(k), SPEED_OF_SOUND);
    let h: Vec<CMat> = (0..axis.bins()).map(|k| &truth[k] * &p(k)).collect();
    let w = direct_ls_bins(axis, p, &h, 1e9, &RegProfile::unlimited()).unwrap();
    // Mid-band bins are well conditioned for a 27-node cube.
    for k in 4..axis.bins() - 1 {
        let r = relative_residual(w[k].as_ref(), p(k).as_ref(), h[k].as_ref());
        assert!(r < 1e-6, "bin {k}: {r}");
    }
}

#[test]
fn decomposition_norm_respects_the_floor() {
    let grid = make_spherical_surface(64, 0.14).unwrap();
    let axis = FreqAxis::new(48000.0, 64);
    for range in [10.0, 30.0] {
        let d = decomposition_matrix(&grid, 6, axis, SPEED_OF_SOUND, &RegProfile::constant(range)).unwrap();
        for k in 0..axis.bins() {
            let norm = auralize_core::linalg::spectral_norm(d.matrices[k].as_ref()).unwrap();
            assert!(norm <= d.norm_bound(k) * (1.0 + 1e-9));
            assert!(d.norm_bound(k).is_finite() && d.norm_bound(k) > 0.0);
        }
    }
}
