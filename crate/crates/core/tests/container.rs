use auralize_core::engine::render_offline;
use auralize_core::fields::{plane_wave_ir, PlaneWaveSpec};
use auralize_core::geometry::{fibonacci_sphere, from_degrees};
use auralize_core::grids::make_cubical_surface;
use auralize_core::hrtf::{sphere_hrtf, DEFAULT_EAR_AZIMUTHS, DEFAULT_HEAD_RADIUS};
use auralize_core::renderers::{
    build_ambisonic, build_direct, load_renderer, renderer_from_bytes, renderer_to_bytes, save_renderer,
    AmbisonicOptions, DirectOptions,
};
use auralize_core::sht::RegProfile;
use auralize_core::SPEED_OF_SOUND;

fn small_setup() -> (auralize_core::grids::SamplingGrid, auralize_core::hrtf::HrtfSet) {
    let grid = make_cubical_surface(3, 0.14).unwrap();
    let dirs = fibonacci_sphere(120);
    let set = sphere_hrtf(DEFAULT_HEAD_RADIUS, DEFAULT_EAR_AZIMUTHS, &dirs, 48000.0, 128, SPEED_OF_SOUND).unwrap();
    (grid, set)
}

#[test]
fn direct_renderer_survives_a_file_round_trip() {
    let (grid, set) = small_setup();
    let r = build_direct(&grid, &set, &DirectOptions { taps: 1024, reg: RegProfile::constant(20.0), ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.aur");
    save_renderer(&r, &path).unwrap();
    let back = load_renderer(&path).unwrap();
    assert_eq!(back.fir.data, r.fir.data);
    assert_eq!(back.meta, r.meta);
    assert_eq!(renderer_to_bytes(&back).unwrap(), renderer_to_bytes(&r).unwrap());
}

#[test]
fn ambisonic_renderer_round_trips_and_rejects_corruption() {
    let (grid, set) = small_setup();
    let opts = AmbisonicOptions { order: Some(2), taps: 1024, ..Default::default() };
    let r = build_ambisonic(&grid, &set, &opts).unwrap();
    let bytes = renderer_to_bytes(&r).unwrap();
    let back = renderer_from_bytes(&bytes).unwrap();
    assert_eq!(renderer_to_bytes(&back).unwrap(), bytes);
    assert_eq!(back.decode.as_ref().map(|d| d.len()), r.decode.as_ref().map(|d| d.len()));
    assert!(renderer_from_bytes(&bytes[..bytes.len() - 3]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(renderer_from_bytes(&bad).is_err());
}

#[test]
fn rendering_is_linear() {
    let (grid, set) = small_setup();
    let r = build_direct(&grid, &set, &DirectOptions { taps: 1024, reg: RegProfile::constant(20.0), ..Default::default() }).unwrap();
    let a = plane_wave_ir(&PlaneWaveSpec::new(from_degrees(0.0, 0.0), 1.0).unwrap(), &grid, 48000.0, 256, SPEED_OF_SOUND).unwrap();
    let b = plane_wave_ir(&PlaneWaveSpec::new(from_degrees(120.0, 30.0), 1.0).unwrap(), &grid, 48000.0, 256, SPEED_OF_SOUND).unwrap();
    let mut sum = a.clone();
    let mix = |x: &mut Vec<Vec<f64>>, y: &Vec<Vec<f64>>| {
        for (cx, cy) in x.iter_mut().zip(y) {
            for (vx, vy) in cx.iter_mut().zip(cy) {
                *vx = 0.5 * *vx - 2.0 * vy;
            }
        }
    };
    mix(&mut sum.pressure, &b.pressure);
    mix(sum.gradient.as_mut().unwrap(), b.gradient.as_ref().unwrap());
    let (ya, yb, ys) = (
        render_offline(&r, &a, 128).unwrap(),
        render_offline(&r, &b, 128).unwrap(),
        render_offline(&r, &sum, 128).unwrap(),
    );
    for ear in 0..2 {
        for i in 0..ys[ear].len() {
            assert!((ys[ear][i] - (0.5 * ya[ear][i] - 2.0 * yb[ear][i])).abs() < 1e-9);
        }
    }
}
