use std::f64::consts::{PI, TAU};

use nvtrace::geometry::Vec3;
use nvtrace::scene::{build_assembly, AssemblyParams};
use nvtrace::sources::{canonical_source, isotropic_direction, sample_emission, SourceConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Upper 0.1% point of the chi-square distribution with 99 degrees of freedom.
const CHI2_99_P001: f64 = 148.230_359_165_101_7;

#[test]
fn directions_pass_equal_solid_angle_chi_square() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 1_000_000;
    let mut bins = [0u32; 100];
    for _ in 0..n {
        let d = isotropic_direction(&mut rng);
        // equal z-bands on the sphere have equal area (Archimedes)
        let band = (((d.z + 1.0) / 2.0 * 10.0) as usize).min(9);
        let phi = d.y.atan2(d.x).rem_euclid(TAU);
        let sector = ((phi / TAU * 10.0) as usize).min(9);
        bins[band * 10 + sector] += 1;
    }
    let expected = n as f64 / 100.0;
    let chi2: f64 = bins.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < CHI2_99_P001, "chi-square {chi2}");
}

#[test]
fn cap_fraction_and_power_bookkeeping() {
    let scene = build_assembly(&AssemblyParams::default()).unwrap();
    let src = canonical_source().resolve(&scene).unwrap();
    assert_eq!(src.total_rays(), 6000);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rays: Vec<_> = sample_emission(&src, &mut rng).collect();
    assert_eq!(rays.len(), 6000);
    assert!(rays.iter().all(|r| r.power == 1.0 / 6000.0));
    let total: f64 = rays.iter().map(|r| r.power).sum();
    assert!((total - 1.0).abs() < 1e-12);
    // three distinct emitters, 2000 rays each, 30 µm apart on the axis
    let mut zs: Vec<f64> = rays.iter().map(|r| r.origin.z).collect();
    zs.dedup();
    assert_eq!(zs.len(), 3);
    assert!((zs[1] - zs[0] - 0.030).abs() < 1e-12 && (zs[2] - zs[1] - 0.030).abs() < 1e-12);

    let n = 100_000;
    let p = (1.0 - (PI / 4.0).cos()) / 2.0;
    let hits = (0..n).filter(|_| isotropic_direction(&mut rng).z > (PI / 4.0).cos()).count();
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((hits as f64 / n as f64 - p).abs() < 3.0 * sigma);
    assert!((p - 0.14645).abs() < 1e-5);
}

#[test]
fn cylinder_source_spreads_rays_over_its_volume() {
    let scene = build_assembly(&AssemblyParams::default()).unwrap();
    let cfg = SourceConfig::Cylinder { radius: 0.02, length: 0.08, center: None, axis: Vec3::Z, total_rays: 5000 };
    let src = cfg.resolve(&scene).unwrap();
    let c = src.centroid();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rays: Vec<_> = sample_emission(&src, &mut rng).collect();
    let mean = rays.iter().fold(Vec3::ZERO, |a, r| a + r.origin) / rays.len() as f64;
    assert!((mean - c).norm() < 2e-3);
    assert!(rays.iter().all(|r| {
        let w = r.origin - c;
        (w.x * w.x + w.y * w.y).sqrt() <= 0.02 + 1e-12 && w.z.abs() <= 0.04 + 1e-12
    }));
}
