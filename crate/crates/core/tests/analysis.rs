mod common;

use nvtrace::analysis::{
    coating_gain, evaluate, optimize, shot_noise_gain, sweep, FreeParam, Objective, OptimizeSpec, RunMetrics, SweepSpec,
};
use nvtrace::config::SceneConfig;
use nvtrace::physics::Coating;
use nvtrace::scene::{build_assembly, faces, AssemblyParams};
use nvtrace::sources::canonical_source;
use nvtrace::tracer::{run, RunOptions, TraceLimits};
use proptest::prelude::*;

use common::{lenses, shipped_config, slab, slab_source};

fn small(rays: u32) -> SceneConfig {
    let mut cfg = shipped_config();
    cfg.sources = cfg.sources.with_rays(rays);
    cfg
}

#[test]
fn sweep_gives_one_row_per_value() {
    let spec = SweepSpec { parameter: "back_cap_radius".into(), values: vec![2.0, 2.5, 3.0, 4.0, 5.0] };
    let rows = sweep(&small(60), &spec).unwrap();
    assert_eq!(rows.len(), 5);
    for (row, v) in rows.iter().zip(&spec.values) {
        assert_eq!(row.value, *v);
        let m = row.metrics.as_ref().expect("row traced");
        assert!(m.back_collected > 0.0 && m.front_collected > 0.0);
        assert!(m.ratio.is_some());
    }
}

#[test]
fn sweep_row_at_45_degrees_equals_the_default_run() {
    let cfg = small(100);
    let spec = SweepSpec { parameter: "anvil_opening_half_angle".into(), values: vec![40.0, 45.0, 50.0] };
    let rows = sweep(&cfg, &spec).unwrap();
    let r = cfg.resolve().unwrap();
    let reference = RunMetrics::from_report(&run(&r.scene, &r.source, &r.detectors, &r.limits, r.options).unwrap());
    assert_eq!(rows[1].metrics.as_ref().unwrap(), &reference);
    assert_ne!(rows[0].metrics.as_ref().unwrap(), &reference);
}

#[test]
fn bigger_photodiodes_never_collect_less() {
    // a photodiode at a fixed plane behind the lens, so its size matters
    let cfg = small(100).with_param("detectors.back.detector_plane_z", 40.0).unwrap();
    let values = vec![0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 9.8, 20.0, 100.0, 1e4];
    let spec = SweepSpec { parameter: "detectors.back.detector_active_diameter".into(), values };
    let rows = sweep(&cfg, &spec).unwrap();
    let back: Vec<f64> = rows.iter().map(|r| r.metrics.as_ref().unwrap().back_collected).collect();
    assert!(back.windows(2).all(|w| w[1] >= w[0]), "{back:?}");
    assert!(back.last().unwrap() > back.first().unwrap());
}

#[test]
fn identical_values_give_identical_rows() {
    let spec = SweepSpec { parameter: "anvil_height".into(), values: vec![1.7; 3] };
    let rows = sweep(&small(40), &spec).unwrap();
    assert_eq!(rows[0], rows[1]);
    assert_eq!(rows[1], rows[2]);
}

#[test]
fn failing_points_are_recorded_and_the_sweep_continues() {
    let spec = SweepSpec { parameter: "anvil_height".into(), values: vec![1.5, -1.0, 2.0] };
    let rows = sweep(&small(20), &spec).unwrap();
    assert!(rows[0].metrics.is_some() && rows[2].metrics.is_some());
    assert!(rows[1].metrics.is_none());
    assert!(rows[1].error.as_ref().unwrap().contains("anvil_height"));
}

#[test]
fn optimize_is_a_deterministic_function_of_its_inputs() {
    let spec = OptimizeSpec {
        objective: Objective::BackCollected,
        params: vec![FreeParam { name: "anvil_height".into(), lower: 1.0, upper: 3.0 }],
        budget: 8,
        start: None,
    };
    let a = optimize(&small(20), &spec).unwrap();
    let b = optimize(&small(20), &spec).unwrap();
    assert_eq!(a, b);
    assert!(a.evaluations <= 10);
    let best = evaluate(&small(20), &[("anvil_height", a.best_params[0])]).unwrap();
    assert_eq!(Objective::BackCollected.of(&best).unwrap(), a.best_objective);
}

#[test]
fn coating_gain_identity_and_geometry_check() {
    let scene = build_assembly(&AssemblyParams::default()).unwrap();
    let src = canonical_source().with_rays(100).resolve(&scene).unwrap();
    let det = lenses(src.centroid().z);
    let opts = RunOptions { seed: 42, ..Default::default() };
    let limits = TraceLimits::default();
    assert_eq!(coating_gain(&scene, &scene, &src, &det, &limits, opts).unwrap(), 1.0);
    let other = build_assembly(&AssemblyParams { anvil_height: 2.5, ..AssemblyParams::default() }).unwrap();
    assert!(coating_gain(&scene, &other, &src, &det, &limits, opts).is_err());
    let coated = scene.with_coating(faces::ANVIL_BACK, Coating::IdealAntireflective).unwrap();
    assert!(coating_gain(&scene, &coated, &src, &det, &limits, opts).is_ok());
}

#[test]
fn antireflective_convex_solid_respects_the_emission_bound() {
    let base = slab(0.2, 0.5);
    let mut coated = base.clone();
    for name in ["TOP", "BOTTOM", "SIDE_0", "SIDE_1", "SIDE_2", "SIDE_3"] {
        coated = coated.with_coating(name, Coating::IdealAntireflective).unwrap();
    }
    let src = slab_source(0.2, 500).resolve(&base).unwrap();
    let det = lenses(src.centroid().z);
    let limits = TraceLimits { roulette_threshold: 0.0, max_generation: 200, ..TraceLimits::default() };
    let opts = RunOptions { seed: 5, ..Default::default() };
    let gain = coating_gain(&base, &coated, &src, &det, &limits, opts).unwrap();
    let b = run(&base, &src, &det, &limits, opts).unwrap();
    let c = run(&coated, &src, &det, &limits, opts).unwrap();
    assert_eq!(c.killed_power, 0.0);
    // a box keeps some totally reflected modes forever; they end at the cap
    assert!((c.exited_power + c.capped_power - 1.0).abs() < 1e-12);
    assert!(gain > 0.0 && gain <= 1.0 / b.tally.back.collected_power);
    assert!(c.tally.back.collected_power <= 1.0);
}

proptest! {
    #[test]
    fn shot_noise_gain_is_multiplicative(a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
        let lhs = shot_noise_gain(a * b);
        let rhs = shot_noise_gain(a) * shot_noise_gain(b);
        prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * lhs);
    }
}
