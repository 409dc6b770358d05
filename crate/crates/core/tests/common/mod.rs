#![allow(dead_code)]

use std::path::PathBuf;

use nvtrace::config::{parse_config, ResolvedRun, SceneConfig};
use nvtrace::detect::{LensDetector, Side};
use nvtrace::geometry::{SurfacePrimitive, Vec3};
use nvtrace::physics::Coating;
use nvtrace::scene::{MaterialTable, Scene, SurfaceSpec};
use nvtrace::tracer::Detectors;

pub fn shipped_scene_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes/paper_default.scene")
}

pub fn shipped_config() -> SceneConfig {
    parse_config(&std::fs::read_to_string(shipped_scene_path()).unwrap()).unwrap()
}

pub fn shipped_run() -> ResolvedRun {
    shipped_config().resolve().unwrap()
}

/// Default lenses on both sides, source at focus.
pub fn lenses(centroid_z: f64) -> Detectors {
    let lens = LensDetector::default();
    Detectors { front: lens.resolve(Side::Front, centroid_z), back: lens.resolve(Side::Back, centroid_z) }
}

/// Square diamond slab spanning `z` in `[0, thickness]`, side `2 * half`.
pub fn slab(thickness: f64, half: f64) -> Scene {
    let corners = |z: f64| {
        vec![Vec3::new(-half, -half, z), Vec3::new(half, -half, z), Vec3::new(half, half, z), Vec3::new(-half, half, z)]
    };
    let face = |name: &str, vertices: Vec<Vec3>| SurfaceSpec {
        name: name.into(),
        front: "air".into(),
        back: "diamond".into(),
        coating: Coating::Bare,
        shape: SurfacePrimitive::ConvexPolygon { vertices },
    };
    let mut bottom = corners(0.0);
    bottom.reverse();
    let mut specs = vec![face("TOP", corners(thickness)), face("BOTTOM", bottom)];
    for (i, d) in [Vec3::X, Vec3::Y, -Vec3::X, -Vec3::Y].into_iter().enumerate() {
        let t = Vec3::Z.cross(d);
        let mut vertices = vec![
            d * half - t * half,
            d * half + t * half,
            d * half + t * half + Vec3::Z * thickness,
            d * half - t * half + Vec3::Z * thickness,
        ];
        if (vertices[1] - vertices[0]).cross(vertices[2] - vertices[1]).dot(d) < 0.0 {
            vertices.reverse();
        }
        specs.push(face(&format!("SIDE_{i}"), vertices));
    }
    Scene::new(&MaterialTable::default(), &specs).unwrap()
}

/// Canonical emitter line centred in a slab of the given thickness.
pub fn slab_source(thickness: f64, rays_per_source: u32) -> nvtrace::sources::SourceConfig {
    nvtrace::sources::SourceConfig::PointLine {
        count: 3,
        spacing: 0.030,
        center: Some(Vec3::new(0.0, 0.0, thickness / 2.0)),
        axis: Vec3::Z,
        rays_per_source,
    }
}
