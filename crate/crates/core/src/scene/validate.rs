//! Watertightness and media-consistency audit by random probe rays.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Crossing, Scene};
use crate::geometry::{SurfacePrimitive, Vec3};
use crate::physics::Coating;
use crate::sources::isotropic_direction;

pub const DEFAULT_PROBES: usize = 10_000;
const MAX_CROSSINGS: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationFailure {
    /// Same medium on both sides of an uncoated surface.
    NoOpInterface { surface: String },
    /// Consecutive crossings disagree about the medium between them: a gap
    /// or a flipped surface lies between these two faces.
    MediaConflict { first: String, second: String },
    /// After its last crossing a probe is still inside a solid: the region
    /// past `surface` is not closed.
    Leak { surface: String, medium: String },
    /// A probe crossed more surfaces than any closed scene allows.
    Runaway { surface: String },
}

impl std::fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidationFailure::NoOpInterface { surface } => write!(f, "{surface}: no-op interface"),
            ValidationFailure::MediaConflict { first, second } => {
                write!(f, "{first} / {second}: inconsistent media between these surfaces (gap or flipped face)")
            }
            ValidationFailure::Leak { surface, medium } => {
                write!(f, "{surface}: probe leaves the scene still inside `{medium}` (open region beyond this face)")
            }
            ValidationFailure::Runaway { surface } => write!(f, "{surface}: probe never reached the enclosure"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub probes: usize,
    /// Each distinct failure with the number of probes that observed it.
    pub failures: Vec<(ValidationFailure, usize)>,
}

impl ValidationReport {
    /// Surface names involved in any failure, sorted and deduplicated.
    pub fn offending_surfaces(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .failures
            .iter()
            .flat_map(|(f, _)| match f {
                ValidationFailure::NoOpInterface { surface }
                | ValidationFailure::Leak { surface, .. }
                | ValidationFailure::Runaway { surface } => vec![surface.clone()],
                ValidationFailure::MediaConflict { first, second } => vec![first.clone(), second.clone()],
            })
            .collect();
        names.sort();
        names.dedup();
        names
    }
}

/// Audit with the default probe count.
pub fn validate(scene: &Scene, seed: u64) -> ValidationReport {
    validate_with(scene, DEFAULT_PROBES, seed)
}

/// Fire `probes` rays from points near randomly chosen surfaces in random
/// directions, checking every crossing chain for consistent media and an
/// ambient exit. Each probe point is also checked from the opposite
/// direction so both rays agree on the medium at the start.
pub fn validate_with(scene: &Scene, probes: usize, seed: u64) -> ValidationReport {
    let mut found: BTreeMap<ValidationFailure, usize> = BTreeMap::new();
    let name = |s: crate::geometry::SurfaceId| scene.surface(s).name.clone();

    for s in scene.surfaces() {
        if s.front_medium == s.back_medium && s.coating != Coating::IdealMirror {
            *found.entry(ValidationFailure::NoOpInterface { surface: s.name.clone() }).or_default() += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_surf = scene.surfaces().len();
    for _ in 0..probes {
        let surface = &scene.surfaces()[rng.random_range(0..n_surf)];
        let on = sample_point(surface.primitive.spec(), &mut rng);
        let offset = rng.random_range(-0.05..0.05) * (1.0 + on.norm() * 0.01);
        let normal = surface.primitive.geometric_normal(on);
        let origin = on + normal * offset;
        let dir = isotropic_direction(&mut rng);

        let mut starts = Vec::with_capacity(2);
        for d in [dir, -dir] {
            match scene.crossings(origin, d, MAX_CROSSINGS) {
                None => {
                    *found.entry(ValidationFailure::Runaway { surface: surface.name.clone() }).or_default() += 1;
                }
                Some(chain) => {
                    if let Some(f) = audit_chain(scene, &chain, &name) {
                        *found.entry(f).or_default() += 1;
                    } else {
                        let start =
                            chain.first().map(|c| (c.incident, Some(c.surface))).unwrap_or((scene.ambient(), None));
                        starts.push(start);
                    }
                }
            }
        }
        if let [(m1, s1), (m2, s2)] = starts[..] {
            if m1 != m2 {
                let a = s1.map(name).unwrap_or_else(|| "<enclosure>".into());
                let b = s2.map(name).unwrap_or_else(|| "<enclosure>".into());
                let (first, second) = if a <= b { (a, b) } else { (b, a) };
                *found.entry(ValidationFailure::MediaConflict { first, second }).or_default() += 1;
            }
        }
    }

    let failures: Vec<_> = found.into_iter().collect();
    ValidationReport { passed: failures.is_empty(), probes, failures }
}

fn audit_chain(
    scene: &Scene,
    chain: &[Crossing],
    name: &impl Fn(crate::geometry::SurfaceId) -> String,
) -> Option<ValidationFailure> {
    for w in chain.windows(2) {
        if w[0].transmitted != w[1].incident {
            return Some(ValidationFailure::MediaConflict { first: name(w[0].surface), second: name(w[1].surface) });
        }
    }
    match chain.last() {
        Some(last) if last.transmitted != scene.ambient() => Some(ValidationFailure::Leak {
            surface: name(last.surface),
            medium: scene.material(last.transmitted).name.clone(),
        }),
        _ => None,
    }
}

/// Roughly area-uniform point on a primitive. Used only for probing.
fn sample_point<R: Rng + ?Sized>(prim: &SurfacePrimitive, rng: &mut R) -> Vec3 {
    match prim {
        SurfacePrimitive::ConvexPolygon { vertices } => {
            // fan triangle weighted by area
            let v0 = vertices[0];
            let areas: Vec<f64> =
                (1..vertices.len() - 1).map(|i| (vertices[i] - v0).cross(vertices[i + 1] - v0).norm()).collect();
            let total: f64 = areas.iter().sum();
            let mut pick = rng.random::<f64>() * total;
            let mut i = 0;
            while i + 1 < areas.len() && pick > areas[i] {
                pick -= areas[i];
                i += 1;
            }
            let (mut u, mut v) = (rng.random::<f64>(), rng.random::<f64>());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            v0 + (vertices[i + 1] - v0) * u + (vertices[i + 2] - v0) * v
        }
        SurfacePrimitive::Disk { center, axis, r_inner, r_outer, .. } => {
            let axis = axis.normalized();
            let e1 = axis.any_perpendicular();
            let e2 = axis.cross(e1);
            let r = (r_inner * r_inner + rng.random::<f64>() * (r_outer * r_outer - r_inner * r_inner)).sqrt();
            let phi = TAU * rng.random::<f64>();
            *center + e1 * (r * phi.cos()) + e2 * (r * phi.sin())
        }
        SurfacePrimitive::ConeLateral { apex, axis, half_angle, z_min, z_max } => {
            let axis = axis.normalized();
            let e1 = axis.any_perpendicular();
            let e2 = axis.cross(e1);
            let h = (z_min * z_min + rng.random::<f64>() * (z_max * z_max - z_min * z_min)).sqrt();
            let r = h * half_angle.tan();
            let phi = TAU * rng.random::<f64>();
            *apex + axis * h + e1 * (r * phi.cos()) + e2 * (r * phi.sin())
        }
        SurfacePrimitive::SphericalCap { center, radius, axis, cap_half_angle } => {
            let axis = axis.normalized();
            let e1 = axis.any_perpendicular();
            let e2 = axis.cross(e1);
            let c = 1.0 - rng.random::<f64>() * (1.0 - cap_half_angle.cos());
            let s = (1.0 - c * c).max(0.0).sqrt();
            let phi = TAU * rng.random::<f64>();
            *center + (axis * c + e1 * (s * phi.cos()) + e2 * (s * phi.sin())) * *radius
        }
    }
}
