//! Isotropic fluorescence emitters.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Ray, Vec3};
use crate::physics::MaterialId;
use crate::scene::Scene;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SourceError {
    #[error("source `{field}` must be positive")]
    NonPositive { field: &'static str },
    #[error("source has no centre and the scene has no assembly to default it from")]
    NoCenter,
    #[error("emitter at ({:.4}, {:.4}, {:.4}) is not inside a solid", .0.x, .0.y, .0.z)]
    Outside(Vec3),
    #[error("emitters span more than one medium")]
    MixedMedia,
}

/// Emitter geometry. `center` defaults to the assembly's emission centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    /// `count` point emitters spaced `spacing` mm apart along `axis`,
    /// symmetric about `center`.
    PointLine {
        count: u32,
        spacing: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec3>,
        #[serde(default = "default_axis")]
        axis: Vec3,
        rays_per_source: u32,
    },
    /// Emitters uniform in a cylinder of `radius` and `length` along `axis`.
    Cylinder {
        radius: f64,
        length: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec3>,
        #[serde(default = "default_axis")]
        axis: Vec3,
        total_rays: u32,
    },
}

fn default_axis() -> Vec3 {
    Vec3::Z
}

impl Default for SourceConfig {
    fn default() -> Self {
        canonical_source()
    }
}

/// Three emitters 30 µm apart on the symmetry axis, 2000 rays each.
pub fn canonical_source() -> SourceConfig {
    SourceConfig::PointLine { count: 3, spacing: 0.030, center: None, axis: Vec3::Z, rays_per_source: 2000 }
}

impl SourceConfig {
    pub fn total_rays(&self) -> u64 {
        match self {
            SourceConfig::PointLine { count, rays_per_source, .. } => u64::from(*count) * u64::from(*rays_per_source),
            SourceConfig::Cylinder { total_rays, .. } => u64::from(*total_rays),
        }
    }

    /// Power carried by each emitted ray; emission sums to one.
    pub fn ray_power(&self) -> f64 {
        1.0 / self.total_rays() as f64
    }

    /// Set the ray budget: rays per emitter for a point line, total rays for
    /// a cylinder.
    pub fn with_rays(mut self, rays: u32) -> Self {
        match &mut self {
            SourceConfig::PointLine { rays_per_source, .. } => *rays_per_source = rays,
            SourceConfig::Cylinder { total_rays, .. } => *total_rays = rays,
        }
        self
    }

    pub fn center(&self) -> Option<Vec3> {
        match self {
            SourceConfig::PointLine { center, .. } | SourceConfig::Cylinder { center, .. } => *center,
        }
    }

    /// Fill in defaults from the scene and check the emitters sit in one
    /// solid medium.
    pub fn resolve(&self, scene: &Scene) -> Result<ResolvedSource, SourceError> {
        let center =
            self.center().or_else(|| scene.assembly().map(|a| a.emission_centroid)).ok_or(SourceError::NoCenter)?;
        let (kind, probes) = match self {
            SourceConfig::PointLine { count, spacing, axis, rays_per_source, .. } => {
                if *count == 0 {
                    return Err(SourceError::NonPositive { field: "count" });
                }
                if *rays_per_source == 0 {
                    return Err(SourceError::NonPositive { field: "rays_per_source" });
                }
                if !(*spacing >= 0.0) {
                    return Err(SourceError::NonPositive { field: "spacing" });
                }
                let axis = axis.normalized();
                let points: Vec<Vec3> =
                    (0..*count).map(|k| center + axis * (*spacing * (k as f64 - (*count - 1) as f64 / 2.0))).collect();
                (Kind::Points { points: points.clone(), rays_per_source: *rays_per_source }, points)
            }
            SourceConfig::Cylinder { radius, length, axis, total_rays, .. } => {
                if !(*radius > 0.0) {
                    return Err(SourceError::NonPositive { field: "radius" });
                }
                if !(*length > 0.0) {
                    return Err(SourceError::NonPositive { field: "length" });
                }
                if *total_rays == 0 {
                    return Err(SourceError::NonPositive { field: "total_rays" });
                }
                let axis = axis.normalized();
                let e1 = axis.any_perpendicular();
                let e2 = axis.cross(e1);
                let mut probes = vec![center];
                for end in [-0.5, 0.5] {
                    let c = center + axis * (length * end);
                    probes.push(c);
                    for phi in [0.0, 0.25, 0.5, 0.75] {
                        let a = TAU * phi;
                        probes.push(c + e1 * (radius * a.cos()) + e2 * (radius * a.sin()));
                    }
                }
                (Kind::Cylinder { center, axis, e1, e2, radius: *radius, length: *length }, probes)
            }
        };
        let mut medium = None;
        for p in probes {
            let m = scene.medium_at(p).filter(|m| *m != scene.ambient()).ok_or(SourceError::Outside(p))?;
            if *medium.get_or_insert(m) != m {
                return Err(SourceError::MixedMedia);
            }
        }
        Ok(ResolvedSource {
            kind,
            medium: medium.expect("at least one probe"),
            total_rays: self.total_rays(),
            ray_power: self.ray_power(),
        })
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Points { points: Vec<Vec3>, rays_per_source: u32 },
    Cylinder { center: Vec3, axis: Vec3, e1: Vec3, e2: Vec3, radius: f64, length: f64 },
}

/// A source bound to a scene: emitter positions and starting medium known.
#[derive(Debug, Clone)]
pub struct ResolvedSource {
    kind: Kind,
    medium: MaterialId,
    total_rays: u64,
    ray_power: f64,
}

impl ResolvedSource {
    /// Source floating in the ambient medium; for tests and bare-emitter
    /// references.
    pub fn free_point(position: Vec3, medium: MaterialId, rays: u32) -> Self {
        Self {
            kind: Kind::Points { points: vec![position], rays_per_source: rays },
            medium,
            total_rays: u64::from(rays),
            ray_power: 1.0 / f64::from(rays),
        }
    }

    pub fn total_rays(&self) -> u64 {
        self.total_rays
    }

    pub fn ray_power(&self) -> f64 {
        self.ray_power
    }

    pub fn medium(&self) -> MaterialId {
        self.medium
    }

    /// Emission-weighted mean emitter position.
    pub fn centroid(&self) -> Vec3 {
        match &self.kind {
            Kind::Points { points, .. } => points.iter().fold(Vec3::ZERO, |a, p| a + *p) / points.len() as f64,
            Kind::Cylinder { center, .. } => *center,
        }
    }

    /// Ray number `index`; its origin depends only on the index for point
    /// emitters, its direction (and cylinder origin) on `rng`.
    pub fn emit<R: Rng + ?Sized>(&self, index: u64, rng: &mut R) -> Ray {
        let origin = match &self.kind {
            Kind::Points { points, rays_per_source } => points[(index / u64::from(*rays_per_source)) as usize],
            Kind::Cylinder { center, axis, e1, e2, radius, length } => {
                let r = radius * rng.random::<f64>().sqrt();
                let phi = TAU * rng.random::<f64>();
                let h = length * (rng.random::<f64>() - 0.5);
                *center + *axis * h + *e1 * (r * phi.cos()) + *e2 * (r * phi.sin())
            }
        };
        Ray::new(origin, isotropic_direction(rng), self.ray_power, self.medium)
    }
}

/// Uniform direction on the unit sphere: `z = 2u - 1`, `phi = 2 pi v`.
pub fn isotropic_direction<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = TAU * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Every ray of `source`, drawn sequentially from one generator.
pub fn sample_emission<'a, R: Rng + ?Sized>(
    source: &'a ResolvedSource,
    rng: &'a mut R,
) -> impl Iterator<Item = Ray> + 'a {
    (0..source.total_rays).map(move |i| source.emit(i, rng))
}
