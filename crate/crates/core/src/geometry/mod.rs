//! Exact ray–surface intersection for the primitives the assembly needs,
//! plus nearest-hit queries over a list of surfaces.

mod primitive;
mod vec3;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use primitive::{primitives_approx_eq, Primitive, SurfacePrimitive};
pub use vec3::Vec3;

use crate::physics::MaterialId;

/// Minimum accepted ray parameter, in mm. Rays relaunched from a surface
/// must not re-hit it.
pub const EPSILON_HIT: f64 = 1e-9;
/// Minimum ray parameter against surfaces other than the one a ray left.
pub const EPSILON_NEAR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("polygon vertices not coplanar (offset {0:e} mm)")]
    NonCoplanar(f64),
    #[error("polygon not convex at vertex {0}")]
    NonConvex(usize),
    #[error("invalid radius {0}")]
    InvalidRadius(f64),
    #[error("invalid angle {0} rad")]
    InvalidAngle(f64),
    #[error("invalid axial bounds [{0}, {1}]")]
    InvalidBounds(f64, f64),
    #[error("zero-length axis")]
    ZeroAxis,
}

/// Stable surface identifier; also the index into the scene's surface list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SurfaceId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub power: f64,
    pub medium: MaterialId,
    pub generation: u32,
}

impl Ray {
    pub fn new(origin: Vec3, direction: Vec3, power: f64, medium: MaterialId) -> Self {
        Self { origin, direction, power, medium, generation: 0 }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// A ray–surface intersection. `normal` always opposes the incoming ray;
/// `from_front` records whether the ray arrived from the side the
/// surface's geometric normal points into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    pub normal: Vec3,
    pub from_front: bool,
}

pub fn intersect(ray: &Ray, surface: &Primitive) -> Option<Hit> {
    surface.intersect(ray)
}

/// Nearest hit over `surfaces`; equal `t` resolves to the lowest id.
pub fn nearest_hit<'a, I>(ray: &Ray, surfaces: I) -> Option<(SurfaceId, Hit)>
where
    I: IntoIterator<Item = (SurfaceId, &'a Primitive)>,
{
    nearest_hit_from(ray, surfaces, None, EPSILON_HIT)
}

/// Nearest hit for a ray that just left surface `last`. Only `last` gets
/// the full [`EPSILON_HIT`] exclusion; neighbours meeting it at an edge
/// are still found at [`EPSILON_NEAR`].
pub fn nearest_hit_after<'a, I>(ray: &Ray, surfaces: I, last: Option<SurfaceId>) -> Option<(SurfaceId, Hit)>
where
    I: IntoIterator<Item = (SurfaceId, &'a Primitive)>,
{
    nearest_hit_from(ray, surfaces, last, EPSILON_NEAR)
}

fn nearest_hit_from<'a, I>(ray: &Ray, surfaces: I, last: Option<SurfaceId>, t_min: f64) -> Option<(SurfaceId, Hit)>
where
    I: IntoIterator<Item = (SurfaceId, &'a Primitive)>,
{
    let mut best: Option<(SurfaceId, Hit)> = None;
    for (id, prim) in surfaces {
        let t_min = if Some(id) == last { EPSILON_HIT } else { t_min };
        if let Some(hit) = prim.intersect_beyond(ray, t_min) {
            let better = match &best {
                None => true,
                Some((bid, bh)) => hit.t < bh.t || (hit.t == bh.t && id < *bid),
            };
            if better {
                best = Some((id, hit));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(z: f64) -> Primitive {
        Primitive::new(SurfacePrimitive::Disk {
            center: Vec3::new(0.0, 0.0, z),
            axis: Vec3::Z,
            r_inner: 0.0,
            r_outer: 1.0,
            cutout: None,
        })
        .unwrap()
    }

    #[test]
    fn nearest_of_two_parallel_disks() {
        let prims = [disk(2.0), disk(1.0)];
        let ray = Ray::new(Vec3::ZERO, Vec3::Z, 1.0, MaterialId(0));
        let (id, hit) = nearest_hit(&ray, prims.iter().enumerate().map(|(i, p)| (SurfaceId(i as u32), p))).unwrap();
        assert_eq!(id, SurfaceId(1));
        assert!((hit.point.z - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ray_on_surface_skips_it() {
        let prims = [disk(0.0), disk(1.0)];
        let ray = Ray::new(Vec3::ZERO, Vec3::Z, 1.0, MaterialId(0));
        let (id, _) = nearest_hit(&ray, prims.iter().enumerate().map(|(i, p)| (SurfaceId(i as u32), p))).unwrap();
        assert_eq!(id, SurfaceId(1));
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let prims = [disk(1.0), disk(1.0)];
        let ray = Ray::new(Vec3::ZERO, Vec3::Z, 1.0, MaterialId(0));
        let ids = [SurfaceId(7), SurfaceId(3)];
        let (id, _) = nearest_hit(&ray, ids.iter().copied().zip(prims.iter())).unwrap();
        assert_eq!(id, SurfaceId(3));
    }

    #[test]
    fn empty_scene_has_no_hit() {
        let ray = Ray::new(Vec3::ZERO, Vec3::Z, 1.0, MaterialId(0));
        assert!(nearest_hit(&ray, std::iter::empty()).is_none());
    }
}
