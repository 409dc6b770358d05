use serde::{Deserialize, Serialize};

use super::{GeometryError, Hit, Ray, Vec3, EPSILON_HIT};
use crate::units::degrees;

const COPLANAR_TOL: f64 = 1e-9;
const INSIDE_TOL: f64 = 1e-12;

/// Raw description of a surface primitive, as written in scene files.
///
/// Angles are radians in memory and degrees on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfacePrimitive {
    /// Planar convex polygon. The geometric normal follows the right-hand
    /// rule over the vertex order.
    ConvexPolygon { vertices: Vec<Vec3> },
    /// Planar disk or annulus with normal `axis`, optionally with a convex
    /// polygonal cutout lying in the same plane.
    Disk {
        center: Vec3,
        axis: Vec3,
        #[serde(default)]
        r_inner: f64,
        r_outer: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutout: Option<Vec<Vec3>>,
    },
    /// Lateral surface of a single-nappe cone, truncated to axial distances
    /// `[z_min, z_max]` from the apex. Normal points away from the axis.
    ConeLateral {
        apex: Vec3,
        axis: Vec3,
        #[serde(with = "degrees")]
        half_angle: f64,
        z_min: f64,
        z_max: f64,
    },
    /// Part of a sphere within `cap_half_angle` of `axis`, seen from the
    /// centre. Normal points away from the centre.
    SphericalCap {
        center: Vec3,
        radius: f64,
        axis: Vec3,
        #[serde(with = "degrees")]
        cap_half_angle: f64,
    },
}

impl SurfacePrimitive {
    /// Apply a rigid motion: `rotate` acts on directions, points are rotated
    /// then translated.
    pub fn map_rigid(&self, rotate: impl Fn(Vec3) -> Vec3, translation: Vec3) -> SurfacePrimitive {
        let point = |p: Vec3| rotate(p) + translation;
        match self {
            SurfacePrimitive::ConvexPolygon { vertices } => {
                SurfacePrimitive::ConvexPolygon { vertices: vertices.iter().map(|&v| point(v)).collect() }
            }
            SurfacePrimitive::Disk { center, axis, r_inner, r_outer, cutout } => SurfacePrimitive::Disk {
                center: point(*center),
                axis: rotate(*axis),
                r_inner: *r_inner,
                r_outer: *r_outer,
                cutout: cutout.as_ref().map(|c| c.iter().map(|&v| point(v)).collect()),
            },
            SurfacePrimitive::ConeLateral { apex, axis, half_angle, z_min, z_max } => SurfacePrimitive::ConeLateral {
                apex: point(*apex),
                axis: rotate(*axis),
                half_angle: *half_angle,
                z_min: *z_min,
                z_max: *z_max,
            },
            SurfacePrimitive::SphericalCap { center, radius, axis, cap_half_angle } => SurfacePrimitive::SphericalCap {
                center: point(*center),
                radius: *radius,
                axis: rotate(*axis),
                cap_half_angle: *cap_half_angle,
            },
        }
    }

    /// Largest distance of any bounding point from the origin.
    pub(crate) fn extent(&self) -> f64 {
        match self {
            SurfacePrimitive::ConvexPolygon { vertices } => vertices.iter().map(|v| v.norm()).fold(0.0, f64::max),
            SurfacePrimitive::Disk { center, r_outer, .. } => center.norm() + r_outer,
            SurfacePrimitive::ConeLateral { apex, half_angle, z_max, .. } => apex.norm() + z_max / half_angle.cos(),
            SurfacePrimitive::SphericalCap { center, radius, .. } => center.norm() + radius,
        }
    }

    fn approx_eq(&self, other: &SurfacePrimitive, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()));
        let vclose = |a: Vec3, b: Vec3| close(a.x, b.x) && close(a.y, b.y) && close(a.z, b.z);
        let polys = |a: &[Vec3], b: &[Vec3]| a.len() == b.len() && a.iter().zip(b).all(|(p, q)| vclose(*p, *q));
        use SurfacePrimitive::*;
        match (self, other) {
            (ConvexPolygon { vertices: a }, ConvexPolygon { vertices: b }) => polys(a, b),
            (
                Disk { center: c1, axis: a1, r_inner: i1, r_outer: o1, cutout: k1 },
                Disk { center: c2, axis: a2, r_inner: i2, r_outer: o2, cutout: k2 },
            ) => {
                vclose(*c1, *c2)
                    && vclose(*a1, *a2)
                    && close(*i1, *i2)
                    && close(*o1, *o2)
                    && match (k1, k2) {
                        (None, None) => true,
                        (Some(a), Some(b)) => polys(a, b),
                        _ => false,
                    }
            }
            (
                ConeLateral { apex: p1, axis: a1, half_angle: h1, z_min: n1, z_max: x1 },
                ConeLateral { apex: p2, axis: a2, half_angle: h2, z_min: n2, z_max: x2 },
            ) => vclose(*p1, *p2) && vclose(*a1, *a2) && close(*h1, *h2) && close(*n1, *n2) && close(*x1, *x2),
            (
                SphericalCap { center: c1, radius: r1, axis: a1, cap_half_angle: h1 },
                SphericalCap { center: c2, radius: r2, axis: a2, cap_half_angle: h2 },
            ) => vclose(*c1, *c2) && close(*r1, *r2) && vclose(*a1, *a2) && close(*h1, *h2),
            _ => false,
        }
    }
}

/// Equality up to relative tolerance `tol` on every numeric field.
pub fn primitives_approx_eq(a: &SurfacePrimitive, b: &SurfacePrimitive, tol: f64) -> bool {
    a.approx_eq(b, tol)
}

#[derive(Debug, Clone)]
struct PlanarPolygon {
    vertices: Vec<Vec3>,
    normal: Vec3,
}

impl PlanarPolygon {
    fn new(vertices: &[Vec3]) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::DegeneratePolygon("fewer than three vertices".into()));
        }
        // Newell's method
        let mut n = Vec3::ZERO;
        for (i, a) in vertices.iter().enumerate() {
            let b = vertices[(i + 1) % vertices.len()];
            n += Vec3::new((a.y - b.y) * (a.z + b.z), (a.z - b.z) * (a.x + b.x), (a.x - b.x) * (a.y + b.y));
        }
        let area2 = n.norm();
        if area2 < 1e-18 {
            return Err(GeometryError::DegeneratePolygon("zero area".into()));
        }
        let normal = n / area2;
        let origin = vertices[0];
        for v in vertices {
            let off = (*v - origin).dot(normal).abs();
            if off > COPLANAR_TOL {
                return Err(GeometryError::NonCoplanar(off));
            }
        }
        for i in 0..vertices.len() {
            let a = vertices[i];
            let b = vertices[(i + 1) % vertices.len()];
            let c = vertices[(i + 2) % vertices.len()];
            if (b - a).cross(c - b).dot(normal) < -INSIDE_TOL {
                return Err(GeometryError::NonConvex(i));
            }
        }
        Ok(Self { vertices: vertices.to_vec(), normal })
    }

    /// Point-in-polygon for a point already on the plane. Edges count as inside.
    fn contains(&self, p: Vec3) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            (b - a).cross(p - a).dot(self.normal) >= -INSIDE_TOL
        })
    }
}

/// Validated primitive with cached derived quantities, ready for tracing.
#[derive(Debug, Clone)]
pub struct Primitive {
    spec: SurfacePrimitive,
    shape: Shape,
}

#[derive(Debug, Clone)]
enum Shape {
    Polygon(PlanarPolygon),
    Disk { center: Vec3, axis: Vec3, r_inner: f64, r_outer: f64, cutout: Option<PlanarPolygon> },
    Cone { apex: Vec3, axis: Vec3, cos2: f64, z_min: f64, z_max: f64 },
    Cap { center: Vec3, radius: f64, axis: Vec3, cos_limit: f64 },
}

fn unit_axis(v: Vec3) -> Result<Vec3, GeometryError> {
    if v.norm() < 1e-12 {
        Err(GeometryError::ZeroAxis)
    } else {
        Ok(v.normalized())
    }
}

impl Primitive {
    pub fn new(spec: SurfacePrimitive) -> Result<Self, GeometryError> {
        let shape = match &spec {
            SurfacePrimitive::ConvexPolygon { vertices } => Shape::Polygon(PlanarPolygon::new(vertices)?),
            SurfacePrimitive::Disk { center, axis, r_inner, r_outer, cutout } => {
                let axis = unit_axis(*axis)?;
                if !(*r_inner >= 0.0 && r_outer > r_inner && r_outer.is_finite()) {
                    return Err(GeometryError::InvalidRadius(*r_outer));
                }
                let cutout = match cutout {
                    Some(vs) => {
                        let poly = PlanarPolygon::new(vs)?;
                        for v in vs {
                            let off = (*v - *center).dot(axis).abs();
                            if off > COPLANAR_TOL {
                                return Err(GeometryError::NonCoplanar(off));
                            }
                        }
                        Some(poly)
                    }
                    None => None,
                };
                Shape::Disk { center: *center, axis, r_inner: *r_inner, r_outer: *r_outer, cutout }
            }
            SurfacePrimitive::ConeLateral { apex, axis, half_angle, z_min, z_max } => {
                let axis = unit_axis(*axis)?;
                if !(*half_angle > 0.0 && *half_angle < std::f64::consts::FRAC_PI_2) {
                    return Err(GeometryError::InvalidAngle(*half_angle));
                }
                if !(*z_min >= 0.0 && z_max > z_min && z_max.is_finite()) {
                    return Err(GeometryError::InvalidBounds(*z_min, *z_max));
                }
                let c = half_angle.cos();
                Shape::Cone { apex: *apex, axis, cos2: c * c, z_min: *z_min, z_max: *z_max }
            }
            SurfacePrimitive::SphericalCap { center, radius, axis, cap_half_angle } => {
                let axis = unit_axis(*axis)?;
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(GeometryError::InvalidRadius(*radius));
                }
                if !(*cap_half_angle > 0.0 && *cap_half_angle <= std::f64::consts::PI) {
                    return Err(GeometryError::InvalidAngle(*cap_half_angle));
                }
                Shape::Cap { center: *center, radius: *radius, axis, cos_limit: cap_half_angle.cos() }
            }
        };
        Ok(Self { spec, shape })
    }

    pub fn spec(&self) -> &SurfacePrimitive {
        &self.spec
    }

    /// Geometric (unoriented) normal at a point on the surface.
    pub fn geometric_normal(&self, p: Vec3) -> Vec3 {
        match &self.shape {
            Shape::Polygon(poly) => poly.normal,
            Shape::Disk { axis, .. } => *axis,
            Shape::Cone { apex, axis, cos2, .. } => {
                let w = p - *apex;
                (w * *cos2 - *axis * w.dot(*axis)).normalized()
            }
            Shape::Cap { center, .. } => (p - *center).normalized(),
        }
    }

    /// Smallest `t > EPSILON_HIT` where the ray meets the bounded surface.
    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.intersect_beyond(ray, EPSILON_HIT)
    }

    /// Smallest `t > t_min` where the ray meets the bounded surface.
    pub fn intersect_beyond(&self, ray: &Ray, t_min: f64) -> Option<Hit> {
        let t = self.intersect_t(ray.origin, ray.direction, t_min)?;
        let point = ray.at(t);
        let n = self.geometric_normal(point);
        let cos = n.dot(ray.direction);
        if cos == 0.0 {
            return None;
        }
        let from_front = cos < 0.0;
        let normal = if from_front { n } else { -n };
        Some(Hit { t, point, normal, from_front })
    }

    fn intersect_t(&self, o: Vec3, d: Vec3, t_min: f64) -> Option<f64> {
        match &self.shape {
            Shape::Polygon(poly) => {
                let t = plane_t(o, d, poly.vertices[0], poly.normal, t_min)?;
                poly.contains(o + d * t).then_some(t)
            }
            Shape::Disk { center, axis, r_inner, r_outer, cutout } => {
                let t = plane_t(o, d, *center, *axis, t_min)?;
                let p = o + d * t;
                let r2 = (p - *center).norm_squared();
                if r2 > r_outer * r_outer || r2 < r_inner * r_inner {
                    return None;
                }
                match cutout {
                    Some(poly) if poly.contains(p) => None,
                    _ => Some(t),
                }
            }
            Shape::Cone { apex, axis, cos2, z_min, z_max } => {
                let w = o - *apex;
                let da = d.dot(*axis);
                let wa = w.dot(*axis);
                let a = da * da - cos2;
                let b = 2.0 * (da * wa - cos2 * d.dot(w));
                let c = wa * wa - cos2 * w.norm_squared();
                let in_band = |t: f64| {
                    let h = wa + da * t;
                    h >= *z_min && h <= *z_max
                };
                smallest_valid(solve_quadratic(a, b, c), t_min, in_band)
            }
            Shape::Cap { center, radius, axis, cos_limit } => {
                let w = o - *center;
                let b = d.dot(w);
                let c = w.norm_squared() - radius * radius;
                let in_cap = |t: f64| {
                    let p = o + d * t - *center;
                    p.dot(*axis) >= radius * cos_limit - 1e-12 * radius
                };
                smallest_valid(solve_quadratic(1.0, 2.0 * b, c), t_min, in_cap)
            }
        }
    }
}

fn plane_t(o: Vec3, d: Vec3, p0: Vec3, n: Vec3, t_min: f64) -> Option<f64> {
    let denom = n.dot(d);
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = n.dot(p0 - o) / denom;
    (t > t_min).then_some(t)
}

/// Real roots of `a t^2 + b t + c`, ascending. Degenerates to the linear case.
fn solve_quadratic(a: f64, b: f64, c: f64) -> [Option<f64>; 2] {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return [None, None];
    }
    if a.abs() <= 1e-14 * scale {
        if b == 0.0 {
            return [None, None];
        }
        return [Some(-c / b), None];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return [None, None];
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let (t1, t2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    [Some(lo), Some(hi)]
}

fn smallest_valid(roots: [Option<f64>; 2], t_min: f64, accept: impl Fn(f64) -> bool) -> Option<f64> {
    roots
        .into_iter()
        .flatten()
        .filter(|&t| t > t_min && accept(t))
        .fold(None, |best: Option<f64>, t| Some(best.map_or(t, |b| b.min(t))))
}
