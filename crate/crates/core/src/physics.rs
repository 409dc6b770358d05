//! Refraction, total internal reflection, unpolarized Fresnel power
//! splitting and the two idealized coatings.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Hit, Ray, Vec3};

pub const N_AIR: f64 = 1.00;
pub const N_DIAMOND: f64 = 2.40;
pub const N_GLUE: f64 = 1.70;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MaterialId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub id: MaterialId,
    pub name: String,
    pub refractive_index: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coating {
    #[default]
    Bare,
    IdealMirror,
    IdealAntireflective,
}

/// One side-resolved crossing of a surface: the medium the ray is in and
/// the medium on the other side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interface {
    pub incident: MaterialId,
    pub n_incident: f64,
    pub transmitted: MaterialId,
    pub n_transmitted: f64,
    pub coating: Coating,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionOutcome {
    pub reflected: Option<Ray>,
    pub transmitted: Option<Ray>,
    pub absorbed_power: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("ray in medium {ray:?} reached an interface whose incident side is {expected:?}")]
pub struct MediumMismatch {
    pub ray: MaterialId,
    pub expected: MaterialId,
}

/// Specular reflection of `incident` about `normal`.
#[inline]
pub fn reflect_direction(incident: Vec3, normal: Vec3) -> Vec3 {
    incident - normal * (2.0 * incident.dot(normal))
}

/// Snell refraction. `normal` must oppose `incident`. Returns `None` under
/// total internal reflection.
pub fn refract_direction(incident: Vec3, normal: Vec3, n1: f64, n2: f64) -> Option<Vec3> {
    let eta = n1 / n2;
    let cos_i = -incident.dot(normal);
    let sin2_t = eta * eta * (1.0 - cos_i * cos_i).max(0.0);
    if sin2_t > 1.0 {
        return None;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    Some((incident * eta + normal * (eta * cos_i - cos_t)).normalized())
}

/// Critical angle for `n1 > n2`, `None` otherwise.
pub fn critical_angle(n1: f64, n2: f64) -> Option<f64> {
    (n1 > n2).then(|| (n2 / n1).asin())
}

/// Unpolarized reflectance, the mean of the s and p Fresnel power
/// reflectances. Equals 1 at and beyond the critical angle.
pub fn fresnel_unpolarized(theta_i: f64, n1: f64, n2: f64) -> f64 {
    let (sin_i, cos_i) = theta_i.sin_cos();
    let sin_t = n1 / n2 * sin_i;
    if sin_t >= 1.0 {
        return 1.0;
    }
    let cos_t = (1.0 - sin_t * sin_t).sqrt();
    let rs = (n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t);
    let rp = (n1 * cos_t - n2 * cos_i) / (n1 * cos_t + n2 * cos_i);
    (0.5 * (rs * rs + rp * rp)).min(1.0)
}

/// Split `ray` at `hit` into specular children according to the coating.
/// Children carry `generation + 1`; roulette is the tracer's business.
pub fn interact(ray: &Ray, hit: &Hit, iface: &Interface) -> Result<InteractionOutcome, MediumMismatch> {
    if ray.medium != iface.incident {
        return Err(MediumMismatch { ray: ray.medium, expected: iface.incident });
    }
    let p = ray.power;
    let child = |direction: Vec3, power: f64, medium: MaterialId| Ray {
        origin: hit.point,
        direction,
        power,
        medium,
        generation: ray.generation + 1,
    };
    let reflected_dir = reflect_direction(ray.direction, hit.normal);
    let refracted = refract_direction(ray.direction, hit.normal, iface.n_incident, iface.n_transmitted);

    let (r_power, t_dir) = match (iface.coating, refracted) {
        (Coating::IdealMirror, _) => (p, None),
        (_, None) => (p, None),
        (Coating::IdealAntireflective, Some(t)) => (0.0, Some(t)),
        (Coating::Bare, Some(t)) => {
            let cos_i = (-ray.direction.dot(hit.normal)).clamp(0.0, 1.0);
            let r = fresnel_unpolarized(cos_i.acos(), iface.n_incident, iface.n_transmitted);
            (r * p, Some(t))
        }
    };
    let t_power = p - r_power;
    Ok(InteractionOutcome {
        reflected: (r_power > 0.0).then(|| child(reflected_dir, r_power, iface.incident)),
        transmitted: t_dir.filter(|_| t_power > 0.0).map(|d| child(d, t_power, iface.transmitted)),
        absorbed_power: 0.0,
    })
}
