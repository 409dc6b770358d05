//! Parameterized square-frustum sensing diamond glued to a conical anvil.
//!
//! Layout along `+z`: the small square front face sits at `z = 0`, the
//! frustum base at `z = frustum_height`, then a glue slab, then the anvil's
//! flat front face, its conical flank and finally the spherical back cap.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{MaterialTable, Scene, SceneError, SurfaceSpec};
use crate::geometry::{SurfacePrimitive, Vec3};
use crate::physics::Coating;
use crate::units::degrees;

/// Stable face names; the builder emits surfaces in this order so each
/// name's index is also its `SurfaceId`.
pub mod faces {
    pub const FRONT_FACE: &str = "FRONT_FACE";
    pub const SIDE_FACE: [&str; 4] = ["SIDE_FACE_0", "SIDE_FACE_1", "SIDE_FACE_2", "SIDE_FACE_3"];
    pub const BASE: &str = "BASE";
    pub const GLUE_SIDE: [&str; 4] = ["GLUE_SIDE_0", "GLUE_SIDE_1", "GLUE_SIDE_2", "GLUE_SIDE_3"];
    pub const GLUE_TOP: &str = "GLUE_TOP";
    pub const ANVIL_FRONT: &str = "ANVIL_FRONT";
    pub const ANVIL_CONE: &str = "ANVIL_CONE";
    pub const ANVIL_BACK: &str = "ANVIL_BACK";

    pub fn all() -> Vec<&'static str> {
        let mut v = vec![FRONT_FACE];
        v.extend(SIDE_FACE);
        v.push(BASE);
        v.extend(GLUE_SIDE);
        v.extend([GLUE_TOP, ANVIL_FRONT, ANVIL_CONE, ANVIL_BACK]);
        v
    }
}

/// Lengths in mm; the opening angle is stored in radians, written in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssemblyParams {
    pub base_side: f64,
    pub top_side: f64,
    pub frustum_height: f64,
    pub anvil_front_diameter: f64,
    /// Angle between the anvil flank and the symmetry axis.
    #[serde(with = "degrees")]
    pub anvil_opening_half_angle: f64,
    /// Axial distance from the anvil front face to the apex of the back cap.
    pub anvil_height: f64,
    /// Defaults to the distance from the emission centroid to the back apex.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub back_cap_radius: Option<f64>,
    pub glue_thickness: f64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub coatings: BTreeMap<String, Coating>,
}

impl Default for AssemblyParams {
    fn default() -> Self {
        Self {
            base_side: 0.5,
            top_side: 0.15,
            frustum_height: 0.18,
            anvil_front_diameter: 1.0,
            anvil_opening_half_angle: 45f64.to_radians(),
            anvil_height: 2.0,
            back_cap_radius: None,
            glue_thickness: 0.010,
            coatings: BTreeMap::new(),
        }
    }
}

impl AssemblyParams {
    /// Angle between the frustum side faces and its base.
    pub fn base_angle(&self) -> f64 {
        (self.frustum_height / ((self.base_side - self.top_side) / 2.0)).atan()
    }

    /// Frustum mid-height on the symmetry axis.
    pub fn emission_centroid(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.frustum_height / 2.0)
    }

    pub fn with_coating(mut self, face: &str, coating: Coating) -> Self {
        self.coatings.insert(face.to_string(), coating);
        self
    }

    fn check(&self) -> Result<(), SceneError> {
        let positive = [
            ("base_side", self.base_side),
            ("top_side", self.top_side),
            ("frustum_height", self.frustum_height),
            ("anvil_front_diameter", self.anvil_front_diameter),
            ("anvil_height", self.anvil_height),
            ("glue_thickness", self.glue_thickness),
        ];
        for (param, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SceneError::InvalidParam { param, reason: format!("{v} is not a positive length") });
            }
        }
        if let Some(r) = self.back_cap_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(SceneError::InvalidParam {
                    param: "back_cap_radius",
                    reason: format!("{r} is not a positive length"),
                });
            }
        }
        if self.top_side >= self.base_side {
            return Err(SceneError::InvalidParam {
                param: "top_side",
                reason: format!("top_side {} must be smaller than base_side {}", self.top_side, self.base_side),
            });
        }
        let a = self.anvil_opening_half_angle;
        if !(a > 0.0 && a < FRAC_PI_2) {
            return Err(SceneError::InvalidParam {
                param: "anvil_opening_half_angle",
                reason: format!("{:.6} deg is outside (0, 90)", a.to_degrees()),
            });
        }
        let known = faces::all();
        if let Some(bad) = self.coatings.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(SceneError::UnknownFace(bad.clone()));
        }
        Ok(())
    }
}

/// Derived quantities the builder reports alongside the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyInfo {
    pub params: AssemblyParams,
    /// Frustum base angle, radians.
    pub base_angle: f64,
    pub emission_centroid: Vec3,
    pub anvil_front_z: f64,
    pub back_apex_z: f64,
    pub back_cap_radius: f64,
    pub back_cap_center_z: f64,
    /// Where the conical flank meets the back cap.
    pub rim_z: f64,
    pub rim_radius: f64,
}

pub fn build_assembly(params: &AssemblyParams) -> Result<Scene, SceneError> {
    build_assembly_with(params, &MaterialTable::default())
}

/// Build with custom indices; the table must name `diamond`, `glue` and the
/// ambient medium.
pub fn build_assembly_with(params: &AssemblyParams, materials: &MaterialTable) -> Result<Scene, SceneError> {
    params.check()?;
    let air = materials.ambient.as_str();
    for m in ["diamond", "glue", air] {
        if !materials.indices.contains_key(m) {
            return Err(SceneError::UnknownMaterial(m.to_string()));
        }
    }

    let a = params.top_side / 2.0;
    let b = params.base_side / 2.0;
    let h = params.frustum_height;
    let z_glue = h + params.glue_thickness;
    let r_front = params.anvil_front_diameter / 2.0;
    let half = params.anvil_opening_half_angle;
    let k = half.tan();
    let centroid = params.emission_centroid();

    if r_front * r_front <= 2.0 * b * b {
        return Err(SceneError::NonMating {
            first: faces::ANVIL_FRONT,
            second: faces::GLUE_TOP,
            reason: format!(
                "front diameter {} does not cover the base diagonal {:.6}",
                params.anvil_front_diameter,
                2.0 * b * 2f64.sqrt()
            ),
        });
    }

    let apex_z = z_glue + params.anvil_height;
    let radius = params.back_cap_radius.unwrap_or(apex_z - centroid.z);
    let center_z = apex_z - radius;
    // rim: (r_front + k u)^2 + (u + e)^2 = R^2 with u measured from the front face
    let e = z_glue - center_z;
    let qa = k * k + 1.0;
    let qb = 2.0 * (r_front * k + e);
    let qc = r_front * r_front + e * e - radius * radius;
    if qc >= 0.0 {
        return Err(SceneError::NonMating {
            first: faces::ANVIL_CONE,
            second: faces::ANVIL_BACK,
            reason: format!("back cap (radius {radius:.6}) does not enclose the front rim; the cone never meets it"),
        });
    }
    let u = (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
    let rim_z = z_glue + u;
    let rim_radius = r_front + k * u;
    if rim_z >= apex_z {
        return Err(SceneError::NonMating {
            first: faces::ANVIL_CONE,
            second: faces::ANVIL_BACK,
            reason: "rim lies above the back apex".into(),
        });
    }
    let cap_half = ((rim_z - center_z) / radius).clamp(-1.0, 1.0).acos();

    let coating = |name: &str| params.coatings.get(name).copied().unwrap_or_default();
    let spec = |name: &str, front: &str, back: &str, shape: SurfacePrimitive| SurfaceSpec {
        name: name.to_string(),
        front: front.to_string(),
        back: back.to_string(),
        coating: coating(name),
        shape,
    };
    let square = |half: f64, z: f64, outward: Vec3| {
        oriented(
            vec![
                Vec3::new(-half, -half, z),
                Vec3::new(half, -half, z),
                Vec3::new(half, half, z),
                Vec3::new(-half, half, z),
            ],
            outward,
        )
    };

    let mut specs = Vec::with_capacity(14);
    specs.push(spec(faces::FRONT_FACE, air, "diamond", square(a, 0.0, -Vec3::Z)));

    // side faces in +x, +y, -x, -y order
    let dirs = [Vec3::X, Vec3::Y, -Vec3::X, -Vec3::Y];
    for (i, d) in dirs.iter().enumerate() {
        let t = Vec3::Z.cross(*d);
        let outward = (*d * h - Vec3::Z * (b - a)).normalized();
        let verts = vec![*d * a - t * a, *d * a + t * a, *d * b + t * b + Vec3::Z * h, *d * b - t * b + Vec3::Z * h];
        specs.push(spec(faces::SIDE_FACE[i], air, "diamond", oriented(verts, outward)));
    }
    specs.push(spec(faces::BASE, "glue", "diamond", square(b, h, Vec3::Z)));
    for (i, d) in dirs.iter().enumerate() {
        let t = Vec3::Z.cross(*d);
        let verts = vec![
            *d * b - t * b + Vec3::Z * h,
            *d * b + t * b + Vec3::Z * h,
            *d * b + t * b + Vec3::Z * z_glue,
            *d * b - t * b + Vec3::Z * z_glue,
        ];
        specs.push(spec(faces::GLUE_SIDE[i], air, "glue", oriented(verts, *d)));
    }
    specs.push(spec(faces::GLUE_TOP, "diamond", "glue", square(b, z_glue, Vec3::Z)));
    let cutout = match square(b, z_glue, -Vec3::Z) {
        SurfacePrimitive::ConvexPolygon { vertices } => vertices,
        _ => unreachable!(),
    };
    specs.push(spec(
        faces::ANVIL_FRONT,
        air,
        "diamond",
        SurfacePrimitive::Disk {
            center: Vec3::new(0.0, 0.0, z_glue),
            axis: -Vec3::Z,
            r_inner: 0.0,
            r_outer: r_front,
            cutout: Some(cutout),
        },
    ));
    let cone_apex_z = z_glue - r_front / k;
    specs.push(spec(
        faces::ANVIL_CONE,
        air,
        "diamond",
        SurfacePrimitive::ConeLateral {
            apex: Vec3::new(0.0, 0.0, cone_apex_z),
            axis: Vec3::Z,
            half_angle: half,
            z_min: z_glue - cone_apex_z,
            z_max: rim_z - cone_apex_z,
        },
    ));
    specs.push(spec(
        faces::ANVIL_BACK,
        air,
        "diamond",
        SurfacePrimitive::SphericalCap {
            center: Vec3::new(0.0, 0.0, center_z),
            radius,
            axis: Vec3::Z,
            cap_half_angle: cap_half,
        },
    ));

    let info = AssemblyInfo {
        params: params.clone(),
        base_angle: params.base_angle(),
        emission_centroid: centroid,
        anvil_front_z: z_glue,
        back_apex_z: apex_z,
        back_cap_radius: radius,
        back_cap_center_z: center_z,
        rim_z,
        rim_radius,
    };
    Ok(Scene::new(materials, &specs)?.with_assembly(info))
}

/// Polygon whose right-hand normal points along `outward`.
fn oriented(mut vertices: Vec<Vec3>, outward: Vec3) -> SurfacePrimitive {
    let n = (vertices[1] - vertices[0]).cross(vertices[2] - vertices[1]);
    if n.dot(outward) < 0.0 {
        vertices.reverse();
    }
    SurfacePrimitive::ConvexPolygon { vertices }
}
