//! Immutable scene model: materials, oriented surfaces with a medium on each
//! side, and the diamond-assembly builder.

mod assembly;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assembly::{build_assembly, build_assembly_with, faces, AssemblyInfo, AssemblyParams};
pub use validate::{validate, validate_with, ValidationFailure, ValidationReport, DEFAULT_PROBES};

use crate::geometry::{self, GeometryError, Hit, Primitive, Ray, SurfaceId, SurfacePrimitive, Vec3};
use crate::physics::{Coating, Interface, Material, MaterialId, N_AIR, N_DIAMOND, N_GLUE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("surface `{surface}`: {source}")]
    Geometry {
        surface: String,
        #[source]
        source: GeometryError,
    },
    #[error("unknown material `{0}`")]
    UnknownMaterial(String),
    #[error("material `{name}` has refractive index {index}; must be >= 1")]
    InvalidIndex { name: String, index: f64 },
    #[error("duplicate surface name `{0}`")]
    DuplicateSurface(String),
    #[error("scene has no surfaces")]
    NoSurfaces,
    #[error("invalid assembly parameter `{param}`: {reason}")]
    InvalidParam { param: &'static str, reason: String },
    #[error("faces {first} and {second} do not mate: {reason}")]
    NonMating { first: &'static str, second: &'static str, reason: String },
    #[error("unknown face `{0}` in coatings")]
    UnknownFace(String),
}

/// Refractive indices keyed by material name, plus which one fills space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialTable {
    #[serde(default = "default_ambient")]
    pub ambient: String,
    #[serde(flatten)]
    pub indices: std::collections::BTreeMap<String, f64>,
}

fn default_ambient() -> String {
    "air".into()
}

impl Default for MaterialTable {
    fn default() -> Self {
        let indices = [("air", N_AIR), ("diamond", N_DIAMOND), ("glue", N_GLUE)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        Self { ambient: default_ambient(), indices }
    }
}

/// Surface description by material name, as stored in scene files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub name: String,
    /// Medium on the side the geometric normal points into.
    pub front: String,
    pub back: String,
    #[serde(default)]
    pub coating: Coating,
    pub shape: SurfacePrimitive,
}

#[derive(Debug, Clone)]
pub struct Surface {
    pub id: SurfaceId,
    pub name: String,
    pub primitive: Primitive,
    pub front_medium: MaterialId,
    pub back_medium: MaterialId,
    pub coating: Coating,
}

#[derive(Debug, Clone)]
pub struct Scene {
    materials: Vec<Material>,
    ambient: MaterialId,
    surfaces: Vec<Surface>,
    enclosure_radius: f64,
    assembly: Option<AssemblyInfo>,
}

impl Scene {
    pub fn new(table: &MaterialTable, specs: &[SurfaceSpec]) -> Result<Scene, SceneError> {
        let materials: Vec<Material> = table
            .indices
            .iter()
            .enumerate()
            .map(|(i, (name, &n))| Material { id: MaterialId(i), name: name.clone(), refractive_index: n })
            .collect();
        for m in &materials {
            if !(m.refractive_index >= 1.0 && m.refractive_index.is_finite()) {
                return Err(SceneError::InvalidIndex { name: m.name.clone(), index: m.refractive_index });
            }
        }
        let lookup = |name: &str| {
            materials
                .iter()
                .find(|m| m.name == name)
                .map(|m| m.id)
                .ok_or_else(|| SceneError::UnknownMaterial(name.to_string()))
        };
        let ambient = lookup(&table.ambient)?;
        if specs.is_empty() {
            return Err(SceneError::NoSurfaces);
        }
        let mut surfaces = Vec::with_capacity(specs.len());
        for (i, s) in specs.iter().enumerate() {
            if specs[..i].iter().any(|o| o.name == s.name) {
                return Err(SceneError::DuplicateSurface(s.name.clone()));
            }
            let primitive = Primitive::new(s.shape.clone())
                .map_err(|source| SceneError::Geometry { surface: s.name.clone(), source })?;
            surfaces.push(Surface {
                id: SurfaceId(i as u32),
                name: s.name.clone(),
                primitive,
                front_medium: lookup(&s.front)?,
                back_medium: lookup(&s.back)?,
                coating: s.coating,
            });
        }
        let extent = surfaces.iter().map(|s| s.primitive.spec().extent()).fold(0.0, f64::max);
        Ok(Scene { materials, ambient, surfaces, enclosure_radius: 2.0 * extent + 1.0, assembly: None })
    }

    /// Ambient air only, no surfaces. Reference scene for free propagation.
    pub fn vacuum() -> Scene {
        let materials = vec![Material { id: MaterialId(0), name: "air".into(), refractive_index: N_AIR }];
        Scene { materials, ambient: MaterialId(0), surfaces: Vec::new(), enclosure_radius: 1.0, assembly: None }
    }

    pub(crate) fn with_assembly(mut self, info: AssemblyInfo) -> Self {
        self.assembly = Some(info);
        self
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn material(&self, id: MaterialId) -> &Material {
        &self.materials[id.0]
    }

    pub fn material_id(&self, name: &str) -> Option<MaterialId> {
        self.materials.iter().find(|m| m.name == name).map(|m| m.id)
    }

    pub fn ambient(&self) -> MaterialId {
        self.ambient
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    pub fn surface(&self, id: SurfaceId) -> &Surface {
        &self.surfaces[id.0 as usize]
    }

    pub fn surface_by_name(&self, name: &str) -> Option<&Surface> {
        self.surfaces.iter().find(|s| s.name == name)
    }

    pub fn enclosure_radius(&self) -> f64 {
        self.enclosure_radius
    }

    /// Builder metadata, present when the scene came from [`build_assembly`].
    pub fn assembly(&self) -> Option<&AssemblyInfo> {
        self.assembly.as_ref()
    }

    /// Surface descriptions by material name; feeds serialization.
    pub fn surface_specs(&self) -> Vec<SurfaceSpec> {
        self.surfaces
            .iter()
            .map(|s| SurfaceSpec {
                name: s.name.clone(),
                front: self.material(s.front_medium).name.clone(),
                back: self.material(s.back_medium).name.clone(),
                coating: s.coating,
                shape: s.primitive.spec().clone(),
            })
            .collect()
    }

    pub fn material_table(&self) -> MaterialTable {
        MaterialTable {
            ambient: self.material(self.ambient).name.clone(),
            indices: self.materials.iter().map(|m| (m.name.clone(), m.refractive_index)).collect(),
        }
    }

    pub fn nearest_hit(&self, ray: &Ray) -> Option<(SurfaceId, Hit)> {
        geometry::nearest_hit(ray, self.surfaces.iter().map(|s| (s.id, &s.primitive)))
    }

    /// Nearest hit for a ray relaunched from surface `last`.
    pub fn nearest_hit_after(&self, ray: &Ray, last: Option<SurfaceId>) -> Option<(SurfaceId, Hit)> {
        geometry::nearest_hit_after(ray, self.surfaces.iter().map(|s| (s.id, &s.primitive)), last)
    }

    /// Media on either side of a crossing, resolved from the incidence side.
    pub fn interface(&self, id: SurfaceId, hit: &Hit) -> Interface {
        let s = self.surface(id);
        let (inc, tra) = if hit.from_front { (s.front_medium, s.back_medium) } else { (s.back_medium, s.front_medium) };
        Interface {
            incident: inc,
            n_incident: self.material(inc).refractive_index,
            transmitted: tra,
            n_transmitted: self.material(tra).refractive_index,
            coating: s.coating,
        }
    }

    /// Medium containing `p`, found by walking the crossings of a probe ray
    /// out to the enclosure. `None` when the crossings contradict each other.
    pub fn medium_at(&self, p: Vec3) -> Option<MaterialId> {
        let probe = Vec3::new(0.2863, -0.1947, 0.9382).normalized();
        let chain = self.crossings(p, probe, 10_000)?;
        let mut current = self.ambient;
        for c in chain.iter().rev() {
            if c.transmitted != current {
                return None;
            }
            current = c.incident;
        }
        Some(current)
    }

    /// All surface crossings along a straight line, in order. `None` if
    /// more than `limit` crossings are found.
    pub(crate) fn crossings(&self, origin: Vec3, direction: Vec3, limit: usize) -> Option<Vec<Crossing>> {
        let mut ray = Ray::new(origin, direction, 1.0, self.ambient);
        let mut out = Vec::new();
        let mut last = None;
        while let Some((id, hit)) = self.nearest_hit_after(&ray, last) {
            if out.len() >= limit {
                return None;
            }
            let iface = self.interface(id, &hit);
            out.push(Crossing { surface: id, incident: iface.incident, transmitted: iface.transmitted });
            ray.origin = hit.point;
            last = Some(id);
        }
        Some(out)
    }

    /// Same materials and surfaces within relative tolerance `tol`.
    pub fn approx_eq(&self, other: &Scene, tol: f64) -> bool {
        self.material_table() == other.material_table()
            && self.surfaces.len() == other.surfaces.len()
            && self.surface_specs().iter().zip(other.surface_specs().iter()).all(|(a, b)| {
                a.name == b.name
                    && a.front == b.front
                    && a.back == b.back
                    && a.coating == b.coating
                    && geometry::primitives_approx_eq(&a.shape, &b.shape, tol)
            })
    }

    /// True when the two scenes differ at most in surface coatings.
    pub fn same_geometry(&self, other: &Scene) -> bool {
        self.material_table() == other.material_table()
            && self.surfaces.len() == other.surfaces.len()
            && self.surfaces.iter().zip(&other.surfaces).all(|(a, b)| {
                a.name == b.name
                    && a.front_medium == b.front_medium
                    && a.back_medium == b.back_medium
                    && a.primitive.spec() == b.primitive.spec()
            })
    }

    /// Copy of this scene with one surface's coating replaced.
    pub fn with_coating(&self, name: &str, coating: Coating) -> Option<Scene> {
        let mut out = self.clone();
        out.surfaces.iter_mut().find(|s| s.name == name)?.coating = coating;
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Crossing {
    pub surface: SurfaceId,
    pub incident: MaterialId,
    pub transmitted: MaterialId,
}
