//! Object models and their definition files.
//!
//! An object file is TOML:
//!
//! ```toml
//! id = "cone"
//! diameter_m = 0.08
//! lambda_m = 0.04          # optional, defaults to diameter_m / 2
//! mesh = "cone.mesh"       # relative to the object file
//!
//! [symmetry]
//! type = "revolution"      # "none" | "cyclic" (with k = ..) | "revolution"
//! ```
//!
//! Instead of `mesh`, a `[primitive]` table may describe one of the built-in
//! shapes (see [`Primitive`]).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Mesh, Primitive, SymmetryClass};
use crate::error::{Error, Result};

/// Relative slack on the bounding-sphere check (mesh files are stored as f32).
const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel {
    pub id: String,
    /// Diameter of the bounding sphere centered on the body origin, meters.
    pub diameter: f64,
    pub symmetry: SymmetryClass,
    /// Scale applied to the rotation axes in pose representatives, meters.
    pub representative_scale: f64,
    pub mesh: Mesh,
}

impl ObjectModel {
    pub fn new(
        id: impl Into<String>,
        diameter: f64,
        symmetry: SymmetryClass,
        representative_scale: Option<f64>,
        mesh: Mesh,
    ) -> Result<Self> {
        let id = id.into();
        if !(diameter.is_finite() && diameter > 0.0) {
            return Err(Error::InvalidObject(format!(
                "`{id}`: diameter must be positive, got {diameter}"
            )));
        }
        let representative_scale = representative_scale.unwrap_or(diameter / 2.0);
        if !(representative_scale.is_finite() && representative_scale > 0.0) {
            return Err(Error::InvalidObject(format!(
                "`{id}`: representative scale must be positive, got {representative_scale}"
            )));
        }
        let radius = mesh.max_radius();
        if radius > diameter / 2.0 * (1.0 + BOUND_SLACK) {
            return Err(Error::InvalidObject(format!(
                "`{id}`: mesh reaches {radius} m from the origin, beyond half the diameter {diameter} m"
            )));
        }
        Ok(Self {
            id,
            diameter,
            symmetry,
            representative_scale,
            mesh,
        })
    }

    /// Builds an object whose diameter is twice the mesh's largest vertex norm.
    pub fn from_mesh(id: impl Into<String>, symmetry: SymmetryClass, mesh: Mesh) -> Result<Self> {
        let diameter = 2.0 * mesh.max_radius();
        Self::new(id, diameter, symmetry, None, mesh)
    }

    /// Number of grid tensor channels for this object type.
    pub fn channels(&self) -> usize {
        2 + 3 + self.symmetry.angle_channels()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let file: ObjectFile = toml::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        file.into_model(base)
    }
}

/// Serialized form of an object definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectFile {
    pub id: String,
    pub diameter_m: f64,
    pub symmetry: SymmetryClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive: Option<Primitive>,
}

impl ObjectFile {
    /// Resolves the mesh (relative to `base`) and validates the model.
    pub fn into_model(self, base: &Path) -> Result<ObjectModel> {
        let mesh = match (&self.mesh, &self.primitive) {
            (Some(p), None) => Mesh::load(base.join(p))?,
            (None, Some(prim)) => prim.mesh(),
            _ => {
                return Err(Error::InvalidObject(format!(
                    "`{}`: exactly one of `mesh` or `primitive` is required",
                    self.id
                )))
            }
        };
        ObjectModel::new(
            self.id,
            self.diameter_m,
            self.symmetry,
            self.lambda_m,
            mesh,
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// Object models by id.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    objects: BTreeMap<String, ObjectModel>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, object: ObjectModel) {
        self.objects.insert(object.id.clone(), object);
    }

    pub fn get(&self, id: &str) -> Result<&ObjectModel> {
        self.objects
            .get(id)
            .ok_or_else(|| Error::UnknownObject(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

impl FromIterator<ObjectModel> for Catalog {
    fn from_iter<I: IntoIterator<Item = ObjectModel>>(iter: I) -> Self {
        let mut catalog = Catalog::new();
        for object in iter {
            catalog.insert(object);
        }
        catalog
    }
}
