//! Primitive classes, transformed primitives, assemblies and point clouds.

mod canonical;
mod fps;
mod mesh;
mod normalize;
mod rotation;
mod sampling;
mod symmetry;

pub use canonical::{canonicalize, canonicalize_assembly, is_canonical, symmetric_variants, CANONICAL_TOLERANCE};
pub use fps::farthest_point_sample;
pub use mesh::{primitive_mesh, standard_mesh, TriangleMesh, DEFAULT_MESH_RESOLUTION};
pub use normalize::{normalize_assembly, normalize_points, UnitCubeMap};
pub use rotation::{euler_to_matrix, matrix_to_euler, wrap_angle};
pub use sampling::{assembly_surface, largest_remainder, sample_surface, surface_area};
pub use symmetry::{symmetry_set, SymmetryElement, SymmetryTable};

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Standard primitive shapes. The integer ids are part of the dataset and
/// token formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "i64")]
pub enum PrimitiveClass {
    /// Box with half-extents (1, 1, 1).
    Cuboid = 0,
    /// Radius 1, half-height 1, axis along local +z, capped.
    EllipticalCylinder = 1,
    /// Unit sphere.
    Ellipsoid = 2,
}

impl PrimitiveClass {
    pub const ALL: [PrimitiveClass; 3] = [
        PrimitiveClass::Cuboid,
        PrimitiveClass::EllipticalCylinder,
        PrimitiveClass::Ellipsoid,
    ];

    pub const COUNT: usize = Self::ALL.len();

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: i64) -> Result<Self> {
        usize::try_from(index)
            .ok()
            .and_then(|i| Self::ALL.get(i).copied())
            .ok_or(Error::UnknownClass(index))
    }

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveClass::Cuboid => "cuboid",
            PrimitiveClass::EllipticalCylinder => "elliptical_cylinder",
            PrimitiveClass::Ellipsoid => "ellipsoid",
        }
    }
}

impl From<PrimitiveClass> for u8 {
    fn from(class: PrimitiveClass) -> u8 {
        class as u8
    }
}

impl TryFrom<i64> for PrimitiveClass {
    type Error = Error;

    fn try_from(index: i64) -> Result<Self> {
        Self::from_index(index)
    }
}

impl std::fmt::Display for PrimitiveClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One standard primitive placed in the world by per-axis scale, x-y-z
/// Euler rotation (radians) and translation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(rename = "class")]
    pub class: PrimitiveClass,
    pub scale: [f64; 3],
    pub rotation: [f64; 3],
    pub translation: [f64; 3],
}

impl Primitive {
    pub fn new(
        class: PrimitiveClass,
        scale: [f64; 3],
        rotation: [f64; 3],
        translation: [f64; 3],
    ) -> Self {
        Primitive {
            class,
            scale,
            rotation,
            translation,
        }
    }

    /// Unit-scale, unrotated primitive at the origin.
    pub fn unit(class: PrimitiveClass) -> Self {
        Primitive::new(class, [1.0; 3], [0.0; 3], [0.0; 3])
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        euler_to_matrix(self.rotation)
    }

    /// Linear part of the local-to-world map, `R · diag(s)`.
    pub fn linear_map(&self) -> Matrix3<f64> {
        self.rotation_matrix() * Matrix3::from_diagonal(&Vector3::from(self.scale))
    }

    /// Maps a point of the standard primitive into the world: `R·diag(s)·x + t`.
    pub fn transform_point(&self, local: [f64; 3]) -> [f64; 3] {
        let world = self.linear_map() * Vector3::from(local) + Vector3::from(self.translation);
        world.into()
    }

    /// Checks the value ranges every stored primitive must satisfy.
    pub fn validate(&self) -> Result<()> {
        let finite = self
            .scale
            .iter()
            .chain(&self.rotation)
            .chain(&self.translation)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput(format!("non-finite primitive {self:?}")));
        }
        if self.scale.iter().any(|&s| s <= 0.0 || s > 1.0) {
            return Err(Error::InvalidInput(format!(
                "scale {:?} outside (0, 1]",
                self.scale
            )));
        }
        if self.rotation.iter().any(|&r| !(-PI..PI).contains(&r)) {
            return Err(Error::InvalidInput(format!(
                "rotation {:?} outside [-pi, pi)",
                self.rotation
            )));
        }
        if self.translation.iter().any(|t| t.abs() > 1.0) {
            return Err(Error::InvalidInput(format!(
                "translation {:?} outside [-1, 1]",
                self.translation
            )));
        }
        Ok(())
    }

    /// Half-extents of the world-space axis-aligned bounding box.
    pub fn aabb_half_extents(&self) -> [f64; 3] {
        let m = self.linear_map();
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let row = m.row(i);
            *o = match self.class {
                PrimitiveClass::Cuboid => row.iter().map(|v| v.abs()).sum(),
                PrimitiveClass::Ellipsoid => row.norm(),
                PrimitiveClass::EllipticalCylinder => {
                    (row[0] * row[0] + row[1] * row[1]).sqrt() + row[2].abs()
                }
            };
        }
        out
    }

    /// Support function: extent of the primitive along world direction `dir`
    /// measured from its center.
    pub fn support(&self, dir: [f64; 3]) -> f64 {
        let u = self.linear_map().transpose() * Vector3::from(dir);
        match self.class {
            PrimitiveClass::Cuboid => u.iter().map(|v| v.abs()).sum(),
            PrimitiveClass::Ellipsoid => u.norm(),
            PrimitiveClass::EllipticalCylinder => (u[0] * u[0] + u[1] * u[1]).sqrt() + u[2].abs(),
        }
    }
}

/// Ordered list of primitives approximating one shape.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Assembly {
    pub primitives: Vec<Primitive>,
}

impl Assembly {
    pub fn new(primitives: Vec<Primitive>) -> Self {
        Assembly { primitives }
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.primitives.iter().try_for_each(Primitive::validate)
    }
}

impl FromIterator<Primitive> for Assembly {
    fn from_iter<I: IntoIterator<Item = Primitive>>(iter: I) -> Self {
        Assembly::new(iter.into_iter().collect())
    }
}

/// N×3 points with optional per-point instance labels. Never empty.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
    labels: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("point cloud is empty".into()));
        }
        Ok(PointCloud {
            points,
            labels: None,
        })
    }

    pub fn with_labels(points: Vec<[f64; 3]>, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        let mut cloud = Self::new(points)?;
        cloud.labels = Some(labels);
        Ok(cloud)
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    pub fn into_parts(self) -> (Vec<[f64; 3]>, Option<Vec<u32>>) {
        (self.points, self.labels)
    }
}
