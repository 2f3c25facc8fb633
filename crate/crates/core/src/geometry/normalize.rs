//! Isotropic normalization into the `[-1, 1]³` cube.

use super::{Assembly, Primitive};
use crate::{Error, Result};

/// The map `x ↦ factor·x + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitCubeMap {
    pub factor: f64,
    pub offset: [f64; 3],
}

impl UnitCubeMap {
    /// Map sending the box `[lo, hi]` to a box centred at the origin whose
    /// longest side spans `[-1, 1]`.
    pub fn from_bounds(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0f64, f64::max);
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::Degenerate(format!(
                "bounding box [{lo:?}, {hi:?}] has no extent"
            )));
        }
        let factor = 2.0 / extent;
        let offset = [0, 1, 2].map(|k| -factor * 0.5 * (lo[k] + hi[k]));
        Ok(UnitCubeMap { factor, offset })
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|k| self.factor * p[k] + self.offset[k])
    }

    pub fn invert(&self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|k| (p[k] - self.offset[k]) / self.factor)
    }

    pub fn apply_primitive(&self, p: &Primitive) -> Primitive {
        Primitive {
            scale: p.scale.map(|s| s * self.factor),
            translation: self.apply(p.translation),
            ..*p
        }
    }
}

fn bounds(points: impl Iterator<Item = ([f64; 3], [f64; 3])>) -> ([f64; 3], [f64; 3]) {
    points.fold(
        ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]),
        |(mut lo, mut hi), (a, b)| {
            for k in 0..3 {
                lo[k] = lo[k].min(a[k]);
                hi[k] = hi[k].max(b[k]);
            }
            (lo, hi)
        },
    )
}

pub fn normalize_points(points: &[[f64; 3]]) -> Result<(Vec<[f64; 3]>, UnitCubeMap)> {
    let (lo, hi) = bounds(points.iter().map(|p| (*p, *p)));
    let map = UnitCubeMap::from_bounds(lo, hi)?;
    Ok((points.iter().map(|p| map.apply(*p)).collect(), map))
}

/// Normalizes an assembly by the exact bounding box of its primitives:
/// translations are mapped, scales multiplied by the factor, rotations kept.
pub fn normalize_assembly(a: &Assembly) -> Result<(Assembly, UnitCubeMap)> {
    if a.is_empty() {
        return Err(Error::EmptyAssembly);
    }
    let (lo, hi) = bounds(a.primitives.iter().map(|p| {
        let h = p.aabb_half_extents();
        let t = p.translation;
        ([0, 1, 2].map(|k| t[k] - h[k]), [0, 1, 2].map(|k| t[k] + h[k]))
    }));
    let map = UnitCubeMap::from_bounds(lo, hi)?;
    Ok((a.primitives.iter().map(|p| map.apply_primitive(p)).collect(), map))
}
