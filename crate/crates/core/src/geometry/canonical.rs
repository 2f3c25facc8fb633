//! Ambiguity-free primitive parameters.
//!
//! A primitive and every symmetric variant `(R·Q, σ(s), t)` describe the same
//! solid. The canonical representative is the variant whose Euler angles have
//! the smallest L1 norm, ties broken by the lexicographically smallest
//! `(rotation, scale)`.

use std::cmp::Ordering;

use super::symmetry::standard_table;
use super::{matrix_to_euler, Assembly, Primitive, SymmetryElement, SymmetryTable};
use crate::Result;

/// L1 norms closer than this count as tied.
const L1_TIE_TOLERANCE: f64 = 1e-9;

/// Parameter tolerance used by [`is_canonical`].
pub const CANONICAL_TOLERANCE: f64 = 1e-6;

fn l1(v: &[f64; 3]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn lexicographic(a: &([f64; 3], [f64; 3]), b: &([f64; 3], [f64; 3])) -> Ordering {
    a.0.iter()
        .chain(&a.1)
        .zip(b.0.iter().chain(&b.1))
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Every symmetric variant of `p` as `(element, rotation, scale)`.
pub(crate) fn orbit<'a>(
    p: &'a Primitive,
    elements: &'a [SymmetryElement],
) -> impl Iterator<Item = Result<(SymmetryElement, [f64; 3], [f64; 3])>> + 'a {
    let r = p.rotation_matrix();
    elements.iter().map(move |q| {
        let rotation = matrix_to_euler(&(r * q.rotation()))?;
        Ok((*q, rotation, q.permute_scale(p.scale)))
    })
}

/// Canonical form of `p` using a caller-supplied table.
pub fn canonicalize_with(table: &SymmetryTable, p: &Primitive) -> Result<Primitive> {
    let candidates = orbit(p, table.group(p.class)?).collect::<Result<Vec<_>>>()?;
    let best_l1 = candidates
        .iter()
        .map(|(_, r, _)| l1(r))
        .fold(f64::INFINITY, f64::min);
    let (q, rotation, scale) = candidates
        .into_iter()
        .filter(|(_, r, _)| l1(r) <= best_l1 + L1_TIE_TOLERANCE)
        .min_by(|a, b| lexicographic(&(a.1, a.2), &(b.1, b.2)))
        .expect("the identity is always a candidate");
    // keep already-canonical input bit for bit instead of the round-tripped angles
    let unchanged = rotation
        .iter()
        .zip(&p.rotation)
        .all(|(a, b)| (a - b).abs() <= L1_TIE_TOLERANCE);
    if *q.rotation() == nalgebra::Matrix3::identity() && unchanged {
        return Ok(*p);
    }
    Ok(Primitive {
        scale,
        rotation,
        ..*p
    })
}

/// Every parameterization of the same solid as `p` reachable through the
/// symmetry group of its class, identity first.
pub fn symmetric_variants(p: &Primitive) -> Result<Vec<Primitive>> {
    orbit(p, standard_table().group(p.class)?)
        .map(|v| v.map(|(_, rotation, scale)| Primitive { scale, rotation, ..*p }))
        .collect()
}

/// Canonical form of `p` under the built-in symmetry table.
pub fn canonicalize(p: &Primitive) -> Result<Primitive> {
    canonicalize_with(standard_table(), p)
}

pub fn canonicalize_assembly(a: &Assembly) -> Result<Assembly> {
    a.primitives.iter().map(canonicalize).collect()
}

/// Whether `p` already equals its canonical form within
/// [`CANONICAL_TOLERANCE`].
pub fn is_canonical(p: &Primitive) -> Result<bool> {
    let c = canonicalize(p)?;
    let close = |a: &[f64; 3], b: &[f64; 3]| {
        a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= CANONICAL_TOLERANCE)
    };
    Ok(close(&c.rotation, &p.rotation) && close(&c.scale, &p.scale))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use nalgebra::{Matrix3, Vector3};

    use super::*;
    use crate::geometry::{euler_to_matrix, symmetry_set, PrimitiveClass};

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    fn shape_matrix(rotation: [f64; 3], scale: [f64; 3]) -> Matrix3<f64> {
        euler_to_matrix(rotation) * Matrix3::from_diagonal(&Vector3::from(scale))
    }

    #[test]
    fn identity_is_already_canonical() {
        let p = Primitive::new(
            PrimitiveClass::Cuboid,
            [1.0 / 3.0, 2.0 / 3.0, 1.0],
            [0.0; 3],
            [0.0; 3],
        );
        assert_eq!(canonicalize(&p).unwrap(), p);
    }

    #[test]
    fn hundred_degrees_about_z() {
        let s = [1.0 / 3.0, 2.0 / 3.0, 1.0];
        let p = Primitive::new(PrimitiveClass::Cuboid, s, [0.0, 0.0, deg(100.0)], [0.2, -0.1, 0.3]);

        // brute force over the ten-element set
        let set = symmetry_set(PrimitiveClass::Cuboid);
        let r = euler_to_matrix(p.rotation);
        let (best_q, best_r) = set
            .iter()
            .map(|q| (*q, matrix_to_euler(&(r * q.rotation())).unwrap()))
            .min_by(|a, b| l1(&a.1).total_cmp(&l1(&b.1)))
            .unwrap();
        assert!((best_r[2] - deg(10.0)).abs() < 1e-12);
        assert_eq!(
            *best_q.rotation(),
            Matrix3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0)
        );

        let c = canonicalize(&p).unwrap();
        assert!(c.rotation[0].abs() < 1e-12 && c.rotation[1].abs() < 1e-12);
        assert!((c.rotation[2] - deg(10.0)).abs() < 1e-12);
        assert_eq!(c.scale, [2.0 / 3.0, 1.0 / 3.0, 1.0]);
        assert_eq!(c.translation, p.translation);
        let before = shape_matrix(p.rotation, p.scale) * best_q.rotation();
        assert!((shape_matrix(c.rotation, c.scale) - before).abs().max() < 1e-6);
    }

    #[test]
    fn half_turn_about_z_keeps_scale() {
        let s = [0.2, 0.4, 0.6];
        for z in [PI, -PI] {
            let p = Primitive::new(PrimitiveClass::Cuboid, s, [0.0, 0.0, z], [0.0; 3]);
            let c = canonicalize(&p).unwrap();
            assert!(c.rotation.iter().all(|r| r.abs() < 1e-12), "{c:?}");
            assert_eq!(c.scale, s);
        }
    }

    #[test]
    fn tie_breaks_toward_negative_angles() {
        let p = Primitive::new(
            PrimitiveClass::Cuboid,
            [0.2, 0.4, 0.6],
            [0.0, 0.0, deg(45.0)],
            [0.0; 3],
        );
        let c = canonicalize(&p).unwrap();
        assert!((c.rotation[2] + deg(45.0)).abs() < 1e-12);
        assert_eq!(c.scale, [0.4, 0.2, 0.6]);
        assert_eq!(canonicalize(&c).unwrap(), c);
    }

    #[test]
    fn cylinder_never_swaps_axis_scale() {
        let p = Primitive::new(
            PrimitiveClass::EllipticalCylinder,
            [0.2, 0.4, 0.6],
            [deg(90.0), 0.0, 0.0],
            [0.0; 3],
        );
        let c = canonicalize(&p).unwrap();
        assert_eq!(c.scale[2], 0.6);
        assert!((c.rotation[0].abs() - deg(90.0)).abs() < 1e-12);
    }

    #[test]
    fn canonical_check() {
        let p = Primitive::new(
            PrimitiveClass::Cuboid,
            [0.2, 0.4, 0.6],
            [0.0, 0.0, deg(100.0)],
            [0.0; 3],
        );
        assert!(!is_canonical(&p).unwrap());
        assert!(is_canonical(&canonicalize(&p).unwrap()).unwrap());
    }
}
