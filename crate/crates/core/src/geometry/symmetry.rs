//! Discrete rotational symmetries of the standard primitives.
//!
//! Each axis contributes the cyclic rotations `2πk/m` where the order `m`
//! also counts quarter turns that only swap two scale axes. Every element is
//! a signed permutation matrix, so it pairs with a permutation of the scale
//! components.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};

use super::PrimitiveClass;
use crate::{Error, Result};

/// A rotation `Q` mapping a standard primitive onto itself together with the
/// scale permutation `σ` satisfying `diag(s)·Q = Q·diag(σ(s))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryElement {
    rotation: Matrix3<f64>,
    /// `σ(s)[j] = s[scale_permutation[j]]`.
    scale_permutation: [usize; 3],
}

impl SymmetryElement {
    pub fn identity() -> Self {
        SymmetryElement {
            rotation: Matrix3::identity(),
            scale_permutation: [0, 1, 2],
        }
    }

    /// Builds an element from a rotation that is (up to rounding) a signed
    /// permutation matrix.
    pub fn from_rotation(rotation: &Matrix3<f64>) -> Result<Self> {
        let rounded = rotation.map(f64::round);
        if (rounded - rotation).abs().max() > 1e-9 || (rounded.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "{rotation} is not a proper signed permutation"
            )));
        }
        let mut scale_permutation = [0; 3];
        for (j, slot) in scale_permutation.iter_mut().enumerate() {
            let column = rounded.column(j);
            let nonzero: Vec<usize> = (0..3).filter(|&i| column[i] != 0.0).collect();
            match nonzero.as_slice() {
                [i] if column[*i].abs() == 1.0 => *slot = *i,
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "{rotation} is not a proper signed permutation"
                    )))
                }
            }
        }
        Ok(SymmetryElement {
            rotation: rounded,
            scale_permutation,
        })
    }

    /// Rotation by `angle` about principal axis `axis`, snapped to the
    /// nearest signed permutation.
    fn axis_rotation(axis: usize, angle: f64) -> Self {
        let axis = Vector3::ith(axis, 1.0);
        let rotation = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_unchecked(axis), angle);
        Self::from_rotation(&rotation.into_inner().map(f64::round))
            .expect("multiples of quarter turns are signed permutations")
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn scale_permutation(&self) -> [usize; 3] {
        self.scale_permutation
    }

    pub fn permute_scale(&self, scale: [f64; 3]) -> [f64; 3] {
        self.scale_permutation.map(|i| scale[i])
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == Matrix3::identity()
    }

    pub fn compose(&self, other: &SymmetryElement) -> SymmetryElement {
        Self::from_rotation(&(self.rotation * other.rotation))
            .expect("product of signed permutations is a signed permutation")
    }
}

/// Per-axis symmetry orders (x, y, z) of a standard primitive.
pub fn axis_orders(class: PrimitiveClass) -> [u32; 3] {
    match class {
        PrimitiveClass::Cuboid | PrimitiveClass::Ellipsoid => [4, 4, 4],
        // Pinning the axis to z means a quarter turn about x or y is never a
        // symmetry, whatever the scales.
        PrimitiveClass::EllipticalCylinder => [2, 2, 4],
    }
}

/// Union over the principal axes of the cyclic rotation subgroups, with
/// duplicates (the identity and any coinciding rotations) removed.
pub fn enumerate_axis_symmetries(orders: [u32; 3]) -> Vec<SymmetryElement> {
    let mut out: Vec<SymmetryElement> = Vec::new();
    for (axis, &order) in orders.iter().enumerate() {
        for k in 0..order {
            let element =
                SymmetryElement::axis_rotation(axis, 2.0 * PI * f64::from(k) / f64::from(order));
            if !out.iter().any(|e| e.rotation == element.rotation) {
                out.push(element);
            }
        }
    }
    out
}

/// Smallest set containing `generators` that is closed under composition.
pub fn close_under_composition(generators: &[SymmetryElement]) -> Vec<SymmetryElement> {
    let mut group: Vec<SymmetryElement> = vec![SymmetryElement::identity()];
    for g in generators {
        if !group.iter().any(|e| e.rotation == g.rotation) {
            group.push(*g);
        }
    }
    let mut frontier = 0;
    while frontier < group.len() {
        let end = group.len();
        for i in frontier..end {
            for j in 0..end {
                for product in [group[i].compose(&group[j]), group[j].compose(&group[i])] {
                    if !group.iter().any(|e| e.rotation == product.rotation) {
                        group.push(product);
                    }
                }
            }
        }
        frontier = end;
    }
    group
}

#[derive(Clone, Debug)]
struct ClassSymmetries {
    generators: Vec<SymmetryElement>,
    group: Vec<SymmetryElement>,
}

/// Symmetry sets for every registered primitive class.
#[derive(Clone, Debug, Default)]
pub struct SymmetryTable {
    classes: HashMap<PrimitiveClass, ClassSymmetries>,
}

impl SymmetryTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Table for the three built-in classes.
    pub fn standard() -> Self {
        let mut table = Self::empty();
        for class in PrimitiveClass::ALL {
            table.register(class, enumerate_axis_symmetries(axis_orders(class)));
        }
        table
    }

    /// Registers (or replaces) the symmetry set of `class`. The identity is
    /// added if missing and duplicate rotations are dropped.
    pub fn register(&mut self, class: PrimitiveClass, elements: Vec<SymmetryElement>) {
        let mut generators = vec![SymmetryElement::identity()];
        for e in elements {
            if !generators.iter().any(|g| g.rotation == e.rotation) {
                generators.push(e);
            }
        }
        let group = close_under_composition(&generators);
        self.classes
            .insert(class, ClassSymmetries { generators, group });
    }

    /// The per-axis symmetry set of `class`.
    pub fn elements(&self, class: PrimitiveClass) -> Result<&[SymmetryElement]> {
        self.classes
            .get(&class)
            .map(|c| c.generators.as_slice())
            .ok_or(Error::UnknownClass(class.index() as i64))
    }

    /// Closure of [`elements`](Self::elements) under composition. Canonical
    /// forms are taken over this group so that every symmetric variant of a
    /// primitive lands on the same representative.
    pub fn group(&self, class: PrimitiveClass) -> Result<&[SymmetryElement]> {
        self.classes
            .get(&class)
            .map(|c| c.group.as_slice())
            .ok_or(Error::UnknownClass(class.index() as i64))
    }
}

pub(crate) fn standard_table() -> &'static SymmetryTable {
    static TABLE: OnceLock<SymmetryTable> = OnceLock::new();
    TABLE.get_or_init(SymmetryTable::standard)
}

/// Symmetry set of a built-in primitive class.
pub fn symmetry_set(class: PrimitiveClass) -> Vec<SymmetryElement> {
    standard_table()
        .elements(class)
        .expect("built-in classes are registered")
        .to_vec()
}
