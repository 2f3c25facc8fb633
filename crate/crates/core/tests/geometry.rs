mod oracles;

use std::f64::consts::PI;

use nalgebra::Matrix3;
use primasm_core::geometry::{
    canonicalize, euler_to_matrix, matrix_to_euler, sample_surface, symmetric_variants, symmetry_set, SymmetryTable,
};
use primasm_core::synthetic::{generate_assembly, GeneratorConfig};
use primasm_core::tokenization::sort_assembly;
use primasm_core::{Primitive, PrimitiveClass};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CLASSES: [PrimitiveClass; 3] =
    [PrimitiveClass::Cuboid, PrimitiveClass::EllipticalCylinder, PrimitiveClass::Ellipsoid];

fn primitive() -> impl Strategy<Value = Primitive> {
    (
        0usize..3,
        prop::array::uniform3(0.01f64..=1.0),
        (-PI..PI, -PI / 2.0..=PI / 2.0, -PI..PI),
        prop::array::uniform3(-1.0f64..=1.0),
    )
        .prop_map(|(c, scale, (a, b, g), translation)| Primitive::new(CLASSES[c], scale, [a, b, g], translation))
}

fn l1(r: &[f64; 3]) -> f64 {
    r.iter().map(|x| x.abs()).sum()
}

fn max_abs(m: Matrix3<f64>) -> f64 {
    m.abs().max()
}

fn shape(p: &Primitive) -> Matrix3<f64> {
    p.linear_map()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn canonicalization_is_idempotent(p in primitive()) {
        let c = canonicalize(&p).unwrap();
        let cc = canonicalize(&c).unwrap();
        prop_assert_eq!(c, cc);
    }

    #[test]
    fn orbit_variants_share_canonical_form(p in primitive()) {
        let c = canonicalize(&p).unwrap();
        for q in symmetry_set(p.class) {
            let v = Primitive {
                rotation: matrix_to_euler(&(p.rotation_matrix() * q.rotation())).unwrap(),
                scale: q.permute_scale(p.scale),
                ..p
            };
            let cv = canonicalize(&v).unwrap();
            for k in 0..3 {
                prop_assert!((cv.rotation[k] - c.rotation[k]).abs() <= 1e-6, "{:?} vs {:?}", cv, c);
                prop_assert!((cv.scale[k] - c.scale[k]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn canonicalization_preserves_shape(p in primitive()) {
        let c = canonicalize(&p).unwrap();
        prop_assert_eq!(c.translation, p.translation);
        let target = shape(&c);
        let best = SymmetryTable::standard()
            .group(p.class)
            .unwrap()
            .iter()
            .map(|q| max_abs(target - shape(&p) * q.rotation()))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(best <= 1e-6, "no group element reproduces the shape: {best}");
    }

    #[test]
    fn canonical_rotation_is_l1_minimal(p in primitive()) {
        let c = canonicalize(&p).unwrap();
        for q in symmetry_set(p.class) {
            let r = matrix_to_euler(&(p.rotation_matrix() * q.rotation())).unwrap();
            prop_assert!(l1(&c.rotation) <= l1(&r) + 1e-9);
        }
        for v in symmetric_variants(&p).unwrap() {
            prop_assert!(l1(&c.rotation) <= l1(&v.rotation) + 1e-9);
        }
    }

    #[test]
    fn euler_matrices_are_rotations(r in (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0)) {
        let m = euler_to_matrix([r.0, r.1, r.2]);
        prop_assert!(max_abs(m.transpose() * m - Matrix3::identity()) < 1e-9);
        prop_assert!((m.determinant() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn generated_assemblies_are_valid_canonical_sorted(seed in any::<u64>()) {
        let cfg = GeneratorConfig { seed, ..Default::default() };
        let a = generate_assembly(&cfg, &mut cfg.record_rng(0)).unwrap();
        let again = generate_assembly(&cfg, &mut cfg.record_rng(0)).unwrap();
        prop_assert_eq!(&a, &again);
        a.validate().unwrap();
        for p in &a.primitives {
            prop_assert_eq!(canonicalize(p).unwrap(), *p);
        }
        prop_assert_eq!(&sort_assembly(&a), &a);
    }
}

#[test]
fn symmetry_elements_map_standard_surfaces_onto_themselves() {
    let expected = [10, 6, 10];
    for (c, class) in CLASSES.iter().enumerate() {
        let set = symmetry_set(*class);
        assert_eq!(set.len(), expected[c]);
        let mut rng = ChaCha8Rng::seed_from_u64(c as u64);
        let cloud = sample_surface(&Primitive::unit(*class), 4096, &mut rng).unwrap();
        for q in &set {
            let worst = cloud
                .points()
                .iter()
                .map(|x| oracles::standard_surface_distance(c, &(q.rotation() * nalgebra::Vector3::from(*x)).into()))
                .fold(0.0, f64::max);
            assert!(worst < 1e-2, "{class:?}: {worst}");
        }
    }
}
