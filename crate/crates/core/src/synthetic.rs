//! Procedural ground-truth assemblies.
//!
//! Assemblies are built one primitive at a time. Most primitives are glued
//! face-to-face onto an earlier one so the results look like furniture-ish
//! structures rather than clouds of blobs; the class mix follows the
//! proportions of a large hand-annotated corpus.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{build_record, DatasetRecord};
use crate::geometry::{
    canonicalize_assembly, matrix_to_euler, normalize_assembly, Assembly, Primitive,
    PrimitiveClass,
};
use crate::tokenization::sort_assembly;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Inclusive bounds on primitives per assembly.
    pub count_range: (usize, usize),
    /// Probabilities of cuboid, elliptical cylinder, ellipsoid.
    pub class_probs: [f64; 3],
    /// Bounds on per-axis half-extents before normalization.
    pub scale_range: (f64, f64),
    /// Chance that a primitive is attached to the face of an earlier one
    /// instead of being dropped anywhere in the cube. Zero gives purely
    /// uniform placement.
    pub attach_probability: f64,
    /// Relative sliding of attached primitives along the contact face, and
    /// the offset range of the first primitive.
    pub jitter: f64,
    /// Fraction of primitives left unrotated; the rest get a uniformly
    /// random orientation.
    pub axis_aligned_fraction: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            count_range: (1, 8),
            class_probs: [0.852, 0.118, 0.030],
            scale_range: (0.08, 0.5),
            attach_probability: 0.8,
            jitter: 0.3,
            axis_aligned_fraction: 0.8,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.count_range.0 < 1 || self.count_range.0 > self.count_range.1 {
            return bad(format!("count_range {:?} must satisfy 1 <= min <= max", self.count_range));
        }
        let sum: f64 = self.class_probs.iter().sum();
        if self.class_probs.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return bad(format!("class_probs {:?} must be nonnegative and sum to 1", self.class_probs));
        }
        let (lo, hi) = self.scale_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("scale_range {:?} must satisfy 0 < lo <= hi", self.scale_range));
        }
        for (name, v) in [
            ("attach_probability", self.attach_probability),
            ("axis_aligned_fraction", self.axis_aligned_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} must lie in [0, 1]"));
            }
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return bad(format!("jitter = {} must be nonnegative", self.jitter));
        }
        Ok(())
    }

    /// Independent generator stream for record `index`.
    pub fn record_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    // normalized Gaussian 4-vector is a uniform unit quaternion
    let q: [f64; 4] = [0; 4].map(|_| rng.sample(StandardNormal));
    let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
    matrix_to_euler(q.to_rotation_matrix().matrix()).expect("unit quaternion gives a rotation")
}

fn uniform3<R: Rng + ?Sized>(rng: &mut R, half: f64) -> [f64; 3] {
    [0; 3].map(|_| if half > 0.0 { rng.random_range(-half..=half) } else { 0.0 })
}

/// Draws one assembly: normalized to the unit cube, canonical and z-y-x
/// sorted.
pub fn generate_assembly<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> Result<Assembly> {
    cfg.validate()?;
    let classes = WeightedIndex::new(cfg.class_probs)
        .map_err(|e| Error::InvalidInput(format!("class_probs: {e}")))?;
    let count = rng.random_range(cfg.count_range.0..=cfg.count_range.1);
    let (lo, hi) = cfg.scale_range;

    let mut primitives: Vec<Primitive> = Vec::with_capacity(count);
    for i in 0..count {
        let class = PrimitiveClass::ALL[classes.sample(rng)];
        let scale = [0; 3].map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo });
        let rotation = if rng.random::<f64>() < cfg.axis_aligned_fraction {
            [0.0; 3]
        } else {
            random_rotation(rng)
        };
        let mut p = Primitive::new(class, scale, rotation, [0.0; 3]);

        if i == 0 {
            p.translation = uniform3(rng, cfg.jitter);
        } else if rng.random::<f64>() < cfg.attach_probability {
            let parent = primitives[rng.random_range(0..primitives.len())];
            let frame = parent.rotation_matrix();
            let axis = rng.random_range(0..3);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let normal = frame.column(axis) * sign;
            let dir = [normal[0], normal[1], normal[2]];
            let gap = parent.support(dir) + p.support(dir);
            let mut center = nalgebra::Vector3::from(parent.translation) + normal * gap;
            for k in (0..3).filter(|&k| k != axis) {
                let slide = if cfg.jitter > 0.0 {
                    rng.random_range(-cfg.jitter..=cfg.jitter)
                } else {
                    0.0
                };
                center += frame.column(k) * (slide * parent.scale[k]);
            }
            p.translation = center.into();
        } else {
            p.translation = uniform3(rng, 1.0);
        }
        primitives.push(p);
    }

    let (mut normalized, _) = normalize_assembly(&Assembly::new(primitives))?;
    // A tilted primitive can have a half-extent longer than the box it sits
    // in; shrink about the origin until every scale fits in (0, 1].
    let largest = normalized
        .primitives
        .iter()
        .flat_map(|p| p.scale)
        .fold(0.0f64, f64::max);
    if largest > 1.0 {
        let shrink = 1.0 / largest;
        for p in &mut normalized.primitives {
            p.scale = p.scale.map(|s| (s * shrink).min(1.0));
            p.translation = p.translation.map(|t| t * shrink);
        }
    }
    Ok(sort_assembly(&canonicalize_assembly(&normalized)?))
}

/// Generates `count` records with `n_points` condition points each. Record
/// `i` depends only on `(cfg, i)`.
pub fn generate_dataset(cfg: &GeneratorConfig, count: usize, n_points: usize) -> Result<Vec<DatasetRecord>> {
    (0..count)
        .map(|i| {
            let mut rng = cfg.record_rng(i as u64);
            let assembly = generate_assembly(cfg, &mut rng)?;
            build_record(format!("synth_{:06}", i), assembly, n_points, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::is_canonical;
    use crate::tokenization::is_sorted;

    #[test]
    fn single_primitive_range() {
        let cfg = GeneratorConfig {
            count_range: (1, 1),
            ..Default::default()
        };
        for i in 0..50 {
            let a = generate_assembly(&cfg, &mut cfg.record_rng(i)).unwrap();
            assert_eq!(a.len(), 1);
        }
    }

    #[test]
    fn outputs_are_valid_canonical_and_sorted() {
        let cfg = GeneratorConfig::default();
        for i in 0..300 {
            let a = generate_assembly(&cfg, &mut cfg.record_rng(i)).unwrap();
            assert!((1..=8).contains(&a.len()));
            a.validate().unwrap();
            assert!(is_sorted(&a));
            for p in &a.primitives {
                assert!(is_canonical(p).unwrap());
            }
        }
    }

    #[test]
    fn same_seed_same_assembly() {
        let cfg = GeneratorConfig {
            seed: 42,
            ..Default::default()
        };
        let a = generate_assembly(&cfg, &mut cfg.record_rng(3)).unwrap();
        let b = generate_assembly(&cfg, &mut cfg.record_rng(3)).unwrap();
        assert_eq!(a, b);
        let c = generate_assembly(&cfg, &mut cfg.record_rng(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn class_frequencies_match_configuration() {
        let cfg = GeneratorConfig::default();
        let mut counts = [0usize; 3];
        for i in 0..10_000 {
            for p in generate_assembly(&cfg, &mut cfg.record_rng(i)).unwrap().primitives {
                counts[p.class.index()] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        for (k, &c) in counts.iter().enumerate() {
            let pk = cfg.class_probs[k];
            let sigma = (total as f64 * pk * (1.0 - pk)).sqrt();
            assert!(
                (c as f64 - total as f64 * pk).abs() < 3.0 * sigma,
                "class {k}: {c} of {total}"
            );
        }
    }

    #[test]
    fn uniform_placement_is_available() {
        let cfg = GeneratorConfig {
            attach_probability: 0.0,
            count_range: (4, 4),
            ..Default::default()
        };
        let a = generate_assembly(&cfg, &mut cfg.record_rng(0)).unwrap();
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            GeneratorConfig { count_range: (0, 2), ..Default::default() },
            GeneratorConfig { count_range: (3, 2), ..Default::default() },
            GeneratorConfig { class_probs: [0.5, 0.5, 0.5], ..Default::default() },
            GeneratorConfig { class_probs: [1.2, -0.2, 0.0], ..Default::default() },
            GeneratorConfig { scale_range: (0.0, 0.4), ..Default::default() },
            GeneratorConfig { attach_probability: 1.5, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
