//! Discretization of primitive attributes and sequence framing.
//!
//! Every continuous attribute dimension is cut into uniform bins over a fixed
//! range; a bin decodes to its center.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{is_canonical, Assembly, PointCloud, Primitive, PrimitiveClass};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Rotation,
    Scale,
    Translation,
}

impl AttributeKind {
    pub const ALL: [AttributeKind; 3] = [
        AttributeKind::Rotation,
        AttributeKind::Scale,
        AttributeKind::Translation,
    ];

    /// `(lo, hi)` of the binned range. Rotation is `[-π, π)`, scale `(0, 1]`,
    /// translation `[-1, 1]`.
    pub fn range(self) -> (f64, f64) {
        match self {
            AttributeKind::Rotation => (-PI, PI),
            AttributeKind::Scale => (0.0, 1.0),
            AttributeKind::Translation => (-1.0, 1.0),
        }
    }
}

/// Number of bins per attribute dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretizer {
    pub rotation_levels: usize,
    pub scale_levels: usize,
    pub translation_levels: usize,
}

impl Default for Discretizer {
    fn default() -> Self {
        Discretizer {
            rotation_levels: 180,
            scale_levels: 128,
            translation_levels: 128,
        }
    }
}

impl Discretizer {
    pub fn validate(&self) -> Result<()> {
        if self.rotation_levels == 0 || self.scale_levels == 0 || self.translation_levels == 0 {
            return Err(Error::InvalidInput(format!(
                "discretizer levels must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn levels(&self, kind: AttributeKind) -> usize {
        match kind {
            AttributeKind::Rotation => self.rotation_levels,
            AttributeKind::Scale => self.scale_levels,
            AttributeKind::Translation => self.translation_levels,
        }
    }

    pub fn bin_width(&self, kind: AttributeKind) -> f64 {
        let (lo, hi) = kind.range();
        (hi - lo) / self.levels(kind) as f64
    }

    /// Bin index of `value` and whether it had to be clamped into range.
    pub fn quantize_clamped(&self, value: f64, kind: AttributeKind) -> Result<(usize, bool)> {
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!("cannot quantize {value} ({kind:?})")));
        }
        let (lo, hi) = kind.range();
        let clamped = value < lo || value > hi;
        let v = value.clamp(lo, hi);
        let levels = self.levels(kind);
        let bin = ((v - lo) / (hi - lo) * levels as f64).floor();
        Ok(((bin.max(0.0) as usize).min(levels - 1), clamped))
    }

    pub fn quantize(&self, value: f64, kind: AttributeKind) -> Result<usize> {
        let (bin, clamped) = self.quantize_clamped(value, kind)?;
        if clamped {
            log::warn!("{kind:?} value {value} outside range, clamped to bin {bin}");
        }
        Ok(bin)
    }

    pub fn dequantize(&self, bin: usize, kind: AttributeKind) -> Result<f64> {
        let levels = self.levels(kind);
        if bin >= levels {
            return Err(Error::InvalidInput(format!(
                "{kind:?} bin {bin} out of range 0..{levels}"
            )));
        }
        let (lo, _) = kind.range();
        Ok(lo + (bin as f64 + 0.5) * self.bin_width(kind))
    }

    /// Centers of all bins of `kind`, in bin order.
    pub fn bin_centers(&self, kind: AttributeKind) -> Vec<f64> {
        (0..self.levels(kind))
            .map(|b| self.dequantize(b, kind).expect("bin in range"))
            .collect()
    }
}

/// Discrete form of one primitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenizedPrimitive {
    pub class: u32,
    pub scale: [u32; 3],
    pub rotation: [u32; 3],
    pub translation: [u32; 3],
}

impl TokenizedPrimitive {
    pub fn validate(&self, d: &Discretizer) -> Result<()> {
        PrimitiveClass::from_index(i64::from(self.class))?;
        let check = |bins: &[u32; 3], kind: AttributeKind| {
            if bins.iter().any(|&b| b as usize >= d.levels(kind)) {
                Err(Error::InvalidInput(format!("{kind:?} bins {bins:?} out of range")))
            } else {
                Ok(())
            }
        };
        check(&self.scale, AttributeKind::Scale)?;
        check(&self.rotation, AttributeKind::Rotation)?;
        check(&self.translation, AttributeKind::Translation)
    }
}

/// Token sequence of one assembly, optionally paired with its conditioning
/// cloud. `terminated` records that the sequence ends with EOS.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSample {
    pub condition: Option<PointCloud>,
    pub tokens: Vec<TokenizedPrimitive>,
    pub terminated: bool,
    /// Attribute values that fell outside their range and were clamped.
    pub clamped_values: usize,
}

fn zyx_key(p: &Primitive) -> [f64; 3] {
    [p.translation[2], p.translation[1], p.translation[0]]
}

/// Stable sort by centroid, lowest z first, then y, then x.
pub fn sort_assembly(a: &Assembly) -> Assembly {
    let mut primitives = a.primitives.clone();
    primitives.sort_by(|p, q| {
        let (kp, kq) = (zyx_key(p), zyx_key(q));
        kp[0]
            .total_cmp(&kq[0])
            .then(kp[1].total_cmp(&kq[1]))
            .then(kp[2].total_cmp(&kq[2]))
    });
    Assembly::new(primitives)
}

pub fn is_sorted(a: &Assembly) -> bool {
    a.primitives.windows(2).all(|w| {
        let (a, b) = (zyx_key(&w[0]), zyx_key(&w[1]));
        (a[0], a[1], a[2]) <= (b[0], b[1], b[2])
    })
}

fn tokenize(p: &Primitive, d: &Discretizer, clamped: &mut usize) -> Result<TokenizedPrimitive> {
    let mut bins = |values: [f64; 3], kind: AttributeKind| -> Result<[u32; 3]> {
        let mut out = [0u32; 3];
        for (o, v) in out.iter_mut().zip(values) {
            let (bin, c) = d.quantize_clamped(v, kind)?;
            if c {
                log::warn!("{kind:?} value {v} outside range, clamped to bin {bin}");
                *clamped += 1;
            }
            *o = bin as u32;
        }
        Ok(out)
    };
    Ok(TokenizedPrimitive {
        class: p.class.index() as u32,
        scale: bins(p.scale, AttributeKind::Scale)?,
        rotation: bins(p.rotation, AttributeKind::Rotation)?,
        translation: bins(p.translation, AttributeKind::Translation)?,
    })
}

/// Quantizes a canonical, z-y-x sorted assembly into a terminated sequence.
pub fn encode_assembly(a: &Assembly, d: &Discretizer) -> Result<SequenceSample> {
    for (i, p) in a.primitives.iter().enumerate() {
        if !is_canonical(p)? {
            return Err(Error::ContractViolation(format!(
                "primitive {i} is not in canonical form: {p:?}"
            )));
        }
    }
    if !is_sorted(a) {
        return Err(Error::ContractViolation(
            "assembly is not sorted in z-y-x centroid order".into(),
        ));
    }
    encode_assembly_unchecked(a, d)
}

/// [`encode_assembly`] without the canonical-form and ordering checks. Used
/// to build deliberately ambiguous targets for ablations.
pub fn encode_assembly_unchecked(a: &Assembly, d: &Discretizer) -> Result<SequenceSample> {
    let mut clamped_values = 0;
    let tokens = a
        .primitives
        .iter()
        .map(|p| tokenize(p, d, &mut clamped_values))
        .collect::<Result<Vec<_>>>()?;
    Ok(SequenceSample {
        condition: None,
        tokens,
        terminated: true,
        clamped_values,
    })
}

pub fn decode_primitive(t: &TokenizedPrimitive, d: &Discretizer) -> Result<Primitive> {
    let class = PrimitiveClass::from_index(i64::from(t.class))?;
    let values = |bins: [u32; 3], kind: AttributeKind| -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (o, b) in out.iter_mut().zip(bins) {
            *o = d.dequantize(b as usize, kind)?;
        }
        Ok(out)
    };
    Ok(Primitive::new(
        class,
        values(t.scale, AttributeKind::Scale)?,
        values(t.rotation, AttributeKind::Rotation)?,
        values(t.translation, AttributeKind::Translation)?,
    ))
}

/// Dequantizes every token. Canonicalization is not re-applied.
pub fn decode_sequence(s: &SequenceSample, d: &Discretizer) -> Result<Assembly> {
    s.tokens.iter().map(|t| decode_primitive(t, d)).collect()
}
