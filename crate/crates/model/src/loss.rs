//! Training objective: cross-entropy, EOS and Gumbel-Softmax Chamfer terms.

use candle_core::{DType, Device, IndexOp, Tensor, D};
use primasm_core::geometry::sample_surface;
use primasm_core::{Assembly, AttributeKind, Discretizer, Primitive, PrimitiveClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Seed of the fixed local surface points used by the Chamfer term.
const LOCAL_POINTS_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CdPairing {
    /// Each predicted primitive against its own ground-truth primitive.
    #[default]
    PerStep,
    /// Union of predicted primitives up to step n against the ground-truth
    /// union up to step n.
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub ce: f64,
    pub eos: f64,
    pub cd: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { ce: 1.0, eos: 1.0, cd: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossBreakdown {
    pub l_ce: f64,
    pub l_eos: f64,
    pub l_cd: f64,
    pub total: f64,
    /// Mean cross-entropy per target column (class, scale×3, rotation×3,
    /// translation×3).
    pub ce_per_target: [f64; 10],
}

/// i.i.d. standard Gumbel samples.
pub fn gumbel_noise<R: Rng + ?Sized>(shape: &[usize], rng: &mut R, device: &Device, dtype: DType) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    let g: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            -(-u.ln()).ln()
        })
        .collect();
    Ok(Tensor::from_vec(g, shape, device)?.to_dtype(dtype)?)
}

/// Gumbel-Softmax over the last dimension with caller-supplied noise. With
/// `hard`, the forward value is the one-hot argmax and gradients follow the
/// soft sample.
pub fn gumbel_softmax_with_noise(logits: &Tensor, noise: &Tensor, temperature: f64, hard: bool) -> Result<Tensor> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidInput(format!("gumbel temperature must be positive, got {temperature}")));
    }
    let y = candle_nn::ops::softmax(&((logits + noise)? / temperature)?, D::Minus1)?;
    if !hard {
        return Ok(y);
    }
    let levels = y.dim(D::Minus1)?;
    let idx = y.argmax_keepdim(D::Minus1)?;
    let range = Tensor::arange(0u32, levels as u32, y.device())?;
    let one_hot = idx.broadcast_eq(&range)?.to_dtype(y.dtype())?;
    Ok((one_hot + (&y - y.detach())?)?)
}

pub fn gumbel_softmax<R: Rng + ?Sized>(logits: &Tensor, temperature: f64, rng: &mut R, hard: bool) -> Result<Tensor> {
    let noise = gumbel_noise(logits.dims(), rng, logits.device(), logits.dtype())?;
    gumbel_softmax_with_noise(logits, &noise, temperature, hard)
}

/// Bin centers of one attribute as a tensor.
pub fn bin_centers(d: &Discretizer, kind: AttributeKind, device: &Device, dtype: DType) -> Result<Tensor> {
    let c = d.bin_centers(kind);
    Ok(Tensor::from_vec(c.clone(), c.len(), device)?.to_dtype(dtype)?)
}

/// Expected bin center under simplex weights over the last dimension.
pub fn soft_dequantize(soft: &Tensor, centers: &Tensor) -> Result<Tensor> {
    Ok(soft.broadcast_mul(centers)?.sum(D::Minus1)?)
}

/// Rotation matrices `(V, 3, 3)` of extrinsic Euler angles `(V, 3)`.
pub fn euler_matrices(angles: &Tensor) -> Result<Tensor> {
    let (s, c) = (angles.sin()?, angles.cos()?);
    let col = |t: &Tensor, k: usize| t.i((.., k));
    let (sa, sb, sg) = (col(&s, 0)?, col(&s, 1)?, col(&s, 2)?);
    let (ca, cb, cg) = (col(&c, 0)?, col(&c, 1)?, col(&c, 2)?);
    let sbsa = (&sb * &sa)?;
    let sbca = (&sb * &ca)?;
    let entries = [
        (&cg * &cb)?,
        ((&cg * &sbsa)? - (&sg * &ca)?)?,
        ((&cg * &sbca)? + (&sg * &sa)?)?,
        (&sg * &cb)?,
        ((&sg * &sbsa)? + (&cg * &ca)?)?,
        ((&sg * &sbca)? - (&cg * &sa)?)?,
        sb.neg()?,
        (&cb * &sa)?,
        (&cb * &ca)?,
    ];
    let v = angles.dim(0)?;
    Ok(Tensor::stack(&entries, 1)?.reshape((v, 3, 3))?)
}

/// World points `R·diag(s)·x + t` for local points `(V, P, 3)` and attribute
/// rows `(V, 3)`.
pub fn transform_points(local: &Tensor, scale: &Tensor, rotation: &Tensor, translation: &Tensor) -> Result<Tensor> {
    let scaled = local.broadcast_mul(&scale.unsqueeze(1)?)?;
    let r_t = euler_matrices(rotation)?.transpose(1, 2)?.contiguous()?;
    Ok(scaled.matmul(&r_t)?.broadcast_add(&translation.unsqueeze(1)?)?)
}

/// Symmetric Chamfer distance for each pair of point sets `(V, P, 3)`,
/// `(V, Q, 3)`: mean squared nearest distance in both directions, summed.
pub fn chamfer_sets(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let diff = a.unsqueeze(2)?.broadcast_sub(&b.unsqueeze(1)?)?;
    let d2 = diff.sqr()?.sum(D::Minus1)?;
    let ab = d2.min(2)?.mean(1)?;
    let ba = d2.min(1)?.mean(1)?;
    Ok((ab + ba)?)
}

/// Fixed canonical surface samples per class, `(classes, n, 3)`.
pub fn local_surface_points(n: usize, device: &Device, dtype: DType) -> Result<Tensor> {
    let mut flat = Vec::with_capacity(PrimitiveClass::COUNT * n * 3);
    for class in PrimitiveClass::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(LOCAL_POINTS_SEED + class.index() as u64);
        let cloud = sample_surface(&Primitive::unit(class), n, &mut rng)?;
        flat.extend(cloud.points().iter().flatten().copied());
    }
    Ok(Tensor::from_vec(flat, (PrimitiveClass::COUNT, n, 3), device)?.to_dtype(dtype)?)
}

/// Continuous attribute rows `(V, 3)` for a set of primitives.
#[derive(Debug, Clone)]
pub struct SoftPrimitives {
    pub classes: Tensor,
    pub scale: Tensor,
    pub rotation: Tensor,
    pub translation: Tensor,
}

impl SoftPrimitives {
    pub fn from_primitives(prims: &[Primitive], device: &Device, dtype: DType) -> Result<Self> {
        let rows = |f: fn(&Primitive) -> [f64; 3]| -> Result<Tensor> {
            let flat: Vec<f64> = prims.iter().flat_map(f).collect();
            Ok(Tensor::from_vec(flat, (prims.len(), 3), device)?.to_dtype(dtype)?)
        };
        let classes: Vec<u32> = prims.iter().map(|p| p.class.index() as u32).collect();
        Ok(SoftPrimitives {
            classes: Tensor::from_vec(classes, prims.len(), device)?,
            scale: rows(|p| p.scale)?,
            rotation: rows(|p| p.rotation)?,
            translation: rows(|p| p.translation)?,
        })
    }

    fn surface(&self, local: &Tensor) -> Result<Tensor> {
        let pts = local.index_select(&self.classes, 0)?;
        transform_points(&pts, &self.scale, &self.rotation, &self.translation)
    }
}

/// Mean per-step Chamfer distance between predicted and ground-truth
/// primitives, or the union variant over each sequence given by `lengths`.
pub fn chamfer_between(
    pred: &SoftPrimitives,
    gt: &SoftPrimitives,
    local: &Tensor,
    pairing: CdPairing,
    lengths: &[usize],
) -> Result<Tensor> {
    let v = pred.scale.dim(0)?;
    if gt.scale.dim(0)? != v || lengths.iter().sum::<usize>() != v {
        return Err(Error::ContractViolation(format!(
            "{v} predicted steps do not align with {} ground-truth primitives",
            gt.scale.dim(0)?
        )));
    }
    if v == 0 {
        return Ok(Tensor::zeros((), local.dtype(), local.device())?);
    }
    let a = pred.surface(local)?;
    let b = gt.surface(local)?;
    match pairing {
        CdPairing::PerStep => Ok(chamfer_sets(&a, &b)?.mean_all()?),
        CdPairing::Union => {
            let p = a.dim(1)?;
            let mut terms = Vec::with_capacity(v);
            let mut start = 0;
            for &len in lengths {
                for n in 1..=len {
                    let pa = a.narrow(0, start, n)?.reshape((1, n * p, 3))?;
                    let pb = b.narrow(0, start, n)?.reshape((1, n * p, 3))?;
                    terms.push(chamfer_sets(&pa, &pb)?);
                }
                start += len;
            }
            Ok(Tensor::cat(&terms, 0)?.mean_all()?)
        }
    }
}

/// Chamfer loss of soft predictions against a ground-truth assembly.
pub fn chamfer_loss(pred: &SoftPrimitives, gt: &Assembly, local: &Tensor, pairing: CdPairing) -> Result<Tensor> {
    let g = SoftPrimitives::from_primitives(&gt.primitives, local.device(), local.dtype())?;
    if pred.scale.dim(0)? != gt.len() {
        return Err(Error::ContractViolation(format!(
            "{} predicted steps for {} ground-truth primitives",
            pred.scale.dim(0)?,
            gt.len()
        )));
    }
    chamfer_between(pred, &g, local, pairing, &[gt.len()])
}

/// Numerically stable binary cross-entropy with logits, elementwise.
pub fn bce_with_logits(x: &Tensor, y: &Tensor) -> Result<Tensor> {
    let softplus = (x.abs()?.neg()?.exp()? + 1.0)?.log()?;
    Ok(((x.relu()? - (x * y)?)? + softplus)?)
}

/// Negative log-likelihood of `targets` (u32, shape `logits` without the
/// last dim) under `logits`.
pub fn cross_entropy(logits: &Tensor, targets: &Tensor) -> Result<Tensor> {
    let logp = candle_nn::ops::log_softmax(logits, D::Minus1)?;
    Ok(logp.gather(&targets.unsqueeze(D::Minus1)?, D::Minus1)?.squeeze(D::Minus1)?.neg()?)
}
