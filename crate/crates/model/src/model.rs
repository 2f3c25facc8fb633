//! Shape-conditioned primitive transformer.
//!
//! Token tensors are `(B, M, 10)` u32 in column order class, scale×3,
//! rotation×3, translation×3.

use candle_core::{DType, Device, IndexOp, Tensor, D};
use primasm_core::geometry::farthest_point_sample;
use primasm_core::{PointCloud, TokenizedPrimitive};

use crate::config::ModelConfig;
use crate::nn::{Attention, Block, LayerNorm, Linear, Mlp};
use crate::params::{Init, ParamStore};
use crate::{Error, Result};

pub const TOKEN_COLUMNS: usize = 10;
const EMBED_STD: f64 = 0.02;

/// Learned point-set encoder producing a fixed number of condition tokens.
struct ConditionEncoder {
    freqs: Tensor,
    lift: Mlp,
    queries: Tensor,
    ln_points: LayerNorm,
    ln_queries: LayerNorm,
    cross: Attention,
    ln_ffn: LayerNorm,
    ffn: Mlp,
}

impl ConditionEncoder {
    fn new(ps: &mut ParamStore, cfg: &ModelConfig) -> Result<Self> {
        let h = cfg.hidden_size;
        let freqs: Vec<f64> = (0..cfg.fourier_bands)
            .map(|k| std::f64::consts::PI * 2f64.powi(k as i32))
            .collect();
        Ok(ConditionEncoder {
            freqs: Tensor::from_vec(freqs, cfg.fourier_bands, ps.device())?.to_dtype(ps.dtype())?,
            lift: Mlp::new(ps, "cond.lift", cfg.point_feature_width(), h, h)?,
            queries: ps.create("cond.queries", &[cfg.condition_tokens, h], Init::Normal(1.0))?,
            ln_points: LayerNorm::new(ps, "cond.ln_points", h)?,
            ln_queries: LayerNorm::new(ps, "cond.ln_queries", h)?,
            cross: Attention::new(ps, "cond.cross", h, cfg.attention_heads)?,
            ln_ffn: LayerNorm::new(ps, "cond.ln_ffn", h)?,
            ffn: Mlp::new(ps, "cond.ffn", h, 4 * h, h)?,
        })
    }

    fn forward(&self, points: &Tensor) -> Result<Tensor> {
        let (b, p, _) = points.dims3()?;
        let bands = self.freqs.dim(0)?;
        let feats = if bands > 0 {
            let angles = points.unsqueeze(3)?.broadcast_mul(&self.freqs)?;
            let sin = angles.sin()?.reshape((b, p, 3 * bands))?;
            let cos = angles.cos()?.reshape((b, p, 3 * bands))?;
            Tensor::cat(&[points, &sin, &cos], 2)?
        } else {
            points.clone()
        };
        let lifted = self.ln_points.forward(&self.lift.forward(&feats)?)?;
        let (k, h) = self.queries.dims2()?;
        let q = self.queries.unsqueeze(0)?.broadcast_as((b, k, h))?.contiguous()?;
        let x = (&q + self.cross.forward(&self.ln_queries.forward(&q)?, &lifted, None)?)?;
        Ok((&x + self.ffn.forward(&self.ln_ffn.forward(&x)?)?)?)
    }
}

/// Class table plus per-dimension scale, rotation and translation tables.
pub struct EmbeddingTables {
    pub class: Tensor,
    /// scale×3, rotation×3, translation×3
    pub attributes: Vec<Tensor>,
}

impl EmbeddingTables {
    fn new(ps: &mut ParamStore, cfg: &ModelConfig) -> Result<Self> {
        let class = ps.create("embed.class", &[cfg.num_classes, cfg.class_embedding], Init::Normal(EMBED_STD))?;
        let mut attributes = Vec::with_capacity(9);
        for (kind, levels) in [
            ("scale", cfg.scale_levels),
            ("rotation", cfg.rotation_levels),
            ("translation", cfg.translation_levels),
        ] {
            for d in 0..3 {
                attributes.push(ps.create(
                    &format!("embed.{kind}.{d}"),
                    &[levels, cfg.attribute_embedding],
                    Init::Normal(EMBED_STD),
                )?);
            }
        }
        Ok(EmbeddingTables { class, attributes })
    }
}

fn lookup(table: &Tensor, ids: &Tensor) -> Result<Tensor> {
    let mut shape = ids.dims().to_vec();
    shape.push(table.dim(1)?);
    Ok(table.index_select(&ids.flatten_all()?, 0)?.reshape(shape)?)
}

struct Heads {
    class: Mlp,
    translation: Mlp,
    rotation: Mlp,
    scale: Mlp,
    eos: Mlp,
}

/// Logits for one or more steps. Spatial logits are `(.., 3, levels)`.
#[derive(Debug, Clone)]
pub struct AttributeLogits {
    pub class: Tensor,
    pub translation: Option<Tensor>,
    pub rotation: Option<Tensor>,
    pub scale: Option<Tensor>,
    pub eos: Tensor,
}

/// Attributes already fixed for the step being decoded.
#[derive(Debug, Clone, Copy, Default)]
pub struct KnownAttributes {
    pub class: Option<u32>,
    pub translation: Option<[u32; 3]>,
    pub rotation: Option<[u32; 3]>,
}

pub struct PrimitiveTransformer {
    cfg: ModelConfig,
    params: ParamStore,
    encoder: ConditionEncoder,
    tables: EmbeddingTables,
    primitive_encoder: Linear,
    sos: Tensor,
    positions: Tensor,
    condition_segment: Tensor,
    blocks: Vec<Block>,
    final_ln: LayerNorm,
    heads: Heads,
}

impl PrimitiveTransformer {
    pub fn new(cfg: &ModelConfig, device: &Device, dtype: DType) -> Result<Self> {
        cfg.validate()?;
        let mut ps = ParamStore::new(cfg.init_seed, device, dtype);
        let h = cfg.hidden_size;
        let encoder = ConditionEncoder::new(&mut ps, cfg)?;
        let tables = EmbeddingTables::new(&mut ps, cfg)?;
        let primitive_encoder = Linear::new(&mut ps, "primitive_encoder", cfg.token_width(), h)?;
        let sos = ps.create("sos", &[h], Init::Normal(EMBED_STD))?;
        let positions = ps.create("positions", &[cfg.max_sequence + 1, h], Init::Normal(EMBED_STD))?;
        let condition_segment = ps.create("condition_segment", &[h], Init::Normal(EMBED_STD))?;
        let blocks = (0..cfg.layers)
            .map(|i| Block::new(&mut ps, &format!("blocks.{i}"), h, cfg.attention_heads))
            .collect::<Result<Vec<_>>>()?;
        let final_ln = LayerNorm::new(&mut ps, "final_ln", h)?;
        let (ce, ae) = (cfg.class_embedding, 3 * cfg.attribute_embedding);
        let cascade = |w: usize| if cfg.cascade { h + w } else { h };
        let heads = Heads {
            class: Mlp::new(&mut ps, "head.class", h, h, cfg.num_classes)?,
            translation: Mlp::new(&mut ps, "head.translation", cascade(ce), h, 3 * cfg.translation_levels)?,
            rotation: Mlp::new(&mut ps, "head.rotation", cascade(ce + ae), h, 3 * cfg.rotation_levels)?,
            scale: Mlp::new(&mut ps, "head.scale", cascade(ce + 2 * ae), h, 3 * cfg.scale_levels)?,
            eos: Mlp::new(&mut ps, "head.eos", h, h, 1)?,
        };
        Ok(PrimitiveTransformer {
            cfg: cfg.clone(),
            params: ps,
            encoder,
            tables,
            primitive_encoder,
            sos,
            positions,
            condition_segment,
            blocks,
            final_ln,
            heads,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn tables(&self) -> &EmbeddingTables {
        &self.tables
    }

    pub fn device(&self) -> &Device {
        self.params.device()
    }

    pub fn dtype(&self) -> DType {
        self.params.dtype()
    }

    pub fn parameter_count(&self) -> usize {
        self.params.parameter_count()
    }

    /// `(B, P, 3)` points to `(B, K, H)` condition tokens.
    pub fn encode_condition(&self, points: &Tensor) -> Result<Tensor> {
        self.encoder.forward(points)
    }

    /// Condition tokens `(K, H)` for a single cloud.
    pub fn encode_cloud(&self, cloud: &PointCloud) -> Result<Tensor> {
        let pts = condition_points(cloud, self.cfg.condition_points)?;
        let t = points_tensor(&[pts], self.device(), self.dtype())?;
        Ok(self.encode_condition(&t)?.squeeze(0)?)
    }

    /// `(B, M, 10)` tokens to `(B, M, H)` primitive tokens.
    pub fn embed_tokens(&self, tokens: &Tensor) -> Result<Tensor> {
        let (b, m, _) = tokens.dims3()?;
        if m == 0 {
            return Ok(Tensor::zeros((b, 0, self.cfg.hidden_size), self.dtype(), self.device())?);
        }
        let mut parts = vec![lookup(&self.tables.class, &tokens.i((.., .., 0))?.contiguous()?)?];
        for (c, table) in self.tables.attributes.iter().enumerate() {
            parts.push(lookup(table, &tokens.i((.., .., c + 1))?.contiguous()?)?);
        }
        self.primitive_encoder.forward(&Tensor::cat(&parts, D::Minus1)?)
    }

    /// Primitive token `h` (length H) of one tokenized primitive.
    pub fn embed_primitive(&self, tp: &TokenizedPrimitive) -> Result<Tensor> {
        tp.validate(&self.cfg.discretizer())
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let t = tokens_tensor(&[vec![*tp]], 1, self.device())?;
        Ok(self.embed_tokens(&t)?.squeeze(0)?.squeeze(0)?)
    }

    fn mask(&self, k: usize, t: usize) -> Result<Tensor> {
        let mut m = vec![0f32; t * t];
        for i in 0..t {
            for j in 0..t {
                let visible = j <= i || (self.cfg.bidirectional_condition && i < k && j < k);
                if !visible {
                    m[i * t + j] = f32::NEG_INFINITY;
                }
            }
        }
        Ok(Tensor::from_vec(m, (t, t), self.device())?.to_dtype(self.dtype())?)
    }

    /// Step features `(B, M+1, H)` for condition `(B, K, H)` and primitive
    /// tokens `(B, M, H)`; feature j predicts primitive j+1.
    pub fn forward_sequence(&self, condition: &Tensor, primitives: &Tensor) -> Result<Tensor> {
        let (b, k, h) = condition.dims3()?;
        let m = primitives.dim(1)?;
        if m > self.cfg.max_sequence {
            return Err(Error::Length { len: m, max: self.cfg.max_sequence });
        }
        let sos = self.sos.reshape((1, 1, h))?.broadcast_as((b, 1, h))?.contiguous()?;
        let steps = if m == 0 { sos } else { Tensor::cat(&[&sos, primitives], 1)? };
        let steps = steps.broadcast_add(&self.positions.narrow(0, 0, m + 1)?)?;
        let cond = condition.broadcast_add(&self.condition_segment)?;
        let mut x = Tensor::cat(&[&cond, &steps], 1)?;
        let mask = self.mask(k, k + m + 1)?;
        for block in &self.blocks {
            x = block.forward(&x, Some(&mask))?;
        }
        self.final_ln.forward(&x.narrow(1, k, m + 1)?)
    }

    fn cascade_input(&self, f: &Tensor, extra: &[Tensor]) -> Result<Tensor> {
        if !self.cfg.cascade || extra.is_empty() {
            return Ok(f.clone());
        }
        let mut parts = vec![f.clone()];
        parts.extend(extra.iter().cloned());
        Ok(Tensor::cat(&parts, D::Minus1)?)
    }

    fn spatial(&self, logits: Tensor, levels: usize) -> Result<Tensor> {
        let mut shape = logits.dims().to_vec();
        shape.pop();
        shape.extend([3, levels]);
        Ok(logits.reshape(shape)?)
    }

    /// Class embedding of ids `(..)`.
    pub fn class_embedding(&self, class: &Tensor) -> Result<Tensor> {
        lookup(&self.tables.class, class)
    }

    /// Concatenated per-dimension embeddings of ids `(.., 3)`; `group` 0 is
    /// scale, 1 rotation, 2 translation.
    pub fn attribute_embedding(&self, group: usize, ids: &Tensor) -> Result<Tensor> {
        let last = ids.rank() - 1;
        let parts = (0..3)
            .map(|d| lookup(&self.tables.attributes[3 * group + d], &ids.narrow(last, d, 1)?.squeeze(last)?.contiguous()?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Tensor::cat(&parts, D::Minus1)?)
    }

    pub fn class_logits(&self, f: &Tensor) -> Result<Tensor> {
        self.heads.class.forward(f)
    }

    pub fn eos_logits(&self, f: &Tensor) -> Result<Tensor> {
        Ok(self.heads.eos.forward(f)?.squeeze(D::Minus1)?)
    }

    /// Translation logits given the class embedding `e_c`.
    pub fn translation_logits(&self, f: &Tensor, e_c: &Tensor) -> Result<Tensor> {
        let x = self.cascade_input(f, std::slice::from_ref(e_c))?;
        self.spatial(self.heads.translation.forward(&x)?, self.cfg.translation_levels)
    }

    pub fn rotation_logits(&self, f: &Tensor, e_c: &Tensor, e_t: &Tensor) -> Result<Tensor> {
        let x = self.cascade_input(f, &[e_c.clone(), e_t.clone()])?;
        self.spatial(self.heads.rotation.forward(&x)?, self.cfg.rotation_levels)
    }

    pub fn scale_logits(&self, f: &Tensor, e_c: &Tensor, e_t: &Tensor, e_r: &Tensor) -> Result<Tensor> {
        let x = self.cascade_input(f, &[e_c.clone(), e_t.clone(), e_r.clone()])?;
        self.spatial(self.heads.scale.forward(&x)?, self.cfg.scale_levels)
    }

    /// Teacher-forced logits for every step: `f` is `(B, S, H)` and
    /// `targets` `(B, S, 10)` supplies the cascade inputs.
    pub fn teacher_forced_logits(&self, f: &Tensor, targets: &Tensor) -> Result<AttributeLogits> {
        let e_c = self.class_embedding(&targets.i((.., .., 0))?.contiguous()?)?;
        let e_r = self.attribute_embedding(1, &targets.i((.., .., 4..7))?.contiguous()?)?;
        let e_t = self.attribute_embedding(2, &targets.i((.., .., 7..10))?.contiguous()?)?;
        Ok(AttributeLogits {
            class: self.class_logits(f)?,
            translation: Some(self.translation_logits(f, &e_c)?),
            rotation: Some(self.rotation_logits(f, &e_c, &e_t)?),
            scale: Some(self.scale_logits(f, &e_c, &e_t, &e_r)?),
            eos: self.eos_logits(f)?,
        })
    }

    /// Logits for a single step feature `f` (length H). Each head whose
    /// cascade inputs are all known is evaluated.
    pub fn decode_attributes(&self, f: &Tensor, known: &KnownAttributes) -> Result<AttributeLogits> {
        if known.rotation.is_some() && known.translation.is_none()
            || known.translation.is_some() && known.class.is_none()
        {
            return Err(Error::ContractViolation(
                "attributes must be known in order class, translation, rotation".into(),
            ));
        }
        let f = f.reshape((1, self.cfg.hidden_size))?;
        let dev = self.device();
        let mut out = AttributeLogits {
            class: self.class_logits(&f)?.squeeze(0)?,
            translation: None,
            rotation: None,
            scale: None,
            eos: self.eos_logits(&f)?.squeeze(0)?,
        };
        if let Some(c) = known.class {
            if c as usize >= self.cfg.num_classes {
                return Err(Error::InvalidInput(format!("class {c} out of range")));
            }
            let e_c = self.class_embedding(&Tensor::new(&[c], dev)?)?;
            out.translation = Some(self.translation_logits(&f, &e_c)?.squeeze(0)?);
            if let Some(t) = known.translation {
                let e_t = self.attribute_embedding(2, &Tensor::new(&[t], dev)?)?;
                out.rotation = Some(self.rotation_logits(&f, &e_c, &e_t)?.squeeze(0)?);
                if let Some(r) = known.rotation {
                    let e_r = self.attribute_embedding(1, &Tensor::new(&[r], dev)?)?;
                    out.scale = Some(self.scale_logits(&f, &e_c, &e_t, &e_r)?.squeeze(0)?);
                }
            }
        }
        Ok(out)
    }
}

/// Farthest-point subsample of `cloud` to exactly `n` points; smaller clouds
/// are repeated cyclically.
pub fn condition_points(cloud: &PointCloud, n: usize) -> Result<Vec<[f32; 3]>> {
    let pts = cloud.points();
    if pts.len() < 4 {
        return Err(Error::InsufficientInput(format!(
            "condition cloud has {} points, need at least 4",
            pts.len()
        )));
    }
    let idx = farthest_point_sample(pts, n, 0);
    Ok((0..n)
        .map(|i| {
            let p = pts[idx[i % idx.len()]];
            [p[0] as f32, p[1] as f32, p[2] as f32]
        })
        .collect())
}

/// Stacks equal-length point lists into `(B, P, 3)`.
pub fn points_tensor(batch: &[Vec<[f32; 3]>], device: &Device, dtype: DType) -> Result<Tensor> {
    let p = batch.first().map_or(0, |v| v.len());
    let flat: Vec<f32> = batch.iter().flat_map(|v| v.iter().flatten().copied()).collect();
    Ok(Tensor::from_vec(flat, (batch.len(), p, 3), device)?.to_dtype(dtype)?)
}

pub fn token_row(tp: &TokenizedPrimitive) -> [u32; TOKEN_COLUMNS] {
    [
        tp.class,
        tp.scale[0],
        tp.scale[1],
        tp.scale[2],
        tp.rotation[0],
        tp.rotation[1],
        tp.rotation[2],
        tp.translation[0],
        tp.translation[1],
        tp.translation[2],
    ]
}

/// `(B, len, 10)` token ids, zero-padded past each sequence's end.
pub fn tokens_tensor(batch: &[Vec<TokenizedPrimitive>], len: usize, device: &Device) -> Result<Tensor> {
    let mut flat = vec![0u32; batch.len() * len * TOKEN_COLUMNS];
    for (b, seq) in batch.iter().enumerate() {
        for (j, tp) in seq.iter().take(len).enumerate() {
            let at = (b * len + j) * TOKEN_COLUMNS;
            flat[at..at + TOKEN_COLUMNS].copy_from_slice(&token_row(tp));
        }
    }
    Ok(Tensor::from_vec(flat, (batch.len(), len, TOKEN_COLUMNS), device)?)
}
