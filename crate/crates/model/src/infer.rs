//! Autoregressive assembly generation.

use candle_core::{DType, Tensor};
use primasm_core::geometry::canonicalize_assembly;
use primasm_core::tokenization::decode_primitive;
use primasm_core::{Assembly, Discretizer, PointCloud, TokenizedPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{tokens_tensor, KnownAttributes, PrimitiveTransformer};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Greedy,
    Temperature,
    TopK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub mode: SamplingMode,
    pub temperature: f64,
    pub k: usize,
    pub eos_threshold: f64,
    pub max_len: usize,
    pub seed: u64,
    /// Canonicalize the generated assembly before returning it.
    pub recanonicalize: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            mode: SamplingMode::Greedy,
            temperature: 1.0,
            k: 10,
            eos_threshold: 0.5,
            max_len: 32,
            seed: 0,
            recanonicalize: false,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config("sampling.temperature must be positive".into()));
        }
        if !(self.eos_threshold > 0.0 && self.eos_threshold < 1.0) {
            return Err(Error::Config("sampling.eos_threshold must lie in (0, 1)".into()));
        }
        if self.mode == SamplingMode::TopK && self.k == 0 {
            return Err(Error::Config("sampling.k must be positive for top-k".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Eos,
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub eos_probability: f64,
    /// Sampled bins; absent on the step that stopped generation.
    pub token: Option<TokenizedPrimitive>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generation {
    pub assembly: Assembly,
    pub tokens: Vec<TokenizedPrimitive>,
    pub steps: Vec<StepDiagnostics>,
    pub termination: Termination,
}

fn pick<R: Rng + ?Sized>(logits: &[f32], sc: &SamplingConfig, rng: &mut R) -> u32 {
    let argmax = || {
        let mut best = 0;
        for (i, &x) in logits.iter().enumerate() {
            if x > logits[best] {
                best = i;
            }
        }
        best as u32
    };
    let mut candidates: Vec<usize> = (0..logits.len()).collect();
    match sc.mode {
        SamplingMode::Greedy => return argmax(),
        SamplingMode::Temperature => {}
        SamplingMode::TopK => {
            candidates.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
            candidates.truncate(sc.k);
        }
    }
    let top = candidates.iter().map(|&i| logits[i] as f64).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = candidates
        .iter()
        .map(|&i| ((logits[i] as f64 - top) / sc.temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (&i, w) in candidates.iter().zip(&weights) {
        if u < *w {
            return i as u32;
        }
        u -= w;
    }
    *candidates.last().expect("at least one candidate") as u32
}

fn pick3<R: Rng + ?Sized>(logits: &Tensor, sc: &SamplingConfig, rng: &mut R) -> Result<[u32; 3]> {
    let rows: Vec<Vec<f32>> = logits.to_dtype(DType::F32)?.to_vec2()?;
    Ok([pick(&rows[0], sc, rng), pick(&rows[1], sc, rng), pick(&rows[2], sc, rng)])
}

/// Generates an assembly for `cloud`.
pub fn generate(
    model: &PrimitiveTransformer,
    d: &Discretizer,
    cloud: &PointCloud,
    sc: &SamplingConfig,
) -> Result<Generation> {
    generate_with_prefix(model, d, cloud, sc, &[])
}

/// Generation continuing after the forced primitives in `prefix`.
pub fn generate_with_prefix(
    model: &PrimitiveTransformer,
    d: &Discretizer,
    cloud: &PointCloud,
    sc: &SamplingConfig,
    prefix: &[TokenizedPrimitive],
) -> Result<Generation> {
    sc.validate()?;
    if model.config().discretizer() != *d {
        return Err(Error::Config(format!(
            "model levels {:?} do not match discretizer {d:?}",
            model.config().discretizer()
        )));
    }
    for tp in prefix {
        tp.validate(d).map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    let condition = model.encode_cloud(cloud)?.unsqueeze(0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut tokens = prefix.to_vec();
    let mut steps = Vec::new();
    let limit = sc.max_len.min(model.config().max_sequence);
    let termination = loop {
        if tokens.len() >= limit {
            break Termination::Limit;
        }
        let t = tokens_tensor(&[tokens.clone()], tokens.len(), model.device())?;
        let feats = model.forward_sequence(&condition, &model.embed_tokens(&t)?)?;
        let f = feats.squeeze(0)?.get(tokens.len())?;
        let logits = model.decode_attributes(&f, &KnownAttributes::default())?;
        let eos_logit = logits.eos.to_dtype(DType::F64)?.to_scalar::<f64>()?;
        let eos_probability = 1.0 / (1.0 + (-eos_logit).exp());
        if eos_probability >= sc.eos_threshold {
            steps.push(StepDiagnostics { eos_probability, token: None });
            break Termination::Eos;
        }
        let class_logits: Vec<f32> = logits.class.to_dtype(DType::F32)?.to_vec1()?;
        let class = pick(&class_logits, sc, &mut rng);
        let mut known = KnownAttributes { class: Some(class), ..Default::default() };
        let l = model.decode_attributes(&f, &known)?;
        let translation = pick3(l.translation.as_ref().expect("class known"), sc, &mut rng)?;
        known.translation = Some(translation);
        let l = model.decode_attributes(&f, &known)?;
        let rotation = pick3(l.rotation.as_ref().expect("translation known"), sc, &mut rng)?;
        known.rotation = Some(rotation);
        let l = model.decode_attributes(&f, &known)?;
        let scale = pick3(l.scale.as_ref().expect("rotation known"), sc, &mut rng)?;
        let token = TokenizedPrimitive { class, scale, rotation, translation };
        steps.push(StepDiagnostics { eos_probability, token: Some(token) });
        tokens.push(token);
    };
    let mut assembly = tokens
        .iter()
        .map(|t| decode_primitive(t, d))
        .collect::<primasm_core::Result<Assembly>>()?;
    if sc.recanonicalize {
        assembly = canonicalize_assembly(&assembly)?;
    }
    Ok(Generation { assembly, tokens, steps, termination })
}
