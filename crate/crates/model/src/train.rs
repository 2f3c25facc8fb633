//! Teacher-forced training loop.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device, IndexOp, Tensor};
use primasm_core::dataset::DatasetRecord;
use primasm_core::geometry::{assembly_surface, canonicalize_assembly, symmetric_variants};
use primasm_core::tokenization::{encode_assembly, encode_assembly_unchecked, sort_assembly};
use primasm_core::{Assembly, AttributeKind, Discretizer, TokenizedPrimitive};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{self, Checkpoint};
use crate::config::ModelConfig;
use crate::loss::{
    bce_with_logits, bin_centers, chamfer_between, cross_entropy, gumbel_noise, gumbel_softmax_with_noise,
    local_surface_points, soft_dequantize, CdPairing, LossBreakdown, LossWeights, SoftPrimitives,
};
use crate::model::{condition_points, points_tensor, tokens_tensor, PrimitiveTransformer};
use crate::optim::{Adam, AdamConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub grad_accumulation: usize,
    pub epochs: usize,
    pub temperature_start: f64,
    pub temperature_end: f64,
    /// Steps over which the temperature anneals linearly; all steps when
    /// unset.
    pub temperature_decay_steps: Option<usize>,
    pub hard_gumbel: bool,
    pub cd_points_per_primitive: usize,
    pub weights: LossWeights,
    pub cd_pairing: CdPairing,
    /// Train on canonical parameters. Off: every epoch each primitive takes a
    /// random symmetric parameterization.
    pub canonicalize: bool,
    pub warmup_steps: usize,
    pub lr_schedule: LrSchedule,
    pub grad_clip: Option<f64>,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Save a checkpoint every this many steps; 0 saves only at the end.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 16,
            grad_accumulation: 1,
            epochs: 100,
            temperature_start: 2.0,
            temperature_end: 0.5,
            temperature_decay_steps: None,
            hard_gumbel: false,
            cd_points_per_primitive: 256,
            weights: LossWeights::default(),
            cd_pairing: CdPairing::PerStep,
            canonicalize: true,
            warmup_steps: 0,
            lr_schedule: LrSchedule::Constant,
            grad_clip: None,
            adam: AdamConfig::default(),
            seed: 0,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("temperature_start", self.temperature_start),
            ("temperature_end", self.temperature_end),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("train.{name} must be positive, got {v}")));
            }
        }
        if self.batch_size == 0 || self.grad_accumulation == 0 || self.cd_points_per_primitive == 0 {
            return Err(Error::Config(
                "train.batch_size, grad_accumulation and cd_points_per_primitive must be positive".into(),
            ));
        }
        let w = self.weights;
        if [w.ce, w.eos, w.cd].iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(Error::Config("train.weights must be finite and nonnegative".into()));
        }
        if self.grad_clip.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::Config("train.grad_clip must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half-cosine decay to zero over the steps after warmup.
    Cosine,
}

/// One training example: canonical sorted assembly, its tokens and the
/// subsampled condition cloud.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub id: String,
    pub condition: Vec<[f32; 3]>,
    pub assembly: Assembly,
    pub tokens: Vec<TokenizedPrimitive>,
}

/// Canonicalizes, sorts and tokenizes records. Records without a stored
/// cloud get one sampled from their assembly.
pub fn prepare_samples(
    records: &[DatasetRecord],
    model: &ModelConfig,
    seed: u64,
) -> Result<Vec<TrainingSample>> {
    let d = model.discretizer();
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let assembly = sort_assembly(&canonicalize_assembly(&r.assembly)?);
            if assembly.len() > model.max_sequence {
                return Err(Error::Length { len: assembly.len(), max: model.max_sequence });
            }
            let tokens = encode_assembly(&assembly, &d)?.tokens;
            let cloud = match &r.points {
                Some(c) => c.clone(),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    assembly_surface(&assembly, 2 * model.condition_points, &mut rng)?
                }
            };
            Ok(TrainingSample {
                id: r.id.clone(),
                condition: condition_points(&cloud, model.condition_points)?,
                assembly,
                tokens,
            })
        })
        .collect()
}

/// Teacher-forced model outputs for a padded batch of length M.
pub struct StepOutputs {
    /// (B, M, classes)
    pub class: Tensor,
    /// (B, M, 3, levels)
    pub translation: Tensor,
    pub rotation: Tensor,
    pub scale: Tensor,
    /// (B, M+1)
    pub eos: Tensor,
}

impl PrimitiveTransformer {
    pub fn step_outputs(&self, points: &Tensor, tokens: &Tensor) -> Result<StepOutputs> {
        let cond = self.encode_condition(points)?;
        let prims = self.embed_tokens(tokens)?;
        let f = self.forward_sequence(&cond, &prims)?;
        let m = tokens.dim(1)?;
        let eos = self.eos_logits(&f)?;
        if m == 0 {
            let b = tokens.dim(0)?;
            let c = self.config();
            let empty = |shape: &[usize]| Tensor::zeros(shape, self.dtype(), self.device());
            return Ok(StepOutputs {
                class: empty(&[b, 0, c.num_classes])?,
                translation: empty(&[b, 0, 3, c.translation_levels])?,
                rotation: empty(&[b, 0, 3, c.rotation_levels])?,
                scale: empty(&[b, 0, 3, c.scale_levels])?,
                eos,
            });
        }
        let steps = self.teacher_forced_logits(&f.narrow(1, 0, m)?, tokens)?;
        Ok(StepOutputs {
            class: steps.class,
            translation: steps.translation.expect("teacher forcing fills every head"),
            rotation: steps.rotation.expect("teacher forcing fills every head"),
            scale: steps.scale.expect("teacher forcing fills every head"),
            eos,
        })
    }
}

/// Gumbel noise for the spatial logits of V valid steps.
pub struct CdNoise {
    pub scale: Tensor,
    pub rotation: Tensor,
    pub translation: Tensor,
}

impl CdNoise {
    pub fn sample<R: Rng + ?Sized>(v: usize, d: &Discretizer, rng: &mut R, device: &Device, dtype: DType) -> Result<Self> {
        Ok(CdNoise {
            scale: gumbel_noise(&[v, 3, d.scale_levels], rng, device, dtype)?,
            rotation: gumbel_noise(&[v, 3, d.rotation_levels], rng, device, dtype)?,
            translation: gumbel_noise(&[v, 3, d.translation_levels], rng, device, dtype)?,
        })
    }
}

/// Loss terms computed from model outputs; independent of the network.
pub struct Objective {
    discretizer: Discretizer,
    centers: [Tensor; 3],
    local: Tensor,
    pub weights: LossWeights,
    pub pairing: CdPairing,
    pub hard: bool,
}

impl Objective {
    pub fn new(d: &Discretizer, cfg: &TrainConfig, device: &Device, dtype: DType) -> Result<Self> {
        Ok(Objective {
            discretizer: *d,
            centers: [
                bin_centers(d, AttributeKind::Scale, device, dtype)?,
                bin_centers(d, AttributeKind::Rotation, device, dtype)?,
                bin_centers(d, AttributeKind::Translation, device, dtype)?,
            ],
            local: local_surface_points(cfg.cd_points_per_primitive, device, dtype)?,
            weights: cfg.weights,
            pairing: cfg.cd_pairing,
            hard: cfg.hard_gumbel,
        })
    }

    pub fn discretizer(&self) -> &Discretizer {
        &self.discretizer
    }

    /// Total loss tensor and its breakdown. `tokens` is `(B, M, 10)` and
    /// `lengths` the true sequence lengths.
    pub fn losses(
        &self,
        out: &StepOutputs,
        tokens: &Tensor,
        lengths: &[usize],
        temperature: f64,
        noise: &CdNoise,
    ) -> Result<(Tensor, LossBreakdown)> {
        let (b, m, _) = tokens.dims3()?;
        let device = tokens.device();
        let dtype = out.eos.dtype();
        if lengths.len() != b || lengths.iter().any(|&l| l > m) {
            return Err(Error::ContractViolation("lengths do not match the token batch".into()));
        }
        let v: usize = lengths.iter().sum();
        let zero = || Tensor::zeros((), dtype, device);

        // EOS: one positive at position len, positions 0..=len count.
        let mut eos_idx = Vec::new();
        let mut eos_target = Vec::new();
        for (bi, &len) in lengths.iter().enumerate() {
            for j in 0..=len {
                eos_idx.push((bi * (m + 1) + j) as u32);
                eos_target.push(if j == len { 1f32 } else { 0f32 });
            }
        }
        let eos_idx = Tensor::from_vec(eos_idx, eos_target.len(), device)?;
        let eos_target = Tensor::from_vec(eos_target, eos_idx.dim(0)?, device)?.to_dtype(dtype)?;
        let eos_logits = out.eos.flatten_all()?.index_select(&eos_idx, 0)?;
        let l_eos = bce_with_logits(&eos_logits, &eos_target)?.mean_all()?;

        let mut ce_per_target = [0.0; 10];
        let (l_ce, l_cd) = if v == 0 {
            (zero()?, zero()?)
        } else {
            let valid: Vec<u32> = lengths
                .iter()
                .enumerate()
                .flat_map(|(bi, &len)| (0..len).map(move |j| (bi * m + j) as u32))
                .collect();
            let valid = Tensor::from_vec(valid, v, device)?;
            let rows = |t: &Tensor| -> Result<Tensor> {
                let mut shape = t.dims()[2..].to_vec();
                shape.insert(0, b * m);
                Ok(t.reshape(shape)?.index_select(&valid, 0)?)
            };
            let targets = rows(tokens)?;
            let class = rows(&out.class)?;
            let scale = rows(&out.scale)?;
            let rotation = rows(&out.rotation)?;
            let translation = rows(&out.translation)?;

            let ce = Tensor::cat(
                &[
                    cross_entropy(&class, &targets.i((.., 0))?.contiguous()?)?.unsqueeze(1)?,
                    cross_entropy(&scale, &targets.i((.., 1..4))?.contiguous()?)?,
                    cross_entropy(&rotation, &targets.i((.., 4..7))?.contiguous()?)?,
                    cross_entropy(&translation, &targets.i((.., 7..10))?.contiguous()?)?,
                ],
                1,
            )?;
            let per_target = ce.mean(0)?;
            for (k, x) in per_target.to_dtype(DType::F64)?.to_vec1::<f64>()?.into_iter().enumerate() {
                ce_per_target[k] = x;
            }
            let l_ce = per_target.mean_all()?;

            let l_cd = if self.weights.cd == 0.0 {
                zero()?
            } else {
                let soft = |logits: &Tensor, noise: &Tensor, centers: &Tensor| -> Result<Tensor> {
                    let y = gumbel_softmax_with_noise(logits, noise, temperature, self.hard)?;
                    soft_dequantize(&y, centers)
                };
                let classes = targets.i((.., 0))?.contiguous()?;
                let pred = SoftPrimitives {
                    classes: classes.clone(),
                    scale: soft(&scale, &noise.scale, &self.centers[0])?,
                    rotation: soft(&rotation, &noise.rotation, &self.centers[1])?,
                    translation: soft(&translation, &noise.translation, &self.centers[2])?,
                };
                let gt_rows = |cols: std::ops::Range<usize>, centers: &Tensor| -> Result<Tensor> {
                    let ids = targets.i((.., cols))?.contiguous()?;
                    Ok(centers.index_select(&ids.flatten_all()?, 0)?.reshape((v, 3))?)
                };
                let gt = SoftPrimitives {
                    classes,
                    scale: gt_rows(1..4, &self.centers[0])?,
                    rotation: gt_rows(4..7, &self.centers[1])?,
                    translation: gt_rows(7..10, &self.centers[2])?,
                };
                chamfer_between(&pred, &gt, &self.local, self.pairing, lengths)?
            };
            (l_ce, l_cd)
        };

        let w = self.weights;
        let total = ((((&l_ce * w.ce)? + (&l_eos * w.eos)?)? + (&l_cd * w.cd)?)?).clone();
        let scalar = |t: &Tensor| -> Result<f64> { Ok(t.to_dtype(DType::F64)?.to_scalar::<f64>()?) };
        let (ce, eos, cd) = (scalar(&l_ce)?, scalar(&l_eos)?, scalar(&l_cd)?);
        let breakdown = LossBreakdown {
            l_ce: ce,
            l_eos: eos,
            l_cd: cd,
            total: w.ce * ce + w.eos * eos + w.cd * cd,
            ce_per_target,
        };
        Ok((total, breakdown))
    }
}

/// A padded batch ready for the model.
pub struct TrainBatch {
    pub ids: Vec<String>,
    pub points: Tensor,
    pub tokens: Tensor,
    pub lengths: Vec<usize>,
}

impl TrainBatch {
    pub fn new(samples: &[(&TrainingSample, &[TokenizedPrimitive])], device: &Device, dtype: DType) -> Result<Self> {
        let m = samples.iter().map(|(_, t)| t.len()).max().unwrap_or(0);
        let seqs: Vec<Vec<TokenizedPrimitive>> = samples.iter().map(|(_, t)| t.to_vec()).collect();
        let clouds: Vec<Vec<[f32; 3]>> = samples.iter().map(|(s, _)| s.condition.clone()).collect();
        Ok(TrainBatch {
            ids: samples.iter().map(|(s, _)| s.id.clone()).collect(),
            points: points_tensor(&clouds, device, dtype)?,
            tokens: tokens_tensor(&seqs, m, device)?,
            lengths: seqs.iter().map(Vec::len).collect(),
        })
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRow {
    pub step: usize,
    pub l_ce: f64,
    pub l_eos: f64,
    pub l_cd: f64,
    pub total: f64,
    pub lr: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrainState {
    step: usize,
    adam_steps: u64,
    config: TrainConfig,
}

/// Owns the model and optimizer during training.
pub struct Trainer {
    model: PrimitiveTransformer,
    cfg: TrainConfig,
    adam: Adam,
    objective: Objective,
    step: usize,
}

impl Trainer {
    pub fn new(model: PrimitiveTransformer, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let objective = Objective::new(&model.config().discretizer(), &cfg, model.device(), model.dtype())?;
        Ok(Trainer { adam: Adam::new(cfg.adam), model, cfg, objective, step: 0 })
    }

    /// Continues a run saved by [`Trainer::save`], with its stored config.
    pub fn resume(path: &Path, device: &Device, dtype: DType) -> Result<Self> {
        let ckpt: Checkpoint = checkpoint::load(path, device)?;
        let state: TrainState = ckpt
            .train_state
            .clone()
            .ok_or_else(|| Error::checkpoint(path, "no training state"))
            .and_then(|v| serde_json::from_value(v).map_err(|e| Error::checkpoint(path, e.to_string())))?;
        let model = checkpoint::model_from(&ckpt, device, dtype)?;
        let mut trainer = Trainer::new(model, state.config)?;
        trainer.adam = Adam::from_state(trainer.cfg.adam, state.adam_steps, &ckpt.optimizer);
        trainer.step = state.step;
        Ok(trainer)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let state = TrainState { step: self.step, adam_steps: self.adam.steps_taken(), config: self.cfg.clone() };
        checkpoint::save(
            path,
            &self.model,
            &self.adam.state_tensors(),
            Some(serde_json::to_value(state).expect("train state serializes")),
        )
    }

    pub fn model(&self) -> &PrimitiveTransformer {
        &self.model
    }

    pub fn into_model(self) -> PrimitiveTransformer {
        self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn step(&self) -> usize {
        self.step
    }

    fn batches_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.cfg.batch_size)
    }

    /// Optimizer steps for a dataset of `n` samples.
    pub fn total_steps(&self, n: usize) -> usize {
        (self.cfg.epochs * self.batches_per_epoch(n)).div_ceil(self.cfg.grad_accumulation)
    }

    pub fn temperature(&self, step: usize, total: usize) -> f64 {
        let span = self.cfg.temperature_decay_steps.unwrap_or(total).max(2) - 1;
        let frac = (step as f64 / span as f64).min(1.0);
        self.cfg.temperature_start + (self.cfg.temperature_end - self.cfg.temperature_start) * frac
    }

    /// Learning rate at `step` of a `total`-step run: linear warmup, then the
    /// configured schedule.
    pub fn learning_rate(&self, step: usize, total: usize) -> f64 {
        let base = self.cfg.learning_rate;
        let warm = self.cfg.warmup_steps;
        if step < warm {
            return base * (step + 1) as f64 / warm as f64;
        }
        match self.cfg.lr_schedule {
            LrSchedule::Constant => base,
            LrSchedule::Cosine => {
                let span = total.saturating_sub(warm).max(1) as f64;
                let frac = ((step - warm) as f64 / span).min(1.0);
                base * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos())
            }
        }
    }

    fn epoch_order(&self, epoch: usize, n: usize) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ 0x006f_7264_6572);
        rng.set_stream(epoch as u64);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        order
    }

    /// Tokens for `sample` in `epoch`: canonical, or a random symmetric
    /// parameterization when canonicalization is off.
    fn epoch_tokens(&self, sample: &TrainingSample, index: usize, epoch: usize, n: usize) -> Result<Vec<TokenizedPrimitive>> {
        if self.cfg.canonicalize {
            return Ok(sample.tokens.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ 0x7661_7269_616e);
        rng.set_stream((epoch * n + index) as u64);
        let prims = sample
            .assembly
            .primitives
            .iter()
            .map(|p| {
                let variants = symmetric_variants(p)?;
                Ok(variants[rng.random_range(0..variants.len())])
            })
            .collect::<Result<Vec<_>>>()?;
        let d = self.model.config().discretizer();
        Ok(encode_assembly_unchecked(&sort_assembly(&Assembly::new(prims)), &d)?.tokens)
    }

    /// Loss of one micro-batch, without touching the parameters.
    pub fn micro_batch_loss(&self, samples: &[TrainingSample], micro: usize) -> Result<(Tensor, LossBreakdown, Vec<String>)> {
        let n = samples.len();
        let bpe = self.batches_per_epoch(n);
        let (epoch, pos) = (micro / bpe, micro % bpe);
        let order = self.epoch_order(epoch, n);
        let chosen = &order[pos * self.cfg.batch_size..((pos + 1) * self.cfg.batch_size).min(n)];
        let tokens = chosen
            .iter()
            .map(|&i| self.epoch_tokens(&samples[i], i, epoch, n))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(&TrainingSample, &[TokenizedPrimitive])> =
            chosen.iter().zip(&tokens).map(|(&i, t)| (&samples[i], t.as_slice())).collect();
        let batch = TrainBatch::new(&pairs, self.model.device(), self.model.dtype())?;
        let out = self.model.step_outputs(&batch.points, &batch.tokens)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ 0x6775_6d62_656c);
        rng.set_stream(micro as u64);
        let v = batch.lengths.iter().sum();
        let noise = CdNoise::sample(v, self.objective.discretizer(), &mut rng, self.model.device(), self.model.dtype())?;
        let step = micro / self.cfg.grad_accumulation;
        let total_steps = self.total_steps(n);
        let (loss, breakdown) =
            self.objective.losses(&out, &batch.tokens, &batch.lengths, self.temperature(step, total_steps), &noise)?;
        Ok((loss, breakdown, batch.ids))
    }

    /// Trains until `stop_at` steps (or the configured end), calling
    /// `on_step` after each optimizer step. Checkpoints go to `checkpoint_dir`
    /// when given.
    pub fn run(
        &mut self,
        samples: &[TrainingSample],
        stop_at: Option<usize>,
        checkpoint_dir: Option<&Path>,
        mut on_step: impl FnMut(&LogRow),
    ) -> Result<Vec<LogRow>> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("training set is empty".into()));
        }
        let n = samples.len();
        let total = self.total_steps(n);
        let total_micro = self.cfg.epochs * self.batches_per_epoch(n);
        let end = stop_at.map_or(total, |s| s.min(total));
        let mut log = Vec::new();
        while self.step < end {
            let step = self.step;
            let mut grads: BTreeMap<String, Tensor> = BTreeMap::new();
            let mut sum = LossBreakdown::default();
            let mut count = 0usize;
            for a in 0..self.cfg.grad_accumulation {
                let micro = step * self.cfg.grad_accumulation + a;
                if micro >= total_micro {
                    break;
                }
                let (loss, br, ids) = self.micro_batch_loss(samples, micro)?;
                if !br.total.is_finite() {
                    return Err(Error::NonFinite { step, ids });
                }
                let g = loss.backward()?;
                for (name, var) in self.model.params().vars() {
                    if let Some(gt) = g.get(var.as_tensor()) {
                        let acc = match grads.remove(name) {
                            Some(prev) => (prev + gt)?,
                            None => gt.clone(),
                        };
                        grads.insert(name.clone(), acc);
                    }
                }
                sum.l_ce += br.l_ce;
                sum.l_eos += br.l_eos;
                sum.l_cd += br.l_cd;
                sum.total += br.total;
                count += 1;
            }
            let scale = 1.0 / count as f64;
            for g in grads.values_mut() {
                *g = (&*g * scale)?;
            }
            if let Some(clip) = self.cfg.grad_clip {
                let norm2: f64 = grads
                    .values()
                    .map(|g| g.sqr()?.sum_all()?.to_dtype(DType::F64)?.to_scalar::<f64>())
                    .sum::<candle_core::Result<f64>>()?;
                let norm = norm2.sqrt();
                if norm > clip {
                    for g in grads.values_mut() {
                        *g = (&*g * (clip / norm))?;
                    }
                }
            }
            let lr = self.learning_rate(step, total);
            self.adam.step(self.model.params(), &grads, lr)?;
            self.step += 1;
            let row = LogRow {
                step,
                l_ce: sum.l_ce * scale,
                l_eos: sum.l_eos * scale,
                l_cd: sum.l_cd * scale,
                total: sum.total * scale,
                lr,
                temperature: self.temperature(step, total),
            };
            on_step(&row);
            log.push(row);
            if let Some(dir) = checkpoint_dir {
                if self.cfg.checkpoint_every > 0 && self.step.is_multiple_of(self.cfg.checkpoint_every) {
                    self.save(&dir.join(format!("step_{:06}.safetensors", self.step)))?;
                }
            }
        }
        if let Some(dir) = checkpoint_dir {
            self.save(&dir.join("final.safetensors"))?;
        }
        Ok(log)
    }
}

/// Writes the training log as CSV.
pub fn write_log(rows: &[LogRow], path: &Path) -> Result<()> {
    let to_err = |e: csv::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    for r in rows {
        w.serialize(r).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Streams log rows to a CSV file as they arrive.
pub struct LogWriter {
    writer: csv::Writer<std::fs::File>,
    path: PathBuf,
}

impl LogWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let writer = csv::Writer::from_path(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        Ok(LogWriter { writer, path: path.to_path_buf() })
    }

    pub fn write(&mut self, row: &LogRow) -> Result<()> {
        self.writer
            .serialize(row)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", self.path.display())))?;
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}
