//! Layers built from differentiable tensor primitives.

use candle_core::{Module, Tensor, D};

use crate::params::{Init, ParamStore};
use crate::Result;

const WEIGHT_STD: f64 = 0.02;
const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
pub(crate) struct Linear(candle_nn::Linear);

impl Linear {
    pub fn new(ps: &mut ParamStore, name: &str, inp: usize, out: usize) -> Result<Self> {
        let w = ps.create(&format!("{name}.weight"), &[out, inp], Init::Normal(WEIGHT_STD))?;
        let b = ps.create(&format!("{name}.bias"), &[out], Init::Zeros)?;
        Ok(Linear(candle_nn::Linear::new(w, Some(b))))
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.0.forward(x)?)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LayerNorm {
    gain: Tensor,
    bias: Tensor,
}

impl LayerNorm {
    pub fn new(ps: &mut ParamStore, name: &str, dim: usize) -> Result<Self> {
        Ok(LayerNorm {
            gain: ps.create(&format!("{name}.gain"), &[dim], Init::Ones)?,
            bias: ps.create(&format!("{name}.bias"), &[dim], Init::Zeros)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mean = x.mean_keepdim(D::Minus1)?;
        let centered = x.broadcast_sub(&mean)?;
        let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
        let normed = centered.broadcast_div(&(var + LN_EPS)?.sqrt()?)?;
        Ok(normed.broadcast_mul(&self.gain)?.broadcast_add(&self.bias)?)
    }
}

/// Two-layer perceptron with GELU.
#[derive(Debug, Clone)]
pub(crate) struct Mlp {
    fc1: Linear,
    fc2: Linear,
}

impl Mlp {
    pub fn new(ps: &mut ParamStore, name: &str, inp: usize, hidden: usize, out: usize) -> Result<Self> {
        Ok(Mlp {
            fc1: Linear::new(ps, &format!("{name}.fc1"), inp, hidden)?,
            fc2: Linear::new(ps, &format!("{name}.fc2"), hidden, out)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.fc2.forward(&self.fc1.forward(x)?.gelu()?)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Attention {
    q: Linear,
    k: Linear,
    v: Linear,
    out: Linear,
    heads: usize,
}

impl Attention {
    pub fn new(ps: &mut ParamStore, name: &str, dim: usize, heads: usize) -> Result<Self> {
        Ok(Attention {
            q: Linear::new(ps, &format!("{name}.q"), dim, dim)?,
            k: Linear::new(ps, &format!("{name}.k"), dim, dim)?,
            v: Linear::new(ps, &format!("{name}.v"), dim, dim)?,
            out: Linear::new(ps, &format!("{name}.out"), dim, dim)?,
            heads,
        })
    }

    /// `query` (B, Tq, H) attends over `context` (B, Tk, H). `mask` is an
    /// additive (Tq, Tk) bias.
    pub fn forward(&self, query: &Tensor, context: &Tensor, mask: Option<&Tensor>) -> Result<Tensor> {
        let (b, tq, h) = query.dims3()?;
        let tk = context.dim(1)?;
        let hd = h / self.heads;
        let split = |x: Tensor, t: usize| -> Result<Tensor> {
            Ok(x.reshape((b, t, self.heads, hd))?.transpose(1, 2)?.contiguous()?)
        };
        let q = split(self.q.forward(query)?, tq)?;
        let k = split(self.k.forward(context)?, tk)?;
        let v = split(self.v.forward(context)?, tk)?;
        let mut scores = (q.matmul(&k.t()?.contiguous()?)? / (hd as f64).sqrt())?;
        if let Some(m) = mask {
            scores = scores.broadcast_add(m)?;
        }
        let weights = candle_nn::ops::softmax(&scores, D::Minus1)?;
        let mixed = weights.matmul(&v)?.transpose(1, 2)?.reshape((b, tq, h))?;
        self.out.forward(&mixed)
    }
}

/// Pre-norm transformer block.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    ln1: LayerNorm,
    attn: Attention,
    ln2: LayerNorm,
    mlp: Mlp,
}

impl Block {
    pub fn new(ps: &mut ParamStore, name: &str, dim: usize, heads: usize) -> Result<Self> {
        Ok(Block {
            ln1: LayerNorm::new(ps, &format!("{name}.ln1"), dim)?,
            attn: Attention::new(ps, &format!("{name}.attn"), dim, heads)?,
            ln2: LayerNorm::new(ps, &format!("{name}.ln2"), dim)?,
            mlp: Mlp::new(ps, &format!("{name}.mlp"), dim, 4 * dim, dim)?,
        })
    }

    pub fn forward(&self, x: &Tensor, mask: Option<&Tensor>) -> Result<Tensor> {
        let n = self.ln1.forward(x)?;
        let x = (x + self.attn.forward(&n, &n, mask)?)?;
        let n = self.ln2.forward(&x)?;
        Ok((&x + self.mlp.forward(&n)?)?)
    }
}
