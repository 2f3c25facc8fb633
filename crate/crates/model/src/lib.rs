//! Shape-conditioned autoregressive primitive transformer.
//!
//! A point cloud is encoded into a fixed number of condition tokens; a
//! decoder-only transformer then predicts primitives one at a time, each
//! decoded through cascaded heads (class, then translation, rotation and
//! scale) and followed by an end-of-sequence decision. Training combines
//! cross-entropy, EOS and a Gumbel-Softmax Chamfer term.

pub mod checkpoint;
pub mod config;
mod error;
pub mod infer;
pub mod loss;
pub mod model;
mod nn;
pub mod optim;
mod params;
pub mod train;

pub use config::ModelConfig;
pub use error::{Error, Result};
pub use infer::{generate, generate_with_prefix, Generation, SamplingConfig, SamplingMode, Termination};
pub use loss::{CdPairing, LossBreakdown, LossWeights};
pub use model::{AttributeLogits, KnownAttributes, PrimitiveTransformer};
pub use params::ParamStore;
pub use train::{prepare_samples, LrSchedule, TrainConfig, Trainer, TrainingSample};
