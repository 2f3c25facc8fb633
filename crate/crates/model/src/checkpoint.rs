//! Self-describing safetensors checkpoints.
//!
//! Tensors are stored as `param/<name>` (and `adam/m/<name>`, `adam/v/<name>`
//! when optimizer state is included). The header metadata carries
//! `format_version`, `model_config`, `discretizer` and optionally
//! `train_state`, each as JSON.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use candle_core::{DType, Device, Tensor};
use primasm_core::Discretizer;

use crate::config::ModelConfig;
use crate::model::PrimitiveTransformer;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

pub struct Checkpoint {
    pub model_config: ModelConfig,
    pub discretizer: Discretizer,
    pub params: BTreeMap<String, Tensor>,
    pub optimizer: BTreeMap<String, Tensor>,
    pub train_state: Option<serde_json::Value>,
}

pub fn save(
    path: &Path,
    model: &PrimitiveTransformer,
    optimizer: &BTreeMap<String, Tensor>,
    train_state: Option<serde_json::Value>,
) -> Result<()> {
    let mut tensors: Vec<(String, Tensor)> = Vec::new();
    for (name, t) in model.params().snapshot()? {
        tensors.push((format!("param/{name}"), t));
    }
    for (name, t) in optimizer {
        tensors.push((format!("adam/{name}"), t.clone()));
    }
    let mut meta = HashMap::new();
    meta.insert("format_version".to_string(), FORMAT_VERSION.to_string());
    meta.insert("model_config".to_string(), serde_json::to_string(model.config()).expect("config serializes"));
    meta.insert(
        "discretizer".to_string(),
        serde_json::to_string(&model.config().discretizer()).expect("discretizer serializes"),
    );
    if let Some(state) = train_state {
        meta.insert("train_state".to_string(), state.to_string());
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    safetensors::serialize_to_file(tensors.iter().map(|(k, t)| (k.as_str(), t)), Some(meta), path)
        .map_err(|e| Error::checkpoint(path, e.to_string()))
}

pub fn load(path: &Path, device: &Device) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (_, header) = safetensors::SafeTensors::read_metadata(&bytes)
        .map_err(|e| Error::checkpoint(path, format!("not a safetensors file: {e}")))?;
    let meta = header.metadata().clone().unwrap_or_default();
    let field = |key: &str| -> Result<&String> {
        meta.get(key).ok_or_else(|| Error::checkpoint(path, format!("missing {key}")))
    };
    let version: u32 = field("format_version")?
        .parse()
        .map_err(|_| Error::checkpoint(path, "unreadable format_version"))?;
    if version != FORMAT_VERSION {
        return Err(Error::checkpoint(
            path,
            format!("format version {version}, expected {FORMAT_VERSION}"),
        ));
    }
    let parse_err = |what: &str, e: serde_json::Error| Error::checkpoint(path, format!("{what}: {e}"));
    let model_config: ModelConfig =
        serde_json::from_str(field("model_config")?).map_err(|e| parse_err("model_config", e))?;
    let discretizer: Discretizer =
        serde_json::from_str(field("discretizer")?).map_err(|e| parse_err("discretizer", e))?;
    let train_state = match meta.get("train_state") {
        Some(s) => Some(serde_json::from_str(s).map_err(|e| parse_err("train_state", e))?),
        None => None,
    };
    let all = candle_core::safetensors::load_buffer(&bytes, device)?;
    let mut params = BTreeMap::new();
    let mut optimizer = BTreeMap::new();
    for (k, t) in all {
        if let Some(name) = k.strip_prefix("param/") {
            params.insert(name.to_string(), t);
        } else if let Some(name) = k.strip_prefix("adam/") {
            optimizer.insert(name.to_string(), t);
        }
    }
    Ok(Checkpoint { model_config, discretizer, params, optimizer, train_state })
}

/// Rebuilds the model stored in `path`.
pub fn load_model(path: &Path, device: &Device, dtype: DType) -> Result<(PrimitiveTransformer, Discretizer)> {
    let ckpt = load(path, device)?;
    let model = model_from(&ckpt, device, dtype).map_err(|e| Error::checkpoint(path, e.to_string()))?;
    Ok((model, ckpt.discretizer))
}

pub fn model_from(ckpt: &Checkpoint, device: &Device, dtype: DType) -> Result<PrimitiveTransformer> {
    if ckpt.model_config.discretizer() != ckpt.discretizer {
        return Err(Error::Config("model level counts disagree with the stored discretizer".into()));
    }
    let model = PrimitiveTransformer::new(&ckpt.model_config, device, dtype)?;
    model.params().load(&ckpt.params)?;
    Ok(model)
}
