use primasm_core::{Discretizer, PrimitiveClass};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden_size: usize,
    pub attention_heads: usize,
    /// Number of condition tokens K.
    pub condition_tokens: usize,
    /// Farthest-point subsample size of the condition cloud.
    pub condition_points: usize,
    /// Fourier frequency bands of the point lift.
    pub fourier_bands: usize,
    pub class_embedding: usize,
    pub attribute_embedding: usize,
    pub num_classes: usize,
    pub rotation_levels: usize,
    pub scale_levels: usize,
    pub translation_levels: usize,
    pub max_sequence: usize,
    /// Feed decoded attributes into later heads. Off: every head reads the
    /// step feature only.
    pub cascade: bool,
    /// Let condition tokens attend to each other regardless of order.
    pub bidirectional_condition: bool,
    /// Seed for parameter initialization.
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let d = Discretizer::default();
        ModelConfig {
            layers: 4,
            hidden_size: 192,
            attention_heads: 4,
            condition_tokens: 64,
            condition_points: 1024,
            fourier_bands: 6,
            class_embedding: 48,
            attribute_embedding: 16,
            num_classes: PrimitiveClass::COUNT,
            rotation_levels: d.rotation_levels,
            scale_levels: d.scale_levels,
            translation_levels: d.translation_levels,
            max_sequence: 32,
            cascade: true,
            bidirectional_condition: false,
            init_seed: 0,
        }
    }
}

impl ModelConfig {
    /// 12 layers, hidden 768.
    pub fn full_scale() -> Self {
        ModelConfig { layers: 12, hidden_size: 768, attention_heads: 12, ..Default::default() }
    }

    pub fn with_discretizer(mut self, d: &Discretizer) -> Self {
        self.rotation_levels = d.rotation_levels;
        self.scale_levels = d.scale_levels;
        self.translation_levels = d.translation_levels;
        self
    }

    pub fn discretizer(&self) -> Discretizer {
        Discretizer {
            rotation_levels: self.rotation_levels,
            scale_levels: self.scale_levels,
            translation_levels: self.translation_levels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("layers", self.layers),
            ("hidden_size", self.hidden_size),
            ("attention_heads", self.attention_heads),
            ("condition_tokens", self.condition_tokens),
            ("condition_points", self.condition_points),
            ("class_embedding", self.class_embedding),
            ("attribute_embedding", self.attribute_embedding),
            ("rotation_levels", self.rotation_levels),
            ("scale_levels", self.scale_levels),
            ("translation_levels", self.translation_levels),
            ("max_sequence", self.max_sequence),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("model.{name} must be positive")));
        }
        if !self.hidden_size.is_multiple_of(self.attention_heads) {
            return Err(Error::Config(format!(
                "model.hidden_size {} is not divisible by model.attention_heads {}",
                self.hidden_size, self.attention_heads
            )));
        }
        if self.num_classes != PrimitiveClass::COUNT {
            return Err(Error::Config(format!(
                "model.num_classes must be {}, got {}",
                PrimitiveClass::COUNT,
                self.num_classes
            )));
        }
        if self.condition_points < self.condition_tokens.min(4) {
            return Err(Error::Config("model.condition_points is too small".into()));
        }
        self.discretizer().validate()?;
        Ok(())
    }

    /// Width of the concatenated class and attribute embeddings.
    pub fn token_width(&self) -> usize {
        self.class_embedding + 9 * self.attribute_embedding
    }

    pub(crate) fn point_feature_width(&self) -> usize {
        3 + 6 * self.fourier_bands
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ModelConfig::default().validate().unwrap();
        ModelConfig::full_scale().validate().unwrap();
        assert_eq!(ModelConfig::default().token_width(), 192);
    }

    #[test]
    fn rejects_bad_heads_and_zero_dims() {
        let c = ModelConfig { attention_heads: 5, ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = ModelConfig { layers: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
