use serde::{Deserialize, Serialize};

use super::{EncoderConfig, ToyEncoder};
use crate::align::TokenizedSentence;
use crate::attnio::{AttnError, ModelRunner, RawAttention};
use crate::tokenizer::SubwordTokenizer;
use crate::Scalar;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyVariant {
    /// Seeded random weights.
    #[default]
    Random,
    /// Random weights with zeroed query/key projections: uniform attention.
    Uniform,
}

/// Reference runner backed by [`ToyEncoder`] and [`SubwordTokenizer`].
/// Single unpadded sequence per forward pass.
#[derive(Debug, Clone)]
pub struct ToyRunner<F> {
    model_id: String,
    pub encoder: ToyEncoder<F>,
    pub tokenizer: SubwordTokenizer,
}

impl<F: Scalar> ToyRunner<F> {
    pub fn new(model_id: impl Into<String>, encoder: ToyEncoder<F>) -> Self {
        let tokenizer = SubwordTokenizer {
            vocab_size: encoder.config.vocab_size,
            max_len: encoder.config.max_len,
            ..Default::default()
        };
        ToyRunner {
            model_id: model_id.into(),
            encoder,
            tokenizer,
        }
    }

    pub fn seeded(model_id: impl Into<String>, config: EncoderConfig, seed: u64, variant: ToyVariant) -> Self {
        let enc = ToyEncoder::init(config, seed);
        let enc = match variant {
            ToyVariant::Random => enc,
            ToyVariant::Uniform => enc.with_uniform_attention(),
        };
        Self::new(model_id, enc)
    }
}

impl<F: Scalar> ModelRunner<F> for ToyRunner<F> {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn num_layers(&self) -> usize {
        self.encoder.config.layers
    }

    fn num_heads(&self) -> usize {
        self.encoder.config.heads
    }

    fn max_len(&self) -> usize {
        self.encoder.config.max_len
    }

    fn tokenize(&self, text: &str) -> TokenizedSentence {
        self.tokenizer.tokenize(text)
    }

    fn attend(&self, text: &str) -> Result<RawAttention<F>, AttnError> {
        let tok = self.tokenizer.tokenize(text);
        Ok(self.encoder.attention(&self.tokenizer.ids(&tok)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_and_attend_agree_on_length() {
        let r = ToyRunner::<f32>::seeded("toy", EncoderConfig::default(), 3, ToyVariant::Random);
        let (tok, raw) = r
            .run("They covered the whole field from A to Z in eight classes.")
            .unwrap();
        assert_eq!(tok.len(), raw.seq_len);
        assert_eq!(raw.layers, 2);
        assert_eq!(raw.heads, 2);
    }
}
