//! Deterministic subword tokenizer for the toy encoder.
//!
//! Words are split off at whitespace and punctuation, then cut into pieces of
//! at most `max_piece_chars` chars; continuation pieces carry a `##` prefix.
//! Piece ids are hashed into a fixed vocabulary, so no vocabulary file is
//! needed. Every sequence is wrapped in `[CLS]` / `[SEP]`.

use serde::{Deserialize, Serialize};

use crate::align::TokenizedSentence;
use crate::corpus::text::word_pieces;

pub const PAD_ID: usize = 0;
pub const CLS_ID: usize = 1;
pub const SEP_ID: usize = 2;
const RESERVED: usize = 3;

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubwordTokenizer {
    pub vocab_size: usize,
    pub max_piece_chars: usize,
    /// Maximum sequence length including the two special tokens.
    pub max_len: usize,
}

impl Default for SubwordTokenizer {
    fn default() -> Self {
        SubwordTokenizer {
            vocab_size: 2048,
            max_piece_chars: 4,
            max_len: 64,
        }
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Output of [`SubwordTokenizer::tokenize_words`]: the sentence plus, per
/// token, the index of the word it came from and whether it is the word's
/// first piece.
#[derive(Debug, Clone)]
pub struct WordTokenization {
    pub sentence: TokenizedSentence,
    pub word_of: Vec<Option<usize>>,
    pub first_piece: Vec<bool>,
}

impl SubwordTokenizer {
    fn split_word(&self, start: usize, word: &str) -> Vec<(String, usize, usize)> {
        let chars: Vec<char> = word.chars().collect();
        chars
            .chunks(self.max_piece_chars.max(1))
            .enumerate()
            .map(|(k, chunk)| {
                let s = start + k * self.max_piece_chars.max(1);
                let piece: String = chunk.iter().collect();
                let text = if k == 0 { piece } else { format!("##{piece}") };
                (text, s, s + chunk.len())
            })
            .collect()
    }

    fn wrap(&self, pieces: Vec<(String, usize, usize)>) -> (TokenizedSentence, usize) {
        let keep = pieces.len().min(self.max_len.saturating_sub(2));
        let mut tokens = vec![CLS.to_string()];
        let mut offsets = vec![None];
        let mut special = vec![true];
        for (text, s, e) in pieces.into_iter().take(keep) {
            tokens.push(text);
            offsets.push(Some((s, e)));
            special.push(false);
        }
        tokens.push(SEP.to_string());
        offsets.push(None);
        special.push(true);
        (
            TokenizedSentence {
                tokens,
                offsets,
                special,
            },
            keep,
        )
    }

    /// Tokenizes raw text, truncating to `max_len`.
    pub fn tokenize(&self, text: &str) -> TokenizedSentence {
        let pieces = word_pieces(text, &[])
            .into_iter()
            .flat_map(|p| self.split_word(p.start, &p.text))
            .collect();
        self.wrap(pieces).0
    }

    /// Tokenizes pre-split words (joined by single spaces), tracking which
    /// word each subword came from.
    pub fn tokenize_words(&self, words: &[String]) -> WordTokenization {
        let mut pieces = Vec::new();
        let mut origin = Vec::new();
        let mut start = 0;
        for (w, word) in words.iter().enumerate() {
            for (k, p) in self.split_word(start, word).into_iter().enumerate() {
                pieces.push(p);
                origin.push((w, k == 0));
            }
            start += word.chars().count() + 1;
        }
        let (sentence, keep) = self.wrap(pieces);
        let mut word_of = vec![None];
        let mut first_piece = vec![false];
        for &(w, first) in origin.iter().take(keep) {
            word_of.push(Some(w));
            first_piece.push(first);
        }
        word_of.push(None);
        first_piece.push(false);
        WordTokenization {
            sentence,
            word_of,
            first_piece,
        }
    }

    pub fn token_id(&self, token: &str) -> usize {
        match token {
            CLS => CLS_ID,
            SEP => SEP_ID,
            _ => RESERVED + (fnv1a(token) % (self.vocab_size - RESERVED) as u64) as usize,
        }
    }

    pub fn ids(&self, sentence: &TokenizedSentence) -> Vec<usize> {
        sentence.tokens.iter().map(|t| self.token_id(t)).collect()
    }
}
