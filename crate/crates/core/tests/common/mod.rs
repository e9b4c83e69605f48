//! Loop oracles and fuzz generators shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::Rng;

use mwe_attn::align::TokenizedSentence;
use mwe_attn::corpus::{MweInstance, MweType, Span};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// `t × t` row-stochastic matrix; some entries are exactly zero.
pub fn stochastic<R: Rng>(rng: &mut R, t: usize) -> Vec<f64> {
    let mut m = Vec::with_capacity(t * t);
    for _ in 0..t {
        let mut row: Vec<f64> = (0..t)
            .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random::<f64>() })
            .collect();
        if row.iter().all(|v| *v == 0.0) {
            row[rng.random_range(0..t)] = 1.0;
        }
        let s: f64 = row.iter().sum();
        m.extend(row.into_iter().map(|v| v / s));
    }
    m
}

/// Random role per index: specials, MWE and context, with at least
/// `min_mwe` MWE indices and one context index.
pub struct Roles {
    pub specials: Vec<usize>,
    pub mwe: Vec<usize>,
    pub context: Vec<usize>,
}

pub fn roles<R: Rng>(rng: &mut R, t: usize, min_mwe: usize) -> Roles {
    loop {
        let mut r = Roles {
            specials: vec![],
            mwe: vec![],
            context: vec![],
        };
        for i in 0..t {
            match rng.random_range(0..10) {
                0 => r.specials.push(i),
                1..=4 => r.mwe.push(i),
                _ => r.context.push(i),
            }
        }
        if r.mwe.len() >= min_mwe && !r.context.is_empty() {
            return r;
        }
    }
}

pub fn oracle_context(a: &[f64], t: usize, mwe: &[usize], ctx: &[usize], keys: Option<&[usize]>) -> f64 {
    let mut total = 0.0;
    for &q in ctx {
        let mut num = 0.0;
        for &k in mwe {
            num += a[q * t + k];
        }
        if let Some(keys) = keys {
            let mut den = 0.0;
            for &k in keys {
                den += a[q * t + k];
            }
            num = if den > 0.0 { num / den } else { 0.0 };
        }
        total += num;
    }
    100.0 * total / ctx.len() as f64
}

pub fn oracle_within(a: &[f64], t: usize, mwe: &[usize], keys: Option<&[usize]>, diagonal: bool) -> f64 {
    let mut total = 0.0;
    for &q in mwe {
        let mut num = 0.0;
        for &k in mwe {
            if k != q || diagonal {
                num += a[q * t + k];
            }
        }
        if let Some(keys) = keys {
            let mut den = 0.0;
            for &k in keys {
                den += a[q * t + k];
            }
            num = if den > 0.0 { num / den } else { 0.0 };
        }
        total += num;
    }
    100.0 * total / mwe.len() as f64
}

const LETTERS: &[char] = &['a', 'b', 'e', 'k', 'o', 'z', 'é', 'ж', 'ł', 'ä', 'Q', '7'];

pub fn word<R: Rng>(rng: &mut R) -> String {
    let n = rng.random_range(1..=7);
    (0..n).map(|_| LETTERS[rng.random_range(0..LETTERS.len())]).collect()
}

/// Sentence of `n` words separated by single spaces, with the char range of
/// each word.
pub fn sentence<R: Rng>(rng: &mut R, n: usize) -> (String, Vec<(usize, usize)>) {
    let mut text = String::new();
    let mut ranges = Vec::new();
    let mut pos = 0;
    for i in 0..n {
        if i > 0 {
            text.push(' ');
            pos += 1;
        }
        let w = word(rng);
        let len = w.chars().count();
        ranges.push((pos, pos + len));
        text.push_str(&w);
        pos += len;
    }
    (text, ranges)
}

/// Subword tokenization of `words`: each word cut at random interior
/// points, specials injected at random positions (always one in front).
pub fn fuzz_tokenization<R: Rng>(rng: &mut R, text: &str, words: &[(usize, usize)]) -> TokenizedSentence {
    let chars: Vec<char> = text.chars().collect();
    let mut tok = TokenizedSentence {
        tokens: vec![],
        offsets: vec![],
        special: vec![],
    };
    let push_special = |tok: &mut TokenizedSentence| {
        tok.tokens.push("[S]".into());
        tok.offsets.push(None);
        tok.special.push(true);
    };
    push_special(&mut tok);
    for &(s, e) in words {
        let mut cuts: Vec<usize> = (s + 1..e).filter(|_| rng.random_bool(0.4)).collect();
        cuts.push(e);
        let mut start = s;
        for c in cuts {
            tok.tokens.push(chars[start..c].iter().collect());
            tok.offsets.push(Some((start, c)));
            tok.special.push(false);
            start = c;
        }
        if rng.random_bool(0.1) {
            push_special(&mut tok);
        }
    }
    if rng.random_bool(0.7) {
        push_special(&mut tok);
    }
    tok
}

/// Instance whose MWE covers words `[a, b)` of the sentence.
pub fn instance(id: &str, text: &str, words: &[(usize, usize)], a: usize, b: usize, ty: MweType) -> MweInstance {
    let span = Span(words[a].0, words[b - 1].1);
    let surface: String = text.chars().skip(span.0).take(span.1 - span.0).collect();
    MweInstance {
        id: id.into(),
        language: "xx".into(),
        text: text.into(),
        mwe_type: ty,
        spans: vec![span],
        surface,
        source: String::new(),
        translation: None,
    }
}

/// Run configuration for the bundled fixtures, writing under `out`.
pub fn toy_config(out: &Path, extra: &str) -> String {
    let fx = |n: &str| fixture(n).display().to_string();
    format!(
        r#"seed = 13
output_dir = "{out}"
workers = 2

[[corpora]]
name = "mwe20"
path = "{corpus}"

[[models]]
id = "toy-pre"
layers = 2
heads = 2

[models.toy]
seed = 1

[finetune]
base_model = "toy-pre"

[finetune.tasks.pos]
train = "{train}"
dev = "{dev}"
test = "{test}"
train_size = 100
{extra}"#,
        out = out.display(),
        corpus = fx("mwe20.jsonl"),
        train = fx("en_ud_train.conllu"),
        dev = fx("en_ud_dev.conllu"),
        test = fx("en_ud_test.conllu"),
    )
}
