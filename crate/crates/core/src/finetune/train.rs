use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Example, LabelInventory, TaskDataset};
use super::registry::Checkpoint;
use super::{f1_score, Average, FinetuneError, Task};
use crate::model::{Adam, ClassifierHead, HeadKind, ToyEncoder};
use crate::tokenizer::SubwordTokenizer;
use crate::Scalar;

/// Seed offset for the classifier head so it never shares a stream with the
/// encoder initialized from the same seed.
const HEAD_SEED_SALT: u64 = 0x5eed_4ead;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinetuneConfig {
    pub task: Task,
    pub head: HeadKind,
    pub train_size: usize,
    #[serde(default = "defaults::held_out")]
    pub dev_size: usize,
    #[serde(default = "defaults::held_out")]
    pub test_size: usize,
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    /// Embeddings plus the bottom N layers stay fixed; 0 trains everything.
    #[serde(default)]
    pub freeze_layers: usize,
    pub average: Average,
}

mod defaults {
    pub fn held_out() -> usize {
        30
    }
    pub fn epochs() -> usize {
        10
    }
    pub fn learning_rate() -> f64 {
        3e-3
    }
    pub fn batch_size() -> usize {
        8
    }
}

impl FinetuneConfig {
    pub fn new(task: Task, train_size: usize, seed: u64) -> Self {
        FinetuneConfig {
            task,
            head: task.head(),
            train_size,
            dev_size: defaults::held_out(),
            test_size: defaults::held_out(),
            epochs: defaults::epochs(),
            seed,
            learning_rate: defaults::learning_rate(),
            batch_size: defaults::batch_size(),
            freeze_layers: 0,
            average: task.default_average(),
        }
    }

    pub fn validate(&self) -> Result<(), FinetuneError> {
        if self.head != self.task.head() {
            return Err(FinetuneError::InvalidConfig(format!(
                "task {} requires a {:?} head, got {:?}",
                self.task,
                self.task.head(),
                self.head
            )));
        }
        if self.train_size == 0 {
            return Err(FinetuneError::InvalidConfig("train_size must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(FinetuneError::InvalidConfig("batch_size must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(FinetuneError::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub dev_f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<F> {
    pub checkpoint: Checkpoint<F>,
    pub test_f1: f64,
    pub dev_f1: Option<f64>,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

/// Token ids plus one target slot per logit row (`None` = ignored).
struct Encoded {
    ids: Vec<usize>,
    targets: Vec<Option<usize>>,
}

/// Tokenizer matching an encoder's vocabulary and length limit.
pub fn tokenizer_for<F: Scalar>(enc: &ToyEncoder<F>) -> SubwordTokenizer {
    SubwordTokenizer {
        vocab_size: enc.config.vocab_size,
        max_len: enc.config.max_len,
        ..Default::default()
    }
}

/// Word labels go to the first subword of each word; continuation pieces,
/// specials and truncated words are ignored.
fn encode(tok: &SubwordTokenizer, labels: &LabelInventory, ex: &Example, task: Task, head: HeadKind) -> Result<Encoded, FinetuneError> {
    match (ex, head) {
        (Example::Tagged { words, tags }, HeadKind::TokenClassification) => {
            let wt = tok.tokenize_words(words);
            let targets = wt
                .word_of
                .iter()
                .zip(&wt.first_piece)
                .map(|(w, &first)| match w {
                    Some(w) if first => Some(labels.id(&tags[*w])),
                    _ => None,
                })
                .collect();
            Ok(Encoded {
                ids: tok.ids(&wt.sentence),
                targets,
            })
        }
        (Example::Text { text, label }, HeadKind::SequenceClassification) => Ok(Encoded {
            ids: tok.ids(&tok.tokenize(text)),
            targets: vec![Some(labels.id(label))],
        }),
        _ => Err(FinetuneError::HeadMismatch { task, head }),
    }
}

fn encode_all(tok: &SubwordTokenizer, labels: &LabelInventory, split: &[Example], task: Task, head: HeadKind) -> Result<Vec<Encoded>, FinetuneError> {
    split.iter().map(|ex| encode(tok, labels, ex, task, head)).collect()
}

fn ignored_ids(task: Task, labels: &LabelInventory) -> Vec<usize> {
    task.ignored_labels()
        .iter()
        .map(|l| labels.id(l))
        .filter(|&i| i != 0)
        .collect()
}

fn score<F: Scalar>(
    enc: &ToyEncoder<F>,
    head: &ClassifierHead<F>,
    data: &[Encoded],
    average: Average,
    ignore: &[usize],
) -> Result<f64, FinetuneError> {
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for e in data {
        let (h, _) = enc.forward(&e.ids);
        for (t, p) in e.targets.iter().zip(head.predict(&h)) {
            if let Some(g) = t {
                gold.push(*g);
                pred.push(p);
            }
        }
    }
    f1_score(&gold, &pred, average, ignore)
}

/// F1 of a checkpoint on a split, scored at labeled first-subword positions.
pub fn evaluate_f1<F: Scalar>(ckpt: &Checkpoint<F>, split: &[Example], average: Average) -> Result<f64, FinetuneError> {
    if ckpt.labels.len() != ckpt.head.classes() {
        return Err(FinetuneError::LabelMismatch {
            checkpoint: ckpt.labels.len(),
            head: ckpt.head.classes(),
        });
    }
    if split.is_empty() {
        return Err(FinetuneError::EmptySplit("test"));
    }
    let tok = tokenizer_for(&ckpt.encoder);
    let data = encode_all(&tok, &ckpt.labels, split, ckpt.task, ckpt.head.kind)?;
    score(&ckpt.encoder, &ckpt.head, &data, average, &ignored_ids(ckpt.task, &ckpt.labels))
}

/// Test F1 of always predicting the most frequent training label (ties go
/// to the lexicographically smaller label). Positions are the ones `tok`
/// would score, so truncation matches evaluation.
pub fn majority_baseline_f1(dataset: &TaskDataset, average: Average, tok: &SubwordTokenizer) -> Result<f64, FinetuneError> {
    let mut counts = vec![0usize; dataset.labels.len()];
    for l in dataset.train.iter().flat_map(Example::labels) {
        counts[dataset.labels.id(l)] += 1;
    }
    let majority = (1..counts.len()).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap_or(0);
    let head = dataset.task.head();
    let mut gold = Vec::new();
    for ex in &dataset.test {
        let e = encode(tok, &dataset.labels, ex, dataset.task, head)?;
        gold.extend(e.targets.into_iter().flatten());
    }
    let pred = vec![majority; gold.len()];
    f1_score(&gold, &pred, average, &ignored_ids(dataset.task, &dataset.labels))
}

/// Fine-tunes a copy of `base` with Adam. The dev split picks the epoch to
/// keep (strict improvement only; epoch 0 is the untrained state); the kept
/// weights are scored on the test split.
pub fn train<F: Scalar>(
    config: &FinetuneConfig,
    dataset: &TaskDataset,
    base: &ToyEncoder<F>,
    base_model_id: &str,
    model_id: &str,
) -> Result<TrainOutcome<F>, FinetuneError> {
    config.validate()?;
    if dataset.task != config.task {
        return Err(FinetuneError::InvalidConfig(format!(
            "dataset is for {}, config for {}",
            dataset.task, config.task
        )));
    }
    if dataset.train.is_empty() {
        return Err(FinetuneError::EmptySplit("train"));
    }
    if dataset.test.is_empty() {
        return Err(FinetuneError::EmptySplit("test"));
    }
    let tok = tokenizer_for(base);
    let labels = &dataset.labels;
    let train_set = encode_all(&tok, labels, &dataset.train, config.task, config.head)?;
    let dev_set = encode_all(&tok, labels, &dataset.dev, config.task, config.head)?;
    let test_set = encode_all(&tok, labels, &dataset.test, config.task, config.head)?;
    let ignore = ignored_ids(config.task, labels);

    let mut enc = base.clone();
    let mut head = ClassifierHead::<F>::init(config.head, base.config.d_model, labels.len(), config.seed ^ HEAD_SEED_SALT);
    let mut frozen = enc.frozen_mask(config.freeze_layers);
    frozen.extend([false, false]);
    let mut shapes: Vec<usize> = enc.tensors().iter().map(|t| t.len()).collect();
    shapes.extend([head.w.data.len(), head.b.len()]);
    let mut adam = Adam::<F>::new(config.learning_rate, &shapes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let dev_score = |e: &ToyEncoder<F>, h: &ClassifierHead<F>| -> Result<Option<f64>, FinetuneError> {
        if dev_set.is_empty() {
            Ok(None)
        } else {
            score(e, h, &dev_set, config.average, &ignore).map(Some)
        }
    };
    let mut best_dev = dev_score(&enc, &head)?;
    let mut best = (0, enc.clone(), head.clone());
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_n = 0usize;
        for (step, batch) in order.chunks(config.batch_size).enumerate() {
            let mut g_enc = enc.zeros_like();
            let mut g_head = head.zeros_like();
            let mut loss = F::zero();
            let mut n = 0;
            for &i in batch {
                let ex = &train_set[i];
                let (h, cache) = enc.forward(&ex.ids);
                let (l, k, dh) = head.loss_backward(&h, &ex.targets, &mut g_head);
                if k > 0 {
                    enc.backward(&cache, dh, &mut g_enc);
                }
                loss = loss + l;
                n += k;
            }
            if n == 0 {
                continue;
            }
            let loss_f = loss.as_f64();
            if !loss_f.is_finite() {
                return Err(FinetuneError::Diverged {
                    epoch,
                    step,
                    loss: loss_f,
                });
            }
            epoch_loss += loss_f;
            epoch_n += n;
            let scale = F::one() / F::from_usize_lossy(n);
            let mut params = enc.tensors_mut();
            params.extend([&mut head.w.data[..], &mut head.b[..]]);
            let mut grads = g_enc.tensors();
            grads.extend([&g_head.w.data[..], &g_head.b[..]]);
            adam.step(params, grads, &frozen, scale);
        }
        let dev_f1 = dev_score(&enc, &head)?;
        let improved = match (dev_f1, best_dev) {
            (Some(d), Some(b)) => d > b,
            (None, _) => true,
            (Some(_), None) => true,
        };
        if improved {
            best_dev = dev_f1;
            best = (epoch, enc.clone(), head.clone());
        }
        history.push(EpochStats {
            epoch,
            mean_loss: if epoch_n == 0 { 0.0 } else { epoch_loss / epoch_n as f64 },
            dev_f1,
        });
    }

    let (best_epoch, enc, head) = best;
    let test_f1 = score(&enc, &head, &test_set, config.average, &ignore)?;
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            model_id: model_id.to_string(),
            base_model_id: base_model_id.to_string(),
            task: config.task,
            labels: labels.clone(),
            encoder: enc,
            head,
        },
        test_f1,
        dev_f1: best_dev,
        best_epoch,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EncoderConfig;

    fn tagged(words: &[&str], tags: &[&str]) -> Example {
        Example::Tagged {
            words: words.iter().map(|s| s.to_string()).collect(),
            tags: tags.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn tiny() -> TaskDataset {
        let train = vec![
            tagged(&["the", "cat", "sleeps"], &["DET", "NOUN", "VERB"]),
            tagged(&["a", "dog", "runs"], &["DET", "NOUN", "VERB"]),
            tagged(&["the", "dog", "sleeps"], &["DET", "NOUN", "VERB"]),
        ];
        let labels = LabelInventory::from_examples(&train);
        TaskDataset {
            task: Task::Pos,
            language: "en".into(),
            dev: train.clone(),
            test: vec![tagged(&["a", "dog", "sleeps"], &["DET", "NOUN", "VERB"])],
            train,
            labels,
            warnings: vec![],
        }
    }

    #[test]
    fn head_task_mismatch_is_rejected() {
        let mut cfg = FinetuneConfig::new(Task::Pos, 3, 0);
        cfg.head = HeadKind::SequenceClassification;
        assert!(matches!(cfg.validate(), Err(FinetuneError::InvalidConfig(_))));
        let mut cfg = FinetuneConfig::new(Task::Topic, 3, 0);
        assert!(cfg.validate().is_ok());
        cfg.head = HeadKind::TokenClassification;
        assert!(cfg.validate().is_err());
        assert!(FinetuneConfig::new(Task::Pos, 0, 0).validate().is_err());
    }

    #[test]
    fn zero_epochs_keeps_base_weights() {
        let base = ToyEncoder::<f64>::init(EncoderConfig::default(), 1);
        let mut cfg = FinetuneConfig::new(Task::Pos, 3, 4);
        cfg.epochs = 0;
        let out = train(&cfg, &tiny(), &base, "toy", "toy-pos").unwrap();
        assert_eq!(out.checkpoint.encoder.digest(), base.digest());
        assert_eq!(out.best_epoch, 0);
        let untrained = ClassifierHead::<f64>::init(HeadKind::TokenClassification, 32, 4, 4 ^ HEAD_SEED_SALT);
        assert_eq!(out.checkpoint.head, untrained);
        let f = evaluate_f1(&out.checkpoint, &tiny().test, Average::Micro).unwrap();
        assert_eq!(f, out.test_f1);
    }

    #[test]
    fn learns_a_trivial_tagging() {
        let base = ToyEncoder::<f64>::init(EncoderConfig::default(), 1);
        let mut cfg = FinetuneConfig::new(Task::Pos, 3, 4);
        cfg.epochs = 30;
        cfg.learning_rate = 1e-2;
        let out = train(&cfg, &tiny(), &base, "toy", "toy-pos").unwrap();
        assert_eq!(out.test_f1, 1.0, "{:?}", out.history);
    }

    #[test]
    fn tagged_examples_cannot_feed_sequence_head() {
        let ds = tiny();
        let tok = SubwordTokenizer::default();
        let err = encode(&tok, &ds.labels, &ds.train[0], Task::Topic, HeadKind::SequenceClassification);
        assert!(matches!(err, Err(FinetuneError::HeadMismatch { .. })));
    }

    #[test]
    fn continuation_pieces_are_ignored() {
        let ds = tiny();
        let tok = SubwordTokenizer::default();
        let e = encode(&tok, &ds.labels, &tagged(&["sleeps"], &["VERB"]), Task::Pos, HeadKind::TokenClassification).unwrap();
        // [CLS] slee ##ps [SEP]
        assert_eq!(e.targets, vec![None, Some(ds.labels.id("VERB")), None, None]);
    }
}
