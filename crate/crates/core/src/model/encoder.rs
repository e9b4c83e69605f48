use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{softmax_rows, Matrix};
use crate::attnio::RawAttention;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub heads: usize,
    pub layers: usize,
    pub ffn_dim: usize,
    pub max_len: usize,
    /// Std of token and position embeddings; weight matrices use `1/sqrt(fan_in)`.
    pub embed_std: f64,
}

impl Default for EncoderConfig {
    /// Two layers, two heads.
    fn default() -> Self {
        EncoderConfig {
            vocab_size: 2048,
            d_model: 32,
            heads: 2,
            layers: 2,
            ffn_dim: 64,
            max_len: 64,
            embed_std: 1.0,
        }
    }
}

impl EncoderConfig {
    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.heads == 0 || self.layers == 0 || self.d_model == 0 {
            return Err("layers, heads and d_model must be positive".into());
        }
        if !self.d_model.is_multiple_of(self.heads) {
            return Err(format!(
                "d_model {} not divisible by {} heads",
                self.d_model, self.heads
            ));
        }
        if self.max_len < 3 {
            return Err("max_len must leave room for two special tokens".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct LayerParams<F> {
    pub wq: Matrix<F>,
    pub wk: Matrix<F>,
    pub wv: Matrix<F>,
    pub wo: Matrix<F>,
    pub w1: Matrix<F>,
    pub b1: Vec<F>,
    pub w2: Matrix<F>,
    pub b2: Vec<F>,
}

/// Post-residual encoder: per layer, multi-head self-attention and a ReLU
/// feed-forward block, each wrapped in a residual connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ToyEncoder<F> {
    pub config: EncoderConfig,
    pub tok_emb: Matrix<F>,
    pub pos_emb: Matrix<F>,
    pub layers: Vec<LayerParams<F>>,
}

struct LayerCache<F> {
    x: Matrix<F>,
    q: Matrix<F>,
    k: Matrix<F>,
    v: Matrix<F>,
    probs: Vec<Matrix<F>>,
    o: Matrix<F>,
    x1: Matrix<F>,
    z: Matrix<F>,
    r: Matrix<F>,
}

/// Activations kept for the backward pass.
pub struct ForwardCache<F> {
    ids: Vec<usize>,
    layers: Vec<LayerCache<F>>,
}

impl<F: Scalar> ForwardCache<F> {
    /// Per-head attention probabilities of every layer.
    pub fn attention(&self) -> RawAttention<F> {
        let t = self.ids.len();
        let heads = self.layers.first().map_or(0, |l| l.probs.len());
        let mut values = Vec::with_capacity(self.layers.len() * heads * t * t);
        for layer in &self.layers {
            for p in &layer.probs {
                values.extend_from_slice(&p.data);
            }
        }
        RawAttention::new(self.layers.len(), heads, t, values).expect("cache shapes agree")
    }
}

fn add_bias<F: Scalar>(m: &mut Matrix<F>, b: &[F]) {
    for r in 0..m.rows {
        for (v, bb) in m.row_mut(r).iter_mut().zip(b) {
            *v = *v + *bb;
        }
    }
}

fn col_sum_into<F: Scalar>(m: &Matrix<F>, acc: &mut [F]) {
    for r in 0..m.rows {
        for (a, v) in acc.iter_mut().zip(m.row(r)) {
            *a = *a + *v;
        }
    }
}

fn add<F: Scalar>(a: &Matrix<F>, b: &Matrix<F>) -> Matrix<F> {
    let mut out = a.clone();
    out.add_assign(b);
    out
}

impl<F: Scalar> ToyEncoder<F> {
    /// Random initialization from `seed`.
    pub fn init(config: EncoderConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.d_model;
        let dstd = 1.0 / (d as f64).sqrt();
        let fstd = 1.0 / (config.ffn_dim as f64).sqrt();
        let tok_emb = Matrix::random(config.vocab_size, d, config.embed_std, &mut rng);
        let pos_emb = Matrix::random(config.max_len, d, config.embed_std, &mut rng);
        let layers = (0..config.layers)
            .map(|_| LayerParams {
                wq: Matrix::random(d, d, dstd, &mut rng),
                wk: Matrix::random(d, d, dstd, &mut rng),
                wv: Matrix::random(d, d, dstd, &mut rng),
                wo: Matrix::random(d, d, dstd, &mut rng),
                w1: Matrix::random(d, config.ffn_dim, dstd, &mut rng),
                b1: vec![F::zero(); config.ffn_dim],
                w2: Matrix::random(config.ffn_dim, d, fstd, &mut rng),
                b2: vec![F::zero(); d],
            })
            .collect();
        ToyEncoder {
            config,
            tok_emb,
            pos_emb,
            layers,
        }
    }

    /// Zeroes query and key projections so every head attends uniformly.
    pub fn with_uniform_attention(mut self) -> Self {
        for l in &mut self.layers {
            l.wq.data.iter_mut().for_each(|v| *v = F::zero());
            l.wk.data.iter_mut().for_each(|v| *v = F::zero());
        }
        self
    }

    /// Same shapes, all zeros; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.iter_mut().for_each(|v| *v = F::zero());
        }
        z
    }

    /// Parameter tensors in a fixed order: embeddings, then per layer
    /// `wq wk wv wo w1 b1 w2 b2`.
    pub fn tensors(&self) -> Vec<&[F]> {
        let mut out: Vec<&[F]> = vec![&self.tok_emb.data, &self.pos_emb.data];
        for l in &self.layers {
            out.extend([
                &l.wq.data[..],
                &l.wk.data,
                &l.wv.data,
                &l.wo.data,
                &l.w1.data,
                &l.b1,
                &l.w2.data,
                &l.b2,
            ]);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [F]> {
        let mut out: Vec<&mut [F]> = vec![&mut self.tok_emb.data, &mut self.pos_emb.data];
        for l in &mut self.layers {
            out.extend([
                &mut l.wq.data[..],
                &mut l.wk.data,
                &mut l.wv.data,
                &mut l.wo.data,
                &mut l.w1.data,
                &mut l.b1,
                &mut l.w2.data,
                &mut l.b2,
            ]);
        }
        out
    }

    /// Which tensors belong to the embeddings or the bottom `n` layers.
    pub fn frozen_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![n > 0; 2];
        for i in 0..self.layers.len() {
            mask.extend([i < n; 8]);
        }
        mask
    }

    /// SHA-256 over all weights as little-endian `f64`.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for t in self.tensors() {
            for v in t {
                h.update(v.as_f64().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn cast<G: Scalar>(&self) -> ToyEncoder<G> {
        ToyEncoder {
            config: self.config,
            tok_emb: self.tok_emb.cast(),
            pos_emb: self.pos_emb.cast(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    wq: l.wq.cast(),
                    wk: l.wk.cast(),
                    wv: l.wv.cast(),
                    wo: l.wo.cast(),
                    w1: l.w1.cast(),
                    b1: l.b1.iter().map(|v| v.cast()).collect(),
                    w2: l.w2.cast(),
                    b2: l.b2.iter().map(|v| v.cast()).collect(),
                })
                .collect(),
        }
    }

    /// Hidden states (`T × d_model`) plus the activations for backprop.
    pub fn forward(&self, ids: &[usize]) -> (Matrix<F>, ForwardCache<F>) {
        let t = ids.len();
        assert!(t <= self.config.max_len, "sequence longer than max_len");
        let d = self.config.d_model;
        let mut x = Matrix::zeros(t, d);
        for (p, &id) in ids.iter().enumerate() {
            let row = x.row_mut(p);
            for ((o, a), b) in row
                .iter_mut()
                .zip(self.tok_emb.row(id))
                .zip(self.pos_emb.row(p))
            {
                *o = *a + *b;
            }
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (next, cache) = self.layer_forward(layer, x);
            caches.push(cache);
            x = next;
        }
        (
            x,
            ForwardCache {
                ids: ids.to_vec(),
                layers: caches,
            },
        )
    }

    fn layer_forward(&self, p: &LayerParams<F>, x: Matrix<F>) -> (Matrix<F>, LayerCache<F>) {
        let t = x.rows;
        let heads = self.config.heads;
        let dh = self.config.head_dim();
        let scale = F::one() / F::from_usize_lossy(dh).sqrt();
        let q = x.matmul(&p.wq);
        let k = x.matmul(&p.wk);
        let v = x.matmul(&p.wv);
        let mut o = Matrix::zeros(t, self.config.d_model);
        let mut probs = Vec::with_capacity(heads);
        for h in 0..heads {
            let qh = q.col_block(h * dh, dh);
            let kh = k.col_block(h * dh, dh);
            let vh = v.col_block(h * dh, dh);
            let mut s = qh.matmul_nt(&kh);
            s.data.iter_mut().for_each(|x| *x = *x * scale);
            softmax_rows(&mut s);
            o.set_col_block(h * dh, &s.matmul(&vh));
            probs.push(s);
        }
        let x1 = add(&x, &o.matmul(&p.wo));
        let mut z = x1.matmul(&p.w1);
        add_bias(&mut z, &p.b1);
        let mut r = z.clone();
        r.data.iter_mut().for_each(|v| *v = v.max(F::zero()));
        let mut y = r.matmul(&p.w2);
        add_bias(&mut y, &p.b2);
        let out = add(&x1, &y);
        (
            out,
            LayerCache {
                x,
                q,
                k,
                v,
                probs,
                o,
                x1,
                z,
                r,
            },
        )
    }

    /// Per-head attention for a token id sequence.
    pub fn attention(&self, ids: &[usize]) -> RawAttention<F> {
        self.forward(ids).1.attention()
    }

    /// Accumulates parameter gradients into `grads` given `d_hidden`, the
    /// gradient of the loss with respect to the final hidden states.
    pub fn backward(&self, cache: &ForwardCache<F>, d_hidden: Matrix<F>, grads: &mut ToyEncoder<F>) {
        let mut dx = d_hidden;
        for (i, (p, c)) in self.layers.iter().zip(&cache.layers).enumerate().rev() {
            dx = self.layer_backward(p, c, dx, &mut grads.layers[i]);
        }
        for (pos, &id) in cache.ids.iter().enumerate() {
            let g = dx.row(pos);
            for (a, v) in grads.tok_emb.row_mut(id).iter_mut().zip(g) {
                *a = *a + *v;
            }
            for (a, v) in grads.pos_emb.row_mut(pos).iter_mut().zip(g) {
                *a = *a + *v;
            }
        }
    }

    fn layer_backward(
        &self,
        p: &LayerParams<F>,
        c: &LayerCache<F>,
        dx2: Matrix<F>,
        g: &mut LayerParams<F>,
    ) -> Matrix<F> {
        let t = c.x.rows;
        let heads = self.config.heads;
        let dh = self.config.head_dim();
        let scale = F::one() / F::from_usize_lossy(dh).sqrt();

        // feed-forward block
        g.w2.add_assign(&c.r.matmul_tn(&dx2));
        col_sum_into(&dx2, &mut g.b2);
        let mut dz = dx2.matmul_nt(&p.w2);
        for (d, z) in dz.data.iter_mut().zip(&c.z.data) {
            if *z <= F::zero() {
                *d = F::zero();
            }
        }
        g.w1.add_assign(&c.x1.matmul_tn(&dz));
        col_sum_into(&dz, &mut g.b1);
        let dx1 = add(&dx2, &dz.matmul_nt(&p.w1));

        // attention block
        g.wo.add_assign(&c.o.matmul_tn(&dx1));
        let d_o = dx1.matmul_nt(&p.wo);
        let d = self.config.d_model;
        let mut dq = Matrix::zeros(t, d);
        let mut dk = Matrix::zeros(t, d);
        let mut dv = Matrix::zeros(t, d);
        for h in 0..heads {
            let prob = &c.probs[h];
            let doh = d_o.col_block(h * dh, dh);
            let qh = c.q.col_block(h * dh, dh);
            let kh = c.k.col_block(h * dh, dh);
            let vh = c.v.col_block(h * dh, dh);
            let dp = doh.matmul_nt(&vh);
            dv.set_col_block(h * dh, &prob.matmul_tn(&doh));
            let mut ds = Matrix::zeros(t, t);
            for i in 0..t {
                let pr = prob.row(i);
                let dpr = dp.row(i);
                let inner = pr.iter().zip(dpr).fold(F::zero(), |a, (x, y)| a + *x * *y);
                for (j, out) in ds.row_mut(i).iter_mut().enumerate() {
                    *out = pr[j] * (dpr[j] - inner) * scale;
                }
            }
            dq.set_col_block(h * dh, &ds.matmul(&kh));
            dk.set_col_block(h * dh, &ds.matmul_tn(&qh));
        }
        g.wq.add_assign(&c.x.matmul_tn(&dq));
        g.wk.add_assign(&c.x.matmul_tn(&dk));
        g.wv.add_assign(&c.x.matmul_tn(&dv));
        let mut dx = dx1;
        dx.add_assign(&dq.matmul_nt(&p.wq));
        dx.add_assign(&dk.matmul_nt(&p.wk));
        dx.add_assign(&dv.matmul_nt(&p.wv));
        dx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    /// One prediction per token.
    TokenClassification,
    /// One prediction per sequence, read from the first (`[CLS]`) position.
    SequenceClassification,
}

/// Linear classifier on top of the encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ClassifierHead<F> {
    pub kind: HeadKind,
    pub w: Matrix<F>,
    pub b: Vec<F>,
}

impl<F: Scalar> ClassifierHead<F> {
    pub fn init(kind: HeadKind, d_model: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ClassifierHead {
            kind,
            w: Matrix::random(d_model, classes, 1.0 / (d_model as f64).sqrt(), &mut rng),
            b: vec![F::zero(); classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.b.len()
    }

    fn inputs(&self, hidden: &Matrix<F>) -> Matrix<F> {
        match self.kind {
            HeadKind::TokenClassification => hidden.clone(),
            HeadKind::SequenceClassification => Matrix {
                rows: 1,
                cols: hidden.cols,
                data: hidden.row(0).to_vec(),
            },
        }
    }

    /// Logits: `T × C` for token heads, `1 × C` for sequence heads.
    pub fn logits(&self, hidden: &Matrix<F>) -> Matrix<F> {
        let mut l = self.inputs(hidden).matmul(&self.w);
        add_bias(&mut l, &self.b);
        l
    }

    /// Arg-max class per logit row.
    pub fn predict(&self, hidden: &Matrix<F>) -> Vec<usize> {
        let l = self.logits(hidden);
        (0..l.rows)
            .map(|r| {
                l.row(r)
                    .iter()
                    .enumerate()
                    .fold((0, F::neg_infinity()), |best, (i, v)| {
                        if *v > best.1 {
                            (i, *v)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect()
    }

    /// Summed cross-entropy over labeled rows (`None` rows are ignored).
    /// Returns `(loss_sum, n_labeled, d_hidden)` and accumulates head
    /// gradients into `grads`.
    pub fn loss_backward(
        &self,
        hidden: &Matrix<F>,
        labels: &[Option<usize>],
        grads: &mut ClassifierHead<F>,
    ) -> (F, usize, Matrix<F>) {
        let inputs = self.inputs(hidden);
        let mut probs = self.logits(hidden);
        softmax_rows(&mut probs);
        assert_eq!(labels.len(), probs.rows, "one label slot per logit row");
        let mut loss = F::zero();
        let mut n = 0;
        let mut dlogits = Matrix::zeros(probs.rows, probs.cols);
        for (r, label) in labels.iter().enumerate() {
            let Some(y) = *label else { continue };
            n += 1;
            loss = loss - probs.at(r, y).max(F::min_positive_value()).ln();
            let row = dlogits.row_mut(r);
            row.copy_from_slice(probs.row(r));
            row[y] = row[y] - F::one();
        }
        grads.w.add_assign(&inputs.matmul_tn(&dlogits));
        col_sum_into(&dlogits, &mut grads.b);
        let d_in = dlogits.matmul_nt(&self.w);
        let d_hidden = match self.kind {
            HeadKind::TokenClassification => d_in,
            HeadKind::SequenceClassification => {
                let mut d = Matrix::zeros(hidden.rows, hidden.cols);
                d.row_mut(0).copy_from_slice(d_in.row(0));
                d
            }
        };
        (loss, n, d_hidden)
    }

    pub fn zeros_like(&self) -> Self {
        ClassifierHead {
            kind: self.kind,
            w: Matrix::zeros(self.w.rows, self.w.cols),
            b: vec![F::zero(); self.b.len()],
        }
    }
}

/// Adam over a list of flat tensors.
#[derive(Debug, Clone)]
pub struct Adam<F> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Scalar> Adam<F> {
    pub fn new(lr: f64, shapes: &[usize]) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: shapes.iter().map(|&n| vec![F::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![F::zero(); n]).collect(),
        }
    }

    /// One update; tensors with `frozen[i]` set are left untouched.
    pub fn step(&mut self, params: Vec<&mut [F]>, grads: Vec<&[F]>, frozen: &[bool], grad_scale: F) {
        self.step += 1;
        let b1 = F::lit(self.beta1);
        let b2 = F::lit(self.beta2);
        let c1 = F::one() - b1.powi(self.step);
        let c2 = F::one() - b2.powi(self.step);
        let lr = F::lit(self.lr);
        let eps = F::lit(self.eps);
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            if frozen.get(i).copied().unwrap_or(false) {
                continue;
            }
            for (j, (w, gr)) in p.iter_mut().zip(g).enumerate() {
                let gr = *gr * grad_scale;
                let m = b1 * self.m[i][j] + (F::one() - b1) * gr;
                let v = b2 * self.v[i][j] + (F::one() - b2) * gr * gr;
                self.m[i][j] = m;
                self.v[i][j] = v;
                *w = *w - lr * (m / c1) / ((v / c2).sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EncoderConfig {
        EncoderConfig {
            vocab_size: 40,
            d_model: 8,
            heads: 2,
            layers: 2,
            ffn_dim: 12,
            max_len: 10,
            embed_std: 1.0,
        }
    }

    fn loss(enc: &ToyEncoder<f64>, head: &ClassifierHead<f64>, ids: &[usize], labels: &[Option<usize>]) -> f64 {
        let (h, _) = enc.forward(ids);
        let mut g = head.zeros_like();
        head.loss_backward(&h, labels, &mut g).0
    }

    /// Central finite differences against the hand-written backward pass.
    #[test]
    fn gradients_match_finite_differences() {
        let enc = ToyEncoder::<f64>::init(small(), 11);
        let head = ClassifierHead::init(HeadKind::TokenClassification, 8, 3, 5);
        let ids = [1, 7, 19, 3, 33, 2];
        let labels = [None, Some(0), Some(2), Some(1), Some(2), None];

        let (h, cache) = enc.forward(&ids);
        let mut hg = head.zeros_like();
        let (_, _, dh) = head.loss_backward(&h, &labels, &mut hg);
        let mut grads = enc.zeros_like();
        enc.backward(&cache, dh, &mut grads);

        let eps = 1e-6;
        let analytic = grads.tensors().iter().map(|t| t.to_vec()).collect::<Vec<_>>();
        for (ti, grad) in analytic.iter().enumerate() {
            let len = grad.len();
            for j in (0..len).step_by((len / 7).max(1)) {
                let mut plus = enc.clone();
                plus.tensors_mut()[ti][j] += eps;
                let mut minus = enc.clone();
                minus.tensors_mut()[ti][j] -= eps;
                let numeric = (loss(&plus, &head, &ids, &labels) - loss(&minus, &head, &ids, &labels)) / (2.0 * eps);
                let a = grad[j];
                assert!(
                    (a - numeric).abs() <= 1e-6 + 1e-4 * numeric.abs(),
                    "tensor {ti} index {j}: analytic {a} numeric {numeric}"
                );
            }
        }
        // head weights
        for j in 0..hg.w.data.len() {
            let mut plus = head.clone();
            plus.w.data[j] += eps;
            let mut minus = head.clone();
            minus.w.data[j] -= eps;
            let numeric = (loss(&enc, &plus, &ids, &labels) - loss(&enc, &minus, &ids, &labels)) / (2.0 * eps);
            assert!((hg.w.data[j] - numeric).abs() < 1e-6 + 1e-4 * numeric.abs());
        }
    }

    #[test]
    fn sequence_head_gradients() {
        let enc = ToyEncoder::<f64>::init(small(), 2);
        let head = ClassifierHead::init(HeadKind::SequenceClassification, 8, 4, 9);
        let ids = [1, 5, 6, 2];
        let labels = [Some(3)];
        let (h, cache) = enc.forward(&ids);
        let mut hg = head.zeros_like();
        let (_, n, dh) = head.loss_backward(&h, &labels, &mut hg);
        assert_eq!(n, 1);
        let mut grads = enc.zeros_like();
        enc.backward(&cache, dh, &mut grads);
        let eps = 1e-6;
        for j in (0..grads.layers[1].wq.data.len()).step_by(5) {
            let mut plus = enc.clone();
            plus.layers[1].wq.data[j] += eps;
            let mut minus = enc.clone();
            minus.layers[1].wq.data[j] -= eps;
            let numeric = (loss(&plus, &head, &ids, &labels) - loss(&minus, &head, &ids, &labels)) / (2.0 * eps);
            let a = grads.layers[1].wq.data[j];
            assert!((a - numeric).abs() <= 1e-6 + 1e-4 * numeric.abs());
        }
    }

    #[test]
    fn attention_is_row_stochastic() {
        let enc = ToyEncoder::<f32>::init(EncoderConfig::default(), 1);
        let raw = enc.attention(&[1, 40, 41, 42, 2]);
        assert_eq!(raw.shape(), [2, 2, 5, 5]);
        raw.validate(1e-4).unwrap();
    }

    #[test]
    fn uniform_attention_variant() {
        let enc = ToyEncoder::<f64>::init(EncoderConfig::default(), 1).with_uniform_attention();
        let raw = enc.attention(&[1, 40, 41, 2]);
        assert!(raw.values.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn init_is_seeded() {
        let a = ToyEncoder::<f32>::init(EncoderConfig::default(), 7);
        let b = ToyEncoder::<f32>::init(EncoderConfig::default(), 7);
        let c = ToyEncoder::<f32>::init(EncoderConfig::default(), 8);
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
    }
}
