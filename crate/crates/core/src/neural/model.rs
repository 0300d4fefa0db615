use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::Label;
use crate::error::{Error, Result};
use crate::eval::JokeDetector;
use crate::scalar::{sigmoid, Scalar};
use crate::text::tokenize;

use super::embeddings::{EmbeddingMatrix, OovPolicy};

/// Embedding row of the padding token. Always the zero vector, never updated.
pub const PAD: usize = 0;
/// Embedding row shared by all out-of-vocabulary words.
pub const OOV: usize = 1;

pub const LSTM_HIDDEN_DIMS: [usize; 5] = [8, 16, 32, 64, 128];
pub const DEFAULT_CNN_CHANNELS: usize = 64;
pub const DEFAULT_MAX_SEQUENCE_LENGTH: usize = 64;

const HEADER: &str = "MIRTH-NN v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Cnn,
    Lstm,
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncoderKind::Cnn => "cnn",
            EncoderKind::Lstm => "lstm",
        })
    }
}

impl FromStr for EncoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnn" => Ok(EncoderKind::Cnn),
            "lstm" => Ok(EncoderKind::Lstm),
            _ => Err(Error::invalid(format!(
                "unknown model kind {s:?} (expected cnn or lstm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    /// LSTM state size.
    pub hidden_dim: usize,
    /// CNN filters per convolutional layer.
    pub channels: usize,
    pub conv_layers: usize,
    pub kernel_size: usize,
    pub pooling: String,
    pub activation: String,
    pub embeddings_trainable: bool,
}

impl EncoderConfig {
    pub fn cnn() -> Self {
        EncoderConfig {
            kind: EncoderKind::Cnn,
            hidden_dim: 0,
            channels: DEFAULT_CNN_CHANNELS,
            conv_layers: 2,
            kernel_size: 3,
            pooling: "max".into(),
            activation: "tanh".into(),
            embeddings_trainable: false,
        }
    }

    pub fn lstm(hidden_dim: usize) -> Self {
        EncoderConfig {
            kind: EncoderKind::Lstm,
            hidden_dim,
            channels: 0,
            conv_layers: 0,
            kernel_size: 0,
            pooling: "last".into(),
            activation: "tanh".into(),
            embeddings_trainable: false,
        }
    }

    pub fn for_kind(kind: EncoderKind) -> Self {
        match kind {
            EncoderKind::Cnn => Self::cnn(),
            EncoderKind::Lstm => Self::lstm(32),
        }
    }

    pub fn with_trainable_embeddings(mut self, trainable: bool) -> Self {
        self.embeddings_trainable = trainable;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            EncoderKind::Cnn => {
                if self.conv_layers != 2 || self.kernel_size != 3 || self.pooling != "max" {
                    return Err(Error::invalid(
                        "CNN encoder requires 2 conv layers, kernel size 3 and max pooling",
                    ));
                }
                if self.channels == 0 {
                    return Err(Error::invalid("CNN encoder needs at least one channel"));
                }
            }
            EncoderKind::Lstm => {
                if !LSTM_HIDDEN_DIMS.contains(&self.hidden_dim) {
                    return Err(Error::invalid(format!(
                        "LSTM hidden_dim {} not in {LSTM_HIDDEN_DIMS:?}",
                        self.hidden_dim
                    )));
                }
            }
        }
        if self.activation != "tanh" {
            return Err(Error::invalid(format!(
                "unsupported activation {:?}",
                self.activation
            )));
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        match self.kind {
            EncoderKind::Cnn => self.channels,
            EncoderKind::Lstm => self.hidden_dim,
        }
    }

    fn tensors_per_encoder(&self) -> usize {
        match self.kind {
            EncoderKind::Cnn => 2 * self.conv_layers,
            EncoderKind::Lstm => 3,
        }
    }
}

/// Everything needed to rebuild a classifier's parameter layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub encoder: EncoderConfig,
    /// 1 for single-text classification, 2 for pairwise.
    pub inputs: usize,
    pub embedding_dim: usize,
    pub max_sequence_length: usize,
    pub oov_policy: OovPolicy,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        if !(1..=2).contains(&self.inputs) {
            return Err(Error::invalid(format!(
                "inputs must be 1 or 2, got {}",
                self.inputs
            )));
        }
        if self.embedding_dim == 0 || self.max_sequence_length == 0 {
            return Err(Error::invalid(
                "embedding_dim and max_sequence_length must be positive",
            ));
        }
        Ok(())
    }

    fn layout(&self, rows: usize) -> Vec<(String, Vec<usize>, bool)> {
        let e = &self.encoder;
        let d = self.embedding_dim;
        let mut out = vec![(
            "embedding".to_string(),
            vec![rows, d],
            e.embeddings_trainable,
        )];
        for i in 0..self.inputs {
            match e.kind {
                EncoderKind::Cnn => {
                    for l in 0..e.conv_layers {
                        let in_dim = if l == 0 { d } else { e.channels };
                        out.push((
                            format!("encoder{i}.conv{l}.weight"),
                            vec![e.channels, e.kernel_size, in_dim],
                            true,
                        ));
                        out.push((format!("encoder{i}.conv{l}.bias"), vec![e.channels], true));
                    }
                }
                EncoderKind::Lstm => {
                    let h = e.hidden_dim;
                    out.push((format!("encoder{i}.lstm.w_input"), vec![4 * h, d], true));
                    out.push((format!("encoder{i}.lstm.w_hidden"), vec![4 * h, h], true));
                    out.push((format!("encoder{i}.lstm.bias"), vec![4 * h], true));
                }
            }
        }
        out.push((
            "head.weight".into(),
            vec![2, self.inputs * e.output_dim()],
            true,
        ));
        out.push(("head.bias".into(), vec![2], true));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
    pub trainable: bool,
}

/// Per-tensor gradient buffers; frozen tensors get an empty buffer.
pub type Grads<T> = Vec<Vec<T>>;

/// A tokenized, vocabulary-indexed training example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prepared {
    pub sequences: Vec<Vec<usize>>,
    pub target: usize,
}

enum EncCache<T> {
    Cnn {
        x: Vec<T>,
        outs: Vec<Vec<T>>,
        argmax: Vec<usize>,
    },
    Lstm {
        x: Vec<T>,
        gates: Vec<T>,
        c: Vec<T>,
        h: Vec<T>,
    },
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a4, ar) = a[..n].split_at(n - n % 4);
    let (b4, br) = b[..n].split_at(n - n % 4);
    let mut acc = [T::zero(); 4];
    for (x, y) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (&x, &y) in ar.iter().zip(br) {
        s += x * y;
    }
    s
}

#[inline]
fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn uniform_init<T: Scalar>(rng: &mut ChaCha8Rng, n: usize, bound: f64) -> Vec<T> {
    (0..n)
        .map(|_| T::lit(rng.gen_range(-bound..bound)))
        .collect()
}

/// Embedding lookup, encoder(s), dropout, affine head, 2-way softmax.
///
/// Class 1 is JOKE for single-text models and side A for pairwise ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier<T> {
    arch: Architecture,
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Classifier<T> {
    /// Builds a freshly initialized model whose vocabulary is every token of
    /// `texts` that has a pretrained vector.
    pub fn new<'a>(
        arch: Architecture,
        embeddings: &EmbeddingMatrix<T>,
        texts: impl IntoIterator<Item = &'a str>,
        seed: u64,
    ) -> Result<Self> {
        if embeddings.dim() != arch.embedding_dim {
            return Err(Error::invalid(format!(
                "embedding dimension {} does not match architecture {}",
                embeddings.dim(),
                arch.embedding_dim
            )));
        }
        let mut words = BTreeSet::new();
        for text in texts {
            for tok in tokenize(text) {
                if embeddings.get(&tok.normalized).is_some() {
                    words.insert(tok.normalized);
                }
            }
        }
        let d = arch.embedding_dim;
        let mut table = vec![T::zero(); d];
        let mut oov = embeddings.oov_vector();
        if arch.oov_policy != embeddings.oov_policy {
            let mut e = embeddings.clone();
            e.oov_policy = arch.oov_policy;
            oov = e.oov_vector();
        }
        table.extend(oov);
        for w in &words {
            table.extend_from_slice(embeddings.get(w).expect("filtered above"));
        }
        Self::from_table(arch, words.into_iter().collect(), table, seed)
    }

    /// `table` holds the PAD, OOV and vocabulary rows in order.
    pub fn from_table(
        arch: Architecture,
        vocab: Vec<String>,
        table: Vec<T>,
        seed: u64,
    ) -> Result<Self> {
        arch.validate()?;
        let rows = vocab.len() + 2;
        if table.len() != rows * arch.embedding_dim {
            return Err(Error::invalid(
                "embedding table size does not match vocabulary",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = arch.encoder.clone();
        let mut tensors = Vec::new();
        for (name, shape, trainable) in arch.layout(rows) {
            let n: usize = shape.iter().product();
            let data = if name == "embedding" {
                table.clone()
            } else if name.ends_with("bias") {
                let mut b = vec![T::zero(); n];
                if name.ends_with("lstm.bias") {
                    // forget gate
                    b[e.hidden_dim..2 * e.hidden_dim]
                        .iter_mut()
                        .for_each(|x| *x = T::one());
                }
                b
            } else if name.contains("lstm") {
                uniform_init(&mut rng, n, 1.0 / (e.hidden_dim as f64).sqrt())
            } else {
                let (fan_in, fan_out) = match shape.as_slice() {
                    [c, k, i] => (k * i, k * c),
                    [o, i] => (*i, *o),
                    _ => unreachable!(),
                };
                uniform_init(&mut rng, n, (6.0 / (fan_in + fan_out) as f64).sqrt())
            };
            tensors.push(Tensor {
                name,
                shape,
                data,
                trainable,
            });
        }
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i + 2))
            .collect();
        Ok(Classifier {
            arch,
            vocab,
            index,
            tensors,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocab
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn num_trainable(&self) -> usize {
        self.tensors
            .iter()
            .filter(|t| t.trainable)
            .map(|t| t.data.len())
            .sum()
    }

    pub fn zero_grads(&self) -> Grads<T> {
        self.tensors
            .iter()
            .map(|t| {
                if t.trainable {
                    vec![T::zero(); t.data.len()]
                } else {
                    Vec::new()
                }
            })
            .collect()
    }

    fn head_index(&self) -> usize {
        1 + self.arch.inputs * self.arch.encoder.tensors_per_encoder()
    }

    fn encoder_base(&self, input: usize) -> usize {
        1 + input * self.arch.encoder.tensors_per_encoder()
    }

    /// Row indices for `text`, truncated to the maximum sequence length.
    /// The flag reports whether truncation happened.
    pub fn sequence(&self, text: &str) -> (Vec<usize>, bool) {
        let mut ids: Vec<usize> = tokenize(text)
            .into_iter()
            .map(|t| self.index.get(&t.normalized).copied().unwrap_or(OOV))
            .collect();
        let truncated = ids.len() > self.arch.max_sequence_length;
        ids.truncate(self.arch.max_sequence_length);
        (ids, truncated)
    }

    pub fn prepare(&self, texts: &[&str], target: usize) -> (Prepared, usize) {
        let mut truncated = 0;
        let sequences = texts
            .iter()
            .map(|t| {
                let (ids, cut) = self.sequence(t);
                truncated += usize::from(cut);
                ids
            })
            .collect();
        (Prepared { sequences, target }, truncated)
    }

    fn embed(&self, ids: &[usize]) -> Vec<T> {
        let d = self.arch.embedding_dim;
        let table = &self.tensors[0].data;
        let mut x = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            x.extend_from_slice(&table[id * d..(id + 1) * d]);
        }
        x
    }

    fn encode_cached(&self, input: usize, ids: &[usize]) -> (Vec<T>, EncCache<T>) {
        let ids = effective(ids);
        let x = self.embed(ids);
        let len = ids.len();
        let cfg = &self.arch.encoder;
        let base = self.encoder_base(input);
        match cfg.kind {
            EncoderKind::Cnn => {
                let c_out = cfg.channels;
                let mut outs: Vec<Vec<T>> = Vec::with_capacity(cfg.conv_layers);
                for l in 0..cfg.conv_layers {
                    let (inp, in_dim) = if l == 0 {
                        (&x, self.arch.embedding_dim)
                    } else {
                        (&outs[l - 1], c_out)
                    };
                    let w = &self.tensors[base + 2 * l].data;
                    let b = &self.tensors[base + 2 * l + 1].data;
                    let out = conv_forward(inp, len, in_dim, w, b, c_out, cfg.kernel_size);
                    outs.push(out);
                }
                let last = outs.last().expect("at least one layer");
                let mut enc = vec![T::neg_infinity(); c_out];
                let mut argmax = vec![0; c_out];
                for t in 0..len {
                    for c in 0..c_out {
                        let v = last[t * c_out + c];
                        if v > enc[c] {
                            enc[c] = v;
                            argmax[c] = t;
                        }
                    }
                }
                (enc, EncCache::Cnn { x, outs, argmax })
            }
            EncoderKind::Lstm => {
                let h_dim = cfg.hidden_dim;
                let d = self.arch.embedding_dim;
                let w = &self.tensors[base].data;
                let u = &self.tensors[base + 1].data;
                let b = &self.tensors[base + 2].data;
                let mut gates = vec![T::zero(); len * 4 * h_dim];
                let mut c = vec![T::zero(); len * h_dim];
                let mut h = vec![T::zero(); len * h_dim];
                let zeros = vec![T::zero(); h_dim];
                for t in 0..len {
                    let xt = &x[t * d..(t + 1) * d];
                    let (h_prev, c_prev) = if t == 0 {
                        (&zeros[..], &zeros[..])
                    } else {
                        (
                            &h[(t - 1) * h_dim..t * h_dim],
                            &c[(t - 1) * h_dim..t * h_dim],
                        )
                    };
                    let g = &mut gates[t * 4 * h_dim..(t + 1) * 4 * h_dim];
                    for r in 0..4 * h_dim {
                        let z = b[r]
                            + dot(&w[r * d..(r + 1) * d], xt)
                            + dot(&u[r * h_dim..(r + 1) * h_dim], h_prev);
                        g[r] = if (2 * h_dim..3 * h_dim).contains(&r) {
                            z.tanh()
                        } else {
                            sigmoid(z)
                        };
                    }
                    let mut ct = vec![T::zero(); h_dim];
                    let mut ht = vec![T::zero(); h_dim];
                    for k in 0..h_dim {
                        let (i, f, gg, o) =
                            (g[k], g[h_dim + k], g[2 * h_dim + k], g[3 * h_dim + k]);
                        ct[k] = f * c_prev[k] + i * gg;
                        ht[k] = o * ct[k].tanh();
                    }
                    c[t * h_dim..(t + 1) * h_dim].copy_from_slice(&ct);
                    h[t * h_dim..(t + 1) * h_dim].copy_from_slice(&ht);
                }
                let enc = h[(len - 1) * h_dim..].to_vec();
                (enc, EncCache::Lstm { x, gates, c, h })
            }
        }
    }

    /// Fixed-length encoding of one token sequence by encoder `input`.
    pub fn encode(&self, input: usize, ids: &[usize]) -> Vec<T> {
        self.encode_cached(input, ids).0
    }

    fn logits(&self, features: &[T]) -> [T; 2] {
        let hw = &self.tensors[self.head_index()].data;
        let hb = &self.tensors[self.head_index() + 1].data;
        let n = features.len();
        [
            hb[0] + dot(&hw[..n], features),
            hb[1] + dot(&hw[n..], features),
        ]
    }

    /// Class probabilities with dropout disabled.
    pub fn probabilities(&self, sequences: &[Vec<usize>]) -> [T; 2] {
        let features: Vec<T> = (0..self.arch.inputs)
            .flat_map(|i| self.encode(i, &sequences[i]))
            .collect();
        softmax(self.logits(&features))
    }

    pub fn predict_sequences(&self, sequences: &[Vec<usize>]) -> usize {
        let p = self.probabilities(sequences);
        usize::from(p[1] > p[0])
    }

    pub fn predict_texts(&self, texts: &[&str]) -> usize {
        let seqs: Vec<Vec<usize>> = texts.iter().map(|t| self.sequence(t).0).collect();
        self.predict_sequences(&seqs)
    }

    /// Cross-entropy loss without dropout.
    pub fn loss(&self, example: &Prepared) -> T {
        let p = self.probabilities(&example.sequences);
        -p[example.target].ln()
    }

    /// Loss of one example; adds its gradient into `grads`. `dropout_mask`
    /// multiplies the concatenated encoding (already scaled for inverted dropout).
    pub fn loss_and_grad(
        &self,
        example: &Prepared,
        dropout_mask: Option<&[T]>,
        grads: &mut Grads<T>,
    ) -> T {
        let inputs = self.arch.inputs;
        let enc_dim = self.arch.encoder.output_dim();
        let mut caches = Vec::with_capacity(inputs);
        let mut features = Vec::with_capacity(inputs * enc_dim);
        for i in 0..inputs {
            let (enc, cache) = self.encode_cached(i, &example.sequences[i]);
            features.extend(enc);
            caches.push(cache);
        }
        if let Some(mask) = dropout_mask {
            features.iter_mut().zip(mask).for_each(|(f, &m)| *f *= m);
        }
        let p = softmax(self.logits(&features));
        let loss = -p[example.target].ln();

        let mut dlogits = p;
        dlogits[example.target] -= T::one();
        let hi = self.head_index();
        let hw = &self.tensors[hi].data;
        let n = features.len();
        let mut dfeat = vec![T::zero(); n];
        for k in 0..2 {
            axpy(dlogits[k], &features, &mut grads[hi][k * n..(k + 1) * n]);
            grads[hi + 1][k] += dlogits[k];
            axpy(dlogits[k], &hw[k * n..(k + 1) * n], &mut dfeat);
        }
        if let Some(mask) = dropout_mask {
            dfeat.iter_mut().zip(mask).for_each(|(g, &m)| *g *= m);
        }
        for (i, cache) in caches.into_iter().enumerate() {
            self.encoder_backward(
                i,
                effective(&example.sequences[i]),
                cache,
                &dfeat[i * enc_dim..(i + 1) * enc_dim],
                grads,
            );
        }
        loss
    }

    fn encoder_backward(
        &self,
        input: usize,
        ids: &[usize],
        cache: EncCache<T>,
        denc: &[T],
        grads: &mut Grads<T>,
    ) {
        let cfg = &self.arch.encoder;
        let base = self.encoder_base(input);
        let d = self.arch.embedding_dim;
        let len = ids.len();
        let need_dx = self.tensors[0].trainable;
        let dx = match cache {
            EncCache::Cnn { x, outs, argmax } => {
                let c_out = cfg.channels;
                let mut dout = vec![T::zero(); len * c_out];
                for c in 0..c_out {
                    dout[argmax[c] * c_out + c] = denc[c];
                }
                let mut dx = Vec::new();
                for l in (0..cfg.conv_layers).rev() {
                    let (inp, in_dim) = if l == 0 {
                        (&x, d)
                    } else {
                        (&outs[l - 1], c_out)
                    };
                    let want_din = l > 0 || need_dx;
                    let (gw, rest) = grads[base + 2 * l..].split_at_mut(1);
                    let din = conv_backward(
                        &ConvGeometry {
                            len,
                            in_dim,
                            c_out,
                            k: cfg.kernel_size,
                        },
                        inp,
                        &outs[l],
                        &self.tensors[base + 2 * l].data,
                        &dout,
                        &mut gw[0],
                        &mut rest[0],
                        want_din,
                    );
                    if l == 0 {
                        dx = din;
                    } else {
                        dout = din;
                    }
                }
                dx
            }
            EncCache::Lstm { x, gates, c, h } => {
                let h_dim = cfg.hidden_dim;
                let w = &self.tensors[base].data;
                let u = &self.tensors[base + 1].data;
                let mut dx = if need_dx {
                    vec![T::zero(); len * d]
                } else {
                    Vec::new()
                };
                let mut dh = denc.to_vec();
                let mut dc = vec![T::zero(); h_dim];
                let mut dz = vec![T::zero(); 4 * h_dim];
                let zeros = vec![T::zero(); h_dim];
                for t in (0..len).rev() {
                    let g = &gates[t * 4 * h_dim..(t + 1) * 4 * h_dim];
                    let ct = &c[t * h_dim..(t + 1) * h_dim];
                    let (h_prev, c_prev) = if t == 0 {
                        (&zeros[..], &zeros[..])
                    } else {
                        (
                            &h[(t - 1) * h_dim..t * h_dim],
                            &c[(t - 1) * h_dim..t * h_dim],
                        )
                    };
                    for k in 0..h_dim {
                        let (i, f, gg, o) =
                            (g[k], g[h_dim + k], g[2 * h_dim + k], g[3 * h_dim + k]);
                        let tc = ct[k].tanh();
                        let d_o = dh[k] * tc;
                        let dck = dc[k] + dh[k] * o * (T::one() - tc * tc);
                        dz[k] = dck * gg * i * (T::one() - i);
                        dz[h_dim + k] = dck * c_prev[k] * f * (T::one() - f);
                        dz[2 * h_dim + k] = dck * i * (T::one() - gg * gg);
                        dz[3 * h_dim + k] = d_o * o * (T::one() - o);
                        dc[k] = dck * f;
                    }
                    let xt = &x[t * d..(t + 1) * d];
                    let mut dh_prev = vec![T::zero(); h_dim];
                    for r in 0..4 * h_dim {
                        let z = dz[r];
                        if z == T::zero() {
                            continue;
                        }
                        grads[base + 2][r] += z;
                        axpy(z, xt, &mut grads[base][r * d..(r + 1) * d]);
                        if t > 0 {
                            axpy(z, h_prev, &mut grads[base + 1][r * h_dim..(r + 1) * h_dim]);
                        }
                        axpy(z, &u[r * h_dim..(r + 1) * h_dim], &mut dh_prev);
                        if need_dx {
                            axpy(z, &w[r * d..(r + 1) * d], &mut dx[t * d..(t + 1) * d]);
                        }
                    }
                    dh = dh_prev;
                }
                dx
            }
        };
        if need_dx {
            for (t, &id) in ids.iter().enumerate() {
                if id != PAD {
                    axpy(
                        T::one(),
                        &dx[t * d..(t + 1) * d],
                        &mut grads[0][id * d..(id + 1) * d],
                    );
                }
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        out.push_str(&format!(
            "architecture\t{}\n",
            serde_json::to_string(&self.arch).expect("architecture serializes")
        ));
        out.push_str(&format!("vocab\t{}\n", self.vocab.len()));
        for w in &self.vocab {
            out.push_str(w);
            out.push('\n');
        }
        for t in &self.tensors {
            let shape: Vec<String> = t.shape.iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "tensor\t{}\t{}\t{}\n",
                t.name,
                u8::from(t.trainable),
                shape.join(",")
            ));
            let vals: Vec<String> = t
                .data
                .iter()
                .map(|x| format!("{:?}", x.to_f64_lossy()))
                .collect();
            out.push_str(&vals.join(" "));
            out.push('\n');
        }
        out.push_str(&format!("end\t{}\n", self.tensors.len()));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::data(format!("truncated model file: expected {what}")))
        };
        let (_, header) = next("header")?;
        if header != HEADER {
            return Err(Error::data(format!("not a model file (header {header:?})")));
        }
        let (n, line) = next("architecture")?;
        let arch: Architecture = line
            .strip_prefix("architecture\t")
            .ok_or_else(|| Error::data(format!("line {n}: expected architecture")))
            .and_then(|j| {
                serde_json::from_str(j).map_err(|e| Error::data(format!("line {n}: {e}")))
            })?;
        arch.validate()
            .map_err(|e| Error::data(format!("line {n}: {e}")))?;
        let (n, line) = next("vocab")?;
        let n_vocab: usize = line
            .strip_prefix("vocab\t")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::data(format!("line {n}: expected vocab count")))?;
        let mut vocab = Vec::with_capacity(n_vocab);
        for _ in 0..n_vocab {
            vocab.push(next("vocabulary word")?.1.to_string());
        }
        let layout = arch.layout(n_vocab + 2);
        let mut tensors = Vec::with_capacity(layout.len());
        for (name, shape, _) in &layout {
            let (n, line) = next("tensor")?;
            let parts: Vec<&str> = line.split('\t').collect();
            let expected_shape: Vec<String> = shape.iter().map(usize::to_string).collect();
            if parts.len() != 4
                || parts[0] != "tensor"
                || parts[1] != name
                || parts[3] != expected_shape.join(",")
            {
                return Err(Error::data(format!(
                    "line {n}: expected tensor {name} with shape {}",
                    expected_shape.join(",")
                )));
            }
            let trainable = match parts[2] {
                "0" => false,
                "1" => true,
                _ => return Err(Error::data(format!("line {n}: bad trainable flag"))),
            };
            let (n, line) = next("tensor values")?;
            let data: Vec<T> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>().map(T::lit))
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::data(format!("line {n}: unparsable value")))?;
            if data.len() != shape.iter().product::<usize>() || data.iter().any(|x| !x.is_finite())
            {
                return Err(Error::data(format!(
                    "line {n}: wrong number of values or non-finite value"
                )));
            }
            tensors.push(Tensor {
                name: name.clone(),
                shape: shape.clone(),
                data,
                trainable,
            });
        }
        let (n, line) = next("end")?;
        if line != format!("end\t{}", layout.len()) {
            return Err(Error::data(format!("line {n}: expected end marker")));
        }
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i + 2))
            .collect();
        Ok(Classifier {
            arch,
            vocab,
            index,
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
    }
}

/// Single-text models only; panics when called on a pairwise model.
impl<T: Scalar> JokeDetector for Classifier<T> {
    fn detect(&self, text: &str) -> Label {
        assert_eq!(
            self.arch.inputs, 1,
            "pairwise model used as a single-text detector"
        );
        if self.predict_texts(&[text]) == 1 {
            Label::Joke
        } else {
            Label::Nonjoke
        }
    }
}

/// Drops trailing padding; an all-padding or empty sequence becomes one PAD step.
fn effective(ids: &[usize]) -> &[usize] {
    let end = ids.iter().rposition(|&i| i != PAD).map_or(0, |p| p + 1);
    if end == 0 {
        &[PAD]
    } else {
        &ids[..end]
    }
}

fn softmax<T: Scalar>(z: [T; 2]) -> [T; 2] {
    let m = z[0].max(z[1]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

struct ConvGeometry {
    len: usize,
    in_dim: usize,
    c_out: usize,
    k: usize,
}

/// Same-padded 1-d convolution followed by tanh. Positions outside
/// `[0, len)` contribute zero.
fn conv_forward<T: Scalar>(
    inp: &[T],
    len: usize,
    in_dim: usize,
    w: &[T],
    b: &[T],
    c_out: usize,
    k: usize,
) -> Vec<T> {
    let half = k / 2;
    let mut out = vec![T::zero(); len * c_out];
    for t in 0..len {
        for c in 0..c_out {
            let mut z = b[c];
            for j in 0..k {
                let Some(s) = (t + j).checked_sub(half).filter(|&s| s < len) else {
                    continue;
                };
                z += dot(
                    &w[(c * k + j) * in_dim..(c * k + j + 1) * in_dim],
                    &inp[s * in_dim..(s + 1) * in_dim],
                );
            }
            out[t * c_out + c] = z.tanh();
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv_backward<T: Scalar>(
    g: &ConvGeometry,
    inp: &[T],
    out: &[T],
    w: &[T],
    dout: &[T],
    dw: &mut [T],
    db: &mut [T],
    want_din: bool,
) -> Vec<T> {
    let ConvGeometry {
        len,
        in_dim,
        c_out,
        k,
    } = *g;
    let half = k / 2;
    let mut din = if want_din {
        vec![T::zero(); len * in_dim]
    } else {
        Vec::new()
    };
    for t in 0..len {
        for c in 0..c_out {
            let o = out[t * c_out + c];
            let dz = dout[t * c_out + c] * (T::one() - o * o);
            if dz == T::zero() {
                continue;
            }
            db[c] += dz;
            for j in 0..k {
                let Some(s) = (t + j).checked_sub(half).filter(|&s| s < len) else {
                    continue;
                };
                let wi = (c * k + j) * in_dim;
                axpy(
                    dz,
                    &inp[s * in_dim..(s + 1) * in_dim],
                    &mut dw[wi..wi + in_dim],
                );
                if want_din {
                    axpy(
                        dz,
                        &w[wi..wi + in_dim],
                        &mut din[s * in_dim..(s + 1) * in_dim],
                    );
                }
            }
        }
    }
    din
}
