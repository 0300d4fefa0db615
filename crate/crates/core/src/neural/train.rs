use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{Example, Label, LabeledExample, PairExample, Side};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::derive_seed;

use super::embeddings::EmbeddingMatrix;
use super::model::{
    Architecture, Classifier, EncoderConfig, Prepared, DEFAULT_MAX_SEQUENCE_LENGTH,
};
use super::optim::{clip_global_norm, Adam};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub grad_clip_norm: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub max_sequence_length: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            epochs: 15,
            batch_size: 64,
            dropout: 0.1,
            grad_clip_norm: 1.0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 1,
            max_sequence_length: DEFAULT_MAX_SEQUENCE_LENGTH,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.epochs > 0
            && self.batch_size > 0
            && (0.0..1.0).contains(&self.dropout)
            && self.grad_clip_norm > 0.0
            && (0.0..1.0).contains(&self.adam_beta1)
            && (0.0..1.0).contains(&self.adam_beta2)
            && self.adam_epsilon > 0.0
            && self.max_sequence_length > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "invalid training configuration {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Mean training loss per epoch (dropout active).
    pub epoch_losses: Vec<f64>,
    /// Validation accuracy after each epoch.
    pub val_accuracies: Vec<f64>,
    pub steps: usize,
    /// Largest global gradient norm seen after clipping.
    pub max_clipped_grad_norm: f64,
    pub truncated_train: usize,
    pub truncated_valid: usize,
}

impl TrainingReport {
    pub fn final_val_accuracy(&self) -> Option<f64> {
        self.val_accuracies.last().copied()
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel<T> {
    pub model: Classifier<T>,
    pub report: TrainingReport,
}

/// A dataset row the neural models can learn from.
pub trait TrainingExample: Example + Sync {
    const INPUTS: usize;
    fn texts(&self) -> Vec<&str>;
    /// 1 for JOKE (single) or side A (pairwise).
    fn target(&self) -> usize;
}

impl TrainingExample for LabeledExample {
    const INPUTS: usize = 1;
    fn texts(&self) -> Vec<&str> {
        vec![&self.text]
    }
    fn target(&self) -> usize {
        usize::from(self.label == Label::Joke)
    }
}

impl TrainingExample for PairExample {
    const INPUTS: usize = 2;
    fn texts(&self) -> Vec<&str> {
        vec![&self.text_a, &self.text_b]
    }
    fn target(&self) -> usize {
        usize::from(self.target == Side::A)
    }
}

pub fn label_of(class: usize) -> Label {
    if class == 1 {
        Label::Joke
    } else {
        Label::Nonjoke
    }
}

pub fn side_of(class: usize) -> Side {
    if class == 1 {
        Side::A
    } else {
        Side::B
    }
}

pub fn prepare_all<T: Scalar, E: TrainingExample>(
    model: &Classifier<T>,
    examples: &[E],
) -> (Vec<Prepared>, usize) {
    let mut truncated = 0;
    let prepared = examples
        .iter()
        .map(|e| {
            let (p, cut) = model.prepare(&e.texts(), e.target());
            truncated += cut;
            p
        })
        .collect();
    (prepared, truncated)
}

pub fn accuracy<T: Scalar>(model: &Classifier<T>, examples: &[Prepared]) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let correct = examples
        .iter()
        .filter(|e| model.predict_sequences(&e.sequences) == e.target)
        .count();
    correct as f64 / examples.len() as f64
}

/// Fits `model` in place. Deterministic for a fixed configuration.
pub fn fit<T: Scalar>(
    model: &mut Classifier<T>,
    train: &[Prepared],
    valid: &[Prepared],
    tc: &TrainConfig,
) -> Result<TrainingReport> {
    tc.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(tc.seed, "shuffle"));
    let mut opt = Adam::new(
        model.tensors(),
        T::lit(tc.learning_rate),
        T::lit(tc.adam_beta1),
        T::lit(tc.adam_beta2),
        T::lit(tc.adam_epsilon),
    );
    let feat_dim = model.architecture().inputs * model.architecture().encoder.output_dim();
    let keep_scale = T::lit(1.0 / (1.0 - tc.dropout));
    let clip = T::lit(tc.grad_clip_norm);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut report = TrainingReport {
        epoch_losses: Vec::new(),
        val_accuracies: Vec::new(),
        steps: 0,
        max_clipped_grad_norm: 0.0,
        truncated_train: 0,
        truncated_valid: 0,
    };
    let mut mask = vec![T::one(); feat_dim];
    for epoch in 0..tc.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(tc.batch_size) {
            let mut grads = model.zero_grads();
            for &i in batch {
                let m = if tc.dropout > 0.0 {
                    for v in mask.iter_mut() {
                        *v = if rng.gen::<f64>() < tc.dropout {
                            T::zero()
                        } else {
                            keep_scale
                        };
                    }
                    Some(&mask[..])
                } else {
                    None
                };
                let loss = model.loss_and_grad(&train[i], m, &mut grads).to_f64_lossy();
                if !loss.is_finite() {
                    return Err(Error::Runtime(format!(
                        "training diverged: non-finite loss in epoch {} after {} steps",
                        epoch + 1,
                        report.steps
                    )));
                }
                total += loss;
            }
            let inv = T::one() / T::from_usize_lossy(batch.len());
            grads.iter_mut().flatten().for_each(|g| *g *= inv);
            let (_, after) = clip_global_norm(&mut grads, clip);
            report.max_clipped_grad_norm = report.max_clipped_grad_norm.max(after.to_f64_lossy());
            opt.step(model.tensors_mut(), &grads);
            report.steps += 1;
        }
        let mean_loss = total / train.len() as f64;
        let val = accuracy(model, valid);
        log::debug!("epoch {}: loss {mean_loss:.4}, val acc {val:.4}", epoch + 1);
        report.epoch_losses.push(mean_loss);
        report.val_accuracies.push(val);
    }
    Ok(report)
}

/// Builds a model over the words of `train`, `valid` and `extra_vocab` and trains it.
/// The model after the final epoch is returned.
pub fn train<T: Scalar, E: TrainingExample>(
    encoder: &EncoderConfig,
    embeddings: &EmbeddingMatrix<T>,
    train: &[E],
    valid: &[E],
    extra_vocab: &[&str],
    tc: &TrainConfig,
) -> Result<TrainedModel<T>> {
    if train.is_empty() || valid.is_empty() {
        return Err(Error::invalid(
            "training and validation sets must be non-empty",
        ));
    }
    tc.validate()?;
    let arch = Architecture {
        encoder: encoder.clone(),
        inputs: E::INPUTS,
        embedding_dim: embeddings.dim(),
        max_sequence_length: tc.max_sequence_length,
        oov_policy: embeddings.oov_policy,
    };
    let texts = train
        .iter()
        .chain(valid)
        .flat_map(|e| e.texts())
        .chain(extra_vocab.iter().copied());
    let mut model = Classifier::new(arch, embeddings, texts, derive_seed(tc.seed, "init"))?;
    let (train_p, cut_train) = prepare_all(&model, train);
    let (valid_p, cut_valid) = prepare_all(&model, valid);
    if cut_train + cut_valid > 0 {
        log::info!(
            "truncated to {} tokens: {cut_train} training and {cut_valid} validation examples",
            tc.max_sequence_length
        );
    }
    let mut report = fit(&mut model, &train_p, &valid_p, tc)?;
    report.truncated_train = cut_train;
    report.truncated_valid = cut_valid;
    Ok(TrainedModel { model, report })
}

/// Single-text joke classifier.
pub fn train_classifier<T: Scalar>(
    encoder: &EncoderConfig,
    embeddings: &EmbeddingMatrix<T>,
    train_set: &[LabeledExample],
    valid: &[LabeledExample],
    extra_vocab: &[&str],
    tc: &TrainConfig,
) -> Result<TrainedModel<T>> {
    train(encoder, embeddings, train_set, valid, extra_vocab, tc)
}

/// Pairwise model: one encoder per side over a shared embedding table, which
/// is always trainable here.
pub fn train_pairwise<T: Scalar>(
    encoder: &EncoderConfig,
    embeddings: &EmbeddingMatrix<T>,
    train_set: &[PairExample],
    valid: &[PairExample],
    extra_vocab: &[&str],
    tc: &TrainConfig,
) -> Result<TrainedModel<T>> {
    let encoder = encoder.clone().with_trainable_embeddings(true);
    train(&encoder, embeddings, train_set, valid, extra_vocab, tc)
}

/// Predicted class (1 = JOKE / side A) for each example.
pub fn predict_all<T: Scalar, E: TrainingExample>(
    model: &Classifier<T>,
    examples: &[E],
) -> Vec<usize> {
    examples
        .iter()
        .map(|e| model.predict_texts(&e.texts()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::embeddings::OovPolicy;

    fn embeddings() -> EmbeddingMatrix<f64> {
        let words = [
            "kat", "hond", "muur", "groen", "rood", "plakt", "loopt", "de", "een", "is", "wat",
            "?", "!", ".",
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut e = EmbeddingMatrix::from_rows(
            words
                .iter()
                .map(|w| {
                    (
                        w.to_string(),
                        (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    )
                })
                .collect(),
        )
        .unwrap();
        e.oov_policy = OovPolicy::ZeroVector;
        e
    }

    fn toy_set() -> Vec<LabeledExample> {
        let texts = [
            ("wat is groen en plakt?", Label::Joke),
            ("de kat loopt.", Label::Nonjoke),
            ("wat is rood en loopt?", Label::Joke),
            ("de hond plakt.", Label::Nonjoke),
            ("een muur is groen!", Label::Joke),
            ("een kat is rood.", Label::Nonjoke),
            ("wat plakt aan de muur?", Label::Joke),
            ("de muur is groen.", Label::Nonjoke),
        ];
        texts
            .iter()
            .enumerate()
            .map(|(i, (t, l))| LabeledExample {
                id: format!("t:{i}"),
                text: t.to_string(),
                label: *l,
                source: "toy".into(),
            })
            .collect()
    }

    fn overfit_config() -> TrainConfig {
        TrainConfig {
            epochs: 200,
            dropout: 0.0,
            batch_size: 4,
            learning_rate: 0.01,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn overfits_eight_examples() {
        let data = toy_set();
        for enc in [
            EncoderConfig {
                channels: 16,
                ..EncoderConfig::cnn()
            },
            EncoderConfig::lstm(16),
        ] {
            let trained =
                train_classifier(&enc, &embeddings(), &data, &data, &[], &overfit_config())
                    .unwrap();
            let (p, _) = prepare_all(&trained.model, &data);
            assert_eq!(accuracy(&trained.model, &p), 1.0, "{:?}", enc.kind);
            assert_eq!(trained.report.val_accuracies.len(), 200);
        }
    }

    #[test]
    fn clipped_norm_never_exceeds_limit() {
        let data = toy_set();
        let tc = TrainConfig {
            epochs: 20,
            learning_rate: 0.1,
            grad_clip_norm: 0.05,
            ..TrainConfig::default()
        };
        let t = train_classifier(
            &EncoderConfig::lstm(8),
            &embeddings(),
            &data,
            &data,
            &[],
            &tc,
        )
        .unwrap();
        assert!(t.report.max_clipped_grad_norm <= 0.05 + 1e-9);
        assert!(t.report.max_clipped_grad_norm > 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let data = toy_set();
        let tc = TrainConfig {
            epochs: 5,
            batch_size: 3,
            ..TrainConfig::default()
        };
        let enc = EncoderConfig {
            channels: 8,
            ..EncoderConfig::cnn()
        };
        let a = train_classifier(&enc, &embeddings(), &data, &data, &[], &tc).unwrap();
        let b = train_classifier(&enc, &embeddings(), &data, &data, &[], &tc).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn pairwise_trains_embeddings() {
        let singles = toy_set();
        let pairs: Vec<PairExample> = (0..4)
            .map(|i| PairExample {
                id: format!("p{i}"),
                text_a: singles[2 * i].text.clone(),
                text_b: singles[2 * i + 1].text.clone(),
                target: Side::A,
            })
            .flat_map(|p| {
                [
                    p.clone(),
                    PairExample {
                        id: format!("{}s", p.id),
                        ..p.swapped()
                    },
                ]
            })
            .collect();
        let tc = TrainConfig {
            epochs: 100,
            dropout: 0.0,
            batch_size: 4,
            ..TrainConfig::default()
        };
        let e = embeddings();
        let t = train_pairwise(&EncoderConfig::lstm(8), &e, &pairs, &pairs, &[], &tc).unwrap();
        assert!(t.model.tensors()[0].trainable);
        let row = t
            .model
            .vocabulary()
            .iter()
            .position(|w| w == "kat")
            .unwrap()
            + 2;
        assert_ne!(
            t.model.tensors()[0].data[row * 8..(row + 1) * 8],
            *e.get("kat").unwrap()
        );
        let preds = predict_all(&t.model, &pairs);
        let targets: Vec<usize> = pairs.iter().map(TrainingExample::target).collect();
        assert_eq!(preds, targets);
    }

    #[test]
    fn divergence_is_an_error() {
        let data = toy_set();
        let e = embeddings();
        let arch = Architecture {
            encoder: EncoderConfig::lstm(8),
            inputs: 1,
            embedding_dim: 8,
            max_sequence_length: 64,
            oov_policy: OovPolicy::ZeroVector,
        };
        let mut model = Classifier::new(arch, &e, data.iter().map(|d| d.text.as_str()), 1).unwrap();
        let n = model.tensors().len();
        model.tensors_mut()[n - 1].data[0] = f64::INFINITY;
        let (p, _) = prepare_all(&model, &data);
        let err = fit(&mut model, &p, &p, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Runtime(_)), "{err}");

        let tc = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        assert!(train_classifier(&EncoderConfig::lstm(8), &e, &[], &data, &[], &tc).is_err());
        let bad = TrainConfig {
            learning_rate: -1.0,
            ..TrainConfig::default()
        };
        assert!(train_classifier(&EncoderConfig::lstm(8), &e, &data, &data, &[], &bad).is_err());
    }
}
