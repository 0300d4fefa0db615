use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::scalar::Scalar;

use super::model::{Classifier, Prepared, PAD};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Worst error per tensor name.
    pub per_tensor: Vec<(String, f64)>,
}

pub fn relative_error<T: Scalar>(analytic: T, numeric: T) -> T {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(T::lit(1e-12))
}

/// `(f(+eps) - f(-eps)) / 2eps`, where `f(delta)` evaluates the objective
/// with one coordinate shifted by `delta`.
pub fn central_difference<T: Scalar>(eps: T, mut f: impl FnMut(T) -> T) -> T {
    (f(eps) - f(-eps)) / (eps + eps)
}

/// Compares backpropagated gradients with central differences on up to
/// `samples` coordinates, spread across all trainable tensors. Embedding
/// coordinates are only drawn from rows the example uses. Dropout is off.
pub fn gradient_check<T: Scalar>(
    model: &Classifier<T>,
    example: &Prepared,
    epsilon: T,
    samples: usize,
    seed: u64,
) -> GradCheckReport {
    let mut analytic = model.zero_grads();
    model.loss_and_grad(example, None, &mut analytic);

    let d = model.architecture().embedding_dim;
    let used_rows: BTreeSet<usize> = example
        .sequences
        .iter()
        .flatten()
        .copied()
        .filter(|&r| r != PAD)
        .collect();
    let candidates: Vec<Vec<usize>> = model
        .tensors()
        .iter()
        .enumerate()
        .map(|(k, t)| match (t.trainable, k) {
            (false, _) => Vec::new(),
            (true, 0) => used_rows.iter().flat_map(|&r| r * d..(r + 1) * d).collect(),
            (true, _) => (0..t.data.len()).collect(),
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let populated = candidates.iter().filter(|c| !c.is_empty()).count().max(1);
    let quota = samples.div_ceil(populated);
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    let mut leftovers: Vec<(usize, usize)> = Vec::new();
    for (k, c) in candidates.iter().enumerate() {
        let picked: BTreeSet<usize> = sample(&mut rng, c.len(), quota.min(c.len()))
            .into_iter()
            .collect();
        for (pos, &idx) in c.iter().enumerate() {
            if picked.contains(&pos) {
                chosen.push((k, idx));
            } else {
                leftovers.push((k, idx));
            }
        }
    }
    if chosen.len() < samples && !leftovers.is_empty() {
        let extra = (samples - chosen.len()).min(leftovers.len());
        for i in sample(&mut rng, leftovers.len(), extra) {
            chosen.push(leftovers[i]);
        }
    }

    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let mut per_tensor: Vec<(String, f64)> = Vec::new();
    for &(k, idx) in &chosen {
        let original = probe.tensors()[k].data[idx];
        let numeric = central_difference(epsilon, |delta| {
            probe.tensors_mut()[k].data[idx] = original + delta;
            probe.loss(example)
        });
        probe.tensors_mut()[k].data[idx] = original;
        let err = relative_error(analytic[k][idx], numeric).to_f64_lossy();
        worst = worst.max(err);
        let name = &model.tensors()[k].name;
        match per_tensor.iter_mut().find(|(n, _)| n == name) {
            Some((_, e)) => *e = e.max(err),
            None => per_tensor.push((name.clone(), err)),
        }
    }
    GradCheckReport {
        max_relative_error: worst,
        checked: chosen.len(),
        per_tensor,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::embeddings::{EmbeddingMatrix, OovPolicy};
    use crate::neural::model::{Architecture, EncoderConfig};
    use rand::Rng;

    /// Softmax regression `p = softmax(Wx + b)` with its closed-form gradient.
    #[test]
    fn affine_model_matches_to_1e7() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut params: Vec<f64> = (0..14).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target = 1;
        let loss = |p: &[f64]| {
            let z: Vec<f64> = (0..2)
                .map(|k| p[12 + k] + (0..6).map(|j| p[k * 6 + j] * x[j]).sum::<f64>())
                .collect();
            let m = z[0].max(z[1]);
            let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
            lse - z[target]
        };
        let z: Vec<f64> = (0..2)
            .map(|k| params[12 + k] + (0..6).map(|j| params[k * 6 + j] * x[j]).sum::<f64>())
            .collect();
        let s = z[0].exp() + z[1].exp();
        let dz: Vec<f64> = (0..2)
            .map(|k| z[k].exp() / s - f64::from(u8::from(k == target)))
            .collect();
        let mut worst = 0.0f64;
        for i in 0..14 {
            let analytic = if i < 12 {
                dz[i / 6] * x[i % 6]
            } else {
                dz[i - 12]
            };
            let orig = params[i];
            let numeric = central_difference(1e-5, |d| {
                params[i] = orig + d;
                loss(&params)
            });
            params[i] = orig;
            worst = worst.max(relative_error(analytic, numeric));
        }
        assert!(worst < 1e-7, "{worst}");
    }

    fn model(encoder: EncoderConfig, inputs: usize) -> (Classifier<f64>, Prepared) {
        let words = ["wat", "is", "groen", "en", "plakt", "aan", "de", "muur"];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e = EmbeddingMatrix::from_rows(
            words
                .iter()
                .map(|w| {
                    (
                        w.to_string(),
                        (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    )
                })
                .collect(),
        )
        .unwrap();
        let arch = Architecture {
            encoder,
            inputs,
            embedding_dim: 6,
            max_sequence_length: 64,
            oov_policy: OovPolicy::MeanVector,
        };
        let m = Classifier::new(arch, &e, words, 21).unwrap();
        let texts = ["wat is groen en plakt", "aan de muur onbekend"];
        let (p, _) = m.prepare(&texts[..inputs], 1);
        (m, p)
    }

    #[test]
    fn cnn_gradients() {
        let (m, p) = model(
            EncoderConfig {
                channels: 6,
                ..EncoderConfig::cnn()
            },
            1,
        );
        let r = gradient_check(&m, &p, 1e-5, 250, 1);
        assert!(r.checked >= 200);
        assert!(r.max_relative_error < 1e-4, "{r:?}");
    }

    #[test]
    fn lstm_gradients_sequence_length_five() {
        let (m, p) = model(EncoderConfig::lstm(8), 1);
        assert_eq!(p.sequences[0].len(), 5);
        let r = gradient_check(&m, &p, 1e-5, 250, 2);
        assert!(r.checked >= 200);
        assert!(r.max_relative_error < 1e-4, "{r:?}");
    }

    #[test]
    fn pairwise_gradients_include_embeddings() {
        for enc in [
            EncoderConfig {
                channels: 4,
                ..EncoderConfig::cnn()
            },
            EncoderConfig::lstm(8),
        ] {
            let (m, p) = model(enc.with_trainable_embeddings(true), 2);
            let r = gradient_check(&m, &p, 1e-5, 300, 3);
            assert!(r.per_tensor.iter().any(|(n, _)| n == "embedding"));
            assert!(r.per_tensor.iter().any(|(n, _)| n.starts_with("encoder1")));
            assert!(r.max_relative_error < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn detects_a_wrong_gradient() {
        assert!(relative_error(1.0, 1.1) > 0.04);
        assert_eq!(relative_error(0.0f64, 0.0), 0.0);
    }
}
