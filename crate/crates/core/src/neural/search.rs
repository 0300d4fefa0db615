use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{read_jsonl, write_jsonl};
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::seed::derive_seed;

use super::model::{EncoderConfig, EncoderKind, LSTM_HIDDEN_DIMS};
use super::train::{TrainConfig, TrainingReport};

/// Random-search ranges. Learning rate is log-uniform; the LSTM state size
/// is drawn uniformly from `hidden_dims`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub learning_rate: (f64, f64),
    pub hidden_dims: Vec<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            learning_rate: (1e-3, 1e-1),
            hidden_dims: LSTM_HIDDEN_DIMS.to_vec(),
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.learning_rate;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) || self.hidden_dims.is_empty() {
            return Err(Error::invalid(format!("invalid search space {self:?}")));
        }
        Ok(())
    }

    /// Draws one configuration; only the searched fields of the base configs change.
    pub fn sample(
        &self,
        encoder: &EncoderConfig,
        train: &TrainConfig,
        rng: &mut impl Rng,
    ) -> TrialConfig {
        let (lo, hi) = self.learning_rate;
        let lr = (rng.gen_range(lo.ln()..=hi.ln())).exp();
        let mut encoder = encoder.clone();
        if encoder.kind == EncoderKind::Lstm {
            encoder.hidden_dim = self.hidden_dims[rng.gen_range(0..self.hidden_dims.len())];
        }
        TrialConfig {
            encoder,
            train: TrainConfig {
                learning_rate: lr,
                ..train.clone()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub hyperparameters: TrialConfig,
    pub status: TrialStatus,
    /// Validation accuracy of the final-epoch model; absent for failed trials.
    pub validation_accuracy: Option<f64>,
    #[serde(default)]
    pub validation_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub selected: bool,
    /// Filled only for the selected trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<EvalReport>,
}

/// Runs `n_trials` sampled configurations through `run`. Trial `i` samples
/// from its own stream derived from `seed`, so records do not depend on
/// execution order. Failed runs are recorded, not propagated.
pub fn random_search<F>(
    space: &SearchSpace,
    encoder: &EncoderConfig,
    train: &TrainConfig,
    n_trials: usize,
    seed: u64,
    mut run: F,
) -> Result<Vec<TrialRecord>>
where
    F: FnMut(usize, &TrialConfig) -> Result<TrainingReport>,
{
    space.validate()?;
    let mut records = Vec::with_capacity(n_trials);
    for trial in 0..n_trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("trial:{trial}")));
        let config = space.sample(encoder, train, &mut rng);
        let record = match run(trial, &config) {
            Ok(report) => TrialRecord {
                trial,
                hyperparameters: config,
                status: TrialStatus::Ok,
                validation_accuracy: report.final_val_accuracy(),
                validation_trace: report.val_accuracies,
                error: None,
                selected: false,
                test: None,
            },
            Err(e) => {
                log::warn!("trial {trial} failed: {e}");
                TrialRecord {
                    trial,
                    hyperparameters: config,
                    status: TrialStatus::Failed,
                    validation_accuracy: None,
                    validation_trace: Vec::new(),
                    error: Some(e.to_string()),
                    selected: false,
                    test: None,
                }
            }
        };
        records.push(record);
    }
    Ok(records)
}

/// Index of the record with the highest validation accuracy; ties go to the
/// earliest trial.
pub fn select_best(records: &[TrialRecord]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in records.iter().enumerate() {
        if let Some(acc) = r.validation_accuracy {
            if best.is_none_or(|(_, b)| acc > b) {
                best = Some((i, acc));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Validation accuracies of successful trials, in trial order.
pub fn validation_accuracies(records: &[TrialRecord]) -> Vec<f64> {
    records
        .iter()
        .filter_map(|r| r.validation_accuracy)
        .collect()
}

pub fn write_trials(path: &Path, records: &[TrialRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    let records: Vec<TrialRecord> = read_jsonl(path)?;
    for r in &records {
        if let Some(acc) = r.validation_accuracy {
            if !(0.0..=1.0).contains(&acc) {
                return Err(Error::data(format!(
                    "{}: trial {} has validation accuracy {acc} outside [0, 1]",
                    path.display(),
                    r.trial
                )));
            }
        }
    }
    Ok(records)
}
