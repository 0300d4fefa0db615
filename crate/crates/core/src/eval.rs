//! Metrics with normal-approximation confidence intervals, the expected
//! maximum validation accuracy of random hyperparameter search, cross-domain
//! joke rates, and scoring of predictions produced outside the harness.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datasets::{read_jsonl, Label, LabeledExample, PairExample, Side};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::text::Document;

/// z-value of a two-sided 95% normal interval.
const Z95: f64 = 1.96;
pub const CI_METHOD: &str = "normal approximation, 95%";

/// A two-valued outcome with a designated positive class (JOKE, or side A).
pub trait BinaryOutcome: Copy + Eq + fmt::Debug {
    fn is_positive(self) -> bool;
    fn parse(s: &str) -> Option<Self>;
}

impl BinaryOutcome for Label {
    fn is_positive(self) -> bool {
        self == Label::Joke
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "joke" => Some(Label::Joke),
            "nonjoke" => Some(Label::Nonjoke),
            _ => None,
        }
    }
}

impl BinaryOutcome for Side {
    fn is_positive(self) -> bool {
        self == Side::A
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "a" => Some(Side::A),
            "b" => Some(Side::B),
            _ => None,
        }
    }
}

/// An example with a gold outcome.
pub trait Gold {
    type Outcome: BinaryOutcome;
    fn id(&self) -> &str;
    fn gold(&self) -> Self::Outcome;
    fn source(&self) -> Option<&str> {
        None
    }
}

impl Gold for LabeledExample {
    type Outcome = Label;
    fn id(&self) -> &str {
        &self.id
    }
    fn gold(&self) -> Label {
        self.label
    }
    fn source(&self) -> Option<&str> {
        Some(&self.source)
    }
}

impl Gold for PairExample {
    type Outcome = Side;
    fn id(&self) -> &str {
        &self.id
    }
    fn gold(&self) -> Side {
        self.target
    }
}

/// Anything that labels a single text as joke or non-joke.
pub trait JokeDetector {
    fn detect(&self, text: &str) -> Label;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            0.0
        } else {
            (self.tp + self.tn) as f64 / n as f64
        }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall; 0 when both vanish.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceBreakdown {
    pub n: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub ci_halfwidth: f64,
    pub ci_method: String,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub confusion: Confusion,
    pub per_source: BTreeMap<String, SourceBreakdown>,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n           {}", self.n)?;
        writeln!(
            f,
            "accuracy    {:.1} ± {:.1} %  ({})",
            100.0 * self.accuracy,
            100.0 * self.ci_halfwidth,
            self.ci_method
        )?;
        writeln!(f, "F1          {:.1} %", 100.0 * self.f1)?;
        writeln!(f, "precision   {:.1} %", 100.0 * self.precision)?;
        writeln!(f, "recall      {:.1} %", 100.0 * self.recall)?;
        let c = &self.confusion;
        writeln!(
            f,
            "confusion   tp={} fp={} fn={} tn={}",
            c.tp, c.fp, c.fn_, c.tn
        )?;
        for (source, b) in &self.per_source {
            writeln!(
                f,
                "  {source:<12} n={:<6} acc={:.1} %",
                b.n,
                100.0 * b.accuracy
            )?;
        }
        Ok(())
    }
}

/// `1.96 * sqrt(p (1 - p) / n)`.
pub fn binomial_ci_halfwidth<T: Scalar>(p: T, n: usize) -> T {
    assert!(n >= 1, "CI needs at least one observation");
    T::lit(Z95)
        * (p * (T::one() - p) / T::from_usize_lossy(n))
            .max(T::zero())
            .sqrt()
}

/// Scores id-aligned predictions against gold examples.
pub fn evaluate<G: Gold>(predictions: &[(String, G::Outcome)], golds: &[G]) -> Result<EvalReport> {
    let mut by_id: HashMap<&str, G::Outcome> = HashMap::with_capacity(predictions.len());
    let mut duplicate = Vec::new();
    for (id, p) in predictions {
        if by_id.insert(id.as_str(), *p).is_some() {
            duplicate.push(id.as_str());
        }
    }
    let gold_ids: HashSet<&str> = golds.iter().map(|g| g.id()).collect();
    let missing: Vec<&str> = golds
        .iter()
        .map(|g| g.id())
        .filter(|id| !by_id.contains_key(id))
        .collect();
    let mut extra: Vec<&str> = by_id
        .keys()
        .copied()
        .filter(|id| !gold_ids.contains(id))
        .collect();
    extra.sort_unstable();
    if !missing.is_empty() || !extra.is_empty() || !duplicate.is_empty() {
        let list = |v: &[&str]| v.iter().take(20).copied().collect::<Vec<_>>().join(", ");
        return Err(Error::data(format!(
            "prediction ids do not match gold ids; missing: [{}] extra: [{}] duplicated: [{}]",
            list(&missing),
            list(&extra),
            list(&duplicate)
        )));
    }
    if golds.is_empty() {
        return Err(Error::data("nothing to evaluate"));
    }

    let mut confusion = Confusion::default();
    let mut per_source: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for g in golds {
        let pred = by_id[g.id()];
        let gold = g.gold();
        match (pred.is_positive(), gold.is_positive()) {
            (true, true) => confusion.tp += 1,
            (true, false) => confusion.fp += 1,
            (false, true) => confusion.fn_ += 1,
            (false, false) => confusion.tn += 1,
        }
        if let Some(src) = g.source() {
            let e = per_source.entry(src.to_string()).or_default();
            e.0 += 1;
            e.1 += usize::from(pred == gold);
        }
    }
    let n = confusion.total();
    let accuracy = confusion.accuracy();
    Ok(EvalReport {
        n,
        accuracy,
        ci_halfwidth: binomial_ci_halfwidth(accuracy, n),
        ci_method: CI_METHOD.to_string(),
        f1: confusion.f1(),
        precision: confusion.precision(),
        recall: confusion.recall(),
        confusion,
        per_source: per_source
            .into_iter()
            .map(|(s, (n, ok))| {
                (
                    s,
                    SourceBreakdown {
                        n,
                        accuracy: ok as f64 / n as f64,
                    },
                )
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxAccCurve<T> {
    /// `(n_trials, expected maximum validation accuracy)`.
    pub points: Vec<(usize, T)>,
}

impl<T: Scalar> MaxAccCurve<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,expected_max\n");
        for (n, v) in &self.points {
            out.push_str(&format!("{n},{:?}\n", v.to_f64_lossy()));
        }
        out
    }
}

/// Expected maximum of `n` draws (with replacement) from the empirical
/// distribution of `val_accs`, for `n = 1..=max_n`.
///
/// With sorted scores `x(1) <= ... <= x(N)`:
/// `E[max_n] = sum_i x(i) * ((i/N)^n - ((i-1)/N)^n)`.
pub fn expected_max_curve<T: Scalar>(val_accs: &[T], max_n: usize) -> Result<MaxAccCurve<T>> {
    if val_accs.is_empty() {
        return Err(Error::invalid(
            "expected-max curve needs at least one trial",
        ));
    }
    if val_accs.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("NaN validation accuracy"));
    }
    let mut sorted = val_accs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let big_n = T::from_usize_lossy(sorted.len());
    let top = sorted[sorted.len() - 1];
    let mean = val_accs.iter().copied().sum::<T>() / big_n;

    let mut points = Vec::with_capacity(max_n);
    let mut prev = T::neg_infinity();
    for n in 1..=max_n {
        let value = if n == 1 {
            mean
        } else {
            let exp = n as i32;
            sorted
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let hi = (T::from_usize_lossy(i + 1) / big_n).powi(exp);
                    let lo = (T::from_usize_lossy(i) / big_n).powi(exp);
                    x * (hi - lo)
                })
                .sum()
        };
        // Rounding can leave a last-ulp dip once the curve has converged.
        let value = value.max(prev).min(top);
        points.push((n, value));
        prev = value;
    }
    Ok(MaxAccCurve { points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDomainRate {
    pub n: usize,
    pub joke_rate: f64,
    pub ci_halfwidth: f64,
}

/// Fraction of `corpus` that `model` labels as a joke.
pub fn cross_domain_rate(
    model: &impl JokeDetector,
    corpus: &[Document],
) -> Result<CrossDomainRate> {
    if corpus.is_empty() {
        return Err(Error::data("cross-domain corpus is empty"));
    }
    let jokes = corpus
        .iter()
        .filter(|d| model.detect(&d.raw_text) == Label::Joke)
        .count();
    let rate = jokes as f64 / corpus.len() as f64;
    Ok(CrossDomainRate {
        n: corpus.len(),
        joke_rate: rate,
        ci_halfwidth: binomial_ci_halfwidth(rate, corpus.len()),
    })
}

/// One line of an external predictor's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalPrediction {
    pub id: String,
    pub pred: String,
    /// Carried through but not used by the metrics.
    #[serde(default)]
    pub score: Option<f64>,
}

/// Scores a predictions JSONL file against gold examples through [`evaluate`].
pub fn score_external<G: Gold>(pred_file: &Path, golds: &[G]) -> Result<EvalReport> {
    let rows: Vec<ExternalPrediction> = read_jsonl(pred_file)?;
    let mut preds = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let outcome = G::Outcome::parse(&row.pred).ok_or_else(|| {
            Error::data(format!(
                "{} record {} (id {}): invalid prediction {:?}",
                pred_file.display(),
                i + 1,
                row.id,
                row.pred
            ))
        })?;
        preds.push((row.id.clone(), outcome));
    }
    evaluate(&preds, golds)
}
