//! TF-IDF over the most frequent word n-grams, fed to a multinomial
//! Naive Bayes classifier.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::datasets::Label;
use crate::error::{Error, Result};
use crate::eval::JokeDetector;
use crate::scalar::Scalar;
use crate::text::{extract_ngrams, tokenize};

const MODEL_HEADER: &str = "MIRTH-NB v1";
pub const DEFAULT_MAX_FEATURES: usize = 3000;
pub const DEFAULT_NGRAM_RANGE: (usize, usize) = (1, 3);

/// Class order used for scores: index 0 is NONJOKE, index 1 is JOKE.
pub const CLASSES: [Label; 2] = [Label::Nonjoke, Label::Joke];

fn class_index(label: Label) -> usize {
    match label {
        Label::Nonjoke => 0,
        Label::Joke => 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramVocabulary<T> {
    /// Grams joined with a single space, in feature-index order.
    grams: Vec<String>,
    index: HashMap<String, usize>,
    idf: Vec<T>,
    ngram_range: (usize, usize),
}

/// Sparse vector: `(feature index, value)` sorted by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector<T> {
    pub entries: Vec<(usize, T)>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn norm(&self) -> T {
        self.entries.iter().map(|&(_, v)| v * v).sum::<T>().sqrt()
    }

    pub fn l2_normalized(&self) -> SparseVector<T> {
        let n = self.norm();
        if n == T::zero() {
            return self.clone();
        }
        SparseVector {
            entries: self.entries.iter().map(|&(i, v)| (i, v / n)).collect(),
        }
    }
}

fn grams_of(text: &str, range: (usize, usize)) -> Vec<String> {
    extract_ngrams(&tokenize(text), range.0, range.1)
        .into_iter()
        .map(|g| g.join(" "))
        .collect()
}

/// Keeps the `max_features` grams with the highest document frequency
/// (ties in lexicographic order), with smoothed idf
/// `ln((1 + N) / (1 + df)) + 1`.
pub fn fit_vocabulary<T: Scalar>(
    train_texts: &[&str],
    max_features: usize,
    ngram_range: (usize, usize),
) -> NgramVocabulary<T> {
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for text in train_texts {
        let distinct: HashSet<String> = grams_of(text, ngram_range).into_iter().collect();
        for g in distinct {
            *df.entry(g).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
    // BTreeMap order is lexicographic, and the sort is stable.
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    ranked.truncate(max_features);
    let n = T::from_usize_lossy(train_texts.len());
    let idf = ranked
        .iter()
        .map(|(_, d)| ((T::one() + n) / (T::one() + T::from_usize_lossy(*d))).ln() + T::one())
        .collect();
    let grams: Vec<String> = ranked.into_iter().map(|(g, _)| g).collect();
    let index = grams
        .iter()
        .enumerate()
        .map(|(i, g)| (g.clone(), i))
        .collect();
    NgramVocabulary {
        grams,
        index,
        idf,
        ngram_range,
    }
}

impl<T: Scalar> NgramVocabulary<T> {
    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn grams(&self) -> &[String] {
        &self.grams
    }

    pub fn idf(&self) -> &[T] {
        &self.idf
    }

    pub fn feature_index(&self, gram: &str) -> Option<usize> {
        self.index.get(gram).copied()
    }

    /// Raw counts times idf, L2-normalized; unknown grams are ignored.
    pub fn transform(&self, text: &str) -> SparseVector<T> {
        let mut tf: BTreeMap<usize, usize> = BTreeMap::new();
        for g in grams_of(text, self.ngram_range) {
            if let Some(&i) = self.index.get(&g) {
                *tf.entry(i).or_default() += 1;
            }
        }
        SparseVector {
            entries: tf
                .into_iter()
                .map(|(i, c)| (i, T::from_usize_lossy(c) * self.idf[i]))
                .collect(),
        }
        .l2_normalized()
    }
}

pub fn tfidf_transform<T: Scalar>(vocab: &NgramVocabulary<T>, text: &str) -> SparseVector<T> {
    vocab.transform(text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel<T> {
    /// Indexed like [`CLASSES`].
    pub class_log_prior: [T; 2],
    /// `feature_log_likelihood[class][feature]`.
    pub feature_log_likelihood: [Vec<T>; 2],
    pub smoothing_alpha: T,
}

/// Multinomial NB over fractional feature weights with additive smoothing.
pub fn train_nb<T: Scalar>(
    vectors: &[SparseVector<T>],
    labels: &[Label],
    n_features: usize,
    alpha: T,
) -> Result<NaiveBayesModel<T>> {
    if vectors.len() != labels.len() {
        return Err(Error::invalid("vectors and labels differ in length"));
    }
    if alpha <= T::zero() {
        return Err(Error::invalid("smoothing alpha must be positive"));
    }
    let mut class_counts = [0usize; 2];
    let mut feature_mass = [vec![T::zero(); n_features], vec![T::zero(); n_features]];
    for (v, &label) in vectors.iter().zip(labels) {
        let c = class_index(label);
        class_counts[c] += 1;
        for &(i, x) in &v.entries {
            feature_mass[c][i] += x;
        }
    }
    if class_counts.iter().any(|&n| n == 0) {
        return Err(Error::data(
            "Naive Bayes needs at least one example of each class",
        ));
    }
    let total = T::from_usize_lossy(vectors.len());
    let class_log_prior = class_counts.map(|n| (T::from_usize_lossy(n) / total).ln());
    let feature_log_likelihood = feature_mass.map(|mass| {
        let denom = mass.iter().copied().sum::<T>() + alpha * T::from_usize_lossy(n_features);
        mass.into_iter()
            .map(|m| ((m + alpha) / denom).ln())
            .collect()
    });
    Ok(NaiveBayesModel {
        class_log_prior,
        feature_log_likelihood,
        smoothing_alpha: alpha,
    })
}

/// Returns the predicted label and the per-class joint log scores
/// (indexed like [`CLASSES`]). Ties go to NONJOKE.
pub fn predict_nb<T: Scalar>(
    model: &NaiveBayesModel<T>,
    vector: &SparseVector<T>,
) -> (Label, [T; 2]) {
    let mut scores = model.class_log_prior;
    for (c, score) in scores.iter_mut().enumerate() {
        for &(i, x) in &vector.entries {
            *score += x * model.feature_log_likelihood[c][i];
        }
    }
    let label = if scores[1] > scores[0] {
        Label::Joke
    } else {
        Label::Nonjoke
    };
    (label, scores)
}

/// Vocabulary and model bundled for text-in, label-out use.
#[derive(Debug, Clone, PartialEq)]
pub struct NbClassifier<T> {
    pub vocabulary: NgramVocabulary<T>,
    pub model: NaiveBayesModel<T>,
}

impl<T: Scalar> NbClassifier<T> {
    pub fn fit(texts: &[&str], labels: &[Label], alpha: T) -> Result<Self> {
        if texts.is_empty() {
            return Err(Error::data("no training texts"));
        }
        let vocabulary = fit_vocabulary(texts, DEFAULT_MAX_FEATURES, DEFAULT_NGRAM_RANGE);
        let vectors: Vec<_> = texts.iter().map(|t| vocabulary.transform(t)).collect();
        let model = train_nb(&vectors, labels, vocabulary.len(), alpha)?;
        Ok(NbClassifier { vocabulary, model })
    }

    pub fn predict(&self, text: &str) -> (Label, [T; 2]) {
        predict_nb(&self.model, &self.vocabulary.transform(text))
    }

    pub fn to_text(&self) -> String {
        let v = &self.vocabulary;
        let m = &self.model;
        let mut out = String::new();
        writeln!(out, "{MODEL_HEADER}").unwrap();
        writeln!(out, "ngram_range\t{}\t{}", v.ngram_range.0, v.ngram_range.1).unwrap();
        writeln!(out, "alpha\t{:?}", m.smoothing_alpha.to_f64_lossy()).unwrap();
        writeln!(
            out,
            "prior\t{:?}\t{:?}",
            m.class_log_prior[0].to_f64_lossy(),
            m.class_log_prior[1].to_f64_lossy()
        )
        .unwrap();
        writeln!(out, "features\t{}", v.len()).unwrap();
        for i in 0..v.len() {
            writeln!(
                out,
                "{}\t{:?}\t{:?}\t{:?}",
                v.grams[i],
                v.idf[i].to_f64_lossy(),
                m.feature_log_likelihood[0][i].to_f64_lossy(),
                m.feature_log_likelihood[1][i].to_f64_lossy()
            )
            .unwrap();
        }
        writeln!(out, "end").unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let bad = |n: usize, what: &str| Error::data(format!("line {}: {what}", n + 1));
        if lines.first() != Some(&MODEL_HEADER) {
            return Err(bad(0, "expected header MIRTH-NB v1"));
        }
        let field = |n: usize, key: &str| -> Result<Vec<&str>> {
            let line = lines
                .get(n)
                .ok_or_else(|| bad(n, "unexpected end of file"))?;
            let mut parts = line.split('\t');
            if parts.next() != Some(key) {
                return Err(bad(n, &format!("expected {key} record")));
            }
            Ok(parts.collect())
        };
        let num = |n: usize, s: &str| -> Result<T> {
            let x: f64 = s.parse().map_err(|_| bad(n, "unparsable number"))?;
            if x.is_nan() {
                return Err(bad(n, "NaN value"));
            }
            Ok(T::lit(x))
        };
        let range = field(1, "ngram_range")?;
        let parse_usize =
            |n: usize, s: &str| s.parse::<usize>().map_err(|_| bad(n, "unparsable integer"));
        let ngram_range = match range.as_slice() {
            [a, b] => (parse_usize(1, a)?, parse_usize(1, b)?),
            _ => return Err(bad(1, "expected two values")),
        };
        let alpha = num(2, field(2, "alpha")?.first().copied().unwrap_or(""))?;
        let prior = field(3, "prior")?;
        if prior.len() != 2 {
            return Err(bad(3, "expected two priors"));
        }
        let class_log_prior = [num(3, prior[0])?, num(3, prior[1])?];
        let n_features = parse_usize(4, field(4, "features")?.first().copied().unwrap_or(""))?;
        let mut grams = Vec::with_capacity(n_features);
        let mut idf = Vec::with_capacity(n_features);
        let mut ll = [
            Vec::with_capacity(n_features),
            Vec::with_capacity(n_features),
        ];
        for k in 0..n_features {
            let n = 5 + k;
            let line = lines
                .get(n)
                .ok_or_else(|| bad(n, "unexpected end of file"))?;
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 4 {
                return Err(bad(n, "expected gram, idf and two log-likelihoods"));
            }
            grams.push(parts[0].to_string());
            idf.push(num(n, parts[1])?);
            ll[0].push(num(n, parts[2])?);
            ll[1].push(num(n, parts[3])?);
        }
        if lines.get(5 + n_features) != Some(&"end") {
            return Err(bad(5 + n_features, "missing end record (file truncated?)"));
        }
        let index = grams
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        Ok(NbClassifier {
            vocabulary: NgramVocabulary {
                grams,
                index,
                idf,
                ngram_range,
            },
            model: NaiveBayesModel {
                class_log_prior,
                feature_log_likelihood: ll,
                smoothing_alpha: alpha,
            },
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

impl<T: Scalar> JokeDetector for NbClassifier<T> {
    fn detect(&self, text: &str) -> Label {
        self.predict(text).0
    }
}
