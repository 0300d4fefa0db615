//! Greedy averaged-perceptron part-of-speech tagger.
//!
//! Features: current, previous and next word forms, prefixes and suffixes up
//! to three characters, a word-shape marker for non-lowercase words, and the
//! previously predicted tag. Frequent unambiguous words are resolved through a
//! lexicon before the perceptron is consulted. Punctuation is always `PUNCT`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{tokenize, Token};

pub const PUNCT: &str = "PUNCT";
const MODEL_HEADER: &str = "MIRTH-TAGGER v1";
const LEXICON_MIN_COUNT: usize = 5;
const LEXICON_MIN_PURITY: f64 = 0.97;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub token: Token,
    pub pos: String,
}

/// A training sentence: `(form, tag)` pairs.
pub type TaggedSentence = Vec<(String, String)>;

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    tagset: Vec<String>,
    /// feature -> weight per tag (dense over `tagset`).
    weights: HashMap<String, Vec<f64>>,
    lexicon: HashMap<String, usize>,
}

fn is_punct_form(form: &str) -> bool {
    let toks = tokenize(form);
    toks.len() == 1 && toks[0].is_punct
}

fn shape(surface: &str) -> Option<&'static str> {
    let first = surface.chars().next()?;
    if first.is_numeric() {
        Some("d")
    } else if first.is_uppercase() {
        if surface
            .chars()
            .filter(|c| c.is_alphabetic())
            .all(char::is_uppercase)
            && surface.chars().count() > 1
        {
            Some("XX")
        } else {
            Some("X")
        }
    } else {
        None
    }
}

fn features(surfaces: &[&str], forms: &[String], i: usize, prev_tag: &str) -> Vec<String> {
    let w = forms[i].as_str();
    let chars: Vec<char> = w.chars().collect();
    let mut f = Vec::with_capacity(12);
    f.push(format!("w={w}"));
    for k in 1..=3.min(chars.len()) {
        f.push(format!("p{k}={}", chars[..k].iter().collect::<String>()));
        f.push(format!(
            "s{k}={}",
            chars[chars.len() - k..].iter().collect::<String>()
        ));
    }
    let prev = if i == 0 { "<s>" } else { forms[i - 1].as_str() };
    let next = forms.get(i + 1).map(String::as_str).unwrap_or("</s>");
    f.push(format!("w-1={prev}"));
    f.push(format!("w+1={next}"));
    f.push(format!("t-1={prev_tag}"));
    if let Some(s) = shape(surfaces[i]) {
        f.push(format!("shape={s}{}", if i == 0 { "0" } else { "" }));
    }
    f
}

/// Weights under training, with the bookkeeping needed for averaging.
struct Perceptron {
    n_tags: usize,
    weights: HashMap<String, Vec<f64>>,
    totals: HashMap<String, Vec<f64>>,
    stamps: HashMap<String, Vec<u64>>,
    instances: u64,
}

impl Perceptron {
    fn new(n_tags: usize) -> Self {
        Perceptron {
            n_tags,
            weights: HashMap::new(),
            totals: HashMap::new(),
            stamps: HashMap::new(),
            instances: 0,
        }
    }

    fn update(&mut self, gold: usize, guess: usize, feats: &[String]) {
        for feat in feats {
            for (tag, delta) in [(gold, 1.0), (guess, -1.0)] {
                let n = self.n_tags;
                let w = self
                    .weights
                    .entry(feat.clone())
                    .or_insert_with(|| vec![0.0; n]);
                let total = self
                    .totals
                    .entry(feat.clone())
                    .or_insert_with(|| vec![0.0; n]);
                let stamp = self
                    .stamps
                    .entry(feat.clone())
                    .or_insert_with(|| vec![0; n]);
                total[tag] += (self.instances - stamp[tag]) as f64 * w[tag];
                stamp[tag] = self.instances;
                w[tag] += delta;
            }
        }
    }

    fn averaged(mut self) -> HashMap<String, Vec<f64>> {
        let instances = self.instances.max(1);
        let mut out = HashMap::new();
        for (feat, w) in self.weights.drain() {
            let total = &self.totals[&feat];
            let stamp = &self.stamps[&feat];
            let avg: Vec<f64> = (0..self.n_tags)
                .map(|t| (total[t] + (self.instances - stamp[t]) as f64 * w[t]) / instances as f64)
                .collect();
            if avg.iter().any(|&x| x != 0.0) {
                out.insert(feat, avg);
            }
        }
        out
    }
}

fn score(weights: &HashMap<String, Vec<f64>>, n_tags: usize, feats: &[String]) -> usize {
    let mut scores = vec![0.0; n_tags];
    for f in feats {
        if let Some(w) = weights.get(f) {
            for (s, x) in scores.iter_mut().zip(w) {
                *s += x;
            }
        }
    }
    // First maximum in tagset order.
    let mut best = 0;
    for (t, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = t;
        }
    }
    best
}

/// Trains a tagger; the per-epoch shuffle order is derived from `seed`.
pub fn train_tagger(sentences: &[TaggedSentence], epochs: usize, seed: u64) -> Result<TaggerModel> {
    if sentences.iter().all(|s| s.is_empty()) {
        return Err(Error::data("tagger training data is empty"));
    }
    let mut tag_names: Vec<String> = Vec::new();
    let mut counts: HashMap<String, BTreeMap<String, usize>> = HashMap::new();
    for (form, tag) in sentences.iter().flatten() {
        if tag.is_empty() {
            return Err(Error::data(format!("empty tag for form {form:?}")));
        }
        if !tag_names.contains(tag) {
            tag_names.push(tag.clone());
        }
        *counts
            .entry(form.to_lowercase())
            .or_default()
            .entry(tag.clone())
            .or_default() += 1;
    }
    tag_names.sort();
    let tag_index: HashMap<&str, usize> = tag_names
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();

    let mut lexicon = HashMap::new();
    for (word, by_tag) in &counts {
        let n: usize = by_tag.values().sum();
        let (best_tag, best) = by_tag.iter().max_by_key(|(_, &c)| c).expect("non-empty");
        if n >= LEXICON_MIN_COUNT && *best as f64 / n as f64 >= LEXICON_MIN_PURITY {
            lexicon.insert(word.clone(), tag_index[best_tag.as_str()]);
        }
    }

    let mut model = Perceptron::new(tag_names.len());
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &si in &order {
            let sentence = &sentences[si];
            let surfaces: Vec<&str> = sentence.iter().map(|(f, _)| f.as_str()).collect();
            let forms: Vec<String> = surfaces.iter().map(|s| s.to_lowercase()).collect();
            let mut prev = "<s>".to_string();
            for (i, (form, gold)) in sentence.iter().enumerate() {
                let guess = if is_punct_form(form) {
                    PUNCT.to_string()
                } else if let Some(&t) = lexicon.get(&forms[i]) {
                    tag_names[t].clone()
                } else {
                    let feats = features(&surfaces, &forms, i, &prev);
                    let guess = score(&model.weights, tag_names.len(), &feats);
                    let gold_i = tag_index[gold.as_str()];
                    if guess != gold_i {
                        model.update(gold_i, guess, &feats);
                    }
                    tag_names[guess].clone()
                };
                model.instances += 1;
                prev = guess;
            }
        }
    }

    Ok(TaggerModel {
        weights: model.averaged(),
        tagset: tag_names,
        lexicon,
    })
}

impl TaggerModel {
    pub fn tagset(&self) -> &[String] {
        &self.tagset
    }

    /// Tags for a sequence of surface forms.
    pub fn tag_forms(&self, surfaces: &[&str]) -> Vec<String> {
        let forms: Vec<String> = surfaces.iter().map(|s| s.to_lowercase()).collect();
        let mut tags: Vec<String> = Vec::with_capacity(surfaces.len());
        for i in 0..surfaces.len() {
            let prev = tags.last().map(String::as_str).unwrap_or("<s>");
            let tag = if is_punct_form(surfaces[i]) {
                PUNCT.to_string()
            } else if let Some(&t) = self.lexicon.get(&forms[i]) {
                self.tagset[t].clone()
            } else {
                let feats = features(surfaces, &forms, i, prev);
                self.tagset[score(&self.weights, self.tagset.len(), &feats)].clone()
            };
            tags.push(tag);
        }
        tags
    }

    /// Tags tokens produced by [`crate::text::tokenize`].
    pub fn tag(&self, tokens: &[Token]) -> Vec<TaggedToken> {
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        let mut tags = self.tag_forms(&surfaces);
        for (tok, tag) in tokens.iter().zip(tags.iter_mut()) {
            if tok.is_punct {
                *tag = PUNCT.to_string();
            }
        }
        tokens
            .iter()
            .cloned()
            .zip(tags)
            .map(|(token, pos)| TaggedToken { token, pos })
            .collect()
    }

    /// Serializes into the `MIRTH-TAGGER v1` line format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MODEL_HEADER}").unwrap();
        writeln!(out, "tagset\t{}", self.tagset.join("\t")).unwrap();
        let mut lex: Vec<_> = self.lexicon.iter().collect();
        lex.sort();
        for (word, &t) in &lex {
            writeln!(out, "lexicon\t{word}\t{}", self.tagset[t]).unwrap();
        }
        let mut feats: Vec<_> = self.weights.iter().collect();
        feats.sort_by(|a, b| a.0.cmp(b.0));
        let mut n_weights = 0;
        for (feat, w) in feats {
            for (t, &x) in w.iter().enumerate() {
                if x != 0.0 {
                    writeln!(out, "weight\t{feat}\t{}\t{x:?}", self.tagset[t]).unwrap();
                    n_weights += 1;
                }
            }
        }
        writeln!(out, "end\t{}\t{n_weights}", lex.len()).unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<TaggerModel> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, MODEL_HEADER)) => {}
            _ => {
                return Err(Error::data(format!(
                    "line 1: expected header {MODEL_HEADER:?}"
                )))
            }
        }
        let bad = |n: usize, what: &str| Error::data(format!("line {}: {what}", n + 1));
        let tagset: Vec<String> = match lines.next() {
            Some((n, line)) => {
                let mut parts = line.split('\t');
                if parts.next() != Some("tagset") {
                    return Err(bad(n, "expected tagset record"));
                }
                parts.map(str::to_string).collect()
            }
            None => return Err(bad(1, "missing tagset record")),
        };
        if tagset.is_empty() || tagset.iter().any(String::is_empty) {
            return Err(bad(1, "empty tagset"));
        }
        let index: HashMap<&str, usize> = tagset
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let mut lexicon = HashMap::new();
        let mut weights: HashMap<String, Vec<f64>> = HashMap::new();
        let mut n_weights = 0usize;
        let mut ended = false;
        for (n, line) in lines {
            if ended {
                return Err(bad(n, "content after end record"));
            }
            let parts: Vec<&str> = line.split('\t').collect();
            match parts.as_slice() {
                ["lexicon", word, tag] => {
                    let t = *index
                        .get(tag)
                        .ok_or_else(|| bad(n, "lexicon tag not in tagset"))?;
                    lexicon.insert(word.to_string(), t);
                }
                ["weight", feat, tag, value] => {
                    let t = *index
                        .get(tag)
                        .ok_or_else(|| bad(n, "weight tag not in tagset"))?;
                    let x: f64 = value.parse().map_err(|_| bad(n, "unparsable weight"))?;
                    if !x.is_finite() {
                        return Err(bad(n, "non-finite weight"));
                    }
                    weights
                        .entry(feat.to_string())
                        .or_insert_with(|| vec![0.0; tagset.len()])[t] = x;
                    n_weights += 1;
                }
                ["end", n_lex, n_w] => {
                    if n_lex.parse::<usize>().ok() != Some(lexicon.len())
                        || n_w.parse::<usize>().ok() != Some(n_weights)
                    {
                        return Err(bad(n, "record counts do not match end record"));
                    }
                    ended = true;
                }
                _ => return Err(bad(n, "unrecognized record")),
            }
        }
        if !ended {
            return Err(Error::data("missing end record (file truncated?)"));
        }
        Ok(TaggerModel {
            tagset,
            weights,
            lexicon,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<TaggerModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
    }
}

pub fn save_tagger(model: &TaggerModel, path: &Path) -> Result<()> {
    model.save(path)
}

pub fn load_tagger(path: &Path) -> Result<TaggerModel> {
    TaggerModel::load(path)
}

/// Reads CoNLL-U text, keeping FORM (column 2) and UPOS (column 4).
///
/// Multiword-token ranges (`1-2`) and empty nodes (`1.1`) are skipped.
pub fn parse_conllu(text: &str) -> Result<Vec<TaggedSentence>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 4 {
            return Err(Error::data(format!(
                "line {}: expected at least 4 tab-separated columns",
                n + 1
            )));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        if cols[1].is_empty() || cols[3].is_empty() || cols[3] == "_" {
            return Err(Error::data(format!("line {}: missing FORM or UPOS", n + 1)));
        }
        current.push((cols[1].to_string(), cols[3].to_string()));
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

/// Renders sentences as minimal CoNLL-U (ID, FORM, UPOS filled; rest `_`).
pub fn to_conllu(sentences: &[TaggedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for (i, (form, tag)) in s.iter().enumerate() {
            writeln!(out, "{}\t{form}\t_\t{tag}\t_\t_\t_\t_\t_\t_", i + 1).unwrap();
        }
        out.push('\n');
    }
    out
}
