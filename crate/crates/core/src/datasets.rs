//! Benchmark assembly: labeled single-text and pairwise examples, seeded
//! stratified splits, and the JSONL exchange format shared with external
//! predictors.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dyntemplate::NegativeExample;
use crate::error::{Error, Result};
use crate::text::{documents_from_lines, Document};

pub const JOKE_SOURCE: &str = "jokes";
pub const DYNTEMPLATE_SOURCE: &str = "dyntemplate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Joke,
    Nonjoke,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Joke => "joke",
            Label::Nonjoke => "nonjoke",
        }
    }
}

/// Which side of a pair holds the joke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn flipped(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::A => "a",
            Side::B => "b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Single,
    Pairwise,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Single => "single",
            Task::Pairwise => "pairwise",
        })
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Task::Single),
            "pairwise" => Ok(Task::Pairwise),
            other => Err(Error::invalid(format!(
                "unknown task {other:?} (expected single|pairwise)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairExample {
    pub id: String,
    pub text_a: String,
    pub text_b: String,
    pub target: Side,
}

impl PairExample {
    /// The same pair with sides exchanged.
    pub fn swapped(&self) -> PairExample {
        PairExample {
            id: self.id.clone(),
            text_a: self.text_b.clone(),
            text_b: self.text_a.clone(),
            target: self.target.flipped(),
        }
    }
}

/// Common surface of the two example kinds.
pub trait Example: Serialize + DeserializeOwned + Clone {
    const TASK: Task;
    fn id(&self) -> &str;
    fn check(&self) -> std::result::Result<(), String>;
}

impl Example for LabeledExample {
    const TASK: Task = Task::Single;

    fn id(&self) -> &str {
        &self.id
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.text.trim().is_empty() {
            return Err("empty text".into());
        }
        let expected = if self.source == JOKE_SOURCE {
            Label::Joke
        } else {
            Label::Nonjoke
        };
        if self.label != expected {
            return Err(format!(
                "label {:?} inconsistent with source {:?}",
                self.label.as_str(),
                self.source
            ));
        }
        Ok(())
    }
}

impl Example for PairExample {
    const TASK: Task = Task::Pairwise;

    fn id(&self) -> &str {
        &self.id
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.text_a.trim().is_empty() || self.text_b.trim().is_empty() {
            return Err("empty text".into());
        }
        Ok(())
    }
}

/// Train/validation/test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratios(pub [f64; 3]);

impl Default for Ratios {
    fn default() -> Self {
        Ratios([0.7, 0.15, 0.15])
    }
}

impl Ratios {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self> {
        let r = Ratios([train, valid, test]);
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::invalid(format!(
                "ratios must lie in [0, 1]: {:?}",
                self.0
            )));
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("ratios must sum to 1, got {sum}")));
        }
        Ok(())
    }

    /// (train, valid, test) sizes for `n` items; valid and test are floored.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let floor = |r: f64| ((r * n as f64) + 1e-9).floor() as usize;
        let valid = floor(self.0[1]);
        let test = floor(self.0[2]).min(n - valid);
        (n - valid - test, valid, test)
    }
}

impl FromStr for Ratios {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::invalid(format!("cannot parse ratios {s:?}")))?;
        match parts.as_slice() {
            [a, b, c] => Ratios::new(*a, *b, *c),
            _ => Err(Error::invalid(format!("expected three ratios, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub task: Task,
    pub seed: u64,
    pub ratios: [f64; 3],
    pub counts: BTreeMap<String, usize>,
    pub excluded_degenerate: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit<E> {
    pub train: Vec<E>,
    pub valid: Vec<E>,
    pub test: Vec<E>,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitName {
    Train,
    Valid,
    Test,
}

impl FromStr for SplitName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "valid" | "validation" => Ok(SplitName::Valid),
            "test" => Ok(SplitName::Test),
            other => Err(Error::invalid(format!(
                "unknown split {other:?} (expected train|valid|test)"
            ))),
        }
    }
}

impl SplitName {
    pub fn file_name(self) -> &'static str {
        match self {
            SplitName::Train => "train.jsonl",
            SplitName::Valid => "valid.jsonl",
            SplitName::Test => "test.jsonl",
        }
    }
}

impl<E> DatasetSplit<E> {
    pub fn part(&self, name: SplitName) -> &[E] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Valid => &self.valid,
            SplitName::Test => &self.test,
        }
    }
}

/// A candidate non-joke: a line from a foreign-domain corpus or a generated negative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonJoke {
    pub id: String,
    pub text: String,
    pub source: String,
    pub degenerate: bool,
    /// The joke this text was generated from; it is kept in the same split.
    pub joke_id: Option<String>,
}

impl NonJoke {
    pub fn from_document(doc: &Document, source: &str) -> NonJoke {
        NonJoke {
            id: doc.id.clone(),
            text: doc.raw_text.clone(),
            source: source.to_string(),
            degenerate: false,
            joke_id: None,
        }
    }
}

impl From<&NegativeExample> for NonJoke {
    fn from(neg: &NegativeExample) -> Self {
        NonJoke {
            id: format!("{DYNTEMPLATE_SOURCE}:{}", neg.source_id),
            text: neg.text.clone(),
            source: DYNTEMPLATE_SOURCE.to_string(),
            degenerate: neg.degenerate,
            joke_id: Some(neg.source_id.clone()),
        }
    }
}

/// Reads a one-item-per-line corpus, dropping blank and duplicate lines.
pub fn ingest_corpus(path: &Path, source: &str) -> Result<Vec<Document>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let content = String::from_utf8(bytes)
        .map_err(|e| Error::data(format!("{}: not valid UTF-8 ({e})", path.display())))?;
    let docs = dedup_documents(documents_from_lines(source, &content));
    if docs.is_empty() {
        log::warn!("{}: no documents", path.display());
    } else {
        log::info!("{}: {} documents", path.display(), docs.len());
    }
    Ok(docs)
}

/// Keeps the first document for each distinct text.
pub fn dedup_documents(docs: Vec<Document>) -> Vec<Document> {
    let mut seen = HashSet::new();
    docs.into_iter()
        .filter(|d| seen.insert(d.raw_text.clone()))
        .collect()
}

/// Uniform sample without replacement; the sample keeps input order.
pub fn sample_uniform(documents: &[Document], n: usize, seed: u64) -> Result<Vec<Document>> {
    if n > documents.len() {
        return Err(Error::invalid(format!(
            "cannot sample {n} items from {} documents",
            documents.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, documents.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| documents[i].clone()).collect())
}

fn check_unique<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::data(format!("duplicate example id {id:?}")));
        }
    }
    Ok(())
}

/// Labels jokes and non-jokes and splits them with per-class stratification.
///
/// Degenerate generated negatives are dropped first. The larger class is then
/// downsampled so every split is balanced. A generated negative lands in the
/// split of its source joke, so near-identical texts never straddle splits.
pub fn assemble_binary(
    jokes: &[Document],
    nonjokes: &[NonJoke],
    ratios: Ratios,
    seed: u64,
) -> Result<DatasetSplit<LabeledExample>> {
    ratios.validate()?;
    let excluded = nonjokes.iter().filter(|n| n.degenerate).count();
    let mut pos: Vec<LabeledExample> = jokes
        .iter()
        .map(|d| LabeledExample {
            id: d.id.clone(),
            text: d.raw_text.clone(),
            label: Label::Joke,
            source: JOKE_SOURCE.to_string(),
        })
        .collect();
    let mut neg: Vec<(LabeledExample, Option<&str>)> = nonjokes
        .iter()
        .filter(|n| !n.degenerate)
        .map(|n| {
            let example = LabeledExample {
                id: n.id.clone(),
                text: n.text.clone(),
                label: Label::Nonjoke,
                source: n.source.clone(),
            };
            (example, n.joke_id.as_deref())
        })
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::data(format!(
            "need jokes and non-jokes, got {} and {}",
            pos.len(),
            neg.len()
        )));
    }
    check_unique(
        pos.iter()
            .chain(neg.iter().map(|(e, _)| e))
            .map(|e| e.id.as_str()),
    )?;
    for e in pos.iter().chain(neg.iter().map(|(e, _)| e)) {
        e.check()
            .map_err(|m| Error::data(format!("{}: {m}", e.id)))?;
    }

    let mut counts = BTreeMap::new();
    counts.insert("input.joke".to_string(), pos.len());
    counts.insert("input.nonjoke".to_string(), neg.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let n = pos.len().min(neg.len());
    counts.insert("downsampled.joke".to_string(), pos.len() - n);
    counts.insert("downsampled.nonjoke".to_string(), neg.len() - n);
    pos.truncate(n);

    let (n_train, n_valid, n_test) = ratios.sizes(n);
    let quota = [n_train, n_valid, n_test];
    let mut split_of: HashMap<&str, usize> = HashMap::new();
    for (i, e) in pos.iter().enumerate() {
        split_of.insert(
            e.id.as_str(),
            usize::from(i >= n_train) + usize::from(i >= n_train + n_valid),
        );
    }
    // Linked negatives go first into their joke's split; at most one per
    // joke, so they never exceed the quota. Unlinked ones fill the rest.
    let mut linked: [Vec<LabeledExample>; 3] = Default::default();
    let mut free = Vec::new();
    for (e, joke) in neg {
        match joke.and_then(|j| split_of.get(j)) {
            Some(&s) => linked[s].push(e),
            None => free.push(e),
        }
    }
    let mut free = free.into_iter();
    let mut pos = pos.into_iter();
    let mut parts: [Vec<LabeledExample>; 3] = Default::default();
    for (s, part) in parts.iter_mut().enumerate() {
        part.extend(pos.by_ref().take(quota[s]));
        let mut negs = std::mem::take(&mut linked[s]);
        if negs.len() > quota[s] {
            return Err(Error::data(
                "several generated negatives share one source joke",
            ));
        }
        let missing = quota[s] - negs.len();
        negs.extend(free.by_ref().take(missing));
        part.extend(negs);
    }
    for (part, name) in parts.iter_mut().zip(["train", "valid", "test"]) {
        part.shuffle(&mut rng);
        let jokes_here = part.iter().filter(|e| e.label == Label::Joke).count();
        counts.insert(name.to_string(), part.len());
        counts.insert(format!("{name}.joke"), jokes_here);
        counts.insert(format!("{name}.nonjoke"), part.len() - jokes_here);
    }
    let [train, valid, test] = parts;
    Ok(DatasetSplit {
        train,
        valid,
        test,
        manifest: Manifest {
            task: Task::Single,
            seed,
            ratios: ratios.0,
            counts,
            excluded_degenerate: excluded,
        },
    })
}

/// Pairs every joke with its own generated negative.
///
/// The joke's side is decided by a fair seeded coin; pairs whose negative is
/// degenerate are dropped. Pair ids are joke ids, so a joke never spans splits.
pub fn assemble_pairwise(
    jokes: &[Document],
    negatives: &[NegativeExample],
    ratios: Ratios,
    seed: u64,
) -> Result<DatasetSplit<PairExample>> {
    ratios.validate()?;
    check_unique(jokes.iter().map(|d| d.id.as_str()))?;
    let by_source: HashMap<&str, &NegativeExample> = negatives
        .iter()
        .map(|n| (n.source_id.as_str(), n))
        .collect();
    let missing: Vec<&str> = jokes
        .iter()
        .map(|d| d.id.as_str())
        .filter(|id| !by_source.contains_key(id))
        .collect();
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(20).copied().collect();
        return Err(Error::data(format!(
            "{} jokes have no generated counterpart: {}{}",
            missing.len(),
            shown.join(", "),
            if missing.len() > shown.len() {
                ", ..."
            } else {
                ""
            }
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut excluded = 0;
    let mut pairs = Vec::with_capacity(jokes.len());
    for joke in jokes {
        let neg = by_source[joke.id.as_str()];
        let joke_first = rng.gen_bool(0.5);
        if neg.degenerate {
            excluded += 1;
            continue;
        }
        let (text_a, text_b, target) = if joke_first {
            (joke.raw_text.clone(), neg.text.clone(), Side::A)
        } else {
            (neg.text.clone(), joke.raw_text.clone(), Side::B)
        };
        pairs.push(PairExample {
            id: joke.id.clone(),
            text_a,
            text_b,
            target,
        });
    }
    if pairs.is_empty() {
        return Err(Error::data("no non-degenerate pairs"));
    }
    pairs.shuffle(&mut rng);
    let (n_train, n_valid, _) = ratios.sizes(pairs.len());
    let mut it = pairs.into_iter();
    let train: Vec<_> = it.by_ref().take(n_train).collect();
    let valid: Vec<_> = it.by_ref().take(n_valid).collect();
    let test: Vec<_> = it.collect();

    let mut counts = BTreeMap::new();
    counts.insert("input.joke".to_string(), jokes.len());
    for (name, part) in [("train", &train), ("valid", &valid), ("test", &test)] {
        let a = part.iter().filter(|p| p.target == Side::A).count();
        counts.insert(name.to_string(), part.len());
        counts.insert(format!("{name}.a"), a);
        counts.insert(format!("{name}.b"), part.len() - a);
    }
    Ok(DatasetSplit {
        train,
        valid,
        test,
        manifest: Manifest {
            task: Task::Pairwise,
            seed,
            ratios: ratios.0,
            counts,
            excluded_degenerate: excluded,
        },
    })
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).map_err(|e| Error::data(e.to_string()))?;
        buf.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| Error::data(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::data(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn export_jsonl<E: Example>(split: &DatasetSplit<E>, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for name in [SplitName::Train, SplitName::Valid, SplitName::Test] {
        write_jsonl(&dir.join(name.file_name()), split.part(name))?;
    }
    write_json_pretty(&dir.join("manifest.json"), &split.manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

/// Reads one split file, validating every example.
pub fn read_split_file<E: Example>(path: &Path) -> Result<Vec<E>> {
    let items: Vec<E> = read_jsonl(path)?;
    for (i, e) in items.iter().enumerate() {
        e.check().map_err(|m| {
            Error::data(format!(
                "{} example {} ({}): {m}",
                path.display(),
                i + 1,
                e.id()
            ))
        })?;
    }
    Ok(items)
}

pub fn import_jsonl<E: Example>(dir: &Path) -> Result<DatasetSplit<E>> {
    let manifest = read_manifest(dir)?;
    if manifest.task != E::TASK {
        return Err(Error::data(format!(
            "{}: dataset is for the {} task, expected {}",
            dir.display(),
            manifest.task,
            E::TASK
        )));
    }
    let split: DatasetSplit<E> = DatasetSplit {
        train: read_split_file(&dir.join(SplitName::Train.file_name()))?,
        valid: read_split_file(&dir.join(SplitName::Valid.file_name()))?,
        test: read_split_file(&dir.join(SplitName::Test.file_name()))?,
        manifest,
    };
    check_unique(
        split
            .train
            .iter()
            .chain(&split.valid)
            .chain(&split.test)
            .map(|e| e.id()),
    )?;
    Ok(split)
}
