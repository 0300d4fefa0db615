//! Dynamic-template negative generation.
//!
//! A joke is turned into a non-joke by treating its low-frequency words as
//! slots and refilling each slot with a word carrying the same POS tag, drawn
//! from a handful of randomly sampled context jokes. Everything else (function
//! words, punctuation, spacing) is kept, so the output has the global shape of
//! the joke while its content stops making sense.

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::tagger::{TaggedToken, TaggerModel};
use crate::text::{rebuild, Document, FrequencyTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtParams {
    /// Words at or below this percentile of corpus frequency may be replaced.
    pub max_freq_percentile: f64,
    /// At least one replacement per this many characters.
    pub chars_per_replacement: usize,
    /// Number of jokes sampled to form the context pool.
    pub context_sample_size: usize,
    /// Fresh context pools tried when a slot's POS is missing, before skipping
    /// it. Slots the replacement minimum depends on get many more tries.
    pub max_context_resamples: usize,
    pub rng_seed: u64,
}

impl Default for DtParams {
    fn default() -> Self {
        DtParams {
            max_freq_percentile: 0.62,
            chars_per_replacement: 25,
            context_sample_size: 3,
            max_context_resamples: 5,
            rng_seed: 1,
        }
    }
}

impl DtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_freq_percentile > 0.0 && self.max_freq_percentile <= 1.0) {
            return Err(Error::invalid(format!(
                "max_freq_percentile must be in (0, 1], got {}",
                self.max_freq_percentile
            )));
        }
        if self.chars_per_replacement == 0 {
            return Err(Error::invalid("chars_per_replacement must be at least 1"));
        }
        if self.context_sample_size == 0 {
            return Err(Error::invalid("context_sample_size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplacementRecord {
    #[serde(rename = "original")]
    pub original_word: String,
    #[serde(rename = "replacement")]
    pub replacement_word: String,
    pub pos: String,
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeExample {
    pub source_id: String,
    pub text: String,
    pub replacements: Vec<ReplacementRecord>,
    /// No effective replacement: the "negative" is still the joke.
    pub degenerate: bool,
}

/// A word of the joke chosen for replacement, with every position it occupies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub word: String,
    pub pos: String,
    pub positions: Vec<usize>,
}

/// Context words grouped by POS tag; duplicates kept so that drawing
/// uniformly from a list weights words by occurrence.
pub type ContextPool = BTreeMap<String, Vec<String>>;

/// `max(1, floor(chars / chars_per_replacement))`.
pub fn min_replacements(raw_text: &str, params: &DtParams) -> usize {
    (raw_text.chars().count() / params.chars_per_replacement.max(1)).max(1)
}

/// Picks the rarest eligible words of a joke.
///
/// Eligible words are word tokens whose corpus count is at most the
/// percentile threshold. They are ordered by ascending count with ties broken
/// by a seeded shuffle, and the first `min_replacements(raw_text)` are kept.
pub fn select_slots<R: Rng>(
    raw_text: &str,
    tagged: &[TaggedToken],
    table: &FrequencyTable,
    params: &DtParams,
    rng: &mut R,
) -> Result<Vec<Slot>> {
    let threshold = table.percentile_threshold(params.max_freq_percentile)?;
    let mut slots = ranked_candidates(tagged, table, threshold, rng);
    slots.truncate(min_replacements(raw_text, params));
    Ok(slots)
}

/// All eligible slots, rarest first, ties in seeded random order.
fn ranked_candidates<R: Rng>(
    tagged: &[TaggedToken],
    table: &FrequencyTable,
    threshold: u64,
    rng: &mut R,
) -> Vec<Slot> {
    let mut candidates: Vec<Slot> = Vec::new();
    for (i, t) in tagged.iter().enumerate() {
        if !t.token.is_word {
            continue;
        }
        let word = &t.token.normalized;
        match candidates.iter_mut().find(|s| &s.word == word) {
            Some(slot) => slot.positions.push(i),
            None if table.count(word) <= threshold => candidates.push(Slot {
                word: word.clone(),
                pos: t.pos.clone(),
                positions: vec![i],
            }),
            None => {}
        }
    }
    candidates.shuffle(rng);
    candidates.sort_by_key(|s| table.count(&s.word));
    candidates
}

fn pool_from_tagged<'a>(
    docs: impl IntoIterator<Item = (&'a Document, &'a [String])>,
) -> ContextPool {
    let mut pool = ContextPool::new();
    for (doc, tags) in docs {
        for (tok, tag) in doc.tokens.iter().zip(tags) {
            if tok.is_word {
                pool.entry(tag.clone())
                    .or_default()
                    .push(tok.normalized.clone());
            }
        }
    }
    pool
}

/// Corpus indices sorted by document id, so context draws do not depend on
/// corpus order.
fn id_order(corpus: &[Document]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.sort_by(|&a, &b| corpus[a].id.cmp(&corpus[b].id));
    order
}

fn sample_context<R: Rng>(
    corpus: &[Document],
    order: &[usize],
    exclude_id: &str,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let eligible: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| corpus[i].id != exclude_id)
        .collect();
    if eligible.len() < k {
        return Err(Error::data(format!(
            "corpus too small for context sampling: need {k} jokes besides the source, have {}",
            eligible.len()
        )));
    }
    Ok(index::sample(rng, eligible.len(), k)
        .into_iter()
        .map(|j| eligible[j])
        .collect())
}

/// Samples `context_sample_size` jokes other than `exclude_id` and pools their
/// words by the tag `tagger` assigns.
pub fn build_context_pool<R: Rng>(
    corpus: &[Document],
    params: &DtParams,
    exclude_id: &str,
    tagger: &TaggerModel,
    rng: &mut R,
) -> Result<ContextPool> {
    let picked = sample_context(
        corpus,
        &id_order(corpus),
        exclude_id,
        params.context_sample_size,
        rng,
    )?;
    let tagged: Vec<(&Document, Vec<String>)> = picked
        .into_iter()
        .map(|i| {
            let doc = &corpus[i];
            let tags = tagger.tag(&doc.tokens).into_iter().map(|t| t.pos).collect();
            (doc, tags)
        })
        .collect();
    Ok(pool_from_tagged(
        tagged.iter().map(|(d, t)| (*d, t.as_slice())),
    ))
}

/// Copies the casing pattern of `pattern` onto a lowercase `word`.
fn transfer_case(pattern: &str, word: &str) -> String {
    let letters: Vec<char> = pattern.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase()) {
        return word.to_uppercase();
    }
    match pattern.chars().next() {
        Some(c) if c.is_uppercase() => {
            let mut chars = word.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars).collect(),
                None => String::new(),
            }
        }
        _ => word.to_string(),
    }
}

/// Pool redraws allowed for a slot the replacement minimum depends on.
const FLOOR_RESAMPLES: usize = 1000;

/// Negative generator over a fixed joke corpus.
///
/// The corpus is tagged once up front; context pools are drawn from it.
pub struct Generator<'a> {
    corpus: &'a [Document],
    order: Vec<usize>,
    corpus_tags: Vec<Vec<String>>,
    table: &'a FrequencyTable,
    tagger: &'a TaggerModel,
    params: DtParams,
    threshold: u64,
}

impl<'a> Generator<'a> {
    pub fn new(
        corpus: &'a [Document],
        table: &'a FrequencyTable,
        tagger: &'a TaggerModel,
        params: DtParams,
    ) -> Result<Self> {
        params.validate()?;
        let threshold = table.percentile_threshold(params.max_freq_percentile)?;
        let corpus_tags = corpus
            .par_iter()
            .map(|d| tagger.tag(&d.tokens).into_iter().map(|t| t.pos).collect())
            .collect();
        Ok(Generator {
            corpus,
            order: id_order(corpus),
            corpus_tags,
            table,
            tagger,
            params,
            threshold,
        })
    }

    pub fn params(&self) -> &DtParams {
        &self.params
    }

    /// Frequency cutoff for replaceable words.
    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    fn pool<R: Rng>(&self, exclude_id: &str, rng: &mut R) -> Result<ContextPool> {
        let picked = sample_context(
            self.corpus,
            &self.order,
            exclude_id,
            self.params.context_sample_size,
            rng,
        )?;
        Ok(pool_from_tagged(picked.into_iter().map(|i| {
            (&self.corpus[i], self.corpus_tags[i].as_slice())
        })))
    }

    /// Generates with the per-document stream `derive_seed(rng_seed, joke.id)`.
    pub fn generate(&self, joke: &Document) -> Result<NegativeExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.params.rng_seed, &joke.id));
        self.generate_with_rng(joke, &mut rng)
    }

    pub fn generate_with_rng<R: Rng>(
        &self,
        joke: &Document,
        rng: &mut R,
    ) -> Result<NegativeExample> {
        let tagged = self.tagger.tag(&joke.tokens);
        let wanted = min_replacements(&joke.raw_text, &self.params);
        let candidates = ranked_candidates(&tagged, self.table, self.threshold, rng);
        let mut records = Vec::new();
        if !candidates.is_empty() {
            let mut pool = self.pool(&joke.id, rng)?;
            // A skipped slot passes its turn to the next-rarest candidate. When
            // no candidate is left to take over, the minimum wins and pools
            // keep being redrawn.
            let total = candidates.len();
            for (i, slot) in candidates.into_iter().enumerate() {
                if records.len() == wanted {
                    break;
                }
                let needed = records.len() + (total - i) <= wanted;
                let budget = if needed {
                    FLOOR_RESAMPLES.max(self.params.max_context_resamples)
                } else {
                    self.params.max_context_resamples
                };
                let mut resamples = 0;
                loop {
                    let options: Vec<&String> = pool
                        .get(&slot.pos)
                        .map(|ws| ws.iter().filter(|w| **w != slot.word).collect())
                        .unwrap_or_default();
                    if let Some(choice) = options.choose(rng) {
                        records.push(ReplacementRecord {
                            original_word: slot.word.clone(),
                            replacement_word: (*choice).clone(),
                            pos: slot.pos.clone(),
                            positions: slot.positions.clone(),
                        });
                        break;
                    }
                    if resamples == budget {
                        if needed {
                            log::warn!("{}: no {} context word for {:?} in {budget} pools, below the minimum", joke.id, slot.pos, slot.word);
                        } else {
                            log::debug!(
                                "{}: no {} context word for {:?}, slot skipped",
                                joke.id,
                                slot.pos,
                                slot.word
                            );
                        }
                        break;
                    }
                    pool = self.pool(&joke.id, rng)?;
                    resamples += 1;
                }
            }
        }
        Ok(apply_replacements(joke, records))
    }
}

fn apply_replacements(joke: &Document, records: Vec<ReplacementRecord>) -> NegativeExample {
    let mut surfaces: Vec<String> = joke.tokens.iter().map(|t| t.surface.clone()).collect();
    for rec in &records {
        for &p in &rec.positions {
            surfaces[p] = transfer_case(&joke.tokens[p].surface, &rec.replacement_word);
        }
    }
    let refs: Vec<&str> = surfaces.iter().map(String::as_str).collect();
    let text = rebuild(&joke.raw_text, &joke.tokens, &refs);
    let unchanged = joke
        .tokens
        .iter()
        .zip(&surfaces)
        .all(|(t, s)| t.normalized == s.to_lowercase());
    NegativeExample {
        source_id: joke.id.clone(),
        text,
        degenerate: records.is_empty() || unchanged,
        replacements: records,
    }
}

/// Generates one negative for `joke`, using `table` (built over the joke
/// corpus) and context jokes from `corpus`.
pub fn generate_negative(
    joke: &Document,
    corpus: &[Document],
    table: &FrequencyTable,
    tagger: &TaggerModel,
    params: &DtParams,
) -> Result<NegativeExample> {
    Generator::new(corpus, table, tagger, params.clone())?.generate(joke)
}

/// One negative per joke, each from its own seeded stream, so the result
/// does not depend on corpus order or on how the work is scheduled.
pub fn generate_negative_corpus(
    corpus: &[Document],
    tagger: &TaggerModel,
    params: &DtParams,
) -> Result<Vec<NegativeExample>> {
    if corpus.is_empty() {
        return Err(Error::data("joke corpus is empty"));
    }
    let table = FrequencyTable::from_documents(corpus);
    let generator = Generator::new(corpus, &table, tagger, params.clone())?;
    corpus
        .par_iter()
        .map(|joke| generator.generate(joke))
        .collect()
}
