//! Tokenization, unigram frequency statistics and n-gram extraction.
//!
//! The tokenizer is rule based: text is split on whitespace, punctuation
//! characters become single-character tokens, and apostrophes or hyphens
//! that sit inside a word stay part of it (`z'n`, `'s`, `zwart-wit`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Case-folded surface form.
    pub normalized: String,
    /// Byte offsets `[start, end)` into the raw text.
    pub span: (usize, usize),
    pub is_punct: bool,
    /// Alphabetic, possibly with internal apostrophes or hyphens.
    pub is_word: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub tokens: Vec<Token>,
}

impl Document {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        let tokens = tokenize(&raw_text);
        Document {
            id: id.into(),
            raw_text,
            tokens,
        }
    }

    /// Number of word tokens (the ones counted by [`FrequencyTable`]).
    pub fn word_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_word).count()
    }
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

fn is_hyphen(c: char) -> bool {
    matches!(c, '-' | '\u{2010}')
}

pub(crate) fn is_punct_char(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'..='\u{201F}'
                | '\u{2010}'..='\u{2015}'
                | '\u{2026}'
                | '\u{00A1}'
                | '\u{00BF}'
                | '\u{00AB}'
                | '\u{00BB}'
                | '\u{2022}'
                | '\u{00B7}'
        )
}

/// Splits `raw_text` into tokens whose spans cover every non-whitespace byte.
pub fn tokenize(raw_text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = raw_text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut run_start: Option<usize> = None;

    let end_of =
        |i: usize| -> usize { chars.get(i + 1).map(|&(b, _)| b).unwrap_or(raw_text.len()) };

    for i in 0..chars.len() {
        let (byte, c) = chars[i];
        if c.is_whitespace() {
            if let Some(start) = run_start.take() {
                tokens.push(make_token(raw_text, start, byte, false));
            }
            continue;
        }
        let prev = i.checked_sub(1).map(|j| chars[j].1);
        let next = chars.get(i + 1).map(|&(_, c)| c);
        let separator = if is_apostrophe(c) {
            !next.is_some_and(char::is_alphabetic)
        } else if is_hyphen(c) {
            let inside = run_start.is_some()
                && prev.is_some_and(char::is_alphanumeric)
                && next.is_some_and(char::is_alphanumeric);
            !inside
        } else {
            is_punct_char(c)
        };
        if separator {
            if let Some(start) = run_start.take() {
                tokens.push(make_token(raw_text, start, byte, false));
            }
            tokens.push(make_token(raw_text, byte, end_of(i), true));
        } else if run_start.is_none() {
            run_start = Some(byte);
        }
    }
    if let Some(start) = run_start {
        tokens.push(make_token(raw_text, start, raw_text.len(), false));
    }
    tokens
}

fn make_token(raw: &str, start: usize, end: usize, is_punct: bool) -> Token {
    let surface = &raw[start..end];
    let is_word = !is_punct
        && surface.chars().any(char::is_alphabetic)
        && surface
            .chars()
            .all(|c| c.is_alphabetic() || is_apostrophe(c) || is_hyphen(c));
    Token {
        surface: surface.to_string(),
        normalized: surface.to_lowercase(),
        span: (start, end),
        is_punct,
        is_word,
    }
}

/// Reassembles text from tokens and the original inter-token gaps.
///
/// `surfaces[i]` replaces the text of `tokens[i]`; everything between spans
/// is copied from `raw_text` unchanged.
pub fn rebuild(raw_text: &str, tokens: &[Token], surfaces: &[&str]) -> String {
    debug_assert_eq!(tokens.len(), surfaces.len());
    let mut out = String::with_capacity(raw_text.len() + 16);
    let mut cursor = 0;
    for (tok, surface) in tokens.iter().zip(surfaces) {
        out.push_str(&raw_text[cursor..tok.span.0]);
        out.push_str(surface);
        cursor = tok.span.1;
    }
    out.push_str(&raw_text[cursor..]);
    out
}

/// Unigram counts over normalized word tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub counts: BTreeMap<String, u64>,
    pub total_tokens: u64,
}

impl FrequencyTable {
    pub fn from_documents<'a>(documents: impl IntoIterator<Item = &'a Document>) -> Self {
        let mut table = FrequencyTable::default();
        for doc in documents {
            table.add_tokens(&doc.tokens);
        }
        table
    }

    pub fn add_tokens(&mut self, tokens: &[Token]) {
        for tok in tokens.iter().filter(|t| t.is_word) {
            *self.counts.entry(tok.normalized.clone()).or_default() += 1;
            self.total_tokens += 1;
        }
    }

    pub fn merge(&mut self, other: &FrequencyTable) {
        for (word, count) in &other.counts {
            *self.counts.entry(word.clone()).or_default() += count;
        }
        self.total_tokens += other.total_tokens;
    }

    /// Count of a normalized word; zero when unseen.
    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Nearest-rank percentile over the distinct words' counts.
    ///
    /// Counts are sorted ascending and the value at rank `ceil(q * V)` is
    /// returned (rank 1 when `q == 0`).
    pub fn percentile_threshold(&self, q: f64) -> Result<u64> {
        frequency_percentile_threshold(self, q)
    }
}

pub fn build_frequency_table(documents: &[Document]) -> FrequencyTable {
    FrequencyTable::from_documents(documents)
}

pub fn frequency_percentile_threshold(table: &FrequencyTable, q: f64) -> Result<u64> {
    if table.is_empty() {
        return Err(Error::data("empty frequency table"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("percentile {q} outside [0, 1]")));
    }
    let mut counts: Vec<u64> = table.counts.values().copied().collect();
    counts.sort_unstable();
    let v = counts.len();
    // q * V carries representation error (0.62 * 100 = 62.000000000000007).
    let rank = ((q * v as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(counts[rank.min(v) - 1])
}

/// An n-gram of normalized token forms.
pub type Ngram = Vec<String>;

/// All contiguous n-grams of orders `n_min..=n_max`, grouped by order and
/// listed left to right within each order.
pub fn extract_ngrams(tokens: &[Token], n_min: usize, n_max: usize) -> Vec<Ngram> {
    assert!(n_min >= 1 && n_min <= n_max, "need 1 <= n_min <= n_max");
    let forms: Vec<&str> = tokens.iter().map(|t| t.normalized.as_str()).collect();
    let mut grams = Vec::new();
    for n in n_min..=n_max {
        if n > forms.len() {
            break;
        }
        grams.extend(
            forms
                .windows(n)
                .map(|w| w.iter().map(|s| s.to_string()).collect::<Ngram>()),
        );
    }
    grams
}

/// Builds documents from lines of text. Blank lines are skipped; ids are
/// `<source>:<line-number>` with 1-based line numbers.
pub fn documents_from_lines(source: &str, content: &str) -> Vec<Document> {
    content
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let text = line.trim();
            (!text.is_empty()).then(|| Document::new(format!("{source}:{}", i + 1), text))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn splits_punctuation_off_words() {
        assert_eq!(
            surfaces("Kermit de sticker!"),
            ["Kermit", "de", "sticker", "!"]
        );
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \t").is_empty());
    }

    #[test]
    fn kermit_joke_has_thirteen_tokens() {
        let toks = tokenize("Wat is groen en plakt aan de muur? Kermit de sticker!");
        assert_eq!(toks.len(), 13);
        let punct: Vec<_> = toks
            .iter()
            .filter(|t| t.is_punct)
            .map(|t| t.surface.as_str())
            .collect();
        assert_eq!(punct, ["?", "!"]);
    }

    #[test]
    fn apostrophes_and_hyphens_stay_inside_words() {
        assert_eq!(
            surfaces("Hij pakt z'n zwart-wit fiets 's avonds."),
            [
                "Hij",
                "pakt",
                "z'n",
                "zwart-wit",
                "fiets",
                "'s",
                "avonds",
                "."
            ]
        );
        assert_eq!(
            surfaces("\"Nee\" - zegt -ie"),
            ["\"", "Nee", "\"", "-", "zegt", "-", "ie"]
        );
        assert_eq!(surfaces("Jans' fiets"), ["Jans", "'", "fiets"]);
    }

    #[test]
    fn token_flags() {
        let toks = tokenize("Ik heb 3 appels, toch?");
        let three = &toks[2];
        assert!(!three.is_word && !three.is_punct);
        assert!(toks[3].is_word);
        assert!(toks[4].is_punct);
        assert_eq!(tokenize("Kermit")[0].normalized, "kermit");
    }

    #[test]
    fn frequency_table_counts_words_only() {
        let t = build_frequency_table(&[Document::new("d", "a b a")]);
        assert_eq!(t.count("a"), 2);
        assert_eq!(t.count("b"), 1);
        assert_eq!(t.total_tokens, 3);
        let t = build_frequency_table(&[Document::new("d", "A, a! 42")]);
        assert_eq!(t.count("a"), 2);
        assert_eq!(t.total_tokens, 2);
        let empty = build_frequency_table(&[]);
        assert!(empty.is_empty());
        assert_eq!(empty.total_tokens, 0);
    }

    fn table_with(counts: &[u64]) -> FrequencyTable {
        let mut t = FrequencyTable::default();
        for (i, &c) in counts.iter().enumerate() {
            t.counts.insert(format!("w{i}"), c);
            t.total_tokens += c;
        }
        t
    }

    #[test]
    fn nearest_rank_percentile() {
        assert_eq!(
            table_with(&[1, 1, 2, 3, 5])
                .percentile_threshold(0.62)
                .unwrap(),
            3
        );
        assert_eq!(table_with(&[7]).percentile_threshold(0.62).unwrap(), 7);
        assert_eq!(
            table_with(&[1, 2, 3, 4]).percentile_threshold(1.0).unwrap(),
            4
        );
        assert_eq!(table_with(&[4, 2, 9]).percentile_threshold(0.0).unwrap(), 2);
        let hundred: Vec<u64> = (1..=100).collect();
        assert_eq!(table_with(&hundred).percentile_threshold(0.62).unwrap(), 62);
    }

    #[test]
    fn percentile_of_empty_table_fails() {
        let err = FrequencyTable::default()
            .percentile_threshold(0.5)
            .unwrap_err();
        assert_eq!(err.to_string(), "empty frequency table");
        assert!(table_with(&[1]).percentile_threshold(1.5).is_err());
    }

    #[test]
    fn ngram_examples() {
        let toks = tokenize("a b c");
        let g: Vec<String> = extract_ngrams(&toks, 1, 1)
            .iter()
            .map(|g| g.join(" "))
            .collect();
        assert_eq!(g, ["a", "b", "c"]);
        let g: Vec<String> = extract_ngrams(&toks, 1, 3)
            .iter()
            .map(|g| g.join(" "))
            .collect();
        assert_eq!(g, ["a", "b", "c", "a b", "b c", "a b c"]);
        assert!(extract_ngrams(&tokenize("a"), 2, 3).is_empty());
    }

    #[test]
    fn document_ids_follow_line_numbers() {
        let docs = documents_from_lines("jokes", "een\n\n  twee  \n");
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].id, "jokes:1");
        assert_eq!(docs[1].id, "jokes:3");
        assert_eq!(docs[1].raw_text, "twee");
    }

    proptest! {
        #[test]
        fn spans_reconstruct_input(text in "\\PC{0,60}") {
            let toks = tokenize(&text);
            let mut prev_end = 0;
            for t in &toks {
                prop_assert!(t.span.0 >= prev_end && t.span.0 < t.span.1);
                prop_assert!(text[prev_end..t.span.0].chars().all(char::is_whitespace));
                prop_assert_eq!(&text[t.span.0..t.span.1], t.surface.as_str());
                prop_assert_eq!(&t.normalized, &t.surface.to_lowercase());
                prop_assert!(!(t.is_word && t.is_punct));
                prev_end = t.span.1;
            }
            prop_assert!(text[prev_end..].chars().all(char::is_whitespace));
            let surf: Vec<&str> = toks.iter().map(|t| t.surface.as_str()).collect();
            prop_assert_eq!(rebuild(&text, &toks, &surf), text.clone());
        }

        #[test]
        fn ngram_count_formula(words in proptest::collection::vec("[a-z]{1,4}", 0..12)) {
            let toks = tokenize(&words.join(" "));
            let l = toks.len();
            let expected = l + l.saturating_sub(1) + l.saturating_sub(2);
            prop_assert_eq!(extract_ngrams(&toks, 1, 3).len(), expected);
        }

        #[test]
        fn frequency_tables_add(a in "[a-c ]{0,30}", b in "[a-c ]{0,30}") {
            let da = Document::new("a", a.as_str());
            let db = Document::new("b", b.as_str());
            let joint = build_frequency_table(&[da.clone(), db.clone()]);
            let mut sum = build_frequency_table(&[da]);
            sum.merge(&build_frequency_table(&[db]));
            prop_assert_eq!(joint, sum);
        }

        #[test]
        fn percentile_is_monotone(counts in proptest::collection::vec(1u64..50, 1..40),
                                  q1 in 0.0f64..=1.0, q2 in 0.0f64..=1.0) {
            let t = table_with(&counts);
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            prop_assert!(t.percentile_threshold(lo).unwrap() <= t.percentile_threshold(hi).unwrap());
        }
    }
}
