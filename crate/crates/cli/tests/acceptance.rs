//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release -p mirth-cli --test acceptance`. Pass
//! substrings as arguments to run a subset, e.g. `-- ci determinism`.
//! `MIRTH_ACCEPTANCE_TRIALS` sets the search budget of the benchmark criteria.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mirth::datasets::{assemble_binary, DatasetSplit, Label, LabeledExample, NonJoke, Ratios};
use mirth::dyntemplate::{generate_negative, generate_negative_corpus, min_replacements, DtParams};
use mirth::eval::{binomial_ci_halfwidth, expected_max_curve};
use mirth::nb::NbClassifier;
use mirth::neural::{
    accuracy, prepare_all, random_search, select_best, train_classifier, Architecture, Classifier,
    EmbeddingMatrix, EncoderConfig, OovPolicy, Prepared, SearchSpace, TrainConfig, PAD,
};
use mirth::synthetic::{generate, SynthConfig, SynthCorpus};
use mirth::tagger::{train_tagger, TaggedSentence, TaggerModel};
use mirth::text::{documents_from_lines, tokenize, Document, FrequencyTable};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Fixture {
    corpus: SynthCorpus,
    tagger: TaggerModel,
    jokes: Vec<Document>,
}

fn fixture() -> Fixture {
    let corpus = generate(&SynthConfig::default()).expect("synthetic corpus");
    let tagger = train_tagger(&corpus.treebank, 5, 1).expect("tagger");
    let jokes = documents_from_lines("jokes", &corpus.jokes.join("\n"));
    Fixture {
        corpus,
        tagger,
        jokes,
    }
}

fn dt_invariants(fx: &Fixture) -> Outcome {
    let sample: Vec<Document> = fx.jokes[..500].to_vec();
    let params = DtParams::default();
    let negatives =
        generate_negative_corpus(&sample, &fx.tagger, &params).map_err(|e| e.to_string())?;

    // Oracles computed here, independently of the generator.
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut tagged_pairs: HashSet<(String, String)> = HashSet::new();
    for d in &sample {
        let tags = fx.tagger.tag(&d.tokens);
        for t in tags.iter().filter(|t| t.token.is_word) {
            *counts.entry(t.token.normalized.clone()).or_default() += 1;
            tagged_pairs.insert((t.token.normalized.clone(), t.pos.clone()));
        }
    }
    let mut sorted: Vec<u64> = counts.values().copied().collect();
    sorted.sort_unstable();
    let rank = ((0.62 * sorted.len() as f64) - 1e-9).ceil() as usize;
    let threshold = sorted[rank - 1];

    let mut failures: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fail = |what: &'static str| *failures.entry(what).or_default() += 1;
    for (joke, neg) in sample.iter().zip(&negatives) {
        let out = tokenize(&neg.text);
        if out.len() != joke.tokens.len() {
            fail("token count");
            continue;
        }
        for (a, b) in joke.tokens.iter().zip(&out) {
            if (a.is_punct || b.is_punct) && a.surface != b.surface {
                fail("punctuation");
            }
        }
        for t in out.iter().filter(|t| t.is_word) {
            if !counts.contains_key(&t.normalized) {
                fail("closed vocabulary");
            }
        }
        let joke_tags = fx.tagger.tag(&joke.tokens);
        let mut replaced: HashMap<usize, &str> = HashMap::new();
        for r in &neg.replacements {
            if !tagged_pairs.contains(&(r.replacement_word.clone(), r.pos.clone())) {
                fail("replacement POS occurs in corpus");
            }
            if r.original_word == r.replacement_word {
                fail("replacement differs");
            }
            let all: Vec<usize> = (0..joke.tokens.len())
                .filter(|&i| joke.tokens[i].normalized == r.original_word)
                .collect();
            if all != r.positions {
                fail("all occurrences");
            }
            for &p in &r.positions {
                if joke_tags[p].pos != r.pos {
                    fail("slot POS");
                }
                if out[p].normalized != r.replacement_word {
                    fail("same replacement everywhere");
                }
                replaced.insert(p, &r.replacement_word);
            }
        }
        for (i, (a, b)) in joke.tokens.iter().zip(&out).enumerate() {
            if !replaced.contains_key(&i) && a.surface != b.surface {
                fail("untouched tokens unchanged");
            }
        }
        let eligible: BTreeSet<&str> = joke
            .tokens
            .iter()
            .filter(|t| t.is_word && counts[&t.normalized] <= threshold)
            .map(|t| t.normalized.as_str())
            .collect();
        let floor = (joke.raw_text.chars().count() / 25).max(1);
        if floor != min_replacements(&joke.raw_text, &params) {
            fail("floor formula");
        }
        if !neg.degenerate && neg.replacements.len() < floor.min(eligible.len()) {
            eprintln!(
                "DEBUG {} | {} | {:?} | {:?}",
                joke.raw_text, neg.text, eligible, neg.replacements
            );
            fail("replacement floor");
        }
    }
    let again =
        generate_negative_corpus(&sample, &fx.tagger, &params).map_err(|e| e.to_string())?;
    if again != negatives {
        fail("seed determinism");
    }
    let shuffled: Vec<Document> = sample.iter().rev().cloned().collect();
    let mut reordered =
        generate_negative_corpus(&shuffled, &fx.tagger, &params).map_err(|e| e.to_string())?;
    reordered.reverse();
    if reordered != negatives {
        fail("corpus order independence");
    }
    let other = generate_negative_corpus(
        &sample,
        &fx.tagger,
        &DtParams {
            rng_seed: 2,
            ..params.clone()
        },
    )
    .map_err(|e| e.to_string())?;
    if other == negatives {
        fail("seed sensitivity");
    }
    let degenerate = negatives.iter().filter(|n| n.degenerate).count();
    check(
        failures.is_empty(),
        format!(
            "{} negatives ({degenerate} degenerate), violations {failures:?}",
            negatives.len()
        ),
    )
}

fn tagged(words: &str, tags: &[&str]) -> TaggedSentence {
    words
        .split(' ')
        .zip(tags)
        .map(|(w, t)| (w.to_string(), t.to_string()))
        .collect()
}

fn kermit() -> Outcome {
    let joke_tags = [
        "PRON", "AUX", "ADJ", "CCONJ", "VERB", "ADP", "DET", "NOUN", "PUNCT", "PROPN", "DET",
        "NOUN", "PUNCT",
    ];
    let joke = tagged(
        "Wat is groen en plakt aan de muur ? Kermit de sticker !",
        &joke_tags,
    );
    let ctx = tagged("De spin telefoneert .", &["DET", "NOUN", "VERB", "PUNCT"]);
    let treebank: Vec<TaggedSentence> = (0..6).flat_map(|_| [joke.clone(), ctx.clone()]).collect();
    let tagger = train_tagger(&treebank, 10, 1).map_err(|e| e.to_string())?;

    let source = Document::new(
        "jokes:1",
        "Wat is groen en plakt aan de muur? Kermit de sticker!",
    );
    let corpus = vec![
        source.clone(),
        Document::new("ctx:1", "De spin telefoneert."),
        Document::new("ctx:2", "De spin telefoneert."),
        Document::new("ctx:3", "De spin telefoneert."),
    ];
    // Frequent frame words and a tail of rare fillers put the threshold at 1:
    // "plakt" and "sticker" are then the only replaceable words of the joke.
    let mut table_docs: Vec<Document> = (0..5)
        .map(|i| {
            Document::new(
                format!("f{i}"),
                "wat is groen en aan de muur kermit spin telefoneert",
            )
        })
        .collect();
    table_docs.push(Document::new(
        "rare",
        "plakt sticker a1 b1 c1 d1 e1 f1 g1 h1 i1 j1 k1 l1 m1 n1 o1 p1 q1 r1",
    ));
    let table = FrequencyTable::from_documents(&table_docs);
    let neg = generate_negative(&source, &corpus, &table, &tagger, &DtParams::default())
        .map_err(|e| e.to_string())?;
    let want = "Wat is groen en telefoneert aan de muur? Kermit de spin!";
    check(
        neg.text == want && !neg.degenerate,
        format!("got {:?}", neg.text),
    )
}

fn nb_accuracy(split: &DatasetSplit<LabeledExample>) -> Result<f64, String> {
    let texts: Vec<&str> = split.train.iter().map(|e| e.text.as_str()).collect();
    let labels: Vec<Label> = split.train.iter().map(|e| e.label).collect();
    let nb = NbClassifier::<f64>::fit(&texts, &labels, 1.0).map_err(|e| e.to_string())?;
    Ok(split
        .test
        .iter()
        .filter(|e| nb.predict(&e.text).0 == e.label)
        .count() as f64
        / split.test.len() as f64)
}

/// Random search, best trial by validation accuracy, then test accuracy.
fn searched_test_accuracy(
    encoder: &EncoderConfig,
    embeddings: &EmbeddingMatrix<f64>,
    split: &DatasetSplit<LabeledExample>,
    trials: usize,
) -> Result<(f64, f64), String> {
    let extra: Vec<&str> = split.test.iter().map(|e| e.text.as_str()).collect();
    let mut best: Option<(f64, Classifier<f64>)> = None;
    let records = random_search(
        &SearchSpace::default(),
        encoder,
        &TrainConfig::default(),
        trials,
        1,
        |_, cfg| {
            let trained = train_classifier(
                &cfg.encoder,
                embeddings,
                &split.train,
                &split.valid,
                &extra,
                &cfg.train,
            )?;
            let acc = trained.report.final_val_accuracy().unwrap_or(0.0);
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, trained.model));
            }
            Ok(trained.report)
        },
    )
    .map_err(|e| e.to_string())?;
    let selected = select_best(&records).ok_or("every trial failed")?;
    let (val, model) = best.ok_or("no model")?;
    if records[selected].validation_accuracy != Some(val) {
        return Err("selection disagrees with the kept model".into());
    }
    let (test, _) = prepare_all(&model, &split.test);
    Ok((val, accuracy(&model, &test)))
}

fn benchmark(fx: &Fixture, trials: usize) -> Vec<(&'static str, Outcome)> {
    let start = Instant::now();
    let negatives = match generate_negative_corpus(&fx.jokes, &fx.tagger, &DtParams::default()) {
        Ok(n) => n,
        Err(e) => return vec![("benchmark setup", Err(e.to_string()))],
    };
    let dt_nonjokes: Vec<NonJoke> = negatives.iter().map(NonJoke::from).collect();
    let news = documents_from_lines("news", &fx.corpus.news.join("\n"));
    let news_nonjokes: Vec<NonJoke> = news
        .iter()
        .map(|d| NonJoke::from_document(d, "news"))
        .collect();
    let dt = assemble_binary(&fx.jokes, &dt_nonjokes, Ratios::default(), 1).expect("dt split");
    let nw = assemble_binary(&fx.jokes, &news_nonjokes, Ratios::default(), 1).expect("news split");
    let emb = &fx.corpus.embeddings;
    let mut out = Vec::new();

    out.push((
        "Benchmark (a): NB on jokes vs dyntemplate in [0.45, 0.60]",
        nb_accuracy(&dt).and_then(|acc| {
            check(
                (0.45..=0.60).contains(&acc),
                format!("accuracy {acc:.4} (n={})", dt.test.len()),
            )
        }),
    ));

    let cnn_news = searched_test_accuracy(&EncoderConfig::cnn(), emb, &nw, trials);
    let cnn_dt = searched_test_accuracy(&EncoderConfig::cnn(), emb, &dt, trials);
    out.push((
        "Benchmark (b): CNN news minus CNN dyntemplate >= 0.20",
        match (cnn_news, cnn_dt) {
            (Ok((vn, tn)), Ok((vd, td))) => check(
                tn - td >= 0.20,
                format!(
                    "news {tn:.4} (val {vn:.4}), dyntemplate {td:.4} (val {vd:.4}), gap {:.4}",
                    tn - td
                ),
            ),
            (Err(e), _) | (_, Err(e)) => Err(e),
        },
    ));

    out.push((
        "Benchmark (c): LSTM on dyntemplate <= 0.60",
        searched_test_accuracy(&EncoderConfig::lstm(8), emb, &dt, trials).and_then(|(v, t)| {
            check(
                t <= 0.60,
                format!(
                    "accuracy {t:.4} (val {v:.4}, n={}, {trials} trials, {:.0?} total)",
                    dt.test.len(),
                    start.elapsed()
                ),
            )
        }),
    ));
    out
}

/// Central differences against backprop on sampled coordinates.
fn gradient_error(
    model: &Classifier<f64>,
    example: &Prepared,
    samples: usize,
    seed: u64,
) -> (f64, usize) {
    let mut grads = model.zero_grads();
    model.loss_and_grad(example, None, &mut grads);
    let dim = model.architecture().embedding_dim;
    let rows: BTreeSet<usize> = example
        .sequences
        .iter()
        .flatten()
        .copied()
        .filter(|&r| r != PAD)
        .collect();
    let mut coords = Vec::new();
    for (k, t) in model.tensors().iter().enumerate() {
        if !t.trainable {
            continue;
        }
        if k == 0 {
            coords.extend(
                rows.iter()
                    .flat_map(|&r| (r * dim..(r + 1) * dim).map(move |i| (k, i))),
            );
        } else {
            coords.extend((0..t.data.len()).map(|i| (k, i)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, coords.len(), samples.min(coords.len()));
    let mut probe = model.clone();
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for idx in picked {
        let (k, i) = coords[idx];
        let orig = probe.tensors()[k].data[i];
        probe.tensors_mut()[k].data[i] = orig + eps;
        let up = probe.loss(example);
        probe.tensors_mut()[k].data[i] = orig - eps;
        let down = probe.loss(example);
        probe.tensors_mut()[k].data[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let analytic = grads[k][i];
        let err = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-12);
        worst = worst.max(err);
    }
    (worst, samples.min(coords.len()))
}

fn gradient_oracle() -> Outcome {
    let words = [
        "wat", "is", "groen", "en", "plakt", "aan", "de", "muur", "kermit", "sticker",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let emb = EmbeddingMatrix::from_rows(
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
    .map_err(|e| e.to_string())?;
    let texts = [
        "Wat is groen en plakt aan de muur?",
        "Kermit de sticker onbekend!",
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, encoder) in [
        (
            "cnn",
            EncoderConfig {
                channels: 12,
                ..EncoderConfig::cnn()
            },
        ),
        ("lstm", EncoderConfig::lstm(16)),
    ] {
        for inputs in [1, 2] {
            let arch = Architecture {
                encoder: encoder.clone().with_trainable_embeddings(inputs == 2),
                inputs,
                embedding_dim: 8,
                max_sequence_length: 64,
                oov_policy: OovPolicy::MeanVector,
            };
            let model = Classifier::new(arch, &emb, words, 11).map_err(|e| e.to_string())?;
            let (example, _) = model.prepare(&texts[..inputs], 1);
            let (err, n) = gradient_error(&model, &example, 300, 5 + inputs as u64);
            ok &= err < 1e-4 && n >= 200;
            lines.push(format!(
                "{name}/{}: {err:.2e} over {n}",
                if inputs == 1 { "single" } else { "pairwise" }
            ));
        }
    }
    check(ok, lines.join(", "))
}

fn expected_max_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..20 {
        let len = rng.gen_range(3..=30);
        let accs: Vec<f64> = (0..len).map(|_| rng.gen_range(0.4..1.0)).collect();
        let curve = expected_max_curve(&accs, 20).map_err(|e| e.to_string())?;
        let mean = accs.iter().sum::<f64>() / len as f64;
        ok &= curve.points[0].1 == mean;
        ok &= curve.points.windows(2).all(|w| w[1].1 >= w[0].1);
        for n in [2usize, 5, 10] {
            let draws = 1_000_000;
            let mut total = 0.0;
            for _ in 0..draws {
                let mut m = f64::NEG_INFINITY;
                for _ in 0..n {
                    m = m.max(accs[rng.gen_range(0..len)]);
                }
                total += m;
            }
            worst = worst.max((total / draws as f64 - curve.points[n - 1].1).abs());
        }
    }
    check(
        ok && worst < 1e-3,
        format!("max |closed form - Monte Carlo| = {worst:.2e}; n=1 mean and monotone: {ok}"),
    )
}

fn ci_arithmetic() -> Outcome {
    let a = binomial_ci_halfwidth(0.51f64, 1000);
    let b = binomial_ci_halfwidth(0.988f64, 970);
    check(
        (a - 0.031).abs() <= 0.0005 && (b - 0.007).abs() <= 0.0005,
        format!("(0.51, 1000) -> {a:.5}, (0.988, 970) -> {b:.5}"),
    )
}

fn run_pipeline(root: &Path) -> Result<(), String> {
    let steps: &[&[&str]] = &[
        &[
            "synth-corpus",
            "--out",
            "syn",
            "--jokes",
            "200",
            "--news",
            "200",
            "--proverbs",
            "60",
            "--treebank",
            "300",
        ],
        &[
            "ingest",
            "--in",
            "syn/jokes.txt",
            "--source",
            "jokes",
            "--out",
            "jokes",
        ],
        &[
            "ingest",
            "--in",
            "syn/news.txt",
            "--source",
            "news",
            "--out",
            "news",
        ],
        &[
            "train-tagger",
            "--conllu",
            "syn/treebank.conllu",
            "--out",
            "models/tagger.txt",
        ],
        &[
            "tag",
            "--model",
            "models/tagger.txt",
            "--in",
            "jokes",
            "--out",
            "tagged/jokes.jsonl",
        ],
        &[
            "generate-negatives",
            "--jokes",
            "jokes",
            "--tagger",
            "models/tagger.txt",
            "--seed",
            "4",
            "--out",
            "dt/negatives.jsonl",
        ],
        &[
            "make-dataset",
            "--jokes",
            "jokes",
            "--nonjokes",
            "dt/negatives.jsonl",
            "--task",
            "single",
            "--out",
            "data/dt",
        ],
        &[
            "make-dataset",
            "--jokes",
            "jokes",
            "--nonjokes",
            "dt/negatives.jsonl",
            "--task",
            "pairwise",
            "--out",
            "data/pair",
        ],
        &[
            "make-dataset",
            "--jokes",
            "jokes",
            "--nonjokes",
            "news",
            "--out",
            "data/news",
        ],
        &[
            "train", "--model", "nb", "--data", "data/dt", "--out", "runs/nb",
        ],
        &[
            "train",
            "--model",
            "cnn",
            "--data",
            "data/news",
            "--embeddings",
            "syn/embeddings.txt",
            "--epochs",
            "2",
            "--out",
            "runs/cnn",
        ],
        &[
            "search",
            "--model",
            "lstm",
            "--trials",
            "2",
            "--data",
            "data/pair",
            "--embeddings",
            "syn/embeddings.txt",
            "--epochs",
            "1",
            "--out",
            "runs/search",
        ],
        &[
            "eval",
            "--model-dir",
            "runs/cnn",
            "--data",
            "data/news",
            "--split",
            "test",
            "--out",
            "eval/cnn.json",
            "--predictions",
            "eval/cnn_preds.jsonl",
        ],
        &[
            "score-external",
            "--preds",
            "eval/cnn_preds.jsonl",
            "--data",
            "data/news",
            "--split",
            "test",
            "--out",
            "eval/external.json",
        ],
        &[
            "cross-domain",
            "--model-dir",
            "runs/nb",
            "--corpus",
            "syn/proverbs.txt",
            "--out",
            "eval/proverbs.json",
        ],
    ];
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_mirth"))
            .args(*args)
            .current_dir(root)
            .env_remove("MIRTH_LOG")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "{args:?} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
    }
    Ok(())
}

fn files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("readable dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .expect("under root")
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_pipeline(a.path())?;
    run_pipeline(b.path())?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    let differing: Vec<&String> = fa.keys().filter(|k| fa.get(*k) != fb.get(*k)).collect();
    check(
        fa.len() == fb.len() && differing.is_empty() && fa.len() > 20,
        format!("{} artifacts compared, differing: {differing:?}", fa.len()),
    )
}

fn main() {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let wanted = |name: &str| {
        filters.is_empty()
            || filters
                .iter()
                .any(|f| name.to_lowercase().contains(&f.to_lowercase()))
    };
    let trials: usize = std::env::var("MIRTH_ACCEPTANCE_TRIALS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);

    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let needs_fixture = wanted("dt-generator invariants") || wanted("benchmark");
    let fx = needs_fixture.then(fixture);
    if let Some(fx) = &fx {
        if wanted("dt-generator invariants") {
            results.push((
                "DT-generator invariants on 500 negatives",
                dt_invariants(fx),
            ));
        }
    }
    if wanted("kermit fixture") {
        results.push(("Kermit fixture", kermit()));
    }
    if let Some(fx) = &fx {
        if wanted("benchmark") {
            results.extend(benchmark(fx, trials));
        }
    }
    if wanted("gradient oracle") {
        results.push((
            "Gradient oracle < 1e-4, CNN/LSTM single/pairwise",
            gradient_oracle(),
        ));
    }
    if wanted("expected-max estimator") {
        results.push((
            "Expected-max estimator vs Monte Carlo",
            expected_max_oracle(),
        ));
    }
    if wanted("ci arithmetic") {
        results.push(("CI arithmetic", ci_arithmetic()));
    }
    if wanted("determinism") {
        results.push(("Determinism: CLI pipeline byte-identical", determinism()));
    }

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
