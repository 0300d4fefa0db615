use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mirth::datasets::{
    assemble_binary, assemble_pairwise, dedup_documents, export_jsonl, import_jsonl, ingest_corpus,
    read_jsonl, read_manifest, write_json_pretty, write_jsonl, DatasetSplit, Label, LabeledExample,
    NonJoke, PairExample, Ratios, Side, SplitName, Task,
};
use mirth::dyntemplate::{generate_negative_corpus, DtParams, NegativeExample};
use mirth::eval::{
    cross_domain_rate, evaluate, expected_max_curve, score_external as score_file, EvalReport,
    ExternalPrediction, Gold,
};
use mirth::nb::NbClassifier;
use mirth::neural::{
    load_embeddings, random_search, select_best, train as train_neural, validation_accuracies,
    write_trials, Classifier, EmbeddingMatrix, EncoderConfig, EncoderKind, OovPolicy, SearchSpace,
    TrainConfig, TrainingExample, TrialConfig,
};
use mirth::synthetic::{generate, SynthConfig};
use mirth::tagger::{parse_conllu, train_tagger as fit_tagger, TaggerModel};
use mirth::text::Document;
use mirth::{Error, Result};

use crate::{
    CrossDomainArgs, EvalArgs, GenerateArgs, IngestArgs, MakeDatasetArgs, ModelKind, NeuralKind,
    NeuralOptions, OovArg, ScoreExternalArgs, SearchArgs, SplitArg, SynthArgs, TagArgs, TrainArgs,
    TrainTaggerArgs,
};

const DOCUMENTS_FILE: &str = "documents.jsonl";
const MODEL_FILE: &str = "model.txt";
const MODEL_INFO_FILE: &str = "model.json";
const CONFIG_FILE: &str = "config.json";

#[derive(Serialize)]
struct RunConfig<'a, A: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    args: &'a A,
}

fn run_config<'a, A: Serialize>(command: &'a str, args: &'a A) -> RunConfig<'a, A> {
    RunConfig {
        tool: "mirth",
        version: env!("CARGO_PKG_VERSION"),
        command,
        args,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_dir_config<A: Serialize>(dir: &Path, command: &str, args: &A) -> Result<()> {
    write_json_pretty(&dir.join(CONFIG_FILE), &run_config(command, args))
}

/// For single-file outputs the config sits next to the file.
fn write_file_config<A: Serialize>(file: &Path, command: &str, args: &A) -> Result<()> {
    write_json_pretty(&sidecar(file, "config.json"), &run_config(command, args))
}

fn sidecar(file: &Path, suffix: &str) -> PathBuf {
    let mut name = file.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    file.with_file_name(name)
}

fn ensure_parent(file: &Path) -> Result<()> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

fn split_name(s: SplitArg) -> SplitName {
    match s {
        SplitArg::Train => SplitName::Train,
        SplitArg::Valid => SplitName::Valid,
        SplitArg::Test => SplitName::Test,
    }
}

#[derive(Deserialize)]
struct DocRecord {
    id: String,
    #[serde(alias = "raw_text")]
    text: String,
}

fn is_jsonl(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

fn default_source(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".into())
}

/// Documents from an `ingest` output (a directory or its JSONL file) or from
/// a plain one-text-per-line file.
fn read_corpus(path: &Path, source: Option<&str>) -> Result<Vec<Document>> {
    let path = if path.is_dir() {
        path.join(DOCUMENTS_FILE)
    } else {
        path.to_path_buf()
    };
    if is_jsonl(&path) {
        let records: Vec<DocRecord> = read_jsonl(&path)?;
        let mut seen = std::collections::HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::data(format!(
                    "{}: duplicate document id {}",
                    path.display(),
                    r.id
                )));
            }
        }
        Ok(records
            .into_iter()
            .map(|r| Document::new(r.id, r.text))
            .collect())
    } else {
        let source = source
            .map(str::to_string)
            .unwrap_or_else(|| default_source(&path));
        ingest_corpus(&path, &source)
    }
}

pub fn ingest(a: &IngestArgs) -> Result<()> {
    if a.source.is_empty() || a.source.contains(':') {
        return Err(Error::invalid(
            "--source must be non-empty and must not contain ':'",
        ));
    }
    let docs = dedup_documents(ingest_corpus(&a.input, &a.source)?);
    create_dir(&a.out)?;
    write_jsonl(&a.out.join(DOCUMENTS_FILE), &docs)?;
    write_dir_config(&a.out, "ingest", a)?;
    println!("{} documents", docs.len());
    Ok(())
}

pub fn train_tagger(a: &TrainTaggerArgs) -> Result<()> {
    let text = fs::read_to_string(&a.conllu).map_err(|e| Error::io(&a.conllu, e))?;
    let sentences = parse_conllu(&text)?;
    if sentences.is_empty() {
        return Err(Error::data(format!("{}: no sentences", a.conllu.display())));
    }
    let model = fit_tagger(&sentences, a.epochs, a.seed)?;
    ensure_parent(&a.out)?;
    model.save(&a.out)?;
    write_file_config(&a.out, "train-tagger", a)?;
    println!(
        "{} sentences, {} tags",
        sentences.len(),
        model.tagset().len()
    );
    Ok(())
}

#[derive(Serialize)]
struct TaggedForm<'a> {
    form: &'a str,
    pos: &'a str,
}

#[derive(Serialize)]
struct TaggedDocument<'a> {
    id: &'a str,
    tokens: Vec<TaggedForm<'a>>,
}

pub fn tag(a: &TagArgs) -> Result<()> {
    let tagger = TaggerModel::load(&a.model)?;
    let docs = read_corpus(&a.input, None)?;
    let tags: Vec<Vec<String>> = docs
        .iter()
        .map(|d| tagger.tag(&d.tokens).into_iter().map(|t| t.pos).collect())
        .collect();
    let rows: Vec<TaggedDocument> = docs
        .iter()
        .zip(&tags)
        .map(|(d, t)| TaggedDocument {
            id: &d.id,
            tokens: d
                .tokens
                .iter()
                .zip(t)
                .map(|(tok, pos)| TaggedForm {
                    form: &tok.surface,
                    pos,
                })
                .collect(),
        })
        .collect();
    ensure_parent(&a.out)?;
    write_jsonl(&a.out, &rows)?;
    write_file_config(&a.out, "tag", a)?;
    println!("{} documents tagged", rows.len());
    Ok(())
}

#[derive(Serialize)]
struct NegativesSummary {
    jokes: usize,
    degenerate: usize,
    degenerate_fraction: f64,
}

pub fn generate_negatives(a: &GenerateArgs) -> Result<()> {
    let jokes = read_corpus(&a.jokes, Some(mirth::datasets::JOKE_SOURCE))?;
    let tagger = TaggerModel::load(&a.tagger)?;
    let params = DtParams {
        max_freq_percentile: a.percentile,
        chars_per_replacement: a.chars_per_repl,
        context_sample_size: a.context,
        max_context_resamples: a.resamples,
        rng_seed: a.seed,
    };
    let negatives = generate_negative_corpus(&jokes, &tagger, &params)?;
    let degenerate = negatives.iter().filter(|n| n.degenerate).count();
    ensure_parent(&a.out)?;
    write_jsonl(&a.out, &negatives)?;
    write_file_config(&a.out, "generate-negatives", a)?;
    let summary = NegativesSummary {
        jokes: negatives.len(),
        degenerate,
        degenerate_fraction: degenerate as f64 / negatives.len() as f64,
    };
    write_json_pretty(&sidecar(&a.out, "summary.json"), &summary)?;
    println!("{} negatives, {} degenerate", negatives.len(), degenerate);
    Ok(())
}

/// Generated negatives are JSONL records carrying `source_id`.
fn read_negatives(path: &Path) -> Result<Option<Vec<NegativeExample>>> {
    if !is_jsonl(path) {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first = text.lines().find(|l| !l.trim().is_empty());
    let is_negatives = match first {
        Some(line) => serde_json::from_str::<serde_json::Value>(line)
            .map_err(|e| Error::data(format!("{} line 1: {e}", path.display())))?
            .get("source_id")
            .is_some(),
        None => false,
    };
    if is_negatives {
        read_jsonl(path).map(Some)
    } else {
        Ok(None)
    }
}

pub fn make_dataset(a: &MakeDatasetArgs) -> Result<()> {
    let ratios: Ratios = a.ratios.parse()?;
    let jokes = read_corpus(&a.jokes, Some(mirth::datasets::JOKE_SOURCE))?;
    let negatives = read_negatives(&a.nonjokes)?;
    let summary = match (a.task, negatives) {
        (crate::TaskArg::Single, Some(negs)) => {
            let nonjokes: Vec<NonJoke> = negs.iter().map(NonJoke::from).collect();
            export(&assemble_binary(&jokes, &nonjokes, ratios, a.seed)?, &a.out)?
        }
        (crate::TaskArg::Single, None) => {
            let source = a
                .nonjoke_source
                .clone()
                .unwrap_or_else(|| default_source(&a.nonjokes));
            let docs = read_corpus(&a.nonjokes, Some(&source))?;
            let nonjokes: Vec<NonJoke> = docs
                .iter()
                .map(|d| NonJoke::from_document(d, &source))
                .collect();
            export(&assemble_binary(&jokes, &nonjokes, ratios, a.seed)?, &a.out)?
        }
        (crate::TaskArg::Pairwise, Some(negs)) => {
            export(&assemble_pairwise(&jokes, &negs, ratios, a.seed)?, &a.out)?
        }
        (crate::TaskArg::Pairwise, None) => {
            return Err(Error::invalid(
                "the pairwise task needs generated negatives (output of generate-negatives)",
            ))
        }
    };
    write_dir_config(&a.out, "make-dataset", a)?;
    println!("{summary}");
    Ok(())
}

fn export<E: mirth::datasets::Example>(split: &DatasetSplit<E>, out: &Path) -> Result<String> {
    export_jsonl(split, out)?;
    Ok(format!(
        "train {} / valid {} / test {} ({} degenerate negatives excluded)",
        split.train.len(),
        split.valid.len(),
        split.test.len(),
        split.manifest.excluded_degenerate
    ))
}

/// Glue between the two example kinds and the neural outputs.
trait TaskExample: TrainingExample + Gold {
    fn outcome(class: usize) -> Self::Outcome;
    fn outcome_str(class: usize) -> &'static str;
}

impl TaskExample for LabeledExample {
    fn outcome(class: usize) -> Label {
        mirth::neural::label_of(class)
    }
    fn outcome_str(class: usize) -> &'static str {
        Self::outcome(class).as_str()
    }
}

impl TaskExample for PairExample {
    fn outcome(class: usize) -> Side {
        mirth::neural::side_of(class)
    }
    fn outcome_str(class: usize) -> &'static str {
        Self::outcome(class).as_str()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelInfo {
    kind: ModelKind,
    task: Task,
}

fn write_model_info(dir: &Path, info: &ModelInfo) -> Result<()> {
    write_json_pretty(&dir.join(MODEL_INFO_FILE), info)
}

fn read_model_info(dir: &Path) -> Result<ModelInfo> {
    let path = dir.join(MODEL_INFO_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

enum Model {
    Nb(NbClassifier<f64>),
    Neural(Classifier<f64>),
}

fn load_model(dir: &Path) -> Result<(ModelInfo, Model)> {
    let info = read_model_info(dir)?;
    let path = dir.join(MODEL_FILE);
    let model = match info.kind {
        ModelKind::Nb => Model::Nb(NbClassifier::load(&path)?),
        ModelKind::Cnn | ModelKind::Lstm => {
            let m = Classifier::<f64>::load(&path)?;
            if m.architecture().inputs != task_inputs(info.task) {
                return Err(Error::data(format!(
                    "{}: checkpoint does not match task {}",
                    path.display(),
                    info.task
                )));
            }
            Model::Neural(m)
        }
    };
    Ok((info, model))
}

fn task_inputs(task: Task) -> usize {
    match task {
        Task::Single => 1,
        Task::Pairwise => 2,
    }
}

/// Predicted class and probability of class 1 for every example.
fn neural_predictions<E: TaskExample>(
    model: &Classifier<f64>,
    examples: &[E],
) -> Vec<(usize, f64)> {
    examples
        .iter()
        .map(|e| {
            let (p, _) = model.prepare(&e.texts(), 0);
            let probs = model.probabilities(&p.sequences);
            (model.predict_sequences(&p.sequences), probs[1])
        })
        .collect()
}

fn report_for<E: TaskExample>(examples: &[E], preds: &[(usize, f64)]) -> Result<EvalReport> {
    let pairs: Vec<(String, E::Outcome)> = examples
        .iter()
        .zip(preds)
        .map(|(e, &(c, _))| (Gold::id(e).to_string(), E::outcome(c)))
        .collect();
    evaluate(&pairs, examples)
}

fn prediction_rows<E: TaskExample>(
    examples: &[E],
    preds: &[(usize, f64)],
) -> Vec<ExternalPrediction> {
    examples
        .iter()
        .zip(preds)
        .map(|(e, &(c, score))| ExternalPrediction {
            id: Gold::id(e).to_string(),
            pred: E::outcome_str(c).to_string(),
            score: Some(score),
        })
        .collect()
}

fn nb_predictions(model: &NbClassifier<f64>, examples: &[LabeledExample]) -> Vec<(usize, f64)> {
    examples
        .iter()
        .map(|e| {
            let (label, probs) = model.predict(&e.text);
            (usize::from(label == Label::Joke), probs[1])
        })
        .collect()
}

fn neural_options(n: &NeuralOptions, lr: f64) -> Result<(TrainConfig, EmbeddingMatrix<f64>)> {
    let path = n
        .embeddings
        .as_ref()
        .ok_or_else(|| Error::invalid("neural models need --embeddings FILE"))?;
    let mut embeddings = load_embeddings::<f64>(path)?;
    embeddings.oov_policy = match n.oov {
        OovArg::Zero => OovPolicy::ZeroVector,
        OovArg::Mean => OovPolicy::MeanVector,
    };
    let tc = TrainConfig {
        learning_rate: lr,
        epochs: n.epochs,
        batch_size: n.batch_size,
        dropout: n.dropout,
        seed: n.seed,
        max_sequence_length: n.max_seq_len,
        ..TrainConfig::default()
    };
    tc.validate()?;
    Ok((tc, embeddings))
}

fn encoder_config(kind: EncoderKind, channels: usize, hidden_dim: usize) -> Result<EncoderConfig> {
    let enc = match kind {
        EncoderKind::Cnn => EncoderConfig {
            channels,
            ..EncoderConfig::cnn()
        },
        EncoderKind::Lstm => EncoderConfig::lstm(hidden_dim),
    };
    enc.validate()?;
    Ok(enc)
}

fn dataset_task(data: &Path, requested: Option<crate::TaskArg>) -> Result<Task> {
    let manifest = read_manifest(data)?;
    if let Some(t) = requested {
        let t = Task::from(t);
        if t != manifest.task {
            return Err(Error::invalid(format!(
                "--task {t} does not match the dataset in {} ({})",
                data.display(),
                manifest.task
            )));
        }
    }
    Ok(manifest.task)
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    model: ModelKind,
    task: Task,
    valid: &'a EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    training: Option<&'a mirth::neural::TrainingReport>,
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let task = dataset_task(&a.data, a.task)?;
    create_dir(&a.out)?;
    match (a.model, task) {
        (ModelKind::Nb, Task::Single) => {
            let data = import_jsonl::<LabeledExample>(&a.data)?;
            let texts: Vec<&str> = data.train.iter().map(|e| e.text.as_str()).collect();
            let labels: Vec<Label> = data.train.iter().map(|e| e.label).collect();
            let model = NbClassifier::<f64>::fit(&texts, &labels, a.alpha)?;
            let valid = report_for(&data.valid, &nb_predictions(&model, &data.valid))?;
            model.save(&a.out.join(MODEL_FILE))?;
            finish_train(a, task, &valid, None)
        }
        (ModelKind::Nb, Task::Pairwise) => {
            Err(Error::invalid("Naive Bayes supports only the single task"))
        }
        (ModelKind::Cnn | ModelKind::Lstm, _) => {
            let kind = if a.model == ModelKind::Cnn {
                EncoderKind::Cnn
            } else {
                EncoderKind::Lstm
            };
            let enc = encoder_config(kind, a.neural.channels, a.hidden_dim)?;
            let (tc, embeddings) = neural_options(&a.neural, a.lr)?;
            match task {
                Task::Single => train_one::<LabeledExample>(a, task, &enc, &embeddings, &tc),
                Task::Pairwise => train_one::<PairExample>(
                    a,
                    task,
                    &enc.with_trainable_embeddings(true),
                    &embeddings,
                    &tc,
                ),
            }
        }
    }
}

fn train_one<E: TaskExample>(
    a: &TrainArgs,
    task: Task,
    enc: &EncoderConfig,
    embeddings: &EmbeddingMatrix<f64>,
    tc: &TrainConfig,
) -> Result<()> {
    let data = import_jsonl::<E>(&a.data)?;
    let extra: Vec<&str> = data.test.iter().flat_map(|e| e.texts()).collect();
    let trained = train_neural(enc, embeddings, &data.train, &data.valid, &extra, tc)?;
    let valid = report_for(
        &data.valid,
        &neural_predictions(&trained.model, &data.valid),
    )?;
    trained.model.save(&a.out.join(MODEL_FILE))?;
    finish_train(a, task, &valid, Some(&trained.report))
}

fn finish_train(
    a: &TrainArgs,
    task: Task,
    valid: &EvalReport,
    training: Option<&mirth::neural::TrainingReport>,
) -> Result<()> {
    write_model_info(
        &a.out,
        &ModelInfo {
            kind: a.model,
            task,
        },
    )?;
    write_json_pretty(
        &a.out.join("training.json"),
        &TrainSummary {
            model: a.model,
            task,
            valid,
            training,
        },
    )?;
    write_dir_config(&a.out, "train", a)?;
    println!("validation\n{valid}");
    Ok(())
}

pub fn search(a: &SearchArgs) -> Result<()> {
    if a.trials == 0 {
        return Err(Error::invalid("--trials must be at least 1"));
    }
    let task = read_manifest(&a.data)?.task;
    let space = SearchSpace {
        learning_rate: (a.lr_min, a.lr_max),
        hidden_dims: SearchSpace::default().hidden_dims,
    };
    space.validate()?;
    let (kind, model_kind) = match a.model {
        NeuralKind::Cnn => (EncoderKind::Cnn, ModelKind::Cnn),
        NeuralKind::Lstm => (EncoderKind::Lstm, ModelKind::Lstm),
    };
    let mut enc = encoder_config(kind, a.neural.channels, mirth::neural::LSTM_HIDDEN_DIMS[0])?;
    if task == Task::Pairwise {
        enc = enc.with_trainable_embeddings(true);
    }
    let (tc, embeddings) = neural_options(&a.neural, TrainConfig::default().learning_rate)?;
    create_dir(&a.out)?;
    match task {
        Task::Single => {
            search_task::<LabeledExample>(a, task, model_kind, &space, &enc, &tc, &embeddings)
        }
        Task::Pairwise => {
            search_task::<PairExample>(a, task, model_kind, &space, &enc, &tc, &embeddings)
        }
    }
}

fn search_task<E: TaskExample>(
    a: &SearchArgs,
    task: Task,
    kind: ModelKind,
    space: &SearchSpace,
    enc: &EncoderConfig,
    tc: &TrainConfig,
    embeddings: &EmbeddingMatrix<f64>,
) -> Result<()> {
    let data = import_jsonl::<E>(&a.data)?;
    let extra: Vec<&str> = data.test.iter().flat_map(|e| e.texts()).collect();
    let mut best: Option<(f64, Classifier<f64>)> = None;
    let mut records = random_search(
        space,
        enc,
        tc,
        a.trials,
        a.search_seed,
        |i, cfg: &TrialConfig| {
            log::info!(
                "trial {i}: lr {:.5}, hidden {}",
                cfg.train.learning_rate,
                cfg.encoder.hidden_dim
            );
            let trained = train_neural(
                &cfg.encoder,
                embeddings,
                &data.train,
                &data.valid,
                &extra,
                &cfg.train,
            )?;
            if let Some(acc) = trained.report.final_val_accuracy() {
                if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                    best = Some((acc, trained.model));
                }
            }
            Ok(trained.report)
        },
    )?;
    write_dir_config(&a.out, "search", a)?;
    let Some(selected) = select_best(&records) else {
        write_trials(&a.out.join("trials.jsonl"), &records)?;
        return Err(Error::Runtime(format!(
            "all {} trials failed",
            records.len()
        )));
    };
    let (_, model) = best.expect("a successful trial kept its model");
    let test = report_for(&data.test, &neural_predictions(&model, &data.test))?;
    records[selected].selected = true;
    records[selected].test = Some(test.clone());
    write_trials(&a.out.join("trials.jsonl"), &records)?;

    let accs = validation_accuracies(&records);
    let curve = expected_max_curve(&accs, a.trials)?;
    let path = a.out.join("curve.csv");
    fs::write(&path, curve.to_csv()).map_err(|e| Error::io(&path, e))?;
    model.save(&a.out.join(MODEL_FILE))?;
    write_model_info(&a.out, &ModelInfo { kind, task })?;
    write_json_pretty(&a.out.join("test_report.json"), &test)?;
    println!(
        "{} of {} trials succeeded; selected trial {} (validation {:.4})\ntest\n{test}",
        accs.len(),
        records.len(),
        selected,
        records[selected].validation_accuracy.unwrap_or(f64::NAN)
    );
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let (info, model) = load_model(&a.model_dir)?;
    let manifest = read_manifest(&a.data)?;
    if manifest.task != info.task {
        return Err(Error::data(format!(
            "model is for the {} task but {} holds a {} dataset",
            info.task,
            a.data.display(),
            manifest.task
        )));
    }
    let split = split_name(a.split);
    let (report, rows) = match (&model, info.task) {
        (Model::Nb(_), _) | (Model::Neural(_), Task::Single) => {
            let data: DatasetSplit<LabeledExample> = import_jsonl(&a.data)?;
            let examples = data.part(split);
            let preds = match &model {
                Model::Nb(m) => nb_predictions(m, examples),
                Model::Neural(m) => neural_predictions(m, examples),
            };
            (
                report_for(examples, &preds)?,
                prediction_rows(examples, &preds),
            )
        }
        (Model::Neural(m), Task::Pairwise) => {
            let data: DatasetSplit<PairExample> = import_jsonl(&a.data)?;
            let examples = data.part(split);
            let preds = neural_predictions(m, examples);
            (
                report_for(examples, &preds)?,
                prediction_rows(examples, &preds),
            )
        }
    };
    if let Some(out) = &a.out {
        ensure_parent(out)?;
        write_json_pretty(out, &report)?;
        write_file_config(out, "eval", a)?;
    }
    if let Some(path) = &a.predictions {
        ensure_parent(path)?;
        write_jsonl(path, &rows)?;
    }
    println!("{report}");
    Ok(())
}

pub fn cross_domain(a: &CrossDomainArgs) -> Result<()> {
    let (info, model) = load_model(&a.model_dir)?;
    if info.task != Task::Single {
        return Err(Error::invalid(
            "cross-domain needs a model trained on the single task",
        ));
    }
    let corpus = read_corpus(&a.corpus, None)?;
    let rate = match &model {
        Model::Nb(m) => cross_domain_rate(m, &corpus)?,
        Model::Neural(m) => cross_domain_rate(m, &corpus)?,
    };
    if let Some(out) = &a.out {
        ensure_parent(out)?;
        write_json_pretty(out, &rate)?;
        write_file_config(out, "cross-domain", a)?;
    }
    println!(
        "{} texts, joke rate {:.4} ± {:.4}",
        rate.n, rate.joke_rate, rate.ci_halfwidth
    );
    Ok(())
}

pub fn score_external(a: &ScoreExternalArgs) -> Result<()> {
    let task = read_manifest(&a.data)?.task;
    let split = split_name(a.split);
    let report = match task {
        Task::Single => score_file(
            &a.preds,
            import_jsonl::<LabeledExample>(&a.data)?.part(split),
        )?,
        Task::Pairwise => score_file(&a.preds, import_jsonl::<PairExample>(&a.data)?.part(split))?,
    };
    if let Some(out) = &a.out {
        ensure_parent(out)?;
        write_json_pretty(out, &report)?;
        write_file_config(out, "score-external", a)?;
    }
    println!("{report}");
    Ok(())
}

pub fn synth_corpus(a: &SynthArgs) -> Result<()> {
    let config = SynthConfig {
        jokes: a.jokes,
        news: a.news,
        proverbs: a.proverbs,
        treebank_sentences: a.treebank,
        embedding_dim: a.dim,
        zipf_exponent: a.zipf,
        seed: a.seed,
    };
    let corpus = generate(&config)?;
    corpus.write(&a.out)?;
    write_dir_config(&a.out, "synth-corpus", a)?;
    println!(
        "{} jokes, {} news, {} proverbs, {} treebank sentences, {} embeddings",
        corpus.jokes.len(),
        corpus.news.len(),
        corpus.proverbs.len(),
        corpus.treebank.len(),
        corpus.embeddings.len()
    );
    Ok(())
}
