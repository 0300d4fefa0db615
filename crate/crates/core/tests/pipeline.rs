use mirth::datasets::{
    assemble_binary, assemble_pairwise, export_jsonl, import_jsonl, LabeledExample, NonJoke,
    PairExample, Ratios,
};
use mirth::dyntemplate::{generate_negative_corpus, DtParams};
use mirth::eval::{cross_domain_rate, evaluate, expected_max_curve};
use mirth::neural::{
    label_of, predict_all, side_of, train_classifier, train_pairwise, EmbeddingMatrix,
    EncoderConfig, TrainConfig,
};
use mirth::synthetic::{generate, SynthConfig};
use mirth::tagger::train_tagger;
use mirth::text::documents_from_lines;
use mirth::{EmbeddingsF32, NbClassifierF32, NbClassifierF64};

fn small() -> SynthConfig {
    SynthConfig {
        jokes: 240,
        news: 240,
        proverbs: 40,
        treebank_sentences: 300,
        ..SynthConfig::default()
    }
}

#[test]
fn synthetic_corpus_through_nb_and_cnn() {
    let corpus = generate(&small()).unwrap();
    let tagger = train_tagger(&corpus.treebank, 3, 1).unwrap();
    let jokes = documents_from_lines("jokes", &corpus.jokes.join("\n"));
    let news = documents_from_lines("news", &corpus.news.join("\n"));
    let negatives = generate_negative_corpus(&jokes, &tagger, &DtParams::default()).unwrap();
    assert_eq!(negatives.len(), jokes.len());
    assert!(negatives.iter().filter(|n| !n.degenerate).count() > jokes.len() / 2);

    let nonjokes: Vec<NonJoke> = news
        .iter()
        .map(|d| NonJoke::from_document(d, "news"))
        .collect();
    let split = assemble_binary(&jokes, &nonjokes, Ratios::default(), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_jsonl(&split, dir.path()).unwrap();
    let split = import_jsonl::<LabeledExample>(dir.path()).unwrap();

    let texts: Vec<&str> = split.train.iter().map(|e| e.text.as_str()).collect();
    let labels: Vec<_> = split.train.iter().map(|e| e.label).collect();
    let nb = NbClassifierF64::fit(&texts, &labels, 1.0).unwrap();
    let preds: Vec<_> = split
        .test
        .iter()
        .map(|e| (e.id.clone(), nb.predict(&e.text).0))
        .collect();
    let report = evaluate(&preds, &split.test).unwrap();
    assert!(report.accuracy > 0.9, "{report}");
    // Same features in single precision agree on every test text.
    let nb32 = NbClassifierF32::fit(&texts, &labels, 1.0).unwrap();
    assert!(split
        .test
        .iter()
        .all(|e| nb32.predict(&e.text).0 == nb.predict(&e.text).0));

    let tc = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let extra: Vec<&str> = split.test.iter().map(|e| e.text.as_str()).collect();
    let cnn = train_classifier(
        &EncoderConfig::cnn(),
        &corpus.embeddings,
        &split.train,
        &split.valid,
        &extra,
        &tc,
    )
    .unwrap();
    let preds: Vec<_> = split
        .test
        .iter()
        .zip(predict_all(&cnn.model, &split.test))
        .map(|(e, c)| (e.id.clone(), label_of(c)))
        .collect();
    assert!(evaluate(&preds, &split.test).unwrap().accuracy > 0.9);

    let proverbs = documents_from_lines("proverbs", &corpus.proverbs.join("\n"));
    let rate = cross_domain_rate(&cnn.model, &proverbs).unwrap();
    assert_eq!(rate.n, proverbs.len());
    assert!((0.0..=1.0).contains(&rate.joke_rate));
}

#[test]
fn pairwise_lstm_in_single_precision() {
    let corpus = generate(&small()).unwrap();
    let tagger = train_tagger(&corpus.treebank, 3, 1).unwrap();
    let jokes = documents_from_lines("jokes", &corpus.jokes.join("\n"));
    let negatives = generate_negative_corpus(&jokes, &tagger, &DtParams::default()).unwrap();
    let split = assemble_pairwise(&jokes, &negatives, Ratios::default(), 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_jsonl(&split, dir.path()).unwrap();
    let split = import_jsonl::<PairExample>(dir.path()).unwrap();

    let emb: EmbeddingsF32 = EmbeddingMatrix::parse(&corpus.embeddings.to_text()).unwrap();
    let tc = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    let trained = train_pairwise(
        &EncoderConfig::lstm(16),
        &emb,
        &split.train,
        &split.valid,
        &[],
        &tc,
    )
    .unwrap();
    assert_eq!(trained.report.val_accuracies.len(), 2);
    assert!(trained.report.epoch_losses.iter().all(|l| l.is_finite()));
    let preds: Vec<_> = split
        .test
        .iter()
        .zip(predict_all(&trained.model, &split.test))
        .map(|(e, c)| (e.id.clone(), side_of(c)))
        .collect();
    let report = evaluate(&preds, &split.test).unwrap();
    assert_eq!(report.n, split.test.len());

    let curve = expected_max_curve(&trained.report.val_accuracies, 5).unwrap();
    assert_eq!(curve.points.len(), 5);
}
