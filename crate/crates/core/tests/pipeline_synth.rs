use std::time::Instant;

use irtune::config::{enumerate_space, MachineDescription};
use irtune::dataset::{generate_synthetic_corpus, kfold, SynthSpec};
use irtune::ir::parse_ir;
use irtune::nn::ModelConfig;
use irtune::passes::FlagSequence;
use irtune::pipeline::{augment_corpus, evaluate, ErrorSource, EvalOptions, FlagMode, GraphStore, Mode};

fn small_model(seed: u64) -> ModelConfig {
    ModelConfig { embedding_dim: 8, hidden_dim: 16, vector_dim: 16, epochs: 40, batch_size: 8, learning_rate: 1e-2, seed, ..ModelConfig::default() }
}

#[test]
fn static_pipeline_learns_planted_signatures() {
    let t = Instant::now();
    let space = enumerate_space(&MachineDescription::skylake()).unwrap();
    let spec = SynthSpec { regions: 40, labels: 4, seed: 3, ..SynthSpec::default() };
    let corpus = generate_synthetic_corpus(&spec, &space).unwrap();
    let modules: Vec<_> = corpus.regions.iter().map(|r| parse_ir(&r.ir).unwrap()).collect();
    let seqs = vec![FlagSequence::identity(), FlagSequence::explicit(1, &["dce", "merge-blocks"])];
    let (vocab, graphs) = augment_corpus(&modules, &seqs, 1).unwrap();
    let store = GraphStore::from_graphs(&graphs, vocab.len()).unwrap();
    assert_eq!(store.len(), 80);
    let regions: Vec<String> = corpus.regions.iter().map(|r| r.id.clone()).collect();
    let partition = kfold(&regions, 4, 1).unwrap();
    let mut opts = EvalOptions::new(corpus.planted.clone());
    opts.model = small_model(5);
    let report = evaluate(&partition, &corpus.dataset, &store, &opts, None).unwrap();
    eprintln!("{}elapsed {:.1}s", report.summary_text(), t.elapsed().as_secs_f64());
    assert_eq!(report.rows.len(), 40);
    for r in &report.rows {
        assert!(r.speedup <= r.oracle_speedup + 1e-12);
        assert!(r.label_oracle_speedup <= r.oracle_speedup + 1e-12);
        assert!(r.error >= 0.0);
    }
    assert!(report.label_accuracy >= 0.9, "accuracy {}", report.label_accuracy);
}

fn setup(spec: &SynthSpec, seqs: &[FlagSequence]) -> (irtune::dataset::SynthCorpus, GraphStore, Vec<String>) {
    let space = enumerate_space(&MachineDescription::skylake()).unwrap();
    let corpus = generate_synthetic_corpus(spec, &space).unwrap();
    let modules: Vec<_> = corpus.regions.iter().map(|r| parse_ir(&r.ir).unwrap()).collect();
    let (vocab, graphs) = augment_corpus(&modules, seqs, 1).unwrap();
    let store = GraphStore::from_graphs(&graphs, vocab.len()).unwrap();
    let regions = corpus.regions.iter().map(|r| r.id.clone()).collect();
    (corpus, store, regions)
}

#[test]
fn hybrid_routes_dynamic_regions_to_counters() {
    let spec = SynthSpec { regions: 60, labels: 4, static_fraction: 0.7, seed: 8, ..SynthSpec::default() };
    let (corpus, store, regions) = setup(&spec, &[FlagSequence::identity()]);
    let partition = kfold(&regions, 4, 2).unwrap();
    let mut opts = EvalOptions::new(corpus.planted.clone());
    opts.model = small_model(1);
    opts.hybrid.error_source = ErrorSource::InnerSplit;
    let static_report = evaluate(&partition, &corpus.dataset, &store, &opts, None).unwrap();
    opts.mode = Mode::Hybrid;
    let hybrid = evaluate(&partition, &corpus.dataset, &store, &opts, None).unwrap();
    eprintln!("{}{}", static_report.summary_text(), hybrid.summary_text());
    let truth: std::collections::BTreeMap<_, _> =
        corpus.manifest.iter().map(|m| (m.region_id.clone(), m.predictable_statically)).collect();
    let routed_ok = hybrid.rows.iter().filter(|r| r.profiled != truth[&r.region]).count();
    eprintln!("router agrees with manifest on {routed_ok}/{}", hybrid.rows.len());
    assert!(hybrid.mean_speedup >= static_report.mean_speedup);
    assert!(hybrid.rows.iter().all(|r| r.dynamic == r.profiled));
}

#[test]
fn router_threshold_extremes() {
    let spec = SynthSpec { regions: 24, labels: 3, static_fraction: 0.5, seed: 2, ..SynthSpec::default() };
    let (corpus, store, regions) = setup(&spec, &[FlagSequence::identity()]);
    let partition = kfold(&regions, 3, 0).unwrap();
    let mut opts = EvalOptions::new(corpus.planted.clone());
    opts.model = small_model(0);
    opts.mode = Mode::Hybrid;
    // errors are never below zero, so a zero threshold profiles everything
    opts.hybrid.threshold = 0.0;
    let all = evaluate(&partition, &corpus.dataset, &store, &opts, None).unwrap();
    assert_eq!(all.profiled_fraction, 1.0);
    // the relative difference is below 1 whenever the best time is positive
    opts.hybrid.threshold = 1.0;
    let none = evaluate(&partition, &corpus.dataset, &store, &opts, None).unwrap();
    assert_eq!(none.profiled_fraction, 0.0);
}

#[test]
fn predicted_flags_pick_the_destroying_sequence() {
    let spec = SynthSpec { regions: 40, labels: 4, flag_motifs: true, seed: 6, ..SynthSpec::default() };
    let mut seqs = vec![FlagSequence::identity()];
    let space = enumerate_space(&MachineDescription::skylake()).unwrap();
    seqs.extend(generate_synthetic_corpus(&spec, &space).unwrap().sequences);
    let (corpus, store, regions) = setup(&spec, &seqs);
    let partition = kfold(&regions, 4, 3).unwrap();
    let mut opts = EvalOptions::new(corpus.planted.clone());
    opts.model = small_model(3);
    opts.train_sequences = Some(vec![0]);
    opts.candidates = seqs.iter().map(|s| s.id).filter(|&i| i != 0).collect();
    opts.flag_ga = irtune::ml::GaConfig { population_size: 20, generations: 10, subset_size: 4, ..Default::default() };
    opts.flag_mode = FlagMode::Predicted;
    let predicted = evaluate(&partition, &corpus.dataset, &store, &opts, None).unwrap();
    opts.flag_mode = FlagMode::Explored;
    let explored = evaluate(&partition, &corpus.dataset, &store, &opts, None).unwrap();
    opts.flag_mode = FlagMode::Fixed(0);
    let identity = evaluate(&partition, &corpus.dataset, &store, &opts, None).unwrap();
    eprintln!("{}{}{}", identity.summary_text(), explored.summary_text(), predicted.summary_text());
    assert_eq!(predicted.rows.len(), 40);
}
