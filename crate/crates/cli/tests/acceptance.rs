//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when a
//! criterion fails that is not listed in `KNOWN_UNATTAINABLE`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use irtune::config::{
    enumerate_space, msr_decode, msr_encode, parse_machine, reduce_labels_matrix, translate_config,
    ConfigurationSpace, MachineDescription,
};
use irtune::dataset::{
    generate_synthetic_corpus, kfold, reduce_labels, relative_difference, speedup, speedup_loss, InputSize,
    RegionDataset, SynthCorpus, SynthSpec, TimingRecord,
};
use irtune::graph::{GraphEdge, GraphNode, NodeKind, ProgramGraph, Relation, NUM_RELATIONS};
use irtune::ir::parse_ir;
use irtune::ml::GaConfig;
use irtune::nn::{rgcn_forward, Activation, GraphInput, ModelConfig, RgcnLayer, StaticModel, Tensor};
use irtune::passes::{registry, sample_sequences, FlagSequence, SamplerConfig};
use irtune::pipeline::{augment_corpus, evaluate, ErrorSource, EvalOptions, FlagMode, GraphStore, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose claim does not hold for the specified algorithm.
const KNOWN_UNATTAINABLE: &[u32] = &[3];

struct Outcome {
    pass: bool,
    detail: String,
    /// False when a part of the criterion that is expected to hold failed.
    attainable_parts_ok: bool,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail, attainable_parts_ok: pass }
    }
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "rgcn_forward matches the per-node reference", c1_rgcn_oracle),
        (2, "analytic gradients match central differences", c2_gradients),
        (3, "greedy label reduction equals exhaustive; k=13 coverage", c3_label_reduction),
        (4, "static model learns the planted static corpus", c4_static_corpus),
        (5, "hybrid routing on the 0.7-static corpus", c5_hybrid),
        (6, "predicted >= explored >= worst flag sequence", c6_flag_ordering),
        (7, "cross-machine translation and round trips", c7_translation),
        (8, "MSR round trip and space sizes", c8_msr_space),
        (9, "CLI workflow is byte-identical across runs", c9_determinism),
        (10, "metric formulas", c10_metrics),
    ];
    let filter: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut hard_failures = 0;
    for (id, name, f) in criteria {
        if filter.as_ref().is_some_and(|only| !only.contains(&id)) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && known && o.attainable_parts_ok { " [known unattainable]" } else { "" };
        println!("{tag} criterion {id:>2}: {name} | {} | {:.1}s{note}", o.detail, t.elapsed().as_secs_f64());
        if !o.attainable_parts_ok || (!o.pass && !known) {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} criteria failed");
        std::process::exit(1);
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, vocab: usize) -> ProgramGraph {
    let nodes = (0..n)
        .map(|_| GraphNode {
            kind: NodeKind::ALL[rng.gen_range(0..NodeKind::ALL.len())],
            token: "t".into(),
            vocab_index: rng.gen_range(0..vocab),
        })
        .collect();
    let mut edges: Vec<GraphEdge> = Vec::new();
    for _ in 0..rng.gen_range(0..3 * n) {
        let e = GraphEdge {
            src: rng.gen_range(0..n),
            dst: rng.gen_range(0..n),
            relation: Relation::ALL[rng.gen_range(0..3)],
            position: rng.gen_range(0..2),
        };
        if !edges.contains(&e) {
            edges.push(e);
        }
    }
    ProgramGraph { region_id: "r".into(), flag_seq_id: 0, nodes, edges }
}

/// Per node and relation: own transform plus the neighbour-count-normalised
/// sum of neighbour transforms.
fn naive_rgcn(layer: &RgcnLayer<f64>, h: &Tensor<f64>, g: &ProgramGraph) -> Vec<Vec<f64>> {
    let n = g.nodes.len();
    let (d_in, d_out) = (layer.w_self.rows(), layer.w_self.cols());
    let mut nb: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); NUM_RELATIONS]; n];
    for e in &g.edges {
        nb[e.dst][e.relation as usize].push(e.src);
        nb[e.src][e.relation as usize + 3].push(e.dst);
    }
    let mut out = vec![vec![0.0; d_out]; n];
    for i in 0..n {
        for c in 0..d_out {
            let mut acc = 0.0;
            for k in 0..d_in {
                acc += h[(i, k)] * layer.w_self[(k, c)];
            }
            for (r, list) in nb[i].iter().enumerate() {
                for &j in list {
                    let mut m = 0.0;
                    for k in 0..d_in {
                        m += h[(j, k)] * layer.w_rel[r][(k, c)];
                    }
                    acc += m / list.len() as f64;
                }
            }
            out[i][c] = if layer.activation == Activation::Relu { acc.max(0.0) } else { acc };
        }
    }
    out
}

fn c1_rgcn_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let n = rng.gen_range(1..=20);
        let g = random_graph(&mut rng, n, 6);
        let (d_in, d_out) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let act = if trial % 2 == 0 { Activation::Relu } else { Activation::Identity };
        let layer = RgcnLayer::<f64>::new(d_in, d_out, act, &mut rng);
        let h = Tensor::from_vec(n, d_in, (0..n * d_in).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let fast = rgcn_forward(&layer, &h, &g).unwrap();
        let slow = naive_rgcn(&layer, &h, &g);
        for (i, row) in slow.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                worst = worst.max((fast[(i, c)] - v).abs());
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome::new(worst <= 1e-10 && secs < 10.0, format!("max abs diff {worst:.2e} <= 1e-10, {secs:.2}s < 10s"))
}

fn c2_gradients() -> Outcome {
    let t = Instant::now();
    let node = |kind, vocab_index| GraphNode { kind, token: "t".into(), vocab_index };
    let g = ProgramGraph {
        region_id: "fixture".into(),
        flag_seq_id: 0,
        nodes: vec![node(NodeKind::Instruction, 1), node(NodeKind::Variable, 2), node(NodeKind::Constant, 3)],
        edges: vec![
            GraphEdge { src: 0, dst: 1, relation: Relation::Data, position: 0 },
            GraphEdge { src: 2, dst: 0, relation: Relation::Data, position: 1 },
            GraphEdge { src: 1, dst: 0, relation: Relation::Control, position: 0 },
            GraphEdge { src: 0, dst: 2, relation: Relation::Call, position: 0 },
        ],
    };
    let cfg = ModelConfig { embedding_dim: 6, hidden_dim: 8, vector_dim: 8, seed: 3, ..ModelConfig::default() };
    let mut model = StaticModel::<f64>::new(cfg, 5, vec![0, 1, 2]).unwrap();
    let input = GraphInput::new(&g, 5).unwrap();
    let class = 1;
    let mut grad = model.zeros_like();
    model.loss_and_grad(&input, class, &mut grad);
    let analytic: Vec<Vec<f64>> = grad.tensors_mut().iter().map(|t| t.data().to_vec()).collect();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (k, a) in analytic.iter().enumerate() {
        for e in 0..a.len() {
            let orig = model.tensors_mut()[k].data()[e];
            model.tensors_mut()[k].data_mut()[e] = orig + h;
            let plus = model.loss(&input, class);
            model.tensors_mut()[k].data_mut()[e] = orig - h;
            let minus = model.loss(&input, class);
            model.tensors_mut()[k].data_mut()[e] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let scale = a[e].abs().max(numeric.abs());
            // entries whose true gradient is ~0 carry only rounding noise
            if scale > 1e-7 {
                worst = worst.max((a[e] - numeric).abs() / scale);
            }
            checked += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome::new(
        worst <= 1e-4 && secs < 30.0 && checked == model.parameter_count(),
        format!("{checked} parameters, max rel err {worst:.2e} <= 1e-4, {secs:.2}s < 30s"),
    )
}

fn mean_best(m: &[Vec<f64>], subset: &[usize]) -> f64 {
    m.iter().map(|r| subset.iter().map(|&c| r[c]).fold(f64::NEG_INFINITY, f64::max)).sum::<f64>() / m.len() as f64
}

fn exhaustive_best(m: &[Vec<f64>], k: usize) -> f64 {
    let c = m[0].len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << c) {
        if mask.count_ones() as usize == k {
            let s: Vec<usize> = (0..c).filter(|i| mask & (1 << i) != 0).collect();
            best = best.max(mean_best(m, &s));
        }
    }
    best
}

fn synth(spec: &SynthSpec) -> (SynthCorpus, ConfigurationSpace) {
    let space = enumerate_space(&MachineDescription::skylake()).unwrap();
    (generate_synthetic_corpus(spec, &space).unwrap(), space)
}

fn c3_label_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut total, mut mismatches) = (0, 0);
    let mut first: Option<String> = None;
    for regions in 1..=3 {
        for configs in 1..=6 {
            for _ in 0..300 {
                let m: Vec<Vec<f64>> = (0..regions)
                    .map(|_| (0..configs).map(|_| (rng.gen_range(0.5..2.5_f64) * 10.0).round() / 10.0).collect())
                    .collect();
                for k in 1..=configs.min(3) {
                    total += 1;
                    let greedy = mean_best(&m, &reduce_labels_matrix(&m, k).unwrap());
                    if greedy < exhaustive_best(&m, k) - 1e-12 {
                        mismatches += 1;
                        first.get_or_insert_with(|| format!("{m:?} k={k}"));
                    }
                }
            }
        }
    }
    let (corpus, _) = synth(&SynthSpec { regions: 100, labels: 13, seed: 3, ..SynthSpec::default() });
    let ds = &corpus.dataset;
    let base = ds.space.baseline_id;
    let regions = ds.labelable_regions(InputSize::Size1);
    let labels = reduce_labels(ds, 13).unwrap();
    let mean = |cands: Option<&[u32]>| -> f64 {
        regions
            .iter()
            .map(|r| speedup(ds, r, irtune::dataset::best_config(ds, r, cands).unwrap(), base).unwrap())
            .sum::<f64>()
            / regions.len() as f64
    };
    let coverage = mean(Some(&labels)) / mean(None);
    let greedy_ok = mismatches == 0;
    let coverage_ok = coverage >= 0.95;
    Outcome {
        pass: greedy_ok && coverage_ok,
        detail: format!(
            "greedy below exhaustive on {mismatches}/{total} toy cases{}; k=13 coverage {coverage:.4} >= 0.95",
            first.map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
        attainable_parts_ok: coverage_ok,
    }
}

fn store_for(corpus: &SynthCorpus, seqs: &[FlagSequence]) -> (GraphStore, Vec<String>) {
    let modules: Vec<_> = corpus.regions.iter().map(|r| parse_ir(&r.ir).unwrap()).collect();
    let (vocab, graphs) = augment_corpus(&modules, seqs, 1).unwrap();
    let store = GraphStore::from_graphs(&graphs, vocab.len()).unwrap();
    (store, corpus.regions.iter().map(|r| r.id.clone()).collect())
}

fn model(seed: u64, epochs: usize) -> ModelConfig {
    ModelConfig {
        embedding_dim: 8,
        hidden_dim: 16,
        vector_dim: 16,
        epochs,
        batch_size: 8,
        learning_rate: 1e-3,
        seed,
        ..ModelConfig::default()
    }
}

fn c4_static_corpus() -> Outcome {
    let t = Instant::now();
    let (corpus, _) = synth(&SynthSpec { regions: 100, labels: 13, static_fraction: 1.0, seed: 4, ..SynthSpec::default() });
    let base: Vec<String> = registry().iter().map(|p| p.id().to_string()).collect();
    let mut seqs = vec![FlagSequence::identity()];
    seqs.extend(sample_sequences(&SamplerConfig { count: 1, seed: 4, ..SamplerConfig::new(base) }));
    let (store, regions) = store_for(&corpus, &seqs);
    let partition = kfold(&regions, 10, 4).unwrap();
    let mut opts = EvalOptions::new(corpus.planted.clone());
    opts.model = model(4, 100);
    let r = evaluate(&partition, &corpus.dataset, &store, &opts, None).unwrap();
    let secs = t.elapsed().as_secs_f64();
    Outcome::new(
        r.label_accuracy >= 0.9 && store.len() >= 200 && secs < 600.0,
        format!("{} graphs, held-out accuracy {:.3} >= 0.90, {secs:.0}s < 600s", store.len(), r.label_accuracy),
    )
}

fn c5_hybrid() -> Outcome {
    let (corpus, _) = synth(&SynthSpec { regions: 200, labels: 13, static_fraction: 0.7, seed: 1, ..SynthSpec::default() });
    let (store, regions) = store_for(&corpus, &[FlagSequence::identity()]);
    let partition = kfold(&regions, 5, 1).unwrap();
    let mut opts = EvalOptions::new(corpus.planted.clone());
    opts.model = model(1, 150);
    opts.hybrid.error_source = ErrorSource::InnerSplit;
    opts.hybrid.inner_folds = 4;
    opts.hybrid.ga = GaConfig { population_size: 100, generations: 20, seed: 1, ..GaConfig::default() };
    let s = evaluate(&partition, &corpus.dataset, &store, &opts, None).unwrap();
    opts.mode = Mode::Hybrid;
    let h = evaluate(&partition, &corpus.dataset, &store, &opts, None).unwrap();
    let truth: BTreeMap<&str, bool> =
        corpus.manifest.iter().map(|m| (m.region_id.as_str(), m.predictable_statically)).collect();
    let agree = h.rows.iter().filter(|r| r.profiled != truth[r.region.as_str()]).count();
    let acc = agree as f64 / h.rows.len() as f64;
    let planted = corpus.manifest.iter().filter(|m| !m.predictable_statically).count() as f64 / h.rows.len() as f64;
    let pass = acc >= 0.85 && (h.profiled_fraction - planted).abs() <= 0.10 && h.mean_speedup >= s.mean_speedup;
    Outcome::new(
        pass,
        format!(
            "router accuracy {acc:.3} >= 0.85, profiled {:.3} vs planted {planted:.2} +-0.10, hybrid {:.4} >= static {:.4}",
            h.profiled_fraction, h.mean_speedup, s.mean_speedup
        ),
    )
}

fn c6_flag_ordering() -> Outcome {
    let spec = SynthSpec { regions: 60, labels: 4, flag_motifs: true, seed: 6, ..SynthSpec::default() };
    let (corpus, _) = synth(&spec);
    let mut seqs = vec![FlagSequence::identity()];
    seqs.extend(corpus.sequences.iter().cloned());
    let (store, regions) = store_for(&corpus, &seqs);
    let partition = kfold(&regions, 5, 6).unwrap();
    let candidates: Vec<u32> = corpus.sequences.iter().map(|s| s.id).collect();
    let mut opts = EvalOptions::new(corpus.planted.clone());
    opts.model = model(6, 100);
    opts.train_sequences = Some(vec![0]);
    opts.candidates = candidates.clone();
    opts.flag_ga = GaConfig { population_size: 50, generations: 20, seed: 6, ..GaConfig::default() };
    let mut run = |m: FlagMode| {
        opts.flag_mode = m;
        evaluate(&partition, &corpus.dataset, &store, &opts, None).unwrap().mean_speedup
    };
    let predicted = run(FlagMode::Predicted);
    let explored = run(FlagMode::Explored);
    let (worst_id, worst) = candidates
        .iter()
        .map(|&c| (c, run(FlagMode::Fixed(c))))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    Outcome::new(
        predicted >= explored && explored >= worst,
        format!("predicted {predicted:.4} >= explored {explored:.4} >= worst single (seq {worst_id}) {worst:.4}"),
    )
}

fn c7_translation() -> Outcome {
    let skl = enumerate_space(&MachineDescription::skylake()).unwrap();
    let snb = enumerate_space(&MachineDescription::sandybridge()).unwrap();
    let full = skl.baseline();
    let moved = translate_config(full, &skl, &snb).unwrap();
    let full_ok = (moved.numa.thread_count, moved.numa.node_count) == (32, 4)
        && moved.prefetch == full.prefetch
        && moved.numa.thread_mapping == full.numa.thread_mapping
        && moved.numa.page_mapping == full.numa.page_mapping;
    let mut worst_step = 0;
    for (a, b) in [(&skl, &snb), (&snb, &skl)] {
        for (i, &(t, n)) in a.machine.numa_axis.iter().enumerate() {
            let c = a.configs.iter().find(|c| (c.numa.thread_count, c.numa.node_count) == (t, n)).unwrap();
            let back = translate_config(&translate_config(c, a, b).unwrap(), b, a).unwrap();
            let j = a.machine.numa_axis.iter().position(|&p| p == (back.numa.thread_count, back.numa.node_count)).unwrap();
            worst_step = worst_step.max(i.abs_diff(j));
        }
    }
    Outcome::new(
        full_ok && worst_step <= 1,
        format!(
            "(48,2) -> ({},{}) with policies kept; worst round-trip axis displacement {worst_step} <= 1",
            moved.numa.thread_count, moved.numa.node_count
        ),
    )
}

fn c8_msr_space() -> Outcome {
    let round_trip = (0u8..16).all(|b| msr_encode(msr_decode(b)) == b);
    let skl = enumerate_space(&MachineDescription::skylake()).unwrap().len();
    let snb = enumerate_space(&MachineDescription::sandybridge()).unwrap().len();
    Outcome::new(round_trip && skl == 288 && snb == 320, format!("16/16 round trips {round_trip}, skylake {skl}, sandybridge {snb}"))
}

const CLI_CONFIG: &str = "[model]
embedding_dim = 6
hidden_dim = 8
vector_dim = 8
epochs = 10
batch_size = 8
[eval]
folds = 4
labels = 4
";

fn cli_run(dir: &Path) -> Vec<Vec<u8>> {
    fs::write(dir.join("cfg.toml"), CLI_CONFIG).unwrap();
    let steps: &[&[&str]] = &[
        &["synth-corpus", "--regions", "24", "--labels", "4", "--out-dir", "corpus"],
        &["augment", "--count", "2", "--in-dir", "corpus/ir", "--out-dir", "aug"],
        &["build-graphs", "--in-dir", "aug", "--vocab", "vocab.txt", "--out-dir", "graphs"],
        &["label", "--timings", "corpus/timings.csv", "--out", "labels.csv"],
        &["train-static", "--graphs", "graphs", "--labels", "labels.csv", "--out", "model.st"],
        &["evaluate", "--graphs", "graphs", "--timings", "corpus/timings.csv", "--out-dir", "eval"],
    ];
    for s in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_irtune"))
            .current_dir(dir)
            .args(["--seed", "9", "--config", "cfg.toml"])
            .args(*s)
            .output()
            .unwrap();
        assert!(out.status.success(), "{s:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    ["model.st", "eval/report.csv", "eval/summary.txt"].iter().map(|f| fs::read(dir.join(f)).unwrap()).collect()
}

fn c9_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ra, rb) = (cli_run(a.path()), cli_run(b.path()));
    let same = ra == rb;
    Outcome::new(same, format!("model, report.csv and summary.txt identical: {same} ({} report bytes)", ra[1].len()))
}

fn tiny_dataset(rows: &[(&str, [f64; 3], [f64; 3])]) -> RegionDataset {
    let m = parse_machine("name = tiny\nnuma_nodes = 1\ncores_per_node = 4\nnuma_axis = [(4,1)]\n").unwrap();
    let space = enumerate_space(&m).unwrap();
    let mut ds = RegionDataset::new(space.clone());
    for (region, size1, size2) in rows {
        for c in 0..space.len() as u32 {
            for (size, times) in [(InputSize::Size1, size1), (InputSize::Size2, size2)] {
                let time = times.get(c as usize).copied().unwrap_or(1000.0);
                ds.insert(TimingRecord { region_id: region.to_string(), config_id: c, input_size: size, time }).unwrap();
            }
        }
    }
    ds
}

fn c10_metrics() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let rd = close(relative_difference(10.0, 8.0), 0.2)
        && close(relative_difference(7.5, 7.5), 0.0)
        && close(relative_difference(0.0, 5.0), 1.0);
    // config 0 is the baseline of the single-pair space
    let ds = tiny_dataset(&[("r", [100.0, 50.0, 200.0], [100.0, 50.0, 200.0])]);
    let sp = close(speedup(&ds, "r", 1, 0).unwrap(), 2.0)
        && close(speedup(&ds, "r", 0, 0).unwrap(), 1.0)
        && close(speedup(&ds, "r", 2, 0).unwrap(), 0.5);
    let ds = tiny_dataset(&[
        ("same", [30.0, 20.0, 25.0], [60.0, 40.0, 50.0]),
        ("shift", [30.0, 20.0, 30.0 / 1.4], [60.0, 50.0, 40.0]),
    ]);
    let loss_same = speedup_loss(&ds, "same", Some(&[0, 1, 2])).unwrap();
    let loss_shift = speedup_loss(&ds, "shift", Some(&[0, 1, 2])).unwrap();
    let sl = close(loss_same, 0.0) && close(loss_shift, 0.1) && loss_same >= 0.0 && loss_shift >= 0.0;
    Outcome::new(rd && sp && sl, format!("relative_difference {rd}, speedup {sp}, speedup_loss {sl} (L = {loss_shift:.15})"))
}
