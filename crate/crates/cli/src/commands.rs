use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use irtune::config::{msr_encode, write_space_csv, ConfigurationSpace};
use irtune::dataset::{
    best_config, generate_synthetic_corpus, ingest_counters, kfold, read_ground_truth, reduce_labels, speedup,
    InputSize, RegionDataset, SynthSpec,
};
use irtune::graph::{build_graph, write_graph, ProgramGraph, Vocabulary};
use irtune::ir::{extract_regions, parse_ir, print_ir, IrModule};
use irtune::nn::{read_model, write_model};
use irtune::passes::{
    apply_sequence_external, apply_sequence_internal, registry, sample_sequences, write_manifest, ExternalDriver,
    FlagSequence, SamplerConfig,
};
use irtune::pipeline::{
    assign_labels, evaluate, flag_gains, label_sweep, predict_end_to_end, read_dynamic, read_flag_model,
    read_router, region_flag_labels, select_explored_flag_seq, select_flag_labels, train_dynamic,
    train_flag_model, train_hybrid, train_static_regions, write_dynamic, write_flag_model, write_router,
    ErrorSource, EvalOptions, EvaluationReport, FlagMode, GraphStore, Mode, ModelBundle, Provenance,
};
use irtune::StaticModel;

use crate::error::{CliError, Result};
use crate::io::*;
use crate::settings::Settings;
use crate::{Cli, Command};

pub fn run(cli: Cli) -> Result<()> {
    let settings = Settings::load(cli.config.as_deref(), Some(cli.seed))?;
    let ctx = Ctx { seed: cli.seed, machine: cli.machine, settings };
    match cli.command {
        Command::Extract(a) => extract(&a),
        Command::Augment(a) => augment(&ctx, &a),
        Command::BuildGraphs(a) => build_graphs(&a),
        Command::Label(a) => label(&ctx, &a),
        Command::TrainStatic(a) => train_static(&ctx, &a),
        Command::SelectFlags(a) => select_flags(&ctx, &a),
        Command::TrainFlagModel(a) => train_flag(&ctx, &a),
        Command::TrainHybrid(a) => hybrid(&ctx, &a),
        Command::TrainDynamic(a) => dynamic(&ctx, &a),
        Command::Predict(a) => predict(&ctx, &a),
        Command::Evaluate(a) => eval(&ctx, &a),
        Command::Report(a) => report(&ctx, &a),
        Command::SynthCorpus(a) => synth(&ctx, &a),
    }
}

struct Ctx {
    seed: u64,
    machine: String,
    settings: Settings,
}

impl Ctx {
    fn space(&self) -> Result<ConfigurationSpace> {
        load_space(&self.machine)
    }
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "static" => Ok(Mode::Static),
        "hybrid" => Ok(Mode::Hybrid),
        _ => Err(usage(format!("unknown mode `{s}`; expected static or hybrid"))),
    }
}

fn parse_flag_mode(s: &str) -> Result<FlagMode> {
    match s {
        "explored" => Ok(FlagMode::Explored),
        "predicted" => Ok(FlagMode::Predicted),
        _ => match s.strip_prefix("fixed:").map(str::parse) {
            Some(Ok(id)) => Ok(FlagMode::Fixed(id)),
            _ => Err(usage(format!("unknown flag mode `{s}`; expected fixed:<id>, explored or predicted"))),
        },
    }
}

fn read_region(path: &Path) -> Result<IrModule> {
    parse_ir(&read_text(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn extract(a: &crate::ExtractArgs) -> Result<()> {
    let module = read_region(&a.input)?;
    let regions = extract_regions(&module, &a.pattern);
    if regions.is_empty() {
        log::warn!("no function of {} matches `{}`", a.input.display(), a.pattern);
    }
    fs::create_dir_all(&a.out_dir)?;
    for r in &regions {
        write_text(&a.out_dir.join(format!("{}.ll", r.name)), &print_ir(r))?;
    }
    log::info!("extracted {} regions", regions.len());
    Ok(())
}

fn read_pipeline(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?
        .split([',', '\n'])
        .map(str::trim)
        .filter(|p| !p.is_empty() && !p.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn augment(ctx: &Ctx, a: &crate::AugmentArgs) -> Result<()> {
    let mut seqs = match &a.sequences {
        Some(m) => load_manifest(m)?,
        None => {
            let base = match &a.base_pipeline {
                Some(p) => read_pipeline(p)?,
                None => registry().iter().map(|p| p.id().to_string()).collect(),
            };
            if !(0.0..=1.0).contains(&a.prob) {
                return Err(usage("--prob must lie in [0, 1]"));
            }
            let cfg = SamplerConfig {
                removal_probability: a.prob,
                repeats: a.repeats,
                count: a.count,
                seed: ctx.seed,
                ..SamplerConfig::new(base)
            };
            sample_sequences(&cfg)
        }
    };
    if !seqs.iter().any(|s| s.id == 0) {
        seqs.insert(0, FlagSequence::identity());
    }
    let driver = a.driver.as_deref().map(ExternalDriver::new);
    let files = list_files(&a.in_dir, "ll")?;
    if files.is_empty() {
        return Err(CliError::Data(format!("no .ll files in {}", a.in_dir.display())));
    }
    for f in &files {
        let region = read_region(f)?;
        for s in &seqs {
            let text = match &driver {
                Some(d) if !s.passes.is_empty() => apply_sequence_external(f, s, d)?,
                _ => print_ir(&apply_sequence_internal(&region, s)?),
            };
            write_text(&a.out_dir.join(format!("seq{}", s.id)).join(f.file_name().expect("file")), &text)?;
        }
    }
    write_text(&a.out_dir.join("sequences.txt"), &write_manifest(&seqs))?;
    log::info!("{} regions x {} sequences", files.len(), seqs.len());
    Ok(())
}

/// `(sequence id, region files)` under an augment output directory, or the
/// directory itself as sequence 0.
fn sequence_dirs(dir: &Path) -> Result<Vec<(u32, Vec<PathBuf>)>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir)? {
        let p = e?.path();
        let id = p.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_prefix("seq")).and_then(|n| n.parse().ok());
        if let (true, Some(id)) = (p.is_dir(), id) {
            out.push((id, list_files(&p, "ll")?));
        }
    }
    if out.is_empty() {
        out.push((0, list_files(dir, "ll")?));
    }
    out.sort_by_key(|(id, _)| *id);
    Ok(out)
}

fn build_graphs(a: &crate::BuildGraphsArgs) -> Result<()> {
    let empty = Vocabulary::empty();
    let mut graphs: Vec<ProgramGraph> = Vec::new();
    for (seq, files) in sequence_dirs(&a.in_dir)? {
        for f in files {
            let module = read_region(&f)?;
            let mut g = build_graph(&module, &empty).map_err(|e| CliError::Data(format!("{}: {e}", f.display())))?;
            g.region_id = module.name.clone();
            g.flag_seq_id = seq;
            graphs.push(g);
        }
    }
    if graphs.is_empty() {
        return Err(CliError::Data(format!("no regions under {}", a.in_dir.display())));
    }
    let vocab = if a.vocab.exists() {
        Vocabulary::read(&read_text(&a.vocab)?)?
    } else {
        let v = irtune::graph::vocabulary_from_graphs(&graphs, a.min_count)?;
        write_text(&a.vocab, &v.write())?;
        v
    };
    fs::create_dir_all(&a.out_dir)?;
    for g in &mut graphs {
        g.reindex(&vocab);
        write_text(&a.out_dir.join(format!("{}.s{}.graph", g.region_id, g.flag_seq_id)), &write_graph(g))?;
    }
    write_text(&a.out_dir.join(VOCAB_FILE), &vocab.write())?;
    log::info!("{} graphs, vocabulary of {}", graphs.len(), vocab.len());
    Ok(())
}

fn label(ctx: &Ctx, a: &crate::LabelArgs) -> Result<()> {
    let ds = load_timings(&a.timings, &ctx.space()?)?;
    let k = a.k.unwrap_or(ctx.settings.eval.labels);
    let ids = reduce_labels(&ds, k)?;
    log::info!("label set {ids:?}");
    write_labels(&a.out, &assign_labels(&ds, &ids)?)
}

fn load_store(dir: &Path) -> Result<(GraphStore, Vocabulary)> {
    let (graphs, vocab) = load_graph_dir(dir)?;
    Ok((GraphStore::from_graphs(&graphs, vocab.len())?, vocab))
}

/// Regions with graphs that are also in `keep`, warning about the rest.
fn regions_with_graphs(store: &GraphStore, keep: impl IntoIterator<Item = String>) -> Vec<String> {
    let have: BTreeSet<String> = store.regions().into_iter().collect();
    keep.into_iter()
        .filter(|r| {
            let ok = have.contains(r);
            if !ok {
                log::warn!("region `{r}` has no graphs and is skipped");
            }
            ok
        })
        .collect()
}

fn load_model(path: &Path) -> Result<StaticModel> {
    Ok(read_model(&read_text(path)?)?)
}

fn train_static(ctx: &Ctx, a: &crate::TrainStaticArgs) -> Result<()> {
    let (store, _) = load_store(&a.graphs)?;
    let labels = read_labels(&a.labels)?;
    let regions = regions_with_graphs(&store, labels.keys().cloned());
    let model = train_static_regions(&store, &regions, &labels, a.sequences.as_deref(), &ctx.settings.model)?;
    write_text(&a.out, &write_model(&model))
}

fn default_candidates(store: &GraphStore) -> Vec<u32> {
    let ids: BTreeSet<u32> = store.regions().iter().flat_map(|r| store.sequences_of(r)).filter(|&s| s != 0).collect();
    ids.into_iter().collect()
}

fn labelled_regions(store: &GraphStore, ds: &RegionDataset) -> Vec<String> {
    regions_with_graphs(store, ds.labelable_regions(InputSize::Size1))
}

fn ids_text(ids: &[u32]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_ids(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse().map_err(|_| CliError::Data(format!("bad id `{x}`"))))
        .collect()
}

fn select_flags(ctx: &Ctx, a: &crate::SelectFlagsArgs) -> Result<()> {
    let (store, _) = load_store(&a.graphs)?;
    let model = load_model(&a.model)?;
    let ds = load_timings(&a.timings, &ctx.space()?)?;
    let regions = labelled_regions(&store, &ds);
    let candidates = a.candidates.clone().unwrap_or_else(|| default_candidates(&store));
    let coverage = a.coverage.unwrap_or(ctx.settings.eval.flag_coverage);
    let explored = select_explored_flag_seq(&model, &store, &ds, &regions, &candidates)?;
    let gains = flag_gains(&model, &store, &ds, &regions, &candidates)?;
    let flag_labels = select_flag_labels(&gains, &candidates, coverage)?;
    let text = format!(
        "explored_seq {explored}\nflag_labels {}\ncandidates {}\n",
        ids_text(&flag_labels),
        ids_text(&candidates)
    );
    write_text(&a.out, &text)
}

struct Selection {
    candidates: Vec<u32>,
    flag_labels: Vec<u32>,
}

fn read_selection(path: &Path) -> Result<Selection> {
    let text = read_text(path)?;
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for line in text.lines() {
        let (k, v) = line.split_once(' ').unwrap_or((line, ""));
        fields.insert(k, v.trim());
    }
    let get = |k: &str| {
        fields.get(k).copied().ok_or_else(|| CliError::Data(format!("{}: missing `{k}`", path.display())))
    };
    Ok(Selection { candidates: parse_ids(get("candidates")?)?, flag_labels: parse_ids(get("flag_labels")?)? })
}

fn train_flag(ctx: &Ctx, a: &crate::TrainFlagModelArgs) -> Result<()> {
    let (store, _) = load_store(&a.graphs)?;
    let model = load_model(&a.model)?;
    let ds = load_timings(&a.timings, &ctx.space()?)?;
    let sel = read_selection(&a.selection)?;
    let manifest = match &a.sequences {
        Some(p) => load_manifest(p)?,
        None => Vec::new(),
    };
    let probe = sequence_by_id(&manifest, a.probe)?;
    let regions = labelled_regions(&store, &ds);
    let gains = flag_gains(&model, &store, &ds, &regions, &sel.candidates)?;
    let per_region = region_flag_labels(&gains, &sel.candidates, &sel.flag_labels);
    let map: BTreeMap<String, u32> = regions.iter().cloned().zip(per_region).collect();
    let fm = train_flag_model(&model, &store, &regions, &map, &probe, &sel.flag_labels, &ctx.settings.flag_ga)?;
    write_text(&a.out, &write_flag_model(&fm))
}

fn hybrid_config(ctx: &Ctx, threshold: Option<f64>, inner_split: bool) -> irtune::pipeline::HybridConfig {
    let mut cfg = ctx.settings.hybrid.clone();
    if let Some(t) = threshold {
        cfg.threshold = t;
    }
    if inner_split {
        cfg.error_source = ErrorSource::InnerSplit;
    }
    cfg
}

fn hybrid(ctx: &Ctx, a: &crate::TrainHybridArgs) -> Result<()> {
    let (store, _) = load_store(&a.graphs)?;
    let model = load_model(&a.model)?;
    let ds = load_timings(&a.timings, &ctx.space()?)?;
    let labels = read_labels(&a.labels)?;
    let labelable: BTreeSet<String> = ds.labelable_regions(InputSize::Size1).into_iter().collect();
    let regions = regions_with_graphs(&store, labels.keys().filter(|r| labelable.contains(*r)).cloned());
    let cfg = hybrid_config(ctx, a.threshold, a.inner_split);
    let (router, errors) = train_hybrid(&store, &ds, &regions, &labels, &model, a.seq, None, &ctx.settings.model, &cfg)?;
    let needs = errors.iter().filter(|&&e| e >= cfg.threshold).count();
    log::info!("{needs} of {} training regions above the threshold", errors.len());
    write_text(&a.out, &write_router(&router))
}

fn dynamic(ctx: &Ctx, a: &crate::TrainDynamicArgs) -> Result<()> {
    let mut ds = RegionDataset::new(ctx.space()?);
    attach_counters(&mut ds, &a.counters)?;
    let labels = read_labels(&a.labels)?;
    let regions: Vec<String> = labels.keys().cloned().collect();
    write_text(&a.out, &write_dynamic(&train_dynamic(&ds, &regions, &labels)?))
}

fn predict(ctx: &Ctx, a: &crate::PredictArgs) -> Result<()> {
    let mode = parse_mode(&a.mode)?;
    let predicted_flags = match a.flag_mode.as_str() {
        "explored" => false,
        "predicted" => true,
        other => return Err(usage(format!("unknown flag mode `{other}`; expected explored or predicted"))),
    };
    if predicted_flags && a.flag_model.is_none() {
        return Err(usage("--flag-mode predicted needs --flag-model"));
    }
    if mode == Mode::Hybrid && a.router.is_none() {
        return Err(usage("--mode hybrid needs --router"));
    }
    let space = ctx.space()?;
    let manifest = match &a.sequences {
        Some(p) => load_manifest(p)?,
        None => Vec::new(),
    };
    let bundle = ModelBundle {
        vocab: Vocabulary::read(&read_text(&a.vocab)?)?,
        static_model: load_model(&a.model)?,
        explored_seq: Some(sequence_by_id(&manifest, a.explored_seq)?),
        flag_model: a.flag_model.as_deref().map(|p| read_flag_model(&read_text(p)?).map_err(CliError::from)).transpose()?,
        flag_sequences: manifest.clone(),
        router: a.router.as_deref().map(|p| read_router(&read_text(p)?).map_err(CliError::from)).transpose()?,
        dynamic: a.dynamic.as_deref().map(|p| read_dynamic(&read_text(p)?).map_err(CliError::from)).transpose()?,
    };
    let counters: BTreeMap<String, Vec<f64>> = match &a.counters {
        Some(p) => {
            let (schema, records) = ingest_counters(fs::File::open(p)?)?;
            if let Some(d) = &bundle.dynamic {
                if d.counter_schema != schema {
                    return Err(CliError::Data(format!(
                        "counter columns {schema:?} differ from the dynamic model's {:?}",
                        d.counter_schema
                    )));
                }
            }
            records.into_iter().map(|r| (r.region_id, r.values)).collect()
        }
        None => BTreeMap::new(),
    };
    let files = if a.regions.is_dir() { list_files(&a.regions, "ll")? } else { vec![a.regions.clone()] };
    let mut out = String::from(
        "region_id,config_id,thread_count,node_count,thread_mapping,page_mapping,msr_hex,provenance,profiling_request,flag_seq\n",
    );
    let mut requests = String::new();
    for f in &files {
        let region = read_region(f)?;
        let c = counters.get(&region.name).map(Vec::as_slice);
        let p = predict_end_to_end(&region, &bundle, mode, predicted_flags, c, a.strict)?;
        let cfg = space.get(p.config).ok_or_else(|| CliError::Data(format!("config {} not in the space", p.config)))?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},0x{:X},{},{},{}",
            p.region,
            p.config,
            cfg.numa.thread_count,
            cfg.numa.node_count,
            cfg.numa.thread_mapping,
            cfg.numa.page_mapping,
            msr_encode(cfg.prefetch),
            if p.provenance == Provenance::Dynamic { "dynamic" } else { "static" },
            p.profiling_request,
            p.flag_seq
        );
        if p.profiling_request {
            requests.push_str(&p.region);
            requests.push('\n');
        }
    }
    write_text(&a.out, &out)?;
    if let Some(path) = &a.profiling_requests {
        write_text(path, &requests)?;
    }
    Ok(())
}

fn eval(ctx: &Ctx, a: &crate::EvaluateArgs) -> Result<()> {
    let mode = parse_mode(&a.mode)?;
    let flag_mode = parse_flag_mode(&a.flag_mode)?;
    let (store, _) = load_store(&a.graphs)?;
    let mut ds = load_timings(&a.timings, &ctx.space()?)?;
    if let Some(c) = &a.counters {
        attach_counters(&mut ds, c)?;
    } else if mode == Mode::Hybrid {
        return Err(usage("--mode hybrid needs --counters"));
    }
    let k = a.labels.unwrap_or(ctx.settings.eval.labels);
    let folds = a.folds.unwrap_or(ctx.settings.eval.folds);
    let regions = labelled_regions(&store, &ds);
    let partition = kfold(&regions, folds, ctx.seed)?;
    let manifest = match &a.sequences {
        Some(p) => load_manifest(p)?,
        None => Vec::new(),
    };
    let mut opts = EvalOptions::new(reduce_labels(&ds, k)?);
    opts.mode = mode;
    opts.flag_mode = flag_mode;
    opts.candidates = a.candidates.clone().unwrap_or_else(|| default_candidates(&store));
    opts.train_sequences = a.train_sequences.clone();
    opts.probe = sequence_by_id(&manifest, a.probe)?;
    opts.model = ctx.settings.model.clone();
    opts.hybrid = hybrid_config(ctx, a.threshold, a.inner_split);
    opts.flag_ga = ctx.settings.flag_ga.clone();
    opts.flag_coverage = ctx.settings.eval.flag_coverage;
    let target = match (&a.target_timings, &a.target_machine) {
        (Some(t), Some(m)) => Some(load_timings(t, &load_space(m)?)?),
        _ => None,
    };
    let report = evaluate(&partition, &ds, &store, &opts, target.as_ref())?;
    let mut summary = report.summary_text();
    if let Some(gt) = &a.ground_truth {
        let truth: BTreeMap<String, bool> = read_ground_truth(fs::File::open(gt)?)?
            .into_iter()
            .map(|e| (e.region_id, e.predictable_statically))
            .collect();
        let known: Vec<_> = report.rows.iter().filter(|r| truth.contains_key(&r.region)).collect();
        let agree = known.iter().filter(|r| r.profiled != truth[&r.region]).count();
        let acc = if known.is_empty() { 0.0 } else { agree as f64 / known.len() as f64 };
        let _ = writeln!(summary, "router_accuracy = {acc:.6}");
    }
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_text(&a.out_dir.join("report.csv"), &String::from_utf8(csv).expect("utf-8 report"))?;
    write_text(&a.out_dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn report(ctx: &Ctx, a: &crate::ReportArgs) -> Result<()> {
    let r = EvaluationReport::read_csv(fs::File::open(&a.report)?)?;
    let summary = r.summary_text();
    match &a.out {
        Some(p) => write_text(p, &summary)?,
        None => print!("{summary}"),
    }
    let Some(dir) = &a.emit_plot_data else { return Ok(()) };
    let mut regions = String::from("region_id,speedup,oracle_speedup,label_oracle_speedup,error,provenance\n");
    for row in &r.rows {
        let _ = writeln!(
            regions,
            "{},{:?},{:?},{:?},{:?},{}",
            row.region,
            row.speedup,
            row.oracle_speedup,
            row.label_oracle_speedup,
            row.error,
            if row.dynamic { "dynamic" } else { "static" }
        );
    }
    write_text(&dir.join("region_speedups.csv"), &regions)?;
    let mut folds = String::from("fold,regions,mean_speedup\n");
    for f in &r.folds {
        let _ = writeln!(folds, "{},{},{:?}", f.fold, f.regions, f.mean_speedup);
    }
    write_text(&dir.join("fold_speedups.csv"), &folds)?;
    let mut errors: Vec<f64> = r.rows.iter().map(|row| row.error).collect();
    errors.sort_by(f64::total_cmp);
    let mut cdf = String::from("error,fraction\n");
    for (i, e) in errors.iter().enumerate() {
        let _ = writeln!(cdf, "{e:?},{:?}", (i + 1) as f64 / errors.len() as f64);
    }
    write_text(&dir.join("error_distribution.csv"), &cdf)?;
    let mut prov = String::from("provenance,regions,mean_speedup\n");
    for (name, dynamic) in [("static", false), ("dynamic", true)] {
        let s: Vec<f64> = r.rows.iter().filter(|row| row.dynamic == dynamic).map(|row| row.speedup).collect();
        let m = if s.is_empty() { 0.0 } else { s.iter().sum::<f64>() / s.len() as f64 };
        let _ = writeln!(prov, "{name},{},{m:?}", s.len());
    }
    write_text(&dir.join("provenance.csv"), &prov)?;

    if let Some(t) = &a.timings {
        let ds = load_timings(t, &ctx.space()?)?;
        let max_k = ctx.settings.eval.labels.max(1).min(ds.space.len());
        let ks: Vec<usize> = (1..=max_k).collect();
        let mut sweep = String::from("k,mean_speedup,coverage,label_ids\n");
        for p in label_sweep(&ds, &ks)? {
            let _ = writeln!(sweep, "{},{:?},{:?},{}", p.k, p.mean_speedup, p.coverage, ids_text(&p.label_ids).replace(',', " "));
        }
        write_text(&dir.join("label_sweep.csv"), &sweep)?;
        let rs = ds.labelable_regions(InputSize::Size1);
        let base = ds.space.baseline_id;
        let mut wins = vec![0usize; ds.space.len()];
        for region in &rs {
            wins[best_config(&ds, region, None)? as usize] += 1;
        }
        let mut configs = String::from("config_id,thread_count,node_count,thread_mapping,page_mapping,msr_hex,mean_speedup,best_for\n");
        for c in &ds.space.configs {
            let s: Vec<f64> = rs.iter().map(|region| speedup(&ds, region, c.id, base)).collect::<std::result::Result<_, _>>()?;
            let m = if s.is_empty() { 0.0 } else { s.iter().sum::<f64>() / s.len() as f64 };
            let _ = writeln!(
                configs,
                "{},{},{},{},{},0x{:X},{m:?},{}",
                c.id,
                c.numa.thread_count,
                c.numa.node_count,
                c.numa.thread_mapping,
                c.numa.page_mapping,
                msr_encode(c.prefetch),
                wins[c.id as usize]
            );
        }
        write_text(&dir.join("config_speedups.csv"), &configs)?;
    }
    Ok(())
}

fn synth(ctx: &Ctx, a: &crate::SynthArgs) -> Result<()> {
    let space = ctx.space()?;
    let spec = SynthSpec {
        regions: a.regions,
        labels: a.labels,
        static_fraction: a.static_fraction,
        flag_motifs: a.flag_motifs,
        class_a_fraction: a.class_a_fraction,
        size2_shift: a.size2_shift,
        seed: ctx.seed,
    };
    let corpus = generate_synthetic_corpus(&spec, &space)?;
    corpus.write_to(&a.out_dir)?;
    write_space_csv(&space, create(&a.out_dir.join("space.csv"))?)?;
    log::info!("planted configurations {:?}", corpus.planted);
    Ok(())
}
