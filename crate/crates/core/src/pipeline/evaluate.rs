use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::flags::{flag_gains, region_flag_labels, select_explored_flag_seq, select_flag_labels, train_flag_model};
use super::hybrid::{train_dynamic, train_hybrid, HybridConfig};
use super::{assign_labels, infer, label_of, train_static_regions, GraphStore, PipelineError};
use crate::config::translate_config;
use crate::dataset::{best_config, reduce_labels, relative_difference, speedup, FoldPartition, InputSize, RegionDataset};
use crate::ml::GaConfig;
use crate::nn::ModelConfig;
use crate::passes::FlagSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Static,
    Hybrid,
}

/// Which compiled form of a region the static model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagMode {
    /// This sequence for every region.
    Fixed(u32),
    /// The candidate with the best mean result on the training regions.
    Explored,
    /// A per-region choice by the flag model.
    Predicted,
}

impl FlagMode {
    fn name(&self) -> String {
        match self {
            FlagMode::Fixed(s) => format!("fixed:{s}"),
            FlagMode::Explored => "explored".into(),
            FlagMode::Predicted => "predicted".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub mode: Mode,
    pub flag_mode: FlagMode,
    /// Candidate sequences for the explored and predicted modes.
    pub candidates: Vec<u32>,
    /// Graphs the static model trains on; `None` uses every sequence.
    pub train_sequences: Option<Vec<u32>>,
    pub probe: FlagSequence,
    pub model: ModelConfig,
    pub hybrid: HybridConfig,
    pub flag_ga: GaConfig,
    pub flag_coverage: f64,
    /// Reduced label set; the static model predicts among these.
    pub label_ids: Vec<u32>,
}

impl EvalOptions {
    pub fn new(label_ids: Vec<u32>) -> Self {
        EvalOptions {
            mode: Mode::Static,
            flag_mode: FlagMode::Fixed(0),
            candidates: Vec::new(),
            train_sequences: None,
            probe: FlagSequence::identity(),
            model: ModelConfig::default(),
            hybrid: HybridConfig::default(),
            flag_ga: GaConfig::default(),
            flag_coverage: 0.99,
            label_ids,
        }
    }
}

/// Per-region outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRow {
    pub region: String,
    pub fold: usize,
    pub flag_seq: u32,
    pub predicted: u32,
    pub dynamic: bool,
    pub profiled: bool,
    /// Best configuration within the label set.
    pub true_label: u32,
    pub speedup: f64,
    /// Speedup of the best configuration of the whole space.
    pub oracle_speedup: f64,
    pub label_oracle_speedup: f64,
    /// Relative time difference to the best configuration of the whole space.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldSummary {
    pub fold: usize,
    pub regions: usize,
    pub mean_speedup: f64,
    /// Sequence chosen by the explored mode, when used.
    pub explored_seq: Option<u32>,
    pub flag_labels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub rows: Vec<RegionRow>,
    pub folds: Vec<FoldSummary>,
    pub mean_speedup: f64,
    pub mean_oracle_speedup: f64,
    pub mean_label_oracle_speedup: f64,
    pub mean_error: f64,
    pub label_accuracy: f64,
    pub profiled_fraction: f64,
    /// `key = value` pairs describing the run.
    pub settings: Vec<(String, String)>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

impl EvaluationReport {
    fn from_rows(rows: Vec<RegionRow>, folds: Vec<FoldSummary>, settings: Vec<(String, String)>) -> Self {
        let mut r = EvaluationReport {
            rows,
            folds,
            mean_speedup: 0.0,
            mean_oracle_speedup: 0.0,
            mean_label_oracle_speedup: 0.0,
            mean_error: 0.0,
            label_accuracy: 0.0,
            profiled_fraction: 0.0,
            settings,
        };
        r.recompute();
        r
    }

    /// Recomputes the aggregates from the rows.
    pub fn recompute(&mut self) {
        let rows = &self.rows;
        self.mean_speedup = mean(rows.iter().map(|r| r.speedup));
        self.mean_oracle_speedup = mean(rows.iter().map(|r| r.oracle_speedup));
        self.mean_label_oracle_speedup = mean(rows.iter().map(|r| r.label_oracle_speedup));
        self.mean_error = mean(rows.iter().map(|r| r.error));
        self.label_accuracy = mean(rows.iter().map(|r| f64::from(u8::from(r.predicted == r.true_label))));
        self.profiled_fraction = mean(rows.iter().map(|r| f64::from(u8::from(r.profiled))));
        for f in &mut self.folds {
            let in_fold: Vec<&RegionRow> = rows.iter().filter(|r| r.fold == f.fold).collect();
            f.regions = in_fold.len();
            f.mean_speedup = mean(in_fold.iter().map(|r| r.speedup));
        }
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), PipelineError> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| PipelineError::Data(e.into());
        w.write_record([
            "region_id",
            "fold",
            "flag_seq",
            "predicted_config",
            "provenance",
            "profiled",
            "true_label",
            "speedup",
            "oracle_speedup",
            "label_oracle_speedup",
            "error",
        ])
        .map_err(err)?;
        for r in &self.rows {
            w.write_record([
                r.region.clone(),
                r.fold.to_string(),
                r.flag_seq.to_string(),
                r.predicted.to_string(),
                if r.dynamic { "dynamic" } else { "static" }.to_string(),
                r.profiled.to_string(),
                r.true_label.to_string(),
                format!("{:?}", r.speedup),
                format!("{:?}", r.oracle_speedup),
                format!("{:?}", r.label_oracle_speedup),
                format!("{:?}", r.error),
            ])
            .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads rows written by [`write_csv`](Self::write_csv). Fold summaries
    /// keep only what the rows determine.
    pub fn read_csv(input: impl std::io::Read) -> Result<Self, PipelineError> {
        const WHAT: &str = "report";
        let bad = |m: String| PipelineError::Format { what: WHAT, message: m };
        let mut r = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != 11 {
                return Err(bad(format!("row {} has {} fields", i + 2, rec.len())));
            }
            let field = |k: usize| rec[k].trim();
            let num = |k: usize| -> Result<f64, PipelineError> {
                field(k).parse().map_err(|_| bad(format!("row {}: bad number `{}`", i + 2, field(k))))
            };
            let int = |k: usize| -> Result<u64, PipelineError> {
                field(k).parse().map_err(|_| bad(format!("row {}: bad integer `{}`", i + 2, field(k))))
            };
            rows.push(RegionRow {
                region: field(0).to_string(),
                fold: int(1)? as usize,
                flag_seq: int(2)? as u32,
                predicted: int(3)? as u32,
                dynamic: field(4) == "dynamic",
                profiled: field(5) == "true",
                true_label: int(6)? as u32,
                speedup: num(7)?,
                oracle_speedup: num(8)?,
                label_oracle_speedup: num(9)?,
                error: num(10)?,
            });
        }
        let mut fold_ids: Vec<usize> = rows.iter().map(|r| r.fold).collect();
        fold_ids.sort_unstable();
        fold_ids.dedup();
        let folds = fold_ids
            .into_iter()
            .map(|fold| FoldSummary { fold, regions: 0, mean_speedup: 0.0, explored_seq: None, flag_labels: Vec::new() })
            .collect();
        Ok(EvaluationReport::from_rows(rows, folds, Vec::new()))
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::from("evaluation report\n");
        for (k, v) in &self.settings {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "regions = {}", self.rows.len());
        let _ = writeln!(s, "mean_speedup = {:.6}", self.mean_speedup);
        let _ = writeln!(s, "full_exploration_mean_speedup = {:.6}", self.mean_oracle_speedup);
        let _ = writeln!(s, "label_set_mean_speedup = {:.6}", self.mean_label_oracle_speedup);
        let _ = writeln!(s, "mean_error = {:.6}", self.mean_error);
        let _ = writeln!(s, "label_accuracy = {:.6}", self.label_accuracy);
        let _ = writeln!(s, "profiled_fraction = {:.6}", self.profiled_fraction);
        for f in &self.folds {
            let _ = write!(s, "fold {} regions {} mean_speedup {:.6}", f.fold, f.regions, f.mean_speedup);
            if let Some(e) = f.explored_seq {
                let _ = write!(s, " explored_seq {e}");
            }
            if !f.flag_labels.is_empty() {
                let labels: Vec<String> = f.flag_labels.iter().map(|l| l.to_string()).collect();
                let _ = write!(s, " flag_labels {}", labels.join(","));
            }
            s.push('\n');
        }
        s
    }
}

/// Cross-validated predictions for every labelled region of `partition`.
/// With `target`, predictions are translated to that dataset's machine and
/// scored on its timings.
pub fn evaluate(
    partition: &FoldPartition,
    ds: &RegionDataset,
    store: &GraphStore,
    opts: &EvalOptions,
    target: Option<&RegionDataset>,
) -> Result<EvaluationReport, PipelineError> {
    if opts.label_ids.is_empty() {
        return Err(PipelineError::Mismatch("empty label set".into()));
    }
    let labels = assign_labels(ds, &opts.label_ids)?;
    for r in partition.assignments.keys() {
        if !labels.contains_key(r) {
            return Err(PipelineError::Mismatch(format!("region `{r}` in the partition has no complete timings")));
        }
    }
    let scoring = target.unwrap_or(ds);
    let mut rows = Vec::new();
    let mut folds = Vec::new();
    for fold in 0..partition.k {
        let train = partition.train(fold);
        let test = partition.test(fold);
        if test.is_empty() {
            continue;
        }
        let cfg = ModelConfig { seed: opts.model.seed.wrapping_add(fold as u64), ..opts.model.clone() };
        let model = train_static_regions(store, &train, &labels, opts.train_sequences.as_deref(), &cfg)?;

        let mut explored_seq = None;
        let mut flag_labels = Vec::new();
        let mut flag_model = None;
        let route_seq = match opts.flag_mode {
            FlagMode::Fixed(s) => s,
            FlagMode::Explored => {
                let s = select_explored_flag_seq(&model, store, ds, &train, &opts.candidates)?;
                explored_seq = Some(s);
                s
            }
            FlagMode::Predicted => {
                let gains = flag_gains(&model, store, ds, &train, &opts.candidates)?;
                flag_labels = select_flag_labels(&gains, &opts.candidates, opts.flag_coverage)?;
                let per_region = region_flag_labels(&gains, &opts.candidates, &flag_labels);
                let map: BTreeMap<String, u32> = train.iter().cloned().zip(per_region).collect();
                let fm = train_flag_model(&model, store, &train, &map, &opts.probe, &flag_labels, &opts.flag_ga)?;
                flag_model = Some(fm);
                opts.probe.id
            }
        };
        let hybrid = if opts.mode == Mode::Hybrid {
            let (router, _) = train_hybrid(
                store,
                ds,
                &train,
                &labels,
                &model,
                route_seq,
                opts.train_sequences.as_deref(),
                &cfg,
                &opts.hybrid,
            )?;
            Some((router, train_dynamic(ds, &train, &labels)?))
        } else {
            None
        };

        for r in &test {
            let seq = match &flag_model {
                Some(fm) => fm.predict(&infer(&model, store.get(r, fm.probe_sequence.id)?).1),
                None => route_seq,
            };
            let (mut predicted, _) = infer(&model, store.get(r, seq)?);
            let (mut dynamic, mut profiled) = (false, false);
            if let Some((router, dyn_model)) = &hybrid {
                let (_, v) = infer(&model, store.get(r, route_seq)?);
                if router.needs_dynamic(&v) {
                    profiled = true;
                    if let Ok(c) = ds.counters_of(r) {
                        predicted = dyn_model.predict(c)?;
                        dynamic = true;
                    }
                }
            }
            let mut true_label = label_of(&labels, r)?;
            if let Some(t) = target {
                let move_id = |c: u32| -> Result<u32, PipelineError> {
                    Ok(translate_config(&ds.space.configs[c as usize], &ds.space, &t.space)?.id)
                };
                predicted = move_id(predicted)?;
                true_label = move_id(true_label)?;
            }
            let base = scoring.space.baseline_id;
            let full_best = best_config(scoring, r, None)?;
            let time = |c: u32| scoring.time(r, c, InputSize::Size1).expect("complete region");
            rows.push(RegionRow {
                region: r.clone(),
                fold,
                flag_seq: seq,
                predicted,
                dynamic,
                profiled,
                true_label,
                speedup: speedup(scoring, r, predicted, base)?,
                oracle_speedup: speedup(scoring, r, full_best, base)?,
                label_oracle_speedup: speedup(scoring, r, true_label, base)?,
                error: relative_difference(time(predicted), time(full_best)),
            });
        }
        folds.push(FoldSummary { fold, regions: test.len(), mean_speedup: 0.0, explored_seq, flag_labels });
    }
    rows.sort_by(|a, b| a.region.cmp(&b.region));
    let mut settings = vec![
        ("mode".to_string(), format!("{:?}", opts.mode).to_lowercase()),
        ("flag_mode".to_string(), opts.flag_mode.name()),
        ("folds".to_string(), partition.k.to_string()),
        ("labels".to_string(), opts.label_ids.len().to_string()),
        ("model_seed".to_string(), opts.model.seed.to_string()),
        ("machine".to_string(), ds.space.machine.name.clone()),
    ];
    if opts.mode == Mode::Hybrid {
        settings.push(("router_threshold".to_string(), opts.hybrid.threshold.to_string()));
        settings.push(("router_errors".to_string(), opts.hybrid.error_source.to_string()));
    }
    if let Some(t) = target {
        settings.push(("scored_on".to_string(), t.space.machine.name.clone()));
    }
    Ok(EvaluationReport::from_rows(rows, folds, settings))
}

/// Mean best-of-label-set speedup for each reduced label count.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub k: usize,
    pub label_ids: Vec<u32>,
    pub mean_speedup: f64,
    /// Share of the full-exploration mean speedup retained.
    pub coverage: f64,
}

pub fn label_sweep(ds: &RegionDataset, ks: &[usize]) -> Result<Vec<SweepPoint>, PipelineError> {
    let regions = ds.labelable_regions(InputSize::Size1);
    let base = ds.space.baseline_id;
    let best_mean = |ids: Option<&[u32]>| -> Result<f64, PipelineError> {
        let s: Vec<f64> = regions
            .iter()
            .map(|r| Ok(speedup(ds, r, best_config(ds, r, ids)?, base)?))
            .collect::<Result<_, PipelineError>>()?;
        Ok(mean(s.into_iter()))
    };
    let full = best_mean(None)?;
    ks.iter()
        .map(|&k| {
            let label_ids = reduce_labels(ds, k)?;
            let m = best_mean(Some(&label_ids))?;
            Ok(SweepPoint { k, label_ids, mean_speedup: m, coverage: m / full })
        })
        .collect()
}
