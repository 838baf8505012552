//! Per-region timings and counters, best-configuration labels, the
//! evaluation metrics, fold partitions and the synthetic corpus.

mod synth;

pub use synth::{generate_synthetic_corpus, SynthCorpus, SynthRegion, SynthSpec, FLAG_SEQUENCES};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{reduce_labels_matrix, ConfigError, ConfigurationSpace};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{file} row {row}: {message}")]
    Row { file: &'static str, row: usize, message: String },
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: &'static str, column: String },
    #[error("region `{region}` has no {size} timing for configuration {config}")]
    MissingTiming { region: String, config: u32, size: InputSize },
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("no counters for region `{0}`")]
    MissingCounters(String),
    #[error("need at least {k} regions for {k} folds, got {regions}")]
    TooFewRegions { k: usize, regions: usize },
    #[error("empty candidate set")]
    NoCandidates,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InputSize {
    Size1,
    Size2,
}

impl InputSize {
    pub const ALL: [InputSize; 2] = [InputSize::Size1, InputSize::Size2];

    pub fn name(self) -> &'static str {
        match self {
            InputSize::Size1 => "size1",
            InputSize::Size2 => "size2",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for InputSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for InputSize {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        InputSize::ALL.into_iter().find(|i| i.name() == s).ok_or_else(|| format!("unknown input size `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub region_id: String,
    pub config_id: u32,
    pub input_size: InputSize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterRecord {
    pub region_id: String,
    /// In the order of the dataset's counter schema.
    pub values: Vec<f64>,
}

/// Timings over one configuration space, plus optional counters.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDataset {
    pub space: ConfigurationSpace,
    /// Sorted region ids.
    pub regions: Vec<String>,
    /// `timings[region][size][config]`.
    timings: BTreeMap<String, [Vec<Option<f64>>; 2]>,
    pub counter_schema: Vec<String>,
    pub counters: BTreeMap<String, Vec<f64>>,
}

const TIMING_HEADER: [&str; 4] = ["region_id", "config_id", "input_size", "time"];

impl RegionDataset {
    pub fn new(space: ConfigurationSpace) -> Self {
        RegionDataset {
            space,
            regions: Vec::new(),
            timings: BTreeMap::new(),
            counter_schema: Vec::new(),
            counters: BTreeMap::new(),
        }
    }

    /// Adds one timing; duplicates, unknown configurations and non-positive
    /// times are rejected.
    pub fn insert(&mut self, r: TimingRecord) -> Result<(), String> {
        if !(r.time.is_finite() && r.time > 0.0) {
            return Err(format!("time must be finite and positive, got {}", r.time));
        }
        let n = self.space.len();
        if r.config_id as usize >= n {
            return Err(format!("configuration {} outside a space of {n}", r.config_id));
        }
        if r.region_id.is_empty() {
            return Err("empty region id".into());
        }
        if !self.timings.contains_key(&r.region_id) {
            let pos = self.regions.binary_search(&r.region_id).unwrap_err();
            self.regions.insert(pos, r.region_id.clone());
        }
        let slots = self.timings.entry(r.region_id.clone()).or_insert_with(|| [vec![None; n], vec![None; n]]);
        let slot = &mut slots[r.input_size.index()][r.config_id as usize];
        if slot.is_some() {
            return Err(format!("duplicate timing for ({}, {}, {})", r.region_id, r.config_id, r.input_size));
        }
        *slot = Some(r.time);
        Ok(())
    }

    pub fn time(&self, region: &str, config: u32, size: InputSize) -> Option<f64> {
        self.timings.get(region)?[size.index()].get(config as usize).copied().flatten()
    }

    fn require(&self, region: &str, config: u32, size: InputSize) -> Result<f64, DataError> {
        if !self.timings.contains_key(region) {
            return Err(DataError::UnknownRegion(region.to_string()));
        }
        self.time(region, config, size).ok_or(DataError::MissingTiming { region: region.to_string(), config, size })
    }

    pub fn record_count(&self) -> usize {
        self.timings.values().flat_map(|s| s.iter()).flatten().filter(|t| t.is_some()).count()
    }

    pub fn records(&self) -> impl Iterator<Item = TimingRecord> + '_ {
        self.timings.iter().flat_map(|(region, sizes)| {
            InputSize::ALL.into_iter().flat_map(move |size| {
                sizes[size.index()].iter().enumerate().filter_map(move |(c, t)| {
                    t.map(|time| TimingRecord { region_id: region.clone(), config_id: c as u32, input_size: size, time })
                })
            })
        })
    }

    /// Every configuration of the space is timed for `region` at `size`.
    pub fn is_complete(&self, region: &str, size: InputSize) -> bool {
        self.timings.get(region).is_some_and(|s| s[size.index()].iter().all(|t| t.is_some()))
    }

    /// Regions with complete `size` timings. The others are dropped with a
    /// warning.
    pub fn labelable_regions(&self, size: InputSize) -> Vec<String> {
        let (keep, drop): (Vec<&String>, Vec<&String>) = self.regions.iter().partition(|r| self.is_complete(r, size));
        for r in &drop {
            log::warn!("region `{r}` has incomplete {size} timings and is excluded from labeling");
        }
        keep.into_iter().cloned().collect()
    }

    pub fn counters_of(&self, region: &str) -> Result<&[f64], DataError> {
        self.counters.get(region).map(|v| v.as_slice()).ok_or_else(|| DataError::MissingCounters(region.to_string()))
    }

    pub fn attach_counters(&mut self, schema: Vec<String>, records: Vec<CounterRecord>) {
        self.counter_schema = schema;
        self.counters = records.into_iter().map(|r| (r.region_id, r.values)).collect();
    }

    /// `speedups[r][c]` of `candidates` against the baseline at size 1.
    pub fn speedup_matrix(&self, regions: &[String], candidates: &[u32]) -> Result<Vec<Vec<f64>>, DataError> {
        let base = self.space.baseline_id;
        regions
            .iter()
            .map(|r| candidates.iter().map(|&c| speedup(self, r, c, base)).collect())
            .collect()
    }
}

/// Reads `region_id,config_id,input_size,time` rows.
pub fn ingest_timings(input: impl Read, space: &ConfigurationSpace) -> Result<RegionDataset, DataError> {
    const FILE: &str = "timings";
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn { file: FILE, column: name.to_string() })
    };
    let idx: Vec<usize> = TIMING_HEADER.iter().map(|c| col(c)).collect::<Result<_, _>>()?;
    let mut ds = RegionDataset::new(space.clone());
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = k + 2;
        let bad = |message: String| DataError::Row { file: FILE, row, message };
        let field = |i: usize| rec.get(idx[i]).unwrap_or("");
        let record = TimingRecord {
            region_id: field(0).to_string(),
            config_id: field(1).parse().map_err(|_| bad(format!("bad config_id `{}`", field(1))))?,
            input_size: field(2).parse().map_err(bad)?,
            time: field(3).parse().map_err(|_| bad(format!("bad time `{}`", field(3))))?,
        };
        ds.insert(record).map_err(bad)?;
    }
    Ok(ds)
}

pub fn export_timings(ds: &RegionDataset, out: impl Write) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIMING_HEADER)?;
    for r in ds.records() {
        w.write_record([r.region_id, r.config_id.to_string(), r.input_size.to_string(), format!("{:?}", r.time)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `region_id,<counter>...`; returns the counter names and the rows.
pub fn ingest_counters(input: impl Read) -> Result<(Vec<String>, Vec<CounterRecord>), DataError> {
    const FILE: &str = "counters";
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    if headers.get(0) != Some("region_id") {
        return Err(DataError::MissingColumn { file: FILE, column: "region_id".into() });
    }
    let schema: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| DataError::Row { file: FILE, row: k + 2, message };
        let region = rec.get(0).unwrap_or("").to_string();
        if !seen.insert(region.clone()) {
            return Err(bad(format!("duplicate counters for `{region}`")));
        }
        let values = (1..=schema.len())
            .map(|i| {
                let v = rec.get(i).unwrap_or("");
                v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(format!("bad counter value `{v}`")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        out.push(CounterRecord { region_id: region, values });
    }
    Ok((schema, out))
}

pub fn export_counters(ds: &RegionDataset, out: impl Write) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["region_id".to_string()];
    header.extend(ds.counter_schema.iter().cloned());
    w.write_record(&header)?;
    for (region, values) in &ds.counters {
        let mut row = vec![region.clone()];
        row.extend(values.iter().map(|v| format!("{v:?}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Fastest of `candidates` (default: the whole space) at size 1; ties go to
/// the lower id.
pub fn best_config(ds: &RegionDataset, region: &str, candidates: Option<&[u32]>) -> Result<u32, DataError> {
    best_config_at(ds, region, InputSize::Size1, candidates)
}

pub fn best_config_at(
    ds: &RegionDataset,
    region: &str,
    size: InputSize,
    candidates: Option<&[u32]>,
) -> Result<u32, DataError> {
    let all: Vec<u32>;
    let candidates = match candidates {
        Some(c) => c,
        None => {
            all = (0..ds.space.len() as u32).collect();
            &all
        }
    };
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    let mut best: Option<(u32, f64)> = None;
    for c in sorted {
        let t = ds.require(region, c, size)?;
        if best.is_none_or(|(_, bt)| t < bt) {
            best = Some((c, t));
        }
    }
    best.map(|(c, _)| c).ok_or(DataError::NoCandidates)
}

/// `time(baseline) / time(config)` at size 1.
pub fn speedup(ds: &RegionDataset, region: &str, config: u32, baseline_id: u32) -> Result<f64, DataError> {
    speedup_at(ds, region, config, baseline_id, InputSize::Size1)
}

pub fn speedup_at(
    ds: &RegionDataset,
    region: &str,
    config: u32,
    baseline_id: u32,
    size: InputSize,
) -> Result<f64, DataError> {
    Ok(ds.require(region, baseline_id, size)? / ds.require(region, config, size)?)
}

/// `|a - b| / max(|a|, |b|)`.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        return 0.0;
    }
    (a - b).abs() / m
}

/// Speedup lost on size 1 by running the configuration that is best for
/// size 2 instead of size 1's own best, both against the size-1 baseline.
pub fn speedup_loss(ds: &RegionDataset, region: &str, candidates: Option<&[u32]>) -> Result<f64, DataError> {
    let base = ds.space.baseline_id;
    let own = best_config_at(ds, region, InputSize::Size1, candidates)?;
    let other = best_config_at(ds, region, InputSize::Size2, candidates)?;
    Ok(speedup(ds, region, own, base)? - speedup(ds, region, other, base)?)
}

/// Greedy reduction of the space to `k` labels over the regions with
/// complete size-1 timings. See [`reduce_labels_matrix`].
pub fn reduce_labels(ds: &RegionDataset, k: usize) -> Result<Vec<u32>, DataError> {
    let regions = ds.labelable_regions(InputSize::Size1);
    let all: Vec<u32> = (0..ds.space.len() as u32).collect();
    let m = ds.speedup_matrix(&regions, &all)?;
    if m.is_empty() {
        return Err(DataError::NoCandidates);
    }
    Ok(reduce_labels_matrix(&m, k)?.into_iter().map(|c| all[c]).collect())
}

/// Region → fold assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPartition {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPartition {
    pub fn fold_of(&self, region: &str) -> Option<usize> {
        self.assignments.get(region).copied()
    }

    pub fn test(&self, fold: usize) -> Vec<String> {
        self.assignments.iter().filter(|(_, &f)| f == fold).map(|(r, _)| r.clone()).collect()
    }

    pub fn train(&self, fold: usize) -> Vec<String> {
        self.assignments.iter().filter(|(_, &f)| f != fold).map(|(r, _)| r.clone()).collect()
    }
}

/// Shuffles the regions under `seed`, then deals them round-robin over `k` folds.
pub fn kfold(regions: &[String], k: usize, seed: u64) -> Result<FoldPartition, DataError> {
    let mut order: Vec<String> = regions.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if k == 0 || order.len() < k {
        return Err(DataError::TooFewRegions { k, regions: order.len() });
    }
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let assignments = order.into_iter().enumerate().map(|(i, r)| (r, i % k)).collect();
    Ok(FoldPartition { k, assignments })
}

/// One row of the ground-truth manifest written by the corpus generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub region_id: String,
    pub true_label: u32,
    pub predictable_statically: bool,
}

pub fn write_ground_truth(entries: &[ManifestEntry], out: impl Write) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["region_id", "true_label", "predictable_statically"])?;
    for e in entries {
        w.write_record([e.region_id.clone(), e.true_label.to_string(), e.predictable_statically.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ground_truth(input: impl Read) -> Result<Vec<ManifestEntry>, DataError> {
    const FILE: &str = "ground truth";
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |message: &str| DataError::Row { file: FILE, row: k + 2, message: message.to_string() };
        out.push(ManifestEntry {
            region_id: rec.get(0).ok_or_else(|| bad("missing region_id"))?.to_string(),
            true_label: rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad true_label"))?,
            predictable_statically: rec.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad flag"))?,
        });
    }
    Ok(out)
}
