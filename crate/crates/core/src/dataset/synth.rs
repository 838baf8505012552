//! Planted corpus: region structure determines the best configuration for the
//! static regions, only the counters do for the rest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    export_counters, export_timings, write_ground_truth, CounterRecord, DataError, InputSize, ManifestEntry,
    RegionDataset, TimingRecord,
};
use crate::config::ConfigurationSpace;
use crate::passes::{write_manifest, FlagSequence};

/// Signature operation per planted label, for the static corpus.
const SIGNATURES: [(&str, &str); 13] = [
    ("fadd", "float"),
    ("fsub", "float"),
    ("fmul", "float"),
    ("fdiv", "float"),
    ("frem", "double"),
    ("sub", "i32"),
    ("mul", "i32"),
    ("xor", "i32"),
    ("and", "i32"),
    ("or", "i32"),
    ("shl", "i32"),
    ("ashr", "i32"),
    ("sdiv", "i32"),
];

/// Flag-motif corpus: class A carries its label in dead float code, class B
/// in integer code on constants.
const DEAD_FLOAT_OPS: [&str; 4] = ["fadd", "fsub", "fmul", "fdiv"];
const CONST_INT_OPS: [&str; 4] = ["sub", "mul", "xor", "shl"];

/// Candidate sequences of the flag-motif corpus. Ids 1..=4; id 0 is the
/// identity probe.
pub const FLAG_SEQUENCES: [&[&str]; 4] =
    [&["dce", "merge-blocks"], &["constfold", "cast-elim"], &["dce", "noop-strip"], &["constfold", "noop-strip"]];

pub const COUNTER_SCHEMA: [&str; 2] = ["power_package", "l3_miss_ratio"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub regions: usize,
    /// Number of distinct planted best configurations.
    pub labels: usize,
    /// Share of regions whose label is visible in their structure.
    pub static_fraction: f64,
    /// Build the two-class flag-motif corpus instead.
    pub flag_motifs: bool,
    /// Share of class-A regions in the flag-motif corpus.
    pub class_a_fraction: f64,
    /// Share of regions whose size-2 best configuration differs from size 1's.
    pub size2_shift: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            regions: 100,
            labels: 13,
            static_fraction: 1.0,
            flag_motifs: false,
            class_a_fraction: 0.6,
            size2_shift: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRegion {
    pub id: String,
    pub ir: String,
    /// Best configuration id at size 1.
    pub label: u32,
    pub static_ok: bool,
    /// `'A'` or `'B'` in the flag-motif corpus.
    pub motif_class: Option<char>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub regions: Vec<SynthRegion>,
    pub dataset: RegionDataset,
    pub manifest: Vec<ManifestEntry>,
    /// Planted configuration per label index.
    pub planted: Vec<u32>,
    /// Candidate sequences shipped with the flag-motif corpus.
    pub sequences: Vec<FlagSequence>,
}

impl SynthCorpus {
    /// Writes `ir/<region>.ll`, `timings.csv`, `counters.csv`,
    /// `ground_truth.csv` and, for the flag-motif corpus, `sequences.txt`.
    pub fn write_to(&self, dir: &Path) -> Result<(), DataError> {
        fs::create_dir_all(dir.join("ir"))?;
        for r in &self.regions {
            fs::write(dir.join("ir").join(format!("{}.ll", r.id)), &r.ir)?;
        }
        export_timings(&self.dataset, fs::File::create(dir.join("timings.csv"))?)?;
        export_counters(&self.dataset, fs::File::create(dir.join("counters.csv"))?)?;
        write_ground_truth(&self.manifest, fs::File::create(dir.join("ground_truth.csv"))?)?;
        if !self.sequences.is_empty() {
            fs::write(dir.join("sequences.txt"), write_manifest(&self.sequences))?;
        }
        Ok(())
    }
}

pub fn generate_synthetic_corpus(spec: &SynthSpec, space: &ConfigurationSpace) -> Result<SynthCorpus, DataError> {
    let max_labels = if spec.flag_motifs { DEAD_FLOAT_OPS.len() } else { SIGNATURES.len() };
    let invalid = |m: String| DataError::Row { file: "synth spec", row: 0, message: m };
    if spec.labels < 2 || spec.labels > max_labels || spec.labels >= space.len() {
        return Err(invalid(format!("labels must lie in 2..={max_labels} and below the space size")));
    }
    if spec.regions < spec.labels {
        return Err(invalid("need at least one region per label".into()));
    }
    for f in [spec.static_fraction, spec.class_a_fraction, spec.size2_shift] {
        if !(0.0..=1.0).contains(&f) {
            return Err(invalid("fractions must lie in [0, 1]".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let base = space.baseline_id;
    let choices: Vec<u32> = (0..space.len() as u32).filter(|&c| c != base).collect();
    let planted: Vec<u32> =
        index::sample(&mut rng, choices.len(), spec.labels).into_iter().map(|i| choices[i]).collect();

    let n = spec.regions;
    let mut label_of: Vec<usize> = (0..n).map(|i| i % spec.labels).collect();
    label_of.shuffle(&mut rng);
    let n_static = if spec.flag_motifs { n } else { (spec.static_fraction * n as f64).round() as usize };
    let mut is_static = vec![false; n];
    for i in index::sample(&mut rng, n, n_static) {
        is_static[i] = true;
    }
    let n_a = (spec.class_a_fraction * n as f64).round() as usize;
    let mut is_a = vec![false; n];
    for i in index::sample(&mut rng, n, n_a) {
        is_a[i] = true;
    }

    let mut ds = RegionDataset::new(space.clone());
    let mut regions = Vec::with_capacity(n);
    let mut manifest = Vec::with_capacity(n);
    let mut counters = Vec::with_capacity(n);
    let width = n.to_string().len().max(3);
    for i in 0..n {
        let id = format!("region{i:0width$}");
        let j = label_of[i];
        let motif_class = spec.flag_motifs.then_some(if is_a[i] { 'A' } else { 'B' });
        let ir = if spec.flag_motifs {
            flag_region(&id, i, j, is_a[i], &mut rng)
        } else if is_static[i] {
            static_region(&id, i, j, &mut rng)
        } else {
            // a decoy signature that never names the true label
            let decoy = (j + rng.gen_range(1..spec.labels)) % spec.labels;
            dynamic_region(&id, i, decoy, &mut rng)
        };

        let best1 = planted[j];
        let best2 = if rng.gen_bool(spec.size2_shift) {
            planted[(j + rng.gen_range(1..spec.labels)) % spec.labels]
        } else {
            best1
        };
        for (size, best, scale) in [(InputSize::Size1, best1, 1.0), (InputSize::Size2, best2, 4.0)] {
            let base_time = scale * rng.gen_range(1.0e6..1.0e7_f64).round();
            let gain: f64 = rng.gen_range(1.3..2.5);
            let best_time = base_time / gain;
            for c in 0..space.len() as u32 {
                let time = if c == base {
                    base_time
                } else if c == best {
                    best_time
                } else {
                    best_time * rng.gen_range(1.3..3.0)
                };
                ds.insert(TimingRecord { region_id: id.clone(), config_id: c, input_size: size, time })
                    .map_err(invalid)?;
            }
        }
        // a 4 x 4 grid over the two counters, with jitter well inside a cell
        let power = 40.0 + 15.0 * (j % 4) as f64 + rng.gen_range(-2.0..2.0);
        let miss = 0.05 + 0.2 * (j / 4) as f64 + rng.gen_range(-0.03..0.03);
        counters.push(CounterRecord { region_id: id.clone(), values: vec![round6(power), round6(miss)] });

        let static_ok = spec.flag_motifs || is_static[i];
        manifest.push(ManifestEntry { region_id: id.clone(), true_label: best1, predictable_statically: static_ok });
        regions.push(SynthRegion { id, ir, label: best1, static_ok, motif_class });
    }
    ds.attach_counters(COUNTER_SCHEMA.iter().map(|s| s.to_string()).collect(), counters);
    let sequences = if spec.flag_motifs {
        FLAG_SEQUENCES.iter().enumerate().map(|(k, p)| FlagSequence::explicit(k as u32 + 1, p)).collect()
    } else {
        Vec::new()
    };
    Ok(SynthCorpus { regions, dataset: ds, manifest, planted, sequences })
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Emits the common loop skeleton around `body`.
struct Region {
    text: String,
    body: String,
    next: usize,
    blocks: usize,
}

impl Region {
    fn new() -> Self {
        Region { text: String::new(), body: String::new(), next: 0, blocks: 1 }
    }

    fn fresh(&mut self, stem: &str) -> String {
        self.next += 1;
        format!("%{stem}{}", self.next)
    }

    fn line(&mut self, s: &str) {
        let _ = writeln!(self.body, "  {s}");
    }

    /// Address of `base[%i + offset]` for element type `ty`.
    fn addr(&mut self, ty: &str, base: &str, offset: u32) -> String {
        let idx = if offset == 0 {
            "%i".to_string()
        } else {
            let o = self.fresh("off");
            self.line(&format!("{o} = add i64 %i, {offset}"));
            o
        };
        let p = self.fresh("p");
        self.line(&format!("{p} = getelementptr {ty}, ptr {base}, i64 {idx}"));
        p
    }

    fn load(&mut self, ty: &str, base: &str, offset: u32) -> String {
        let p = self.addr(ty, base, offset);
        let v = self.fresh("v");
        self.line(&format!("{v} = load {ty}, ptr {p}"));
        v
    }

    fn store(&mut self, ty: &str, value: &str, base: &str, offset: u32) {
        let p = self.addr(ty, base, offset);
        self.line(&format!("store {ty} {value}, ptr {p}"));
    }

    /// Ends the current body block and opens the next one.
    fn split(&mut self) {
        let label = format!("body{}", self.blocks);
        self.blocks += 1;
        self.line(&format!("br label %{label}"));
        let _ = writeln!(self.body, "{label}:");
    }

    fn filler(&mut self, rng: &mut ChaCha8Rng) {
        for _ in 0..rng.gen_range(1..=4) {
            let off = rng.gen_range(2..10);
            let v = self.load("double", "%a", off);
            self.store("double", &v, "%b", off);
            if rng.gen_bool(0.4) {
                self.split();
            }
        }
    }

    /// Chain of `op` over values loaded from `%a`, stored to `%b` when `live`.
    fn loaded_chain(&mut self, op: &str, ty: &str, len: usize, live: bool) {
        let mut acc = self.load(ty, "%a", 0);
        let w = self.load(ty, "%a", 1);
        for _ in 0..len {
            let r = self.fresh("s");
            self.line(&format!("{r} = {op} {ty} {acc}, {w}"));
            acc = r;
        }
        if live {
            self.store(ty, &acc, "%b", 0);
        }
    }

    fn finish(mut self, id: &str, index: usize) -> String {
        let _ = writeln!(self.text, "; ModuleID = '{id}'");
        let _ = writeln!(self.text, "source_filename = \"{id}.c\"\n");
        let _ = writeln!(self.text, "define internal void @.omp_outlined.{index}(ptr %a, ptr %b, ptr %idx, i64 %n) {{");
        let _ = writeln!(self.text, "entry:\n  br label %header");
        let _ = writeln!(self.text, "header:\n  %i = phi i64 [ 0, %entry ], [ %i.next, %latch ]");
        let _ = writeln!(self.text, "  %cond = icmp slt i64 %i, %n\n  br i1 %cond, label %body0, label %exit");
        let _ = writeln!(self.text, "body0:");
        self.text.push_str(&self.body);
        let _ = writeln!(self.text, "  br label %latch");
        let _ = writeln!(self.text, "latch:\n  %i.next = add i64 %i, 1\n  br label %header");
        let _ = writeln!(self.text, "exit:\n  call void @__kmpc_barrier(ptr %a)\n  ret void\n}}\n");
        let _ = writeln!(self.text, "declare void @__kmpc_barrier(ptr)");
        self.text
    }
}

fn static_region(id: &str, index: usize, label: usize, rng: &mut ChaCha8Rng) -> String {
    let mut r = Region::new();
    r.filler(rng);
    let (op, ty) = SIGNATURES[label];
    r.loaded_chain(op, ty, rng.gen_range(3..=6), true);
    r.filler(rng);
    r.finish(id, index)
}

fn dynamic_region(id: &str, index: usize, decoy: usize, rng: &mut ChaCha8Rng) -> String {
    let mut r = Region::new();
    r.filler(rng);
    let (op, ty) = SIGNATURES[decoy];
    r.loaded_chain(op, ty, rng.gen_range(3..=6), true);
    // indirect gathers through an index array
    for _ in 0..rng.gen_range(1..=2) {
        let j = r.load("i32", "%idx", 0);
        let j64 = r.fresh("j");
        r.line(&format!("{j64} = sext i32 {j} to i64"));
        let p = r.fresh("p");
        r.line(&format!("{p} = getelementptr double, ptr %b, i64 {j64}"));
        let x = r.fresh("g");
        r.line(&format!("{x} = load double, ptr {p}"));
        r.store("double", &x, "%a", 0);
    }
    r.filler(rng);
    r.finish(id, index)
}

fn flag_region(id: &str, index: usize, label: usize, class_a: bool, rng: &mut ChaCha8Rng) -> String {
    let mut r = Region::new();
    r.filler(rng);
    let len = rng.gen_range(3..=6);
    if class_a {
        r.loaded_chain(DEAD_FLOAT_OPS[label], "float", len, false);
    } else {
        let op = CONST_INT_OPS[label];
        let mut acc = "7".to_string();
        for _ in 0..len {
            let v = r.fresh("c");
            r.line(&format!("{v} = {op} i32 {acc}, 3"));
            acc = v;
        }
        r.store("i32", &acc, "%b", 0);
    }
    r.filler(rng);
    r.finish(id, index)
}
