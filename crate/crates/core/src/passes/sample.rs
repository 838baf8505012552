use std::collections::HashSet;
use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FlagSequence, PassError, PassId, SequenceOrigin};

const RESAMPLE_LIMIT: usize = 64;

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub base_pipeline: Vec<PassId>,
    /// Probability of dropping each pass in a round.
    pub removal_probability: f64,
    /// Down-sampling rounds concatenated into one sequence.
    pub repeats: usize,
    pub count: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(base_pipeline: Vec<PassId>) -> Self {
        SamplerConfig { base_pipeline, removal_probability: 0.8, repeats: 4, count: 1000, seed: 0 }
    }
}

/// Draws `cfg.count` sequences with ids `1..=count` by down-sampling the base
/// pipeline. Duplicates are redrawn a bounded number of times, then kept.
pub fn sample_sequences(cfg: &SamplerConfig) -> Vec<FlagSequence> {
    assert!(
        (0.0..=1.0).contains(&cfg.removal_probability),
        "removal probability must lie in [0, 1]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seen: HashSet<Vec<PassId>> = HashSet::new();
    let mut out = Vec::with_capacity(cfg.count);
    let mut duplicates = 0;
    for id in 1..=cfg.count {
        let mut attempt = 0;
        let passes = loop {
            let mut passes = Vec::new();
            for _ in 0..cfg.repeats {
                for p in &cfg.base_pipeline {
                    if !rng.gen_bool(cfg.removal_probability) {
                        passes.push(p.clone());
                    }
                }
            }
            attempt += 1;
            if seen.insert(passes.clone()) {
                break passes;
            }
            if attempt >= RESAMPLE_LIMIT {
                duplicates += 1;
                break passes;
            }
        };
        out.push(FlagSequence { id: id as u32, passes, origin: SequenceOrigin::Sampled });
    }
    if duplicates > 0 {
        log::warn!("{duplicates} of {} sampled sequences are duplicates", cfg.count);
    }
    out
}

/// Renders the `seq_id<TAB>pass1,pass2,...` manifest.
pub fn write_manifest(seqs: &[FlagSequence]) -> String {
    let mut out = String::new();
    for s in seqs {
        let _ = writeln!(out, "{}\t{}", s.id, s.passes.join(","));
    }
    out
}

pub fn read_manifest(text: &str) -> Result<Vec<FlagSequence>, PassError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, passes) = line.split_once('\t').unwrap_or((line, ""));
        let id: u32 = id.trim().parse().map_err(|_| PassError::Manifest {
            line: i + 1,
            message: format!("bad sequence id `{id}`"),
        })?;
        let passes: Vec<PassId> = passes
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::to_string)
            .collect();
        let origin = if id == 0 { SequenceOrigin::Explicit } else { SequenceOrigin::Sampled };
        out.push(FlagSequence { id, passes, origin });
    }
    Ok(out)
}
