use std::collections::BTreeMap;

use super::{infer, GraphStore, PipelineError};
use crate::dataset::{speedup, RegionDataset};
use crate::ml::{fit_tree, ga_select_features, DecisionTree, GaConfig};
use crate::passes::FlagSequence;
use crate::StaticModel;

/// `gains[r][s]`: speedup of the configuration the static model predicts
/// from region `r`'s graph under `sequences[s]`.
pub fn flag_gains(
    model: &StaticModel,
    store: &GraphStore,
    ds: &RegionDataset,
    regions: &[String],
    sequences: &[u32],
) -> Result<Vec<Vec<f64>>, PipelineError> {
    let base = ds.space.baseline_id;
    regions
        .iter()
        .map(|r| {
            sequences
                .iter()
                .map(|&s| {
                    let (config, _) = infer(model, store.get(r, s)?);
                    Ok(speedup(ds, r, config, base)?)
                })
                .collect()
        })
        .collect()
}

fn mean_column(gains: &[Vec<f64>], s: usize) -> f64 {
    gains.iter().map(|row| row[s]).sum::<f64>() / gains.len() as f64
}

/// The sequence with the highest mean predicted-configuration speedup over
/// `regions`; ties go to the lower id.
pub fn select_explored_flag_seq(
    model: &StaticModel,
    store: &GraphStore,
    ds: &RegionDataset,
    regions: &[String],
    sequences: &[u32],
) -> Result<u32, PipelineError> {
    let mut ids = sequences.to_vec();
    ids.sort_unstable();
    if ids.is_empty() || regions.is_empty() {
        return Err(PipelineError::Mismatch("explored sequence needs regions and sequences".into()));
    }
    let gains = flag_gains(model, store, ds, regions, &ids)?;
    Ok(ids[argmax_mean(&gains, ids.len())])
}

fn argmax_mean(gains: &[Vec<f64>], n: usize) -> usize {
    let mut best = 0;
    let mut best_mean = mean_column(gains, 0);
    for s in 1..n {
        let m = mean_column(gains, s);
        if m > best_mean {
            best = s;
            best_mean = m;
        }
    }
    best
}

/// Greedy forward selection over the columns of `gains` until the mean
/// best-of-selected gain reaches `coverage` times the per-region oracle mean.
pub fn select_flag_labels(gains: &[Vec<f64>], sequence_ids: &[u32], coverage: f64) -> Result<Vec<u32>, PipelineError> {
    let n = sequence_ids.len();
    if gains.is_empty() || n == 0 || gains.iter().any(|r| r.len() != n) {
        return Err(PipelineError::Mismatch("gain matrix does not match the sequence list".into()));
    }
    let rows = gains.len() as f64;
    let oracle: f64 = gains.iter().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum::<f64>() / rows;
    let target = coverage * oracle;
    let mut best = vec![f64::NEG_INFINITY; gains.len()];
    let mut chosen: Vec<usize> = Vec::new();
    loop {
        let mut pick: Option<(usize, f64)> = None;
        for s in (0..n).filter(|s| !chosen.contains(s)) {
            let mean = gains.iter().zip(&best).map(|(r, &b)| b.max(r[s])).sum::<f64>() / rows;
            if pick.is_none_or(|(_, m)| mean > m) {
                pick = Some((s, mean));
            }
        }
        let Some((s, mean)) = pick else { break };
        for (b, r) in best.iter_mut().zip(gains) {
            *b = b.max(r[s]);
        }
        chosen.push(s);
        if mean >= target {
            break;
        }
    }
    Ok(chosen.into_iter().map(|s| sequence_ids[s]).collect())
}

/// Each region's best sequence among `flag_labels`, ties to the lower id.
pub fn region_flag_labels(gains: &[Vec<f64>], sequence_ids: &[u32], flag_labels: &[u32]) -> Vec<u32> {
    let mut allowed: Vec<(u32, usize)> = flag_labels
        .iter()
        .filter_map(|id| sequence_ids.iter().position(|s| s == id).map(|k| (*id, k)))
        .collect();
    allowed.sort_unstable();
    gains
        .iter()
        .map(|row| {
            let mut best = allowed[0];
            for &(id, k) in &allowed[1..] {
                if row[k] > row[best.1] {
                    best = (id, k);
                }
            }
            best.0
        })
        .collect()
}

/// Predicts the flag sequence to compile a region with, from the region
/// vector of its probe compilation.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagModel {
    pub probe_sequence: FlagSequence,
    pub feature_subset: Vec<usize>,
    pub tree: DecisionTree,
    pub flag_labels: Vec<u32>,
}

impl FlagModel {
    pub fn predict(&self, vector: &[f64]) -> u32 {
        self.tree.predict_by(|f| vector[self.feature_subset[f]])
    }
}

/// GA feature selection and a tree over the probe vectors, labelled with each
/// region's best flag sequence.
pub fn train_flag_model(
    model: &StaticModel,
    store: &GraphStore,
    regions: &[String],
    region_labels: &BTreeMap<String, u32>,
    probe: &FlagSequence,
    flag_labels: &[u32],
    ga: &GaConfig,
) -> Result<FlagModel, PipelineError> {
    if flag_labels.is_empty() {
        return Err(PipelineError::Mismatch("no flag labels".into()));
    }
    let mut x = Vec::with_capacity(regions.len());
    let mut y = Vec::with_capacity(regions.len());
    for r in regions {
        x.push(infer(model, store.get(r, probe.id)?).1);
        y.push(*region_labels.get(r).ok_or_else(|| PipelineError::MissingLabel(r.clone()))?);
    }
    let (feature_subset, tree) = subset_tree(&x, &y, ga, "flag model")?;
    Ok(FlagModel { probe_sequence: probe.clone(), feature_subset, tree, flag_labels: flag_labels.to_vec() })
}

/// GA-selected columns and a tree fitted on them; a constant tree when `y`
/// has one value.
pub(crate) fn subset_tree(
    x: &[Vec<f64>],
    y: &[u32],
    ga: &GaConfig,
    what: &str,
) -> Result<(Vec<usize>, DecisionTree), PipelineError> {
    let width = x.first().map_or(0, |r| r.len());
    let k = ga.subset_size.min(width);
    let mut distinct = y.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() <= 1 {
        log::warn!("{what}: a single training label; using a constant predictor");
        let label = distinct.first().copied().unwrap_or(0);
        return Ok(((0..k).collect(), DecisionTree::constant(k, label)));
    }
    let cfg = GaConfig { subset_size: k, ..ga.clone() };
    let subset = ga_select_features(x, y, &cfg)?.best.selected;
    let projected: Vec<Vec<f64>> = x.iter().map(|r| subset.iter().map(|&f| r[f]).collect()).collect();
    Ok((subset, fit_tree(&projected, y)?))
}
