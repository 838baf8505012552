use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::flags::subset_tree;
use super::{infer, label_of, prediction_error, train_static_regions, GraphStore, PipelineError};
use crate::dataset::{kfold, RegionDataset};
use crate::ml::{fit_tree, DecisionTree, GaConfig};
use crate::nn::ModelConfig;
use crate::StaticModel;

/// Router class meaning the static prediction is trusted.
pub const STATIC_OK: u32 = 0;
pub const NEEDS_DYNAMIC: u32 = 1;

/// Where the static-model errors that label the router come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSource {
    /// The model being routed, on its own training regions.
    Resubstitution,
    /// Models trained on the other parts of an inner split of the training regions.
    InnerSplit,
}

impl fmt::Display for ErrorSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorSource::Resubstitution => "resubstitution",
            ErrorSource::InnerSplit => "inner_split",
        })
    }
}

impl std::str::FromStr for ErrorSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "resubstitution" => Ok(ErrorSource::Resubstitution),
            "inner_split" | "inner-split" => Ok(ErrorSource::InnerSplit),
            _ => Err(format!("unknown error source `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridConfig {
    /// A region is static_ok when its static error is below this.
    pub threshold: f64,
    pub error_source: ErrorSource,
    pub inner_folds: usize,
    pub ga: GaConfig,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig { threshold: 0.2, error_source: ErrorSource::Resubstitution, inner_folds: 2, ga: GaConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridRouter {
    pub feature_subset: Vec<usize>,
    /// Classes [`STATIC_OK`] and [`NEEDS_DYNAMIC`].
    pub tree: DecisionTree,
    pub threshold: f64,
    pub error_source: ErrorSource,
}

impl HybridRouter {
    pub fn needs_dynamic(&self, vector: &[f64]) -> bool {
        self.tree.predict_by(|f| vector[self.feature_subset[f]]) == NEEDS_DYNAMIC
    }
}

/// Relative errors of `model`'s predictions for `regions` under sequence `seq`.
pub fn static_errors(
    model: &StaticModel,
    store: &GraphStore,
    ds: &RegionDataset,
    regions: &[String],
    seq: u32,
) -> Result<Vec<f64>, PipelineError> {
    regions.iter().map(|r| prediction_error(ds, r, infer(model, store.get(r, seq)?).0)).collect()
}

/// Fits the router that decides whether `static_model` can be trusted for a
/// region. Returns the router and the training errors it was labelled from.
#[allow(clippy::too_many_arguments)]
pub fn train_hybrid(
    store: &GraphStore,
    ds: &RegionDataset,
    regions: &[String],
    labels: &BTreeMap<String, u32>,
    static_model: &StaticModel,
    seq: u32,
    train_sequences: Option<&[u32]>,
    model_cfg: &ModelConfig,
    cfg: &HybridConfig,
) -> Result<(HybridRouter, Vec<f64>), PipelineError> {
    let errors = match cfg.error_source {
        ErrorSource::Resubstitution => static_errors(static_model, store, ds, regions, seq)?,
        ErrorSource::InnerSplit => {
            let k = cfg.inner_folds.clamp(2, regions.len().max(2));
            let inner = kfold(regions, k, model_cfg.seed.wrapping_add(17))?;
            let mut errors: BTreeMap<String, f64> = BTreeMap::new();
            for fold in 0..k {
                let (fit_on, held) = (inner.train(fold), inner.test(fold));
                let distinct: std::collections::BTreeSet<u32> =
                    fit_on.iter().map(|r| label_of(labels, r)).collect::<Result<_, _>>()?;
                let model = if distinct.len() >= 2 {
                    let inner_cfg = ModelConfig { seed: model_cfg.seed.wrapping_add(fold as u64 + 1), ..model_cfg.clone() };
                    Some(train_static_regions(store, &fit_on, labels, train_sequences, &inner_cfg)?)
                } else {
                    None
                };
                let m = model.as_ref().unwrap_or(static_model);
                for (r, e) in held.iter().zip(static_errors(m, store, ds, &held, seq)?) {
                    errors.insert(r.clone(), e);
                }
            }
            regions.iter().map(|r| errors[r]).collect()
        }
    };
    let x: Vec<Vec<f64>> = regions.iter().map(|r| Ok(infer(static_model, store.get(r, seq)?).1)).collect::<Result<_, PipelineError>>()?;
    let y: Vec<u32> = errors.iter().map(|&e| if e < cfg.threshold { STATIC_OK } else { NEEDS_DYNAMIC }).collect();
    let (feature_subset, tree) = subset_tree(&x, &y, &cfg.ga, "router")?;
    Ok((HybridRouter { feature_subset, tree, threshold: cfg.threshold, error_source: cfg.error_source }, errors))
}

/// Counter-based configuration predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicModel {
    pub counter_schema: Vec<String>,
    pub tree: DecisionTree,
}

impl DynamicModel {
    pub fn predict(&self, counters: &[f64]) -> Result<u32, PipelineError> {
        if counters.len() != self.counter_schema.len() {
            return Err(PipelineError::Mismatch(format!(
                "expected {} counters, got {}",
                self.counter_schema.len(),
                counters.len()
            )));
        }
        Ok(self.tree.predict(counters))
    }
}

/// A tree over the counter values of `regions`, predicting their labels.
pub fn train_dynamic(
    ds: &RegionDataset,
    regions: &[String],
    labels: &BTreeMap<String, u32>,
) -> Result<DynamicModel, PipelineError> {
    let mut x = Vec::with_capacity(regions.len());
    let mut y = Vec::with_capacity(regions.len());
    for r in regions {
        x.push(ds.counters_of(r)?.to_vec());
        y.push(label_of(labels, r)?);
    }
    Ok(DynamicModel { counter_schema: ds.counter_schema.clone(), tree: fit_tree(&x, &y)? })
}
