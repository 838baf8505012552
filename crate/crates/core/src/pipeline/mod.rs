//! Fold-level training of the static, flag, routing and dynamic models and
//! their evaluation against full exploration.

mod evaluate;
mod flags;
mod hybrid;
mod persist;
mod predict;

pub use evaluate::{
    evaluate, label_sweep, EvalOptions, EvaluationReport, FlagMode, FoldSummary, Mode, RegionRow, SweepPoint,
};
pub use flags::{
    flag_gains, region_flag_labels, select_explored_flag_seq, select_flag_labels, train_flag_model, FlagModel,
};
pub use hybrid::{static_errors, train_dynamic, train_hybrid, DynamicModel, ErrorSource, HybridConfig, HybridRouter};
pub use persist::{
    read_dynamic, read_flag_model, read_router, write_dynamic, write_flag_model, write_router,
};
pub use predict::{predict_end_to_end, ModelBundle, Prediction, Provenance};

use std::collections::BTreeMap;

use crate::dataset::{best_config, relative_difference, DataError, InputSize, RegionDataset};
use crate::graph::{build_graph, vocabulary_from_graphs, ProgramGraph, Vocabulary};
use crate::ir::IrModule;
use crate::ml::MlError;
use crate::passes::{apply_sequence_internal, FlagSequence};
use crate::nn::{train_static_inputs, GraphInput, ModelConfig, NnError};
use crate::{Real, StaticModel};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Pass(#[from] crate::passes::PassError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Ir(#[from] crate::ir::IrError),
    #[error("no graph for region `{region}` under sequence {seq}")]
    MissingGraph { region: String, seq: u32 },
    #[error("no label for region `{0}`")]
    MissingLabel(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("malformed {what} file: {message}")]
    Format { what: &'static str, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Model inputs of every `(region, flag sequence)` graph.
#[derive(Debug, Clone)]
pub struct GraphStore {
    pub vocab_size: usize,
    inputs: BTreeMap<(String, u32), GraphInput<Real>>,
}

impl GraphStore {
    pub fn new(vocab_size: usize) -> Self {
        GraphStore { vocab_size, inputs: BTreeMap::new() }
    }

    pub fn from_graphs<'a>(
        graphs: impl IntoIterator<Item = &'a ProgramGraph>,
        vocab_size: usize,
    ) -> Result<Self, PipelineError> {
        let mut s = GraphStore::new(vocab_size);
        for g in graphs {
            s.insert(g)?;
        }
        Ok(s)
    }

    pub fn insert(&mut self, g: &ProgramGraph) -> Result<(), PipelineError> {
        let input = GraphInput::new(g, self.vocab_size)?;
        self.inputs.insert((g.region_id.clone(), g.flag_seq_id), input);
        Ok(())
    }

    pub fn get(&self, region: &str, seq: u32) -> Result<&GraphInput<Real>, PipelineError> {
        self.inputs
            .get(&(region.to_string(), seq))
            .ok_or_else(|| PipelineError::MissingGraph { region: region.to_string(), seq })
    }

    /// Sequence ids with a graph for `region`, ascending.
    pub fn sequences_of(&self, region: &str) -> Vec<u32> {
        self.inputs.keys().filter(|(r, _)| r == region).map(|(_, s)| *s).collect()
    }

    pub fn regions(&self) -> Vec<String> {
        let mut r: Vec<String> = self.inputs.keys().map(|(r, _)| r.clone()).collect();
        r.dedup();
        r
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Compiles every region under every sequence, builds the vocabulary over the
/// resulting graphs and indexes them with it.
pub fn augment_corpus(
    regions: &[IrModule],
    sequences: &[FlagSequence],
    min_count: usize,
) -> Result<(Vocabulary, Vec<ProgramGraph>), PipelineError> {
    let empty = Vocabulary::empty();
    let mut graphs = Vec::with_capacity(regions.len() * sequences.len());
    for r in regions {
        for s in sequences {
            let mut g = build_graph(&apply_sequence_internal(r, s)?, &empty)?;
            g.region_id = r.name.clone();
            g.flag_seq_id = s.id;
            graphs.push(g);
        }
    }
    let vocab = vocabulary_from_graphs(&graphs, min_count)?;
    for g in &mut graphs {
        g.reindex(&vocab);
    }
    Ok((vocab, graphs))
}

/// Best configuration among `label_ids` for every region with complete
/// size-1 timings.
pub fn assign_labels(ds: &RegionDataset, label_ids: &[u32]) -> Result<BTreeMap<String, u32>, PipelineError> {
    ds.labelable_regions(InputSize::Size1)
        .into_iter()
        .map(|r| {
            let l = best_config(ds, &r, Some(label_ids))?;
            Ok((r, l))
        })
        .collect()
}

fn label_of(labels: &BTreeMap<String, u32>, region: &str) -> Result<u32, PipelineError> {
    labels.get(region).copied().ok_or_else(|| PipelineError::MissingLabel(region.to_string()))
}

/// Trains on every graph of `regions`, or only those under `sequences`.
pub fn train_static_regions(
    store: &GraphStore,
    regions: &[String],
    labels: &BTreeMap<String, u32>,
    sequences: Option<&[u32]>,
    cfg: &ModelConfig,
) -> Result<StaticModel, PipelineError> {
    let mut samples = Vec::new();
    for r in regions {
        let label = label_of(labels, r)?;
        let seqs = match sequences {
            Some(s) => s.to_vec(),
            None => store.sequences_of(r),
        };
        for s in seqs {
            samples.push((store.get(r, s)?.clone(), label));
        }
    }
    Ok(train_static_inputs(&samples, store.vocab_size, cfg)?.model)
}

/// Predicted label and region vector.
pub fn infer(model: &StaticModel, input: &GraphInput<Real>) -> (u32, Vec<Real>) {
    let (logits, vector) = model.logits_and_vector(input);
    let mut best = 0;
    for (i, &z) in logits.iter().enumerate() {
        if z > logits[best] {
            best = i;
        }
    }
    (model.labels[best], vector)
}

/// Relative time difference between `config` and the region's best
/// configuration over the whole space.
pub fn prediction_error(ds: &RegionDataset, region: &str, config: u32) -> Result<f64, PipelineError> {
    let best = best_config(ds, region, None)?;
    let t = |c| ds.time(region, c, InputSize::Size1).expect("complete region");
    Ok(relative_difference(t(config), t(best)))
}
