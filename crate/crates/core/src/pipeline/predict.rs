use super::evaluate::Mode;
use super::flags::FlagModel;
use super::hybrid::{DynamicModel, HybridRouter};
use super::{infer, PipelineError};
use crate::graph::{build_graph, Vocabulary};
use crate::ir::IrModule;
use crate::nn::GraphInput;
use crate::passes::{apply_sequence_internal, FlagSequence};
use crate::StaticModel;

/// Everything needed to predict a configuration for a new region.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub vocab: Vocabulary,
    pub static_model: StaticModel,
    /// Sequence for the explored flag mode; the identity when absent.
    pub explored_seq: Option<FlagSequence>,
    pub flag_model: Option<FlagModel>,
    /// Sequences the flag model may answer with.
    pub flag_sequences: Vec<FlagSequence>,
    pub router: Option<HybridRouter>,
    pub dynamic: Option<DynamicModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub region: String,
    pub config: u32,
    pub provenance: Provenance,
    /// Set when the router asks for the region to be profiled.
    pub profiling_request: bool,
    pub flag_seq: u32,
}

fn vector_of(
    region: &IrModule,
    seq: &FlagSequence,
    bundle: &ModelBundle,
) -> Result<(u32, Vec<f64>), PipelineError> {
    let compiled = apply_sequence_internal(region, seq)?;
    let g = build_graph(&compiled, &bundle.vocab)?;
    let input = GraphInput::new(&g, bundle.static_model.vocab_size())?;
    Ok(infer(&bundle.static_model, &input))
}

/// Compiles `region` with the chosen flag sequence and predicts its
/// configuration. In hybrid mode a region the router distrusts is flagged
/// for profiling and, when `counters` are given, answered by the dynamic
/// model; with `strict` and no counters that is an error.
pub fn predict_end_to_end(
    region: &IrModule,
    bundle: &ModelBundle,
    mode: Mode,
    predicted_flags: bool,
    counters: Option<&[f64]>,
    strict: bool,
) -> Result<Prediction, PipelineError> {
    let explored = bundle.explored_seq.clone().unwrap_or_else(FlagSequence::identity);
    let seq = if predicted_flags {
        let fm = bundle
            .flag_model
            .as_ref()
            .ok_or_else(|| PipelineError::Mismatch("predicted flag mode needs a flag model".into()))?;
        let (_, probe_vector) = vector_of(region, &fm.probe_sequence, bundle)?;
        let id = fm.predict(&probe_vector);
        bundle
            .flag_sequences
            .iter()
            .find(|s| s.id == id)
            .cloned()
            .ok_or_else(|| PipelineError::Mismatch(format!("flag model chose unknown sequence {id}")))?
    } else {
        explored.clone()
    };
    let (mut config, vector) = vector_of(region, &seq, bundle)?;
    let mut provenance = Provenance::Static;
    let mut profiling_request = false;
    if mode == Mode::Hybrid {
        let router =
            bundle.router.as_ref().ok_or_else(|| PipelineError::Mismatch("hybrid mode needs a router".into()))?;
        let route_vector = if predicted_flags {
            let probe = &bundle.flag_model.as_ref().expect("checked above").probe_sequence;
            vector_of(region, probe, bundle)?.1
        } else {
            vector
        };
        if router.needs_dynamic(&route_vector) {
            profiling_request = true;
            match (counters, &bundle.dynamic) {
                (Some(c), Some(d)) => {
                    config = d.predict(c)?;
                    provenance = Provenance::Dynamic;
                }
                _ if strict => {
                    return Err(PipelineError::Mismatch(format!("region `{}` needs counters", region.name)))
                }
                _ => {}
            }
        }
    }
    Ok(Prediction { region: region.name.clone(), config, provenance, profiling_request, flag_seq: seq.id })
}
