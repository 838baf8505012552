//! Text formats of the tree-based models. Each starts with a tag line and a
//! few `key value` lines, then the embedded tree text.

use super::flags::FlagModel;
use super::hybrid::{DynamicModel, HybridRouter};
use super::PipelineError;
use crate::ml::DecisionTree;
use crate::passes::{FlagSequence, SequenceOrigin};

const ROUTER_TAG: &str = "hybrid-router 1";
const FLAG_TAG: &str = "flag-model 1";
const DYNAMIC_TAG: &str = "dynamic-model 1";

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn split_list<T: std::str::FromStr>(s: &str, what: &'static str) -> Result<Vec<T>, PipelineError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| x.parse().map_err(|_| PipelineError::Format { what, message: format!("bad list entry `{x}`") }))
        .collect()
}

struct Header<'a> {
    fields: Vec<(&'a str, &'a str)>,
    tree: DecisionTree,
}

fn parse<'a>(text: &'a str, tag: &str, keys: &[&'a str], what: &'static str) -> Result<Header<'a>, PipelineError> {
    let bad = |m: String| PipelineError::Format { what, message: m };
    let mut lines = text.lines();
    if lines.next() != Some(tag) {
        return Err(bad(format!("expected `{tag}`")));
    }
    let mut fields = Vec::new();
    for key in keys {
        let line = lines.next().ok_or_else(|| bad(format!("missing `{key}`")))?;
        let (k, v) = line.split_once(' ').unwrap_or((line, ""));
        if k != *key {
            return Err(bad(format!("expected `{key}`, found `{k}`")));
        }
        fields.push((*key, v.trim()));
    }
    let rest: Vec<&str> = lines.collect();
    let tree = DecisionTree::from_text(&rest.join("\n")).map_err(|e| bad(e.to_string()))?;
    Ok(Header { fields, tree })
}

pub fn write_router(r: &HybridRouter) -> String {
    format!(
        "{ROUTER_TAG}\nthreshold {:?}\nerrors {}\nfeatures {}\n{}",
        r.threshold,
        r.error_source,
        join(&r.feature_subset),
        r.tree.to_text()
    )
}

pub fn read_router(text: &str) -> Result<HybridRouter, PipelineError> {
    const WHAT: &str = "router";
    let h = parse(text, ROUTER_TAG, &["threshold", "errors", "features"], WHAT)?;
    let bad = |m: &str| PipelineError::Format { what: WHAT, message: m.to_string() };
    Ok(HybridRouter {
        threshold: h.fields[0].1.parse().map_err(|_| bad("bad threshold"))?,
        error_source: h.fields[1].1.parse().map_err(|_| bad("bad error source"))?,
        feature_subset: split_list(h.fields[2].1, WHAT)?,
        tree: h.tree,
    })
}

pub fn write_flag_model(m: &FlagModel) -> String {
    format!(
        "{FLAG_TAG}\nprobe {} {}\nfeatures {}\nlabels {}\n{}",
        m.probe_sequence.id,
        m.probe_sequence.passes.join(","),
        join(&m.feature_subset),
        join(&m.flag_labels),
        m.tree.to_text()
    )
}

pub fn read_flag_model(text: &str) -> Result<FlagModel, PipelineError> {
    const WHAT: &str = "flag model";
    let h = parse(text, FLAG_TAG, &["probe", "features", "labels"], WHAT)?;
    let (id, passes) = h.fields[0].1.split_once(' ').unwrap_or((h.fields[0].1, ""));
    let id = id.parse().map_err(|_| PipelineError::Format { what: WHAT, message: "bad probe id".into() })?;
    Ok(FlagModel {
        probe_sequence: FlagSequence { id, passes: split_list(passes, WHAT)?, origin: SequenceOrigin::Explicit },
        feature_subset: split_list(h.fields[1].1, WHAT)?,
        flag_labels: split_list(h.fields[2].1, WHAT)?,
        tree: h.tree,
    })
}

pub fn write_dynamic(m: &DynamicModel) -> String {
    format!("{DYNAMIC_TAG}\nschema {}\n{}", m.counter_schema.join(","), m.tree.to_text())
}

pub fn read_dynamic(text: &str) -> Result<DynamicModel, PipelineError> {
    let h = parse(text, DYNAMIC_TAG, &["schema"], "dynamic model")?;
    Ok(DynamicModel { counter_schema: split_list(h.fields[0].1, "dynamic model")?, tree: h.tree })
}
