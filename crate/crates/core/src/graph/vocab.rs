use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use super::{build_graph, GraphError, ProgramGraph};
use crate::ir::IrModule;

/// Token reserved at index 0 for everything outside the vocabulary.
pub const UNKNOWN_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    /// Known tokens; `tokens[i]` has index `i + 1`.
    tokens: Vec<String>,
    counts: Vec<usize>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub const UNKNOWN_INDEX: usize = 0;

    /// A vocabulary where every token is unknown.
    pub fn empty() -> Self {
        Vocabulary { tokens: Vec::new(), counts: Vec::new(), index: HashMap::new() }
    }

    fn from_ranked(ranked: Vec<(String, usize)>) -> Self {
        let mut v = Vocabulary::empty();
        for (t, c) in ranked {
            v.index.insert(t.clone(), v.tokens.len() + 1);
            v.tokens.push(t);
            v.counts.push(c);
        }
        v
    }

    pub fn index(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(Self::UNKNOWN_INDEX)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        match index {
            0 => Some(UNKNOWN_TOKEN),
            i => self.tokens.get(i - 1).map(String::as_str),
        }
    }

    /// Number of indices, including the unknown slot.
    pub fn len(&self) -> usize {
        self.tokens.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// One `index<TAB>token<TAB>count` line per known token.
    pub fn write(&self) -> String {
        let mut out = String::new();
        for (i, (t, c)) in self.tokens.iter().zip(&self.counts).enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}", i + 1, t, c);
        }
        out
    }

    pub fn read(text: &str) -> Result<Self, GraphError> {
        let mut ranked = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: &str| GraphError::VocabFormat { line: n + 1, message: message.to_string() };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err("expected `index<TAB>token<TAB>count`"));
            }
            let index: usize = fields[0].parse().map_err(|_| err("bad index"))?;
            if index != ranked.len() + 1 {
                return Err(err("indices must be consecutive from 1"));
            }
            let count: usize = fields[2].parse().map_err(|_| err("bad count"))?;
            ranked.push((fields[1].to_string(), count));
        }
        Ok(Vocabulary::from_ranked(ranked))
    }
}

/// Ranks the tokens of `graphs` by descending frequency, then lexicographically.
/// Tokens seen fewer than `min_count` times stay unknown.
pub fn vocabulary_from_graphs<'a>(
    graphs: impl IntoIterator<Item = &'a ProgramGraph>,
    min_count: usize,
) -> Result<Vocabulary, GraphError> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut any = false;
    for g in graphs {
        any = true;
        for n in &g.nodes {
            *counts.entry(n.token.as_str()).or_default() += 1;
        }
    }
    if !any {
        return Err(GraphError::EmptyCorpus);
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count.max(1))
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocabulary::from_ranked(ranked))
}

/// Builds the vocabulary over the graphs of a region corpus.
pub fn build_vocabulary(regions: &[IrModule], min_count: usize) -> Result<Vocabulary, GraphError> {
    if regions.is_empty() {
        return Err(GraphError::EmptyCorpus);
    }
    let empty = Vocabulary::empty();
    let graphs = regions.iter().map(|r| build_graph(r, &empty)).collect::<Result<Vec<_>, _>>()?;
    vocabulary_from_graphs(&graphs, min_count)
}
