//! Multi-flow program graphs: instruction, variable, constant and external
//! function nodes joined by control, data and call edges.

mod io;
mod vocab;

pub use io::{read_graph, write_graph};
pub use vocab::{build_vocabulary, vocabulary_from_graphs, Vocabulary, UNKNOWN_TOKEN};

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::ir::{IrFunction, IrModule, Opcode, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Instruction,
    Variable,
    Constant,
    ExternalFunction,
}

impl NodeKind {
    pub const ALL: [NodeKind; 4] =
        [NodeKind::Instruction, NodeKind::Variable, NodeKind::Constant, NodeKind::ExternalFunction];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Instruction => "instruction",
            NodeKind::Variable => "variable",
            NodeKind::Constant => "constant",
            NodeKind::ExternalFunction => "external_function",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Control,
    Data,
    Call,
}

/// Forward relations plus one reverse relation each.
pub const NUM_RELATIONS: usize = 6;

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Control, Relation::Data, Relation::Call];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Relation type of the reversed edge, in `3..6`.
    pub fn reverse_index(self) -> usize {
        self as usize + Relation::ALL.len()
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::Control => "control",
            Relation::Data => "data",
            Relation::Call => "call",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown node kind `{s}`"))
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Relation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown relation `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub kind: NodeKind,
    /// Opcode, type token or callee name. Never contains whitespace.
    pub token: String,
    pub vocab_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GraphEdge {
    pub src: usize,
    pub dst: usize,
    pub relation: Relation,
    pub position: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramGraph {
    pub region_id: String,
    pub flag_seq_id: u32,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("region must contain exactly one defined function, found {0}")]
    DefinedFunctionCount(usize),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("malformed graph file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("malformed vocabulary line {line}: {message}")]
    VocabFormat { line: usize, message: String },
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Callees whose call edges and external-function nodes are dropped.
    pub prune_callees: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GraphStats {
    pub nodes: usize,
    pub control_edges: usize,
    pub data_edges: usize,
    pub call_edges: usize,
    /// Largest in+out degree over all nodes.
    pub max_degree: usize,
}

impl GraphStats {
    pub fn edges(&self) -> usize {
        self.control_edges + self.data_edges + self.call_edges
    }
}

pub fn graph_stats(g: &ProgramGraph) -> GraphStats {
    let mut degree = vec![0usize; g.nodes.len()];
    let mut stats = GraphStats { nodes: g.nodes.len(), ..Default::default() };
    for e in &g.edges {
        degree[e.src] += 1;
        degree[e.dst] += 1;
        match e.relation {
            Relation::Control => stats.control_edges += 1,
            Relation::Data => stats.data_edges += 1,
            Relation::Call => stats.call_edges += 1,
        }
    }
    stats.max_degree = degree.into_iter().max().unwrap_or(0);
    stats
}

/// Replaces whitespace so a token fits in one field of the graph file.
pub fn sanitize_token(s: &str) -> String {
    let t: String = s.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
    if t.is_empty() {
        "_".to_string()
    } else {
        t
    }
}

impl ProgramGraph {
    /// Message-passing edges as `(src, dst, relation type)`, each forward edge
    /// followed by its reverse under relation type `r + 3`.
    pub fn typed_edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.edges.iter().flat_map(|e| {
            [(e.src, e.dst, e.relation.index()), (e.dst, e.src, e.relation.reverse_index())]
        })
    }

    /// Re-resolves every node's vocabulary index against `vocab`.
    pub fn reindex(&mut self, vocab: &Vocabulary) {
        for n in &mut self.nodes {
            n.vocab_index = vocab.index(&n.token);
        }
    }
}

struct Builder<'a> {
    vocab: &'a Vocabulary,
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    seen: HashSet<GraphEdge>,
}

impl Builder<'_> {
    fn node(&mut self, kind: NodeKind, token: &str) -> usize {
        let token = sanitize_token(token);
        let vocab_index = self.vocab.index(&token);
        self.nodes.push(GraphNode { kind, token, vocab_index });
        self.nodes.len() - 1
    }

    fn edge(&mut self, src: usize, dst: usize, relation: Relation, position: u32) {
        let e = GraphEdge { src, dst, relation, position };
        if self.seen.insert(e) {
            self.edges.push(e);
        }
    }
}

pub fn build_graph(region: &IrModule, vocab: &Vocabulary) -> Result<ProgramGraph, GraphError> {
    build_graph_with(region, vocab, &BuildOptions::default())
}

/// Builds the graph of the single defined function in `region`. The region id
/// is the module name and the flag sequence id is 0; callers overwrite both.
pub fn build_graph_with(
    region: &IrModule,
    vocab: &Vocabulary,
    opts: &BuildOptions,
) -> Result<ProgramGraph, GraphError> {
    let defined: Vec<&IrFunction> = region.defined_functions().collect();
    if defined.len() != 1 {
        return Err(GraphError::DefinedFunctionCount(defined.len()));
    }
    let f = defined[0];
    let mut b = Builder { vocab, nodes: Vec::new(), edges: Vec::new(), seen: HashSet::new() };

    // instruction nodes first, in program order
    let mut block_first: HashMap<&str, usize> = HashMap::new();
    let mut inst_nodes: Vec<Vec<usize>> = Vec::with_capacity(f.blocks.len());
    for block in &f.blocks {
        let ids: Vec<usize> =
            block.instructions.iter().map(|i| b.node(NodeKind::Instruction, i.opcode.mnemonic())).collect();
        if let Some(&first) = ids.first() {
            block_first.insert(&block.label, first);
        }
        inst_nodes.push(ids);
    }

    // variables: parameters, then results in program order
    let mut vars: HashMap<&str, usize> = HashMap::new();
    for p in &f.params {
        if let Some(name) = &p.name {
            let id = b.node(NodeKind::Variable, &p.ty);
            vars.insert(name, id);
        }
    }
    for (block, ids) in f.blocks.iter().zip(&inst_nodes) {
        for (inst, &id) in block.instructions.iter().zip(ids) {
            if let Some(r) = &inst.result {
                if inst.result_type() == "void" {
                    continue;
                }
                let v = b.node(NodeKind::Variable, inst.result_type());
                vars.insert(r, v);
                b.edge(id, v, Relation::Data, 0);
            }
        }
    }

    // control flow
    for (block, ids) in f.blocks.iter().zip(&inst_nodes) {
        for w in ids.windows(2) {
            b.edge(w[0], w[1], Relation::Control, 0);
        }
        let (Some(last_inst), Some(&last)) = (block.instructions.last(), ids.last()) else { continue };
        for (pos, succ) in last_inst.successors().into_iter().enumerate() {
            if let Some(&first) = block_first.get(succ) {
                b.edge(last, first, Relation::Control, pos as u32);
            }
        }
    }

    // operands
    let mut constants: HashMap<(String, String), usize> = HashMap::new();
    let mut externals: HashMap<&str, usize> = HashMap::new();
    for (block, ids) in f.blocks.iter().zip(&inst_nodes) {
        for (inst, &id) in block.instructions.iter().zip(ids) {
            let callee = inst.callee();
            for (k, op) in inst.operands.iter().enumerate() {
                let pos = if inst.opcode == Opcode::Phi { (k / 2) as u32 } else { k as u32 };
                match &op.value {
                    Value::Local(name) => {
                        if let Some(&v) = vars.get(name.as_str()) {
                            b.edge(v, id, Relation::Data, pos);
                        }
                    }
                    Value::Const(lit) => {
                        let key = (op.ty.clone(), lit.clone());
                        let c = match constants.get(&key) {
                            Some(&c) => c,
                            None => {
                                let c = b.node(NodeKind::Constant, &op.ty);
                                constants.insert(key, c);
                                c
                            }
                        };
                        b.edge(c, id, Relation::Data, pos);
                    }
                    Value::Label(_) => {}
                    Value::Function(name) => {
                        if opts.prune_callees.contains(name) {
                            continue;
                        }
                        let x = match externals.get(name.as_str()) {
                            Some(&x) => x,
                            None => {
                                let x = b.node(NodeKind::ExternalFunction, name);
                                externals.insert(name, x);
                                x
                            }
                        };
                        if k == 0 && callee == Some(name.as_str()) {
                            b.edge(id, x, Relation::Call, 0);
                            if let Some(&v) = inst.result.as_deref().and_then(|r| vars.get(r)) {
                                b.edge(x, v, Relation::Call, 0);
                            }
                        } else {
                            // a function passed as a value, e.g. to a runtime entry point
                            b.edge(x, id, Relation::Data, pos);
                        }
                    }
                }
            }
        }
    }

    Ok(ProgramGraph { region_id: region.name.clone(), flag_seq_id: 0, nodes: b.nodes, edges: b.edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_ir;
    use crate::passes::{apply_sequence_internal, FlagSequence};

    fn graph(src: &str) -> ProgramGraph {
        build_graph(&parse_ir(src).unwrap(), &Vocabulary::empty()).unwrap()
    }

    fn count_kind(g: &ProgramGraph, k: NodeKind) -> usize {
        g.nodes.iter().filter(|n| n.kind == k).count()
    }

    #[test]
    fn add_ret_fixture() {
        let g = graph("define i32 @f() {\nentry:\n  %a = add i32 1, 2\n  ret i32 %a\n}\n");
        assert_eq!(count_kind(&g, NodeKind::Instruction), 2);
        assert_eq!(count_kind(&g, NodeKind::Variable), 1);
        assert_eq!(count_kind(&g, NodeKind::Constant), 2);
        let s = graph_stats(&g);
        assert_eq!((s.control_edges, s.data_edges, s.call_edges), (1, 4, 0));
        assert_eq!(s.edges(), g.edges.len());
        assert_eq!(s.nodes, 5);
    }

    #[test]
    fn ret_void_is_a_single_node() {
        let g = graph("define void @f() {\nentry:\n  ret void\n}\n");
        assert_eq!(g.nodes.len(), 1);
        assert!(g.edges.is_empty());
        let s = graph_stats(&g);
        assert_eq!(s, GraphStats { nodes: 1, ..Default::default() });
    }

    #[test]
    fn shared_external_callee() {
        let g = graph(
            "declare double @sqrt(double)\n\
             define double @f(double %x) {\nentry:\n  %a = call double @sqrt(double %x)\n  %b = call double @sqrt(double %a)\n  ret double %b\n}\n",
        );
        let ext: Vec<usize> =
            (0..g.nodes.len()).filter(|&i| g.nodes[i].kind == NodeKind::ExternalFunction).collect();
        assert_eq!(ext.len(), 1);
        let incoming = g.edges.iter().filter(|e| e.dst == ext[0] && e.relation == Relation::Call).count();
        assert_eq!(incoming, 2);
        let outgoing = g.edges.iter().filter(|e| e.src == ext[0] && e.relation == Relation::Call).count();
        assert_eq!(outgoing, 2);
    }

    #[test]
    fn prune_list_drops_callee() {
        let m = parse_ir(
            "declare void @__kmpc_barrier(i32)\n\
             define void @f() {\nentry:\n  call void @__kmpc_barrier(i32 0)\n  ret void\n}\n",
        )
        .unwrap();
        let opts = BuildOptions { prune_callees: ["__kmpc_barrier".to_string()].into() };
        let g = build_graph_with(&m, &Vocabulary::empty(), &opts).unwrap();
        assert_eq!(count_kind(&g, NodeKind::ExternalFunction), 0);
        assert_eq!(graph_stats(&g).call_edges, 0);
    }

    #[test]
    fn branches_and_phi_positions() {
        let g = graph(
            "define i32 @f(i1 %c) {\nentry:\n  br i1 %c, label %a, label %b\n\
             a:\n  br label %m\nb:\n  br label %m\n\
             m:\n  %p = phi i32 [ 1, %a ], [ 2, %b ]\n  ret i32 %p\n}\n",
        );
        let s = graph_stats(&g);
        // entry->a, entry->b, a->m, b->m, phi->ret
        assert_eq!(s.control_edges, 5);
        let phi = g.nodes.iter().position(|n| n.token == "phi").unwrap();
        let mut pos: Vec<u32> = g
            .edges
            .iter()
            .filter(|e| e.dst == phi && e.relation == Relation::Data)
            .map(|e| e.position)
            .collect();
        pos.sort();
        assert_eq!(pos, vec![0, 1]);
    }

    #[test]
    fn variable_has_single_defining_edge() {
        let g = graph(
            "define i32 @f(i32 %x) {\nentry:\n  %a = mul i32 %x, %x\n  %b = add i32 %a, %x\n  ret i32 %b\n}\n",
        );
        for (i, n) in g.nodes.iter().enumerate() {
            if n.kind != NodeKind::Variable {
                continue;
            }
            let defs = g
                .edges
                .iter()
                .filter(|e| e.dst == i && e.relation == Relation::Data && g.nodes[e.src].kind == NodeKind::Instruction)
                .count();
            assert!(defs <= 1);
        }
        // mul uses %x twice at distinct positions
        let mul = g.nodes.iter().position(|n| n.token == "mul").unwrap();
        assert_eq!(g.edges.iter().filter(|e| e.dst == mul).count(), 2);
    }

    #[test]
    fn dead_code_elimination_shrinks_graph() {
        let m = parse_ir("define i32 @f(i32 %x) {\nentry:\n  %d = mul i32 %x, 7\n  ret i32 %x\n}\n").unwrap();
        let before = build_graph(&m, &Vocabulary::empty()).unwrap();
        let opt = apply_sequence_internal(&m, &FlagSequence::explicit(1, &["dce"])).unwrap();
        let after = build_graph(&opt, &Vocabulary::empty()).unwrap();
        assert!(after.nodes.len() < before.nodes.len());
    }

    #[test]
    fn rejects_multi_function_region() {
        let m = parse_ir("define void @a() {\n  ret void\n}\ndefine void @b() {\n  ret void\n}\n").unwrap();
        assert!(matches!(build_graph(&m, &Vocabulary::empty()), Err(GraphError::DefinedFunctionCount(2))));
        assert!(matches!(build_graph(&IrModule::default(), &Vocabulary::empty()), Err(GraphError::DefinedFunctionCount(0))));
    }

    #[test]
    fn typed_edges_include_reverse() {
        let g = graph("define i32 @f() {\nentry:\n  %a = add i32 1, 2\n  ret i32 %a\n}\n");
        let typed: Vec<_> = g.typed_edges().collect();
        assert_eq!(typed.len(), 2 * g.edges.len());
        assert!(typed.iter().all(|&(_, _, r)| r < NUM_RELATIONS));
    }
}
