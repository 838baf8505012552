use std::fmt::Write;

use super::{sanitize_token, GraphEdge, GraphError, GraphNode, ProgramGraph};

/// Renders the line-delimited graph format:
///
/// ```text
/// graph <region_id> <flag_seq_id> <num_nodes> <num_edges>
/// n <index> <kind> <token> <vocab_index>
/// e <src> <dst> <relation> <position>
/// ```
pub fn write_graph(g: &ProgramGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "graph {} {} {} {}",
        sanitize_token(&g.region_id),
        g.flag_seq_id,
        g.nodes.len(),
        g.edges.len()
    );
    for (i, n) in g.nodes.iter().enumerate() {
        let _ = writeln!(out, "n {} {} {} {}", i, n.kind, n.token, n.vocab_index);
    }
    for e in &g.edges {
        let _ = writeln!(out, "e {} {} {} {}", e.src, e.dst, e.relation, e.position);
    }
    out
}

pub fn read_graph(text: &str) -> Result<ProgramGraph, GraphError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let err = |line: usize, message: String| GraphError::Format { line: line + 1, message };

    let (hl, header) = lines.next().ok_or_else(|| err(0, "missing header".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 || h[0] != "graph" {
        return Err(err(hl, "expected `graph <region_id> <flag_seq_id> <num_nodes> <num_edges>`".into()));
    }
    let num = |s: &str, line: usize| s.parse::<usize>().map_err(|_| err(line, format!("bad number `{s}`")));
    let flag_seq_id = num(h[2], hl)? as u32;
    let (num_nodes, num_edges) = (num(h[3], hl)?, num(h[4], hl)?);

    let mut g = ProgramGraph {
        region_id: h[1].to_string(),
        flag_seq_id,
        nodes: Vec::with_capacity(num_nodes),
        edges: Vec::with_capacity(num_edges),
    };
    for (ln, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["n", idx, kind, token, vocab] => {
                if num(idx, ln)? != g.nodes.len() {
                    return Err(err(ln, "node indices must be consecutive".into()));
                }
                g.nodes.push(GraphNode {
                    kind: kind.parse().map_err(|m| err(ln, m))?,
                    token: token.to_string(),
                    vocab_index: num(vocab, ln)?,
                });
            }
            ["e", src, dst, rel, pos] => {
                let e = GraphEdge {
                    src: num(src, ln)?,
                    dst: num(dst, ln)?,
                    relation: rel.parse().map_err(|m| err(ln, m))?,
                    position: num(pos, ln)? as u32,
                };
                if e.src >= num_nodes || e.dst >= num_nodes {
                    return Err(err(ln, "edge endpoint out of range".into()));
                }
                g.edges.push(e);
            }
            _ => return Err(err(ln, format!("unrecognised line `{line}`"))),
        }
    }
    if g.nodes.len() != num_nodes || g.edges.len() != num_edges {
        return Err(err(hl, "node or edge count disagrees with header".into()));
    }
    if g.nodes.is_empty() {
        return Err(err(hl, "graph has no nodes".into()));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, Vocabulary};
    use crate::ir::parse_ir;

    #[test]
    fn round_trip() {
        let m = parse_ir(
            "declare double @sqrt(double)\n\
             define double @f([4 x double] %v, double %x) {\nentry:\n  %a = call double @sqrt(double %x)\n  ret double %a\n}\n",
        )
        .unwrap();
        let mut g = build_graph(&m, &Vocabulary::empty()).unwrap();
        g.region_id = "mod__f".into();
        g.flag_seq_id = 17;
        let text = write_graph(&g);
        assert!(text.contains("[4_x_double]"));
        assert_eq!(read_graph(&text).unwrap(), g);
    }

    #[test]
    fn rejects_count_mismatch() {
        let text = "graph r 0 2 0\nn 0 instruction ret 0\n";
        assert!(read_graph(text).is_err());
        let bad_edge = "graph r 0 1 1\nn 0 instruction ret 0\ne 0 3 data 0\n";
        assert!(read_graph(bad_edge).is_err());
    }
}
