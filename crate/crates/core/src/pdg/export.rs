// SPDX-License-Identifier: Apache-2.0

use super::{DataEdge, FuncRoles, Pdg, Vertex, VertexId, VertexKind};
use serde::{Deserialize, Serialize};
use std::fmt::Write;

#[derive(Debug, thiserror::Error)]
pub enum JsonError {
    #[error("malformed graph document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("vertex at position {pos} has id {id}")]
    NonDenseId { pos: usize, id: u32 },
    #[error("{what} refers to missing vertex {id}")]
    Dangling { what: String, id: u32 },
    #[error("vertex {id} is owned by unknown function {owner}")]
    UnknownOwner { id: u32, owner: u32 },
    #[error("edge label {id} is not a guard vertex")]
    LabelNotGuard { id: u32 },
}

#[derive(Serialize, Deserialize)]
struct Doc {
    vertices: Vec<Vertex>,
    data_edges: Vec<DataEdge>,
    control_edges: Vec<(VertexId, VertexId)>,
    #[serde(default)]
    roles: Vec<FuncRoles>,
}

pub fn export_json(g: &Pdg) -> String {
    let doc = Doc {
        vertices: g.vertices.clone(),
        data_edges: g.edges.clone(),
        control_edges: g.control.clone(),
        roles: g.funcs.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("graph serializes");
    s.push('\n');
    s
}

/// Read a graph written by [`export_json`]. Structural role sets are
/// recomputed from vertex kinds; source and sink roles are taken as stored.
pub fn import_json(text: &str) -> Result<Pdg, JsonError> {
    let doc: Doc = serde_json::from_str(text)?;
    let n = doc.vertices.len() as u32;
    for (pos, v) in doc.vertices.iter().enumerate() {
        if v.id.0 as usize != pos {
            return Err(JsonError::NonDenseId { pos, id: v.id.0 });
        }
        if v.owner.index() >= doc.roles.len() {
            return Err(JsonError::UnknownOwner {
                id: v.id.0,
                owner: v.owner.0,
            });
        }
        if let Some(gi) = &v.guard {
            for r in gi.operand.iter().chain(gi.parent.iter()) {
                check(r.0, n, "guard operand")?;
            }
        }
    }
    for e in &doc.data_edges {
        check(e.src.0, n, "edge source")?;
        check(e.dst.0, n, "edge target")?;
        if let Some(l) = e.label {
            check(l.0, n, "edge label")?;
            if doc.vertices[l.index()].kind != VertexKind::Guard {
                return Err(JsonError::LabelNotGuard { id: l.0 });
            }
        }
    }
    for (a, b) in &doc.control_edges {
        check(a.0, n, "control edge")?;
        check(b.0, n, "control edge")?;
    }
    for f in &doc.roles {
        for v in f.src.iter().chain(&f.sink) {
            check(v.0, n, "role set")?;
        }
    }
    Ok(Pdg::from_parts(
        doc.vertices,
        doc.data_edges,
        doc.control_edges,
        doc.roles,
    ))
}

fn check(id: u32, n: u32, what: &str) -> Result<(), JsonError> {
    if id >= n {
        return Err(JsonError::Dangling {
            what: what.to_string(),
            id,
        });
    }
    Ok(())
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Graphviz rendering. Functions become clusters, guard labels and call
/// tags are printed on edges, and role sets pick node shapes.
pub fn export_dot(g: &Pdg) -> String {
    let mut out = String::from("digraph pdg {\n");
    for (fi, f) in g.funcs.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{fi} {{");
        let _ = writeln!(out, "    label={};", quote(&f.name));
        for v in g.vertices.iter().filter(|v| v.owner.index() == fi) {
            let shape = if g.is_src(v.id) {
                "invtriangle"
            } else if g.is_sink(v.id) {
                "doubleoctagon"
            } else {
                match v.kind {
                    VertexKind::Guard => "diamond",
                    VertexKind::FormalParam | VertexKind::FormalReturn => "box",
                    VertexKind::ActualParam | VertexKind::ActualReturn => "box",
                    VertexKind::Operator => "circle",
                    _ => "ellipse",
                }
            };
            let style = match v.kind {
                VertexKind::ActualParam | VertexKind::ActualReturn => " style=rounded",
                _ => "",
            };
            let _ = writeln!(
                out,
                "    n{} [label={} shape={shape}{style}];",
                v.id.0,
                quote(&v.name)
            );
        }
        out.push_str("  }\n");
    }
    for e in &g.edges {
        let mut attrs = Vec::new();
        if let Some(l) = e.label {
            attrs.push(format!("label={}", quote(g.name(l))));
        }
        if let Some(t) = e.tag {
            attrs.push(format!("label={}", quote(&t.to_string())));
            attrs.push("style=dashed".to_string());
        }
        if attrs.is_empty() {
            let _ = writeln!(out, "  n{} -> n{};", e.src.0, e.dst.0);
        } else {
            let _ = writeln!(out, "  n{} -> n{} [{}];", e.src.0, e.dst.0, attrs.join(" "));
        }
    }
    for (a, b) in &g.control {
        let _ = writeln!(out, "  n{} -> n{} [style=dotted arrowhead=empty];", a.0, b.0);
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, CallGraph};

    fn fig1() -> Pdg {
        let p = parse_program(include_str!("../../corpus/fig1.vf")).unwrap();
        Pdg::build(&p, &CallGraph::build(&p))
    }

    fn empty() -> Pdg {
        let p = parse_program("").unwrap();
        Pdg::build(&p, &CallGraph::build(&p))
    }

    #[test]
    fn empty_graph_shapes() {
        assert_eq!(export_dot(&empty()), "digraph pdg {\n}\n");
        let v: serde_json::Value = serde_json::from_str(&export_json(&empty())).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"vertices": [], "data_edges": [], "control_edges": [], "roles": []})
        );
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let g = fig1();
        let text = export_json(&g);
        let back = import_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(export_json(&back), text);
    }

    #[test]
    fn hand_written_fixture() {
        let text = r#"{
          "vertices": [
            {"id": 0, "name": "NULL_2", "kind": "null-const", "line": 2, "owner": 0},
            {"id": 1, "name": "y_3", "kind": "value", "line": 3, "owner": 0},
            {"id": 2, "name": "*y_4", "kind": "deref-sink", "line": 4, "owner": 0}
          ],
          "data_edges": [{"src": 0, "dst": 1}, {"src": 1, "dst": 2}],
          "control_edges": [],
          "roles": [{"name": "main", "fp": [], "fr": null, "ap": [], "ar": [],
                     "src": [0], "sink": [2], "guards": []}]
        }"#;
        let g = import_json(text).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(g.is_src(VertexId(0)) && g.is_sink(VertexId(2)));
        assert_eq!(g.out_edges(VertexId(1)).len(), 1);
    }

    #[test]
    fn dangling_and_malformed_documents() {
        let bad = r#"{"vertices": [], "data_edges": [{"src": 0, "dst": 1}], "control_edges": []}"#;
        assert!(matches!(import_json(bad), Err(JsonError::Dangling { .. })));
        assert!(matches!(import_json("{"), Err(JsonError::Malformed(_))));
    }

    #[test]
    fn fig1_dot_has_two_guard_labels() {
        let dot = export_dot(&fig1());
        let guarded = dot
            .lines()
            .filter(|l| l.contains("->") && l.contains("label=\"g_"))
            .count();
        assert_eq!(guarded, 2);
        assert!(dot.contains("label=\"]2\" style=dashed"));
    }
}
