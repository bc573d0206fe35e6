// SPDX-License-Identifier: Apache-2.0

//! Whole-program dependence graph.
//!
//! Each function contributes its own vertices; call sites are stitched with
//! actual-to-formal and return-to-result edges tagged with the call line.
//! Branch conditions become guard vertices: an edge whose use sits inside a
//! branch is labeled with the innermost guard, and the guard itself receives
//! an edge from the definition of the tested variable (and from its parent
//! guard when branches nest), so the value flow behind a guard is searchable.

mod export;

pub use export::{export_dot, export_json, import_json, JsonError};

use crate::frontend::{CallGraph, CmpOp, Condition, FuncId, ProgramIR, Stmt, StmtKind};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    Value,
    /// Symbolic expression vertex. The mini language has no arithmetic, so
    /// the builder never creates one; imported graphs may.
    Operator,
    Guard,
    NullConst,
    DerefSink,
    FormalParam,
    FormalReturn,
    ActualParam,
    ActualReturn,
}

/// Call-site data attached to actual parameters and actual returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallInfo {
    pub line: u32,
    pub callee: FuncId,
    /// Argument position for actual parameters; 0 for actual returns.
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardInfo {
    /// Definition reaching the tested variable; `None` for opaque tests.
    pub operand: Option<VertexId>,
    /// Operator as seen from this side of the branch.
    pub op: CmpOp,
    /// Set for the `else` side.
    pub negated: bool,
    pub opaque: bool,
    pub parent: Option<VertexId>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub name: String,
    pub kind: VertexKind,
    pub line: u32,
    pub owner: FuncId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call: Option<CallInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<GuardInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallTag {
    Call(u32),
    Return(u32),
}

impl fmt::Display for CallTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CallTag::Call(k) => write!(f, "[{k}"),
            CallTag::Return(k) => write!(f, "]{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataEdge {
    pub src: VertexId,
    pub dst: VertexId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<VertexId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<CallTag>,
}

/// Per-function role sets. `src`/`sink` depend on the checker; the others
/// follow from vertex kinds.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FuncRoles {
    pub name: String,
    /// Formal parameters in parameter order.
    pub fp: Vec<VertexId>,
    pub fr: Option<VertexId>,
    pub ap: Vec<VertexId>,
    pub ar: Vec<VertexId>,
    pub src: Vec<VertexId>,
    pub sink: Vec<VertexId>,
    pub guards: Vec<VertexId>,
}

/// Which vertices count as sources and sinks.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Checker {
    /// Null constants flowing into dereferences.
    #[default]
    Npd,
    /// Vertices whose display names match the given glob patterns.
    Labels {
        sources: Vec<String>,
        sinks: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckerError {
    #[error("bad pattern `{pattern}`: {msg}")]
    Pattern { pattern: String, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pdg {
    vertices: Vec<Vertex>,
    edges: Vec<DataEdge>,
    control: Vec<(VertexId, VertexId)>,
    funcs: Vec<FuncRoles>,
    fwd: Vec<Vec<EdgeId>>,
    bwd: Vec<Vec<EdgeId>>,
    is_src: Vec<bool>,
    is_sink: Vec<bool>,
    /// Actual-return vertex per call line.
    ar_at: HashMap<u32, VertexId>,
    /// Actual-parameter vertices per call line, in argument order.
    ap_at: HashMap<u32, Vec<VertexId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Pdg {
    pub fn build(p: &ProgramIR, _cg: &CallGraph) -> Pdg {
        Builder::new(p).finish()
    }

    /// Assemble a graph from raw parts, recomputing indexes and structural
    /// role sets. `src`/`sink` roles are taken from `funcs` as given.
    pub(crate) fn from_parts(
        vertices: Vec<Vertex>,
        edges: Vec<DataEdge>,
        control: Vec<(VertexId, VertexId)>,
        mut funcs: Vec<FuncRoles>,
    ) -> Pdg {
        for f in &mut funcs {
            f.ap.clear();
            f.ar.clear();
            f.guards.clear();
            f.fr = None;
            f.fp.clear();
        }
        let mut fps: Vec<Vec<VertexId>> = vec![Vec::new(); funcs.len()];
        for v in &vertices {
            let Some(f) = funcs.get_mut(v.owner.index()) else {
                continue;
            };
            match v.kind {
                VertexKind::FormalParam => fps[v.owner.index()].push(v.id),
                VertexKind::FormalReturn => f.fr = Some(v.id),
                VertexKind::ActualParam => f.ap.push(v.id),
                VertexKind::ActualReturn => f.ar.push(v.id),
                VertexKind::Guard => f.guards.push(v.id),
                _ => {}
            }
        }
        for (f, fp) in funcs.iter_mut().zip(fps) {
            f.fp = fp;
        }

        let n = vertices.len();
        let mut fwd = vec![Vec::new(); n];
        let mut bwd = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            fwd[e.src.index()].push(EdgeId(i as u32));
            bwd[e.dst.index()].push(EdgeId(i as u32));
        }
        for l in &mut fwd {
            l.sort_by_key(|e| (edges[e.index()].dst, *e));
        }
        for l in &mut bwd {
            l.sort_by_key(|e| (edges[e.index()].src, *e));
        }

        let mut is_src = vec![false; n];
        let mut is_sink = vec![false; n];
        for f in &funcs {
            for v in &f.src {
                is_src[v.index()] = true;
            }
            for v in &f.sink {
                is_sink[v.index()] = true;
            }
        }

        let mut ar_at = HashMap::new();
        let mut ap_at: HashMap<u32, Vec<VertexId>> = HashMap::new();
        for v in &vertices {
            if let Some(c) = v.call {
                match v.kind {
                    VertexKind::ActualReturn => {
                        ar_at.insert(c.line, v.id);
                    }
                    VertexKind::ActualParam => ap_at.entry(c.line).or_default().push(v.id),
                    _ => {}
                }
            }
        }
        for l in ap_at.values_mut() {
            l.sort_by_key(|v| vertices[v.index()].call.map(|c| c.index));
        }

        Pdg {
            vertices,
            edges,
            control,
            funcs,
            fwd,
            bwd,
            is_src,
            is_sink,
            ar_at,
            ap_at,
        }
    }

    /// Re-derive source and sink roles for another checker.
    pub fn apply_checker(&mut self, checker: &Checker) -> Result<(), CheckerError> {
        let (srcs, sinks): (Vec<bool>, Vec<bool>) = match checker {
            Checker::Npd => self
                .vertices
                .iter()
                .map(|v| {
                    (
                        v.kind == VertexKind::NullConst,
                        v.kind == VertexKind::DerefSink,
                    )
                })
                .unzip(),
            Checker::Labels { sources, sinks } => {
                let compile = |pats: &[String]| -> Result<Vec<glob::Pattern>, CheckerError> {
                    pats.iter()
                        .map(|p| {
                            glob::Pattern::new(p).map_err(|e| CheckerError::Pattern {
                                pattern: p.clone(),
                                msg: e.msg.to_string(),
                            })
                        })
                        .collect()
                };
                let sp = compile(sources)?;
                let kp = compile(sinks)?;
                self.vertices
                    .iter()
                    .map(|v| {
                        // Guards are never endpoints of a value flow.
                        if v.kind == VertexKind::Guard {
                            return (false, false);
                        }
                        (
                            sp.iter().any(|p| p.matches(&v.name)),
                            kp.iter().any(|p| p.matches(&v.name)),
                        )
                    })
                    .unzip()
            }
        };
        for f in &mut self.funcs {
            f.src.clear();
            f.sink.clear();
        }
        for v in &self.vertices {
            let f = &mut self.funcs[v.owner.index()];
            if srcs[v.id.index()] {
                f.src.push(v.id);
            }
            if sinks[v.id.index()] {
                f.sink.push(v.id);
            }
        }
        self.is_src = srcs;
        self.is_sink = sinks;
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v.index()]
    }

    pub fn kind(&self, v: VertexId) -> VertexKind {
        self.vertices[v.index()].kind
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.vertices[v.index()].name
    }

    pub fn edges(&self) -> &[DataEdge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &DataEdge {
        &self.edges[e.index()]
    }

    pub fn control_edges(&self) -> &[(VertexId, VertexId)] {
        &self.control
    }

    pub fn functions(&self) -> &[FuncRoles] {
        &self.funcs
    }

    pub fn roles(&self, f: FuncId) -> &FuncRoles {
        &self.funcs[f.index()]
    }

    /// Outgoing edges, ordered by target id.
    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.fwd[v.index()]
    }

    /// Incoming edges, ordered by source id.
    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.bwd[v.index()]
    }

    pub fn adjacent(&self, v: VertexId, dir: Direction) -> &[EdgeId] {
        match dir {
            Direction::Forward => self.out_edges(v),
            Direction::Backward => self.in_edges(v),
        }
    }

    /// The endpoint of `e` reached when walking it in `dir`.
    pub fn follow(&self, e: EdgeId, dir: Direction) -> VertexId {
        let e = self.edge(e);
        match dir {
            Direction::Forward => e.dst,
            Direction::Backward => e.src,
        }
    }

    pub fn is_src(&self, v: VertexId) -> bool {
        self.is_src[v.index()]
    }

    pub fn is_sink(&self, v: VertexId) -> bool {
        self.is_sink[v.index()]
    }

    pub fn is_guard(&self, v: VertexId) -> bool {
        self.kind(v) == VertexKind::Guard
    }

    /// V_h = V_fp ∪ V_ar ∪ V_src
    pub fn is_head(&self, v: VertexId) -> bool {
        matches!(
            self.kind(v),
            VertexKind::FormalParam | VertexKind::ActualReturn
        ) || self.is_src(v)
    }

    /// V_t = V_ap ∪ V_fr ∪ V_sink ∪ V_g
    pub fn is_tail(&self, v: VertexId) -> bool {
        matches!(
            self.kind(v),
            VertexKind::ActualParam | VertexKind::FormalReturn | VertexKind::Guard
        ) || self.is_sink(v)
    }

    pub fn sources(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertices.len())
            .filter(|&i| self.is_src[i])
            .map(|i| VertexId(i as u32))
    }

    pub fn sinks(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertices.len())
            .filter(|&i| self.is_sink[i])
            .map(|i| VertexId(i as u32))
    }

    pub fn guards(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices
            .iter()
            .filter(|v| v.kind == VertexKind::Guard)
            .map(|v| v.id)
    }

    pub fn actual_return(&self, line: u32) -> Option<VertexId> {
        self.ar_at.get(&line).copied()
    }

    pub fn actual_params(&self, line: u32) -> &[VertexId] {
        self.ap_at.get(&line).map_or(&[], Vec::as_slice)
    }

    pub fn find(&self, name: &str) -> Option<VertexId> {
        self.vertices.iter().find(|v| v.name == name).map(|v| v.id)
    }
}

struct Builder<'p> {
    prog: &'p ProgramIR,
    vertices: Vec<Vertex>,
    edges: Vec<DataEdge>,
    control: Vec<(VertexId, VertexId)>,
    calls: Vec<(u32, FuncId, Vec<VertexId>, Option<VertexId>)>,
    fps: Vec<Vec<VertexId>>,
    frs: Vec<Option<VertexId>>,
}

impl<'p> Builder<'p> {
    fn new(prog: &'p ProgramIR) -> Self {
        Builder {
            prog,
            vertices: Vec::new(),
            edges: Vec::new(),
            control: Vec::new(),
            calls: Vec::new(),
            fps: vec![Vec::new(); prog.functions.len()],
            frs: vec![None; prog.functions.len()],
        }
    }

    fn vertex(&mut self, name: String, kind: VertexKind, line: u32, owner: FuncId) -> VertexId {
        let id = VertexId(self.vertices.len() as u32);
        self.vertices.push(Vertex {
            id,
            name,
            kind,
            line,
            owner,
            call: None,
            guard: None,
        });
        id
    }

    fn edge(&mut self, src: VertexId, dst: VertexId, label: Option<VertexId>, tag: Option<CallTag>) {
        self.edges.push(DataEdge {
            src,
            dst,
            label,
            tag,
        });
    }

    fn finish(mut self) -> Pdg {
        for (fi, f) in self.prog.functions.iter().enumerate() {
            let owner = FuncId(fi as u32);
            let mut defs: HashMap<&str, VertexId> = HashMap::new();
            for p in &f.params {
                let v = self.vertex(format!("{p}_{}", f.line), VertexKind::FormalParam, f.line, owner);
                self.fps[fi].push(v);
                defs.insert(p, v);
            }
            let mut guards = Vec::new();
            self.block(owner, &f.body, &mut defs, &mut guards);
        }

        let calls = std::mem::take(&mut self.calls);
        for (line, callee, aps, ar) in calls {
            for (j, ap) in aps.iter().enumerate() {
                let fp = self.fps[callee.index()][j];
                self.edge(*ap, fp, None, Some(CallTag::Call(line)));
            }
            if let (Some(ar), Some(fr)) = (ar, self.frs[callee.index()]) {
                self.edge(fr, ar, None, Some(CallTag::Return(line)));
            }
        }

        let funcs = self
            .prog
            .functions
            .iter()
            .map(|f| FuncRoles {
                name: f.name.clone(),
                ..FuncRoles::default()
            })
            .collect();
        let mut g = Pdg::from_parts(self.vertices, self.edges, self.control, funcs);
        g.apply_checker(&Checker::Npd).expect("npd roles never fail");
        g
    }

    fn block<'a>(
        &mut self,
        owner: FuncId,
        block: &'a [Stmt],
        defs: &mut HashMap<&'a str, VertexId>,
        guards: &mut Vec<VertexId>,
    ) {
        for s in block {
            self.stmt(owner, s, defs, guards);
        }
    }

    fn stmt<'a>(
        &mut self,
        owner: FuncId,
        s: &'a Stmt,
        defs: &mut HashMap<&'a str, VertexId>,
        guards: &mut Vec<VertexId>,
    ) {
        let i = s.line;
        let label = guards.last().copied();
        let mut created = Vec::new();
        match &s.kind {
            StmtKind::Null { dst } => {
                let v = self.vertex(format!("NULL_{i}"), VertexKind::NullConst, i, owner);
                defs.insert(dst, v);
                created.push(v);
            }
            StmtKind::Copy { dst, src } => {
                let v = self.vertex(format!("{dst}_{i}"), VertexKind::Value, i, owner);
                self.edge(defs[src.as_str()], v, label, None);
                defs.insert(dst, v);
                created.push(v);
            }
            StmtKind::Phi { dst, lhs, rhs } => {
                let v = self.vertex(format!("{dst}_{i}"), VertexKind::Value, i, owner);
                self.edge(defs[lhs.as_str()], v, label, None);
                self.edge(defs[rhs.as_str()], v, label, None);
                defs.insert(dst, v);
                created.push(v);
            }
            StmtKind::Call { dst, callee, args } => {
                let callee = self.prog.lookup(callee).expect("validated callee");
                let mut aps = Vec::new();
                for (j, a) in args.iter().enumerate() {
                    let v = self.vertex(format!("{a}_{i}"), VertexKind::ActualParam, i, owner);
                    self.vertices[v.index()].call = Some(CallInfo {
                        line: i,
                        callee,
                        index: j as u32,
                    });
                    self.edge(defs[a.as_str()], v, label, None);
                    aps.push(v);
                    created.push(v);
                }
                let ar = dst.as_ref().map(|d| {
                    let v = self.vertex(format!("{d}_{i}"), VertexKind::ActualReturn, i, owner);
                    self.vertices[v.index()].call = Some(CallInfo {
                        line: i,
                        callee,
                        index: 0,
                    });
                    defs.insert(d, v);
                    created.push(v);
                    v
                });
                self.calls.push((i, callee, aps, ar));
            }
            StmtKind::Deref { var } => {
                let v = self.vertex(format!("*{var}_{i}"), VertexKind::DerefSink, i, owner);
                self.edge(defs[var.as_str()], v, label, None);
                created.push(v);
            }
            StmtKind::Return { var } => {
                let v = self.vertex(format!("{var}_{i}"), VertexKind::FormalReturn, i, owner);
                self.edge(defs[var.as_str()], v, label, None);
                self.frs[owner.index()] = Some(v);
                created.push(v);
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let g = self.guard(owner, i, cond, false, defs, label);
                created.push(g);
                guards.push(g);
                self.block(owner, then_block, defs, guards);
                guards.pop();
                if let Some(e) = else_block {
                    let ng = self.guard(owner, i, cond, true, defs, label);
                    created.push(ng);
                    guards.push(ng);
                    self.block(owner, e, defs, guards);
                    guards.pop();
                }
            }
        }
        if let Some(g) = label {
            for v in created {
                self.control.push((g, v));
            }
        }
    }

    fn guard(
        &mut self,
        owner: FuncId,
        line: u32,
        cond: &Condition,
        negated: bool,
        defs: &HashMap<&str, VertexId>,
        parent: Option<VertexId>,
    ) -> VertexId {
        let name = if negated {
            format!("!g_{line}")
        } else {
            format!("g_{line}")
        };
        let g = self.vertex(name, VertexKind::Guard, line, owner);
        let opaque = !cond.is_null_test();
        let operand = if opaque {
            None
        } else {
            Some(defs[cond.var.as_str()])
        };
        let op = if negated { cond.op.negate() } else { cond.op };
        let text = if negated {
            format!("!({cond})")
        } else {
            cond.to_string()
        };
        self.vertices[g.index()].guard = Some(GuardInfo {
            operand,
            op,
            negated,
            opaque,
            parent,
            text,
        });
        if let Some(d) = operand {
            self.edge(d, g, None, None);
        }
        if let Some(p) = parent {
            self.edge(p, g, None, None);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    fn build(src: &str) -> Pdg {
        let p = parse_program(src).unwrap();
        let cg = CallGraph::build(&p);
        Pdg::build(&p, &cg)
    }

    fn fig1() -> Pdg {
        build(include_str!("../../corpus/fig1.vf"))
    }

    fn edge_between<'a>(g: &'a Pdg, a: &str, b: &str) -> &'a DataEdge {
        let (a, b) = (g.find(a).unwrap(), g.find(b).unwrap());
        g.edges()
            .iter()
            .find(|e| e.src == a && e.dst == b)
            .unwrap_or_else(|| panic!("no edge {a:?} -> {b:?}"))
    }

    #[test]
    fn single_null_deref() {
        let g = build("func f() {\n  x = null\n  deref x\n}\n");
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
        let e = &g.edges()[0];
        assert_eq!((g.name(e.src), g.name(e.dst)), ("NULL_2", "*x_3"));
        assert_eq!(e.label, None);
        assert_eq!(g.sources().collect::<Vec<_>>(), vec![e.src]);
        assert_eq!(g.sinks().collect::<Vec<_>>(), vec![e.dst]);
    }

    #[test]
    fn fig1_guard_labels() {
        let g = fig1();
        let g7 = g.find("g_7").unwrap();
        let g12 = g.find("g_12").unwrap();
        assert_eq!(edge_between(&g, "c_1", "*c_8").label, Some(g7));
        assert_eq!(edge_between(&g, "p_11", "*p_13").label, Some(g12));
        // the guards' constraints are reachable through e and p
        assert_eq!(edge_between(&g, "e_6", "g_7").label, None);
        assert_eq!(edge_between(&g, "p_11", "g_12").label, None);
        let labeled = g.edges().iter().filter(|e| e.label.is_some()).count();
        assert_eq!(labeled, 2);
    }

    #[test]
    fn fig1_call_tags() {
        let g = fig1();
        let tag = |a, b| edge_between(&g, a, b).tag;
        assert_eq!(tag("m_20", "a_2"), Some(CallTag::Return(2)));
        assert_eq!(tag("m_20", "b_3"), Some(CallTag::Return(3)));
        assert_eq!(tag("a_5", "p_11"), Some(CallTag::Call(5)));
        assert_eq!(tag("b_6", "f_15"), Some(CallTag::Call(6)));
        assert_eq!(tag("f_16", "e_6"), Some(CallTag::Return(6)));
        assert_eq!(g.edges().iter().filter(|e| e.tag.is_some()).count(), 5);
    }

    #[test]
    fn fig1_roles() {
        let g = fig1();
        let names = |vs: &[VertexId]| vs.iter().map(|v| g.name(*v).to_string()).collect::<Vec<_>>();
        let foo = g.roles(FuncId(0));
        assert_eq!(foo.name, "foo");
        assert_eq!(names(&foo.fp), ["c_1"]);
        assert_eq!(names(&foo.ap), ["a_5", "b_6"]);
        assert_eq!(names(&foo.ar), ["a_2", "b_3", "e_6"]);
        assert_eq!(names(&foo.sink), ["*c_8", "*a_9"]);
        let qux = g.roles(FuncId(3));
        assert_eq!(names(&qux.src), ["NULL_19"]);
        assert_eq!(qux.fr.map(|v| g.name(v)), Some("m_20"));
    }

    #[test]
    fn adjacency_is_consistent() {
        let g = fig1();
        let f: usize = (0..g.vertex_count()).map(|i| g.out_edges(VertexId(i as u32)).len()).sum();
        let b: usize = (0..g.vertex_count()).map(|i| g.in_edges(VertexId(i as u32)).len()).sum();
        assert_eq!(f, g.edge_count());
        assert_eq!(b, g.edge_count());
        for (i, e) in g.edges().iter().enumerate() {
            assert!(g.out_edges(e.src).contains(&EdgeId(i as u32)));
            assert!(g.in_edges(e.dst).contains(&EdgeId(i as u32)));
            assert!(!(e.tag.is_some() && e.label.is_some()));
            if let Some(l) = e.label {
                assert!(g.is_guard(l));
            }
        }
    }

    #[test]
    fn else_side_and_nesting() {
        let src = "func f(a) {\n  if (a == null) {\n    if (a != null) {\n      deref a } } else {\n    deref a }\n}\n";
        let g = build(src);
        let outer = g.find("g_2").unwrap();
        let inner = g.find("g_3").unwrap();
        let neg = g.find("!g_2").unwrap();
        assert_eq!(g.vertex(neg).guard.as_ref().unwrap().op, CmpOp::Ne);
        assert_eq!(g.vertex(inner).guard.as_ref().unwrap().parent, Some(outer));
        assert_eq!(edge_between(&g, "g_2", "g_3").label, None);
        assert_eq!(edge_between(&g, "a_1", "*a_4").label, Some(inner));
        assert_eq!(edge_between(&g, "a_1", "*a_5").label, Some(neg));
        assert!(g.control_edges().contains(&(outer, inner)));
    }

    #[test]
    fn opaque_guard_has_no_operand_edge() {
        let g = build("func f(x) {\n  if (x > 1) {\n    deref x }\n}\n");
        let gv = g.find("g_2").unwrap();
        assert!(g.in_edges(gv).is_empty());
        assert!(g.vertex(gv).guard.as_ref().unwrap().opaque);
    }

    #[test]
    fn label_checker() {
        let mut g = fig1();
        g.apply_checker(&Checker::Labels {
            sources: vec!["c_*".into()],
            sinks: vec!["[*]p_*".into()],
        })
        .unwrap();
        let names: Vec<_> = g.sources().map(|v| g.name(v).to_string()).collect();
        assert_eq!(names, ["c_1"]);
        assert_eq!(g.sinks().count(), 1);
        assert!(g
            .apply_checker(&Checker::Labels {
                sources: vec!["[".into()],
                sinks: vec![],
            })
            .is_err());
    }
}
