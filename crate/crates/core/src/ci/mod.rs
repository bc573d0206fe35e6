// SPDX-License-Identifier: Apache-2.0

//! Contribution identification.
//!
//! Computes the necessary set V^N: the head, tail and guard vertices a
//! contributing summary can touch. Summaries whose endpoints fall outside it
//! are never collected by the filtered engine.

use crate::cfl::CflBackend;
use crate::pdg::{Direction, EdgeId, Pdg, VertexId};
use serde::Serialize;
use std::collections::{BTreeSet, VecDeque};

/// Reachability over the data edges of one graph.
///
/// Both methods OR their result into `visited` and return the number of
/// vertices (or edges) taken off the work queue. Calling either twice with
/// disjoint start sets and the same `visited` gives the union.
pub trait ReachabilityBackend {
    fn name(&self) -> &'static str;
    fn graph(&self) -> &Pdg;
    fn reach(&self, starts: &[VertexId], dir: Direction, visited: &mut [bool]) -> u64;
    /// Edge-granularity variant: forward marks edges reachable from a start,
    /// backward marks edges from which a start is reachable.
    fn reach_edges(&self, starts: &[VertexId], dir: Direction, visited: &mut [bool]) -> u64;
}

pub struct BfsBackend<'g> {
    g: &'g Pdg,
}

impl<'g> BfsBackend<'g> {
    pub fn new(g: &'g Pdg) -> Self {
        BfsBackend { g }
    }
}

impl ReachabilityBackend for BfsBackend<'_> {
    fn name(&self) -> &'static str {
        "bfs"
    }

    fn graph(&self) -> &Pdg {
        self.g
    }

    fn reach(&self, starts: &[VertexId], dir: Direction, visited: &mut [bool]) -> u64 {
        let mut queue = VecDeque::new();
        for &s in starts {
            if !visited[s.index()] {
                visited[s.index()] = true;
                queue.push_back(s);
            }
        }
        let mut visits = 0;
        while let Some(v) = queue.pop_front() {
            visits += 1;
            for &e in self.g.adjacent(v, dir) {
                let w = self.g.follow(e, dir);
                if !visited[w.index()] {
                    visited[w.index()] = true;
                    queue.push_back(w);
                }
            }
        }
        visits
    }

    fn reach_edges(&self, starts: &[VertexId], dir: Direction, visited: &mut [bool]) -> u64 {
        let mut queue: VecDeque<EdgeId> = VecDeque::new();
        for &s in starts {
            for &e in self.g.adjacent(s, dir) {
                if !visited[e.index()] {
                    visited[e.index()] = true;
                    queue.push_back(e);
                }
            }
        }
        let mut visits = 0;
        while let Some(e) = queue.pop_front() {
            visits += 1;
            let w = self.g.follow(e, dir);
            for &f in self.g.adjacent(w, dir) {
                if !visited[f.index()] {
                    visited[f.index()] = true;
                    queue.push_back(f);
                }
            }
        }
        visits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Reach {
    #[default]
    Bfs,
    Cfl,
}

/// How the condition phase grows V^N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CondPhase {
    /// Everything that flows into a necessary guard, closed under the
    /// guards labeling those flows.
    #[default]
    Closure,
    /// Forward from the candidates intersected with backward from the
    /// necessary guards.
    Literal,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PhaseCounters {
    pub path_fwd_visits: u64,
    pub path_bwd_visits: u64,
    pub guard_fwd_edge_visits: u64,
    pub guard_bwd_edge_visits: u64,
    pub cond_fwd_visits: u64,
    pub cond_bwd_visits: u64,
    pub cond_edge_visits: u64,
}

impl PhaseCounters {
    /// Check the per-phase visit bounds. Only meaningful for BFS, where
    /// visited sets are shared across all starts of a phase.
    pub fn within_linear_bounds(&self, vertices: usize, edges: usize) -> bool {
        let (v, e) = (2 * vertices as u64, 2 * edges as u64);
        self.path_fwd_visits + self.path_bwd_visits <= v
            && self.guard_fwd_edge_visits + self.guard_bwd_edge_visits <= e
            && self.cond_fwd_visits + self.cond_bwd_visits <= v
            && self.cond_edge_visits <= e
    }

    pub fn total(&self) -> u64 {
        self.path_fwd_visits
            + self.path_bwd_visits
            + self.guard_fwd_edge_visits
            + self.guard_bwd_edge_visits
            + self.cond_fwd_visits
            + self.cond_bwd_visits
            + self.cond_edge_visits
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NecessarySet {
    pub vertices: BTreeSet<VertexId>,
    pub candidates: BTreeSet<VertexId>,
    pub nec_guards: BTreeSet<VertexId>,
    pub counters: PhaseCounters,
}

impl NecessarySet {
    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    /// Dense membership mask for hot lookups.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for v in &self.vertices {
            m[v.index()] = true;
        }
        m
    }

    pub fn to_json(&self, g: &Pdg) -> serde_json::Value {
        let names = |s: &BTreeSet<VertexId>| -> Vec<String> {
            s.iter().map(|&v| g.name(v).to_string()).collect()
        };
        serde_json::json!({
            "vn": names(&self.vertices),
            "candidates": names(&self.candidates),
            "nec_guards": names(&self.nec_guards),
            "counters": self.counters,
        })
    }
}

pub fn identify_contrib(g: &Pdg, reach: Reach, phase: CondPhase) -> NecessarySet {
    match reach {
        Reach::Bfs => identify_contrib_with(&BfsBackend::new(g), phase),
        Reach::Cfl => identify_contrib_with(&CflBackend::new(g), phase),
    }
}

pub fn identify_contrib_with(b: &dyn ReachabilityBackend, phase: CondPhase) -> NecessarySet {
    let mut out = NecessarySet::default();
    identify_path_contrib(b, &mut out);
    gather_nec_guards(b, &mut out);
    match phase {
        CondPhase::Closure => identify_cond_contrib_closure(b, &mut out),
        CondPhase::Literal => identify_cond_contrib(b, &mut out),
    }
    out
}

fn head_or_tail(g: &Pdg, v: VertexId) -> bool {
    g.is_head(v) || g.is_tail(v)
}

pub fn identify_path_contrib(b: &dyn ReachabilityBackend, out: &mut NecessarySet) {
    let g = b.graph();
    let n = g.vertex_count();
    let sources: Vec<VertexId> = g.sources().collect();
    let sinks: Vec<VertexId> = g.sinks().collect();
    let mut src_visited = vec![false; n];
    let mut sink_visited = vec![false; n];
    out.counters.path_fwd_visits = b.reach(&sources, Direction::Forward, &mut src_visited);
    out.counters.path_bwd_visits = b.reach(&sinks, Direction::Backward, &mut sink_visited);
    for i in 0..n {
        let v = VertexId(i as u32);
        let both = src_visited[i] && sink_visited[i];
        if both && head_or_tail(g, v) && !g.is_guard(v) {
            out.vertices.insert(v);
        } else if src_visited[i] || sink_visited[i] {
            out.candidates.insert(v);
        }
    }
}

pub fn gather_nec_guards(b: &dyn ReachabilityBackend, out: &mut NecessarySet) {
    let g = b.graph();
    let m = g.edge_count();
    let starts: Vec<VertexId> = out.vertices.iter().copied().collect();
    let mut fwd = vec![false; m];
    let mut bwd = vec![false; m];
    out.counters.guard_fwd_edge_visits = b.reach_edges(&starts, Direction::Forward, &mut fwd);
    out.counters.guard_bwd_edge_visits = b.reach_edges(&starts, Direction::Backward, &mut bwd);
    for (i, e) in g.edges().iter().enumerate() {
        if fwd[i] && bwd[i] {
            if let Some(l) = e.label {
                out.nec_guards.insert(l);
            }
        }
    }
}

/// Condition phase as written: vertices forward-reachable from a candidate
/// and backward-reachable from a necessary guard.
pub fn identify_cond_contrib(b: &dyn ReachabilityBackend, out: &mut NecessarySet) {
    let g = b.graph();
    let n = g.vertex_count();
    let cands: Vec<VertexId> = out.candidates.iter().copied().collect();
    let guards: Vec<VertexId> = out.nec_guards.iter().copied().collect();
    let mut fwd = vec![false; n];
    let mut bwd = vec![false; n];
    out.counters.cond_fwd_visits = b.reach(&cands, Direction::Forward, &mut fwd);
    out.counters.cond_bwd_visits = b.reach(&guards, Direction::Backward, &mut bwd);
    for i in 0..n {
        let v = VertexId(i as u32);
        if fwd[i] && bwd[i] && head_or_tail(g, v) {
            out.vertices.insert(v);
        }
    }
}

/// Condition phase used by default: every head or tail on a flow into a
/// necessary guard, where guards labeling those flows become necessary too.
pub fn identify_cond_contrib_closure(b: &dyn ReachabilityBackend, out: &mut NecessarySet) {
    let g = b.graph();
    let mut seen = vec![false; g.edge_count()];
    let mut starts: Vec<VertexId> = out.nec_guards.iter().copied().collect();
    let mut reached: BTreeSet<VertexId> = starts.iter().copied().collect();
    while !starts.is_empty() {
        out.counters.cond_edge_visits += b.reach_edges(&starts, Direction::Backward, &mut seen);
        starts.clear();
        for (i, e) in g.edges().iter().enumerate() {
            if !seen[i] {
                continue;
            }
            reached.insert(e.src);
            if let Some(l) = e.label {
                if out.nec_guards.insert(l) {
                    starts.push(l);
                    reached.insert(l);
                }
            }
        }
    }
    for v in reached {
        if head_or_tail(g, v) {
            out.vertices.insert(v);
        }
    }
}
