// SPDX-License-Identifier: Apache-2.0

//! Bottom-up summary collection, cloning and solving.
//!
//! Call-graph SCCs are processed layer by layer. Each SCC is a unit that
//! reads the summaries of lower layers and writes only its own, so units of
//! one layer may run in parallel; their results are merged in a fixed order
//! so ids never depend on scheduling.

mod collect;

use crate::ci::NecessarySet;
use crate::conditions::{PathCondition, SolverInterface, SummaryId, Term, Verdict};
use crate::frontend::{CallGraph, FuncId};
use crate::pdg::{Pdg, VertexId};
use collect::Unit;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryKind {
    Transfer,
    Input,
    Output,
    SourceSink,
    /// Value flow into a guard operand that crosses a call boundary.
    Guard,
}

impl fmt::Display for SummaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SummaryKind::Transfer => "transfer",
            SummaryKind::Input => "input",
            SummaryKind::Output => "output",
            SummaryKind::SourceSink => "source-sink",
            SummaryKind::Guard => "guard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Solved sat and kept.
    Stored,
    /// Solved unsat.
    Discarded,
    /// Some guard on the path has no instantiation; never solved.
    Infeasible,
    /// Output summary instantiated at a call site.
    Clone,
    /// Source-sink path waiting for the report phase.
    Pending,
    Reported,
    Rejected,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("status serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub id: SummaryId,
    pub kind: SummaryKind,
    pub owner: FuncId,
    pub path: Vec<Term>,
    pub cond: PathCondition,
    /// Summaries whose paths were spliced into this one.
    pub clone_lineage: BTreeSet<SummaryId>,
    /// Summaries used while instantiating guards of this path.
    pub cond_lineage: BTreeSet<SummaryId>,
    pub status: Status,
    pub solver_checked: bool,
    /// Id-free identity, stable across runs and modes.
    pub signature: String,
}

impl Summary {
    pub fn head(&self) -> VertexId {
        self.path[0].v
    }

    pub fn tail(&self) -> VertexId {
        self.path[self.path.len() - 1].v
    }

    pub fn path_display(&self, g: &Pdg) -> String {
        self.path
            .iter()
            .map(|t| t.display(g))
            .collect::<Vec<_>>()
            .join(" -> ")
    }
}

pub(crate) fn signature(
    g: &Pdg,
    kind: SummaryKind,
    status_clone: bool,
    owner: FuncId,
    path: &[Term],
    cond: &PathCondition,
) -> String {
    let tag = if status_clone {
        format!("{kind}-clone")
    } else {
        kind.to_string()
    };
    let path: Vec<String> = path.iter().map(|t| t.display(g)).collect();
    format!(
        "{tag}|{}|{}|{}",
        g.functions()[owner.index()].name,
        path.join(","),
        cond.display(g)
    )
}

/// Stored summaries of one function, by kind, in creation order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FuncSummaries {
    pub transfer: Vec<SummaryId>,
    pub input: Vec<SummaryId>,
    pub output: Vec<SummaryId>,
}

impl FuncSummaries {
    fn list_mut(&mut self, kind: SummaryKind) -> Option<&mut Vec<SummaryId>> {
        match kind {
            SummaryKind::Transfer => Some(&mut self.transfer),
            SummaryKind::Input => Some(&mut self.input),
            SummaryKind::Output => Some(&mut self.output),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SummaryStore {
    /// Every summary ever materialized, indexed by id.
    pub all: Vec<Summary>,
    pub funcs: Vec<FuncSummaries>,
    /// Output clone instances by (original, call line).
    pub clones: BTreeMap<(SummaryId, u32), SummaryId>,
    pub src_sink: Vec<SummaryId>,
}

impl SummaryStore {
    pub fn get(&self, id: SummaryId) -> &Summary {
        &self.all[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }

    pub fn signatures(&self) -> BTreeSet<&str> {
        self.all.iter().map(|s| s.signature.as_str()).collect()
    }

    pub fn stored_by_kind(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for s in &self.all {
            if matches!(s.status, Status::Stored | Status::Reported) {
                *m.entry(s.kind.to_string()).or_insert(0) += 1;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BugReport {
    pub source: String,
    pub sink: String,
    pub path: Vec<String>,
    pub lines: Vec<u32>,
    pub verdict: Verdict,
    #[serde(skip)]
    key: (u32, u32, usize, Vec<(VertexId, Vec<u32>)>),
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub max_path_len: usize,
    pub max_summaries: usize,
    pub guard_depth: usize,
    pub scc_iters: usize,
    /// Worker threads for units of one layer; `None` runs sequentially.
    pub jobs: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_path_len: 64,
            max_summaries: 10_000,
            guard_depth: 8,
            scc_iters: 3,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EngineStats {
    pub solver_calls: u64,
    pub soundness_flag: bool,
    /// Which caps were hit, deduplicated.
    pub notes: BTreeSet<String>,
    pub time_s: f64,
    pub peak_summaries: usize,
}

#[derive(Debug, Clone)]
pub struct AnalysisResult {
    pub store: SummaryStore,
    pub bugs: Vec<BugReport>,
    pub stats: EngineStats,
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

pub fn analyze(
    g: &Pdg,
    cg: &CallGraph,
    filter: Option<&NecessarySet>,
    solver: &dyn SolverInterface,
    cfg: &EngineConfig,
) -> Result<AnalysisResult, EngineError> {
    let start = Instant::now();
    let calls_before = solver.calls();
    let mask = filter.map(|n| n.mask(g.vertex_count()));
    let mut store = SummaryStore {
        funcs: vec![FuncSummaries::default(); g.functions().len()],
        ..Default::default()
    };
    let mut notes = BTreeSet::new();

    let pool = match cfg.jobs {
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| EngineError::Pool(e.to_string()))?,
        ),
        None => None,
    };

    for layer in cg.layers() {
        let run = |scc: &crate::frontend::SccId| {
            let mut u = Unit::new(
                g,
                &store,
                solver,
                cfg,
                mask.as_deref(),
                cg.scc(*scc).to_vec(),
                cg.is_recursive(*scc),
            );
            u.run();
            u.finish()
        };
        let parts: Vec<_> = match &pool {
            Some(p) => p.install(|| {
                use rayon::prelude::*;
                layer.par_iter().map(run).collect()
            }),
            None => layer.iter().map(run).collect(),
        };
        for part in parts {
            notes.extend(part.notes.iter().cloned());
            part.merge_into(&mut store);
        }
    }

    let bugs = report(g, &mut store, solver);
    let peak = store.len();
    Ok(AnalysisResult {
        store,
        bugs,
        stats: EngineStats {
            solver_calls: solver.calls() - calls_before,
            soundness_flag: !notes.is_empty(),
            notes,
            time_s: start.elapsed().as_secs_f64(),
            peak_summaries: peak,
        },
    })
}

/// Solve every pending source-sink path and turn the sat ones into reports.
fn report(g: &Pdg, store: &mut SummaryStore, solver: &dyn SolverInterface) -> Vec<BugReport> {
    let mut bugs: Vec<BugReport> = Vec::new();
    let mut seen: BTreeSet<Vec<Term>> = BTreeSet::new();
    for &id in &store.src_sink {
        let s = &mut store.all[id.0 as usize];
        let verdict = solver.check(&s.cond);
        s.solver_checked = true;
        s.status = match verdict {
            Verdict::Sat => Status::Reported,
            Verdict::Unsat => Status::Rejected,
        };
        if verdict == Verdict::Unsat || !seen.insert(s.path.clone()) {
            continue;
        }
        let line = |t: &Term| g.vertex(t.v).line;
        let key = (
            line(&s.path[0]),
            line(&s.path[s.path.len() - 1]),
            s.path.len(),
            s.path.iter().map(|t| (t.v, t.ctx.clone())).collect(),
        );
        bugs.push(BugReport {
            source: s.path[0].display(g),
            sink: s.path[s.path.len() - 1].display(g),
            path: s.path.iter().map(|t| t.display(g)).collect(),
            lines: s.path.iter().map(line).collect(),
            verdict,
            key,
        });
    }
    bugs.sort_by(|a, b| a.key.cmp(&b.key));
    bugs
}
