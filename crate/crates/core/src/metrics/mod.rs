// SPDX-License-Identifier: Apache-2.0

//! Run counters and the JSON report.

use crate::ci::PhaseCounters;
use crate::conditions::Term;
use crate::engine::{AnalysisResult, BugReport, Summary};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::mem::size_of;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Fusion,
    Light,
    CflLight,
}

impl RunMode {
    pub fn filtered(self) -> bool {
        self != RunMode::Fusion
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub mode: RunMode,
    pub s_all: usize,
    pub stored_by_kind: BTreeMap<String, usize>,
    /// Filled in for unfiltered runs once the oracle has classified them.
    pub redun: Option<usize>,
    pub identified: Option<usize>,
    pub solver_calls: u64,
    pub ci_time_s: f64,
    pub engine_time_s: f64,
    pub visits: Option<PhaseCounters>,
    pub soundness_flag: bool,
    pub soundness_notes: BTreeSet<String>,
    pub approx_memory_bytes: u64,
}

impl Metrics {
    pub fn from_run(
        mode: RunMode,
        res: &AnalysisResult,
        visits: Option<PhaseCounters>,
        ci_time_s: f64,
    ) -> Metrics {
        Metrics {
            mode,
            s_all: res.store.len(),
            stored_by_kind: res.store.stored_by_kind(),
            redun: None,
            identified: None,
            solver_calls: res.stats.solver_calls,
            ci_time_s,
            engine_time_s: res.stats.time_s,
            visits,
            soundness_flag: res.stats.soundness_flag,
            soundness_notes: res.stats.notes.clone(),
            approx_memory_bytes: approx_memory(&res.store.all, res.stats.peak_summaries),
        }
    }

    pub fn zero_timings(&mut self) {
        self.ci_time_s = 0.0;
        self.engine_time_s = 0.0;
    }
}

fn footprint(s: &Summary) -> usize {
    size_of::<Summary>()
        + s.path.len() * size_of::<Term>()
        + s.path.iter().map(|t| t.ctx.len() * 4).sum::<usize>()
        + s.cond.atoms.len() * 2 * size_of::<Term>()
        + s.signature.len()
}

/// Peak live summaries times their mean footprint.
fn approx_memory(all: &[Summary], peak: usize) -> u64 {
    if all.is_empty() {
        return 0;
    }
    let total: usize = all.iter().map(footprint).sum();
    (peak as f64 * total as f64 / all.len() as f64).round() as u64
}

/// Hash of the canonical program text, used to pair runs in one report.
pub fn program_hash(printed: &str) -> String {
    Sha256::digest(printed.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub program_hash: String,
    pub metrics: Metrics,
    pub bugs: Vec<BugReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("runs were made on different programs ({0} vs {1})")]
    HashMismatch(String, String),
    #[error("no runs to report")]
    Empty,
}

fn pct(from: f64, to: f64) -> f64 {
    if from == 0.0 {
        0.0
    } else {
        (from - to) / from * 100.0
    }
}

/// Fusion-versus-filtered comparison block.
pub fn comparison(fusion: &Metrics, light: &Metrics) -> Value {
    let saved = fusion.engine_time_s - light.engine_time_s;
    let gains = if light.ci_time_s > 0.0 {
        saved / light.ci_time_s
    } else {
        0.0
    };
    json!({
        "s_all": {
            "fusion": fusion.s_all,
            "light": light.s_all,
            "reduction_pct": pct(fusion.s_all as f64, light.s_all as f64),
        },
        "redun": fusion.redun,
        "identified": fusion.identified,
        "solver_calls": {
            "fusion": fusion.solver_calls,
            "light": light.solver_calls,
            "reduction_pct": pct(fusion.solver_calls as f64, light.solver_calls as f64),
        },
        "ci_time_s": light.ci_time_s,
        "engine_time_s": {
            "fusion": fusion.engine_time_s,
            "light": light.engine_time_s,
        },
        "gains": gains,
    })
}

pub fn assemble_report(runs: &[RunRecord]) -> Result<String, ReportError> {
    let first = runs.first().ok_or(ReportError::Empty)?;
    for r in runs {
        if r.program_hash != first.program_hash {
            return Err(ReportError::HashMismatch(
                first.program_hash.clone(),
                r.program_hash.clone(),
            ));
        }
    }
    let run_docs: Vec<Value> = runs
        .iter()
        .map(|r| {
            json!({
                "mode": r.metrics.mode,
                "bugs": r.bugs,
                "metrics": r.metrics,
                "soundness_flag": r.metrics.soundness_flag,
            })
        })
        .collect();
    let mut doc = json!({
        "program_hash": first.program_hash,
        "runs": run_docs,
    });
    let fusion = runs.iter().find(|r| r.metrics.mode == RunMode::Fusion);
    let light = runs.iter().find(|r| r.metrics.mode.filtered());
    if let (Some(f), Some(l)) = (fusion, light) {
        doc["comparison"] = comparison(&f.metrics, &l.metrics);
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    Ok(s)
}
