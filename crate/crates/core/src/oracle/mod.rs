// SPDX-License-Identifier: Apache-2.0

//! Ground-truth contribution classifier.
//!
//! Runs on the store of an unfiltered analysis. A summary contributes to a
//! path when it was spliced (transitively) into a reported source-sink path,
//! and to a condition when it was used to instantiate a guard of such a
//! path or of anything spliced into it.

use crate::conditions::SummaryId;
use crate::engine::{Status, SummaryKind, SummaryStore};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Contribution {
    PathContributing,
    ConditionContributing,
    Redundant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContributionVerdict {
    pub id: SummaryId,
    pub verdict: Contribution,
    /// Reported source-sink summary the contribution was traced from.
    pub witness: Option<SummaryId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("summary {from} refers to missing summary {missing}")]
    LineageGap { from: SummaryId, missing: SummaryId },
}

pub fn classify(store: &SummaryStore) -> Result<Vec<ContributionVerdict>, OracleError> {
    let n = store.all.len();
    for s in &store.all {
        for &l in s.clone_lineage.iter().chain(&s.cond_lineage) {
            if l.0 as usize >= n {
                return Err(OracleError::LineageGap {
                    from: s.id,
                    missing: l,
                });
            }
        }
    }
    let mut verdict = vec![Contribution::Redundant; n];
    let mut witness: Vec<Option<SummaryId>> = vec![None; n];

    let mut queue: VecDeque<SummaryId> = VecDeque::new();
    for s in &store.all {
        if s.kind == SummaryKind::SourceSink && s.status == Status::Reported {
            verdict[s.id.0 as usize] = Contribution::PathContributing;
            witness[s.id.0 as usize] = Some(s.id);
            queue.push_back(s.id);
        }
    }
    let mut path_set = Vec::new();
    while let Some(id) = queue.pop_front() {
        path_set.push(id);
        let w = witness[id.0 as usize];
        for &c in &store.get(id).clone_lineage {
            let i = c.0 as usize;
            if verdict[i] == Contribution::Redundant {
                verdict[i] = Contribution::PathContributing;
                witness[i] = w;
                queue.push_back(c);
            }
        }
    }

    for id in path_set {
        let w = witness[id.0 as usize];
        for &c in &store.get(id).cond_lineage {
            let i = c.0 as usize;
            if verdict[i] == Contribution::Redundant {
                verdict[i] = Contribution::ConditionContributing;
                witness[i] = w;
                queue.push_back(c);
            }
        }
    }
    while let Some(id) = queue.pop_front() {
        let w = witness[id.0 as usize];
        let s = store.get(id);
        for &c in s.clone_lineage.iter().chain(&s.cond_lineage) {
            let i = c.0 as usize;
            if verdict[i] == Contribution::Redundant {
                verdict[i] = Contribution::ConditionContributing;
                witness[i] = w;
                queue.push_back(c);
            }
        }
    }

    Ok((0..n)
        .map(|i| ContributionVerdict {
            id: SummaryId(i as u32),
            verdict: verdict[i],
            witness: witness[i],
        })
        .collect())
}

pub fn redundant_ids(verdicts: &[ContributionVerdict]) -> BTreeSet<SummaryId> {
    verdicts
        .iter()
        .filter(|v| v.verdict == Contribution::Redundant)
        .map(|v| v.id)
        .collect()
}

/// Summaries of the unfiltered run with no counterpart in the filtered run,
/// matched by signature.
pub fn pruned_ids(unfiltered: &SummaryStore, filtered: &SummaryStore) -> BTreeSet<SummaryId> {
    let kept = filtered.signatures();
    unfiltered
        .all
        .iter()
        .filter(|s| !kept.contains(s.signature.as_str()))
        .map(|s| s.id)
        .collect()
}

pub fn identification_ratio(verdicts: &[ContributionVerdict], pruned: &BTreeSet<SummaryId>) -> f64 {
    let redundant = redundant_ids(verdicts);
    if redundant.is_empty() {
        return 1.0;
    }
    redundant.intersection(pruned).count() as f64 / redundant.len() as f64
}

pub fn counts(verdicts: &[ContributionVerdict]) -> BTreeMap<Contribution, usize> {
    let mut m = BTreeMap::new();
    for v in verdicts {
        *m.entry(v.verdict).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::{identify_contrib, CondPhase, Reach};
    use crate::conditions::BuiltinSolver;
    use crate::engine::{analyze, EngineConfig};
    use crate::frontend::{parse_program, CallGraph};
    use crate::pdg::Pdg;

    fn stores(src: &str) -> (Pdg, SummaryStore, SummaryStore) {
        let p = parse_program(src).unwrap();
        let cg = CallGraph::build(&p);
        let g = Pdg::build(&p, &cg);
        let cfg = EngineConfig::default();
        let full = analyze(&g, &cg, None, &BuiltinSolver::new(), &cfg).unwrap();
        let vn = identify_contrib(&g, Reach::Bfs, CondPhase::Closure);
        let light = analyze(&g, &cg, Some(&vn), &BuiltinSolver::new(), &cfg).unwrap();
        (g, full.store, light.store)
    }

    #[test]
    fn fig1_redundant_set() {
        let (g, full, light) = stores(include_str!("../../corpus/fig1.vf"));
        let v = classify(&full).unwrap();
        let red: Vec<String> = redundant_ids(&v)
            .iter()
            .map(|&i| full.get(i).path_display(&g))
            .collect();
        assert_eq!(
            red,
            vec![
                "f_15 -> f_16",
                "NULL_19@3 -> m_20@3 -> b_3",
                "NULL_19@3 -> m_20@3 -> b_3 -> b_6 -> f_15@6 -> f_16@6 -> e_6 -> g_7",
                "c_1 -> *c_8",
            ]
        );
        let c = counts(&v);
        assert_eq!(c[&Contribution::PathContributing], 5);
        assert!(!c.contains_key(&Contribution::ConditionContributing));
        let pruned = pruned_ids(&full, &light);
        assert_eq!(pruned, redundant_ids(&v));
        assert_eq!(identification_ratio(&v, &pruned), 1.0);
    }

    #[test]
    fn condition_contribution_through_callee() {
        let (g, full, _) = stores(include_str!("../../corpus/guard_via_call.vf"));
        let v = classify(&full).unwrap();
        let cond: Vec<String> = v
            .iter()
            .filter(|x| x.verdict == Contribution::ConditionContributing)
            .map(|x| full.get(x.id).path_display(&g))
            .collect();
        assert!(cond.iter().any(|p| p.ends_with("-> g_5")), "{cond:?}");
        assert!(cond.contains(&"f_8 -> f_10".to_string()), "{cond:?}");
    }

    #[test]
    fn no_source_sink_paths_means_all_redundant() {
        let (_, full, _) = stores("func f(x) {\n  return x\n}\n");
        let v = classify(&full).unwrap();
        assert!(!v.is_empty());
        assert!(v.iter().all(|x| x.verdict == Contribution::Redundant));
    }

    #[test]
    fn ratio_edges() {
        let (_, full, _) = stores(include_str!("../../corpus/fig1.vf"));
        let v = classify(&full).unwrap();
        assert_eq!(identification_ratio(&v, &BTreeSet::new()), 0.0);
        assert_eq!(identification_ratio(&[], &BTreeSet::new()), 1.0);
    }

    #[test]
    fn lineage_gap_is_an_error() {
        let (_, mut full, _) = stores(include_str!("../../corpus/fig1.vf"));
        full.all[0].clone_lineage.insert(SummaryId(999));
        assert!(matches!(classify(&full), Err(OracleError::LineageGap { .. })));
    }
}
