// SPDX-License-Identifier: Apache-2.0

use super::{Atom, PathCondition, Term};
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Sat,
    Unsat,
}

/// Decision procedure used by the engine. Implementations must be
/// deterministic; `calls` counts invocations of `check` since the last reset.
pub trait SolverInterface: Sync {
    fn check(&self, c: &PathCondition) -> Verdict;
    fn calls(&self) -> u64;
    fn reset(&self);
}

/// Union-find over equalities with a four-point nullness lattice per class.
#[derive(Debug, Default)]
pub struct BuiltinSolver {
    calls: AtomicU64,
}

impl BuiltinSolver {
    pub fn new() -> BuiltinSolver {
        BuiltinSolver::default()
    }
}

impl SolverInterface for BuiltinSolver {
    fn check(&self, c: &PathCondition) -> Verdict {
        self.calls.fetch_add(1, Ordering::Relaxed);
        check_builtin(c)
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }
}

const MUST_NULL: u8 = 1;
const MUST_NONNULL: u8 = 2;
const CONFLICT: u8 = MUST_NULL | MUST_NONNULL;

struct Classes<'a> {
    index: HashMap<&'a Term, usize>,
    parent: Vec<usize>,
    status: Vec<u8>,
}

impl<'a> Classes<'a> {
    fn id(&mut self, t: &'a Term) -> usize {
        let next = self.parent.len();
        let i = *self.index.entry(t).or_insert(next);
        if i == next {
            self.parent.push(i);
            self.status.push(0);
        }
        i
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb] = ra;
            self.status[ra] |= self.status[rb];
        }
    }
}

/// Pure satisfiability check: unsat iff some equivalence class is forced to
/// be both null and non-null.
pub fn check_builtin(c: &PathCondition) -> Verdict {
    let mut cl = Classes {
        index: HashMap::new(),
        parent: Vec::new(),
        status: Vec::new(),
    };
    for a in &c.atoms {
        if let Atom::FlowEq(x, y) = a {
            let (i, j) = (cl.id(x), cl.id(y));
            cl.union(i, j);
        }
    }
    for a in &c.atoms {
        let (t, bit) = match a {
            Atom::NullEq(t) => (t, MUST_NULL),
            Atom::NullNeq(t) => (t, MUST_NONNULL),
            _ => continue,
        };
        let i = cl.id(t);
        let r = cl.find(i);
        cl.status[r] |= bit;
        if cl.status[r] == CONFLICT {
            return Verdict::Unsat;
        }
    }
    Verdict::Sat
}
