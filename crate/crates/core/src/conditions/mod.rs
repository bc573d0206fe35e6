// SPDX-License-Identifier: Apache-2.0

//! Path conditions and their satisfiability.
//!
//! A condition is a conjunction of atoms over *terms*: a graph vertex plus
//! the call string it was cloned through. The built-in decision procedure
//! covers equality between terms and the nullness of a term.

mod solver;

pub use solver::{check_builtin, BuiltinSolver, SolverInterface, Verdict};

use crate::pdg::{Pdg, VertexId, VertexKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SummaryId(pub u32);

impl fmt::Display for SummaryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// A vertex instance. `ctx` lists the call lines it was cloned through,
/// innermost first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Term {
    pub v: VertexId,
    pub ctx: Vec<u32>,
}

impl Term {
    pub fn local(v: VertexId) -> Term {
        Term { v, ctx: Vec::new() }
    }

    pub fn cloned_at(&self, line: u32) -> Term {
        let mut ctx = Vec::with_capacity(self.ctx.len() + 1);
        ctx.extend_from_slice(&self.ctx);
        ctx.push(line);
        Term { v: self.v, ctx }
    }

    pub fn display(&self, g: &Pdg) -> String {
        let mut s = g.name(self.v).to_string();
        for k in &self.ctx {
            s.push('@');
            s.push_str(&k.to_string());
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Atom {
    /// Value flow along an edge: both ends hold the same value.
    FlowEq(Term, Term),
    NullEq(Term),
    NullNeq(Term),
    /// Uninterpreted branch condition, identified by its guard.
    Opaque(Term),
}

impl Atom {
    /// Equality with its operands in canonical order.
    pub fn flow_eq(a: Term, b: Term) -> Atom {
        if a <= b {
            Atom::FlowEq(a, b)
        } else {
            Atom::FlowEq(b, a)
        }
    }

    pub fn cloned_at(&self, line: u32) -> Atom {
        match self {
            Atom::FlowEq(a, b) => Atom::FlowEq(a.cloned_at(line), b.cloned_at(line)),
            Atom::NullEq(t) => Atom::NullEq(t.cloned_at(line)),
            Atom::NullNeq(t) => Atom::NullNeq(t.cloned_at(line)),
            Atom::Opaque(t) => Atom::Opaque(t.cloned_at(line)),
        }
    }

    pub fn display(&self, g: &Pdg) -> String {
        match self {
            Atom::FlowEq(a, b) => format!("{} = {}", a.display(g), b.display(g)),
            Atom::NullEq(t) => format!("{} == null", t.display(g)),
            Atom::NullNeq(t) => format!("{} != null", t.display(g)),
            Atom::Opaque(t) => format!("opaque({})", t.display(g)),
        }
    }
}

/// A conjunction of atoms together with the ids of the summaries whose
/// conditions were folded into it.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PathCondition {
    pub atoms: BTreeSet<Atom>,
    pub provenance: BTreeSet<SummaryId>,
}

impl PathCondition {
    pub fn new() -> PathCondition {
        PathCondition::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> PathCondition {
        PathCondition {
            atoms: atoms.into_iter().collect(),
            provenance: BTreeSet::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn push(&mut self, a: Atom) {
        self.atoms.insert(a);
    }

    /// Record the value flow `a -> b`. Null constants also get their
    /// nullness axiom so the condition is self-contained.
    pub fn flow(&mut self, g: &Pdg, a: Term, b: Term) {
        for t in [&a, &b] {
            if g.kind(t.v) == VertexKind::NullConst {
                self.atoms.insert(Atom::NullEq(t.clone()));
            }
        }
        self.atoms.insert(Atom::flow_eq(a, b));
    }

    /// Assert that `t` is a null constant, if it is one.
    pub fn null_axiom(&mut self, g: &Pdg, t: &Term) {
        if g.kind(t.v) == VertexKind::NullConst {
            self.atoms.insert(Atom::NullEq(t.clone()));
        }
    }

    /// Union of both conjunctions and both provenance sets.
    pub fn conjoin(&self, other: &PathCondition) -> PathCondition {
        let mut out = self.clone();
        out.absorb(other);
        out
    }

    pub fn absorb(&mut self, other: &PathCondition) {
        self.atoms.extend(other.atoms.iter().cloned());
        self.provenance.extend(other.provenance.iter().copied());
    }

    /// Conjoin the condition of summary `id`, recording it as provenance.
    pub fn embed(&mut self, id: SummaryId, other: &PathCondition) {
        self.absorb(other);
        self.provenance.insert(id);
    }

    /// Rename every term as if the whole condition were cloned at `line`.
    pub fn cloned_at(&self, line: u32) -> PathCondition {
        PathCondition {
            atoms: self.atoms.iter().map(|a| a.cloned_at(line)).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn display(&self, g: &Pdg) -> String {
        let parts: Vec<String> = self.atoms.iter().map(|a| a.display(g)).collect();
        if parts.is_empty() {
            "true".to_string()
        } else {
            parts.join(" & ")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(i: u32) -> Term {
        Term::local(VertexId(i))
    }

    fn atom_strategy() -> impl Strategy<Value = Atom> {
        (0u8..4, 0u32..6, 0u32..6).prop_map(|(k, a, b)| match k {
            0 => Atom::flow_eq(t(a), t(b)),
            1 => Atom::NullEq(t(a)),
            2 => Atom::NullNeq(t(a)),
            _ => Atom::Opaque(t(a)),
        })
    }

    fn cond_strategy() -> impl Strategy<Value = PathCondition> {
        (
            prop::collection::vec(atom_strategy(), 0..8),
            prop::collection::btree_set(0u32..20, 0..4),
        )
            .prop_map(|(atoms, prov)| PathCondition {
                atoms: atoms.into_iter().collect(),
                provenance: prov.into_iter().map(SummaryId).collect(),
            })
    }

    #[test]
    fn conjoin_identity() {
        let x = PathCondition::from_atoms([Atom::NullEq(t(1)), Atom::flow_eq(t(2), t(1))]);
        assert_eq!(x.conjoin(&PathCondition::new()), x);
    }

    #[test]
    fn flow_eq_is_canonical() {
        assert_eq!(Atom::flow_eq(t(3), t(1)), Atom::flow_eq(t(1), t(3)));
    }

    #[test]
    fn clone_pushes_call_line() {
        let a = Term::local(VertexId(4)).cloned_at(2).cloned_at(30);
        assert_eq!(a.ctx, vec![2, 30]);
    }

    proptest! {
        #[test]
        fn conjoin_commutes(a in cond_strategy(), b in cond_strategy()) {
            prop_assert_eq!(a.conjoin(&b), b.conjoin(&a));
        }

        #[test]
        fn conjoin_idempotent(a in cond_strategy()) {
            prop_assert_eq!(a.conjoin(&a), a);
        }

        #[test]
        fn unsat_is_monotone(a in cond_strategy(), b in cond_strategy()) {
            if check_builtin(&a) == Verdict::Unsat {
                prop_assert_eq!(check_builtin(&a.conjoin(&b)), Verdict::Unsat);
            }
        }

        #[test]
        fn embed_extends_provenance(a in cond_strategy(), b in cond_strategy(), id in 100u32..200) {
            let mut c = a.clone();
            c.embed(SummaryId(id), &b);
            prop_assert!(c.provenance.contains(&SummaryId(id)));
            prop_assert!(c.provenance.is_superset(&b.provenance));
        }
    }
}
