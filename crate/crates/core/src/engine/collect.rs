// SPDX-License-Identifier: Apache-2.0

use super::{signature, EngineConfig, FuncSummaries, Summary, SummaryKind, SummaryStore, Status};
use crate::conditions::{Atom, PathCondition, SolverInterface, SummaryId, Term, Verdict};
use crate::frontend::{CmpOp, FuncId};
use crate::pdg::{Pdg, VertexId, VertexKind};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

/// Ids handed out inside a unit carry this bit until the merge.
const LOCAL_BASE: u32 = 1 << 31;

fn is_local(id: SummaryId) -> bool {
    id.0 & LOCAL_BASE != 0
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Head {
    Param,
    Source,
}

#[derive(Clone)]
struct Partial {
    head: Head,
    path: Vec<Term>,
    cond: PathCondition,
    clone_lineage: BTreeSet<SummaryId>,
    guards: Vec<VertexId>,
}

/// One way a guard can hold: its atom plus the value flow that feeds it.
#[derive(Clone, Default)]
struct Variant {
    cond: PathCondition,
    lineage: BTreeSet<SummaryId>,
}

/// A backward value flow ending at a guard operand.
#[derive(Clone, Default)]
struct Flow {
    path: Vec<Term>,
    cond: PathCondition,
    clone_lineage: BTreeSet<SummaryId>,
    cond_lineage: BTreeSet<SummaryId>,
    crossed: bool,
}

pub(super) struct Unit<'a> {
    g: &'a Pdg,
    global: &'a SummaryStore,
    solver: &'a dyn SolverInterface,
    cfg: &'a EngineConfig,
    vn: Option<&'a [bool]>,
    members: Vec<FuncId>,
    recursive: bool,
    local: Vec<Summary>,
    by_sig: HashMap<String, SummaryId>,
    lists: BTreeMap<FuncId, FuncSummaries>,
    clones: BTreeMap<(SummaryId, u32), SummaryId>,
    src_sink: Vec<SummaryId>,
    guard_cache: HashMap<VertexId, Rc<Vec<Variant>>>,
    owned: HashMap<FuncId, usize>,
    notes: BTreeSet<String>,
}

pub(super) struct UnitResult {
    local: Vec<Summary>,
    lists: BTreeMap<FuncId, FuncSummaries>,
    clones: BTreeMap<(SummaryId, u32), SummaryId>,
    src_sink: Vec<SummaryId>,
    pub notes: BTreeSet<String>,
}

impl<'a> Unit<'a> {
    pub fn new(
        g: &'a Pdg,
        global: &'a SummaryStore,
        solver: &'a dyn SolverInterface,
        cfg: &'a EngineConfig,
        vn: Option<&'a [bool]>,
        members: Vec<FuncId>,
        recursive: bool,
    ) -> Self {
        let lists = members
            .iter()
            .map(|&f| (f, FuncSummaries::default()))
            .collect();
        Unit {
            g,
            global,
            solver,
            cfg,
            vn,
            members,
            recursive,
            local: Vec::new(),
            by_sig: HashMap::new(),
            lists,
            clones: BTreeMap::new(),
            src_sink: Vec::new(),
            guard_cache: HashMap::new(),
            owned: HashMap::new(),
            notes: BTreeSet::new(),
        }
    }

    pub fn run(&mut self) {
        let iters = if self.recursive { self.cfg.scc_iters.max(1) } else { 1 };
        let mut converged = !self.recursive;
        for _ in 0..iters {
            let before = self.local.len();
            self.guard_cache.clear();
            for f in self.members.clone() {
                self.collect(f);
            }
            if self.recursive && self.local.len() == before {
                converged = true;
                break;
            }
        }
        if !converged {
            self.note("scc iteration cap reached");
        }
    }

    pub fn finish(self) -> UnitResult {
        UnitResult {
            local: self.local,
            lists: self.lists,
            clones: self.clones,
            src_sink: self.src_sink,
            notes: self.notes,
        }
    }

    fn note(&mut self, what: &str) {
        self.notes.insert(what.to_string());
    }

    fn allowed(&self, v: VertexId) -> bool {
        self.vn.is_none_or(|m| m[v.index()])
    }

    fn summary(&self, id: SummaryId) -> &Summary {
        if is_local(id) {
            &self.local[(id.0 ^ LOCAL_BASE) as usize]
        } else {
            self.global.get(id)
        }
    }

    /// Snapshot of a callee's stored summaries of one kind.
    fn callee_list(&self, c: FuncId, kind: SummaryKind) -> Vec<SummaryId> {
        let l = match self.lists.get(&c) {
            Some(l) => l,
            None => &self.global.funcs[c.index()],
        };
        match kind {
            SummaryKind::Transfer => l.transfer.clone(),
            SummaryKind::Input => l.input.clone(),
            SummaryKind::Output => l.output.clone(),
            _ => Vec::new(),
        }
    }

    /// Add a summary unless one with the same signature exists. Returns the
    /// id (new or existing), or `None` when the owner's cap is exhausted.
    #[allow(clippy::too_many_arguments)]
    fn materialize(
        &mut self,
        kind: SummaryKind,
        owner: FuncId,
        path: Vec<Term>,
        cond: PathCondition,
        clone_lineage: BTreeSet<SummaryId>,
        cond_lineage: BTreeSet<SummaryId>,
        status: Status,
    ) -> Option<SummaryId> {
        let sig = signature(self.g, kind, status == Status::Clone, owner, &path, &cond);
        if let Some(&id) = self.by_sig.get(&sig) {
            return Some(id);
        }
        let count = self.owned.entry(owner).or_insert(0);
        if *count >= self.cfg.max_summaries {
            self.note("summary cap reached");
            return None;
        }
        *count += 1;
        let (status, checked) = match status {
            Status::Stored => match self.solver.check(&cond) {
                Verdict::Sat => (Status::Stored, true),
                Verdict::Unsat => (Status::Discarded, true),
            },
            s => (s, false),
        };
        let id = SummaryId(LOCAL_BASE | self.local.len() as u32);
        self.by_sig.insert(sig.clone(), id);
        self.local.push(Summary {
            id,
            kind,
            owner,
            path,
            cond,
            clone_lineage,
            cond_lineage,
            status,
            solver_checked: checked,
            signature: sig,
        });
        if status == Status::Stored {
            if let Some(l) = self.lists.get_mut(&owner).and_then(|l| l.list_mut(kind)) {
                l.push(id);
            }
        }
        if kind == SummaryKind::SourceSink {
            self.src_sink.push(id);
        }
        Some(id)
    }

    /// The output summary `orig` instantiated at the call on `line`,
    /// ending at that call's actual return `ar`.
    fn clone_instance(&mut self, orig: SummaryId, line: u32, ar: VertexId, f: FuncId) -> Option<SummaryId> {
        if let Some(&id) = self.clones.get(&(orig, line)) {
            return Some(id);
        }
        let s = self.summary(orig);
        let mut path: Vec<Term> = s.path.iter().map(|t| t.cloned_at(line)).collect();
        let fr = path[path.len() - 1].clone();
        let mut cond = PathCondition::new();
        cond.embed(orig, &s.cond.cloned_at(line));
        cond.flow(self.g, fr, Term::local(ar));
        path.push(Term::local(ar));
        let id = self.materialize(
            SummaryKind::Output,
            f,
            path,
            cond,
            BTreeSet::from([orig]),
            BTreeSet::new(),
            Status::Clone,
        )?;
        self.clones.insert((orig, line), id);
        Some(id)
    }

    fn collect(&mut self, f: FuncId) {
        let roles = self.g.roles(f).clone();
        for &fp in &roles.fp {
            if !self.allowed(fp) {
                continue;
            }
            let st = Partial {
                head: Head::Param,
                path: vec![Term::local(fp)],
                cond: PathCondition::new(),
                clone_lineage: BTreeSet::new(),
                guards: Vec::new(),
            };
            self.walk(f, fp, st);
        }
        for &src in &roles.src {
            let t = Term::local(src);
            let mut cond = PathCondition::new();
            cond.null_axiom(self.g, &t);
            let st = Partial {
                head: Head::Source,
                path: vec![t],
                cond,
                clone_lineage: BTreeSet::new(),
                guards: Vec::new(),
            };
            self.walk(f, src, st);
        }
        let mut ars = roles.ar.clone();
        ars.sort();
        for ar in ars {
            if !self.allowed(ar) {
                continue;
            }
            let call = self.g.vertex(ar).call.expect("actual return has call info");
            for orig in self.callee_list(call.callee, SummaryKind::Output) {
                let Some(inst) = self.clone_instance(orig, call.line, ar, f) else {
                    continue;
                };
                let s = self.summary(inst);
                let mut cond = PathCondition::new();
                cond.embed(inst, &s.cond);
                let st = Partial {
                    head: Head::Source,
                    path: s.path.clone(),
                    cond,
                    clone_lineage: BTreeSet::from([inst]),
                    guards: Vec::new(),
                };
                self.walk(f, ar, st);
            }
        }
    }

    fn walk(&mut self, f: FuncId, v: VertexId, st: Partial) {
        if st.path.len() > self.cfg.max_path_len {
            self.note("path length cap reached");
            return;
        }
        let g = self.g;
        let kind = g.kind(v);
        if g.is_sink(v) {
            let k = match st.head {
                Head::Param => SummaryKind::Input,
                Head::Source => SummaryKind::SourceSink,
            };
            self.complete(f, k, &st);
        }
        if kind == VertexKind::FormalReturn && self.allowed(v) {
            let k = match st.head {
                Head::Param => SummaryKind::Transfer,
                Head::Source => SummaryKind::Output,
            };
            self.complete(f, k, &st);
        }
        if kind == VertexKind::ActualParam && self.allowed(v) {
            self.cross_call(f, v, &st);
        }
        for &e in g.out_edges(v) {
            let edge = *g.edge(e);
            if edge.tag.is_some() || g.is_guard(edge.dst) {
                continue;
            }
            let mut next = st.clone();
            if let Some(l) = edge.label {
                if !self.allowed(l) {
                    continue;
                }
                if !next.guards.contains(&l) {
                    next.guards.push(l);
                }
            }
            next.cond.flow(g, Term::local(v), Term::local(edge.dst));
            next.path.push(Term::local(edge.dst));
            self.walk(f, edge.dst, next);
        }
    }

    /// Splice callee summaries in at actual parameter `ap`.
    fn cross_call(&mut self, f: FuncId, ap: VertexId, st: &Partial) {
        let g = self.g;
        let call = g.vertex(ap).call.expect("actual param has call info");
        let k = call.line;
        let Some(&fp) = g.roles(call.callee).fp.get(call.index as usize) else {
            return;
        };
        let ar = g.actual_return(k).filter(|&ar| self.allowed(ar));
        if let Some(ar) = ar {
            for sid in self.callee_list(call.callee, SummaryKind::Transfer) {
                let s = self.summary(sid);
                if s.head() != fp {
                    continue;
                }
                let mut next = st.clone();
                self.splice(&mut next, ap, sid, k);
                let fr = next.path[next.path.len() - 1].clone();
                next.cond.flow(g, fr, Term::local(ar));
                next.path.push(Term::local(ar));
                self.walk(f, ar, next);
            }
        }
        for sid in self.callee_list(call.callee, SummaryKind::Input) {
            if self.summary(sid).head() != fp {
                continue;
            }
            let mut next = st.clone();
            self.splice(&mut next, ap, sid, k);
            let kind = match st.head {
                Head::Param => SummaryKind::Input,
                Head::Source => SummaryKind::SourceSink,
            };
            self.complete(f, kind, &next);
        }
    }

    fn splice(&self, st: &mut Partial, ap: VertexId, sid: SummaryId, k: u32) {
        let s = self.summary(sid);
        let head = s.path[0].cloned_at(k);
        st.cond.flow(self.g, Term::local(ap), head);
        st.cond.embed(sid, &s.cond.cloned_at(k));
        st.path.extend(s.path.iter().map(|t| t.cloned_at(k)));
        st.clone_lineage.insert(sid);
    }

    fn complete(&mut self, f: FuncId, kind: SummaryKind, st: &Partial) {
        let mut choices: Vec<Rc<Vec<Variant>>> = Vec::new();
        for &gv in &st.guards {
            let vs = self.instantiate_guard(f, gv, 0);
            if vs.is_empty() {
                self.materialize(
                    kind,
                    f,
                    st.path.clone(),
                    st.cond.clone(),
                    st.clone_lineage.clone(),
                    BTreeSet::new(),
                    Status::Infeasible,
                );
                return;
            }
            choices.push(vs);
        }
        let status = if kind == SummaryKind::SourceSink {
            Status::Pending
        } else {
            Status::Stored
        };
        let mut idx = vec![0usize; choices.len()];
        loop {
            let mut cond = st.cond.clone();
            let mut lineage = BTreeSet::new();
            for (c, &i) in choices.iter().zip(&idx) {
                cond.absorb(&c[i].cond);
                lineage.extend(c[i].lineage.iter().copied());
            }
            let made = self.materialize(
                kind,
                f,
                st.path.clone(),
                cond,
                st.clone_lineage.clone(),
                lineage,
                status,
            );
            if made.is_none() {
                return;
            }
            // odometer over the variant lists
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    return;
                }
                idx[pos] += 1;
                if idx[pos] < choices[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    fn instantiate_guard(&mut self, f: FuncId, gv: VertexId, depth: usize) -> Rc<Vec<Variant>> {
        if let Some(v) = self.guard_cache.get(&gv) {
            return v.clone();
        }
        let g = self.g;
        let gt = Term::local(gv);
        if depth >= self.cfg.guard_depth {
            self.note("guard depth cap reached");
            return Rc::new(vec![Variant {
                cond: PathCondition::from_atoms([Atom::Opaque(gt)]),
                lineage: BTreeSet::new(),
            }]);
        }
        let info = g.vertex(gv).guard.clone().expect("guard vertex has guard info");
        let (atom, operand) = match (info.opaque, info.operand, info.op) {
            (false, Some(d), CmpOp::Eq) => (Atom::NullEq(Term::local(d)), Some(d)),
            (false, Some(d), CmpOp::Ne) => (Atom::NullNeq(Term::local(d)), Some(d)),
            _ => (Atom::Opaque(gt.clone()), None),
        };
        let parents = match info.parent {
            Some(p) => self.instantiate_guard(f, p, depth + 1),
            None => Rc::new(vec![Variant::default()]),
        };
        let flows = match operand {
            Some(d) => self.back(f, d, depth, 0),
            None => vec![Flow::default()],
        };
        let mut own = Vec::new();
        for fl in flows {
            let mut cond = PathCondition::from_atoms([atom.clone()]);
            let mut lineage = BTreeSet::new();
            if fl.crossed {
                let mut path = fl.path.clone();
                path.push(gt.clone());
                let Some(id) = self.materialize(
                    SummaryKind::Guard,
                    f,
                    path,
                    fl.cond.clone(),
                    fl.clone_lineage.clone(),
                    fl.cond_lineage.clone(),
                    Status::Stored,
                ) else {
                    continue;
                };
                if self.summary(id).status != Status::Stored {
                    continue;
                }
                cond.embed(id, &fl.cond);
                lineage.insert(id);
            } else {
                cond.absorb(&fl.cond);
                lineage.extend(fl.cond_lineage);
            }
            own.push(Variant { cond, lineage });
        }
        let mut out = Vec::new();
        for p in parents.iter() {
            for o in &own {
                let mut v = o.clone();
                v.cond.absorb(&p.cond);
                v.lineage.extend(p.lineage.iter().copied());
                out.push(v);
            }
        }
        let out = Rc::new(out);
        self.guard_cache.insert(gv, out.clone());
        out
    }

    /// All value flows ending at `v`, each starting at a formal parameter,
    /// a null constant, or a callee summary cloned at an actual return.
    fn back(&mut self, f: FuncId, v: VertexId, depth: usize, len: usize) -> Vec<Flow> {
        if len >= self.cfg.max_path_len {
            self.note("path length cap reached");
            return Vec::new();
        }
        let g = self.g;
        let t = Term::local(v);
        match g.kind(v) {
            VertexKind::FormalParam => {
                if !self.allowed(v) {
                    return Vec::new();
                }
                return vec![Flow {
                    path: vec![t],
                    ..Default::default()
                }];
            }
            VertexKind::NullConst => {
                let mut cond = PathCondition::new();
                cond.null_axiom(g, &t);
                return vec![Flow {
                    path: vec![t],
                    cond,
                    ..Default::default()
                }];
            }
            VertexKind::ActualReturn => return self.back_through_call(f, v, depth, len),
            _ => {}
        }
        let mut out = Vec::new();
        for &e in g.in_edges(v) {
            let edge = *g.edge(e);
            if edge.tag.is_some() || g.is_guard(edge.src) {
                continue;
            }
            let labels = match edge.label {
                Some(l) if !self.allowed(l) => continue,
                Some(l) => self.instantiate_guard(f, l, depth + 1),
                None => Rc::new(vec![Variant::default()]),
            };
            for fl in self.back(f, edge.src, depth, len + 1) {
                for lv in labels.iter() {
                    let mut n = fl.clone();
                    n.cond.flow(g, Term::local(edge.src), t.clone());
                    n.cond.absorb(&lv.cond);
                    n.cond_lineage.extend(lv.lineage.iter().copied());
                    n.path.push(t.clone());
                    out.push(n);
                }
            }
        }
        out
    }

    fn back_through_call(&mut self, f: FuncId, ar: VertexId, depth: usize, len: usize) -> Vec<Flow> {
        if !self.allowed(ar) {
            return Vec::new();
        }
        let g = self.g;
        let call = g.vertex(ar).call.expect("actual return has call info");
        let k = call.line;
        let t = Term::local(ar);
        let mut out = Vec::new();
        let fps = g.roles(call.callee).fp.clone();
        for sid in self.callee_list(call.callee, SummaryKind::Transfer) {
            let s = self.summary(sid);
            let Some(j) = fps.iter().position(|&p| p == s.head()) else {
                continue;
            };
            let Some(&ap) = g.actual_params(k).get(j) else {
                continue;
            };
            if !self.allowed(ap) {
                continue;
            }
            let callee_path: Vec<Term> = s.path.iter().map(|x| x.cloned_at(k)).collect();
            let callee_cond = s.cond.cloned_at(k);
            for fl in self.back(f, ap, depth, len + callee_path.len() + 1) {
                let mut n = fl;
                n.cond.flow(g, Term::local(ap), callee_path[0].clone());
                n.cond.embed(sid, &callee_cond);
                n.cond.flow(g, callee_path[callee_path.len() - 1].clone(), t.clone());
                n.path.extend(callee_path.iter().cloned());
                n.path.push(t.clone());
                n.clone_lineage.insert(sid);
                n.crossed = true;
                out.push(n);
            }
        }
        for orig in self.callee_list(call.callee, SummaryKind::Output) {
            let Some(inst) = self.clone_instance(orig, k, ar, f) else {
                continue;
            };
            let s = self.summary(inst);
            let mut cond = PathCondition::new();
            cond.embed(inst, &s.cond);
            out.push(Flow {
                path: s.path.clone(),
                cond,
                clone_lineage: BTreeSet::from([inst]),
                cond_lineage: BTreeSet::new(),
                crossed: true,
            });
        }
        out
    }
}

impl UnitResult {
    /// Append this unit's summaries to the global store, turning local ids
    /// into global ones.
    pub fn merge_into(self, store: &mut SummaryStore) {
        let base = store.all.len() as u32;
        let remap = |id: SummaryId| {
            if is_local(id) {
                SummaryId(base + (id.0 ^ LOCAL_BASE))
            } else {
                id
            }
        };
        let set = |s: &BTreeSet<SummaryId>| s.iter().map(|&i| remap(i)).collect();
        for mut s in self.local {
            s.id = remap(s.id);
            s.clone_lineage = set(&s.clone_lineage);
            s.cond_lineage = set(&s.cond_lineage);
            s.cond.provenance = set(&s.cond.provenance);
            store.all.push(s);
        }
        for (f, l) in self.lists {
            let dst = &mut store.funcs[f.index()];
            dst.transfer.extend(l.transfer.into_iter().map(remap));
            dst.input.extend(l.input.into_iter().map(remap));
            dst.output.extend(l.output.into_iter().map(remap));
        }
        for ((orig, k), id) in self.clones {
            store.clones.insert((remap(orig), k), remap(id));
        }
        store.src_sink.extend(self.src_sink.into_iter().map(remap));
    }
}
