// SPDX-License-Identifier: Apache-2.0

//! Context-sensitive reachability over call/return tagged edges.
//!
//! A path is realizable when its label string is a partially balanced Dyck
//! word: unmatched returns, then unmatched calls, with matched pairs anywhere.
//! The balanced relation M is computed once per graph as a bit matrix; a
//! query then runs two closure phases, first over M and returns, then over
//! M and calls (mirrored for backward queries).

use crate::ci::ReachabilityBackend;
use crate::pdg::{CallTag, Direction, Pdg, VertexId};
use fixedbitset::FixedBitSet;
use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DyckLabel {
    Open(u32),
    Close(u32),
    Epsilon,
}

impl From<Option<CallTag>> for DyckLabel {
    fn from(t: Option<CallTag>) -> Self {
        match t {
            Some(CallTag::Call(k)) => DyckLabel::Open(k),
            Some(CallTag::Return(k)) => DyckLabel::Close(k),
            None => DyckLabel::Epsilon,
        }
    }
}

/// A plain labeled digraph; the backend builds one per query shape.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    n: usize,
    edges: Vec<(usize, usize, DyckLabel)>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl LabeledGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, DyckLabel)>) -> Self {
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for (i, &(u, v, _)) in edges.iter().enumerate() {
            out[u].push(i);
            inc[v].push(i);
        }
        LabeledGraph {
            n,
            edges,
            out,
            inc,
        }
    }

    pub fn from_pdg(g: &Pdg) -> Self {
        let edges = g
            .edges()
            .iter()
            .map(|e| (e.src.index(), e.dst.index(), DyckLabel::from(e.tag)))
            .collect();
        LabeledGraph::new(g.vertex_count(), edges)
    }

    /// Each edge `u -> v` becomes `u -> m_e -> v` with `m_e = n + e`. The
    /// label sits on the first half when `label_first`, else on the second.
    pub fn subdivided(g: &Pdg, label_first: bool) -> Self {
        let n = g.vertex_count();
        let mut edges = Vec::with_capacity(2 * g.edge_count());
        for (i, e) in g.edges().iter().enumerate() {
            let (u, m, v) = (e.src.index(), n + i, e.dst.index());
            let l = DyckLabel::from(e.tag);
            if label_first {
                edges.push((u, m, l));
                edges.push((m, v, DyckLabel::Epsilon));
            } else {
                edges.push((u, m, DyckLabel::Epsilon));
                edges.push((m, v, l));
            }
        }
        LabeledGraph::new(n + g.edge_count(), edges)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }
}

/// The balanced relation and its transpose.
#[derive(Debug, Clone)]
pub struct Matched {
    fwd: Vec<FixedBitSet>,
    bwd: Vec<FixedBitSet>,
}

impl Matched {
    pub fn compute(lg: &LabeledGraph) -> Self {
        let n = lg.n;
        let mut m: Vec<FixedBitSet> = (0..n)
            .map(|i| {
                let mut b = FixedBitSet::with_capacity(n);
                b.insert(i);
                b
            })
            .collect();
        let mut opens: Vec<(usize, usize, u32)> = Vec::new();
        let mut closes: HashMap<u32, Vec<(usize, usize)>> = HashMap::new();
        for &(u, v, l) in &lg.edges {
            match l {
                DyckLabel::Epsilon => m[u].insert(v),
                DyckLabel::Open(k) => opens.push((u, v, k)),
                DyckLabel::Close(k) => closes.entry(k).or_default().push((u, v)),
            }
        }
        loop {
            // transitive closure, Warshall order
            for k in 0..n {
                let row_k = m[k].clone();
                for row in m.iter_mut() {
                    if row.contains(k) {
                        row.union_with(&row_k);
                    }
                }
            }
            let mut changed = false;
            for &(u, x, k) in &opens {
                for &(y, v) in closes.get(&k).map_or(&[][..], Vec::as_slice) {
                    if m[x].contains(y) && !m[u].contains(v) {
                        m[u].insert(v);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut bwd: Vec<FixedBitSet> = (0..n).map(|_| FixedBitSet::with_capacity(n)).collect();
        for (u, row) in m.iter().enumerate() {
            for v in row.ones() {
                bwd[v].insert(u);
            }
        }
        Matched { fwd: m, bwd }
    }

    pub fn related(&self, u: usize, v: usize) -> bool {
        self.fwd[u].contains(v)
    }
}

/// Nodes reachable from (forward) or reaching (backward) `starts` along
/// realizable paths. Returns the set and the number of queue pops.
pub fn cfl_reach(
    lg: &LabeledGraph,
    m: &Matched,
    starts: &[usize],
    dir: Direction,
) -> (FixedBitSet, u64) {
    let (rel, first, second) = match dir {
        Direction::Forward => (&m.fwd, Phase::Close, Phase::Open),
        Direction::Backward => (&m.bwd, Phase::Open, Phase::Close),
    };
    let mut visits = 0;
    let mut p1 = FixedBitSet::with_capacity(lg.n);
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &s in starts {
        if !p1.put(s) {
            queue.push_back(s);
        }
    }
    visits += closure(lg, rel, first, dir, &mut p1, &mut queue);
    let mut p2 = p1.clone();
    queue.extend(p1.ones());
    visits += closure(lg, rel, second, dir, &mut p2, &mut queue);
    (p2, visits)
}

#[derive(Clone, Copy)]
enum Phase {
    Open,
    Close,
}

fn closure(
    lg: &LabeledGraph,
    rel: &[FixedBitSet],
    phase: Phase,
    dir: Direction,
    seen: &mut FixedBitSet,
    queue: &mut VecDeque<usize>,
) -> u64 {
    let mut visits = 0;
    while let Some(x) = queue.pop_front() {
        visits += 1;
        for y in rel[x].ones() {
            if !seen.put(y) {
                queue.push_back(y);
            }
        }
        let adj = match dir {
            Direction::Forward => &lg.out[x],
            Direction::Backward => &lg.inc[x],
        };
        for &ei in adj {
            let (u, v, l) = lg.edges[ei];
            let ok = matches!(
                (phase, l),
                (Phase::Open, DyckLabel::Open(_)) | (Phase::Close, DyckLabel::Close(_))
            );
            if ok {
                let y = if matches!(dir, Direction::Forward) { v } else { u };
                if !seen.put(y) {
                    queue.push_back(y);
                }
            }
        }
    }
    visits
}

struct Prepared {
    graph: LabeledGraph,
    matched: Matched,
}

impl Prepared {
    fn new(graph: LabeledGraph) -> Self {
        let matched = Matched::compute(&graph);
        Prepared { graph, matched }
    }
}

/// Drop-in replacement for BFS in contribution identification.
pub struct CflBackend<'g> {
    g: &'g Pdg,
    plain: OnceLock<Prepared>,
    split_fwd: OnceLock<Prepared>,
    split_bwd: OnceLock<Prepared>,
}

impl<'g> CflBackend<'g> {
    pub fn new(g: &'g Pdg) -> Self {
        CflBackend {
            g,
            plain: OnceLock::new(),
            split_fwd: OnceLock::new(),
            split_bwd: OnceLock::new(),
        }
    }

    fn plain(&self) -> &Prepared {
        self.plain
            .get_or_init(|| Prepared::new(LabeledGraph::from_pdg(self.g)))
    }

    fn split(&self, dir: Direction) -> &Prepared {
        match dir {
            Direction::Forward => self
                .split_fwd
                .get_or_init(|| Prepared::new(LabeledGraph::subdivided(self.g, true))),
            Direction::Backward => self
                .split_bwd
                .get_or_init(|| Prepared::new(LabeledGraph::subdivided(self.g, false))),
        }
    }
}

impl ReachabilityBackend for CflBackend<'_> {
    fn name(&self) -> &'static str {
        "cfl"
    }

    fn graph(&self) -> &Pdg {
        self.g
    }

    fn reach(&self, starts: &[VertexId], dir: Direction, visited: &mut [bool]) -> u64 {
        let p = self.plain();
        let s: Vec<usize> = starts.iter().map(|v| v.index()).collect();
        let (set, visits) = cfl_reach(&p.graph, &p.matched, &s, dir);
        for i in set.ones() {
            visited[i] = true;
        }
        visits
    }

    fn reach_edges(&self, starts: &[VertexId], dir: Direction, visited: &mut [bool]) -> u64 {
        let p = self.split(dir);
        let n = self.g.vertex_count();
        let s: Vec<usize> = starts.iter().map(|v| v.index()).collect();
        let (set, visits) = cfl_reach(&p.graph, &p.matched, &s, dir);
        for i in set.ones().filter(|&i| i >= n) {
            visited[i - n] = true;
        }
        visits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::{identify_contrib, BfsBackend, CondPhase, Reach};
    use crate::frontend::{parse_program, CallGraph};
    use proptest::prelude::*;
    use std::collections::{BTreeSet, HashSet};

    fn fig1() -> Pdg {
        let p = parse_program(include_str!("../../corpus/fig1.vf")).unwrap();
        Pdg::build(&p, &CallGraph::build(&p))
    }

    fn reach_set(lg: &LabeledGraph, starts: &[usize], dir: Direction) -> BTreeSet<usize> {
        let m = Matched::compute(lg);
        cfl_reach(lg, &m, starts, dir).0.ones().collect()
    }

    #[test]
    fn mismatched_parentheses_block() {
        // a -[1-> b -]2-> c
        let lg = LabeledGraph::new(
            3,
            vec![(0, 1, DyckLabel::Open(1)), (1, 2, DyckLabel::Close(2))],
        );
        assert_eq!(reach_set(&lg, &[0], Direction::Forward), BTreeSet::from([0, 1]));
        assert_eq!(reach_set(&lg, &[2], Direction::Backward), BTreeSet::from([1, 2]));
    }

    #[test]
    fn matched_and_unmatched_returns() {
        // 0 -]7-> 1 -[3-> 2 -]3-> 3 -[4-> 4
        let lg = LabeledGraph::new(
            5,
            vec![
                (0, 1, DyckLabel::Close(7)),
                (1, 2, DyckLabel::Open(3)),
                (2, 3, DyckLabel::Close(3)),
                (3, 4, DyckLabel::Open(4)),
            ],
        );
        assert_eq!(reach_set(&lg, &[0], Direction::Forward).len(), 5);
        assert!(Matched::compute(&lg).related(1, 3));
    }

    #[test]
    fn fig1_vn_same_as_bfs() {
        let g = fig1();
        let a = identify_contrib(&g, Reach::Bfs, CondPhase::Closure);
        let b = identify_contrib(&g, Reach::Cfl, CondPhase::Closure);
        assert_eq!(a.vertices, b.vertices);
        assert_eq!(a.nec_guards, b.nec_guards);
    }

    #[test]
    fn cfl_is_contained_in_bfs_on_fig1() {
        let g = fig1();
        let starts: Vec<VertexId> = g.sources().collect();
        let mut x = vec![false; g.vertex_count()];
        let mut y = vec![false; g.vertex_count()];
        CflBackend::new(&g).reach(&starts, Direction::Forward, &mut x);
        BfsBackend::new(&g).reach(&starts, Direction::Forward, &mut y);
        assert!(x.iter().zip(&y).all(|(a, b)| !a || *b));
        // NULL_19 flows into b_3 and on to e_6 through the balanced baz call
        assert!(x[g.find("e_6").unwrap().index()]);
    }

    /// Walk every path from the starts, keeping only label strings that are
    /// still realizable. States are (node, pending opens).
    fn enumerate(lg: &LabeledGraph, starts: &[usize], dir: Direction) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut seen: HashSet<(usize, Vec<u32>)> = HashSet::new();
        let mut stack: Vec<(usize, Vec<u32>)> = starts.iter().map(|&s| (s, vec![])).collect();
        while let Some((x, pending)) = stack.pop() {
            if !seen.insert((x, pending.clone())) {
                continue;
            }
            out.insert(x);
            let adj = match dir {
                Direction::Forward => &lg.out[x],
                Direction::Backward => &lg.inc[x],
            };
            for &ei in adj {
                let (u, v, l) = lg.edges[ei];
                let y = if dir == Direction::Forward { v } else { u };
                // walking backward swaps the roles of the parentheses
                let l = match (dir, l) {
                    (Direction::Backward, DyckLabel::Open(k)) => DyckLabel::Close(k),
                    (Direction::Backward, DyckLabel::Close(k)) => DyckLabel::Open(k),
                    _ => l,
                };
                let mut p = pending.clone();
                match l {
                    DyckLabel::Epsilon => {}
                    DyckLabel::Open(k) => p.push(k),
                    DyckLabel::Close(k) => match p.last() {
                        Some(&top) if top == k => {
                            p.pop();
                        }
                        Some(_) => continue,
                        None => {}
                    },
                }
                stack.push((y, p));
            }
        }
        out
    }

    fn tagged_dag() -> impl Strategy<Value = LabeledGraph> {
        (2usize..=25).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n, 0u8..6, 1u32..4), 0..(2 * n)).prop_map(
                move |raw| {
                    let edges = raw
                        .into_iter()
                        .filter(|(a, b, _, _)| a != b)
                        .map(|(a, b, k, line)| {
                            let (u, v) = if a < b { (a, b) } else { (b, a) };
                            let l = match k {
                                0 | 1 => DyckLabel::Open(line),
                                2 | 3 => DyckLabel::Close(line),
                                _ => DyckLabel::Epsilon,
                            };
                            (u, v, l)
                        })
                        .collect();
                    LabeledGraph::new(n, edges)
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn forward_matches_enumeration(lg in tagged_dag(), s in 0usize..25) {
            let s = s % lg.node_count();
            prop_assert_eq!(
                reach_set(&lg, &[s], Direction::Forward),
                enumerate(&lg, &[s], Direction::Forward)
            );
        }

        #[test]
        fn backward_matches_enumeration(lg in tagged_dag(), s in 0usize..25) {
            let s = s % lg.node_count();
            prop_assert_eq!(
                reach_set(&lg, &[s], Direction::Backward),
                enumerate(&lg, &[s], Direction::Backward)
            );
        }
    }
}
