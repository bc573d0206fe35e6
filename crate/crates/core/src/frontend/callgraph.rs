// SPDX-License-Identifier: Apache-2.0

use super::{FuncId, ProgramIR, StmtKind};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SccId(pub u32);

/// One edge per call site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallEdge {
    pub caller: FuncId,
    pub callee: FuncId,
    pub line: u32,
}

/// Call multigraph with its SCC condensation and bottom-up layering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallGraph {
    edges: Vec<CallEdge>,
    /// SCC members sorted by function name; SCCs numbered in bottom-up order.
    sccs: Vec<Vec<FuncId>>,
    scc_of: Vec<SccId>,
    /// `layers[i]` holds SCCs whose callees all live in layers `< i`.
    layers: Vec<Vec<SccId>>,
    recursive: Vec<bool>,
}

impl CallGraph {
    pub fn build(p: &ProgramIR) -> CallGraph {
        let n = p.functions.len();
        let mut edges = Vec::new();
        for (fi, f) in p.functions.iter().enumerate() {
            f.walk(|s| {
                if let StmtKind::Call { callee, .. } = &s.kind {
                    let callee = p.lookup(callee).expect("validated program");
                    edges.push(CallEdge {
                        caller: FuncId(fi as u32),
                        callee,
                        line: s.line,
                    });
                }
            });
        }

        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, edges.len());
        let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
        for e in &edges {
            g.add_edge(nodes[e.caller.index()], nodes[e.callee.index()], ());
        }
        let raw = tarjan_scc(&g);

        let name = |f: &FuncId| p.functions[f.index()].name.as_str();
        let mut comps: Vec<Vec<FuncId>> = raw
            .into_iter()
            .map(|c| {
                let mut c: Vec<FuncId> = c.into_iter().map(|ni| FuncId(ni.index() as u32)).collect();
                c.sort_by(|a, b| name(a).cmp(name(b)));
                c
            })
            .collect();

        let mut comp_of = vec![0usize; n];
        for (ci, c) in comps.iter().enumerate() {
            for f in c {
                comp_of[f.index()] = ci;
            }
        }
        // Height in the condensation: leaves are layer 0.
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); comps.len()];
        let mut recursive = vec![false; comps.len()];
        for e in &edges {
            let (a, b) = (comp_of[e.caller.index()], comp_of[e.callee.index()]);
            if a == b {
                recursive[a] = true;
            } else {
                succ[a].insert(b);
            }
        }
        let mut height: Vec<Option<usize>> = vec![None; comps.len()];
        fn depth(c: usize, succ: &[BTreeSet<usize>], height: &mut [Option<usize>]) -> usize {
            if let Some(h) = height[c] {
                return h;
            }
            let h = succ[c]
                .iter()
                .map(|&s| depth(s, succ, height) + 1)
                .max()
                .unwrap_or(0);
            height[c] = Some(h);
            h
        }
        for c in 0..comps.len() {
            depth(c, &succ, &mut height);
        }

        // Renumber SCCs by (layer, first member name).
        let mut order: Vec<usize> = (0..comps.len()).collect();
        order.sort_by(|&a, &b| {
            height[a]
                .cmp(&height[b])
                .then_with(|| name(&comps[a][0]).cmp(name(&comps[b][0])))
        });
        let mut sccs = Vec::with_capacity(comps.len());
        let mut rec = Vec::with_capacity(comps.len());
        let mut scc_of = vec![SccId(0); n];
        let mut layers: Vec<Vec<SccId>> = Vec::new();
        for (new_id, &old) in order.iter().enumerate() {
            let id = SccId(new_id as u32);
            for f in &comps[old] {
                scc_of[f.index()] = id;
            }
            let h = height[old].unwrap();
            if layers.len() <= h {
                layers.resize(h + 1, Vec::new());
            }
            layers[h].push(id);
            sccs.push(std::mem::take(&mut comps[old]));
            rec.push(recursive[old]);
        }

        CallGraph {
            edges,
            sccs,
            scc_of,
            layers,
            recursive: rec,
        }
    }

    pub fn edges(&self) -> &[CallEdge] {
        &self.edges
    }

    pub fn layers(&self) -> &[Vec<SccId>] {
        &self.layers
    }

    pub fn scc(&self, id: SccId) -> &[FuncId] {
        &self.sccs[id.0 as usize]
    }

    pub fn scc_count(&self) -> usize {
        self.sccs.len()
    }

    pub fn scc_of(&self, f: FuncId) -> SccId {
        self.scc_of[f.index()]
    }

    /// True when the SCC contains a call cycle (including self-calls).
    pub fn is_recursive(&self, id: SccId) -> bool {
        self.recursive[id.0 as usize]
    }

    pub fn layer_of(&self, f: FuncId) -> usize {
        let s = self.scc_of(f);
        self.layers
            .iter()
            .position(|l| l.contains(&s))
            .expect("every SCC has a layer")
    }

    /// Functions in bottom-up order: layer by layer, SCCs and members by name.
    pub fn bottom_up(&self) -> Vec<FuncId> {
        self.layers
            .iter()
            .flat_map(|l| l.iter().flat_map(|s| self.scc(*s).iter().copied()))
            .collect()
    }

    pub fn callees(&self, f: FuncId) -> impl Iterator<Item = &CallEdge> {
        self.edges.iter().filter(move |e| e.caller == f)
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;
    use super::*;

    fn names(p: &ProgramIR, cg: &CallGraph) -> Vec<Vec<Vec<String>>> {
        cg.layers()
            .iter()
            .map(|l| {
                l.iter()
                    .map(|s| {
                        cg.scc(*s)
                            .iter()
                            .map(|f| p.function(*f).name.clone())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn single_function() {
        let p = parse_program("func main() {\n}\n").unwrap();
        let cg = CallGraph::build(&p);
        assert_eq!(names(&p, &cg), vec![vec![vec!["main".to_string()]]]);
        assert!(!cg.is_recursive(SccId(0)));
    }

    #[test]
    fn two_cycle_is_one_scc() {
        let src = "func f() {\n call g()\n}\nfunc g() {\n call f()\n}\n";
        let p = parse_program(src).unwrap();
        let cg = CallGraph::build(&p);
        assert_eq!(names(&p, &cg), vec![vec![vec!["f".to_string(), "g".to_string()]]]);
        assert!(cg.is_recursive(SccId(0)));
        assert_eq!(cg.edges().len(), 2);
    }

    #[test]
    fn multigraph_keeps_every_call_site() {
        let src = "func f() {\n call g()\n call g()\n}\nfunc g() {\n}\n";
        let p = parse_program(src).unwrap();
        let cg = CallGraph::build(&p);
        let lines: Vec<u32> = cg.edges().iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 3]);
        assert_eq!(names(&p, &cg).len(), 2);
    }

    #[test]
    fn layer_is_height_not_depth() {
        // main -> a -> b, main -> b: b at 0, a at 1, main at 2.
        let src = "func main() {\n call a()\n call b()\n}\nfunc a() {\n call b()\n}\nfunc b() {\n}\n";
        let p = parse_program(src).unwrap();
        let cg = CallGraph::build(&p);
        let order: Vec<&str> = cg
            .bottom_up()
            .into_iter()
            .map(|f| p.function(f).name.as_str())
            .collect();
        assert_eq!(order, vec!["b", "a", "main"]);
        assert_eq!(cg.layer_of(p.lookup("main").unwrap()), 2);
    }

    #[test]
    fn fig1_layers() {
        let p = parse_program(include_str!("../../corpus/fig1.vf")).unwrap();
        let cg = CallGraph::build(&p);
        let layers: Vec<Vec<String>> = names(&p, &cg)
            .into_iter()
            .map(|l| l.into_iter().flatten().collect())
            .collect();
        assert_eq!(layers, vec![vec!["bar", "baz", "qux"], vec!["foo"]]);
        assert_eq!(cg.edges().len(), 4);
    }

    /// Transitive closure by repeated squaring of the adjacency matrix.
    fn reaches(p: &ProgramIR, cg: &CallGraph) -> Vec<Vec<bool>> {
        let n = p.functions.len();
        let mut r = vec![vec![false; n]; n];
        for e in cg.edges() {
            r[e.caller.index()][e.callee.index()] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    r[i][j] |= r[i][k] && r[k][j];
                }
            }
        }
        r
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(300))]

        #[test]
        #[allow(clippy::needless_range_loop)]
        fn sccs_are_mutual_reachability(seed in 0u64..1_000_000) {
            let p = crate::fuzz::generate(seed);
            let cg = CallGraph::build(&p);
            let r = reaches(&p, &cg);
            let n = p.functions.len();
            for i in 0..n {
                for j in 0..n {
                    let (fi, fj) = (FuncId(i as u32), FuncId(j as u32));
                    let same = i == j || (r[i][j] && r[j][i]);
                    proptest::prop_assert_eq!(cg.scc_of(fi) == cg.scc_of(fj), same);
                }
                proptest::prop_assert_eq!(cg.is_recursive(cg.scc_of(FuncId(i as u32))),
                    r[i][i] || (0..n).any(|j| j != i && r[i][j] && r[j][i]));
            }
            for e in cg.edges() {
                if cg.scc_of(e.caller) != cg.scc_of(e.callee) {
                    proptest::prop_assert!(cg.layer_of(e.callee) < cg.layer_of(e.caller));
                }
            }
            let order = cg.bottom_up();
            proptest::prop_assert_eq!(order.len(), n);
        }
    }
}
