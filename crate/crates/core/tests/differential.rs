// SPDX-License-Identifier: Apache-2.0

use vfprune::ci::{identify_contrib, CondPhase, Reach};
use vfprune::conditions::BuiltinSolver;
use vfprune::engine::{analyze, EngineConfig};
use vfprune::frontend::{parse_program, CallGraph, ProgramIR};
use vfprune::fuzz;
use vfprune::oracle;
use vfprune::pdg::Pdg;

const CORPUS: [&str; 5] = [
    include_str!("../corpus/fig1.vf"),
    include_str!("../corpus/figA1.vf"),
    include_str!("../corpus/figA1_feasible.vf"),
    include_str!("../corpus/guard_via_call.vf"),
    include_str!("../corpus/id_call.vf"),
];

/// Returns false when some run hit a cap; nothing is compared for those.
fn check(p: &ProgramIR, what: &str) -> bool {
    let cfg = EngineConfig::default();
    let cg = CallGraph::build(p);
    let g = Pdg::build(p, &cg);
    let full = analyze(&g, &cg, None, &BuiltinSolver::new(), &cfg).unwrap();
    let verdicts = oracle::classify(&full.store).unwrap();
    let redundant = oracle::redundant_ids(&verdicts);
    let mut clean = !full.stats.soundness_flag;
    for reach in [Reach::Bfs, Reach::Cfl] {
        let vn = identify_contrib(&g, reach, CondPhase::Closure);
        let light = analyze(&g, &cg, Some(&vn), &BuiltinSolver::new(), &cfg).unwrap();
        if full.stats.soundness_flag || light.stats.soundness_flag {
            clean = false;
            continue;
        }
        assert_eq!(full.bugs, light.bugs, "{what} {reach:?}");
        let pruned = oracle::pruned_ids(&full.store, &light.store);
        assert!(pruned.is_subset(&redundant), "{what} {reach:?}");
        assert!(light.stats.solver_calls <= full.stats.solver_calls, "{what} {reach:?}");
    }
    clean
}

#[test]
fn corpus_modes_agree() {
    for (i, src) in CORPUS.iter().enumerate() {
        assert!(check(&parse_program(src).unwrap(), &format!("corpus {i}")));
    }
}

#[test]
fn fuzz_modes_agree_and_prune_only_redundant() {
    let mut clean = 0;
    for seed in 0..150 {
        if check(&fuzz::generate(seed), &format!("seed {seed}")) {
            clean += 1;
        }
    }
    // most small programs never touch a cap
    assert!(clean >= 75, "{clean}");
}
