//! Invariants of the checker over seeded generated programs.

use std::collections::BTreeMap;

use modal::cli::{check_source, listing};
use modal::diag::Code;
use modal::frontend::{expand_equivalences, normalize, parse_program, Program, TypeExpr};
use modal::scheduler::{CheckOptions, CheckReport, Origin, Procedure, SGoal, SLitKind};
use modal::synth;
use modal::tigrammar::Defs;
use proptest::prelude::*;

fn checked(seed: u64, size: usize) -> (Program, CheckReport) {
    let src = synth::program(seed, size);
    check_source(&src, CheckOptions::default())
        .unwrap_or_else(|e| panic!("seed {seed}: {e}\n{src}"))
}

fn source_ids(prog: &Program, p: &Procedure) -> Vec<usize> {
    let typed = prog.preds[p.pred].typed.as_ref().unwrap();
    typed.body.literals().iter().map(|l| l.id).collect()
}

/// Each conjunction inits a variable at most once.
fn inits_once(g: &SGoal) -> bool {
    match g {
        SGoal::Lit(_) => true,
        SGoal::Conj(gs) => {
            let mut seen = std::collections::BTreeSet::new();
            for g in gs {
                if let SGoal::Lit(l) = g {
                    if let SLitKind::Init(v) = &l.kind {
                        if !seen.insert(v.clone()) {
                            return false;
                        }
                    }
                }
            }
            gs.iter().all(inits_once)
        }
        SGoal::Disj(gs) => gs.iter().all(inits_once),
        SGoal::Ite(c, t, e) => inits_once(c) && inits_once(t) && inits_once(e),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn source_literals_are_permuted_not_lost(seed in any::<u64>(), size in 10usize..200) {
        let (prog, report) = checked(seed, size);
        for p in &report.procedures {
            let mut count: BTreeMap<usize, usize> = BTreeMap::new();
            let mut failed = false;
            for l in p.body.literals() {
                match l.origin {
                    Origin::Source(id) => *count.entry(id).or_default() += 1,
                    Origin::Fail => failed = true,
                    _ => {}
                }
            }
            prop_assert!(count.values().all(|&n| n == 1), "{}: duplicated literal", p.name);
            let ids = source_ids(&prog, p);
            prop_assert!(count.keys().all(|id| ids.contains(id)));
            if !failed {
                prop_assert_eq!(count.len(), ids.len(), "{}: literal dropped", &p.name);
            }
        }
    }

    #[test]
    fn emitted_procedures_recheck(seed in any::<u64>(), size in 10usize..200) {
        let (_, report) = checked(seed, size);
        prop_assert_eq!(report.count(Code::I001), 0, "{:?}", report.diagnostics);
    }

    #[test]
    fn output_is_deterministic(seed in any::<u64>()) {
        let (p1, r1) = checked(seed, 120);
        let (p2, r2) = checked(seed, 120);
        prop_assert_eq!(listing(&p1, &r1), listing(&p2, &r2));
        prop_assert_eq!(r1.diagnostics, r2.diagnostics);
    }

    #[test]
    fn inits_target_solver_variables_once(seed in any::<u64>(), size in 10usize..200) {
        let (prog, report) = checked(seed, size);
        let defs = Defs::new(&prog).unwrap();
        for p in &report.procedures {
            prop_assert!(inits_once(&p.body), "{}", p.name);
            for l in p.body.literals() {
                if let SLitKind::Init(v) = &l.kind {
                    let t = &p.var_types[v];
                    prop_assert!(defs.is_solver(t) || matches!(t, TypeExpr::Param(_)), "{} init({v})", p.name);
                }
            }
        }
    }

    #[test]
    fn solver_free_deconstructs_never_warn(seed in any::<u64>(), size in 10usize..200) {
        // Generated programs have no Herbrand solver types.
        let (_, report) = checked(seed, size);
        prop_assert_eq!(report.count(Code::W001), 0);
        let risky = report.procedures.iter().flat_map(|p| p.body.literals()).filter(|l| l.runtime_risk).count();
        prop_assert_eq!(risky, 0);
    }

    #[test]
    fn normalization_is_idempotent(seed in any::<u64>(), size in 10usize..200) {
        let src = synth::program(seed, size);
        let once = normalize(expand_equivalences(parse_program(&src).unwrap()).unwrap());
        let twice = normalize(once.clone());
        prop_assert_eq!(once, twice);
    }
}
