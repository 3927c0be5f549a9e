//! Paper listings, rejections and warnings, end to end through the checker.

mod common;

use std::time::{Duration, Instant};

use common::*;
use modal::cli::{listing, rt_of, status, EXIT_MODE, EXIT_OK};
use modal::diag::Code;
use modal::grammar::{lt, Ctor};
use modal::scheduler::CheckOptions;

#[test]
fn reorderings_match_modulo_alpha() {
    for (name, prefix, want) in GOLDEN_REORDERINGS {
        let got = procedure_lines(&listing_of(name), prefix);
        assert_eq!(alpha(&got), alpha(want), "{name}");
    }
}

#[test]
fn golden_suite_is_fast() {
    let start = Instant::now();
    for (name, ..) in GOLDEN_REORDERINGS {
        listing_of(name);
    }
    for name in ["lcint", "noncheck", "append"] {
        check_fixture(name);
    }
    assert!(
        start.elapsed() < Duration::from_secs(1),
        "{:?}",
        start.elapsed()
    );
}

#[test]
fn stack_interface_modes_all_check() {
    let (prog, report) = check_fixture("stack");
    assert_eq!(status(&report, true), EXIT_OK);
    assert_eq!(listing(&prog, &report), STACK);
}

#[test]
fn dupl_join_is_the_second_branch() {
    let (_, report) = check_fixture("dupl");
    let p = report.procedure("dupl_mode1").unwrap();
    let nelist = rt_of(&fixture("dupl"), "list(T)", "nelist(ground)").unwrap();
    for v in ["S0", "S"] {
        let g = p.final_state.get(v);
        assert!(lt(g, &nelist) && lt(&nelist, g), "{v}: {g}");
    }
}

#[test]
fn lcint_success_too_weak() {
    let (_, report) = check_fixture("lcint");
    assert_eq!(status(&report, false), EXIT_MODE);
    let errs: Vec<_> = report.diagnostics.iter().filter(|d| d.is_error()).collect();
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert_eq!(errs[0].code, Code::E002);
    assert!(errs[0].message.starts_with("L "), "{}", errs[0].message);
}

#[test]
fn noncheck_is_rejected_without_backtracking() {
    let (_, report) = check_fixture("noncheck");
    let errs: Vec<_> = report.diagnostics.iter().filter(|d| d.is_error()).collect();
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert_eq!(errs[0].code, Code::E001);
    assert!(errs[0].message.contains("r(L1)"), "{}", errs[0].message);
}

#[test]
fn append_on_solver_lists_warns_once() {
    let (_, report) = check_fixture("append");
    assert_eq!(report.count(Code::W001), 1, "{:?}", report.diagnostics);
    assert!(!report.has_errors());
    assert_eq!(status(&report, false), EXIT_OK);
    assert_eq!(status(&report, true), EXIT_MODE);
    let risky: usize = report
        .procedures
        .iter()
        .map(|p| p.body.literals().iter().filter(|l| l.runtime_risk).count())
        .sum();
    assert_eq!(risky, 1);
}

#[test]
fn length_needs_init_in_first_mode_only() {
    let (_, report) = check(&fixture("length"), no_init());
    assert_eq!(report.count(Code::E001), 1, "{:?}", report.diagnostics);
    assert!(report.procedure("length_mode2").is_some());
}

#[test]
fn pairlist_without_init_is_rejected() {
    let (_, report) = check(&fixture("pairlist"), no_init());
    assert_eq!(report.count(Code::E001), 1, "{:?}", report.diagnostics);
}

#[test]
fn implied_mode_adds_trailing_equation() {
    let (prog, report) = check(&implied_pop_program(), CheckOptions::default());
    assert!(!report.has_errors(), "{:?}", report.diagnostics);
    let text = procedure_lines(&listing(&prog, &report), "?-");
    assert_eq!(
        alpha(&text),
        alpha("?- A := [b], C := [], pop_mode2(A, B, Fresh_1), Fresh_1 == C.\n")
    );
}

#[test]
fn polymorphic_recovery_selects_det_mode() {
    let (prog, report) = check(&only_a_program(), CheckOptions::default());
    assert!(!report.has_errors(), "{:?}", report.diagnostics);
    assert!(listing(&prog, &report).contains("q_mode2(I)"));
    let (prog, report) = check(&only_a_program(), no_poly());
    assert!(listing(&prog, &report).contains("q_mode1(I)"));
}

#[test]
fn hopush_keeps_mode_information_for_map() {
    let (prog, report) = check_fixture("hopush");
    assert_eq!(status(&report, true), EXIT_OK, "{:?}", report.diagnostics);
    let text = procedure_lines(&listing(&prog, &report), "?-");
    assert_eq!(
        text,
        "?- empty_mode2(S0), I0 := mult_mode1(pos), push_mode1(S0, I0, S1), \
         pop_mode2(S1, I, S2), map_mode1(I, [neg], S).\n"
    );
    let q = report.procedure("query1").unwrap();
    let at_map = q.trace.iter().find(|t| t.callee == "map/3").unwrap();
    let (_, gi) = at_map.args.iter().find(|(v, _)| v == "I").unwrap();
    assert!(
        gi.root_productions()
            .iter()
            .any(|p| matches!(p.ctor, Ctor::IPred(2))),
        "{gi}"
    );
}

#[test]
fn hopush_without_recovery_fails_at_map() {
    let (_, report) = check(&fixture("hopush"), no_poly());
    let errs: Vec<_> = report.diagnostics.iter().filter(|d| d.is_error()).collect();
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert_eq!(errs[0].code, Code::E001);
    assert!(errs[0].message.contains("map("), "{}", errs[0].message);
}
