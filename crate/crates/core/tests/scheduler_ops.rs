//! Single scheduling operations, observed through emitted code and diagnostics.

mod common;

use common::*;
use modal::cli::listing;
use modal::diag::Code;
use modal::scheduler::{CheckOptions, Origin, SLitKind};

const HEADER: &str = "\
:- typedef abc -> a ; b ; c.
:- typedef list(T) -> ([] ; [T|list(T)]).
:- instdef only_a -> a.
";

fn run(body: &str) -> (String, modal::scheduler::CheckReport) {
    let src = format!("{HEADER}{body}");
    let (prog, report) = check(&src, CheckOptions::default());
    (listing(&prog, &report), report)
}

fn single_error(report: &modal::scheduler::CheckReport) -> &modal::diag::Diagnostic {
    let errs: Vec<_> = report.diagnostics.iter().filter(|d| d.is_error()).collect();
    assert_eq!(errs.len(), 1, "{errs:?}");
    errs[0]
}

#[test]
fn copy_when_one_side_is_new() {
    let (text, _) = run("?- X = a, Y = X.\n");
    assert_eq!(text, "?- X := a, Y := X.\n");
}

#[test]
fn unify_of_disjoint_values_fails() {
    let (text, report) = run("?- X = a, Y = b, X = Y.\n");
    assert_eq!(text, "?- X := a, Y := b, fail.\n");
    let q = report.procedure("query1").unwrap();
    assert!(q.final_state.iter().all(|(_, g)| g.is_bottom()));
}

#[test]
fn both_sides_new_never_schedules() {
    let (_, report) = run(":- pred p(abc).\n:- mode p(out).\np(X) :- X = Y.\n");
    let e = single_error(&report);
    assert_eq!(e.code, Code::E001);
    assert!(e.message.contains("X = Y"), "{}", e.message);
}

#[test]
fn deconstruct_with_missing_constructor_fails() {
    let (text, _) = run("?- X = [], X = [A|B].\n");
    assert_eq!(text, "?- X := [], fail.\n");
}

#[test]
fn partly_bound_arguments_are_split_off() {
    let (text, report) =
        run(":- pred p(list(abc), list(abc)).\n:- mode p(in, in).\np(X, Y) :- Y = [A|X].\n");
    assert_eq!(
        alpha(&text),
        alpha("p_mode1(X, Y) :- Y =: [A|Fresh_1], X == Fresh_1.\n")
    );
    let p = report.procedure("p_mode1").unwrap();
    let origins: Vec<Origin> = p.body.literals().iter().map(|l| l.origin).collect();
    assert!(matches!(origins[1], Origin::Split));
}

#[test]
fn branches_disagreeing_on_boundness() {
    let (_, report) =
        run(":- pred p(abc, abc).\n:- mode p(in, out).\np(X, Y) :- ( X = a, Y = b ; X = b ).\n");
    let e = single_error(&report);
    assert_eq!(e.code, Code::E003);
    assert!(e.message.contains('Y'), "{}", e.message);
}

#[test]
fn if_then_else_keeps_condition_first() {
    let (text, report) =
        run(":- pred p(abc, abc).\n:- mode p(in, out).\np(X, Y) :- ( X = a -> Y = b ; Y = c ).\n");
    assert!(!report.has_errors());
    assert_eq!(text, "p_mode1(X, Y) :- ( X == a -> Y := b ; Y := c ).\n");
}

#[test]
fn calling_a_ground_higher_order_value() {
    let (_, report) =
        run(":- pred app(pred(abc), abc).\n:- mode app(in, in).\napp(H, X) :- call(H, X).\n");
    let e = single_error(&report);
    assert_eq!(e.code, Code::E001);
    assert!(
        e.message.contains("modes of this higher-order value"),
        "{}",
        e.message
    );
}

#[test]
fn higher_order_construct_needs_new_target() {
    let (_, report) = run(
        ":- pred ho1(abc).\n:- mode ho1(in).\n:- pred ho2(abc).\n:- mode ho2(in).\n?- H = ho1, H = ho2.\n",
    );
    let e = single_error(&report);
    assert_eq!(e.code, Code::E001);
    assert!(e.message.contains("H = ho2"), "{}", e.message);
}

#[test]
fn new_argument_selects_the_binding_mode() {
    let stack = fixture("stack");
    let (prog, report) = check(
        &format!("{stack}\n?- empty(S0).\n"),
        CheckOptions::default(),
    );
    assert!(listing(&prog, &report).contains("?- empty_mode2(S0)."));
    // With S0 bound the binding mode is still a candidate as an implied mode,
    // and its success state is the smaller one.
    let (prog, report) = check(
        &format!("{stack}\n?- S0 = [], empty(S0).\n"),
        CheckOptions::default(),
    );
    let text = procedure_lines(&listing(&prog, &report), "?-");
    assert_eq!(
        alpha(&text),
        alpha("?- S0 := [], empty_mode2(Fresh_1), Fresh_1 == S0.\n")
    );
}

#[test]
fn no_mode_accepts_a_new_stack() {
    let (_, report) = check(
        &format!("{}\n?- pop(S, E, S1).\n", fixture("stack")),
        CheckOptions::default(),
    );
    assert_eq!(single_error(&report).code, Code::E001);
}

#[test]
fn init_targets_solver_variables_only() {
    let (_, report) = check_fixture("pairlist");
    let p = report.procedure("pairlist_mode1").unwrap();
    let inits: Vec<&str> = p
        .body
        .literals()
        .iter()
        .filter_map(|l| match &l.kind {
            SLitKind::Init(v) => Some(v.as_str()),
            _ => None,
        })
        .collect();
    assert_eq!(inits, ["V"]);
}

#[test]
fn constructor_outside_the_type_is_a_warning() {
    let (_, report) = run(":- pred p(list(abc)).\n:- mode p(in(only_a)).\n");
    assert_eq!(report.count(Code::W002), 1, "{:?}", report.diagnostics);
    assert!(!report.has_errors());
}

#[test]
fn instantiation_that_cannot_describe_the_type() {
    let (_, report) =
        run(":- instdef wrap(I) -> f(I).\n:- pred p(int).\n:- mode p(in(wrap(ground))).\np(X).\n");
    assert_eq!(single_error(&report).code, Code::E004);
}

#[test]
fn single_branch_disjunction_is_transparent() {
    let (text, _) = run("?- ( X = a ), Y = X.\n");
    assert_eq!(text, "?- X := a, Y := X.\n");
}
