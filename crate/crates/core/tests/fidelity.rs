//! Grammar construction against hand-written rule sets, compared by
//! bounded-language equality through the brute-force oracle.

mod common;

use std::collections::BTreeSet;

use common::*;
use modal::cli::rt_of;
use modal::grammar::{Ctor, TiGrammar};
use modal::oracle::Oracle;
use modal::scheduler::CheckOptions;

const DEPTH: usize = 4;

fn language(r: &TiGrammar) -> BTreeSet<String> {
    let mut o = Oracle::new();
    let l = o.enumerate(r, DEPTH).unwrap();
    o.render_all(&l)
}

fn same_language(got: &TiGrammar, expected: &str) {
    let want = TiGrammar::parse(expected).unwrap();
    let (g, w) = (language(got), language(&want));
    assert!(!w.is_empty());
    assert_eq!(g, w, "got grammar:\n{got}");
}

const HLIST: &str = "\
:- typedef abc -> a ; b ; c.
:- typedef hlist(T) -> [] ; [T | hlist(T)] deriving solver.
";

const LIST_HABC: &str = "\
:- typedef habc -> a ; b ; c deriving solver.
:- typedef list(T) -> [] ; [T | list(T)].
:- instdef list(I) -> ([] ; [I|list(I)]).
:- instdef nelist(I) -> [I|list(I)].
";

#[test]
fn nonempty_list_of_old_solver_atoms() {
    let g = rt_of(LIST_HABC, "list(habc)", "nelist(old)").unwrap();
    same_language(
        &g,
        "nel -> [hold|lol]
         lol -> [] ; [hold|lol]
         hold -> a ; b ; c ; #var#",
    );
}

#[test]
fn nonempty_list_of_ground_parameter() {
    let g = rt_of(&fixture("stack"), "list(T)", "nelist(ground)").unwrap();
    same_language(
        &g,
        "nel -> [tg|lg]
         lg -> [] ; [tg|lg]
         tg -> $ground(T)$",
    );
}

#[test]
fn old_herbrand_list_of_constants() {
    let g = rt_of(HLIST, "hlist(abc)", "old").unwrap();
    same_language(
        &g,
        "hl -> [] ; [ab|hl] ; #var#
         ab -> a ; b ; c",
    );
}

#[test]
fn old_list_of_solver_atoms() {
    let g = rt_of(LIST_HABC, "list(habc)", "old").unwrap();
    same_language(
        &g,
        "l -> [] ; [h|l]
         h -> a ; b ; c ; #var#",
    );
}

#[test]
fn old_herbrand_list_of_parameter() {
    let g = rt_of(HLIST, "hlist(T)", "old").unwrap();
    same_language(
        &g,
        "hl -> [] ; [t|hl] ; #var#
         t -> $ground(T)$ ; $old(T)$",
    );
}

const H1: &str = "\
h1 -> $ipred$(sg, sg, new, sg)
sg -> neg ; zero ; pos";

#[test]
fn higher_order_sign_multiplier() {
    let g = rt_of(&fixture("hopush"), "pred(sign,sign)", "pred(in,out)").unwrap();
    same_language(&g, H1);
}

#[test]
fn constructed_multiplier_has_declared_grammar() {
    let (_, report) = check_fixture("hopush");
    let q = report.procedure("query1").unwrap();
    same_language(q.final_state.get("I0"), H1);
}

/// Languages of the call and success children of a one-argument-pair `$ipred$` root.
fn ipred_slices(g: &TiGrammar) -> Vec<BTreeSet<String>> {
    let prods = g.root_productions();
    assert_eq!(prods.len(), 1, "{g}");
    assert!(matches!(prods[0].ctor, Ctor::IPred(2)), "{g}");
    prods[0]
        .args
        .iter()
        .map(|x| language(&g.subg(x).unwrap()))
        .collect()
}

#[test]
fn higher_order_join_narrows_calls_and_widens_successes() {
    let (_, report) = check(&fixture("holattice"), CheckOptions::default());
    assert!(!report.has_errors(), "{:?}", report.diagnostics);
    let q = report.procedure("query1").unwrap();
    let slices = ipred_slices(q.final_state.get("HO"));
    let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
    assert_eq!(slices[0], set(&["a", "b"]));
    assert_eq!(slices[3], set(&["a", "b", "c"]));
}

#[test]
fn bounded_equality_tells_near_misses_apart() {
    let g = rt_of(HLIST, "hlist(abc)", "old").unwrap();
    for wrong in [
        "hl -> [] ; [ab|hl]\n ab -> a ; b ; c",
        "hl -> [] ; [ab|hl] ; #var#\n ab -> a ; b ; c ; #var#",
        "hl -> [ab|hl] ; #var#\n ab -> a ; b ; c",
    ] {
        let w = TiGrammar::parse(wrong).unwrap();
        assert_ne!(language(&g), language(&w), "{wrong}");
    }
    let h1 = TiGrammar::parse(H1).unwrap();
    let fresh_out =
        TiGrammar::parse("h1 -> $ipred$(sg, sg, sg, sg)\nsg -> neg ; zero ; pos").unwrap();
    assert_ne!(language(&h1), language(&fresh_out));
}
