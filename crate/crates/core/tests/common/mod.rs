//! Shared helpers for the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use modal::cli::{check_source, listing};
use modal::frontend::Program;
use modal::scheduler::{CheckOptions, CheckReport};
use regex::Regex;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(format!("{name}.hal"))
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn check(src: &str, opts: CheckOptions) -> (Program, CheckReport) {
    check_source(src, opts).unwrap_or_else(|e| panic!("{e}"))
}

pub fn check_fixture(name: &str) -> (Program, CheckReport) {
    check(&fixture(name), CheckOptions::default())
}

pub fn no_init() -> CheckOptions {
    CheckOptions {
        init: false,
        ..CheckOptions::default()
    }
}

pub fn no_poly() -> CheckOptions {
    CheckOptions {
        poly: false,
        ..CheckOptions::default()
    }
}

/// Rename checker-made variables (`V_i_j`, `Fresh_n`) by order of first occurrence.
pub fn alpha(text: &str) -> String {
    let re = Regex::new(r"\b(V_\d+_\d+|Fresh_\d+)\b").unwrap();
    let mut seen: HashMap<String, usize> = HashMap::new();
    re.replace_all(text, |c: &regex::Captures| {
        let n = seen.len() + 1;
        let k = *seen.entry(c[1].to_string()).or_insert(n);
        format!("_G{k}")
    })
    .into_owned()
}

pub fn listing_of(name: &str) -> String {
    let (prog, report) = check_fixture(name);
    listing(&prog, &report)
}

/// Lines of `listing` for procedures whose name starts with `prefix`.
pub fn procedure_lines(listing: &str, prefix: &str) -> String {
    listing
        .lines()
        .filter(|l| l.starts_with(prefix))
        .map(|l| format!("{l}\n"))
        .collect()
}

pub const REORDER: &str = "single_mode1(X, Y) :- U2 := [], X =: [U1|U3], Y := [U1|U2].\n";

pub const DUPL: &str = "\
dupl_mode1(S0, S) :- fail.
dupl_mode1(S0, S) :- pop_mode2(S0, A, S1), push_mode1(S0, A, S).
";

pub const LENGTH: &str = "\
length_mode1(L, N) :- L := [], N == 0.
length_mode1(L, N) :- +_mode2(N1, 1, N), >_mode1(N, 0), length_mode1(L1, N1), init(X), L := [X|L1].
length_mode2(L, N) :- L == [], N := 0.
length_mode2(L, N) :- L =: [X|L1], length_mode2(L1, N1), +_mode1(N1, 1, N), >_mode1(N, 0).
";

pub const PAIRLIST: &str = "\
pairlist_mode1(L, N) :- N == 0, L := [].
pairlist_mode1(L, N) :- >_mode1(N, 0), +_mode2(N1, 1, N), pairlist_mode1(L2, N1), init(V), L1 := [V|L2], L := [V|L1].
";

pub const STACK: &str = "\
push_mode1(S0, E, S1) :- S1 := [E|S0].
pop_mode1(S0, E, S1) :- S0 =: [E|S1].
pop_mode2(S0, E, S1) :- S0 =: [E|S1].
empty_mode1(S) :- S == [].
empty_mode2(S) :- S := [].
";

/// `(fixture, procedure prefix, expected lines)` for the golden reorderings.
pub const GOLDEN_REORDERINGS: [(&str, &str, &str); 4] = [
    ("reorder", "single_", REORDER),
    ("dupl", "dupl_", DUPL),
    ("length", "length_", LENGTH),
    ("pairlist", "pairlist_", PAIRLIST),
];

/// The stack interface plus a query exercising an implied mode of pop.
pub fn implied_pop_program() -> String {
    format!(
        "{}\n:- typedef abc -> a ; b ; c.\n?- A = [b], C = [], pop(A, B, C).\n",
        fixture("stack")
    )
}

/// The stack interface plus a query whose last call only has a det mode
/// when the element instantiation survives `push` and `pop`.
pub fn only_a_program() -> String {
    format!(
        "{}
:- typedef abc -> a ; b ; c.
:- instdef only_a -> a.

:- pred q(abc).
:- mode q(in) is semidet.
:- mode q(in(only_a)) is det.

?- empty(S0), I0 = a, push(S0, I0, S1), pop(S1, I, S2), q(I).
",
        fixture("stack")
    )
}
