//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use modal::cli::{check_source, listing, rt_of, status, EXIT_MODE, EXIT_OK};
use modal::diag::Code;
use modal::grammar::{Ctor, TiGrammar};
use modal::oracle::{run_suite, Oracle, SuiteConfig};
use modal::scheduler::CheckOptions;
use modal::synth;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden_reorderings() -> Outcome {
    let start = Instant::now();
    for (name, prefix, want) in GOLDEN_REORDERINGS {
        let got = procedure_lines(&listing_of(name), prefix);
        ensure(alpha(&got) == alpha(want), || format!("{name}:\n{got}"))?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(format!("4 listings in {t:?}"))
}

fn golden_rejections() -> Outcome {
    let errors = |name: &str| {
        let (_, r) = check_fixture(name);
        r.diagnostics
            .iter()
            .filter(|d| d.is_error())
            .map(|d| (d.code, d.message.clone()))
            .collect::<Vec<_>>()
    };
    let lcint = errors("lcint");
    ensure(
        lcint.len() == 1 && lcint[0].0 == Code::E002 && lcint[0].1.starts_with("L "),
        || format!("lcint: {lcint:?}"),
    )?;
    let noncheck = errors("noncheck");
    ensure(noncheck.len() == 1 && noncheck[0].0 == Code::E001, || {
        format!("noncheck: {noncheck:?}")
    })?;
    let (_, append) = check_fixture("append");
    ensure(
        append.count(Code::W001) == 1 && status(&append, false) == EXIT_OK,
        || format!("append: {:?}", append.diagnostics),
    )?;
    Ok("lcint E002 on L, noncheck E001, append one W001".into())
}

fn language(o: &mut Oracle, g: &TiGrammar) -> Result<BTreeSet<String>, String> {
    let l = o.enumerate(g, 4).map_err(|e| e.to_string())?;
    Ok(o.render_all(&l))
}

fn grammar_fidelity() -> Outcome {
    let hlist = ":- typedef abc -> a ; b ; c.\n:- typedef hlist(T) -> [] ; [T | hlist(T)] deriving solver.\n";
    let list_habc = ":- typedef habc -> a ; b ; c deriving solver.\n\
                     :- typedef list(T) -> [] ; [T | list(T)].\n\
                     :- instdef list(I) -> ([] ; [I|list(I)]).\n\
                     :- instdef nelist(I) -> [I|list(I)].\n";
    let stack = fixture("stack");
    let hopush = fixture("hopush");
    let cases: [(&str, &str, &str, &str, &str); 5] = [
        (
            "rt(list(habc), nelist(old))",
            list_habc,
            "list(habc)",
            "nelist(old)",
            "n -> [h|l]\nl -> [] ; [h|l]\nh -> a ; b ; c ; #var#",
        ),
        (
            "rt(list(T), nelist(ground))",
            &stack,
            "list(T)",
            "nelist(ground)",
            "n -> [t|l]\nl -> [] ; [t|l]\nt -> $ground(T)$",
        ),
        (
            "base(hlist(abc), old)",
            hlist,
            "hlist(abc)",
            "old",
            "l -> [] ; [e|l] ; #var#\ne -> a ; b ; c",
        ),
        (
            "base(list(habc), old)",
            list_habc,
            "list(habc)",
            "old",
            "l -> [] ; [e|l]\ne -> a ; b ; c ; #var#",
        ),
        (
            "H1",
            &hopush,
            "pred(sign,sign)",
            "pred(in,out)",
            "h -> $ipred$(s, s, new, s)\ns -> neg ; zero ; pos",
        ),
    ];
    let mut o = Oracle::new();
    for (what, src, ty, inst, expected) in cases {
        let got = rt_of(src, ty, inst).map_err(|e| format!("{what}: {e}"))?;
        let want = TiGrammar::parse(expected).map_err(|e| e.to_string())?;
        let (g, w) = (language(&mut o, &got)?, language(&mut o, &want)?);
        ensure(g == w, || format!("{what}: got\n{got}"))?;
    }
    Ok("5 grammars equal at depth 4".into())
}

fn oracle_suite() -> Outcome {
    let start = Instant::now();
    let report = run_suite(&SuiteConfig {
        depth: 4,
        samples: 1000,
        seed: 42,
    });
    let t = start.elapsed();
    ensure(report.failures() == 0 && report.errors.is_empty(), || {
        format!("{:?} {:?}", report.properties, report.errors)
    })?;
    ensure(t < Duration::from_secs(30), || format!("took {t:?}"))?;
    Ok(format!("1000 samples, 0 failures, {t:?}"))
}

fn higher_order_lattice() -> Outcome {
    let (_, report) = check_fixture("holattice");
    ensure(!report.has_errors(), || format!("{:?}", report.diagnostics))?;
    let q = report.procedure("query1").ok_or("no query procedure")?;
    let g = q.final_state.get("HO");
    let prods = g.root_productions();
    ensure(
        prods.len() == 1 && matches!(prods[0].ctor, Ctor::IPred(2)),
        || format!("{g}"),
    )?;
    let mut o = Oracle::new();
    let mut slice = |i: usize| -> Result<BTreeSet<String>, String> {
        let sub = g.subg(&prods[0].args[i]).map_err(|e| e.to_string())?;
        language(&mut o, &sub)
    };
    let (call, success) = (slice(0)?, slice(3)?);
    let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
    ensure(
        call == set(&["a", "b"]) && success == set(&["a", "b", "c"]),
        || format!("call {call:?}, success {success:?}"),
    )?;
    Ok("call {a,b}, success {a,b,c}".into())
}

fn polymorphic_recovery() -> Outcome {
    let (_, report) = check_fixture("hopush");
    ensure(status(&report, true) == EXIT_OK, || {
        format!("{:?}", report.diagnostics)
    })?;
    let q = report.procedure("query1").ok_or("no query procedure")?;
    let at_map = q
        .trace
        .iter()
        .find(|t| t.callee == "map/3")
        .ok_or("map not called")?;
    let (_, gi) = at_map
        .args
        .iter()
        .find(|(v, _)| v == "I")
        .ok_or("I not traced")?;
    let has_ipred = gi.rules().is_some_and(|m| {
        m.values()
            .flatten()
            .any(|p| matches!(p.ctor, Ctor::IPred(_)))
    });
    ensure(has_ipred, || format!("I at map:\n{gi}"))?;
    let (_, without) = check(&fixture("hopush"), no_poly());
    ensure(status(&without, false) == EXIT_MODE, || {
        "passes without recovery".into()
    })?;
    Ok("I carries $ipred$ at map; fails with recovery off".into())
}

fn corpus() -> Outcome {
    let start = Instant::now();
    let names = [
        "stack",
        "dupl",
        "reorder",
        "length",
        "pairlist",
        "lcint",
        "noncheck",
        "append",
        "hopush",
        "holattice",
    ];
    for name in names {
        check_fixture(name);
    }
    check(&implied_pop_program(), CheckOptions::default());
    check(&only_a_program(), CheckOptions::default());
    let mut literals = 0;
    for seed in 0..50 {
        let src = synth::program(seed, 200);
        let (_, report) =
            check_source(&src, CheckOptions::default()).map_err(|e| format!("seed {seed}: {e}"))?;
        let n = synth::literal_count(&src).map_err(|e| e.to_string())?;
        ensure(n <= 200, || format!("seed {seed}: {n} literals"))?;
        ensure(report.count(Code::I001) == 0, || {
            format!("seed {seed}: {:?}", report.diagnostics)
        })?;
        literals += n;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(10), || format!("took {t:?}"))?;
    Ok(format!(
        "{} fixture programs + 50 generated ({literals} literals) in {t:?}",
        names.len() + 2
    ))
}

fn self_consistency() -> Outcome {
    let mut sources: Vec<String> = [
        "stack",
        "dupl",
        "reorder",
        "length",
        "pairlist",
        "append",
        "hopush",
        "holattice",
    ]
    .iter()
    .map(|n| fixture(n))
    .collect();
    sources.push(implied_pop_program());
    sources.push(only_a_program());
    sources.extend((100..150).map(|seed| synth::program(seed, 200)));
    let mut procs = 0;
    for src in &sources {
        let (prog, report) =
            check_source(src, CheckOptions::default()).map_err(|e| e.to_string())?;
        ensure(report.count(Code::I001) == 0, || {
            format!("{:?}\n{}", report.diagnostics, listing(&prog, &report))
        })?;
        procs += report.procedures.len();
    }
    Ok(format!("{procs} procedures re-checked"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("golden reorderings", golden_reorderings),
        ("golden rejections and warnings", golden_rejections),
        ("grammar construction fidelity", grammar_fidelity),
        ("oracle property suite", oracle_suite),
        ("higher-order lattice", higher_order_lattice),
        ("polymorphic recovery", polymorphic_recovery),
        ("acceptance corpus under 10 s", corpus),
        ("self-consistency re-check", self_consistency),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
