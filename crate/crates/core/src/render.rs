//! Text forms of literals and emitted procedures.
//!
//! Temporaries introduced by normalization are folded back into their
//! single use when that use is a call or construct argument, so listings
//! read like the source: `+_mode2(N1, 1, N)` rather than `V := 1, +_mode2(N1, V, N)`.

use std::collections::BTreeMap;

use crate::frontend::{PredKind, Program, TLitKind, TLiteral};
use crate::scheduler::{procedure_name, Procedure, SGoal, SLit, SLitKind};

fn term(f: &str, args: &[String]) -> String {
    match (f, args.len()) {
        (".", 2) if args[1] == "[]" => format!("[{}]", args[0]),
        // Arguments are variable names unless folded, so a bracket means a folded list.
        (".", 2) if args[1].starts_with('[') => {
            format!("[{}, {}", args[0], &args[1][1..])
        }
        (".", 2) => format!("[{}|{}]", args[0], args[1]),
        (_, 0) => f.to_string(),
        _ => format!("{f}({})", args.join(", ")),
    }
}

fn call(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{name}({})", args.join(", "))
    }
}

/// A normalized literal as the programmer would write it.
pub fn source_text(prog: &Program, l: &TLiteral) -> String {
    match &l.kind {
        TLitKind::EqVar(a, b) => format!("{a} = {b}"),
        TLitKind::EqFun(x, f, args) => format!("{x} = {}", term(f, args)),
        TLitKind::EqConst(x, c) => format!("{x} = {c}"),
        TLitKind::Call { pred, args, .. } => call(&prog.preds[*pred].name, args),
        TLitKind::HoCall(h, args) => {
            let mut all = vec![h.clone()];
            all.extend(args.iter().cloned());
            call("call", &all)
        }
        TLitKind::HoConstruct { h, pred, args, .. } => {
            format!("{h} = {}", call(&prog.preds[*pred].name, args))
        }
        TLitKind::Fail => "fail".into(),
    }
}

/// An emitted literal with its execution tag, without folding.
pub fn literal(prog: &Program, l: &SLit) -> String {
    Printer {
        prog,
        folded: BTreeMap::new(),
    }
    .literal(l)
}

struct Printer<'p> {
    prog: &'p Program,
    /// Temporary -> the term text that replaces it.
    folded: BTreeMap<String, String>,
}

impl Printer<'_> {
    fn arg(&self, v: &str) -> String {
        self.folded.get(v).cloned().unwrap_or_else(|| v.to_string())
    }

    fn args(&self, vs: &[String]) -> Vec<String> {
        vs.iter().map(|v| self.arg(v)).collect()
    }

    fn literal(&self, l: &SLit) -> String {
        match &l.kind {
            SLitKind::Copy { dst, src } => format!("{dst} := {src}"),
            SLitKind::Unify(a, b) => format!("{a} == {b}"),
            SLitKind::Construct { x, ctor, args } => {
                format!("{x} := {}", term(ctor, &self.args(args)))
            }
            SLitKind::Deconstruct { x, ctor, args } if args.is_empty() => format!("{x} == {ctor}"),
            SLitKind::Deconstruct { x, ctor, args } => format!("{x} =: {}", term(ctor, args)),
            SLitKind::ConstConstruct(x, c) => format!("{x} := {c}"),
            SLitKind::ConstTest(x, c) => format!("{x} == {c}"),
            SLitKind::Call {
                pred, mode, args, ..
            } => call(&procedure_name(self.prog, *pred, *mode), &self.args(args)),
            SLitKind::HoCall { h, args } => {
                let mut all = vec![h.clone()];
                all.extend(self.args(args));
                call("call", &all)
            }
            SLitKind::HoConstruct {
                h,
                pred,
                mode,
                args,
                ..
            } => {
                let name = procedure_name(self.prog, *pred, *mode);
                format!("{h} := {}", call(&name, &self.args(args)))
            }
            SLitKind::Init(v) => format!("init({v})"),
            SLitKind::Fail => "fail".into(),
        }
    }

    fn goal(&self, g: &SGoal) -> String {
        match g {
            SGoal::Lit(l) => self.literal(l),
            SGoal::Conj(gs) => {
                let parts: Vec<String> = gs
                    .iter()
                    .filter(|g| !self.hidden(g))
                    .map(|g| self.goal(g))
                    .collect();
                if parts.is_empty() {
                    "true".into()
                } else {
                    parts.join(", ")
                }
            }
            SGoal::Disj(gs) => {
                let parts: Vec<String> = gs.iter().map(|g| self.goal(g)).collect();
                format!("( {} )", parts.join(" ; "))
            }
            SGoal::Ite(c, t, e) => format!(
                "( {} -> {} ; {} )",
                self.goal(c),
                self.goal(t),
                self.goal(e)
            ),
        }
    }

    /// The definition of a folded temporary.
    fn hidden(&self, g: &SGoal) -> bool {
        match g {
            SGoal::Lit(l) => defined_temp(l).is_some_and(|x| self.folded.contains_key(x)),
            _ => false,
        }
    }

    fn collect(&mut self, g: &SGoal, uses: &BTreeMap<String, usize>, temps: &dyn Fn(&str) -> bool) {
        match g {
            SGoal::Lit(_) => {}
            SGoal::Conj(gs) => {
                for (i, g) in gs.iter().enumerate() {
                    let SGoal::Lit(l) = g else {
                        self.collect(g, uses, temps);
                        continue;
                    };
                    let Some(x) = defined_temp(l) else { continue };
                    if !temps(x) || uses.get(x) != Some(&2) {
                        continue;
                    }
                    let used_later = gs[i + 1..]
                        .iter()
                        .any(|g| matches!(g, SGoal::Lit(u) if folds_into(u, x)));
                    if used_later {
                        let text = match &l.kind {
                            SLitKind::ConstConstruct(_, c) => c.to_string(),
                            SLitKind::Construct { ctor, args, .. } => term(ctor, &self.args(args)),
                            _ => unreachable!(),
                        };
                        self.folded.insert(x.to_string(), text);
                    }
                }
            }
            SGoal::Disj(gs) => gs.iter().for_each(|g| self.collect(g, uses, temps)),
            SGoal::Ite(c, t, e) => {
                self.collect(c, uses, temps);
                self.collect(t, uses, temps);
                self.collect(e, uses, temps);
            }
        }
    }
}

fn defined_temp(l: &SLit) -> Option<&str> {
    match &l.kind {
        SLitKind::ConstConstruct(x, _) | SLitKind::Construct { x, .. } => Some(x),
        _ => None,
    }
}

fn folds_into(l: &SLit, v: &str) -> bool {
    let args = match &l.kind {
        SLitKind::Construct { args, .. }
        | SLitKind::Call { args, .. }
        | SLitKind::HoCall { args, .. }
        | SLitKind::HoConstruct { args, .. } => args,
        _ => return false,
    };
    args.iter().any(|a| a == v)
}

fn printer<'p>(prog: &'p Program, p: &Procedure) -> Printer<'p> {
    let mut uses: BTreeMap<String, usize> = BTreeMap::new();
    p.body.walk(&mut |l| {
        for v in l.kind.vars() {
            *uses.entry(v.to_string()).or_default() += 1;
        }
    });
    let pd = &prog.preds[p.pred];
    let temps = |v: &str| pd.temps.contains(v) && !p.head.iter().any(|h| h == v);
    let mut pr = Printer {
        prog,
        folded: BTreeMap::new(),
    };
    pr.collect(&p.body, &uses, &temps);
    pr
}

/// Comma-separated conjunction; nested disjunctions and if-then-elses are parenthesized.
pub fn goal(prog: &Program, g: &SGoal) -> String {
    Printer {
        prog,
        folded: BTreeMap::new(),
    }
    .goal(g)
}

/// Clause bodies of a procedure: one per top-level disjunct.
pub fn clause_bodies(prog: &Program, p: &Procedure) -> Vec<String> {
    let pr = printer(prog, p);
    match &p.body {
        SGoal::Disj(gs) => gs.iter().map(|g| pr.goal(g)).collect(),
        SGoal::Conj(gs) if gs.len() == 1 && matches!(gs[0], SGoal::Disj(_)) => {
            let SGoal::Disj(bs) = &gs[0] else {
                unreachable!()
            };
            bs.iter().map(|g| pr.goal(g)).collect()
        }
        g => vec![pr.goal(g)],
    }
}

/// The procedure as a listing, one clause per line.
pub fn procedure(prog: &Program, p: &Procedure) -> String {
    let head = call(&p.name, &p.head);
    let mut out = String::new();
    for body in clause_bodies(prog, p) {
        match prog.preds[p.pred].kind {
            PredKind::Query => out.push_str(&format!("?- {body}.\n")),
            PredKind::Declared => out.push_str(&format!("{head} :- {body}.\n")),
        }
    }
    out
}
