//! Clause normalization: distinct-variable heads and literals, flat
//! equations, and one disjunctive body per predicate.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;

struct Fresh<'a> {
    clause: usize,
    counter: usize,
    taken: &'a mut BTreeSet<String>,
    made: &'a mut BTreeSet<String>,
}

impl Fresh<'_> {
    fn var(&mut self) -> String {
        loop {
            self.counter += 1;
            let name = format!("V_{}_{}", self.clause, self.counter);
            if self.taken.insert(name.clone()) {
                self.made.insert(name.clone());
                return name;
            }
        }
    }
}

fn eq(a: Term, b: Term, span: Span) -> Literal {
    Literal {
        kind: LitKind::Eq(a, b),
        span,
    }
}

/// `x = t` as a list of flat equations, outermost first.
fn flatten_eq(x: &str, t: &Term, span: Span, fresh: &mut Fresh) -> Vec<Literal> {
    match t {
        Term::Var(v) if v == x => Vec::new(),
        Term::Var(_) | Term::Int(_) | Term::Float(_) | Term::Str(_) => {
            vec![eq(Term::Var(x.to_string()), t.clone(), span)]
        }
        Term::Fun(f, args) => {
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            seen.insert(x);
            let mut flat = Vec::new();
            let mut post = Vec::new();
            for a in args {
                match a {
                    Term::Var(v) if seen.insert(v.as_str()) => flat.push(a.clone()),
                    Term::Var(_) => {
                        let f = fresh.var();
                        post.push(eq(Term::Var(f.clone()), a.clone(), span));
                        flat.push(Term::Var(f));
                    }
                    _ => {
                        let f = fresh.var();
                        post.extend(flatten_eq(&f, a, span, fresh));
                        flat.push(Term::Var(f));
                    }
                }
            }
            let mut out = vec![eq(
                Term::Var(x.to_string()),
                Term::Fun(f.clone(), flat),
                span,
            )];
            out.extend(post);
            out
        }
    }
}

fn norm_literal(l: &Literal, fresh: &mut Fresh) -> Vec<Literal> {
    match &l.kind {
        LitKind::True => Vec::new(),
        LitKind::Fail => vec![l.clone()],
        LitKind::Eq(a, b) => match (a, b) {
            (Term::Var(x), t) => flatten_eq(x, t, l.span, fresh),
            (t, Term::Var(x)) => flatten_eq(x, t, l.span, fresh),
            _ => {
                let v = fresh.var();
                let mut out = flatten_eq(&v, a, l.span, fresh);
                out.extend(flatten_eq(&v, b, l.span, fresh));
                out
            }
        },
        LitKind::Call(p, args) => {
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            let mut pre = Vec::new();
            let mut post = Vec::new();
            let mut flat = Vec::new();
            for a in args {
                match a {
                    Term::Var(v) if seen.insert(v.as_str()) => flat.push(a.clone()),
                    Term::Var(_) => {
                        let f = fresh.var();
                        post.push(eq(Term::Var(f.clone()), a.clone(), l.span));
                        flat.push(Term::Var(f));
                    }
                    _ => {
                        let f = fresh.var();
                        pre.extend(flatten_eq(&f, a, l.span, fresh));
                        flat.push(Term::Var(f));
                    }
                }
            }
            pre.push(Literal {
                kind: LitKind::Call(p.clone(), flat),
                span: l.span,
            });
            pre.extend(post);
            pre
        }
    }
}

fn norm_goal(g: &Goal<Literal>, fresh: &mut Fresh) -> Goal<Literal> {
    match g {
        Goal::Lit(l) => {
            let mut lits: Vec<Goal<Literal>> =
                norm_literal(l, fresh).into_iter().map(Goal::Lit).collect();
            if lits.len() == 1 {
                lits.pop().unwrap()
            } else {
                Goal::Conj(lits)
            }
        }
        Goal::Conj(gs) => {
            let mut items = Vec::new();
            for g in gs {
                match norm_goal(g, fresh) {
                    Goal::Conj(inner) => items.extend(inner),
                    other => items.push(other),
                }
            }
            if items.len() == 1 {
                items.pop().unwrap()
            } else {
                Goal::Conj(items)
            }
        }
        Goal::Disj(gs) => {
            let mut branches = Vec::new();
            for g in gs {
                match norm_goal(g, fresh) {
                    Goal::Disj(inner) => branches.extend(inner),
                    other => branches.push(other),
                }
            }
            if branches.len() == 1 {
                branches.pop().unwrap()
            } else {
                Goal::Disj(branches)
            }
        }
        Goal::Ite(c, t, e) => Goal::Ite(
            Box::new(norm_goal(c, fresh)),
            Box::new(norm_goal(t, fresh)),
            Box::new(norm_goal(e, fresh)),
        ),
    }
}

fn term_rename(t: &Term, map: &BTreeMap<String, String>) -> Term {
    match t {
        Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
        Term::Fun(f, args) => Term::Fun(
            f.clone(),
            args.iter().map(|a| term_rename(a, map)).collect(),
        ),
        _ => t.clone(),
    }
}

fn goal_rename(g: &Goal<Literal>, map: &BTreeMap<String, String>) -> Goal<Literal> {
    match g {
        Goal::Lit(l) => Goal::Lit(Literal {
            kind: match &l.kind {
                LitKind::Eq(a, b) => LitKind::Eq(term_rename(a, map), term_rename(b, map)),
                LitKind::Call(p, args) => LitKind::Call(
                    p.clone(),
                    args.iter().map(|a| term_rename(a, map)).collect(),
                ),
                k => k.clone(),
            },
            span: l.span,
        }),
        Goal::Conj(gs) => Goal::Conj(gs.iter().map(|g| goal_rename(g, map)).collect()),
        Goal::Disj(gs) => Goal::Disj(gs.iter().map(|g| goal_rename(g, map)).collect()),
        Goal::Ite(c, t, e) => Goal::Ite(
            Box::new(goal_rename(c, map)),
            Box::new(goal_rename(t, map)),
            Box::new(goal_rename(e, map)),
        ),
    }
}

fn goal_vars(g: &Goal<Literal>, out: &mut Vec<String>) {
    g.walk(&mut |l| match &l.kind {
        LitKind::Eq(a, b) => {
            a.vars(out);
            b.vars(out);
        }
        LitKind::Call(_, args) => args.iter().for_each(|a| a.vars(out)),
        _ => {}
    });
}

fn clause_vars(c: &Clause) -> BTreeSet<String> {
    let mut v = Vec::new();
    c.head.iter().for_each(|t| t.vars(&mut v));
    goal_vars(&c.body, &mut v);
    v.into_iter().collect()
}

/// Pick one variable name per head position, shared by every clause.
fn head_names(clauses: &[Clause], arity: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut names: Vec<Option<String>> = vec![None; arity];
    let mut used: BTreeSet<String> = BTreeSet::new();
    for c in clauses {
        let mut count: BTreeMap<&str, usize> = BTreeMap::new();
        for t in &c.head {
            if let Term::Var(v) = t {
                *count.entry(v).or_default() += 1;
            }
        }
        for (i, t) in c.head.iter().enumerate() {
            if names[i].is_some() {
                continue;
            }
            if let Term::Var(v) = t {
                if count[v.as_str()] == 1 && !used.contains(v) {
                    used.insert(v.clone());
                    names[i] = Some(v.clone());
                }
            }
        }
    }
    taken.extend(used.iter().cloned());
    let mut made = BTreeSet::new();
    let mut fresh = Fresh {
        clause: 0,
        counter: 0,
        taken,
        made: &mut made,
    };
    names
        .into_iter()
        .map(|n| n.unwrap_or_else(|| fresh.var()))
        .collect()
}

fn normalize_pred(pred: &PredDef, made: &mut BTreeSet<String>) -> Clause {
    let arity = pred.clauses[0].head.len();
    let mut taken: BTreeSet<String> = pred.clauses.iter().flat_map(clause_vars).collect();
    let head = head_names(&pred.clauses, arity, &mut taken);
    let head_set: BTreeSet<&String> = head.iter().collect();
    let mut earlier_locals: BTreeSet<String> = BTreeSet::new();
    let mut bodies = Vec::new();

    for (k, c) in pred.clauses.iter().enumerate() {
        let clause_no = k + 1;
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        let mut head_eqs = Vec::new();
        let mut bound_head: BTreeSet<String> = BTreeSet::new();
        for (i, t) in c.head.iter().enumerate() {
            if let Term::Var(v) = t {
                if !map.contains_key(v) && !bound_head.contains(v) {
                    map.insert(v.clone(), head[i].clone());
                    bound_head.insert(v.clone());
                    continue;
                }
            }
            head_eqs.push((i, t.clone()));
        }
        // Locals that clash with head names or earlier clauses get a suffix.
        let vars = clause_vars(c);
        let mut locals = Vec::new();
        for v in &vars {
            if map.contains_key(v) {
                continue;
            }
            let clash = head_set.contains(v) || earlier_locals.contains(v);
            if clash {
                let mut n = clause_no;
                let mut name = format!("{v}_{n}");
                while taken.contains(&name) {
                    n += 1;
                    name = format!("{v}_{n}_{clause_no}");
                }
                taken.insert(name.clone());
                map.insert(v.clone(), name.clone());
                locals.push(name);
            } else {
                locals.push(v.clone());
            }
        }
        earlier_locals.extend(locals);

        let body = goal_rename(&c.body, &map);
        let mut items: Vec<Goal<Literal>> = head_eqs
            .into_iter()
            .map(|(i, t)| {
                Goal::Lit(eq(
                    Term::Var(head[i].clone()),
                    term_rename(&t, &map),
                    c.span,
                ))
            })
            .collect();
        items.push(body);
        let mut fresh = Fresh {
            clause: clause_no,
            counter: 0,
            taken: &mut taken,
            made,
        };
        bodies.push(norm_goal(&Goal::Conj(items), &mut fresh));
    }

    let body = if bodies.len() == 1 {
        bodies.pop().unwrap()
    } else {
        let mut branches = Vec::new();
        for b in bodies {
            match b {
                Goal::Disj(inner) => branches.extend(inner),
                other => branches.push(other),
            }
        }
        Goal::Disj(branches)
    };
    Clause {
        head: head.into_iter().map(Term::Var).collect(),
        body,
        span: pred.clauses[0].span,
    }
}

/// Normalize every predicate with clauses. Idempotent.
pub fn normalize(mut p: Program) -> Program {
    for pred in &mut p.preds {
        if pred.clauses.is_empty() {
            continue;
        }
        let mut made = BTreeSet::new();
        let merged = normalize_pred(pred, &mut made);
        pred.temps.extend(made);
        pred.clauses = vec![merged];
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse_program;

    fn norm(src: &str) -> String {
        let p = normalize(parse_program(src).unwrap());
        let c = &p.preds[0].clauses[0];
        let head: Vec<String> = c.head.iter().map(|t| t.to_string()).collect();
        format!(
            "{}({}) :- {}",
            p.preds[0].name,
            head.join(","),
            show(&c.body)
        )
    }

    fn show(g: &Goal<Literal>) -> String {
        match g {
            Goal::Lit(l) => l.to_string(),
            Goal::Conj(gs) => gs.iter().map(show).collect::<Vec<_>>().join(", "),
            Goal::Disj(gs) => format!("({})", gs.iter().map(show).collect::<Vec<_>>().join(" ; ")),
            Goal::Ite(c, t, e) => format!("({} -> {} ; {})", show(c), show(t), show(e)),
        }
    }

    #[test]
    fn already_normal() {
        let src = ":- pred push(list(T),T,list(T)).\npush(S0,E,S1) :- S1 = [E|S0].\n";
        assert_eq!(norm(src), "push(S0,E,S1) :- S1 = [E|S0]");
    }

    #[test]
    fn head_terms_and_repeated_args() {
        let src = ":- pred p(t).\n:- pred q(u, u).\np(f(X)) :- q(X,X).\n";
        assert_eq!(norm(src), "p(V_0_1) :- V_0_1 = f(X), q(X,V_1_1), V_1_1 = X");
    }

    #[test]
    fn clauses_merge() {
        let src = ":- pred dupl(list(T), list(T)).\n\
                   dupl(S0, S) :- S0 = [], S = [].\n\
                   dupl(S0, S) :- push(S0, A, S), pop(S0, A, S1).\n";
        assert_eq!(
            norm(src),
            "dupl(S0,S) :- (S0 = [], S = [] ; push(S0,A,S), pop(S0,A,S1))"
        );
    }

    #[test]
    fn nested_terms_flatten_outermost_first() {
        let src = ":- pred p(t).\np(X) :- X = f(g(Y), 1).\n";
        assert_eq!(
            norm(src),
            "p(X) :- X = f(V_1_1,V_1_2), V_1_1 = g(Y), V_1_2 = 1"
        );
    }

    #[test]
    fn clashing_locals_renamed() {
        let src = ":- pred p(t).\np(X) :- X = f(Y).\np(X) :- X = g(Y).\n";
        assert_eq!(norm(src), "p(X) :- (X = f(Y) ; X = g(Y_2))");
    }

    #[test]
    fn idempotent_on_examples() {
        let src = ":- pred p(t, t).\np(f(X), X) :- q(g(X), [X|Y]), X = Y.\np(A, b) :- A = c.\n";
        let once = normalize(parse_program(src).unwrap());
        let twice = normalize(once.clone());
        assert_eq!(once, twice);
    }
}
