//! Per-clause type assignment by unification against declared types.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::FrontendError;

#[derive(Clone, Debug, PartialEq)]
enum Ty {
    Meta(usize),
    Rigid(String),
    App(String, Vec<Ty>),
    Pred(Vec<Ty>),
}

struct Unifier {
    slots: Vec<Option<Ty>>,
}

impl Unifier {
    fn fresh(&mut self) -> Ty {
        self.slots.push(None);
        Ty::Meta(self.slots.len() - 1)
    }

    fn resolve(&self, t: &Ty) -> Ty {
        match t {
            Ty::Meta(m) => match &self.slots[*m] {
                Some(b) => self.resolve(b),
                None => t.clone(),
            },
            Ty::App(n, args) => Ty::App(n.clone(), args.iter().map(|a| self.resolve(a)).collect()),
            Ty::Pred(args) => Ty::Pred(args.iter().map(|a| self.resolve(a)).collect()),
            Ty::Rigid(_) => t.clone(),
        }
    }

    fn shallow(&self, t: &Ty) -> Ty {
        match t {
            Ty::Meta(m) => match &self.slots[*m] {
                Some(b) => self.shallow(b),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }

    fn occurs(&self, m: usize, t: &Ty) -> bool {
        match self.shallow(t) {
            Ty::Meta(k) => k == m,
            Ty::App(_, args) | Ty::Pred(args) => args.iter().any(|a| self.occurs(m, a)),
            Ty::Rigid(_) => false,
        }
    }

    fn unify(&mut self, a: &Ty, b: &Ty) -> bool {
        let (a, b) = (self.shallow(a), self.shallow(b));
        match (&a, &b) {
            (Ty::Meta(x), Ty::Meta(y)) if x == y => true,
            (Ty::Meta(x), other) | (other, Ty::Meta(x)) => {
                if self.occurs(*x, other) {
                    return false;
                }
                self.slots[*x] = Some(other.clone());
                true
            }
            (Ty::Rigid(x), Ty::Rigid(y)) => x == y,
            (Ty::App(f, xs), Ty::App(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.unify(x, y))
            }
            (Ty::Pred(xs), Ty::Pred(ys)) => {
                xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.unify(x, y))
            }
            _ => false,
        }
    }

    fn show(&self, t: &Ty) -> String {
        to_type_expr(&self.resolve(t), &mut BTreeMap::new(), &mut 0).to_string()
    }
}

fn from_type_expr(t: &TypeExpr, params: &BTreeMap<String, Ty>) -> Ty {
    match t {
        TypeExpr::Param(v) => params
            .get(v)
            .cloned()
            .unwrap_or_else(|| Ty::Rigid(v.clone())),
        TypeExpr::App(n, args) => Ty::App(
            n.clone(),
            args.iter().map(|a| from_type_expr(a, params)).collect(),
        ),
        TypeExpr::Pred(args) => Ty::Pred(args.iter().map(|a| from_type_expr(a, params)).collect()),
    }
}

fn to_type_expr(t: &Ty, leftovers: &mut BTreeMap<usize, String>, next: &mut usize) -> TypeExpr {
    match t {
        Ty::Meta(m) => {
            let name = leftovers.entry(*m).or_insert_with(|| {
                *next += 1;
                format!("_T{next}")
            });
            TypeExpr::Param(name.clone())
        }
        Ty::Rigid(v) => TypeExpr::Param(v.clone()),
        Ty::App(n, args) => TypeExpr::App(
            n.clone(),
            args.iter()
                .map(|a| to_type_expr(a, leftovers, next))
                .collect(),
        ),
        Ty::Pred(args) => TypeExpr::Pred(
            args.iter()
                .map(|a| to_type_expr(a, leftovers, next))
                .collect(),
        ),
    }
}

/// Every typedef alternative `f/n`: (typedef index, alternative index).
fn ctor_table(p: &Program) -> BTreeMap<(String, usize), Vec<(usize, usize)>> {
    let mut table: BTreeMap<(String, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (ti, t) in p.typedefs.iter().enumerate() {
        if let TypeBody::Alts(alts) = &t.body {
            for (ai, a) in alts.iter().enumerate() {
                table
                    .entry((a.ctor.clone(), a.args.len()))
                    .or_default()
                    .push((ti, ai));
            }
        }
    }
    table
}

enum Pending {
    Eq(String, String),
    Fun(String, String, Vec<String>),
    Const(String, Const),
    Call(usize, Vec<String>),
    HoCall(String, Vec<String>),
    HoConstruct(String, usize, Vec<String>),
    Fail,
}

struct Checker<'a> {
    prog: &'a Program,
    ctors: BTreeMap<(String, usize), Vec<(usize, usize)>>,
    u: Unifier,
    vars: BTreeMap<String, Ty>,
}

impl Checker<'_> {
    fn var(&mut self, v: &str) -> Ty {
        if let Some(t) = self.vars.get(v) {
            return t.clone();
        }
        let t = self.u.fresh();
        self.vars.insert(v.to_string(), t.clone());
        t
    }

    fn unify_var(&mut self, v: &str, t: &Ty, span: Span, what: &str) -> Result<(), FrontendError> {
        let vt = self.var(v);
        if self.u.unify(&vt, t) {
            Ok(())
        } else {
            Err(FrontendError::Type {
                span,
                msg: format!(
                    "{v} has type {} but {what} needs {}",
                    self.u.show(&vt),
                    self.u.show(t)
                ),
            })
        }
    }

    /// Fresh instance of a predicate's declared argument types.
    fn instance(&mut self, pred: usize) -> (Vec<Ty>, BTreeMap<String, Ty>) {
        let mut params = BTreeSet::new();
        for t in &self.prog.preds[pred].arg_types {
            t.params(&mut params);
        }
        let theta: BTreeMap<String, Ty> = params.into_iter().map(|v| (v, self.u.fresh())).collect();
        let tys = self.prog.preds[pred]
            .arg_types
            .iter()
            .map(|t| from_type_expr(t, &theta))
            .collect();
        (tys, theta)
    }

    fn ctor_instance(&mut self, ti: usize, ai: usize) -> (Ty, Vec<Ty>) {
        let def = &self.prog.typedefs[ti];
        let theta: BTreeMap<String, Ty> = def
            .params
            .iter()
            .map(|v| (v.clone(), self.u.fresh()))
            .collect();
        let result = Ty::App(
            def.name.clone(),
            def.params.iter().map(|v| theta[v].clone()).collect(),
        );
        let TypeBody::Alts(alts) = &def.body else {
            unreachable!()
        };
        let args = alts[ai]
            .args
            .iter()
            .map(|t| from_type_expr(t, &theta))
            .collect();
        (result, args)
    }

    fn apply_ctor(
        &mut self,
        x: &str,
        ti: usize,
        ai: usize,
        args: &[String],
        span: Span,
    ) -> Result<(), FrontendError> {
        let (res, arg_tys) = self.ctor_instance(ti, ai);
        let what = format!("constructor {}", self.prog.typedefs[ti].name);
        self.unify_var(x, &res, span, &what)?;
        for (a, t) in args.iter().zip(&arg_tys) {
            self.unify_var(a, t, span, &what)?;
        }
        Ok(())
    }
}

fn const_type(c: &Const) -> Ty {
    let n = match c {
        Const::Int(_) => "int",
        Const::Float(_) => "float",
        Const::Str(_) => "string",
    };
    Ty::App(n.into(), Vec::new())
}

fn var_name(t: &Term) -> String {
    match t {
        Term::Var(v) => v.clone(),
        other => panic!("normalized literal has non-variable argument {other}"),
    }
}

fn classify(
    prog: &Program,
    ctors: &BTreeMap<(String, usize), Vec<(usize, usize)>>,
    l: &Literal,
) -> Result<Pending, FrontendError> {
    Ok(match &l.kind {
        LitKind::True => unreachable!("normalization removes true"),
        LitKind::Fail => Pending::Fail,
        LitKind::Eq(Term::Var(a), Term::Var(b)) => Pending::Eq(a.clone(), b.clone()),
        LitKind::Eq(Term::Var(x), Term::Int(i)) => Pending::Const(x.clone(), Const::Int(*i)),
        LitKind::Eq(Term::Var(x), Term::Float(f)) => {
            Pending::Const(x.clone(), Const::Float(f.clone()))
        }
        LitKind::Eq(Term::Var(x), Term::Str(s)) => Pending::Const(x.clone(), Const::Str(s.clone())),
        LitKind::Eq(Term::Var(x), Term::Fun(f, args)) => {
            let args: Vec<String> = args.iter().map(var_name).collect();
            if ctors.contains_key(&(f.clone(), args.len())) {
                Pending::Fun(x.clone(), f.clone(), args)
            } else {
                let mut cands: Vec<usize> = prog
                    .preds
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| {
                        p.kind == PredKind::Declared && p.name == *f && p.arity() >= args.len()
                    })
                    .map(|(i, _)| i)
                    .collect();
                match cands.len() {
                    0 => {
                        return Err(FrontendError::Undefined {
                            span: l.span,
                            what: format!("constructor {f}/{}", args.len()),
                        })
                    }
                    1 => Pending::HoConstruct(x.clone(), cands.pop().unwrap(), args),
                    _ => {
                        return Err(FrontendError::Type {
                            span: l.span,
                            msg: format!(
                                "higher-order term {f}/{} is ambiguous between arities",
                                args.len()
                            ),
                        })
                    }
                }
            }
        }
        LitKind::Eq(..) => unreachable!("normalized equations have a variable on the left"),
        LitKind::Call(p, args) => {
            let args: Vec<String> = args.iter().map(var_name).collect();
            match prog.pred_index(p, args.len()) {
                Some(i) => Pending::Call(i, args),
                None if p == "call" && !args.is_empty() => {
                    Pending::HoCall(args[0].clone(), args[1..].to_vec())
                }
                None => {
                    return Err(FrontendError::Undefined {
                        span: l.span,
                        what: format!("predicate {p}/{}", args.len()),
                    })
                }
            }
        }
    })
}

fn convert(
    g: &Goal<Literal>,
    f: &mut dyn FnMut(&Literal) -> Result<TLiteral, FrontendError>,
) -> Result<Goal<TLiteral>, FrontendError> {
    Ok(match g {
        Goal::Lit(l) => Goal::Lit(f(l)?),
        Goal::Conj(gs) => Goal::Conj(gs.iter().map(|g| convert(g, f)).collect::<Result<_, _>>()?),
        Goal::Disj(gs) => Goal::Disj(gs.iter().map(|g| convert(g, f)).collect::<Result<_, _>>()?),
        Goal::Ite(c, t, e) => Goal::Ite(
            Box::new(convert(c, f)?),
            Box::new(convert(t, f)?),
            Box::new(convert(e, f)?),
        ),
    })
}

fn type_pred(prog: &Program, idx: usize) -> Result<TypedClause, FrontendError> {
    let pred = &prog.preds[idx];
    let clause = &pred.clauses[0];
    let mut ck = Checker {
        prog,
        ctors: ctor_table(prog),
        u: Unifier { slots: Vec::new() },
        vars: BTreeMap::new(),
    };
    let head: Vec<String> = clause.head.iter().map(var_name).collect();
    for (v, t) in head.iter().zip(&pred.arg_types) {
        let ty = from_type_expr(t, &BTreeMap::new());
        ck.vars.insert(v.clone(), ty);
    }

    let lits: Vec<&Literal> = clause.body.literals();
    let mut pending = Vec::new();
    for l in &lits {
        pending.push(classify(prog, &ck.ctors, l)?);
    }
    let mut thetas: Vec<Option<BTreeMap<String, Ty>>> = vec![None; lits.len()];
    let mut deferred: Vec<usize> = Vec::new();
    for (k, (l, p)) in lits.iter().zip(&pending).enumerate() {
        match p {
            Pending::Eq(a, b) => {
                let tb = ck.var(b);
                ck.unify_var(a, &tb, l.span, &format!("equation with {b}"))?;
            }
            Pending::Const(x, c) => {
                ck.unify_var(x, &const_type(c), l.span, &format!("constant {c}"))?
            }
            Pending::Fun(x, f, args) => {
                let cands = &ck.ctors[&(f.clone(), args.len())];
                if cands.len() == 1 {
                    let (ti, ai) = cands[0];
                    ck.apply_ctor(x, ti, ai, args, l.span)?;
                } else {
                    ck.var(x);
                    args.iter().for_each(|a| {
                        ck.var(a);
                    });
                    deferred.push(k);
                }
            }
            Pending::Call(i, args) => {
                let (tys, theta) = ck.instance(*i);
                let what = format!("argument of {}", prog.preds[*i].key());
                for (a, t) in args.iter().zip(&tys) {
                    ck.unify_var(a, t, l.span, &what)?;
                }
                thetas[k] = Some(theta);
            }
            Pending::HoCall(h, args) => {
                let arg_tys: Vec<Ty> = args.iter().map(|a| ck.var(a)).collect();
                ck.unify_var(h, &Ty::Pred(arg_tys), l.span, "higher-order call")?;
            }
            Pending::HoConstruct(h, i, args) => {
                let (tys, theta) = ck.instance(*i);
                let what = format!("closure over {}", prog.preds[*i].key());
                for (a, t) in args.iter().zip(&tys) {
                    ck.unify_var(a, t, l.span, &what)?;
                }
                ck.unify_var(h, &Ty::Pred(tys[args.len()..].to_vec()), l.span, &what)?;
                thetas[k] = Some(theta);
            }
            Pending::Fail => {}
        }
    }
    // Constructors shared by several types are settled once the equated
    // variable's type is known.
    while !deferred.is_empty() {
        let mut progress = false;
        let mut still = Vec::new();
        for k in deferred {
            let Pending::Fun(x, f, args) = &pending[k] else {
                unreachable!()
            };
            let xt = ck.u.resolve(&ck.vars[x.as_str()]);
            let cands = ck.ctors[&(f.clone(), args.len())].clone();
            if let Ty::App(name, _) = &xt {
                let pick = cands
                    .iter()
                    .copied()
                    .find(|(ti, _)| prog.typedefs[*ti].name == *name);
                let Some((ti, ai)) = pick else {
                    return Err(FrontendError::Type {
                        span: lits[k].span,
                        msg: format!(
                            "{x} has type {} which has no constructor {f}/{}",
                            ck.u.show(&xt),
                            args.len()
                        ),
                    });
                };
                ck.apply_ctor(x, ti, ai, args, lits[k].span)?;
                progress = true;
            } else {
                still.push(k);
            }
        }
        if !progress && !still.is_empty() {
            let k = still[0];
            let Pending::Fun(_, f, args) = &pending[k] else {
                unreachable!()
            };
            return Err(FrontendError::Type {
                span: lits[k].span,
                msg: format!(
                    "cannot tell which type constructor {f}/{} belongs to",
                    args.len()
                ),
            });
        }
        deferred = still;
    }

    let mut leftovers = BTreeMap::new();
    let mut next = 0;
    let var_types: BTreeMap<String, TypeExpr> = ck
        .vars
        .iter()
        .map(|(v, t)| {
            (
                v.clone(),
                to_type_expr(&ck.u.resolve(t), &mut leftovers, &mut next),
            )
        })
        .collect();
    let mut resolve_theta = |theta: &BTreeMap<String, Ty>| -> BTreeMap<String, TypeExpr> {
        theta
            .iter()
            .map(|(v, t)| {
                (
                    v.clone(),
                    to_type_expr(&ck.u.resolve(t), &mut leftovers, &mut next),
                )
            })
            .collect()
    };
    let thetas: Vec<Option<BTreeMap<String, TypeExpr>>> = thetas
        .iter()
        .map(|t| t.as_ref().map(&mut resolve_theta))
        .collect();

    let mut id = 0;
    let body = convert(&clause.body, &mut |l| {
        let k = id;
        id += 1;
        let kind = match &pending[k] {
            Pending::Eq(a, b) => TLitKind::EqVar(a.clone(), b.clone()),
            Pending::Fun(x, f, args) => TLitKind::EqFun(x.clone(), f.clone(), args.clone()),
            Pending::Const(x, c) => TLitKind::EqConst(x.clone(), c.clone()),
            Pending::Call(i, args) => TLitKind::Call {
                pred: *i,
                args: args.clone(),
                theta: thetas[k].clone().unwrap_or_default(),
            },
            Pending::HoCall(h, args) => TLitKind::HoCall(h.clone(), args.clone()),
            Pending::HoConstruct(h, i, args) => TLitKind::HoConstruct {
                h: h.clone(),
                pred: *i,
                args: args.clone(),
                theta: thetas[k].clone().unwrap_or_default(),
            },
            Pending::Fail => TLitKind::Fail,
        };
        Ok(TLiteral {
            id: k,
            kind,
            span: l.span,
        })
    })?;
    Ok(TypedClause {
        head,
        body,
        var_types,
    })
}

/// Attach a `TypedClause` to every predicate that has clauses.
pub fn assign_types(mut p: Program) -> Result<Program, FrontendError> {
    let mut typed = Vec::new();
    for i in 0..p.preds.len() {
        if p.preds[i].clauses.is_empty() {
            typed.push(None);
            continue;
        }
        typed.push(Some(type_pred(&p, i)?));
    }
    for (pred, t) in p.preds.iter_mut().zip(typed) {
        pred.typed = t;
    }
    Ok(p)
}
