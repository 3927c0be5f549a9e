//! Hand-written recursive-descent parser for mini-HAL source.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::FrontendError;

/// Declaration-level terms, before we know whether they denote types,
/// instantiations or modes.
#[derive(Clone, Debug)]
enum DTerm {
    Var(String, Span),
    App(String, Vec<DTerm>, Span),
    Arrow(Box<DTerm>, Box<DTerm>, Span),
    Alts(Vec<DTerm>, Span),
    Is(Box<DTerm>, String, Span),
}

impl DTerm {
    fn span(&self) -> Span {
        match self {
            DTerm::Var(_, s)
            | DTerm::App(_, _, s)
            | DTerm::Arrow(_, _, s)
            | DTerm::Alts(_, s)
            | DTerm::Is(_, _, s) => *s,
        }
    }
}

const INFIX_GOALS: &[&str] = &[">", "<", ">=", "=<", "=:=", "=\\=", "\\=", "==", "\\=="];

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    anon: usize,
}

fn syntax(span: Span, msg: impl Into<String>) -> FrontendError {
    FrontendError::Syntax {
        span,
        msg: msg.into(),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Span, FrontendError> {
        let (t, s) = self.next();
        if t == want {
            Ok(s)
        } else {
            Err(syntax(
                s,
                format!("expected {}, found {}", want.describe(), t.describe()),
            ))
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == want {
            self.next();
            true
        } else {
            false
        }
    }

    fn is_atom(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Atom(a, _) if a == name)
    }

    // ------------------------------------------------------- declarations

    fn dexpr(&mut self) -> Result<DTerm, FrontendError> {
        let span = self.span();
        let first = self.dterm()?;
        if self.peek() != &Tok::Semi {
            return Ok(first);
        }
        let mut alts = vec![first];
        while self.eat(&Tok::Semi) {
            alts.push(self.dterm()?);
        }
        Ok(DTerm::Alts(alts, span))
    }

    fn dterm(&mut self) -> Result<DTerm, FrontendError> {
        let span = self.span();
        let mut t = self.dprimary()?;
        if self.is_atom("is") {
            self.next();
            match self.next() {
                (Tok::Atom(det, _), _) => t = DTerm::Is(Box::new(t), det, span),
                (other, s) => {
                    return Err(syntax(
                        s,
                        format!(
                            "expected determinism after `is`, found {}",
                            other.describe()
                        ),
                    ))
                }
            }
        }
        if self.eat(&Tok::Arrow) {
            let rhs = self.dterm()?;
            t = DTerm::Arrow(Box::new(t), Box::new(rhs), span);
        }
        Ok(t)
    }

    fn dargs(&mut self) -> Result<Vec<DTerm>, FrontendError> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.dexpr()?];
        while self.eat(&Tok::Comma) {
            args.push(self.dexpr()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn dprimary(&mut self) -> Result<DTerm, FrontendError> {
        let (t, span) = self.next();
        match t {
            Tok::Var(v) => Ok(DTerm::Var(v, span)),
            Tok::Atom(a, call) => {
                let args = if call { self.dargs()? } else { Vec::new() };
                Ok(DTerm::App(a, args, span))
            }
            Tok::LParen => {
                let e = self.dexpr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBrack => {
                if self.eat(&Tok::RBrack) {
                    return Ok(DTerm::App("[]".into(), Vec::new(), span));
                }
                let mut items = vec![self.dterm()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.dterm()?);
                }
                let mut tail = if self.eat(&Tok::Bar) {
                    self.dterm()?
                } else {
                    DTerm::App("[]".into(), Vec::new(), span)
                };
                self.expect(Tok::RBrack)?;
                while let Some(h) = items.pop() {
                    tail = DTerm::App(".".into(), vec![h, tail], span);
                }
                Ok(tail)
            }
            other => Err(syntax(
                span,
                format!("unexpected {} in declaration", other.describe()),
            )),
        }
    }

    /// `f(V1, ..., Vn)` with distinct variable parameters.
    fn head(&mut self) -> Result<(String, Vec<String>, Span), FrontendError> {
        let d = self.dprimary()?;
        let DTerm::App(name, args, span) = d else {
            return Err(syntax(d.span(), "expected a definition head"));
        };
        let mut params = Vec::new();
        for a in args {
            match a {
                DTerm::Var(v, s) => {
                    if params.contains(&v) {
                        return Err(syntax(
                            s,
                            format!("repeated parameter {v} in head of {name}"),
                        ));
                    }
                    params.push(v);
                }
                other => {
                    return Err(syntax(
                        other.span(),
                        "definition parameters must be variables",
                    ))
                }
            }
        }
        Ok((name, params, span))
    }

    fn finish_directive(&mut self) -> Result<(), FrontendError> {
        self.expect(Tok::End).map(|_| ())
    }

    fn typedef(&mut self) -> Result<TypeDef, FrontendError> {
        let (name, params, span) = self.head()?;
        let body = if self.eat(&Tok::Arrow) {
            let d = self.dexpr()?;
            let mut alts = Vec::new();
            for a in flatten_alts(d) {
                alts.push(to_alt(&a, &to_type)?);
            }
            TypeBody::Alts(alts)
        } else if self.eat(&Tok::Eq) {
            TypeBody::Equiv(to_type(&self.dterm()?)?)
        } else {
            TypeBody::Abstract
        };
        let mut is_solver = false;
        if self.is_atom("deriving") {
            self.next();
            match self.next() {
                (Tok::Atom(a, _), _) if a == "solver" => is_solver = true,
                (t, s) => {
                    return Err(syntax(
                        s,
                        format!("expected `solver`, found {}", t.describe()),
                    ))
                }
            }
        }
        if matches!(body, TypeBody::Abstract) && !is_solver {
            return Err(syntax(span, format!("typedef {name} has no body")));
        }
        self.finish_directive()?;
        Ok(TypeDef {
            name,
            params,
            body,
            is_solver,
            span,
        })
    }

    fn instdef(&mut self) -> Result<InstDef, FrontendError> {
        let (name, params, span) = self.head()?;
        let body = if self.eat(&Tok::Arrow) {
            let d = self.dexpr()?;
            let mut alts = Vec::new();
            for a in flatten_alts(d) {
                alts.push(to_alt(&a, &to_inst)?);
            }
            InstBody::Alts(alts)
        } else if self.eat(&Tok::Eq) {
            InstBody::Equiv(to_inst(&self.dterm()?)?)
        } else {
            return Err(syntax(self.span(), "expected `->` or `=` in instdef"));
        };
        self.finish_directive()?;
        Ok(InstDef {
            name,
            params,
            body,
            span,
        })
    }

    fn modedef(&mut self) -> Result<ModeDef, FrontendError> {
        let (name, params, span) = self.head()?;
        let body = if self.eat(&Tok::Arrow) {
            match to_mode(&self.dterm()?)? {
                ModeExpr::Arrow(c, s) => ModeBody::Arrow(*c, *s),
                ModeExpr::Named(..) => {
                    return Err(syntax(span, "modedef body must be `Call -> Success`"))
                }
            }
        } else if self.eat(&Tok::Eq) {
            ModeBody::Equiv(to_mode(&self.dterm()?)?)
        } else {
            return Err(syntax(self.span(), "expected `->` or `=` in modedef"));
        };
        self.finish_directive()?;
        Ok(ModeDef {
            name,
            params,
            body,
            span,
        })
    }

    fn pred_decl(&mut self) -> Result<(String, Vec<TypeExpr>, Span), FrontendError> {
        let d = self.dprimary()?;
        let DTerm::App(name, args, span) = d else {
            return Err(syntax(d.span(), "expected a predicate name"));
        };
        let types = args.iter().map(to_type).collect::<Result<Vec<_>, _>>()?;
        self.finish_directive()?;
        Ok((name, types, span))
    }

    fn mode_decl(&mut self) -> Result<(String, ModeDecl), FrontendError> {
        let d = self.dterm()?;
        let (d, det) = match d {
            DTerm::Is(inner, det, _) => (*inner, Some(det)),
            other => (other, None),
        };
        let DTerm::App(name, args, span) = d else {
            return Err(syntax(d.span(), "expected `p(Mode, ...)`"));
        };
        let args = args.iter().map(to_mode).collect::<Result<Vec<_>, _>>()?;
        self.finish_directive()?;
        Ok((name, ModeDecl { args, det, span }))
    }

    // ------------------------------------------------------------ clauses

    fn term(&mut self) -> Result<Term, FrontendError> {
        let (t, span) = self.next();
        match t {
            Tok::Var(v) if v == "_" => {
                self.anon += 1;
                Ok(Term::Var(format!("_{}", self.anon)))
            }
            Tok::Var(v) => Ok(Term::Var(v)),
            Tok::Int(i) => Ok(Term::Int(i)),
            Tok::Float(x) => Ok(Term::Float(x)),
            Tok::Str(s) => Ok(Term::Str(s)),
            Tok::Atom(a, call) => {
                if a == "-" && !call {
                    match self.peek().clone() {
                        Tok::Int(i) => {
                            self.next();
                            return Ok(Term::Int(-i));
                        }
                        Tok::Float(x) => {
                            self.next();
                            return Ok(Term::Float(format!("-{x}")));
                        }
                        _ => {}
                    }
                }
                if !call {
                    return Ok(Term::Fun(a, Vec::new()));
                }
                self.expect(Tok::LParen)?;
                let mut args = vec![self.term()?];
                while self.eat(&Tok::Comma) {
                    args.push(self.term()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Term::Fun(a, args))
            }
            Tok::LBrack => {
                if self.eat(&Tok::RBrack) {
                    return Ok(Term::atom("[]"));
                }
                let mut items = vec![self.term()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.term()?);
                }
                let mut tail = if self.eat(&Tok::Bar) {
                    self.term()?
                } else {
                    Term::atom("[]")
                };
                self.expect(Tok::RBrack)?;
                while let Some(h) = items.pop() {
                    tail = Term::Fun(".".into(), vec![h, tail]);
                }
                Ok(tail)
            }
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            other => Err(syntax(
                span,
                format!("expected a term, found {}", other.describe()),
            )),
        }
    }

    /// `;` binds loosest, then `->`, then `,`.
    fn goal(&mut self) -> Result<Goal<Literal>, FrontendError> {
        let first = self.ite_level()?;
        if !self.eat(&Tok::Semi) {
            return Ok(match first {
                IteOr::IfThen(c, t) => Goal::Ite(Box::new(c), Box::new(t), Box::new(fail_goal())),
                IteOr::Goal(g) => g,
            });
        }
        let rest = self.goal()?;
        Ok(match first {
            IteOr::IfThen(c, t) => Goal::Ite(Box::new(c), Box::new(t), Box::new(rest)),
            IteOr::Goal(g) => {
                let mut branches = vec![g];
                match rest {
                    Goal::Disj(more) => branches.extend(more),
                    other => branches.push(other),
                }
                Goal::Disj(branches)
            }
        })
    }

    fn ite_level(&mut self) -> Result<IteOr, FrontendError> {
        let c = self.conj()?;
        if !self.eat(&Tok::Arrow) {
            return Ok(IteOr::Goal(c));
        }
        let t = match self.ite_level()? {
            IteOr::Goal(g) => g,
            IteOr::IfThen(c2, t2) => Goal::Ite(Box::new(c2), Box::new(t2), Box::new(fail_goal())),
        };
        Ok(IteOr::IfThen(c, t))
    }

    fn conj(&mut self) -> Result<Goal<Literal>, FrontendError> {
        let mut items = vec![self.literal()?];
        while self.eat(&Tok::Comma) {
            items.push(self.literal()?);
        }
        if items.len() == 1 {
            Ok(items.pop().unwrap())
        } else {
            Ok(Goal::Conj(items))
        }
    }

    fn literal(&mut self) -> Result<Goal<Literal>, FrontendError> {
        let span = self.span();
        if self.eat(&Tok::LParen) {
            let g = self.goal()?;
            self.expect(Tok::RParen)?;
            return Ok(g);
        }
        let lhs = self.term()?;
        if self.eat(&Tok::Eq) {
            let rhs = self.term()?;
            return Ok(Goal::Lit(Literal {
                kind: LitKind::Eq(lhs, rhs),
                span,
            }));
        }
        if let Tok::Atom(op, false) = self.peek().clone() {
            if INFIX_GOALS.contains(&op.as_str()) {
                self.next();
                let rhs = self.term()?;
                return Ok(Goal::Lit(Literal {
                    kind: LitKind::Call(op, vec![lhs, rhs]),
                    span,
                }));
            }
        }
        let kind = match lhs {
            Term::Fun(name, args) if args.is_empty() && name == "true" => LitKind::True,
            Term::Fun(name, args) if args.is_empty() && name == "fail" => LitKind::Fail,
            Term::Fun(name, args) => LitKind::Call(name, args),
            other => return Err(syntax(span, format!("`{other}` is not a goal"))),
        };
        Ok(Goal::Lit(Literal { kind, span }))
    }

    fn clause(&mut self) -> Result<(String, Clause), FrontendError> {
        let span = self.span();
        let head = self.term()?;
        let (name, args) = match head {
            Term::Fun(n, args) => (n, args),
            other => return Err(syntax(span, format!("`{other}` is not a clause head"))),
        };
        let body = if self.eat(&Tok::Neck) {
            self.goal()?
        } else {
            Goal::truth()
        };
        self.expect(Tok::End)?;
        Ok((
            name,
            Clause {
                head: args,
                body,
                span,
            },
        ))
    }
}

enum IteOr {
    Goal(Goal<Literal>),
    IfThen(Goal<Literal>, Goal<Literal>),
}

fn fail_goal() -> Goal<Literal> {
    Goal::Lit(Literal {
        kind: LitKind::Fail,
        span: Span::default(),
    })
}

fn flatten_alts(d: DTerm) -> Vec<DTerm> {
    match d {
        DTerm::Alts(v, _) => v.into_iter().flat_map(flatten_alts).collect(),
        other => vec![other],
    }
}

fn to_type(d: &DTerm) -> Result<TypeExpr, FrontendError> {
    match d {
        DTerm::Var(v, _) => Ok(TypeExpr::Param(v.clone())),
        DTerm::App(n, args, _) if n == "pred" => Ok(TypeExpr::Pred(
            args.iter().map(to_type).collect::<Result<_, _>>()?,
        )),
        DTerm::App(n, args, _) => Ok(TypeExpr::App(
            n.clone(),
            args.iter().map(to_type).collect::<Result<_, _>>()?,
        )),
        other => Err(syntax(other.span(), "expected a type expression")),
    }
}

fn to_inst(d: &DTerm) -> Result<InstExpr, FrontendError> {
    match d {
        DTerm::Var(v, _) => Ok(InstExpr::Param(v.clone())),
        DTerm::App(n, args, _) if args.is_empty() && n == "new" => {
            Ok(InstExpr::Base(BaseInst::New))
        }
        DTerm::App(n, args, _) if args.is_empty() && n == "old" => {
            Ok(InstExpr::Base(BaseInst::Old))
        }
        DTerm::App(n, args, _) if args.is_empty() && n == "ground" => {
            Ok(InstExpr::Base(BaseInst::Ground))
        }
        DTerm::App(n, args, _) if n == "pred" => Ok(InstExpr::Pred(
            args.iter().map(to_mode).collect::<Result<_, _>>()?,
            None,
        )),
        DTerm::Is(inner, det, _) => match to_inst(inner)? {
            InstExpr::Pred(ms, _) => Ok(InstExpr::Pred(ms, Some(det.clone()))),
            _ => Err(syntax(d.span(), "`is` only applies to pred instantiations")),
        },
        DTerm::App(n, args, _) => Ok(InstExpr::App(
            n.clone(),
            args.iter().map(to_inst).collect::<Result<_, _>>()?,
        )),
        other => Err(syntax(other.span(), "expected an instantiation expression")),
    }
}

fn to_mode(d: &DTerm) -> Result<ModeExpr, FrontendError> {
    match d {
        DTerm::Arrow(c, s, _) => Ok(ModeExpr::arrow(to_inst(c)?, to_inst(s)?)),
        DTerm::App(n, args, _) => Ok(ModeExpr::Named(
            n.clone(),
            args.iter().map(to_inst).collect::<Result<_, _>>()?,
        )),
        other => Err(syntax(other.span(), "expected a mode")),
    }
}

fn to_alt<T>(
    d: &DTerm,
    conv: &dyn Fn(&DTerm) -> Result<T, FrontendError>,
) -> Result<Alt<T>, FrontendError> {
    match d {
        DTerm::App(n, args, _) => Ok(Alt {
            ctor: n.clone(),
            args: args.iter().map(conv).collect::<Result<_, _>>()?,
        }),
        other => Err(syntax(other.span(), "expected a constructor alternative")),
    }
}

fn inst_has_new(i: &InstExpr) -> bool {
    match i {
        InstExpr::Base(b) => *b == BaseInst::New,
        InstExpr::Param(_) | InstExpr::Pred(..) => false,
        InstExpr::App(_, args) => args.iter().any(inst_has_new),
    }
}

/// Parse a whole source file. Clauses are attached to their `:- pred`
/// declarations; `?-` goals become query entries after the predicates.
pub fn parse_program(src: &str) -> Result<Program, FrontendError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
        anon: 0,
    };
    let mut prog = Program::default();
    let mut clauses: BTreeMap<(String, usize), Vec<Clause>> = BTreeMap::new();
    let mut clause_order: Vec<(String, usize, Span)> = Vec::new();
    let mut modes: Vec<(String, ModeDecl)> = Vec::new();
    let mut queries: Vec<(Goal<Literal>, Span)> = Vec::new();

    loop {
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Neck => {
                p.next();
                let (kw, span) = p.next();
                let kw = match kw {
                    Tok::Atom(a, false) => a,
                    other => {
                        return Err(syntax(
                            span,
                            format!("unknown directive {}", other.describe()),
                        ))
                    }
                };
                match kw.as_str() {
                    "typedef" => {
                        let t = p.typedef()?;
                        if prog.typedef(&t.name, t.params.len()).is_some() {
                            return Err(FrontendError::Duplicate {
                                span: t.span,
                                what: format!("typedef {}/{}", t.name, t.params.len()),
                            });
                        }
                        check_typedef(&t)?;
                        prog.typedefs.push(t);
                    }
                    "instdef" => {
                        let i = p.instdef()?;
                        if prog
                            .instdefs
                            .iter()
                            .any(|d| d.name == i.name && d.params.len() == i.params.len())
                        {
                            return Err(FrontendError::Duplicate {
                                span: i.span,
                                what: format!("instdef {}/{}", i.name, i.params.len()),
                            });
                        }
                        check_instdef(&i)?;
                        prog.instdefs.push(i);
                    }
                    "modedef" => {
                        let m = p.modedef()?;
                        if prog
                            .modedefs
                            .iter()
                            .any(|d| d.name == m.name && d.params.len() == m.params.len())
                        {
                            return Err(FrontendError::Duplicate {
                                span: m.span,
                                what: format!("modedef {}/{}", m.name, m.params.len()),
                            });
                        }
                        prog.modedefs.push(m);
                    }
                    "pred" => {
                        let (name, arg_types, span) = p.pred_decl()?;
                        if prog.pred_index(&name, arg_types.len()).is_some() {
                            return Err(FrontendError::Duplicate {
                                span,
                                what: format!("pred {}/{}", name, arg_types.len()),
                            });
                        }
                        prog.preds.push(PredDef {
                            name,
                            arg_types,
                            modes: Vec::new(),
                            clauses: Vec::new(),
                            kind: PredKind::Declared,
                            span,
                            typed: None,
                            temps: BTreeSet::new(),
                        });
                    }
                    "mode" => modes.push(p.mode_decl()?),
                    other => return Err(syntax(span, format!("unknown directive `{other}`"))),
                }
            }
            Tok::Query => {
                let span = p.next().1;
                let g = p.goal()?;
                p.expect(Tok::End)?;
                queries.push((g, span));
            }
            _ => {
                let (name, c) = p.clause()?;
                let key = (name.clone(), c.head.len());
                if !clauses.contains_key(&key) {
                    clause_order.push((name, c.head.len(), c.span));
                }
                clauses.entry(key).or_default().push(c);
            }
        }
    }

    for (name, decl) in modes {
        let idx = prog.pred_index(&name, decl.args.len()).ok_or_else(|| {
            let same_name = prog.preds.iter().any(|p| p.name == name);
            FrontendError::Undefined {
                span: decl.span,
                what: if same_name {
                    format!(
                        "mode arity {} does not match any pred {name}",
                        decl.args.len()
                    )
                } else {
                    format!("mode for undeclared predicate {name}/{}", decl.args.len())
                },
            }
        })?;
        prog.preds[idx].modes.push(decl);
    }
    for (name, arity, span) in clause_order {
        let idx = prog
            .pred_index(&name, arity)
            .ok_or_else(|| FrontendError::Undefined {
                span,
                what: format!("pred declaration for clauses of {name}/{arity}"),
            })?;
        prog.preds[idx].clauses = clauses.remove(&(name, arity)).unwrap_or_default();
    }
    for (k, (g, span)) in queries.into_iter().enumerate() {
        prog.preds.push(PredDef {
            name: format!("query{}", k + 1),
            arg_types: Vec::new(),
            modes: vec![ModeDecl {
                args: Vec::new(),
                det: None,
                span,
            }],
            clauses: vec![Clause {
                head: Vec::new(),
                body: g,
                span,
            }],
            kind: PredKind::Query,
            span,
            typed: None,
            temps: BTreeSet::new(),
        });
    }
    Ok(prog)
}

fn check_typedef(t: &TypeDef) -> Result<(), FrontendError> {
    let params: BTreeSet<String> = t.params.iter().cloned().collect();
    let mut used = BTreeSet::new();
    match &t.body {
        TypeBody::Alts(alts) => {
            let mut seen = BTreeSet::new();
            for a in alts {
                if !seen.insert((a.ctor.clone(), a.args.len())) {
                    return Err(FrontendError::Duplicate {
                        span: t.span,
                        what: format!(
                            "constructor {}/{} in typedef {}",
                            a.ctor,
                            a.args.len(),
                            t.name
                        ),
                    });
                }
                a.args.iter().for_each(|x| x.params(&mut used));
            }
        }
        TypeBody::Equiv(e) => e.params(&mut used),
        TypeBody::Abstract => {}
    }
    if let Some(v) = used.difference(&params).next() {
        return Err(FrontendError::Definition {
            span: t.span,
            msg: format!(
                "parameter {v} is not bound by the head of typedef {}",
                t.name
            ),
        });
    }
    Ok(())
}

fn check_instdef(d: &InstDef) -> Result<(), FrontendError> {
    let params: BTreeSet<String> = d.params.iter().cloned().collect();
    let mut used = BTreeSet::new();
    match &d.body {
        InstBody::Alts(alts) => {
            let mut seen = BTreeSet::new();
            for a in alts {
                if a.ctor == "new" || a.args.iter().any(inst_has_new) {
                    return Err(FrontendError::NewNested {
                        span: d.span,
                        name: d.name.clone(),
                    });
                }
                if !seen.insert((a.ctor.clone(), a.args.len())) {
                    return Err(FrontendError::Duplicate {
                        span: d.span,
                        what: format!(
                            "constructor {}/{} in instdef {}",
                            a.ctor,
                            a.args.len(),
                            d.name
                        ),
                    });
                }
                a.args.iter().for_each(|x| x.params(&mut used));
            }
        }
        InstBody::Equiv(e) => {
            if inst_has_new(e) && !e.is_new() {
                return Err(FrontendError::NewNested {
                    span: d.span,
                    name: d.name.clone(),
                });
            }
            e.params(&mut used);
        }
    }
    if let Some(v) = used.difference(&params).next() {
        return Err(FrontendError::Definition {
            span: d.span,
            msg: format!(
                "parameter {v} is not bound by the head of instdef {}",
                d.name
            ),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goal_precedence() {
        let p = parse_program(
            ":- pred p.\n:- pred a.\n:- pred b.\n:- pred c.\n:- pred d.\np :- a, b -> c ; d.\n",
        )
        .unwrap();
        let body = &p.preds[0].clauses[0].body;
        match body {
            Goal::Ite(c, t, e) => {
                assert!(matches!(**c, Goal::Conj(ref v) if v.len() == 2));
                assert!(matches!(**t, Goal::Lit(_)));
                assert!(matches!(**e, Goal::Lit(_)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn list_sugar_in_terms() {
        let p = parse_program(":- pred p(list(int)).\np([1, 2|T]).\n").unwrap();
        assert_eq!(p.preds[0].clauses[0].head[0].to_string(), "[1|[2|T]]");
    }

    #[test]
    fn mode_with_is_and_arrows() {
        let p = parse_program(
            ":- pred p(list(habc), habc).\n:- mode p(list(old) -> ground, in) is semidet.\n",
        )
        .unwrap();
        let m = &p.preds[0].modes[0];
        assert_eq!(m.det.as_deref(), Some("semidet"));
        assert_eq!(m.args[0].to_string(), "list(old)->ground");
        assert_eq!(m.args[1].to_string(), "in");
    }

    #[test]
    fn typedef_forms() {
        let p = parse_program(
            ":- typedef cint deriving solver.\n\
             :- typedef hlist(T) -> [] ; [T | hlist(T)] deriving solver.\n\
             :- typedef vector = list(int).\n",
        )
        .unwrap();
        assert_eq!(p.typedefs[0].body, TypeBody::Abstract);
        assert!(p.typedefs[1].is_solver);
        match &p.typedefs[1].body {
            TypeBody::Alts(a) => {
                assert_eq!(a[1].ctor, ".");
                assert_eq!(a[1].args.len(), 2);
            }
            _ => panic!(),
        }
        assert!(matches!(p.typedefs[2].body, TypeBody::Equiv(_)));
    }

    #[test]
    fn errors_carry_position() {
        let e = parse_program(":- pred p.\np :- q(.\n").unwrap_err();
        assert_eq!(e.span(), Span { line: 2, col: 8 });
    }
}
