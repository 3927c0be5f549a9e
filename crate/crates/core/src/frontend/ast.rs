//! Surface and normalized program representation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeExpr {
    Param(String),
    App(String, Vec<TypeExpr>),
    Pred(Vec<TypeExpr>),
}

impl TypeExpr {
    pub fn atom(name: &str) -> TypeExpr {
        TypeExpr::App(name.to_string(), Vec::new())
    }

    pub fn params(&self, out: &mut BTreeSet<String>) {
        match self {
            TypeExpr::Param(v) => {
                out.insert(v.clone());
            }
            TypeExpr::App(_, args) | TypeExpr::Pred(args) => {
                args.iter().for_each(|a| a.params(out));
            }
        }
    }

    pub fn has_params(&self) -> bool {
        let mut s = BTreeSet::new();
        self.params(&mut s);
        !s.is_empty()
    }

    pub fn subst(&self, theta: &BTreeMap<String, TypeExpr>) -> TypeExpr {
        match self {
            TypeExpr::Param(v) => theta.get(v).cloned().unwrap_or_else(|| self.clone()),
            TypeExpr::App(n, args) => {
                TypeExpr::App(n.clone(), args.iter().map(|a| a.subst(theta)).collect())
            }
            TypeExpr::Pred(args) => TypeExpr::Pred(args.iter().map(|a| a.subst(theta)).collect()),
        }
    }
}

fn comma_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Param(v) => f.write_str(v),
            TypeExpr::App(n, args) if args.is_empty() => f.write_str(n),
            TypeExpr::App(n, args) => {
                write!(f, "{n}(")?;
                comma_list(f, args)?;
                f.write_str(")")
            }
            TypeExpr::Pred(args) => {
                f.write_str("pred(")?;
                comma_list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseInst {
    New,
    Old,
    Ground,
}

impl BaseInst {
    pub fn name(self) -> &'static str {
        match self {
            BaseInst::New => "new",
            BaseInst::Old => "old",
            BaseInst::Ground => "ground",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InstExpr {
    Base(BaseInst),
    Param(String),
    App(String, Vec<InstExpr>),
    /// `pred(m1, ..., mn)` with an optional determinism token.
    Pred(Vec<ModeExpr>, Option<String>),
}

impl InstExpr {
    pub fn is_new(&self) -> bool {
        matches!(self, InstExpr::Base(BaseInst::New))
    }

    pub fn subst(&self, theta: &BTreeMap<String, InstExpr>) -> InstExpr {
        match self {
            InstExpr::Param(v) => theta.get(v).cloned().unwrap_or_else(|| self.clone()),
            InstExpr::Base(_) => self.clone(),
            InstExpr::App(n, args) => {
                InstExpr::App(n.clone(), args.iter().map(|a| a.subst(theta)).collect())
            }
            InstExpr::Pred(ms, det) => {
                InstExpr::Pred(ms.iter().map(|m| m.subst(theta)).collect(), det.clone())
            }
        }
    }

    /// Parameters occurring anywhere inside.
    pub fn params(&self, out: &mut BTreeSet<String>) {
        match self {
            InstExpr::Param(v) => {
                out.insert(v.clone());
            }
            InstExpr::Base(_) => {}
            InstExpr::App(_, args) => args.iter().for_each(|a| a.params(out)),
            InstExpr::Pred(ms, _) => ms.iter().for_each(|m| m.params(out)),
        }
    }
}

impl fmt::Display for InstExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstExpr::Base(b) => f.write_str(b.name()),
            InstExpr::Param(v) => f.write_str(v),
            InstExpr::App(n, args) if args.is_empty() => f.write_str(n),
            InstExpr::App(n, args) => {
                write!(f, "{n}(")?;
                comma_list(f, args)?;
                f.write_str(")")
            }
            InstExpr::Pred(ms, _) => {
                f.write_str("pred(")?;
                comma_list(f, ms)?;
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModeExpr {
    Arrow(Box<InstExpr>, Box<InstExpr>),
    /// A use of a mode definition such as `in` or `out(nelist(ground))`.
    Named(String, Vec<InstExpr>),
}

impl ModeExpr {
    pub fn arrow(call: InstExpr, success: InstExpr) -> ModeExpr {
        ModeExpr::Arrow(Box::new(call), Box::new(success))
    }

    pub fn as_pair(&self) -> Option<(&InstExpr, &InstExpr)> {
        match self {
            ModeExpr::Arrow(c, s) => Some((c, s)),
            ModeExpr::Named(..) => None,
        }
    }

    pub fn subst(&self, theta: &BTreeMap<String, InstExpr>) -> ModeExpr {
        match self {
            ModeExpr::Arrow(c, s) => ModeExpr::arrow(c.subst(theta), s.subst(theta)),
            ModeExpr::Named(n, args) => {
                ModeExpr::Named(n.clone(), args.iter().map(|a| a.subst(theta)).collect())
            }
        }
    }

    pub fn params(&self, out: &mut BTreeSet<String>) {
        match self {
            ModeExpr::Arrow(c, s) => {
                c.params(out);
                s.params(out);
            }
            ModeExpr::Named(_, args) => args.iter().for_each(|a| a.params(out)),
        }
    }
}

impl fmt::Display for ModeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeExpr::Arrow(c, s) => write!(f, "{c}->{s}"),
            ModeExpr::Named(n, args) if args.is_empty() => f.write_str(n),
            ModeExpr::Named(n, args) => {
                write!(f, "{n}(")?;
                comma_list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

/// One alternative `f(a1, ..., an)` of a type or instantiation definition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alt<T> {
    pub ctor: String,
    pub args: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeBody {
    Alts(Vec<Alt<TypeExpr>>),
    Equiv(TypeExpr),
    /// `typedef cint deriving solver.`: a solver type whose values are opaque.
    Abstract,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: TypeBody,
    pub is_solver: bool,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstBody {
    Alts(Vec<Alt<InstExpr>>),
    Equiv(InstExpr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: InstBody,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModeBody {
    Arrow(InstExpr, InstExpr),
    Equiv(ModeExpr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: ModeBody,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeDecl {
    pub args: Vec<ModeExpr>,
    /// Stored, never checked.
    pub det: Option<String>,
    pub span: Span,
}

impl ModeDecl {
    /// Per-argument (call, success) pairs. Only valid after expansion.
    pub fn pairs(&self) -> Vec<(InstExpr, InstExpr)> {
        self.args
            .iter()
            .map(|m| {
                let (c, s) = m.as_pair().expect("mode declaration not expanded");
                (c.clone(), s.clone())
            })
            .collect()
    }
}

impl fmt::Display for ModeDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        comma_list(f, &self.args)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(String),
    Fun(String, Vec<Term>),
    Int(i64),
    Float(String),
    Str(String),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Fun(name.to_string(), Vec::new())
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => out.push(v.clone()),
            Term::Fun(_, args) => args.iter().for_each(|a| a.vars(out)),
            _ => {}
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Int(i) => write!(f, "{i}"),
            Term::Float(x) => f.write_str(x),
            Term::Str(s) => write!(f, "{s:?}"),
            Term::Fun(n, args) if n == "." && args.len() == 2 => {
                write!(f, "[{}|{}]", args[0], args[1])
            }
            Term::Fun(n, args) if args.is_empty() => f.write_str(n),
            Term::Fun(n, args) => {
                write!(f, "{n}(")?;
                comma_list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LitKind {
    Eq(Term, Term),
    Call(String, Vec<Term>),
    True,
    Fail,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Literal {
    pub kind: LitKind,
    pub span: Span,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LitKind::Eq(a, b) => write!(f, "{a} = {b}"),
            LitKind::Call(p, args) => write!(f, "{}", Term::Fun(p.clone(), args.clone())),
            LitKind::True => f.write_str("true"),
            LitKind::Fail => f.write_str("fail"),
        }
    }
}

/// Goal trees, shared by the surface and typed forms.
#[derive(Clone, Debug, PartialEq)]
pub enum Goal<L> {
    Lit(L),
    Conj(Vec<Goal<L>>),
    Disj(Vec<Goal<L>>),
    Ite(Box<Goal<L>>, Box<Goal<L>>, Box<Goal<L>>),
}

impl<L> Goal<L> {
    pub fn truth() -> Goal<L> {
        Goal::Conj(Vec::new())
    }

    pub fn literals(&self) -> Vec<&L> {
        let mut out = Vec::new();
        self.walk(&mut |l| out.push(l));
        out
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a L)) {
        match self {
            Goal::Lit(l) => f(l),
            Goal::Conj(gs) | Goal::Disj(gs) => gs.iter().for_each(|g| g.walk(f)),
            Goal::Ite(c, t, e) => {
                c.walk(f);
                t.walk(f);
                e.walk(f);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub head: Vec<Term>,
    pub body: Goal<Literal>,
    pub span: Span,
}

/// A typed first-order or higher-order literal after normalization.
#[derive(Clone, Debug, PartialEq)]
pub enum TLitKind {
    /// `a = b`
    EqVar(String, String),
    /// `x = f(args)` with distinct variable arguments.
    EqFun(String, String, Vec<String>),
    /// `x = c` for a numeric or string constant.
    EqConst(String, Const),
    Call {
        pred: usize,
        args: Vec<String>,
        theta: BTreeMap<String, TypeExpr>,
    },
    /// `call(h, args)`
    HoCall(String, Vec<String>),
    /// `h = p(args)` where `p` names a predicate.
    HoConstruct {
        h: String,
        pred: usize,
        args: Vec<String>,
        theta: BTreeMap<String, TypeExpr>,
    },
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Const {
    Int(i64),
    Float(String),
    Str(String),
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const::Int(i) => write!(f, "{i}"),
            Const::Float(x) => f.write_str(x),
            Const::Str(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TLiteral {
    /// Position in the clause, used to check that scheduling keeps every literal.
    pub id: usize,
    pub kind: TLitKind,
    pub span: Span,
}

impl TLiteral {
    pub fn vars(&self) -> Vec<&str> {
        match &self.kind {
            TLitKind::EqVar(a, b) => vec![a, b],
            TLitKind::EqFun(x, _, args) => {
                std::iter::once(x).chain(args).map(|s| s.as_str()).collect()
            }
            TLitKind::EqConst(x, _) => vec![x],
            TLitKind::Call { args, .. } => args.iter().map(|s| s.as_str()).collect(),
            TLitKind::HoCall(h, args) => {
                std::iter::once(h).chain(args).map(|s| s.as_str()).collect()
            }
            TLitKind::HoConstruct { h, args, .. } => {
                std::iter::once(h).chain(args).map(|s| s.as_str()).collect()
            }
            TLitKind::Fail => vec![],
        }
    }
}

/// The single normalized clause of a predicate, with its variable types.
#[derive(Clone, Debug, PartialEq)]
pub struct TypedClause {
    pub head: Vec<String>,
    pub body: Goal<TLiteral>,
    pub var_types: BTreeMap<String, TypeExpr>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredKind {
    Declared,
    /// `?- Goal.` at top level; checked once with all variables starting new.
    Query,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredDef {
    pub name: String,
    pub arg_types: Vec<TypeExpr>,
    pub modes: Vec<ModeDecl>,
    pub clauses: Vec<Clause>,
    pub kind: PredKind,
    pub span: Span,
    pub typed: Option<TypedClause>,
    /// Variables introduced by normalization rather than written in the source.
    pub temps: BTreeSet<String>,
}

impl PredDef {
    pub fn arity(&self) -> usize {
        self.arg_types.len()
    }

    pub fn key(&self) -> String {
        format!("{}/{}", self.name, self.arity())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub typedefs: Vec<TypeDef>,
    pub instdefs: Vec<InstDef>,
    pub modedefs: Vec<ModeDef>,
    pub preds: Vec<PredDef>,
}

impl Program {
    pub fn pred_index(&self, name: &str, arity: usize) -> Option<usize> {
        self.preds
            .iter()
            .position(|p| p.kind == PredKind::Declared && p.name == name && p.arity() == arity)
    }

    pub fn typedef(&self, name: &str, arity: usize) -> Option<&TypeDef> {
        self.typedefs
            .iter()
            .find(|t| t.name == name && t.params.len() == arity)
    }
}
