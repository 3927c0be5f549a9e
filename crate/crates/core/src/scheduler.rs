//! The mode checker: schedules literals against ti-states, picks procedures,
//! inserts initializations and checks each mode declaration.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::diag::{Code, Diagnostic};
use crate::frontend::{
    BaseInst, Const, Goal, InstExpr, PredDef, PredKind, Program, Span, TLitKind, TLiteral, TypeExpr,
};
use crate::grammar::{self, Ctor, Nt, Prod, RuleMap, TiGrammar};
use crate::render;
use crate::tigrammar::{state_disj, Defs, TiError, TiState};

/// Largest candidate set the initialization phase enumerates subsets of.
const INIT_CANDIDATE_CAP: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    /// Insert `init(v)` calls when a conjunction is otherwise stuck.
    pub init: bool,
    /// Recover parameter instantiations at polymorphic calls.
    pub poly: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            init: true,
            poly: true,
        }
    }
}

/// Where an emitted literal came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    /// The literal with this id in the normalized clause.
    Source(usize),
    /// Equation added when a deconstruct had bound arguments.
    Split,
    /// Equation added after a call used in an implied mode.
    Implied,
    Init,
    /// `fail` standing in for a goal that can only fail.
    Fail,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SLitKind {
    Copy {
        dst: String,
        src: String,
    },
    Unify(String, String),
    Construct {
        x: String,
        ctor: String,
        args: Vec<String>,
    },
    Deconstruct {
        x: String,
        ctor: String,
        args: Vec<String>,
    },
    ConstConstruct(String, Const),
    ConstTest(String, Const),
    Call {
        pred: usize,
        mode: usize,
        args: Vec<String>,
        theta: BTreeMap<String, TypeExpr>,
    },
    HoCall {
        h: String,
        args: Vec<String>,
    },
    HoConstruct {
        h: String,
        pred: usize,
        mode: usize,
        args: Vec<String>,
        theta: BTreeMap<String, TypeExpr>,
    },
    Init(String),
    Fail,
}

impl SLitKind {
    pub fn vars(&self) -> Vec<&str> {
        match self {
            SLitKind::Copy { dst, src } => vec![dst, src],
            SLitKind::Unify(a, b) => vec![a, b],
            SLitKind::Construct { x, args, .. } | SLitKind::Deconstruct { x, args, .. } => {
                std::iter::once(x).chain(args).map(|s| s.as_str()).collect()
            }
            SLitKind::ConstConstruct(x, _) | SLitKind::ConstTest(x, _) => vec![x],
            SLitKind::Call { args, .. } => args.iter().map(|s| s.as_str()).collect(),
            SLitKind::HoCall { h, args } | SLitKind::HoConstruct { h, args, .. } => {
                std::iter::once(h).chain(args).map(|s| s.as_str()).collect()
            }
            SLitKind::Init(v) => vec![v],
            SLitKind::Fail => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SLit {
    pub kind: SLitKind,
    pub origin: Origin,
    pub span: Span,
    /// Deconstruct of a term that may still be an unbound solver variable.
    pub runtime_risk: bool,
}

/// A scheduled goal tree.
#[derive(Clone, Debug, PartialEq)]
pub enum SGoal {
    Lit(SLit),
    Conj(Vec<SGoal>),
    Disj(Vec<SGoal>),
    Ite(Box<SGoal>, Box<SGoal>, Box<SGoal>),
}

impl SGoal {
    pub fn literals(&self) -> Vec<&SLit> {
        let mut out = Vec::new();
        self.walk(&mut |l| out.push(l));
        out
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a SLit)) {
        match self {
            SGoal::Lit(l) => f(l),
            SGoal::Conj(gs) | SGoal::Disj(gs) => gs.iter().for_each(|g| g.walk(f)),
            SGoal::Ite(c, t, e) => {
                c.walk(f);
                t.walk(f);
                e.walk(f);
            }
        }
    }

    fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |l| out.extend(l.kind.vars().into_iter().map(String::from)));
        out
    }
}

/// Argument grammars seen by one scheduled call.
#[derive(Clone, Debug)]
pub struct CallTrace {
    /// `name/arity` of the callee, or `call/n` for higher-order calls.
    pub callee: String,
    pub args: Vec<(String, TiGrammar)>,
}

/// The code emitted for one (predicate, mode declaration) pair.
#[derive(Clone, Debug)]
pub struct Procedure {
    pub pred: usize,
    /// 0-based index into the predicate's mode declarations.
    pub mode: usize,
    pub name: String,
    pub head: Vec<String>,
    pub body: SGoal,
    pub var_types: BTreeMap<String, TypeExpr>,
    pub final_state: TiState,
    pub trace: Vec<CallTrace>,
}

/// Why a goal could not be scheduled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Blocked {
    Literals(Vec<(String, Span)>),
    TopJoin { var: String, span: Span },
    GPredCall { var: String, span: Span },
}

#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub procedures: Vec<Procedure>,
    pub diagnostics: Vec<Diagnostic>,
}

impl CheckReport {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.is_error())
    }

    pub fn has_warnings(&self) -> bool {
        self.diagnostics.iter().any(|d| !d.is_error())
    }

    pub fn count(&self, code: Code) -> usize {
        self.diagnostics.iter().filter(|d| d.code == code).count()
    }

    pub fn procedure(&self, name: &str) -> Option<&Procedure> {
        self.procedures.iter().find(|p| p.name == name)
    }
}

/// Check every mode declaration of every predicate with clauses, and every query.
pub fn check_program(prog: &Program, opts: CheckOptions) -> Result<CheckReport, TiError> {
    let defs = Defs::new(prog)?;
    Ok(check_with_defs(prog, &defs, opts))
}

pub fn check_with_defs(prog: &Program, defs: &Defs, opts: CheckOptions) -> CheckReport {
    let mut report = CheckReport::default();
    lint_dropped_ctors(prog, defs, &mut report.diagnostics);
    for (pi, pd) in prog.preds.iter().enumerate() {
        if pd.typed.is_none() {
            continue;
        }
        let n_modes = match pd.kind {
            PredKind::Query => 1,
            PredKind::Declared => pd.modes.len(),
        };
        for mi in 0..n_modes {
            match check_mode(prog, defs, opts, pi, mi) {
                Ok((proc, warnings)) => {
                    report.diagnostics.extend(warnings);
                    if let Err(msg) = verify(prog, defs, opts, &proc) {
                        report.diagnostics.push(
                            Diagnostic::new(
                                Code::I001,
                                pd.span,
                                format!(
                                    "emitted procedure {} fails its re-check: {msg}",
                                    proc.name
                                ),
                            )
                            .in_mode(&pd.key(), mi + 1),
                        );
                    }
                    report.procedures.push(proc);
                }
                Err(errs) => report.diagnostics.extend(errs),
            }
        }
    }
    report.diagnostics.sort_by(|a, b| {
        (a.span, a.code, &a.pred, a.mode, &a.message)
            .cmp(&(b.span, b.code, &b.pred, b.mode, &b.message))
    });
    report.diagnostics.dedup();
    report
}

fn lint_dropped_ctors(prog: &Program, defs: &Defs, out: &mut Vec<Diagnostic>) {
    for pd in &prog.preds {
        if pd.kind != PredKind::Declared {
            continue;
        }
        for md in &pd.modes {
            for (t, (c, s)) in pd.arg_types.iter().zip(md.pairs()) {
                for i in [c, s] {
                    let Ok((_, dropped)) = defs.rt_with_lints(t, &i) else {
                        continue;
                    };
                    for d in dropped {
                        let mut diag = Diagnostic::new(
                            Code::W002,
                            md.span,
                            format!(
                                "instantiation {} names {}/{}, which type {} does not have; it is ignored",
                                d.inst, d.ctor, d.arity, d.ty
                            ),
                        );
                        diag.pred = Some(pd.key());
                        out.push(diag);
                    }
                }
            }
        }
    }
}

/// Procedure name: `<pred>_mode<k>`, or the query name.
pub fn procedure_name(prog: &Program, pred: usize, mode: usize) -> String {
    let pd = &prog.preds[pred];
    match pd.kind {
        PredKind::Query => pd.name.clone(),
        PredKind::Declared => format!("{}_mode{}", pd.name, mode + 1),
    }
}

/// Check one mode declaration and emit its procedure, with any warnings.
pub fn check_mode(
    prog: &Program,
    defs: &Defs,
    opts: CheckOptions,
    pred: usize,
    mode: usize,
) -> Result<(Procedure, Vec<Diagnostic>), Vec<Diagnostic>> {
    let pd = &prog.preds[pred];
    let key = pd.key();
    let tc = pd.typed.as_ref().expect("predicate without clauses");
    let mut s = Sched::new(prog, defs, opts, tc.var_types.clone());
    let (mut state, expected, outside) =
        entry_state(&s, pd, mode).map_err(|d| vec![d.in_mode(&key, mode + 1)])?;
    for v in tc.var_types.keys() {
        if state.try_get(v).is_none() {
            state.set(v, TiGrammar::new_grammar());
        }
    }
    let (body, fin) = s
        .goal(&tc.body, state, &outside, true)
        .map_err(|b| vec![blocked_diag(b).in_mode(&key, mode + 1)])?;
    let mut errs = Vec::new();
    for ((v, want), (_, succ)) in tc.head.iter().zip(&expected).zip(declared_pairs(pd, mode)) {
        if !grammar::lt(fin.get(v), want) {
            let span = pd.modes.get(mode).map(|m| m.span).unwrap_or(pd.span);
            errs.push(
                Diagnostic::new(
                    Code::E002,
                    span,
                    format!("{v} does not reach its declared success instantiation {succ}"),
                )
                .in_mode(&key, mode + 1),
            );
        }
    }
    if !errs.is_empty() {
        return Err(errs);
    }
    let warnings = s
        .warnings
        .drain(..)
        .map(|d| d.in_mode(&key, mode + 1))
        .collect();
    Ok((
        Procedure {
            pred,
            mode,
            name: procedure_name(prog, pred, mode),
            head: tc.head.clone(),
            body,
            var_types: s.var_types,
            final_state: fin,
            trace: s.trace,
        },
        warnings,
    ))
}

fn declared_pairs(pd: &PredDef, mode: usize) -> Vec<(InstExpr, InstExpr)> {
    match pd.kind {
        PredKind::Query => Vec::new(),
        PredKind::Declared => pd.modes[mode].pairs(),
    }
}

type Entry = (TiState, Vec<TiGrammar>, BTreeSet<String>);

fn entry_state(s: &Sched, pd: &PredDef, mode: usize) -> Result<Entry, Diagnostic> {
    let tc = pd.typed.as_ref().expect("typed clause");
    let mut state = TiState::new();
    let mut expected = Vec::new();
    for (v, (c, succ)) in tc.head.iter().zip(declared_pairs(pd, mode)) {
        let t = &tc.var_types[v];
        let cg = s.rt(t, &c);
        let sg = s.rt(t, &succ);
        if cg.is_top() || sg.is_top() {
            let span = pd.modes.get(mode).map(|m| m.span).unwrap_or(pd.span);
            return Err(Diagnostic::new(
                Code::E004,
                span,
                format!("mode {c} -> {succ} does not describe values of type {t} ({v})"),
            ));
        }
        state.set(v, cg);
        expected.push(sg);
    }
    let outside = match pd.kind {
        PredKind::Query => tc.var_types.keys().cloned().collect(),
        PredKind::Declared => tc.head.iter().cloned().collect(),
    };
    Ok((state, expected, outside))
}

fn blocked_diag(b: Blocked) -> Diagnostic {
    match b {
        Blocked::Literals(lits) => {
            let span = lits.first().map(|l| l.1).unwrap_or_default();
            let text: Vec<String> = lits.into_iter().map(|l| l.0).collect();
            Diagnostic::new(
                Code::E001,
                span,
                format!("cannot schedule {}", text.join(", ")),
            )
        }
        Blocked::TopJoin { var, span } => Diagnostic::new(
            Code::E003,
            span,
            format!("branches disagree on whether {var} is bound"),
        ),
        Blocked::GPredCall { var, span } => Diagnostic::new(
            Code::E001,
            span,
            format!("cannot call {var}: the modes of this higher-order value are not known"),
        ),
    }
}

// ------------------------------------------------------------------ scheduler

/// A pending conjunct.
#[derive(Clone)]
enum Work<'g> {
    Lit(TLiteral, Origin),
    Goal(&'g Goal<TLiteral>),
}

impl Work<'_> {
    fn vars(&self) -> BTreeSet<String> {
        match self {
            Work::Lit(l, _) => l.vars().into_iter().map(String::from).collect(),
            Work::Goal(g) => goal_vars(g),
        }
    }
}

struct Done<'g> {
    emitted: Vec<SGoal>,
    state: TiState,
    trailing: Vec<Work<'g>>,
}

#[derive(Clone, Copy)]
struct Snapshot {
    next_var: usize,
    next_nt: u32,
    warnings: usize,
    trace: usize,
}

struct Candidate {
    mode: usize,
    implied: Vec<bool>,
    call: Vec<TiGrammar>,
    success: Vec<TiGrammar>,
}

struct Sched<'a> {
    prog: &'a Program,
    defs: &'a Defs,
    opts: CheckOptions,
    var_types: BTreeMap<String, TypeExpr>,
    next_var: usize,
    next_nt: u32,
    warnings: Vec<Diagnostic>,
    trace: Vec<CallTrace>,
}

fn goal_vars(g: &Goal<TLiteral>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    g.walk(&mut |l| out.extend(l.vars().into_iter().map(String::from)));
    out
}

fn goal_span(g: &Goal<TLiteral>) -> Span {
    let mut span = None;
    g.walk(&mut |l| {
        span.get_or_insert(l.span);
    });
    span.unwrap_or_default()
}

fn restrict(s: &TiState, domain: &TiState) -> TiState {
    let mut out = TiState::new();
    for (v, _) in domain.iter() {
        out.set(v, s.get(v).clone());
    }
    out
}

fn pointwise_le(a: &[TiGrammar], b: &[TiGrammar]) -> bool {
    a.iter().zip(b).all(|(x, y)| grammar::lt(x, y))
}

/// Keep the candidates whose key vector is minimal, then break ties on the
/// next key, then by declaration order.
fn select(cands: Vec<Candidate>) -> Option<Candidate> {
    fn minimal(cs: Vec<Candidate>, key: fn(&Candidate) -> &[TiGrammar]) -> Vec<Candidate> {
        let keep: Vec<bool> = cs
            .iter()
            .map(|c| {
                !cs.iter()
                    .any(|d| pointwise_le(key(d), key(c)) && !pointwise_le(key(c), key(d)))
            })
            .collect();
        cs.into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(c, _)| c)
            .collect()
    }
    let cs = minimal(cands, |c| &c.success);
    let cs = minimal(cs, |c| &c.call);
    cs.into_iter().min_by_key(|c| c.mode)
}

fn param_leaf(prods: &[Prod]) -> Option<(String, bool)> {
    match prods {
        [p] => match &p.ctor {
            Ctor::Ground(v) => Some((v.to_string(), false)),
            _ => None,
        },
        [p, q] => match (&p.ctor, &q.ctor) {
            (Ctor::Ground(v), Ctor::Old(w)) if v == w => Some((v.to_string(), true)),
            _ => None,
        },
        _ => None,
    }
}

/// Merge the rules of `g` into `map` and return its root.
fn merge(map: &mut RuleMap, g: &TiGrammar) -> Option<Nt> {
    let rules = g.rules()?;
    for (k, ps) in rules {
        map.entry(k.clone()).or_insert_with(|| ps.clone());
    }
    g.root().cloned()
}

/// Triples `(old?, parameter, grammar)` pairing the parameter leaves of the
/// declared grammar `r1` with the matching parts of the actual grammar `r2`.
pub fn collect_set(r1: &TiGrammar, r2: &TiGrammar) -> Vec<(bool, String, TiGrammar)> {
    let mut out = Vec::new();
    let (Some(x1), Some(x2)) = (r1.root(), r2.root()) else {
        return out;
    };
    let mut seen = HashSet::new();
    collect_rec(x1, r1, x2, r2, &mut seen, &mut out);
    out
}

fn collect_rec(
    x1: &Nt,
    r1: &TiGrammar,
    x2: &Nt,
    r2: &TiGrammar,
    seen: &mut HashSet<(Nt, Nt)>,
    out: &mut Vec<(bool, String, TiGrammar)>,
) {
    if x1.is_new() || x2.is_new() || !seen.insert((x1.clone(), x2.clone())) {
        return;
    }
    let p1 = r1.productions(x1);
    if let Some((v, old)) = param_leaf(p1) {
        if let Ok(g) = r2.subg(x2) {
            out.push((old, v, g));
        }
        return;
    }
    let p2 = r2.productions(x2);
    for a in p1 {
        if let Some(b) = p2.iter().find(|b| b.ctor == a.ctor) {
            for (c1, c2) in a.args.iter().zip(&b.args) {
                collect_rec(c1, r1, c2, r2, seen, out);
            }
        }
    }
}

impl<'a> Sched<'a> {
    fn new(
        prog: &'a Program,
        defs: &'a Defs,
        opts: CheckOptions,
        var_types: BTreeMap<String, TypeExpr>,
    ) -> Sched<'a> {
        Sched {
            prog,
            defs,
            opts,
            var_types,
            next_var: 1,
            next_nt: 1,
            warnings: Vec::new(),
            trace: Vec::new(),
        }
    }

    fn rt(&self, t: &TypeExpr, i: &InstExpr) -> TiGrammar {
        self.defs.rt(t, i).unwrap_or(TiGrammar::Top)
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            next_var: self.next_var,
            next_nt: self.next_nt,
            warnings: self.warnings.len(),
            trace: self.trace.len(),
        }
    }

    fn restore(&mut self, s: Snapshot) {
        self.next_var = s.next_var;
        self.next_nt = s.next_nt;
        self.warnings.truncate(s.warnings);
        self.trace.truncate(s.trace);
    }

    fn fresh_nt(&mut self) -> u32 {
        let id = self.next_nt;
        self.next_nt += 1;
        id
    }

    fn fresh_var(&mut self, ty: &TypeExpr, state: &mut TiState) -> String {
        loop {
            let name = format!("Fresh_{}", self.next_var);
            self.next_var += 1;
            if state.try_get(&name).is_none() && !self.var_types.get(&name).is_some_and(|t| t != ty)
            {
                self.var_types.insert(name.clone(), ty.clone());
                state.set(&name, TiGrammar::new_grammar());
                return name;
            }
        }
    }

    fn ty(&self, v: &str) -> &TypeExpr {
        &self.var_types[v]
    }

    fn initializable(&self, v: &str) -> bool {
        let t = self.ty(v);
        matches!(t, TypeExpr::Param(_)) || self.defs.is_solver(t)
    }

    // ------------------------------------------------------------- goals

    fn goal(
        &mut self,
        g: &Goal<TLiteral>,
        state: TiState,
        outside: &BTreeSet<String>,
        allow_init: bool,
    ) -> Result<(SGoal, TiState), Blocked> {
        match g {
            Goal::Lit(_) | Goal::Conj(_) => {
                let mut items = Vec::new();
                flatten(g, &mut items);
                let (out, s) = self.conj(items, state, outside, allow_init)?;
                Ok((SGoal::Conj(out), s))
            }
            Goal::Disj(gs) => {
                let mut branches = Vec::new();
                let mut states = Vec::new();
                for b in gs {
                    let (sg, s) = self.goal(b, state.clone(), outside, allow_init)?;
                    branches.push(sg);
                    states.push(restrict(&s, &state));
                }
                let joined = self.join(&state, states, &goal_vars(g), outside, goal_span(g))?;
                Ok((SGoal::Disj(branches), joined))
            }
            Goal::Ite(c, t, e) => {
                let mut cond_outside = outside.clone();
                cond_outside.extend(goal_vars(t));
                let (sc, s_c) = self.goal(c, state.clone(), &cond_outside, allow_init)?;
                let (st, s_t) = if s_c.any_bottom() {
                    (SGoal::Conj(vec![fail_lit(goal_span(t))]), s_c.all_bottom())
                } else {
                    let mut then_outside = outside.clone();
                    then_outside.extend(goal_vars(c));
                    self.goal(t, s_c, &then_outside, allow_init)?
                };
                let (se, s_e) = self.goal(e, state.clone(), outside, allow_init)?;
                let states = vec![restrict(&s_t, &state), restrict(&s_e, &state)];
                let joined = self.join(&state, states, &goal_vars(g), outside, goal_span(g))?;
                Ok((SGoal::Ite(Box::new(sc), Box::new(st), Box::new(se)), joined))
            }
        }
    }

    /// Join branch states; variables local to the goal go back to their entry value.
    fn join(
        &self,
        entry: &TiState,
        states: Vec<TiState>,
        goal_vars: &BTreeSet<String>,
        outside: &BTreeSet<String>,
        span: Span,
    ) -> Result<TiState, Blocked> {
        let mut it = states.into_iter();
        let mut res = match it.next() {
            Some(first) => it.fold(first, |acc, s| {
                state_disj(&acc, &s).expect("branch states share the entry domain")
            }),
            None => entry.all_bottom(),
        };
        for v in goal_vars {
            if !outside.contains(v) {
                if let Some(g) = entry.try_get(v) {
                    res.set(v, g.clone());
                }
            }
        }
        if let Some(v) = res.top_vars().first() {
            return Err(Blocked::TopJoin {
                var: v.to_string(),
                span,
            });
        }
        Ok(res)
    }

    fn conj<'g>(
        &mut self,
        mut pending: Vec<Work<'g>>,
        mut state: TiState,
        outside: &BTreeSet<String>,
        allow_init: bool,
    ) -> Result<(Vec<SGoal>, TiState), Blocked> {
        let mut out: Vec<SGoal> = Vec::new();
        let mut done_vars: BTreeSet<String> = BTreeSet::new();
        'outer: loop {
            if pending.is_empty() {
                return Ok((out, state));
            }
            let mut reasons = Vec::new();
            let mut chosen = None;
            for j in 0..pending.len() {
                let around = context_vars(&pending, j, outside, &done_vars);
                match self.attempt(&pending[j], &state, &around, false) {
                    Ok(done) => {
                        chosen = Some((j, done));
                        break;
                    }
                    Err(b) => reasons.push(b),
                }
            }
            if chosen.is_none() && allow_init && self.opts.init {
                for j in 0..pending.len() {
                    match &pending[j] {
                        Work::Lit(l, origin) => {
                            if let Some(vars) = self.init_choice(l, *origin, &pending[..j], &state)
                            {
                                for v in vars {
                                    let g = self.defs.base(self.ty(&v), BaseInst::Old);
                                    state.set(&v, g);
                                    out.push(SGoal::Lit(SLit {
                                        kind: SLitKind::Init(v.clone()),
                                        origin: Origin::Init,
                                        span: l.span,
                                        runtime_risk: false,
                                    }));
                                }
                                continue 'outer;
                            }
                        }
                        Work::Goal(_) => {
                            let around = context_vars(&pending, j, outside, &done_vars);
                            if let Ok(done) = self.attempt(&pending[j], &state, &around, true) {
                                chosen = Some((j, done));
                                break;
                            }
                        }
                    }
                }
            }
            let Some((j, done)) = chosen else {
                return Err(stuck(reasons));
            };
            let item = pending.remove(j);
            done_vars.extend(item.vars());
            for (i, t) in done.trailing.into_iter().enumerate() {
                pending.insert(j + i, t);
            }
            let mark = out.len();
            let span = match &item {
                Work::Lit(l, _) => l.span,
                Work::Goal(g) => goal_span(g),
            };
            out.extend(done.emitted);
            state = done.state;
            if state.any_bottom() {
                let already_fail = out.len() == mark + 1
                    && matches!(&out[mark], SGoal::Lit(l) if l.kind == SLitKind::Fail);
                if !already_fail {
                    out.truncate(mark);
                    out.push(fail_lit(span));
                }
                return Ok((out, state.all_bottom()));
            }
        }
    }

    /// Try one pending item; counters and warnings roll back on failure.
    fn attempt<'g>(
        &mut self,
        item: &Work<'g>,
        state: &TiState,
        around: &BTreeSet<String>,
        allow_init: bool,
    ) -> Result<Done<'g>, Blocked> {
        let snap = self.snapshot();
        let res = match item {
            Work::Lit(l, origin) => self.lit(l, *origin, state.clone()),
            Work::Goal(g) => self
                .goal(g, state.clone(), around, allow_init)
                .map(|(sg, s)| Done {
                    emitted: vec![sg],
                    state: restrict(&s, state),
                    trailing: Vec::new(),
                }),
        };
        if res.is_err() {
            self.restore(snap);
        }
        res
    }

    /// Smallest set of variables whose initialization makes `l` schedulable.
    fn init_choice(
        &mut self,
        l: &TLiteral,
        origin: Origin,
        earlier: &[Work],
        state: &TiState,
    ) -> Option<Vec<String>> {
        let mut bound_later = BTreeSet::new();
        for w in earlier {
            if let Work::Lit(e, _) = w {
                match &e.kind {
                    TLitKind::EqFun(x, ..) | TLitKind::EqConst(x, _) => {
                        bound_later.insert(x.as_str());
                    }
                    TLitKind::EqVar(a, b) => {
                        bound_later.insert(a.as_str());
                        bound_later.insert(b.as_str());
                    }
                    _ => {}
                }
            }
        }
        let vars: Vec<&str> = match &l.kind {
            TLitKind::EqFun(_, _, args) => args.iter().map(|s| s.as_str()).collect(),
            TLitKind::Fail => Vec::new(),
            _ => l.vars(),
        };
        let mut cands: Vec<String> = Vec::new();
        for v in vars {
            if !bound_later.contains(v)
                && state.get(v).is_new()
                && self.initializable(v)
                && !cands.iter().any(|c| c == v)
            {
                cands.push(v.to_string());
            }
        }
        cands.truncate(INIT_CANDIDATE_CAP);
        for size in 1..=cands.len() {
            for subset in combinations(cands.len(), size) {
                let mut trial = state.clone();
                for &i in &subset {
                    let v = &cands[i];
                    trial.set(v, self.defs.base(self.ty(v), BaseInst::Old));
                }
                let snap = self.snapshot();
                let ok = self.lit(l, origin, trial).is_ok();
                self.restore(snap);
                if ok {
                    return Some(subset.into_iter().map(|i| cands[i].clone()).collect());
                }
            }
        }
        None
    }

    // ---------------------------------------------------------- literals

    fn lit<'g>(
        &mut self,
        l: &TLiteral,
        origin: Origin,
        mut state: TiState,
    ) -> Result<Done<'g>, Blocked> {
        let blocked = || Blocked::Literals(vec![(render::source_text(self.prog, l), l.span)]);
        let emit = |kind: SLitKind, risk: bool| {
            SGoal::Lit(SLit {
                kind,
                origin,
                span: l.span,
                runtime_risk: risk,
            })
        };
        match &l.kind {
            TLitKind::EqVar(a, b) => {
                let (ra, rb) = (state.get(a).clone(), state.get(b).clone());
                let kind = match (ra.is_new(), rb.is_new()) {
                    (true, true) => return Err(blocked()),
                    (true, false) => {
                        state.set(a, rb);
                        SLitKind::Copy {
                            dst: a.clone(),
                            src: b.clone(),
                        }
                    }
                    (false, true) => {
                        state.set(b, ra);
                        SLitKind::Copy {
                            dst: b.clone(),
                            src: a.clone(),
                        }
                    }
                    (false, false) => {
                        let g = grammar::conj(&ra, &rb);
                        state.set(a, g.clone());
                        state.set(b, g);
                        SLitKind::Unify(a.clone(), b.clone())
                    }
                };
                Ok(done(vec![emit(kind, false)], state))
            }
            TLitKind::EqConst(x, c) => {
                let g = self.defs.base(self.ty(x), BaseInst::Ground);
                let rx = state.get(x).clone();
                let kind = if rx.is_new() {
                    state.set(x, g);
                    SLitKind::ConstConstruct(x.clone(), c.clone())
                } else {
                    state.set(x, grammar::conj(&rx, &g));
                    SLitKind::ConstTest(x.clone(), c.clone())
                };
                Ok(done(vec![emit(kind, false)], state))
            }
            TLitKind::EqFun(x, f, args) => {
                if state.get(x).is_new() {
                    if args.iter().any(|a| state.get(a).is_new()) {
                        return Err(blocked());
                    }
                    let gs: Vec<TiGrammar> = args.iter().map(|a| state.get(a).clone()).collect();
                    let g = self.construct(f, &gs);
                    state.set(x, g);
                    let kind = SLitKind::Construct {
                        x: x.clone(),
                        ctor: f.clone(),
                        args: args.clone(),
                    };
                    return Ok(done(vec![emit(kind, false)], state));
                }
                let mut new_args = Vec::new();
                let mut trailing = Vec::new();
                for a in args {
                    if state.get(a).is_new() {
                        new_args.push(a.clone());
                    } else {
                        let t = self.ty(a).clone();
                        let fv = self.fresh_var(&t, &mut state);
                        trailing.push(Work::Lit(
                            TLiteral {
                                id: usize::MAX,
                                kind: TLitKind::EqVar(a.clone(), fv.clone()),
                                span: l.span,
                            },
                            Origin::Split,
                        ));
                        new_args.push(fv);
                    }
                }
                let risk = self.runtime_risk(state.get(x), args);
                if risk {
                    self.warnings.push(Diagnostic::new(
                        Code::W001,
                        l.span,
                        format!(
                            "{} may deconstruct an unbound solver variable; the mode is only checked at run time",
                            render::source_text(self.prog, l)
                        ),
                    ));
                }
                self.deconstruct(x, f, &new_args, &mut state);
                let kind = SLitKind::Deconstruct {
                    x: x.clone(),
                    ctor: f.clone(),
                    args: new_args,
                };
                Ok(Done {
                    emitted: vec![emit(kind, risk)],
                    state,
                    trailing,
                })
            }
            TLitKind::Call { pred, args, theta } => {
                let callee = &self.prog.preds[*pred];
                let rs: Vec<TiGrammar> = args.iter().map(|a| state.get(a).clone()).collect();
                let tys: Vec<TypeExpr> = args.iter().map(|a| self.ty(a).clone()).collect();
                let cands = (0..callee.modes.len())
                    .filter_map(|k| {
                        self.first_order_candidate(&callee.modes[k].pairs(), k, &rs, &tys, true)
                    })
                    .collect();
                let Some(choice) = select(cands) else {
                    return Err(blocked());
                };
                self.trace.push(CallTrace {
                    callee: callee.key(),
                    args: args.iter().cloned().zip(rs.iter().cloned()).collect(),
                });
                let pairs = callee.modes[choice.mode].pairs();
                let ps = self.call_success(*pred, &pairs, &rs, &tys, &choice.implied, theta);
                let (call_args, trailing) =
                    self.apply(args, &rs, &ps, &choice.implied, &mut state, l.span);
                let kind = SLitKind::Call {
                    pred: *pred,
                    mode: choice.mode,
                    args: call_args,
                    theta: theta.clone(),
                };
                Ok(Done {
                    emitted: vec![emit(kind, false)],
                    state,
                    trailing,
                })
            }
            TLitKind::HoCall(h, args) => {
                let rh = state.get(h).clone();
                let Some((cs, ss)) = ipred_slices(&rh, args.len()) else {
                    if rh.root_has(&Ctor::GPred) {
                        return Err(Blocked::GPredCall {
                            var: h.clone(),
                            span: l.span,
                        });
                    }
                    return Err(blocked());
                };
                let rs: Vec<TiGrammar> = args.iter().map(|a| state.get(a).clone()).collect();
                let mut implied = Vec::new();
                for (r, c) in rs.iter().zip(&cs) {
                    if grammar::lt(r, c) {
                        implied.push(false);
                    } else if c.is_new() {
                        implied.push(true);
                    } else {
                        return Err(blocked());
                    }
                }
                let mut traced = vec![(h.clone(), rh)];
                traced.extend(args.iter().cloned().zip(rs.iter().cloned()));
                self.trace.push(CallTrace {
                    callee: format!("call/{}", args.len() + 1),
                    args: traced,
                });
                let (call_args, trailing) =
                    self.apply(args, &rs, &ss, &implied, &mut state, l.span);
                let kind = SLitKind::HoCall {
                    h: h.clone(),
                    args: call_args,
                };
                Ok(Done {
                    emitted: vec![emit(kind, false)],
                    state,
                    trailing,
                })
            }
            TLitKind::HoConstruct {
                h,
                pred,
                args,
                theta,
            } => {
                if !state.get(h).is_new() || args.iter().any(|a| state.get(a).is_new()) {
                    return Err(blocked());
                }
                let rs: Vec<TiGrammar> = args.iter().map(|a| state.get(a).clone()).collect();
                let Some((mode, g)) = self.ho_construct(*pred, &rs, args, theta, None) else {
                    return Err(blocked());
                };
                state.set(h, g);
                let kind = SLitKind::HoConstruct {
                    h: h.clone(),
                    pred: *pred,
                    mode,
                    args: args.clone(),
                    theta: theta.clone(),
                };
                Ok(done(vec![emit(kind, false)], state))
            }
            TLitKind::Fail => Ok(done(vec![emit(SLitKind::Fail, false)], state.all_bottom())),
        }
    }

    fn runtime_risk(&self, rx: &TiGrammar, args: &[String]) -> bool {
        rx.root_has(&Ctor::Var) && args.iter().any(|a| !self.defs.is_solver(self.ty(a)))
    }

    /// Grammar `a -> f(root(r1),...,root(rn))` over the argument grammars.
    fn construct(&mut self, f: &str, args: &[TiGrammar]) -> TiGrammar {
        let id = self.fresh_nt();
        let mut map = RuleMap::new();
        let mut kids = Vec::new();
        for g in args {
            match merge(&mut map, g) {
                Some(r) => kids.push(r),
                None => return TiGrammar::Bottom,
            }
        }
        let root = Nt::fresh(id);
        map.insert(
            root.clone(),
            vec![Prod::new(Ctor::fun(f, kids.len()), kids)],
        );
        TiGrammar::from_rules(root, map)
    }

    /// `x =: f(args)` with every argument new.
    fn deconstruct(&mut self, x: &str, f: &str, args: &[String], state: &mut TiState) {
        let rx = state.get(x).clone();
        let ctor = Ctor::fun(f, args.len());
        let Some(p) = rx
            .root_productions()
            .iter()
            .find(|p| p.ctor == ctor)
            .cloned()
        else {
            state.set(x, TiGrammar::Bottom);
            for a in args {
                state.set(a, TiGrammar::Bottom);
            }
            return;
        };
        for (a, k) in args.iter().zip(&p.args) {
            state.set(a, rx.subg(k).unwrap_or(TiGrammar::Bottom));
        }
        if rx.root_productions().len() > 1 {
            let id = self.fresh_nt();
            let mut map = rx.rules().cloned().unwrap_or_default();
            let root = Nt::fresh(id);
            map.insert(root.clone(), vec![p]);
            state.set(x, TiGrammar::from_rules(root, map));
        }
    }

    fn first_order_candidate(
        &self,
        pairs: &[(InstExpr, InstExpr)],
        mode: usize,
        rs: &[TiGrammar],
        tys: &[TypeExpr],
        allow_implied: bool,
    ) -> Option<Candidate> {
        let mut implied = Vec::new();
        let mut call = Vec::new();
        let mut success = Vec::new();
        for ((r, t), (c, s)) in rs.iter().zip(tys).zip(pairs) {
            let tc = self.rt(t, c);
            let ts = self.rt(t, s);
            if tc.is_top() || ts.is_top() {
                return None;
            }
            let imp = if grammar::lt(r, &tc) {
                false
            } else if allow_implied && tc.is_new() {
                true
            } else {
                return None;
            };
            success.push(ts);
            implied.push(imp);
            call.push(tc);
        }
        Some(Candidate {
            mode,
            implied,
            call,
            success,
        })
    }

    /// Success grammars for a call, improved at polymorphic callees.
    fn call_success(
        &mut self,
        pred: usize,
        pairs: &[(InstExpr, InstExpr)],
        rs: &[TiGrammar],
        tys: &[TypeExpr],
        implied: &[bool],
        theta: &BTreeMap<String, TypeExpr>,
    ) -> Vec<TiGrammar> {
        let declared = &self.prog.preds[pred].arg_types;
        if !self.opts.poly || !declared.iter().any(|t| t.has_params()) {
            return tys
                .iter()
                .zip(pairs)
                .map(|(t, (_, s))| self.rt(t, s))
                .collect();
        }
        let mut matches = Vec::new();
        for (j, (dt, (c, _))) in declared.iter().zip(pairs).enumerate() {
            if implied[j] {
                continue;
            }
            let d = self.rt(dt, c);
            if !d.is_top() {
                matches.extend(collect_set(&d, &rs[j]));
            }
        }
        (0..pairs.len())
            .map(|j| {
                let d = self.rt(&declared[j], &pairs[j].1);
                if d.is_top() {
                    self.rt(&tys[j], &pairs[j].1)
                } else {
                    self.improve(&d, &matches, theta)
                }
            })
            .collect()
    }

    /// `ground(v, M)` or `old(v, M)`, falling back to the instantiated
    /// declared grammar when `M` says nothing useful about `v`.
    fn param_target(
        &self,
        v: &str,
        old: bool,
        matches: &[(bool, String, TiGrammar)],
        theta: &BTreeMap<String, TypeExpr>,
    ) -> TiGrammar {
        let joined = matches
            .iter()
            .filter(|(o, w, _)| w == v && (old || !o))
            .map(|(_, _, g)| g)
            .fold(None::<TiGrammar>, |acc, g| {
                Some(match acc {
                    None => g.clone(),
                    Some(a) => grammar::disj(&a, g),
                })
            });
        match joined {
            Some(g) if !g.is_top() && !g.is_bottom() => g,
            _ => {
                let t = theta
                    .get(v)
                    .cloned()
                    .unwrap_or_else(|| TypeExpr::Param(v.to_string()));
                let b = if old { BaseInst::Old } else { BaseInst::Ground };
                self.defs.base(&t, b)
            }
        }
    }

    /// Replace the parameter leaves of a declared grammar by their targets.
    fn improve(
        &mut self,
        g: &TiGrammar,
        matches: &[(bool, String, TiGrammar)],
        theta: &BTreeMap<String, TypeExpr>,
    ) -> TiGrammar {
        let (Some(map), Some(root)) = (g.rules(), g.root()) else {
            return g.clone();
        };
        let leaves: BTreeMap<Nt, (String, bool)> = map
            .iter()
            .filter_map(|(k, ps)| param_leaf(ps).map(|l| (k.clone(), l)))
            .collect();
        if leaves.is_empty() {
            return g.clone();
        }
        if let Some((v, old)) = leaves.get(root) {
            return self.param_target(v, *old, matches, theta);
        }
        let id = self.fresh_nt();
        let mut out = RuleMap::new();
        let mut targets: BTreeMap<Nt, Nt> = BTreeMap::new();
        for (k, (v, old)) in &leaves {
            let t = self.param_target(v, *old, matches, theta);
            if let Some(r) = merge(&mut out, &t) {
                targets.insert(k.clone(), r);
            }
        }
        let rename = |x: &Nt| -> Nt {
            if let Some(r) = targets.get(x) {
                r.clone()
            } else if x.is_new() {
                x.clone()
            } else {
                Nt::renamed(id, x)
            }
        };
        for (k, ps) in map {
            if targets.contains_key(k) {
                continue;
            }
            let ps2 = ps
                .iter()
                .map(|p| Prod::new(p.ctor.clone(), p.args.iter().map(&rename).collect()))
                .collect();
            out.insert(rename(k), ps2);
        }
        TiGrammar::from_rules(rename(root), out)
    }

    /// Update argument states after a call; implied positions get a fresh
    /// variable and a trailing equation.
    fn apply<'g>(
        &mut self,
        args: &[String],
        rs: &[TiGrammar],
        success: &[TiGrammar],
        implied: &[bool],
        state: &mut TiState,
        span: Span,
    ) -> (Vec<String>, Vec<Work<'g>>) {
        let mut call_args = Vec::new();
        let mut trailing = Vec::new();
        for j in 0..args.len() {
            if implied[j] {
                let t = self.ty(&args[j]).clone();
                let fv = self.fresh_var(&t, state);
                state.set(&fv, success[j].clone());
                trailing.push(Work::Lit(
                    TLiteral {
                        id: usize::MAX,
                        kind: TLitKind::EqVar(fv.clone(), args[j].clone()),
                        span,
                    },
                    Origin::Implied,
                ));
                call_args.push(fv);
            } else {
                state.set(&args[j], grammar::conj(&rs[j], &success[j]));
                call_args.push(args[j].clone());
            }
        }
        (call_args, trailing)
    }

    /// Pick a mode for `h = p(args)` and build the `$ipred$` grammar for `h`.
    /// With `locked`, only that mode is considered.
    fn ho_construct(
        &mut self,
        pred: usize,
        rs: &[TiGrammar],
        args: &[String],
        theta: &BTreeMap<String, TypeExpr>,
        locked: Option<usize>,
    ) -> Option<(usize, TiGrammar)> {
        let callee = &self.prog.preds[pred];
        let given = args.len();
        let tys: Vec<TypeExpr> = args.iter().map(|a| self.ty(a).clone()).collect();
        let mut cands = Vec::new();
        for k in 0..callee.modes.len() {
            if locked.is_some_and(|m| m != k) {
                continue;
            }
            let pairs = callee.modes[k].pairs();
            let Some(c) = self.first_order_candidate(&pairs[..given], k, rs, &tys, false) else {
                continue;
            };
            let rest_ok = (given..pairs.len()).all(|j| {
                let t = callee.arg_types[j].subst(theta);
                !self.rt(&t, &pairs[j].0).is_top() && !self.rt(&t, &pairs[j].1).is_top()
            });
            if rest_ok {
                cands.push(c);
            }
        }
        let choice = select(cands)?;
        let pairs = callee.modes[choice.mode].pairs();
        let declared = callee.arg_types.clone();
        let mut matches = Vec::new();
        if self.opts.poly {
            for j in 0..given {
                let d = self.rt(&declared[j], &pairs[j].0);
                if !d.is_top() {
                    matches.extend(collect_set(&d, &rs[j]));
                }
            }
        }
        let mut map = RuleMap::new();
        let mut kids = Vec::new();
        for j in given..pairs.len() {
            let t = declared[j].subst(theta);
            let c = self.rt(&t, &pairs[j].0);
            let d = self.rt(&declared[j], &pairs[j].1);
            let s = if self.opts.poly && !d.is_top() {
                self.improve(&d, &matches, theta)
            } else {
                self.rt(&t, &pairs[j].1)
            };
            kids.push(merge(&mut map, &c)?);
            kids.push(merge(&mut map, &s)?);
        }
        let root = Nt::fresh(self.fresh_nt());
        map.insert(
            root.clone(),
            vec![Prod::new(Ctor::IPred(pairs.len() - given), kids)],
        );
        Some((choice.mode, TiGrammar::from_rules(root, map)))
    }
}

fn ipred_slices(rh: &TiGrammar, n: usize) -> Option<(Vec<TiGrammar>, Vec<TiGrammar>)> {
    let p = rh
        .root_productions()
        .iter()
        .find(|p| p.ctor == Ctor::IPred(n))?;
    let mut cs = Vec::new();
    let mut ss = Vec::new();
    for i in 0..n {
        cs.push(rh.subg(&p.args[2 * i]).ok()?);
        ss.push(rh.subg(&p.args[2 * i + 1]).ok()?);
    }
    Some((cs, ss))
}

fn done<'g>(emitted: Vec<SGoal>, state: TiState) -> Done<'g> {
    Done {
        emitted,
        state,
        trailing: Vec::new(),
    }
}

fn fail_lit(span: Span) -> SGoal {
    SGoal::Lit(SLit {
        kind: SLitKind::Fail,
        origin: Origin::Fail,
        span,
        runtime_risk: false,
    })
}

fn flatten<'g>(g: &'g Goal<TLiteral>, out: &mut Vec<Work<'g>>) {
    match g {
        Goal::Lit(l) => out.push(Work::Lit(l.clone(), Origin::Source(l.id))),
        Goal::Conj(gs) => gs.iter().for_each(|g| flatten(g, out)),
        _ => out.push(Work::Goal(g)),
    }
}

/// Variables visible outside pending item `j`.
fn context_vars(
    pending: &[Work],
    j: usize,
    outside: &BTreeSet<String>,
    done_vars: &BTreeSet<String>,
) -> BTreeSet<String> {
    if matches!(pending[j], Work::Lit(..)) {
        return BTreeSet::new();
    }
    let mut out = outside.clone();
    out.extend(done_vars.iter().cloned());
    for (i, w) in pending.iter().enumerate() {
        if i != j {
            out.extend(w.vars());
        }
    }
    out
}

fn stuck(reasons: Vec<Blocked>) -> Blocked {
    if let Some(b) = reasons
        .iter()
        .find(|b| matches!(b, Blocked::GPredCall { .. }))
    {
        return b.clone();
    }
    if let Some(b) = reasons
        .iter()
        .find(|b| matches!(b, Blocked::TopJoin { .. }))
    {
        return b.clone();
    }
    let mut lits = Vec::new();
    for b in reasons {
        if let Blocked::Literals(ls) = b {
            lits.extend(ls);
        }
    }
    Blocked::Literals(lits)
}

/// Index subsets of `0..n` with `k` elements, in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    'next: loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 {
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                continue 'next;
            }
        }
        return out;
    }
}

// ------------------------------------------------------------------- re-check

/// Re-run an emitted procedure with its order and tags fixed, checking every
/// literal's preconditions, new-tracking, and the declared success state.
pub fn verify(
    prog: &Program,
    defs: &Defs,
    opts: CheckOptions,
    proc: &Procedure,
) -> Result<(), String> {
    let pd = &prog.preds[proc.pred];
    let mut s = Sched::new(prog, defs, opts, proc.var_types.clone());
    let (mut state, expected, outside) = entry_state(&s, pd, proc.mode).map_err(|d| d.message)?;
    for v in proc.var_types.keys() {
        if state.try_get(v).is_none() {
            state.set(v, TiGrammar::new_grammar());
        }
    }
    let fin = s.replay(&proc.body, state, &outside)?;
    for (v, want) in proc.head.iter().zip(&expected) {
        if !grammar::lt(fin.get(v), want) {
            return Err(format!("{v} ends weaker than declared"));
        }
    }
    Ok(())
}

impl Sched<'_> {
    fn replay(
        &mut self,
        g: &SGoal,
        state: TiState,
        outside: &BTreeSet<String>,
    ) -> Result<TiState, String> {
        match g {
            SGoal::Lit(l) => {
                let s = self.replay_lit(l, state)?;
                for (v, g) in s.iter() {
                    if !g.is_new() && g.fresh_outside_ipred() {
                        return Err(format!("{v} is partly new after {:?}", l.kind));
                    }
                }
                Ok(s)
            }
            SGoal::Conj(gs) => {
                let mut state = state;
                for (i, g) in gs.iter().enumerate() {
                    let mut around = outside.clone();
                    if !matches!(g, SGoal::Lit(_)) {
                        for (k, other) in gs.iter().enumerate() {
                            if k != i {
                                around.extend(other.vars());
                            }
                        }
                    }
                    state = self.replay(g, state, &around)?;
                    if state.any_bottom() {
                        return Ok(state.all_bottom());
                    }
                }
                Ok(state)
            }
            SGoal::Disj(bs) => {
                let mut states = Vec::new();
                for b in bs {
                    let s = self.replay(b, state.clone(), outside)?;
                    states.push(restrict(&s, &state));
                }
                self.join(&state, states, &g.vars(), outside, Span::default())
                    .map_err(|_| "branches disagree".to_string())
            }
            SGoal::Ite(c, t, e) => {
                let mut cond_outside = outside.clone();
                cond_outside.extend(t.vars());
                let s_c = self.replay(c, state.clone(), &cond_outside)?;
                let mut then_outside = outside.clone();
                then_outside.extend(c.vars());
                let s_t = if s_c.any_bottom() {
                    s_c.all_bottom()
                } else {
                    self.replay(t, s_c, &then_outside)?
                };
                let s_e = self.replay(e, state.clone(), outside)?;
                let states = vec![restrict(&s_t, &state), restrict(&s_e, &state)];
                self.join(&state, states, &g.vars(), outside, Span::default())
                    .map_err(|_| "branches disagree".to_string())
            }
        }
    }

    fn replay_lit(&mut self, l: &SLit, mut state: TiState) -> Result<TiState, String> {
        let is_new = |s: &TiState, v: &str| s.get(v).is_new();
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(format!("{what} in {:?}", l.kind))
            }
        };
        match &l.kind {
            SLitKind::Copy { dst, src } => {
                need(
                    is_new(&state, dst) && !is_new(&state, src),
                    "copy needs new := bound",
                )?;
                let g = state.get(src).clone();
                state.set(dst, g);
            }
            SLitKind::Unify(a, b) => {
                need(
                    !is_new(&state, a) && !is_new(&state, b),
                    "unify on new variable",
                )?;
                let g = grammar::conj(state.get(a), state.get(b));
                state.set(a, g.clone());
                state.set(b, g);
            }
            SLitKind::Construct { x, ctor, args } => {
                need(is_new(&state, x), "construct target bound")?;
                need(
                    args.iter().all(|a| !is_new(&state, a)),
                    "construct from new argument",
                )?;
                let gs: Vec<TiGrammar> = args.iter().map(|a| state.get(a).clone()).collect();
                let g = self.construct(ctor, &gs);
                state.set(x, g);
            }
            SLitKind::Deconstruct { x, ctor, args } => {
                need(!is_new(&state, x), "deconstruct of new variable")?;
                need(
                    args.iter().all(|a| is_new(&state, a)),
                    "deconstruct into bound argument",
                )?;
                self.deconstruct(x, ctor, args, &mut state);
            }
            SLitKind::ConstConstruct(x, _) => {
                need(is_new(&state, x), "constant construct target bound")?;
                state.set(x, self.defs.base(self.ty(x), BaseInst::Ground));
            }
            SLitKind::ConstTest(x, _) => {
                need(!is_new(&state, x), "constant test on new variable")?;
                let g = grammar::conj(state.get(x), &self.defs.base(self.ty(x), BaseInst::Ground));
                state.set(x, g);
            }
            SLitKind::Call {
                pred,
                mode,
                args,
                theta,
            } => {
                let pairs = self.prog.preds[*pred].modes[*mode].pairs();
                let rs: Vec<TiGrammar> = args.iter().map(|a| state.get(a).clone()).collect();
                let tys: Vec<TypeExpr> = args.iter().map(|a| self.ty(a).clone()).collect();
                let c = self.first_order_candidate(&pairs, *mode, &rs, &tys, false);
                need(
                    c.is_some(),
                    "call arguments below the calling instantiation",
                )?;
                let implied = vec![false; args.len()];
                let ps = self.call_success(*pred, &pairs, &rs, &tys, &implied, theta);
                self.apply(args, &rs, &ps, &implied, &mut state, l.span);
            }
            SLitKind::HoCall { h, args } => {
                let slices = ipred_slices(state.get(h), args.len());
                let Some((cs, ss)) = slices else {
                    return Err(format!("{h} is not callable"));
                };
                let rs: Vec<TiGrammar> = args.iter().map(|a| state.get(a).clone()).collect();
                need(
                    rs.iter().zip(&cs).all(|(r, c)| grammar::lt(r, c)),
                    "higher-order call arguments too weak",
                )?;
                let implied = vec![false; args.len()];
                self.apply(args, &rs, &ss, &implied, &mut state, l.span);
            }
            SLitKind::HoConstruct {
                h,
                pred,
                mode,
                args,
                theta,
            } => {
                need(is_new(&state, h), "closure target bound")?;
                need(
                    args.iter().all(|a| !is_new(&state, a)),
                    "closure over new argument",
                )?;
                let rs: Vec<TiGrammar> = args.iter().map(|a| state.get(a).clone()).collect();
                let Some((_, g)) = self.ho_construct(*pred, &rs, args, theta, Some(*mode)) else {
                    return Err(format!("closure mode {} not applicable", mode + 1));
                };
                state.set(h, g);
            }
            SLitKind::Init(v) => {
                need(
                    is_new(&state, v) && self.initializable(v),
                    "init of bound or non-solver variable",
                )?;
                state.set(v, self.defs.base(self.ty(v), BaseInst::Old));
            }
            SLitKind::Fail => return Ok(state.all_bottom()),
        }
        Ok(state)
    }
}
