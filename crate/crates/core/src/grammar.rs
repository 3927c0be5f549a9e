//! Deterministic regular tree grammars with a root, plus the ordering,
//! abstract conjunction and abstract disjunction used by the mode checker.
//!
//! Non-terminal names are global: two grammars that mention the same name
//! always carry the same rules for it. Everything that builds grammars
//! (`rt`, the scheduler's constructs, meet/join) keeps to that, which is
//! what lets `conj`/`disj` merge rule sets without renaming.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("non-terminal {0} does not occur in the grammar")]
    NotInGrammar(String),
    #[error("grammar has no root")]
    NoRoot,
    #[error("grammar text line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum NtKind {
    /// `ti(t,i)` for a printed type and instantiation.
    Ti(Arc<str>, Arc<str>),
    /// Plain names, used by hand-written grammars and `grammar(t)`.
    Named(Arc<str>),
    Meet(Nt, Nt),
    Join(Nt, Nt),
    New,
    Fresh(u32),
    Renamed(u32, Nt),
}

struct NtNode {
    kind: NtKind,
    hash: u64,
}

/// A non-terminal. Cheap to clone; equality and ordering are structural.
#[derive(Clone)]
pub struct Nt(Arc<NtNode>);

impl Nt {
    fn make(kind: NtKind) -> Nt {
        let mut h = DefaultHasher::new();
        kind.hash(&mut h);
        Nt(Arc::new(NtNode {
            hash: h.finish(),
            kind,
        }))
    }

    pub fn ti(ty: &str, inst: &str) -> Nt {
        Nt::make(NtKind::Ti(ty.into(), inst.into()))
    }

    pub fn named(name: &str) -> Nt {
        if name == "new" {
            return Nt::new_inst();
        }
        Nt::make(NtKind::Named(name.into()))
    }

    pub fn new_inst() -> Nt {
        static NEW: OnceLock<Nt> = OnceLock::new();
        NEW.get_or_init(|| Nt::make(NtKind::New)).clone()
    }

    pub fn fresh(id: u32) -> Nt {
        Nt::make(NtKind::Fresh(id))
    }

    pub fn renamed(id: u32, of: &Nt) -> Nt {
        Nt::make(NtKind::Renamed(id, of.clone()))
    }

    /// `meet(a,b)`, with the operands ordered so `meet(a,b) = meet(b,a)`.
    pub fn meet(a: &Nt, b: &Nt) -> Nt {
        if a <= b {
            Nt::make(NtKind::Meet(a.clone(), b.clone()))
        } else {
            Nt::make(NtKind::Meet(b.clone(), a.clone()))
        }
    }

    pub fn join(a: &Nt, b: &Nt) -> Nt {
        if a <= b {
            Nt::make(NtKind::Join(a.clone(), b.clone()))
        } else {
            Nt::make(NtKind::Join(b.clone(), a.clone()))
        }
    }

    pub fn kind(&self) -> &NtKind {
        &self.0.kind
    }

    pub fn is_new(&self) -> bool {
        matches!(self.0.kind, NtKind::New)
    }
}

impl PartialEq for Nt {
    fn eq(&self, other: &Nt) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for Nt {}

impl Hash for Nt {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialOrd for Nt {
    fn partial_cmp(&self, other: &Nt) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Nt {
    fn cmp(&self, other: &Nt) -> std::cmp::Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return std::cmp::Ordering::Equal;
        }
        self.0
            .hash
            .cmp(&other.0.hash)
            .then_with(|| self.0.kind.cmp(&other.0.kind))
    }
}

impl fmt::Display for Nt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            NtKind::Ti(t, i) => write!(f, "ti({t},{i})"),
            NtKind::Named(n) => write!(f, "{n}"),
            NtKind::Meet(a, b) => write!(f, "meet({a},{b})"),
            NtKind::Join(a, b) => write!(f, "join({a},{b})"),
            NtKind::New => write!(f, "new"),
            NtKind::Fresh(n) => write!(f, "_g{n}"),
            NtKind::Renamed(n, x) => write!(f, "{x}'{n}"),
        }
    }
}

impl fmt::Debug for Nt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Right-hand-side constructors, including the special leaves.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Ctor {
    /// Tree constructor `name/arity`. Lists use `[]`/0 and `.`/2.
    Fun(Arc<str>, usize),
    /// The value set of a built-in atomic type, compared by type identity.
    Atomic(Arc<str>),
    Fresh,
    Var,
    Ground(Arc<str>),
    Old(Arc<str>),
    GPred,
    /// `$ipred$` over `n` arguments, so `2n` children.
    IPred(usize),
}

impl Ctor {
    pub fn fun(name: &str, arity: usize) -> Ctor {
        Ctor::Fun(name.into(), arity)
    }

    pub fn arity(&self) -> usize {
        match self {
            Ctor::Fun(_, n) => *n,
            Ctor::IPred(n) => 2 * n,
            _ => 0,
        }
    }

    pub fn is_special(&self) -> bool {
        !matches!(self, Ctor::Fun(..) | Ctor::Atomic(_))
    }

    /// Render with already-rendered children.
    pub fn render(&self, args: &[String]) -> String {
        match self {
            Ctor::Fun(n, 2) if &**n == "." => format!("[{}|{}]", args[0], args[1]),
            Ctor::Fun(n, 0) => n.to_string(),
            Ctor::Fun(n, _) => format!("{}({})", n, args.join(",")),
            Ctor::Atomic(t) => format!("$atomic({t})$"),
            Ctor::Fresh => "#fresh#".into(),
            Ctor::Var => "#var#".into(),
            Ctor::Ground(v) => format!("$ground({v})$"),
            Ctor::Old(v) => format!("$old({v})$"),
            Ctor::GPred => "$gpred$".into(),
            Ctor::IPred(_) => format!("$ipred$({})", args.join(",")),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Prod {
    pub ctor: Ctor,
    pub args: Vec<Nt>,
}

impl Prod {
    pub fn new(ctor: Ctor, args: Vec<Nt>) -> Prod {
        debug_assert_eq!(ctor.arity(), args.len());
        Prod { ctor, args }
    }

    pub fn leaf(ctor: Ctor) -> Prod {
        Prod::new(ctor, Vec::new())
    }
}

pub type RuleMap = BTreeMap<Nt, Vec<Prod>>;

#[derive(Debug)]
pub struct Rules {
    root: Nt,
    map: RuleMap,
    fp: u64,
}

/// A ti-grammar: ⊥, ⊤ or a rooted rule set.
#[derive(Clone, Debug)]
pub enum TiGrammar {
    Bottom,
    Top,
    Rules(Arc<Rules>),
}

impl PartialEq for TiGrammar {
    fn eq(&self, other: &TiGrammar) -> bool {
        match (self, other) {
            (TiGrammar::Bottom, TiGrammar::Bottom) | (TiGrammar::Top, TiGrammar::Top) => true,
            (TiGrammar::Rules(a), TiGrammar::Rules(b)) => {
                Arc::ptr_eq(a, b) || (a.fp == b.fp && a.root == b.root && a.map == b.map)
            }
            _ => false,
        }
    }
}

impl Eq for TiGrammar {}

fn prods<'a>(map: &'a RuleMap, x: &Nt) -> &'a [Prod] {
    map.get(x).map(|v| v.as_slice()).unwrap_or(&[])
}

fn find<'a>(ps: &'a [Prod], ctor: &Ctor) -> Option<&'a Prod> {
    ps.iter().find(|p| &p.ctor == ctor)
}

fn old_param(ps: &[Prod]) -> Option<&Arc<str>> {
    ps.iter().find_map(|p| match &p.ctor {
        Ctor::Old(v) => Some(v),
        _ => None,
    })
}

fn ground_param(ps: &[Prod]) -> Option<&Arc<str>> {
    ps.iter().find_map(|p| match &p.ctor {
        Ctor::Ground(v) => Some(v),
        _ => None,
    })
}

fn has_gpred(ps: &[Prod]) -> bool {
    ps.iter().any(|p| p.ctor == Ctor::GPred)
}

fn ipred(ps: &[Prod]) -> Option<&Prod> {
    ps.iter().find(|p| matches!(p.ctor, Ctor::IPred(_)))
}

fn reachable(root: &Nt, map: &RuleMap) -> Vec<Nt> {
    let mut seen = HashSet::new();
    let mut order = Vec::new();
    let mut stack = vec![root.clone()];
    while let Some(x) = stack.pop() {
        if !seen.insert(x.clone()) {
            continue;
        }
        for p in prods(map, &x).iter().rev() {
            for a in p.args.iter().rev() {
                if !seen.contains(a) {
                    stack.push(a.clone());
                }
            }
        }
        order.push(x);
    }
    order
}

fn copy_reachable(root: &Nt, from: &RuleMap, out: &mut RuleMap) {
    let mut stack = vec![root.clone()];
    while let Some(x) = stack.pop() {
        if out.contains_key(&x) {
            continue;
        }
        let ps = prods(from, &x).to_vec();
        for p in &ps {
            for a in &p.args {
                if !out.contains_key(a) {
                    stack.push(a.clone());
                }
            }
        }
        out.insert(x, ps);
    }
}

fn fingerprint(root: &Nt, map: &RuleMap) -> u64 {
    let mut h = DefaultHasher::new();
    root.hash(&mut h);
    for (k, v) in map {
        k.hash(&mut h);
        v.hash(&mut h);
    }
    h.finish()
}

impl TiGrammar {
    pub fn bottom() -> TiGrammar {
        TiGrammar::Bottom
    }

    pub fn top() -> TiGrammar {
        TiGrammar::Top
    }

    /// The one-rule grammar `new -> #fresh#`.
    pub fn new_grammar() -> TiGrammar {
        static NEW: OnceLock<TiGrammar> = OnceLock::new();
        NEW.get_or_init(|| {
            let mut m = RuleMap::new();
            m.insert(Nt::new_inst(), vec![Prod::leaf(Ctor::Fresh)]);
            TiGrammar::from_parts(Nt::new_inst(), m)
        })
        .clone()
    }

    fn from_parts(root: Nt, map: RuleMap) -> TiGrammar {
        let fp = fingerprint(&root, &map);
        TiGrammar::Rules(Arc::new(Rules { root, map, fp }))
    }

    /// Build a grammar from a rule set: keep what is reachable from `root`,
    /// drop productions that can never finish a tree, and collapse to ⊥
    /// when the root has nothing left.
    pub fn from_rules(root: Nt, mut map: RuleMap) -> TiGrammar {
        map.insert(Nt::new_inst(), vec![Prod::leaf(Ctor::Fresh)]);
        let order = reachable(&root, &map);
        let mut productive: HashSet<Nt> = HashSet::new();
        loop {
            let mut changed = false;
            for x in &order {
                if productive.contains(x) {
                    continue;
                }
                if prods(&map, x)
                    .iter()
                    .any(|p| p.args.iter().all(|a| productive.contains(a)))
                {
                    productive.insert(x.clone());
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if !productive.contains(&root) {
            return TiGrammar::Bottom;
        }
        let mut out = RuleMap::new();
        for x in &order {
            if !productive.contains(x) {
                continue;
            }
            let mut ps: Vec<Prod> = prods(&map, x)
                .iter()
                .filter(|p| p.args.iter().all(|a| productive.contains(a)))
                .cloned()
                .collect();
            ps.sort_by(|a, b| a.ctor.cmp(&b.ctor));
            ps.dedup_by(|a, b| a.ctor == b.ctor);
            out.insert(x.clone(), ps);
        }
        TiGrammar::from_parts(root, out)
    }

    /// Like `from_rules` but only drops unreachable non-terminals. Used for
    /// `grammar(t)`, where parameter non-terminals have no rules of their own.
    pub fn from_reachable(root: Nt, map: RuleMap) -> TiGrammar {
        let order = reachable(&root, &map);
        let mut out = RuleMap::new();
        for x in order {
            let ps = map.get(&x).cloned().unwrap_or_default();
            out.insert(x, ps);
        }
        TiGrammar::from_parts(root, out)
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, TiGrammar::Bottom)
    }

    pub fn is_top(&self) -> bool {
        matches!(self, TiGrammar::Top)
    }

    pub fn is_new(&self) -> bool {
        matches!(self, TiGrammar::Rules(r) if r.root.is_new())
    }

    pub fn root(&self) -> Option<&Nt> {
        match self {
            TiGrammar::Rules(r) => Some(&r.root),
            _ => None,
        }
    }

    pub fn rules(&self) -> Option<&RuleMap> {
        match self {
            TiGrammar::Rules(r) => Some(&r.map),
            _ => None,
        }
    }

    pub fn productions(&self, x: &Nt) -> &[Prod] {
        match self {
            TiGrammar::Rules(r) => prods(&r.map, x),
            _ => &[],
        }
    }

    pub fn root_productions(&self) -> &[Prod] {
        match self {
            TiGrammar::Rules(r) => prods(&r.map, &r.root),
            _ => &[],
        }
    }

    pub fn root_has(&self, ctor: &Ctor) -> bool {
        self.root_productions().iter().any(|p| &p.ctor == ctor)
    }

    pub fn nonterminal_count(&self) -> usize {
        self.rules().map(|m| m.len()).unwrap_or(0)
    }

    /// `subg(x, r)`: the rules reachable from `x`, rooted at `x`.
    pub fn subg(&self, x: &Nt) -> Result<TiGrammar, GrammarError> {
        let TiGrammar::Rules(r) = self else {
            return Err(GrammarError::NoRoot);
        };
        if !r.map.contains_key(x) {
            return Err(GrammarError::NotInGrammar(x.to_string()));
        }
        Ok(TiGrammar::from_rules(x.clone(), r.map.clone()))
    }

    /// True when some production outside `$ipred$` call positions is `#fresh#`,
    /// or the grammar is `new` itself.
    pub fn contains_fresh(&self) -> bool {
        let TiGrammar::Rules(r) = self else {
            return false;
        };
        r.map.values().flatten().any(|p| p.ctor == Ctor::Fresh)
    }

    /// Whether `#fresh#` is reachable without passing through an `$ipred$`.
    pub fn fresh_outside_ipred(&self) -> bool {
        let TiGrammar::Rules(r) = self else {
            return false;
        };
        if r.root.is_new() {
            return false;
        }
        let mut seen = HashSet::new();
        let mut stack = vec![r.root.clone()];
        while let Some(x) = stack.pop() {
            if !seen.insert(x.clone()) {
                continue;
            }
            for p in prods(&r.map, &x) {
                match p.ctor {
                    Ctor::Fresh => return true,
                    Ctor::IPred(_) => {}
                    _ => stack.extend(p.args.iter().cloned()),
                }
            }
        }
        false
    }

    /// Every non-terminal has at most one production per constructor.
    pub fn is_deterministic(&self) -> bool {
        let TiGrammar::Rules(r) = self else {
            return true;
        };
        r.map.values().all(|ps| {
            let mut seen = HashSet::new();
            ps.iter().all(|p| seen.insert(p.ctor.clone()))
        })
    }

    /// Rename every non-terminal through `f`, keeping the shape.
    pub fn rename(&self, f: &mut dyn FnMut(&Nt) -> Nt) -> TiGrammar {
        let TiGrammar::Rules(r) = self else {
            return self.clone();
        };
        let mut m = RuleMap::new();
        for (k, ps) in &r.map {
            let ps2 = ps
                .iter()
                .map(|p| Prod::new(p.ctor.clone(), p.args.iter().map(&mut *f).collect()))
                .collect();
            m.insert(f(k), ps2);
        }
        TiGrammar::from_parts(f(&r.root), m)
    }

    /// One production per line, root non-terminal first.
    pub fn dump(&self) -> String {
        let r = match self {
            TiGrammar::Bottom => return "bottom\n".into(),
            TiGrammar::Top => return "top\n".into(),
            TiGrammar::Rules(r) => r,
        };
        let mut out = String::new();
        let mut order = vec![r.root.clone()];
        order.extend(r.map.keys().filter(|k| **k != r.root).cloned());
        for x in order {
            for p in prods(&r.map, &x) {
                let args: Vec<String> = p.args.iter().map(|a| a.to_string()).collect();
                out.push_str(&format!("{} -> {}\n", x, p.ctor.render(&args)));
            }
        }
        out
    }

    /// Parse the compact text form used in tests:
    /// `list -> [] ; [abc|list]` one non-terminal per line, root first.
    /// Non-terminal names are simple identifiers; `new` is the new grammar.
    pub fn parse(text: &str) -> Result<TiGrammar, GrammarError> {
        let mut map = RuleMap::new();
        let mut root = None;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| GrammarError::Parse {
                line: ln + 1,
                msg: msg.to_string(),
            };
            let (lhs, rhs) = line.split_once("->").ok_or_else(|| err("expected `->`"))?;
            let lhs = Nt::named(lhs.trim());
            if root.is_none() {
                root = Some(lhs.clone());
            }
            for alt in rhs.split(';') {
                let p = parse_alt(alt.trim()).map_err(|m| err(&m))?;
                map.entry(lhs.clone()).or_default().push(p);
            }
        }
        let root = root.ok_or(GrammarError::NoRoot)?;
        Ok(TiGrammar::from_rules(root, map))
    }
}

fn parse_alt(s: &str) -> Result<Prod, String> {
    fn names(s: &str) -> Vec<Nt> {
        s.split(',')
            .map(|x| x.trim())
            .filter(|x| !x.is_empty())
            .map(Nt::named)
            .collect()
    }
    fn inner<'a>(s: &'a str, pre: &str, post: &str) -> Option<&'a str> {
        s.strip_prefix(pre).and_then(|r| r.strip_suffix(post))
    }
    if s == "[]" {
        return Ok(Prod::leaf(Ctor::fun("[]", 0)));
    }
    if let Some(body) = inner(s, "[", "]") {
        let (h, t) = body.split_once('|').ok_or("list rule needs `|`")?;
        return Ok(Prod::new(
            Ctor::fun(".", 2),
            vec![Nt::named(h.trim()), Nt::named(t.trim())],
        ));
    }
    match s {
        "#fresh#" => return Ok(Prod::leaf(Ctor::Fresh)),
        "#var#" => return Ok(Prod::leaf(Ctor::Var)),
        "$gpred$" => return Ok(Prod::leaf(Ctor::GPred)),
        _ => {}
    }
    if let Some(v) = inner(s, "$ground(", ")$") {
        return Ok(Prod::leaf(Ctor::Ground(v.into())));
    }
    if let Some(v) = inner(s, "$old(", ")$") {
        return Ok(Prod::leaf(Ctor::Old(v.into())));
    }
    if let Some(v) = inner(s, "$atomic(", ")$") {
        return Ok(Prod::leaf(Ctor::Atomic(v.into())));
    }
    if let Some(body) = inner(s, "$ipred$(", ")") {
        let args = names(body);
        if !args.len().is_multiple_of(2) {
            return Err("$ipred$ needs an even number of children".into());
        }
        return Ok(Prod::new(Ctor::IPred(args.len() / 2), args));
    }
    if s.is_empty() {
        return Err("empty alternative".into());
    }
    if let Some((f, rest)) = s.split_once('(') {
        let body = rest.strip_suffix(')').ok_or("unbalanced parenthesis")?;
        let args = names(body);
        return Ok(Prod::new(Ctor::fun(f.trim(), args.len()), args));
    }
    Ok(Prod::leaf(Ctor::fun(s, 0)))
}

impl fmt::Display for TiGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

// ---------------------------------------------------------------- ordering

type LtMemo = HashMap<(u64, u64), Vec<(TiGrammar, TiGrammar, bool)>>;

fn lt_memo() -> &'static Mutex<LtMemo> {
    static MEMO: OnceLock<Mutex<LtMemo>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

const LT_MEMO_CAP: usize = 200_000;

/// `r1 ⪯ r2`.
pub fn lt(r1: &TiGrammar, r2: &TiGrammar) -> bool {
    let (a, b) = match (r1, r2) {
        (_, TiGrammar::Top) => return true,
        (TiGrammar::Top, _) => return false,
        (TiGrammar::Bottom, _) => return true,
        (_, TiGrammar::Bottom) => return false,
        (TiGrammar::Rules(a), TiGrammar::Rules(b)) => (a, b),
    };
    if Arc::ptr_eq(a, b) {
        return true;
    }
    let key = (a.fp, b.fp);
    if let Some(hits) = lt_memo().lock().unwrap().get(&key) {
        for (x, y, res) in hits {
            if x == r1 && y == r2 {
                return *res;
            }
        }
    }
    let mut p = HashSet::new();
    let res = lt_rec(&a.root, &a.map, &b.root, &b.map, &mut p);
    let mut memo = lt_memo().lock().unwrap();
    if memo.len() > LT_MEMO_CAP {
        memo.clear();
    }
    memo.entry(key)
        .or_default()
        .push((r1.clone(), r2.clone(), res));
    res
}

fn lt_rec(x1: &Nt, m1: &RuleMap, x2: &Nt, m2: &RuleMap, p: &mut HashSet<(Nt, Nt)>) -> bool {
    let key = (x1.clone(), x2.clone());
    if p.contains(&key) {
        return true;
    }
    if x2.is_new() && !x1.is_new() {
        return false;
    }
    if x1.is_new() {
        return x2.is_new();
    }
    let r1 = prods(m1, x1);
    let r2 = prods(m2, x2);
    if let Some(v) = old_param(r1) {
        return find(r2, &Ctor::Old(v.clone())).is_some();
    }
    if let Some(v) = ground_param(r1) {
        return find(r2, &Ctor::Ground(v.clone())).is_some();
    }
    if has_gpred(r1) {
        return has_gpred(r2);
    }
    if let Some(ip1) = ipred(r1) {
        if has_gpred(r2) {
            return true;
        }
        let Some(ip2) = ipred(r2) else {
            return false;
        };
        if ip1.ctor != ip2.ctor {
            return false;
        }
        p.insert(key.clone());
        let mut ok = true;
        for i in 0..ip1.args.len() / 2 {
            let (c1, s1) = (&ip1.args[2 * i], &ip1.args[2 * i + 1]);
            let (c2, s2) = (&ip2.args[2 * i], &ip2.args[2 * i + 1]);
            if !lt_rec(c2, m2, c1, m1, p) || !lt_rec(s1, m1, s2, m2, p) {
                ok = false;
                break;
            }
        }
        p.remove(&key);
        return ok;
    }
    p.insert(key.clone());
    let mut ok = true;
    'rules: for pr1 in r1 {
        let Some(pr2) = find(r2, &pr1.ctor) else {
            ok = false;
            break;
        };
        for (a, b) in pr1.args.iter().zip(&pr2.args) {
            if !lt_rec(a, m1, b, m2, p) {
                ok = false;
                break 'rules;
            }
        }
    }
    p.remove(&key);
    ok
}

// ------------------------------------------------------------- conj / disj

/// Abstract conjunction `r1 ∧ r2`.
pub fn conj(r1: &TiGrammar, r2: &TiGrammar) -> TiGrammar {
    match (r1, r2) {
        (TiGrammar::Top, _) | (_, TiGrammar::Top) => TiGrammar::Top,
        _ if r2.is_new() => r1.clone(),
        _ if r1.is_new() => r2.clone(),
        (TiGrammar::Bottom, _) | (_, TiGrammar::Bottom) => TiGrammar::Bottom,
        (TiGrammar::Rules(a), TiGrammar::Rules(b)) => {
            if r1 == r2 {
                return r1.clone();
            }
            let mut out = RuleMap::new();
            let mut p = HashSet::new();
            match conj_rec(&a.root, &a.map, &b.root, &b.map, &mut p, &mut out) {
                Some(root) => TiGrammar::from_rules(root, out),
                None => TiGrammar::Top,
            }
        }
    }
}

/// Abstract disjunction `r1 ∨ r2`.
pub fn disj(r1: &TiGrammar, r2: &TiGrammar) -> TiGrammar {
    match (r1, r2) {
        (TiGrammar::Top, _) | (_, TiGrammar::Top) => TiGrammar::Top,
        (TiGrammar::Bottom, _) => r2.clone(),
        (_, TiGrammar::Bottom) => r1.clone(),
        (TiGrammar::Rules(a), TiGrammar::Rules(b)) => {
            if r1 == r2 {
                return r1.clone();
            }
            let mut out = RuleMap::new();
            let mut p = HashSet::new();
            match disj_rec(&a.root, &a.map, &b.root, &b.map, &mut p, &mut out) {
                Some(root) => TiGrammar::from_rules(root, out),
                None => TiGrammar::Top,
            }
        }
    }
}

fn conj_rec(
    x1: &Nt,
    m1: &RuleMap,
    x2: &Nt,
    m2: &RuleMap,
    p: &mut HashSet<Nt>,
    out: &mut RuleMap,
) -> Option<Nt> {
    if x2.is_new() {
        copy_reachable(x1, m1, out);
        return Some(x1.clone());
    }
    let name = Nt::meet(x1, x2);
    if p.contains(&name) || out.contains_key(&name) {
        return Some(name);
    }
    if x1.is_new() {
        copy_reachable(x2, m2, out);
        return Some(x2.clone());
    }
    let r1 = prods(m1, x1);
    let r2 = prods(m2, x2);
    if old_param(r1).is_some() {
        copy_reachable(x2, m2, out);
        return Some(x2.clone());
    }
    if ground_param(r1).is_some() {
        copy_reachable(x1, m1, out);
        return Some(x1.clone());
    }
    if has_gpred(r1) {
        copy_reachable(x2, m2, out);
        return Some(x2.clone());
    }
    if let Some(ip1) = ipred(r1) {
        if has_gpred(r2) {
            copy_reachable(x1, m1, out);
            return Some(x1.clone());
        }
        let Some(ip2) = ipred(r2).filter(|ip2| ip2.ctor == ip1.ctor) else {
            out.insert(name.clone(), Vec::new());
            return Some(name);
        };
        p.insert(name.clone());
        let mut args = Vec::with_capacity(ip1.args.len());
        for i in 0..ip1.args.len() / 2 {
            let c = disj_rec(&ip1.args[2 * i], m1, &ip2.args[2 * i], m2, p, out)?;
            let s = conj_rec(&ip1.args[2 * i + 1], m1, &ip2.args[2 * i + 1], m2, p, out)?;
            args.push(c);
            args.push(s);
        }
        p.remove(&name);
        out.insert(name.clone(), vec![Prod::new(ip1.ctor.clone(), args)]);
        return Some(name);
    }
    p.insert(name.clone());
    let mut rules = Vec::new();
    for pr1 in r1 {
        if let Some(pr2) = find(r2, &pr1.ctor) {
            let mut args = Vec::with_capacity(pr1.args.len());
            for (a, b) in pr1.args.iter().zip(&pr2.args) {
                args.push(conj_rec(a, m1, b, m2, p, out)?);
            }
            rules.push(Prod::new(pr1.ctor.clone(), args));
        }
    }
    p.remove(&name);
    out.insert(name.clone(), rules);
    Some(name)
}

fn disj_rec(
    x1: &Nt,
    m1: &RuleMap,
    x2: &Nt,
    m2: &RuleMap,
    p: &mut HashSet<Nt>,
    out: &mut RuleMap,
) -> Option<Nt> {
    if x1.is_new() && x2.is_new() {
        out.insert(Nt::new_inst(), vec![Prod::leaf(Ctor::Fresh)]);
        return Some(Nt::new_inst());
    }
    if x2.is_new() {
        return None;
    }
    let name = Nt::join(x1, x2);
    if p.contains(&name) || out.contains_key(&name) {
        return Some(name);
    }
    if x1.is_new() {
        return None;
    }
    let r1 = prods(m1, x1);
    let r2 = prods(m2, x2);
    let keep = |x: &Nt, m: &RuleMap, out: &mut RuleMap| {
        copy_reachable(x, m, out);
        Some(x.clone())
    };
    // An empty side is the identity of the union.
    if r2.is_empty() {
        return keep(x1, m1, out);
    }
    if r1.is_empty() {
        return keep(x2, m2, out);
    }
    if old_param(r1).is_some() {
        return keep(x1, m1, out);
    }
    if ground_param(r1).is_some() {
        return keep(x2, m2, out);
    }
    if has_gpred(r1) {
        return keep(x1, m1, out);
    }
    if let Some(ip1) = ipred(r1) {
        if has_gpred(r2) {
            return keep(x2, m2, out);
        }
        let ip2 = ipred(r2).filter(|ip2| ip2.ctor == ip1.ctor)?;
        p.insert(name.clone());
        let mut args = Vec::with_capacity(ip1.args.len());
        for i in 0..ip1.args.len() / 2 {
            let c = conj_rec(&ip1.args[2 * i], m1, &ip2.args[2 * i], m2, p, out)?;
            let s = disj_rec(&ip1.args[2 * i + 1], m1, &ip2.args[2 * i + 1], m2, p, out)?;
            args.push(c);
            args.push(s);
        }
        p.remove(&name);
        out.insert(name.clone(), vec![Prod::new(ip1.ctor.clone(), args)]);
        return Some(name);
    }
    p.insert(name.clone());
    let mut rules = Vec::new();
    for pr1 in r1 {
        if let Some(pr2) = find(r2, &pr1.ctor) {
            let mut args = Vec::with_capacity(pr1.args.len());
            for (a, b) in pr1.args.iter().zip(&pr2.args) {
                args.push(disj_rec(a, m1, b, m2, p, out)?);
            }
            rules.push(Prod::new(pr1.ctor.clone(), args));
        } else {
            for a in &pr1.args {
                copy_reachable(a, m1, out);
            }
            rules.push(pr1.clone());
        }
    }
    for pr2 in r2 {
        if find(r1, &pr2.ctor).is_none() {
            for a in &pr2.args {
                copy_reachable(a, m2, out);
            }
            rules.push(pr2.clone());
        }
    }
    p.remove(&name);
    out.insert(name.clone(), rules);
    Some(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> TiGrammar {
        TiGrammar::parse(s).unwrap()
    }

    fn r1() -> TiGrammar {
        g("list_abc -> [] ; [abc|list_abc]\nabc -> a ; b ; c")
    }

    fn r2() -> TiGrammar {
        g("even_bcd -> [] ; [bcd|odd_bcd]\nodd_bcd -> [bcd|even_bcd]\nbcd -> b ; c ; d")
    }

    #[test]
    fn root_and_subg() {
        assert_eq!(r1().root().unwrap().to_string(), "list_abc");
        let s = r1().subg(&Nt::named("abc")).unwrap();
        assert_eq!(s.root().unwrap(), &Nt::named("abc"));
        assert_eq!(s.nonterminal_count(), 1);
        assert_eq!(s.productions(&Nt::named("abc")).len(), 3);
        let odd = r2().subg(&Nt::named("odd_bcd")).unwrap();
        assert_eq!(odd.nonterminal_count(), 3);
        assert!(r1().subg(&Nt::named("zzz")).is_err());
    }

    #[test]
    fn meet_element_rule() {
        let m = conj(&r1(), &r2());
        let elem = Nt::meet(&Nt::named("abc"), &Nt::named("bcd"));
        let ctors: Vec<String> = m
            .productions(&elem)
            .iter()
            .map(|p| p.ctor.render(&[]))
            .collect();
        assert_eq!(ctors, vec!["b", "c"]);
    }

    #[test]
    fn join_element_rule() {
        let j = disj(&r1(), &r2());
        let elem = Nt::join(&Nt::named("abc"), &Nt::named("bcd"));
        assert_eq!(j.productions(&elem).len(), 4);
    }

    #[test]
    fn new_cases() {
        let n = TiGrammar::new_grammar();
        assert_eq!(conj(&n, &r1()), r1());
        assert_eq!(conj(&r1(), &n), r1());
        assert!(disj(&n, &n).is_new());
        assert!(disj(&n, &r1()).is_top());
        assert!(disj(&r1(), &n).is_top());
        assert!(lt(&n, &n));
        assert!(!lt(&r1(), &n));
        assert!(!lt(&n, &r1()));
    }

    #[test]
    fn bottom_top() {
        assert!(lt(&TiGrammar::Bottom, &r1()));
        assert!(lt(&r1(), &TiGrammar::Top));
        assert!(conj(&TiGrammar::Bottom, &r1()).is_bottom());
        assert!(conj(&r1(), &TiGrammar::Top).is_top());
        assert_eq!(disj(&TiGrammar::Bottom, &r1()), r1());
    }

    #[test]
    fn disjoint_meet_collapses() {
        let a = g("x -> a");
        let b = g("y -> b");
        assert!(conj(&a, &b).is_bottom());
    }

    #[test]
    fn ordering_lists() {
        let list = r1();
        let nelist = g("ne -> [abc|list_abc]\nlist_abc -> [] ; [abc|list_abc]\nabc -> a ; b ; c");
        assert!(lt(&nelist, &list));
        assert!(!lt(&list, &nelist));
    }

    #[test]
    fn params_and_preds() {
        let gr = g("tg -> $ground(T)$");
        let old = g("to -> $ground(T)$ ; $old(T)$");
        assert!(lt(&gr, &old));
        assert!(!lt(&old, &gr));
        assert_eq!(conj(&old, &gr), gr);
        assert_eq!(disj(&gr, &old), old);
        let gp = g("p -> $gpred$");
        let ip = g("h -> $ipred$(ab,ab,new,ab)\nab -> a ; b");
        assert!(lt(&ip, &gp));
        assert!(!lt(&gp, &ip));
        assert_eq!(conj(&gp, &ip), ip);
        assert_eq!(disj(&ip, &gp), gp);
    }

    #[test]
    fn ho_lattice() {
        let h1 = g("h1 -> $ipred$(ab,ab,new,ab)\nab -> a ; b");
        let h2 = g("h2 -> $ipred$(abc,abc,new,abc)\nabc -> a ; b ; c");
        let j = disj(&h1, &h2);
        let ip = &j.root_productions()[0];
        let call = j.subg(&ip.args[0]).unwrap();
        let succ = j.subg(&ip.args[1]).unwrap();
        assert_eq!(call.root_productions().len(), 2);
        assert_eq!(succ.root_productions().len(), 3);
        assert!(j.subg(&ip.args[2]).unwrap().is_new());
        assert!(lt(&h1, &j));
        assert!(lt(&h2, &j));
    }

    #[test]
    fn dump_root_first() {
        let d = r2().subg(&Nt::named("odd_bcd")).unwrap().dump();
        assert!(d.starts_with("odd_bcd -> [bcd|even_bcd]\n"));
    }
}
