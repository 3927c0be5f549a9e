//! Ti-grammars from (type, instantiation) pairs, and ti-states.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use thiserror::Error;

use crate::frontend::{
    expand::BUILTIN_TYPES, Alt, BaseInst, InstBody, InstExpr, ModeExpr, Program, TypeBody, TypeExpr,
};
use crate::grammar::{self, Ctor, Nt, Prod, RuleMap, TiGrammar};

/// Distinct `ti(t,i)` pairs one `rt` call may create.
pub const RT_BUDGET: usize = 10_000;
/// Non-terminals `grammar(t)` may create before the type counts as non-regular.
pub const TYPE_BUDGET: usize = 2_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TiError {
    #[error("type {0} is not regular: its grammar keeps growing")]
    NonRegularType(String),
    #[error("instantiation {0} is not regular: its definition keeps growing")]
    NonRegularInst(String),
    #[error("rt({0}, {1}) needs more than {RT_BUDGET} ti non-terminals")]
    Budget(String, String),
    #[error("ti-states over different variables: {0}")]
    DomainMismatch(String),
}

#[derive(Clone, Debug)]
pub struct TypeInfo {
    pub params: Vec<String>,
    pub alts: Vec<Alt<TypeExpr>>,
    pub solver: bool,
    /// Built-in or abstract: values are opaque and compared by type.
    pub atomic: bool,
}

/// A constructor named by an instantiation but missing from the type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DroppedCtor {
    pub inst: String,
    pub ty: String,
    pub ctor: String,
    pub arity: usize,
}

type DefKey = (String, usize);
/// Parameters and alternatives of an instantiation definition.
type InstEntry = (Vec<String>, Vec<Alt<InstExpr>>);
type RtCache = HashMap<(TypeExpr, InstExpr), (TiGrammar, Vec<DroppedCtor>)>;

/// Type and instantiation definitions, with an `rt` cache.
pub struct Defs {
    types: HashMap<DefKey, TypeInfo>,
    insts: HashMap<DefKey, InstEntry>,
    cache: Mutex<RtCache>,
}

struct RtRun<'a> {
    defs: &'a Defs,
    out: RuleMap,
    pairs: usize,
    dropped: Vec<DroppedCtor>,
}

impl Defs {
    /// Build the tables and reject non-regular type or instantiation definitions.
    pub fn new(p: &Program) -> Result<Defs, TiError> {
        let mut types = HashMap::new();
        for b in BUILTIN_TYPES {
            types.insert(
                (b.to_string(), 0),
                TypeInfo {
                    params: Vec::new(),
                    alts: Vec::new(),
                    solver: false,
                    atomic: true,
                },
            );
        }
        for t in &p.typedefs {
            let (alts, atomic) = match &t.body {
                TypeBody::Alts(a) => (a.clone(), false),
                TypeBody::Abstract => (Vec::new(), true),
                TypeBody::Equiv(_) => continue,
            };
            types.insert(
                (t.name.clone(), t.params.len()),
                TypeInfo {
                    params: t.params.clone(),
                    alts,
                    solver: t.is_solver,
                    atomic,
                },
            );
        }
        let mut insts = HashMap::new();
        for d in &p.instdefs {
            if let InstBody::Alts(a) = &d.body {
                insts.insert(
                    (d.name.clone(), d.params.len()),
                    (d.params.clone(), a.clone()),
                );
            }
        }
        let defs = Defs {
            types,
            insts,
            cache: Mutex::new(HashMap::new()),
        };
        for t in &p.typedefs {
            if matches!(t.body, TypeBody::Alts(_)) {
                let head = TypeExpr::App(
                    t.name.clone(),
                    t.params
                        .iter()
                        .map(|v| TypeExpr::Param(v.clone()))
                        .collect(),
                );
                defs.grammar_of_type(&head)?;
            }
        }
        for d in &p.instdefs {
            if matches!(d.body, InstBody::Alts(_)) {
                let head = InstExpr::App(
                    d.name.clone(),
                    d.params
                        .iter()
                        .map(|v| InstExpr::Param(v.clone()))
                        .collect(),
                );
                defs.check_inst_regular(&head)?;
            }
        }
        Ok(defs)
    }

    pub fn type_info(&self, t: &TypeExpr) -> Option<&TypeInfo> {
        match t {
            TypeExpr::App(n, args) => self.types.get(&(n.clone(), args.len())),
            _ => None,
        }
    }

    pub fn is_solver(&self, t: &TypeExpr) -> bool {
        self.type_info(t).is_some_and(|i| i.solver)
    }

    pub fn is_atomic(&self, t: &TypeExpr) -> bool {
        self.type_info(t).is_some_and(|i| i.atomic)
    }

    /// `rules(t)`: the alternatives of `t` with its parameters substituted.
    pub fn type_rules(&self, t: &TypeExpr) -> Vec<Alt<TypeExpr>> {
        let TypeExpr::App(_, args) = t else {
            return Vec::new();
        };
        let Some(info) = self.type_info(t) else {
            return Vec::new();
        };
        let theta: BTreeMap<String, TypeExpr> = info
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        info.alts
            .iter()
            .map(|a| Alt {
                ctor: a.ctor.clone(),
                args: a.args.iter().map(|x| x.subst(&theta)).collect(),
            })
            .collect()
    }

    /// `rules(i)` for a user instantiation constructor.
    pub fn inst_rules(&self, i: &InstExpr) -> Option<Vec<Alt<InstExpr>>> {
        let InstExpr::App(n, args) = i else {
            return None;
        };
        let (params, alts) = self.insts.get(&(n.clone(), args.len()))?;
        let theta: BTreeMap<String, InstExpr> =
            params.iter().cloned().zip(args.iter().cloned()).collect();
        Some(
            alts.iter()
                .map(|a| Alt {
                    ctor: a.ctor.clone(),
                    args: a.args.iter().map(|x| x.subst(&theta)).collect(),
                })
                .collect(),
        )
    }

    /// `grammar(t)`: one non-terminal per type expression reachable from `t`.
    /// Parameters appear as non-terminals without rules.
    pub fn grammar_of_type(&self, t: &TypeExpr) -> Result<TiGrammar, TiError> {
        let mut map = RuleMap::new();
        let mut stack = vec![t.clone()];
        while let Some(ty) = stack.pop() {
            let name = Nt::named(&ty.to_string());
            if map.contains_key(&name) {
                continue;
            }
            if map.len() >= TYPE_BUDGET {
                return Err(TiError::NonRegularType(t.to_string()));
            }
            let mut prods = Vec::new();
            if self.is_atomic(&ty) {
                prods.push(Prod::leaf(Ctor::Atomic(ty.to_string().into())));
            }
            for alt in self.type_rules(&ty) {
                let kids = alt.args.iter().map(|a| Nt::named(&a.to_string())).collect();
                prods.push(Prod::new(Ctor::fun(&alt.ctor, alt.args.len()), kids));
                stack.extend(alt.args.iter().cloned());
            }
            map.insert(name, prods);
        }
        Ok(TiGrammar::from_reachable(Nt::named(&t.to_string()), map))
    }

    fn check_inst_regular(&self, i: &InstExpr) -> Result<(), TiError> {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![i.clone()];
        while let Some(x) = stack.pop() {
            if !seen.insert(x.clone()) {
                continue;
            }
            if seen.len() > TYPE_BUDGET {
                return Err(TiError::NonRegularInst(i.to_string()));
            }
            if let Some(alts) = self.inst_rules(&x) {
                for a in alts {
                    stack.extend(a.args);
                }
            }
        }
        Ok(())
    }

    /// `base(t, b)`.
    pub fn base(&self, t: &TypeExpr, b: BaseInst) -> TiGrammar {
        self.rt(t, &InstExpr::Base(b)).unwrap_or(TiGrammar::Top)
    }

    /// `rt(t, i)`; ⊤ when `i` does not describe values of `t`.
    pub fn rt(&self, t: &TypeExpr, i: &InstExpr) -> Result<TiGrammar, TiError> {
        self.rt_with_lints(t, i).map(|(g, _)| g)
    }

    /// `rt(t, i)` plus the instantiation constructors that had no match in the type.
    pub fn rt_with_lints(
        &self,
        t: &TypeExpr,
        i: &InstExpr,
    ) -> Result<(TiGrammar, Vec<DroppedCtor>), TiError> {
        let key = (t.clone(), i.clone());
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let mut run = RtRun {
            defs: self,
            out: RuleMap::new(),
            pairs: 0,
            dropped: Vec::new(),
        };
        let g = match run.rt(t, i)? {
            None => TiGrammar::Top,
            Some(root) => TiGrammar::from_rules(root, run.out),
        };
        run.dropped.sort();
        run.dropped.dedup();
        let res = (g, run.dropped);
        self.cache.lock().unwrap().insert(key, res.clone());
        Ok(res)
    }
}

impl RtRun<'_> {
    fn start(&mut self, name: &Nt, t: &TypeExpr, i: &InstExpr) -> Result<bool, TiError> {
        if self.out.contains_key(name) {
            return Ok(false);
        }
        self.pairs += 1;
        if self.pairs > RT_BUDGET {
            return Err(TiError::Budget(t.to_string(), i.to_string()));
        }
        self.out.insert(name.clone(), Vec::new());
        Ok(true)
    }

    /// `None` is ⊤.
    fn rt(&mut self, t: &TypeExpr, i: &InstExpr) -> Result<Option<Nt>, TiError> {
        match i {
            InstExpr::Base(b) => self.base(t, *b),
            InstExpr::Param(_) => Ok(None),
            InstExpr::Pred(modes, _) => {
                let TypeExpr::Pred(arg_types) = t else {
                    return Ok(None);
                };
                if arg_types.len() != modes.len() {
                    return Ok(None);
                }
                let name = Nt::ti(&t.to_string(), &i.to_string());
                if !self.start(&name, t, i)? {
                    return Ok(Some(name));
                }
                let mut kids = Vec::new();
                for (ty, m) in arg_types.iter().zip(modes) {
                    let (c, s) = match m {
                        ModeExpr::Arrow(c, s) => (c, s),
                        ModeExpr::Named(..) => return Ok(None),
                    };
                    let Some(xc) = self.rt(ty, c)? else {
                        return Ok(None);
                    };
                    let Some(xs) = self.rt(ty, s)? else {
                        return Ok(None);
                    };
                    kids.push(xc);
                    kids.push(xs);
                }
                self.out.insert(
                    name.clone(),
                    vec![Prod::new(Ctor::IPred(modes.len()), kids)],
                );
                Ok(Some(name))
            }
            InstExpr::App(..) => {
                if matches!(t, TypeExpr::Param(_) | TypeExpr::Pred(_)) || self.defs.is_atomic(t) {
                    return Ok(None);
                }
                let Some(ialts) = self.defs.inst_rules(i) else {
                    return Ok(None);
                };
                let name = Nt::ti(&t.to_string(), &i.to_string());
                if !self.start(&name, t, i)? {
                    return Ok(Some(name));
                }
                let talts = self.defs.type_rules(t);
                let mut prods = Vec::new();
                for ia in &ialts {
                    let Some(ta) = talts
                        .iter()
                        .find(|ta| ta.ctor == ia.ctor && ta.args.len() == ia.args.len())
                    else {
                        self.dropped.push(DroppedCtor {
                            inst: i.to_string(),
                            ty: t.to_string(),
                            ctor: ia.ctor.clone(),
                            arity: ia.args.len(),
                        });
                        continue;
                    };
                    let mut kids = Vec::new();
                    for (tj, ij) in ta.args.iter().zip(&ia.args) {
                        let Some(x) = self.rt(tj, ij)? else {
                            return Ok(None);
                        };
                        kids.push(x);
                    }
                    prods.push(Prod::new(Ctor::fun(&ia.ctor, kids.len()), kids));
                }
                self.out.insert(name.clone(), prods);
                Ok(Some(name))
            }
        }
    }

    fn base(&mut self, t: &TypeExpr, b: BaseInst) -> Result<Option<Nt>, TiError> {
        if b == BaseInst::New {
            return Ok(Some(Nt::new_inst()));
        }
        let old = b == BaseInst::Old;
        match t {
            TypeExpr::Param(v) => {
                let name = Nt::ti(v, b.name());
                if self.start(&name, t, &InstExpr::Base(b))? {
                    let mut prods = vec![Prod::leaf(Ctor::Ground(v.as_str().into()))];
                    if old {
                        prods.push(Prod::leaf(Ctor::Old(v.as_str().into())));
                    }
                    self.out.insert(name.clone(), prods);
                }
                Ok(Some(name))
            }
            TypeExpr::Pred(_) => {
                let name = Nt::ti(&t.to_string(), "ground");
                if self.start(&name, t, &InstExpr::Base(BaseInst::Ground))? {
                    self.out.insert(name.clone(), vec![Prod::leaf(Ctor::GPred)]);
                }
                Ok(Some(name))
            }
            TypeExpr::App(..) => {
                let name = Nt::ti(&t.to_string(), b.name());
                if !self.start(&name, t, &InstExpr::Base(b))? {
                    return Ok(Some(name));
                }
                let mut prods = Vec::new();
                if self.defs.is_atomic(t) {
                    prods.push(Prod::leaf(Ctor::Atomic(t.to_string().into())));
                }
                for alt in self.defs.type_rules(t) {
                    let mut kids = Vec::new();
                    for a in &alt.args {
                        match self.base(a, b)? {
                            Some(x) => kids.push(x),
                            None => return Ok(None),
                        }
                    }
                    prods.push(Prod::new(Ctor::fun(&alt.ctor, kids.len()), kids));
                }
                if old && self.defs.is_solver(t) {
                    prods.push(Prod::leaf(Ctor::Var));
                }
                self.out.insert(name.clone(), prods);
                Ok(Some(name))
            }
        }
    }
}

/// Map from program variables to ti-grammars.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TiState {
    vars: BTreeMap<String, TiGrammar>,
}

impl TiState {
    pub fn new() -> TiState {
        TiState::default()
    }

    pub fn get(&self, v: &str) -> &TiGrammar {
        self.vars
            .get(v)
            .unwrap_or_else(|| panic!("variable {v} missing from ti-state"))
    }

    pub fn try_get(&self, v: &str) -> Option<&TiGrammar> {
        self.vars.get(v)
    }

    pub fn set(&mut self, v: &str, g: TiGrammar) {
        self.vars.insert(v.to_string(), g);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &TiGrammar)> {
        self.vars.iter()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn any_bottom(&self) -> bool {
        self.vars.values().any(|g| g.is_bottom())
    }

    pub fn top_vars(&self) -> Vec<&str> {
        self.vars
            .iter()
            .filter(|(_, g)| g.is_top())
            .map(|(v, _)| v.as_str())
            .collect()
    }

    pub fn all_bottom(&self) -> TiState {
        TiState {
            vars: self
                .vars
                .keys()
                .map(|k| (k.clone(), TiGrammar::Bottom))
                .collect(),
        }
    }

    fn same_domain(&self, other: &TiState) -> Result<(), TiError> {
        if self.vars.len() == other.vars.len() && self.vars.keys().eq(other.vars.keys()) {
            Ok(())
        } else {
            let a: Vec<&String> = self.vars.keys().collect();
            let b: Vec<&String> = other.vars.keys().collect();
            Err(TiError::DomainMismatch(format!("{a:?} vs {b:?}")))
        }
    }
}

pub fn state_conj(s1: &TiState, s2: &TiState) -> Result<TiState, TiError> {
    s1.same_domain(s2)?;
    Ok(TiState {
        vars: s1
            .vars
            .iter()
            .map(|(k, g)| (k.clone(), grammar::conj(g, &s2.vars[k])))
            .collect(),
    })
}

pub fn state_disj(s1: &TiState, s2: &TiState) -> Result<TiState, TiError> {
    s1.same_domain(s2)?;
    Ok(TiState {
        vars: s1
            .vars
            .iter()
            .map(|(k, g)| (k.clone(), grammar::disj(g, &s2.vars[k])))
            .collect(),
    })
}

pub fn state_lt(s1: &TiState, s2: &TiState) -> Result<bool, TiError> {
    s1.same_domain(s2)?;
    Ok(s1.vars.iter().all(|(k, g)| grammar::lt(g, &s2.vars[k])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{expand_equivalences, parse_program};

    fn defs(src: &str) -> Defs {
        Defs::new(&expand_equivalences(parse_program(src).unwrap()).unwrap()).unwrap()
    }

    fn ty(s: &str) -> TypeExpr {
        let src = format!(":- pred p({s}).\n");
        parse_program(&src).unwrap().preds[0].arg_types[0].clone()
    }

    fn inst(s: &str) -> InstExpr {
        let src = format!(":- pred p(int).\n:- mode p({s} -> {s}).\n");
        let p = parse_program(&src).unwrap();
        p.preds[0].modes[0].args[0].as_pair().unwrap().0.clone()
    }

    const LISTS: &str = ":- typedef abc -> a ; b ; c.\n\
        :- typedef habc -> a ; b ; c deriving solver.\n\
        :- typedef list(T) -> [] ; [T | list(T)].\n\
        :- typedef hlist(T) -> [] ; [T | hlist(T)] deriving solver.\n\
        :- instdef list(I) -> ([] ; [I|list(I)]).\n\
        :- instdef nelist(I) -> [I|list(I)].\n";

    #[test]
    fn parameter_with_structure_is_top() {
        let d = defs(LISTS);
        assert!(d.rt(&ty("T"), &inst("nelist(ground)")).unwrap().is_top());
    }

    #[test]
    fn nelist_ground_over_parameter() {
        let d = defs(LISTS);
        let g = d.rt(&ty("list(T)"), &inst("nelist(ground)")).unwrap();
        let dump = g.dump();
        assert!(dump
            .starts_with("ti(list(T),nelist(ground)) -> [ti(T,ground)|ti(list(T),list(ground))]"));
        assert!(dump.contains("ti(T,ground) -> $ground(T)$"));
    }

    #[test]
    fn var_only_on_solver_nonterminals() {
        let d = defs(LISTS);
        let g = d.base(&ty("hlist(abc)"), BaseInst::Old);
        assert!(g.root_has(&Ctor::Var));
        let elem = g.subg(&Nt::ti("abc", "old")).unwrap();
        assert!(!elem.root_has(&Ctor::Var));
        let g = d.base(&ty("list(habc)"), BaseInst::Old);
        assert!(!g.root_has(&Ctor::Var));
        assert!(g.subg(&Nt::ti("habc", "old")).unwrap().root_has(&Ctor::Var));
    }

    #[test]
    fn non_regular_type_rejected() {
        let p = parse_program(":- typedef erk(T) -> node(erk(list(T)), T).\n:- typedef list(T) -> [] ; [T|list(T)].\n").unwrap();
        let e = Defs::new(&expand_equivalences(p).unwrap()).err().unwrap();
        assert!(matches!(e, TiError::NonRegularType(_)));
    }

    #[test]
    fn dropped_constructor_reported() {
        let d = defs(&format!("{LISTS}:- instdef ab -> a ; d.\n"));
        let (g, lints) = d.rt_with_lints(&ty("abc"), &inst("ab")).unwrap();
        assert_eq!(g.root_productions().len(), 1);
        assert_eq!(lints.len(), 1);
        assert_eq!(lints[0].ctor, "d");
    }

    #[test]
    fn state_ops_pointwise() {
        let d = defs(LISTS);
        let mut s = TiState::new();
        s.set("X", d.base(&ty("abc"), BaseInst::Ground));
        let mut n = TiState::new();
        n.set("X", TiGrammar::new_grammar());
        assert_eq!(state_conj(&s, &n).unwrap(), s);
        assert!(state_disj(&s, &n).unwrap().get("X").is_top());
        assert!(state_lt(&s, &s).unwrap());
        let mut other = TiState::new();
        other.set("Y", TiGrammar::new_grammar());
        assert!(state_conj(&s, &other).is_err());
    }
}
