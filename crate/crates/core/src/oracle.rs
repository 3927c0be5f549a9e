//! Brute-force semantics for ti-grammars: the set of trees of height at
//! most `d` a grammar derives, and property checks of `lt`/`conj`/`disj`
//! against it over seeded random grammars.
//!
//! Special leaves (`#var#`, `$ground(v)$`, ...) are treated as plain
//! constants here.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grammar::{self, Ctor, Nt, Prod, RuleMap, TiGrammar};

pub const MAX_DEPTH: usize = 6;
pub const TREE_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("depth {0} exceeds the enumeration limit of {MAX_DEPTH}")]
    DepthTooLarge(usize),
    #[error("enumeration exceeded the budget of {TREE_BUDGET} trees")]
    Budget,
    #[error("cannot enumerate the error grammar")]
    Top,
}

pub type TreeId = u32;

/// Hash-consed trees shared by every enumeration done through one oracle,
/// so equal trees from different grammars get equal ids.
#[derive(Default)]
pub struct Forest {
    nodes: Vec<(Ctor, Vec<TreeId>)>,
    index: HashMap<(Ctor, Vec<TreeId>), TreeId>,
}

impl Forest {
    fn intern(&mut self, ctor: &Ctor, kids: Vec<TreeId>) -> TreeId {
        let key = (ctor.clone(), kids);
        if let Some(id) = self.index.get(&key) {
            return *id;
        }
        let id = self.nodes.len() as TreeId;
        self.nodes.push(key.clone());
        self.index.insert(key, id);
        id
    }

    pub fn render(&self, id: TreeId) -> String {
        let (ctor, kids) = &self.nodes[id as usize];
        let args: Vec<String> = kids.iter().map(|k| self.render(*k)).collect();
        ctor.render(&args)
    }

    pub fn height(&self, id: TreeId) -> usize {
        let (_, kids) = &self.nodes[id as usize];
        1 + kids.iter().map(|k| self.height(*k)).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `{ t | root ⇒* t, height(t) ≤ depth }` with trees held in a forest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedLanguage {
    pub depth: usize,
    pub trees: BTreeSet<TreeId>,
}

#[derive(Default)]
pub struct Oracle {
    pub forest: Forest,
}

impl Oracle {
    pub fn new() -> Oracle {
        Oracle::default()
    }

    pub fn enumerate(
        &mut self,
        r: &TiGrammar,
        depth: usize,
    ) -> Result<BoundedLanguage, OracleError> {
        if depth > MAX_DEPTH {
            return Err(OracleError::DepthTooLarge(depth));
        }
        let rules = match r {
            TiGrammar::Top => return Err(OracleError::Top),
            TiGrammar::Bottom => {
                return Ok(BoundedLanguage {
                    depth,
                    trees: BTreeSet::new(),
                })
            }
            TiGrammar::Rules(_) => r.rules().expect("rules"),
        };
        let root = r.root().expect("root").clone();
        let mut level: HashMap<&Nt, Vec<TreeId>> = rules.keys().map(|k| (k, Vec::new())).collect();
        let mut total = 0usize;
        for _ in 0..depth {
            let mut next: HashMap<&Nt, Vec<TreeId>> = HashMap::new();
            for (x, ps) in rules {
                let mut set: BTreeSet<TreeId> = BTreeSet::new();
                for p in ps {
                    self.expand(p, &level, &mut set, &mut total)?;
                }
                next.insert(x, set.into_iter().collect());
            }
            level = next;
        }
        Ok(BoundedLanguage {
            depth,
            trees: level
                .remove(&root)
                .unwrap_or_default()
                .into_iter()
                .collect(),
        })
    }

    fn expand(
        &mut self,
        p: &Prod,
        level: &HashMap<&Nt, Vec<TreeId>>,
        into: &mut BTreeSet<TreeId>,
        total: &mut usize,
    ) -> Result<(), OracleError> {
        let empty = Vec::new();
        let kids: Vec<&Vec<TreeId>> = p
            .args
            .iter()
            .map(|a| level.get(a).unwrap_or(&empty))
            .collect();
        if kids.iter().any(|k| k.is_empty()) {
            return Ok(());
        }
        let mut idx = vec![0usize; kids.len()];
        loop {
            let args: Vec<TreeId> = idx.iter().zip(&kids).map(|(i, k)| k[*i]).collect();
            let t = self.forest.intern(&p.ctor, args);
            if into.insert(t) {
                *total += 1;
                if *total > TREE_BUDGET {
                    return Err(OracleError::Budget);
                }
            }
            // odometer over the child sets
            let mut pos = kids.len();
            loop {
                if pos == 0 {
                    return Ok(());
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < kids[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    /// The bounded language of `conj(r1, r2)` equals the intersection.
    pub fn check_meet(
        &mut self,
        r1: &TiGrammar,
        r2: &TiGrammar,
        d: usize,
    ) -> Result<bool, OracleError> {
        let m = grammar::conj(r1, r2);
        let lm = self.enumerate(&m, d)?;
        let l1 = self.enumerate(r1, d)?;
        let l2 = self.enumerate(r2, d)?;
        let inter: BTreeSet<TreeId> = l1.trees.intersection(&l2.trees).copied().collect();
        Ok(lm.trees == inter)
    }

    /// The bounded language of `disj(r1, r2)` contains the union.
    pub fn check_join(
        &mut self,
        r1: &TiGrammar,
        r2: &TiGrammar,
        d: usize,
    ) -> Result<bool, OracleError> {
        let j = grammar::disj(r1, r2);
        if j.is_top() {
            return Ok(false);
        }
        let lj = self.enumerate(&j, d)?;
        let l1 = self.enumerate(r1, d)?;
        let l2 = self.enumerate(r2, d)?;
        Ok(l1.trees.is_subset(&lj.trees) && l2.trees.is_subset(&lj.trees))
    }

    /// `lt(r1, r2)` implies inclusion of the bounded languages at every
    /// depth up to `d`.
    pub fn check_lt(
        &mut self,
        r1: &TiGrammar,
        r2: &TiGrammar,
        d: usize,
    ) -> Result<bool, OracleError> {
        if !grammar::lt(r1, r2) {
            return Ok(true);
        }
        for k in 1..=d {
            let l1 = self.enumerate(r1, k)?;
            let l2 = self.enumerate(r2, k)?;
            if !l1.trees.is_subset(&l2.trees) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn render_all(&self, l: &BoundedLanguage) -> BTreeSet<String> {
        l.trees.iter().map(|t| self.forest.render(*t)).collect()
    }
}

// -------------------------------------------------------- random grammars

/// A signature of tree constructors shared by the grammars of one sample.
#[derive(Debug, Clone)]
pub struct Signature {
    pub ctors: Vec<(Arc<str>, usize)>,
}

pub fn random_signature(rng: &mut impl Rng) -> Signature {
    let n = rng.gen_range(1..=4);
    let ctors = (0..n)
        .map(|i| {
            let arity = if i == 0 { 0 } else { rng.gen_range(0..=2) };
            (Arc::from(format!("f{i}")), arity)
        })
        .collect();
    Signature { ctors }
}

/// A deterministic grammar over `sig` with at most five non-terminals.
/// Non-terminal names carry `tag` so grammars from different calls never
/// share a name.
pub fn random_grammar(rng: &mut impl Rng, sig: &Signature, tag: &str) -> TiGrammar {
    let n = rng.gen_range(1..=5);
    let names: Vec<Nt> = (0..n).map(|i| Nt::named(&format!("{tag}_{i}"))).collect();
    let mut map = RuleMap::new();
    for x in &names {
        let mut ps = Vec::new();
        for (f, arity) in &sig.ctors {
            if rng.gen_bool(0.5) {
                let args = (0..*arity)
                    .map(|_| names[rng.gen_range(0..n)].clone())
                    .collect();
                ps.push(Prod::new(Ctor::Fun(f.clone(), *arity), args));
            }
        }
        if ps.is_empty() {
            let (f, arity) = &sig.ctors[rng.gen_range(0..sig.ctors.len())];
            let args = (0..*arity)
                .map(|_| names[rng.gen_range(0..n)].clone())
                .collect();
            ps.push(Prod::new(Ctor::Fun(f.clone(), *arity), args));
        }
        map.insert(x.clone(), ps);
    }
    TiGrammar::from_rules(names[0].clone(), map)
}

pub fn sample_rng(seed: u64, sample: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ sample.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

// ----------------------------------------------------------- property suite

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub depth: usize,
    pub samples: u64,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            depth: 4,
            samples: 1000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PropertyCount {
    pub name: &'static str,
    pub passed: u64,
    pub failed: u64,
    /// Sample index of the first failure, if any.
    pub first_failure: Option<u64>,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub config_depth: usize,
    pub samples: u64,
    pub seed: u64,
    pub properties: Vec<PropertyCount>,
    pub errors: Vec<(u64, String)>,
}

impl SuiteReport {
    pub fn failures(&self) -> u64 {
        self.properties.iter().map(|p| p.failed).sum::<u64>() + self.errors.len() as u64
    }
}

pub const PROPERTIES: [&str; 7] = [
    "meet-exact",
    "join-superset",
    "join-upper-bound",
    "lt-implies-inclusion",
    "lt-reflexive",
    "lt-transitive",
    "deterministic",
];

/// Run every property on one sample; `Ok` holds a pass flag per property.
pub fn check_sample(seed: u64, sample: u64, depth: usize) -> Result<[bool; 7], OracleError> {
    let mut rng = sample_rng(seed, sample);
    let sig = random_signature(&mut rng);
    let a = random_grammar(&mut rng, &sig, &format!("s{sample}a"));
    let b = random_grammar(&mut rng, &sig, &format!("s{sample}b"));
    let c = random_grammar(&mut rng, &sig, &format!("s{sample}c"));
    let mut o = Oracle::new();

    let meet = o.check_meet(&a, &b, depth)?;
    let join = o.check_join(&a, &b, depth)?;
    let j = grammar::disj(&a, &b);
    let upper = !j.is_top() && grammar::lt(&a, &j) && grammar::lt(&b, &j);

    let m = grammar::conj(&a, &b);
    let mut incl = true;
    for (x, y) in [(&a, &b), (&b, &a), (&m, &a), (&a, &j), (&c, &j)] {
        incl &= o.check_lt(x, y, depth)?;
    }

    let refl = [&a, &b, &c, &m, &j].iter().all(|x| grammar::lt(x, x));

    // chains built so the premises usually hold, plus the raw triple
    let jc = grammar::disj(&j, &c);
    let mut trans = true;
    for (x, y, z) in [(&a, &b, &c), (&m, &a, &j), (&a, &j, &jc), (&m, &j, &jc)] {
        if grammar::lt(x, y) && grammar::lt(y, z) && !grammar::lt(x, z) {
            trans = false;
        }
    }

    let det = [&a, &b, &c, &m, &j, &jc]
        .iter()
        .all(|x| x.is_deterministic());
    Ok([meet, join, upper, incl, refl, trans, det])
}

pub fn run_suite(cfg: &SuiteConfig) -> SuiteReport {
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(16) as u64;
    let results: Vec<(u64, Result<[bool; 7], OracleError>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    (t..cfg.samples)
                        .step_by(threads as usize)
                        .map(|i| (i, check_sample(cfg.seed, i, cfg.depth)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut all: Vec<_> = handles
            .into_iter()
            .flat_map(|h| h.join().unwrap())
            .collect();
        all.sort_by_key(|(i, _)| *i);
        all
    });
    let mut report = SuiteReport {
        config_depth: cfg.depth,
        samples: cfg.samples,
        seed: cfg.seed,
        properties: PROPERTIES
            .iter()
            .map(|n| PropertyCount {
                name: n,
                ..Default::default()
            })
            .collect(),
        errors: Vec::new(),
    };
    for (i, r) in results {
        match r {
            Ok(flags) => {
                for (p, ok) in report.properties.iter_mut().zip(flags) {
                    if ok {
                        p.passed += 1;
                    } else {
                        p.failed += 1;
                        p.first_failure.get_or_insert(i);
                    }
                }
            }
            Err(e) => report.errors.push((i, e.to_string())),
        }
    }
    report
}
