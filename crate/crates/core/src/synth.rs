//! Seeded generator of well-typed mini-HAL programs, for scale and property tests.
//!
//! Bodies are produced in a data-flow order that is mode-correct for the first
//! mode and then shuffled, so the checker has to recover an order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRELUDE: &str = "\
:- typedef abc -> a ; b ; c.
:- typedef list(T) -> ([] ; [T|list(T)]).
:- typedef cint deriving solver.
:- instdef list(I) -> ([] ; [I|list(I)]).
:- instdef nelist(I) -> [I|list(I)].

:- pred +(int,int,int).
:- mode +(in,in,out) is det.
:- mode +(out,in,in) is det.
:- mode +(in,out,in) is det.

:- pred >(int,int).
:- mode >(in,in) is semidet.

:- pred eqc(cint,cint).
:- mode eqc(oo,oo) is semidet.
";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ty {
    Abc,
    Int,
    List,
    Cint,
}

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Abc => "abc",
            Ty::Int => "int",
            Ty::List => "list(abc)",
            Ty::Cint => "cint",
        }
    }
}

struct PredSig {
    name: String,
    args: Vec<(Ty, bool)>,
}

struct Body<'r> {
    rng: &'r mut ChaCha8Rng,
    bound: Vec<(String, Ty)>,
    items: Vec<String>,
    literals: usize,
    next: usize,
}

impl Body<'_> {
    fn local(&mut self) -> String {
        self.next += 1;
        format!("L{}", self.next)
    }

    fn pick(&mut self, t: Ty) -> Option<String> {
        let cands: Vec<&String> = self
            .bound
            .iter()
            .filter(|(_, u)| *u == t)
            .map(|(v, _)| v)
            .collect();
        cands.choose(self.rng).map(|v| v.to_string())
    }

    fn push(&mut self, item: String, lits: usize) {
        self.items.push(item);
        self.literals += lits;
    }

    /// A bound variable of type `t`, constructing one if needed.
    fn source(&mut self, t: Ty) -> String {
        if let Some(v) = self.pick(t) {
            if self.rng.gen_bool(0.8) {
                return v;
            }
        }
        let z = self.local();
        let rhs = self.constant_term(t);
        self.push(format!("{z} = {rhs}"), 1);
        self.bound.push((z.clone(), t));
        z
    }

    fn constant_term(&mut self, t: Ty) -> String {
        match t {
            Ty::Abc => ["a", "b", "c"].choose(self.rng).unwrap().to_string(),
            Ty::Int => self.rng.gen_range(0..10).to_string(),
            Ty::List => {
                if self.rng.gen_bool(0.5) {
                    "[]".into()
                } else {
                    let h = self.source(Ty::Abc);
                    let tl = self.source(Ty::List);
                    format!("[{h}|{tl}]")
                }
            }
            Ty::Cint => unreachable!("solver values are never constructed"),
        }
    }

    fn step(&mut self, earlier: &[PredSig]) {
        match self.rng.gen_range(0..9) {
            0 => {
                if let Some(l) = self.pick(Ty::List) {
                    let (h, t) = (self.local(), self.local());
                    self.push(format!("{l} = [{h}|{t}]"), 1);
                    self.bound.push((h, Ty::Abc));
                    self.bound.push((t, Ty::List));
                }
            }
            1 => {
                let h = self.source(Ty::Abc);
                let t = self.source(Ty::List);
                let z = self.local();
                self.push(format!("{z} = [{h}|{t}]"), 1);
                self.bound.push((z, Ty::List));
            }
            2 => {
                let (x, y) = (self.source(Ty::Int), self.source(Ty::Int));
                let z = self.local();
                let lit = match self.rng.gen_range(0..3) {
                    0 => format!("+({x}, {y}, {z})"),
                    1 => format!("+({z}, {y}, {x})"),
                    _ => format!("+({x}, {z}, {y})"),
                };
                self.push(lit, 1);
                self.bound.push((z, Ty::Int));
            }
            3 => {
                let (x, y) = (self.source(Ty::Int), self.source(Ty::Int));
                self.push(format!("{x} > {y}"), 1);
            }
            4 if !earlier.is_empty() => {
                let callee = earlier.choose(self.rng).unwrap();
                let mut args = Vec::new();
                let mut outs = Vec::new();
                for &(t, is_in) in &callee.args {
                    if is_in {
                        args.push(self.source(t));
                    } else {
                        let z = self.local();
                        outs.push((z.clone(), t));
                        args.push(z);
                    }
                }
                self.push(format!("{}({})", callee.name, args.join(", ")), 1);
                self.bound.extend(outs);
            }
            5 => {
                let t = *[Ty::Abc, Ty::Int, Ty::List].choose(self.rng).unwrap();
                if let (Some(x), Some(y)) = (self.pick(t), self.pick(t)) {
                    if x != y {
                        self.push(format!("{x} = {y}"), 1);
                    }
                }
            }
            6 => {
                let (x, y) = (self.local(), self.local());
                self.push(format!("eqc({x}, {y})"), 1);
                self.bound.push((x, Ty::Cint));
                self.bound.push((y, Ty::Cint));
            }
            7 => {
                let x = self.source(Ty::Abc);
                let (k1, k2) = ("a", if self.rng.gen_bool(0.5) { "b" } else { "c" });
                self.push(format!("( {x} = {k1} ; {x} = {k2} )"), 2);
            }
            _ => {
                let x = self.source(Ty::Abc);
                let z = self.local();
                let k = ["a", "b", "c"].choose(self.rng).unwrap();
                self.push(format!("( {x} = {k} -> {z} = b ; {z} = c )"), 3);
                self.bound.push((z, Ty::Abc));
            }
        }
    }
}

/// Source text of a program with at most `max_literals` body literals.
pub fn program(seed: u64, max_literals: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from(PRELUDE);
    let mut sigs: Vec<PredSig> = Vec::new();
    let mut total = 0;
    for k in 0.. {
        let arity = rng.gen_range(1..=3);
        let args: Vec<(Ty, bool)> = (0..arity)
            .map(|_| {
                let t = *[Ty::Abc, Ty::Int, Ty::List].choose(&mut rng).unwrap();
                (t, rng.gen_bool(0.5))
            })
            .collect();
        let name = format!("g{k}");
        let types: Vec<&str> = args.iter().map(|(t, _)| t.name()).collect();
        let modes: Vec<&str> = args
            .iter()
            .map(|(_, i)| if *i { "in" } else { "out" })
            .collect();
        let mut decl = format!("\n:- pred {name}({}).\n", types.join(", "));
        decl.push_str(&format!(":- mode {name}({}).\n", modes.join(", ")));
        if rng.gen_bool(0.3) {
            let all_in = vec!["in"; arity];
            decl.push_str(&format!(":- mode {name}({}).\n", all_in.join(", ")));
        }
        // An arbitrary extra mode, often not satisfiable by the clauses.
        if rng.gen_bool(0.15) {
            let any: Vec<&str> = (0..arity)
                .map(|_| if rng.gen_bool(0.5) { "in" } else { "out" })
                .collect();
            decl.push_str(&format!(":- mode {name}({}).\n", any.join(", ")));
        }
        let head: Vec<String> = (1..=arity).map(|i| format!("A{i}")).collect();
        let clauses = rng.gen_range(1..=2);
        let mut text = String::new();
        let mut used = 0;
        for _ in 0..clauses {
            let mut body = Body {
                rng: &mut rng,
                bound: Vec::new(),
                items: Vec::new(),
                literals: 0,
                next: 0,
            };
            for (v, (t, is_in)) in head.iter().zip(&args) {
                if *is_in {
                    body.bound.push((v.clone(), *t));
                }
            }
            let steps = body.rng.gen_range(2..=7);
            for _ in 0..steps {
                body.step(&sigs);
            }
            for (v, (t, is_in)) in head.iter().zip(&args) {
                if !*is_in {
                    let src = body.source(*t);
                    body.push(format!("{v} = {src}"), 1);
                }
            }
            let Body {
                mut items,
                literals,
                ..
            } = body;
            if total + used + literals > max_literals {
                break;
            }
            used += literals;
            items.shuffle(&mut rng);
            let goal = if items.is_empty() {
                "true".to_string()
            } else {
                items.join(", ")
            };
            text.push_str(&format!("{name}({}) :- {goal}.\n", head.join(", ")));
        }
        if text.is_empty() {
            break;
        }
        total += used;
        out.push_str(&decl);
        out.push_str(&text);
        sigs.push(PredSig { name, args });
    }
    out
}

/// Number of body literals as written in `src`, before normalization.
pub fn literal_count(src: &str) -> Result<usize, crate::frontend::FrontendError> {
    let prog = crate::frontend::parse_program(src)?;
    Ok(prog
        .preds
        .iter()
        .flat_map(|p| &p.clauses)
        .map(|c| c.body.literals().len())
        .sum())
}
