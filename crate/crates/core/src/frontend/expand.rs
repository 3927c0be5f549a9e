//! Equivalence expansion for types, instantiations and modes, and the
//! definition checks that need the expanded forms.

use std::collections::HashMap;

use super::ast::*;
use super::FrontendError;

pub const BUILTIN_TYPES: &[&str] = &["int", "float", "char", "string"];

fn arrow(c: InstExpr, s: InstExpr) -> ModeBody {
    ModeBody::Arrow(c, s)
}

fn builtin_modedefs() -> Vec<ModeDef> {
    use BaseInst::*;
    let b = InstExpr::Base;
    let i = || InstExpr::Param("I".into());
    let def = |name: &str, params: &[&str], body: ModeBody| ModeDef {
        name: name.into(),
        params: params.iter().map(|s| s.to_string()).collect(),
        body,
        span: Span::default(),
    };
    vec![
        def("in", &["I"], arrow(i(), i())),
        def("out", &["I"], arrow(b(New), i())),
        def("in", &[], arrow(b(Ground), b(Ground))),
        def("out", &[], arrow(b(New), b(Ground))),
        def("oo", &[], arrow(b(Old), b(Old))),
        def("no", &[], arrow(b(New), b(Old))),
        def("og", &[], arrow(b(Old), b(Ground))),
        def("gg", &[], arrow(b(Ground), b(Ground))),
        def("ng", &[], arrow(b(New), b(Ground))),
    ]
}

struct Env<'a> {
    types: HashMap<(&'a str, usize), (&'a [String], &'a TypeExpr, Span)>,
    insts: HashMap<(&'a str, usize), (&'a [String], &'a InstExpr, Span)>,
    modes: HashMap<(String, usize), ModeDef>,
}

fn bind<T: Clone>(params: &[String], args: &[T]) -> std::collections::BTreeMap<String, T> {
    params.iter().cloned().zip(args.iter().cloned()).collect()
}

impl Env<'_> {
    fn ty(
        &self,
        t: &TypeExpr,
        stack: &mut Vec<String>,
        span: Span,
    ) -> Result<TypeExpr, FrontendError> {
        match t {
            TypeExpr::Param(_) => Ok(t.clone()),
            TypeExpr::Pred(args) => Ok(TypeExpr::Pred(
                args.iter()
                    .map(|a| self.ty(a, stack, span))
                    .collect::<Result<_, _>>()?,
            )),
            TypeExpr::App(n, args) => {
                let args: Vec<TypeExpr> = args
                    .iter()
                    .map(|a| self.ty(a, stack, span))
                    .collect::<Result<_, _>>()?;
                let Some((params, body, _)) = self.types.get(&(n.as_str(), args.len())) else {
                    return Ok(TypeExpr::App(n.clone(), args));
                };
                let key = format!("{n}/{}", args.len());
                if stack.contains(&key) {
                    return Err(FrontendError::Circular { span, name: key });
                }
                stack.push(key);
                let theta = bind(params, &args);
                let out = self.ty(&body.subst(&theta), stack, span)?;
                stack.pop();
                Ok(out)
            }
        }
    }

    fn inst(
        &self,
        i: &InstExpr,
        stack: &mut Vec<String>,
        span: Span,
    ) -> Result<InstExpr, FrontendError> {
        match i {
            InstExpr::Base(_) | InstExpr::Param(_) => Ok(i.clone()),
            InstExpr::Pred(ms, det) => Ok(InstExpr::Pred(
                ms.iter()
                    .map(|m| self.mode(m, stack, span))
                    .collect::<Result<_, _>>()?,
                det.clone(),
            )),
            InstExpr::App(n, args) => {
                let args: Vec<InstExpr> = args
                    .iter()
                    .map(|a| self.inst(a, stack, span))
                    .collect::<Result<_, _>>()?;
                let Some((params, body, _)) = self.insts.get(&(n.as_str(), args.len())) else {
                    return Ok(InstExpr::App(n.clone(), args));
                };
                let key = format!("inst {n}/{}", args.len());
                if stack.contains(&key) {
                    return Err(FrontendError::Circular { span, name: key });
                }
                stack.push(key);
                let theta = bind(params, &args);
                let out = self.inst(&body.subst(&theta), stack, span)?;
                stack.pop();
                Ok(out)
            }
        }
    }

    fn mode(
        &self,
        m: &ModeExpr,
        stack: &mut Vec<String>,
        span: Span,
    ) -> Result<ModeExpr, FrontendError> {
        match m {
            ModeExpr::Arrow(c, s) => Ok(ModeExpr::arrow(
                self.inst(c, stack, span)?,
                self.inst(s, stack, span)?,
            )),
            ModeExpr::Named(n, args) => {
                let Some(def) = self.modes.get(&(n.clone(), args.len())) else {
                    return Err(FrontendError::Undefined {
                        span,
                        what: format!("mode {n}/{}", args.len()),
                    });
                };
                let key = format!("mode {n}/{}", args.len());
                if stack.contains(&key) {
                    return Err(FrontendError::Circular { span, name: key });
                }
                stack.push(key);
                let theta = bind(&def.params, args);
                let out = match &def.body {
                    ModeBody::Arrow(c, s) => ModeExpr::arrow(
                        self.inst(&c.subst(&theta), stack, span)?,
                        self.inst(&s.subst(&theta), stack, span)?,
                    ),
                    ModeBody::Equiv(e) => self.mode(&e.subst(&theta), stack, span)?,
                };
                stack.pop();
                Ok(out)
            }
        }
    }
}

/// Replace every equivalence name by its definition. `in`, `out` and the
/// other standard modes are available unless the program redefines them.
pub fn expand_equivalences(mut p: Program) -> Result<Program, FrontendError> {
    let mut modes: HashMap<(String, usize), ModeDef> = builtin_modedefs()
        .into_iter()
        .map(|d| ((d.name.clone(), d.params.len()), d))
        .collect();
    for d in &p.modedefs {
        modes.insert((d.name.clone(), d.params.len()), d.clone());
    }
    let snapshot = p.clone();
    let env = Env {
        types: snapshot
            .typedefs
            .iter()
            .filter_map(|t| match &t.body {
                TypeBody::Equiv(e) => Some((
                    (t.name.as_str(), t.params.len()),
                    (&t.params[..], e, t.span),
                )),
                _ => None,
            })
            .collect(),
        insts: snapshot
            .instdefs
            .iter()
            .filter_map(|d| match &d.body {
                InstBody::Equiv(e) => Some((
                    (d.name.as_str(), d.params.len()),
                    (&d.params[..], e, d.span),
                )),
                _ => None,
            })
            .collect(),
        modes,
    };

    // Circular chains are errors even when nothing uses them.
    for t in &mut p.typedefs {
        let mut stack = vec![format!("{}/{}", t.name, t.params.len())];
        match &mut t.body {
            TypeBody::Equiv(e) => *e = env.ty(e, &mut stack, t.span)?,
            TypeBody::Alts(alts) => {
                for a in alts {
                    for x in &mut a.args {
                        *x = env.ty(x, &mut Vec::new(), t.span)?;
                    }
                }
            }
            TypeBody::Abstract => {}
        }
    }
    for d in &mut p.instdefs {
        let mut stack = vec![format!("inst {}/{}", d.name, d.params.len())];
        match &mut d.body {
            InstBody::Equiv(e) => *e = env.inst(e, &mut stack, d.span)?,
            InstBody::Alts(alts) => {
                for a in alts {
                    for x in &mut a.args {
                        *x = env.inst(x, &mut Vec::new(), d.span)?;
                    }
                }
            }
        }
    }
    for d in &p.modedefs {
        let m = ModeExpr::Named(
            d.name.clone(),
            d.params
                .iter()
                .map(|v| InstExpr::Param(v.clone()))
                .collect(),
        );
        env.mode(&m, &mut Vec::new(), d.span)?;
    }
    for pred in &mut p.preds {
        for t in &mut pred.arg_types {
            *t = env.ty(t, &mut Vec::new(), pred.span)?;
        }
        for m in &mut pred.modes {
            for a in &mut m.args {
                *a = env.mode(a, &mut Vec::new(), m.span)?;
            }
        }
    }
    check_definitions(&p)?;
    Ok(p)
}

fn check_type_use(p: &Program, t: &TypeExpr, span: Span) -> Result<(), FrontendError> {
    match t {
        TypeExpr::Param(_) => Ok(()),
        TypeExpr::Pred(args) => args.iter().try_for_each(|a| check_type_use(p, a, span)),
        TypeExpr::App(n, args) => {
            let builtin = args.is_empty() && BUILTIN_TYPES.contains(&n.as_str());
            let defined = p
                .typedef(n, args.len())
                .is_some_and(|d| !matches!(d.body, TypeBody::Equiv(_)));
            if !builtin && !defined {
                return Err(FrontendError::Undefined {
                    span,
                    what: format!("type {n}/{}", args.len()),
                });
            }
            args.iter().try_for_each(|a| check_type_use(p, a, span))
        }
    }
}

fn check_inst_use(
    p: &Program,
    i: &InstExpr,
    span: Span,
    outermost: bool,
) -> Result<(), FrontendError> {
    match i {
        InstExpr::Base(BaseInst::New) if !outermost => Err(FrontendError::NewNested {
            span,
            name: i.to_string(),
        }),
        InstExpr::Base(_) | InstExpr::Param(_) => Ok(()),
        InstExpr::Pred(ms, _) => ms.iter().try_for_each(|m| {
            let (c, s) = m.as_pair().expect("expanded");
            check_inst_use(p, c, span, true)?;
            check_inst_use(p, s, span, true)
        }),
        InstExpr::App(n, args) => {
            let defined = p.instdefs.iter().any(|d| {
                d.name == *n && d.params.len() == args.len() && matches!(d.body, InstBody::Alts(_))
            });
            if !defined {
                return Err(FrontendError::Undefined {
                    span,
                    what: format!("instantiation {n}/{}", args.len()),
                });
            }
            args.iter()
                .try_for_each(|a| check_inst_use(p, a, span, false))
        }
    }
}

fn check_definitions(p: &Program) -> Result<(), FrontendError> {
    for t in &p.typedefs {
        if let TypeBody::Alts(alts) = &t.body {
            for a in alts {
                a.args
                    .iter()
                    .try_for_each(|x| check_type_use(p, x, t.span))?;
            }
        }
    }
    for d in &p.instdefs {
        if let InstBody::Alts(alts) = &d.body {
            for a in alts {
                a.args
                    .iter()
                    .try_for_each(|x| check_inst_use(p, x, d.span, false))?;
            }
        }
    }
    for pred in &p.preds {
        pred.arg_types
            .iter()
            .try_for_each(|t| check_type_use(p, t, pred.span))?;
        if pred.kind == PredKind::Declared && pred.modes.is_empty() && !pred.clauses.is_empty() {
            return Err(FrontendError::Definition {
                span: pred.span,
                msg: format!(
                    "predicate {} has clauses but no mode declaration",
                    pred.key()
                ),
            });
        }
        for m in &pred.modes {
            for a in &m.args {
                let (c, s) = a.as_pair().expect("expanded");
                let mut params = std::collections::BTreeSet::new();
                a.params(&mut params);
                if let Some(v) = params.into_iter().next() {
                    return Err(FrontendError::Definition {
                        span: m.span,
                        msg: format!(
                            "mode declaration for {} uses instantiation parameter {v}; mode declarations must be ground",
                            pred.key()
                        ),
                    });
                }
                check_inst_use(p, c, m.span, true)?;
                check_inst_use(p, s, m.span, true)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse_program;

    #[test]
    fn out_with_argument() {
        let p = parse_program(
            ":- typedef list(T) -> [] ; [T|list(T)].\n\
             :- instdef list(I) -> ([]; [I|list(I)]).\n\
             :- instdef nelist(I) -> [I|list(I)].\n\
             :- pred p(list(int)).\n:- mode p(out(nelist(ground))).\n",
        )
        .unwrap();
        let p = expand_equivalences(p).unwrap();
        assert_eq!(
            p.preds[0].modes[0].args[0].to_string(),
            "new->nelist(ground)"
        );
    }

    #[test]
    fn circular_types() {
        let p = parse_program(":- typedef a = b.\n:- typedef b = a.\n").unwrap();
        let e = expand_equivalences(p).unwrap_err();
        assert!(e
            .to_string()
            .contains("circular type equivalences are not allowed"));
    }

    #[test]
    fn user_modes_shadow_builtins() {
        let p = parse_program(":- modedef in = (old -> old).\n:- pred p(int).\n:- mode p(in).\n")
            .unwrap();
        let p = expand_equivalences(p).unwrap();
        assert_eq!(p.preds[0].modes[0].args[0].to_string(), "old->old");
    }
}
