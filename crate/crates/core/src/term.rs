//! Decorated terms in canonical form.
//!
//! Composition is kept binary but always right-nested, with identity leaves
//! elided by the smart constructor, so associativity and identity laws are
//! definitional rather than proof steps. Pure leaves are normalized at
//! construction. Compositions of pure leaves and pairs of pure leaves are
//! deliberately *not* merged: collapsing them is the job of explicit proof
//! rules, not of the representation.

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use num_bigint::BigInt;

use crate::error::CoreError;
use crate::purefn::{CVal, PureFn};
use crate::types::{Decoration, ExcName, LocId, ObjType, TypeEnv, Value};

/// A schematic term parameter declared by a proof script, with its exact
/// signature and a decoration bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermVar {
    pub name: String,
    pub dom: ObjType,
    pub cod: ObjType,
    pub deco: Decoration,
}

/// A decorated term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    /// Embedded pure function.
    TPure(PureFn),
    /// `f o g`: run `g` first, then `f`.
    Comp(Rc<Term>, Rc<Term>),
    /// `pair(f, g)`: run `f` first, then `g`, return both results.
    Pair(Rc<Term>, Rc<Term>),
    /// `copair(f, g)`: case split on a sum-typed input.
    Copair(Rc<Term>, Rc<Term>),
    /// Read a location: `unit -> val(i)`.
    Lookup(LocId),
    /// Write a location: `val(i) -> unit`.
    Update(LocId),
    /// Raise an exception: `eval(e) -> empty`.
    Tag(ExcName),
    /// Recover an exception's payload: `empty -> eval(e)`.
    Untag(ExcName),
    /// Demote a catcher to propagator behavior on ordinary inputs.
    Downcast(Rc<Term>),
    /// Loop: `lpi(b, f)` iterates `f : unit -> unit` while `b` picks left.
    Lpi(Rc<Term>, Rc<Term>),
    /// Embedded boolean test: `bool -> unit + unit`.
    Pbl,
    /// Schematic parameter.
    Var(TermVar),
    /// Named definition, opaque to matching until unfolded.
    Def(String, Rc<Term>),
}

impl Term {
    // ----- canonical constructors -----

    pub fn pure(f: PureFn) -> Term {
        Term::TPure(f.normalize())
    }

    pub fn id(t: ObjType) -> Term {
        Term::pure(PureFn::Identity(t))
    }

    pub fn forget(t: ObjType) -> Term {
        Term::pure(PureFn::ToUnit(t))
    }

    pub fn empty_from(t: ObjType) -> Term {
        Term::pure(PureFn::FromEmpty(t))
    }

    pub fn pi1(a: ObjType, b: ObjType) -> Term {
        Term::pure(PureFn::Fst(a, b))
    }

    pub fn pi2(a: ObjType, b: ObjType) -> Term {
        Term::pure(PureFn::Snd(a, b))
    }

    pub fn inl(a: ObjType, b: ObjType) -> Term {
        Term::pure(PureFn::InjLeft(a, b))
    }

    pub fn inr(a: ObjType, b: ObjType) -> Term {
        Term::pure(PureFn::InjRight(a, b))
    }

    /// `ttrue : unit -> unit + unit`
    pub fn ttrue() -> Term {
        Term::inl(ObjType::Unit, ObjType::Unit)
    }

    /// `ffalse : unit -> unit + unit`
    pub fn ffalse() -> Term {
        Term::inr(ObjType::Unit, ObjType::Unit)
    }

    pub fn const_int(n: BigInt) -> Term {
        Term::pure(PureFn::Const(CVal::Ground(Value::I(n)), ObjType::Unit, ObjType::Int))
    }

    pub fn const_bool(b: bool) -> Term {
        Term::pure(PureFn::Const(CVal::Ground(Value::B(b)), ObjType::Unit, ObjType::Bool))
    }

    pub fn const_sym(name: impl Into<String>) -> Term {
        Term::pure(PureFn::Const(CVal::Sym(name.into()), ObjType::Unit, ObjType::Int))
    }

    /// `throw(t, e) := empty(t) o tag(e) : unit -> t` (raise `e`, coerce).
    pub fn throw(t: ObjType, e: ExcName) -> Term {
        Term::comp(Term::empty_from(t), Term::Tag(e))
    }

    /// `try(f) catch(e) (h) := downcast(copair(id, h o untag(e)) o inl o f)`.
    pub fn try_catch(f: Term, e: ExcName, h: Term, cod: ObjType) -> Term {
        let recover = Term::comp(h, Term::Untag(e));
        let body = Term::comp(
            Term::copair(Term::id(cod.clone()), recover),
            Term::comp(Term::inl(cod, ObjType::Empty), f),
        );
        Term::downcast(body)
    }

    /// Composition with flattening and identity elision.
    pub fn comp(f: Term, g: Term) -> Term {
        let mut factors = f.spine();
        factors.extend(g.spine());
        Term::from_spine(factors)
    }

    pub fn pair(f: Term, g: Term) -> Term {
        Term::Pair(Rc::new(f), Rc::new(g))
    }

    pub fn copair(f: Term, g: Term) -> Term {
        Term::Copair(Rc::new(f), Rc::new(g))
    }

    pub fn downcast(f: Term) -> Term {
        Term::Downcast(Rc::new(f))
    }

    pub fn lpi(cond: Term, body: Term) -> Term {
        Term::Lpi(Rc::new(cond), Rc::new(body))
    }

    pub fn def(name: impl Into<String>, body: Term) -> Term {
        Term::Def(name.into(), Rc::new(body))
    }

    /// Rebuild a composition from factors, eliding identity leaves. An empty
    /// result keeps one dropped identity so the type is not lost.
    pub fn from_spine(factors: Vec<Term>) -> Term {
        let mut kept: Vec<Term> = Vec::with_capacity(factors.len());
        let mut dropped_identity: Option<Term> = None;
        for t in factors {
            if let Term::TPure(f) = &t {
                if f.is_identity() {
                    dropped_identity = Some(t);
                    continue;
                }
            }
            kept.push(t);
        }
        match kept.len() {
            0 => dropped_identity.expect("from_spine of no factors"),
            1 => kept.pop().unwrap(),
            _ => {
                let mut it = kept.into_iter().rev();
                let mut acc = it.next().unwrap();
                for t in it {
                    acc = Term::Comp(Rc::new(t), Rc::new(acc));
                }
                acc
            }
        }
    }

    /// The composition spine, outermost (last-applied) factor first.
    /// Non-compositions are a one-factor spine.
    pub fn spine(&self) -> Vec<Term> {
        let mut out = Vec::new();
        fn walk(t: &Term, out: &mut Vec<Term>) {
            match t {
                Term::Comp(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                other => out.push(other.clone()),
            }
        }
        walk(self, &mut out);
        out
    }

    // ----- typing -----

    /// Domain and codomain, validating every interface modulo resolution.
    pub fn typecheck(&self, env: &TypeEnv) -> Result<(ObjType, ObjType), CoreError> {
        match self {
            Term::TPure(f) => {
                f.check(env).map_err(CoreError::TypeMismatch)?;
                Ok((f.dom(), f.cod()))
            }
            Term::Comp(a, b) => {
                let (da, ca) = a.typecheck(env)?;
                let (db, cb) = b.typecheck(env)?;
                if env.types_eq(&da, &cb) {
                    Ok((db, ca))
                } else {
                    Err(CoreError::TypeMismatch(format!(
                        "composition interface: `{}` expects {} but `{}` returns {}",
                        a, da, b, cb
                    )))
                }
            }
            Term::Pair(f, g) => {
                let (df, cf) = f.typecheck(env)?;
                let (dg, cg) = g.typecheck(env)?;
                if env.types_eq(&df, &dg) {
                    Ok((df, ObjType::prod(cf, cg)))
                } else {
                    Err(CoreError::TypeMismatch(format!(
                        "pair components disagree on domain: {} vs {}",
                        df, dg
                    )))
                }
            }
            Term::Copair(f, g) => {
                let (df, cf) = f.typecheck(env)?;
                let (dg, cg) = g.typecheck(env)?;
                if env.types_eq(&cf, &cg) {
                    Ok((ObjType::sum(df, dg), cf))
                } else {
                    Err(CoreError::TypeMismatch(format!(
                        "copair branches disagree on codomain: {} vs {}",
                        cf, cg
                    )))
                }
            }
            Term::Lookup(i) => {
                env.check_location(i)?;
                Ok((ObjType::Unit, ObjType::ValOf(i.clone())))
            }
            Term::Update(i) => {
                env.check_location(i)?;
                Ok((ObjType::ValOf(i.clone()), ObjType::Unit))
            }
            Term::Tag(e) => {
                env.check_exception(e)?;
                Ok((ObjType::EValOf(e.clone()), ObjType::Empty))
            }
            Term::Untag(e) => {
                env.check_exception(e)?;
                Ok((ObjType::Empty, ObjType::EValOf(e.clone())))
            }
            Term::Downcast(f) => f.typecheck(env),
            Term::Lpi(cond, body) => {
                let (dc, cc) = cond.typecheck(env)?;
                let (db, cb) = body.typecheck(env)?;
                if !env.types_eq(&dc, &ObjType::Unit) || !env.types_eq(&cc, &ObjType::two()) {
                    return Err(CoreError::TypeMismatch(format!(
                        "loop condition must be unit -> unit + unit, got {} -> {}",
                        dc, cc
                    )));
                }
                if !env.types_eq(&db, &ObjType::Unit) || !env.types_eq(&cb, &ObjType::Unit) {
                    return Err(CoreError::TypeMismatch(format!(
                        "loop body must be unit -> unit, got {} -> {}",
                        db, cb
                    )));
                }
                Ok((ObjType::Unit, ObjType::Unit))
            }
            Term::Pbl => Ok((ObjType::Bool, ObjType::two())),
            Term::Var(v) => Ok((v.dom.clone(), v.cod.clone())),
            Term::Def(_, body) => body.typecheck(env),
        }
    }

    // ----- decorations -----

    /// Inferred decoration: the least `(state, exception)` degree pair.
    pub fn decoration(&self) -> Decoration {
        match self {
            Term::TPure(_) | Term::Pbl => Decoration::PURE,
            Term::Lookup(_) => Decoration::new(1, 0),
            Term::Update(_) => Decoration::new(2, 0),
            Term::Tag(_) => Decoration::new(0, 1),
            Term::Untag(_) => Decoration::new(0, 2),
            Term::Downcast(f) => {
                let d = f.decoration();
                Decoration::new(d.state, d.exc.min(1))
            }
            Term::Comp(a, b) | Term::Pair(a, b) | Term::Copair(a, b) | Term::Lpi(a, b) => {
                a.decoration().join(b.decoration())
            }
            Term::Var(v) => v.deco,
            Term::Def(_, body) => body.decoration(),
        }
    }

    // ----- paths -----

    /// Child count under the documented path scheme: comp/pair/copair/lpi
    /// have children 0 and 1 (lpi: 0 = condition, 1 = body), downcast and
    /// def have child 0.
    pub fn child(&self, idx: usize) -> Option<&Rc<Term>> {
        match (self, idx) {
            (Term::Comp(a, _), 0)
            | (Term::Pair(a, _), 0)
            | (Term::Copair(a, _), 0)
            | (Term::Lpi(a, _), 0) => Some(a),
            (Term::Comp(_, b), 1)
            | (Term::Pair(_, b), 1)
            | (Term::Copair(_, b), 1)
            | (Term::Lpi(_, b), 1) => Some(b),
            (Term::Downcast(f), 0) | (Term::Def(_, f), 0) => Some(f),
            _ => None,
        }
    }

    pub fn subterm_at(&self, path: &[usize]) -> Result<&Term, CoreError> {
        let mut cur = self;
        for (depth, &i) in path.iter().enumerate() {
            cur = cur
                .child(i)
                .ok_or_else(|| {
                    CoreError::InvalidPath(format!(
                        "no child {} at depth {} of `{}`",
                        i, depth, self
                    ))
                })?
                .as_ref();
        }
        Ok(cur)
    }

    /// Replace the subterm at `path`, re-canonicalizing along the way.
    pub fn replace_at(&self, path: &[usize], new: Term) -> Result<Term, CoreError> {
        if path.is_empty() {
            return Ok(new);
        }
        let (i, rest) = (path[0], &path[1..]);
        let build = |child: &Rc<Term>| child.replace_at(rest, new.clone());
        match (self, i) {
            (Term::Comp(a, b), 0) => Ok(Term::comp(build(a)?, (**b).clone())),
            (Term::Comp(a, b), 1) => Ok(Term::comp((**a).clone(), build(b)?)),
            (Term::Pair(a, b), 0) => Ok(Term::pair(build(a)?, (**b).clone())),
            (Term::Pair(a, b), 1) => Ok(Term::pair((**a).clone(), build(b)?)),
            (Term::Copair(a, b), 0) => Ok(Term::copair(build(a)?, (**b).clone())),
            (Term::Copair(a, b), 1) => Ok(Term::copair((**a).clone(), build(b)?)),
            (Term::Lpi(a, b), 0) => Ok(Term::lpi(build(a)?, (**b).clone())),
            (Term::Lpi(a, b), 1) => Ok(Term::lpi((**a).clone(), build(b)?)),
            (Term::Downcast(f), 0) => Ok(Term::downcast(build(f)?)),
            (Term::Def(n, f), 0) => Ok(Term::def(n.clone(), build(f)?)),
            _ => Err(CoreError::InvalidPath(format!("no child {} of `{}`", i, self))),
        }
    }

    // ----- comparison and substitution -----

    /// Structural equality with object types compared modulo resolution.
    pub fn eq_resolved(&self, other: &Term, env: &TypeEnv) -> bool {
        let res = |t: &ObjType| env.resolve(t);
        match (self, other) {
            (Term::TPure(f), Term::TPure(g)) => f.map_types(&res) == g.map_types(&res),
            (Term::Comp(a, b), Term::Comp(c, d))
            | (Term::Pair(a, b), Term::Pair(c, d))
            | (Term::Copair(a, b), Term::Copair(c, d))
            | (Term::Lpi(a, b), Term::Lpi(c, d)) => {
                a.eq_resolved(c, env) && b.eq_resolved(d, env)
            }
            (Term::Lookup(i), Term::Lookup(j)) | (Term::Update(i), Term::Update(j)) => i == j,
            (Term::Tag(e), Term::Tag(f)) | (Term::Untag(e), Term::Untag(f)) => e == f,
            (Term::Downcast(a), Term::Downcast(b)) => a.eq_resolved(b, env),
            (Term::Pbl, Term::Pbl) => true,
            (Term::Var(v), Term::Var(w)) => {
                v.name == w.name
                    && res(&v.dom) == res(&w.dom)
                    && res(&v.cod) == res(&w.cod)
                    && v.deco == w.deco
            }
            (Term::Def(n, a), Term::Def(m, b)) => n == m && a.eq_resolved(b, env),
            _ => false,
        }
    }

    /// Substitute schematic parameters: term variables by terms and symbolic
    /// integer constants by ground integers. Rebuilds through the canonical
    /// constructors so the result stays canonical.
    pub fn substitute(&self, terms: &BTreeMap<String, Term>, ints: &BTreeMap<String, BigInt>) -> Term {
        let sub = |t: &Term| t.substitute(terms, ints);
        match self {
            Term::TPure(f) => Term::pure(f.subst_syms(&|s| ints.get(s).cloned())),
            Term::Comp(a, b) => Term::comp(sub(a), sub(b)),
            Term::Pair(a, b) => Term::pair(sub(a), sub(b)),
            Term::Copair(a, b) => Term::copair(sub(a), sub(b)),
            Term::Downcast(f) => Term::downcast(sub(f)),
            Term::Lpi(a, b) => Term::lpi(sub(a), sub(b)),
            Term::Var(v) => match terms.get(&v.name) {
                Some(t) => t.clone(),
                None => self.clone(),
            },
            Term::Def(n, body) => Term::def(n.clone(), sub(body)),
            other => other.clone(),
        }
    }

    /// Replace every occurrence of definition `name` by its body. Does not
    /// descend into *other* definitions' bodies: they are closed.
    pub fn unfold_def(&self, name: &str) -> Term {
        match self {
            Term::Def(n, body) if n == name => (**body).clone(),
            Term::Def(_, _) => self.clone(),
            Term::Comp(a, b) => Term::comp(a.unfold_def(name), b.unfold_def(name)),
            Term::Pair(a, b) => Term::pair(a.unfold_def(name), b.unfold_def(name)),
            Term::Copair(a, b) => Term::copair(a.unfold_def(name), b.unfold_def(name)),
            Term::Downcast(f) => Term::downcast(f.unfold_def(name)),
            Term::Lpi(a, b) => Term::lpi(a.unfold_def(name), b.unfold_def(name)),
            other => other.clone(),
        }
    }

    /// Replace every definition by its body, recursively, leaving a term
    /// with no `Def` nodes.
    pub fn expand_defs(&self) -> Term {
        match self {
            Term::Def(_, body) => body.expand_defs(),
            Term::Comp(a, b) => Term::comp(a.expand_defs(), b.expand_defs()),
            Term::Pair(a, b) => Term::pair(a.expand_defs(), b.expand_defs()),
            Term::Copair(a, b) => Term::copair(a.expand_defs(), b.expand_defs()),
            Term::Downcast(f) => Term::downcast(f.expand_defs()),
            Term::Lpi(a, b) => Term::lpi(a.expand_defs(), b.expand_defs()),
            other => other.clone(),
        }
    }

    /// Replace every embedded boolean test by its pure-function form.
    pub fn unfold_pbl(&self) -> Term {
        match self {
            Term::Pbl => Term::pure(PureFn::BoolToTwo),
            Term::Comp(a, b) => Term::comp(a.unfold_pbl(), b.unfold_pbl()),
            Term::Pair(a, b) => Term::pair(a.unfold_pbl(), b.unfold_pbl()),
            Term::Copair(a, b) => Term::copair(a.unfold_pbl(), b.unfold_pbl()),
            Term::Downcast(f) => Term::downcast(f.unfold_pbl()),
            Term::Lpi(a, b) => Term::lpi(a.unfold_pbl(), b.unfold_pbl()),
            other => other.clone(),
        }
    }

    pub fn contains_def(&self, name: &str) -> bool {
        match self {
            Term::Def(n, _) if n == name => true,
            Term::Def(_, _) => false,
            Term::Comp(a, b) | Term::Pair(a, b) | Term::Copair(a, b) | Term::Lpi(a, b) => {
                a.contains_def(name) || b.contains_def(name)
            }
            Term::Downcast(f) => f.contains_def(name),
            _ => false,
        }
    }

    pub fn contains_pbl(&self) -> bool {
        match self {
            Term::Pbl => true,
            Term::Comp(a, b) | Term::Pair(a, b) | Term::Copair(a, b) | Term::Lpi(a, b) => {
                a.contains_pbl() || b.contains_pbl()
            }
            Term::Downcast(f) => f.contains_pbl(),
            _ => false,
        }
    }

    /// Names of free schematic term variables.
    pub fn var_names(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(&v.name) {
                    out.push(v.name.clone());
                }
            }
            Term::Comp(a, b) | Term::Pair(a, b) | Term::Copair(a, b) | Term::Lpi(a, b) => {
                a.var_names(out);
                b.var_names(out);
            }
            Term::Downcast(f) | Term::Def(_, f) => f.var_names(out),
            _ => {}
        }
    }
}

fn factor_needs_parens(t: &Term) -> bool {
    matches!(t, Term::Comp(_, _))
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::TPure(p) => match p {
                PureFn::Identity(_) => write!(f, "id"),
                PureFn::Fst(_, _) => write!(f, "pi1"),
                PureFn::Snd(_, _) => write!(f, "pi2"),
                PureFn::ToUnit(_) => write!(f, "forget"),
                PureFn::InjLeft(_, _) => write!(f, "inl"),
                PureFn::InjRight(_, _) => write!(f, "inr"),
                PureFn::FromEmpty(_) => write!(f, "empty"),
                PureFn::Const(v, _, _) => write!(f, "constant({})", v),
                other => write!(f, "tpure({})", other),
            },
            Term::Comp(_, _) => {
                let factors = self.spine();
                for (i, t) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, " o ")?;
                    }
                    if factor_needs_parens(t) {
                        write!(f, "({})", t)?;
                    } else {
                        write!(f, "{}", t)?;
                    }
                }
                Ok(())
            }
            Term::Pair(a, b) => write!(f, "pair({}, {})", a, b),
            Term::Copair(a, b) => write!(f, "copair({}, {})", a, b),
            Term::Lookup(i) => write!(f, "lookup({})", i),
            Term::Update(i) => write!(f, "update({})", i),
            Term::Tag(e) => write!(f, "tag({})", e),
            Term::Untag(e) => write!(f, "untag({})", e),
            Term::Downcast(t) => write!(f, "downcast({})", t),
            Term::Lpi(b, t) => write!(f, "lpi({}, {})", b, t),
            Term::Pbl => write!(f, "pbl"),
            Term::Var(v) => write!(f, "{}", v.name),
            Term::Def(n, _) => write!(f, "{}", n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_xy_e() -> TypeEnv {
        TypeEnv::new(
            vec![LocId::new("x"), LocId::new("y")],
            vec![ExcName::new("e")],
        )
    }

    #[test]
    fn comp_right_nests_and_elides_identities() {
        let x = LocId::new("x");
        let t = Term::comp(
            Term::comp(Term::Lookup(x.clone()), Term::id(ObjType::Unit)),
            Term::Update(x.clone()),
        );
        // Spine is [lookup, update]; the identity vanished.
        assert_eq!(t.spine().len(), 2);
        assert_eq!(t, Term::comp(Term::Lookup(x.clone()), Term::Update(x)));
        // Fully-elided composition keeps an identity.
        let t = Term::comp(Term::id(ObjType::Unit), Term::id(ObjType::Unit));
        assert_eq!(t, Term::id(ObjType::Unit));
    }

    #[test]
    fn typecheck_core_signatures() {
        let env = env_xy_e();
        let x = LocId::new("x");
        let e = ExcName::new("e");
        let lookup = Term::Lookup(x.clone());
        assert_eq!(
            lookup.typecheck(&env).unwrap(),
            (ObjType::Unit, ObjType::ValOf(x.clone()))
        );
        let roundtrip = Term::comp(Term::Lookup(x.clone()), Term::Update(x.clone()));
        let (d, c) = roundtrip.typecheck(&env).unwrap();
        assert!(env.types_eq(&d, &ObjType::Int) && env.types_eq(&c, &ObjType::Int));
        let throw = Term::throw(ObjType::Unit, e.clone());
        assert_eq!(throw.typecheck(&env).unwrap(), (ObjType::EValOf(e), ObjType::Unit));
        let bad = Term::comp(Term::Update(x), Term::Update(LocId::new("y")));
        assert!(matches!(bad.typecheck(&env), Err(CoreError::TypeMismatch(_))));
        let unknown = Term::Lookup(LocId::new("z"));
        assert!(matches!(unknown.typecheck(&env), Err(CoreError::UnknownLocation(_))));
    }

    #[test]
    fn decorations_from_translation_building_blocks() {
        let x = LocId::new("x");
        let e = ExcName::new("e");
        assert_eq!(Term::Update(x.clone()).decoration(), Decoration::new(2, 0));
        assert_eq!(Term::Lookup(x.clone()).decoration(), Decoration::new(1, 0));
        assert_eq!(Term::Pbl.decoration(), Decoration::PURE);
        assert_eq!(Term::Tag(e.clone()).decoration(), Decoration::new(0, 1));
        assert_eq!(Term::Untag(e.clone()).decoration(), Decoration::new(0, 2));
        // Downcast caps the exception degree at propagator.
        let catcher = Term::comp(Term::Untag(e.clone()), Term::Tag(e.clone()));
        assert_eq!(catcher.decoration(), Decoration::new(0, 2));
        assert_eq!(Term::downcast(catcher).decoration(), Decoration::new(0, 1));
        // Joins are componentwise.
        let mixed = Term::comp(Term::Update(x), Term::comp(Term::id(ObjType::Unit), Term::throw(ObjType::ValOf(LocId::new("x")), e)));
        assert_eq!(mixed.decoration(), Decoration::new(2, 1));
    }

    #[test]
    fn paths_address_children() {
        let x = LocId::new("x");
        let t = Term::pair(Term::Lookup(x.clone()), Term::const_int(0.into()));
        assert_eq!(t.subterm_at(&[0]).unwrap(), &Term::Lookup(x.clone()));
        let replaced = t.replace_at(&[1], Term::const_int(7.into())).unwrap();
        assert_eq!(
            replaced,
            Term::pair(Term::Lookup(x), Term::const_int(7.into()))
        );
        assert!(t.subterm_at(&[2]).is_err());
    }

    #[test]
    fn replace_preserves_canonical_form() {
        let x = LocId::new("x");
        // Replacing a factor with id must elide it.
        let t = Term::comp(Term::Lookup(x.clone()), Term::Update(x.clone()));
        let replaced = t.replace_at(&[0], Term::id(ObjType::Unit)).unwrap();
        assert_eq!(replaced, Term::Update(x));
    }

    #[test]
    fn defs_are_opaque_and_unfold() {
        let x = LocId::new("x");
        let body = Term::comp(Term::Update(x.clone()), Term::const_int(2.into()));
        let d = Term::def("inc", body.clone());
        assert_eq!(d.decoration(), Decoration::new(2, 0));
        assert!(d.contains_def("inc"));
        assert_eq!(d.unfold_def("inc"), body);
        // Unfolding does not reach inside other defs.
        let outer = Term::def("outer", d.clone());
        assert_eq!(outer.unfold_def("inc"), outer);
    }

    #[test]
    fn display_round_shapes() {
        let x = LocId::new("x");
        let t = Term::comp(
            Term::Update(x.clone()),
            Term::comp(
                Term::pure(PureFn::Arith(crate::purefn::ArithOp::Add)),
                Term::pair(Term::Lookup(x), Term::const_int(4.into())),
            ),
        );
        assert_eq!(
            t.to_string(),
            "update(x) o tpure(add) o pair(lookup(x), constant(4))"
        );
    }
}
