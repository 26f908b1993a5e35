//! Window-based rewriting over canonical composition spines.
//!
//! A match site is a node holding a composition spine: the root of a goal
//! side, or a child of pair/copair/downcast/lpi reached from it. A candidate
//! rewrite replaces a contiguous window of factors in one site's spine.
//!
//! Scan order is deterministic and documented: all windows of a site's spine
//! by start index, then the factors' children in spine order, recursively.
//! Weak equations (in either effect dimension) may only match on the root
//! spine and are subject to frame checks there: a state-weak equation demands
//! state-pure post-composed frames, an exception-weak equation demands
//! exception-pure pre-composed frames. Strong (ss) equations match anywhere
//! with no frame conditions.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;

use crate::error::{CoreError, StepError};
use crate::purefn::{CVal, PureFn};
use crate::term::Term;
use crate::types::{EqKind, ExcName, LocId, ObjType, Strength, TypeEnv, Value};

/// Rewrite direction: forward replaces the left side by the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// A value supplied in a `with name := ...` binding.
#[derive(Debug, Clone, PartialEq)]
pub enum Binding {
    Int(BigInt),
    Bool(bool),
    Loc(LocId),
    Exc(ExcName),
    Term(Term),
}

pub type Bindings = BTreeMap<String, Binding>;

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binding::Int(n) => write!(f, "{}", n),
            Binding::Bool(b) => write!(f, "{}", b),
            Binding::Loc(i) => write!(f, "{}", i),
            Binding::Exc(e) => write!(f, "{}", e),
            Binding::Term(t) => write!(f, "{}", t),
        }
    }
}

pub fn get_loc(b: &Bindings, key: &str) -> Option<LocId> {
    match b.get(key) {
        Some(Binding::Loc(i)) => Some(i.clone()),
        _ => None,
    }
}

pub fn get_exc(b: &Bindings, key: &str) -> Option<ExcName> {
    match b.get(key) {
        Some(Binding::Exc(e)) => Some(e.clone()),
        _ => None,
    }
}

pub fn get_term(b: &Bindings, key: &str) -> Option<Term> {
    match b.get(key) {
        Some(Binding::Term(t)) => Some(t.clone()),
        _ => None,
    }
}

pub fn get_purefn(b: &Bindings, key: &str) -> Option<PureFn> {
    match b.get(key) {
        Some(Binding::Term(Term::TPure(f))) => Some(f.clone()),
        _ => None,
    }
}

/// A spine-holding node reachable from a goal side.
#[derive(Debug, Clone)]
pub struct Site {
    /// Path from the side root to this node.
    pub path: Vec<usize>,
    /// The node's composition spine (a single factor for non-compositions).
    pub factors: Vec<Term>,
}

/// Path of factor `i` of an `n`-factor spine below `base`, in the
/// right-nested binary comp tree.
pub fn factor_path(base: &[usize], i: usize, n: usize) -> Vec<usize> {
    let mut p = base.to_vec();
    if n == 1 {
        return p;
    }
    for _ in 0..i {
        p.push(1);
    }
    if i < n - 1 {
        p.push(0);
    }
    p
}

/// All match sites of a side in scan order. Children are included only when
/// the equation may descend (`descend` = equation is ss).
pub fn sites(side: &Term, descend: bool) -> Vec<Site> {
    let mut out = Vec::new();
    collect(side, Vec::new(), descend, &mut out);
    out
}

fn collect(node: &Term, path: Vec<usize>, descend: bool, out: &mut Vec<Site>) {
    let factors = node.spine();
    let n = factors.len();
    out.push(Site { path: path.clone(), factors: factors.clone() });
    if !descend {
        return;
    }
    for (i, f) in factors.iter().enumerate() {
        let fpath = factor_path(&path, i, n);
        match f {
            Term::Pair(a, b) | Term::Copair(a, b) | Term::Lpi(a, b) => {
                let mut pa = fpath.clone();
                pa.push(0);
                collect(a, pa, descend, out);
                let mut pb = fpath;
                pb.push(1);
                collect(b, pb, descend, out);
            }
            Term::Downcast(t) => {
                let mut pt = fpath;
                pt.push(0);
                collect(t, pt, descend, out);
            }
            _ => {}
        }
    }
}

/// A structural match, with its side condition evaluated but not yet
/// enforced, so the engine can pick the first fully legal candidate and
/// report a precise error when none is.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub site_path: Vec<usize>,
    pub start: usize,
    pub len: usize,
    pub replacement: Vec<Term>,
    pub side_cond: Result<(), String>,
    pub binds_desc: String,
    pub note: Option<String>,
}

impl Candidate {
    /// Does a user-supplied path address this candidate? A path may name the
    /// comp node whose spine suffix starts the window, or the window's first
    /// factor.
    pub fn matches_path(&self, path: &[usize], n_factors: usize) -> bool {
        let mut suffix = self.site_path.clone();
        for _ in 0..self.start {
            suffix.push(1);
        }
        if path == suffix.as_slice() {
            return true;
        }
        path == factor_path(&self.site_path, self.start, n_factors).as_slice()
    }
}

/// Frame legality of a window under an equation kind.
pub fn check_frames(
    kind: EqKind,
    site_path: &[usize],
    factors: &[Term],
    start: usize,
    len: usize,
) -> Result<(), StepError> {
    let state_weak = kind.state == Strength::Weak;
    let exc_weak = kind.exc == Strength::Weak;
    if !state_weak && !exc_weak {
        return Ok(());
    }
    if !site_path.is_empty() {
        return Err(StepError::ImpureContext(
            "a weak equation cannot rewrite beneath a pair, copair, downcast, or loop constructor"
                .into(),
        ));
    }
    if state_weak {
        for f in &factors[..start] {
            if f.decoration().state > 0 {
                return Err(StepError::ImpureContext(format!(
                    "state-weak equation under state-impure post-composed frame `{}`",
                    f
                )));
            }
        }
    }
    if exc_weak {
        for f in &factors[start + len..] {
            if f.decoration().exc > 0 {
                return Err(StepError::ImpureContext(format!(
                    "exception-weak equation over exception-impure pre-composed frame `{}`",
                    f
                )));
            }
        }
    }
    Ok(())
}

/// Apply a candidate to a side, splicing the replacement into the window.
pub fn apply(side: &Term, cand: &Candidate, env: &TypeEnv) -> Result<Term, CoreError> {
    let holder = side.subterm_at(&cand.site_path)?;
    let (holder_dom, _) = holder.typecheck(env)?;
    let mut factors = holder.spine();
    factors.splice(cand.start..cand.start + cand.len, cand.replacement.iter().cloned());
    let non_identity = factors.iter().any(|f| !matches!(f, Term::TPure(p) if p.is_identity()));
    let rebuilt = if factors.is_empty() || !non_identity {
        Term::id(holder_dom)
    } else {
        Term::from_spine(factors)
    };
    side.replace_at(&cand.site_path, rebuilt)
}

// ----- generic first-order matching (used for lemma citations) -----

/// Bindings accumulated during matching: schematic term variables and
/// symbolic integer parameters.
#[derive(Debug, Clone, Default)]
pub struct MatchEnv {
    pub terms: BTreeMap<String, Term>,
    pub ints: BTreeMap<String, BigInt>,
}

/// Match a pattern window (pattern spine) against a window of a subject
/// spine, factor by factor. Schematic variables match exactly one factor.
pub fn match_window(pattern: &[Term], window: &[Term], env: &TypeEnv, m: &mut MatchEnv) -> bool {
    if pattern.len() != window.len() {
        return false;
    }
    pattern
        .iter()
        .zip(window.iter())
        .all(|(p, s)| match_term(p, s, env, m))
}

/// First-order structural matching modulo type resolution, binding schematic
/// term variables (signature-exact, decoration-bounded) and symbolic integer
/// constants (ground integers only). Nonlinear occurrences must agree.
pub fn match_term(pattern: &Term, subject: &Term, env: &TypeEnv, m: &mut MatchEnv) -> bool {
    match (pattern, subject) {
        (Term::Var(v), _) => {
            if let Some(bound) = m.terms.get(&v.name) {
                return bound.eq_resolved(subject, env);
            }
            let (d, c) = match subject.typecheck(env) {
                Ok(sig) => sig,
                Err(_) => return false,
            };
            if !env.types_eq(&d, &v.dom) || !env.types_eq(&c, &v.cod) {
                return false;
            }
            if !subject.decoration().leq(v.deco) {
                return false;
            }
            m.terms.insert(v.name.clone(), subject.clone());
            true
        }
        (Term::TPure(p), Term::TPure(q)) => match_purefn(p, q, env, m),
        (Term::Comp(_, _), Term::Comp(_, _)) => {
            let ps = pattern.spine();
            let ss = subject.spine();
            ps.len() == ss.len() && ps.iter().zip(ss.iter()).all(|(p, s)| match_term(p, s, env, m))
        }
        (Term::Pair(a, b), Term::Pair(c, d))
        | (Term::Copair(a, b), Term::Copair(c, d))
        | (Term::Lpi(a, b), Term::Lpi(c, d)) => {
            match_term(a, c, env, m) && match_term(b, d, env, m)
        }
        (Term::Downcast(a), Term::Downcast(b)) => match_term(a, b, env, m),
        (Term::Lookup(i), Term::Lookup(j)) | (Term::Update(i), Term::Update(j)) => i == j,
        (Term::Tag(e), Term::Tag(f)) | (Term::Untag(e), Term::Untag(f)) => e == f,
        (Term::Pbl, Term::Pbl) => true,
        (Term::Def(n, a), Term::Def(n2, b)) => n == n2 && a.eq_resolved(b, env),
        _ => false,
    }
}

fn match_purefn(pattern: &PureFn, subject: &PureFn, env: &TypeEnv, m: &mut MatchEnv) -> bool {
    match (pattern, subject) {
        (PureFn::Const(CVal::Sym(s), d, c), PureFn::Const(cv, d2, c2)) => {
            if !env.types_eq(d, d2) || !env.types_eq(c, c2) {
                return false;
            }
            match cv {
                CVal::Ground(Value::I(n)) => {
                    if let Some(bound) = m.ints.get(s) {
                        bound == n
                    } else {
                        m.ints.insert(s.clone(), n.clone());
                        true
                    }
                }
                CVal::Sym(t) if s == t => true,
                _ => false,
            }
        }
        (PureFn::Compose(a, b), PureFn::Compose(c, d))
        | (PureFn::PairFn(a, b), PureFn::PairFn(c, d)) => {
            match_purefn(a, c, env, m) && match_purefn(b, d, env, m)
        }
        _ => {
            let res = |t: &ObjType| env.resolve(t);
            pattern.map_types(&res) == subject.map_types(&res)
        }
    }
}
