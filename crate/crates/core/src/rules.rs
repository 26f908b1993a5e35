//! The rule catalog: equational axioms and schemes citable in proof scripts.
//!
//! Every rewrite-citable rule carries the kind of equation it establishes;
//! the engine compares that kind against the goal kind and applies frame
//! checks for the weak dimensions (see `rewrite`). Conversion and split
//! rules are listed here for naming but are driven by the engine directly.
//!
//! Matchers are hand-written per rule: each scans a window of a composition
//! spine and, on a structural hit, reports the replacement together with the
//! evaluated side condition. The engine picks the first fully legal hit.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::StepError;
use crate::purefn::{CVal, PureFn};
use crate::rewrite::{
    self, get_exc, get_loc, get_purefn, get_term, Binding, Bindings, Candidate, Direction,
    MatchEnv,
};
use crate::term::{Term, TermVar};
use crate::types::{EqKind, ObjType, TypeEnv, Value};

/// Every citable rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleId {
    // state axioms
    Ax1,
    Ax2,
    UnitW,
    Pair1,
    Pair2,
    // exception axioms
    Eax1,
    Eax2,
    EmptyW,
    DowncastW,
    Copair1,
    Copair2,
    PropEmpty,
    // conversions
    Eq1,
    Eeq1,
    WwToSs,
    // splits
    Eq2,
    Eq3,
    Eeq2,
    Eeq3,
    PairSplit,
    // schemes for translated programs
    ImpLoopIter,
    Imp1,
    Imp2,
    Imp3,
    Imp4,
    Imp5,
    Imp6,
    Imp7,
}

/// How a rule participates in proofs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleRole {
    /// Citable in `rewrite` steps.
    Rewrite,
    /// Citable in `conv` steps (implicitly, via kind change legality).
    Conversion,
    /// Citable in `split` steps.
    Split,
}

impl RuleId {
    pub const ALL: [RuleId; 28] = [
        RuleId::Ax1,
        RuleId::Ax2,
        RuleId::UnitW,
        RuleId::Pair1,
        RuleId::Pair2,
        RuleId::Eax1,
        RuleId::Eax2,
        RuleId::EmptyW,
        RuleId::DowncastW,
        RuleId::Copair1,
        RuleId::Copair2,
        RuleId::PropEmpty,
        RuleId::Eq1,
        RuleId::Eeq1,
        RuleId::WwToSs,
        RuleId::Eq2,
        RuleId::Eq3,
        RuleId::Eeq2,
        RuleId::Eeq3,
        RuleId::PairSplit,
        RuleId::ImpLoopIter,
        RuleId::Imp1,
        RuleId::Imp2,
        RuleId::Imp3,
        RuleId::Imp4,
        RuleId::Imp5,
        RuleId::Imp6,
        RuleId::Imp7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleId::Ax1 => "ax1",
            RuleId::Ax2 => "ax2",
            RuleId::UnitW => "unit_w",
            RuleId::Pair1 => "pair1",
            RuleId::Pair2 => "pair2",
            RuleId::Eax1 => "eax1",
            RuleId::Eax2 => "eax2",
            RuleId::EmptyW => "empty_w",
            RuleId::DowncastW => "downcast_w",
            RuleId::Copair1 => "copair1",
            RuleId::Copair2 => "copair2",
            RuleId::PropEmpty => "prop_empty",
            RuleId::Eq1 => "eq1",
            RuleId::Eeq1 => "eeq1",
            RuleId::WwToSs => "ww_to_ss",
            RuleId::Eq2 => "eq2",
            RuleId::Eq3 => "eq3",
            RuleId::Eeq2 => "eeq2",
            RuleId::Eeq3 => "eeq3",
            RuleId::PairSplit => "pair_split",
            RuleId::ImpLoopIter => "imp_loopiter",
            RuleId::Imp1 => "imp1",
            RuleId::Imp2 => "imp2",
            RuleId::Imp3 => "imp3",
            RuleId::Imp4 => "imp4",
            RuleId::Imp5 => "imp5",
            RuleId::Imp6 => "imp6",
            RuleId::Imp7 => "imp7",
        }
    }

    pub fn parse(s: &str) -> Option<RuleId> {
        RuleId::ALL.iter().copied().find(|r| r.name() == s)
    }

    pub fn role(self) -> RuleRole {
        match self {
            RuleId::Eq1 | RuleId::Eeq1 | RuleId::WwToSs => RuleRole::Conversion,
            RuleId::Eq2 | RuleId::Eq3 | RuleId::Eeq2 | RuleId::Eeq3 | RuleId::PairSplit => {
                RuleRole::Split
            }
            _ => RuleRole::Rewrite,
        }
    }

    /// Kind of the equation a rewrite rule establishes.
    pub fn eq_kind(self) -> EqKind {
        match self {
            RuleId::Ax1 | RuleId::Ax2 | RuleId::UnitW | RuleId::Pair1 => EqKind::WS,
            RuleId::Eax1 | RuleId::Eax2 | RuleId::EmptyW | RuleId::DowncastW | RuleId::Copair1 => {
                EqKind::SW
            }
            _ => EqKind::SS,
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A decorated equation between two terms of a common interface.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
    pub kind: EqKind,
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term, kind: EqKind) -> Self {
        Equation { lhs, rhs, kind }
    }

    /// Both sides must typecheck at one shared interface.
    pub fn check(&self, env: &TypeEnv) -> Result<(ObjType, ObjType), crate::error::CoreError> {
        let (ld, lc) = self.lhs.typecheck(env)?;
        let (rd, rc) = self.rhs.typecheck(env)?;
        if !env.types_eq(&ld, &rd) || !env.types_eq(&lc, &rc) {
            return Err(crate::error::CoreError::SignatureMismatch(format!(
                "equation sides disagree: {} -> {} versus {} -> {}",
                ld, lc, rd, rc
            )));
        }
        Ok((ld, lc))
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.kind, self.rhs)
    }
}

/// A proven, citable lemma. Schematic in its declared term variables and
/// symbolic integer parameters.
#[derive(Debug, Clone)]
pub struct Lemma {
    pub name: String,
    pub eq: Equation,
    pub term_params: Vec<TermVar>,
    pub int_params: Vec<String>,
}

fn desc_of(pairs: &[(String, String)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{} := {}", k, v))
        .collect::<Vec<_>>()
        .join(", ")
}

fn factors_eq(a: &[Term], b: &[Term], env: &TypeEnv) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.eq_resolved(y, env))
}

/// Ground constant integer inside a factor, if the factor is one.
fn const_int_of(t: &Term) -> Option<&BigInt> {
    match t {
        Term::TPure(PureFn::Const(CVal::Ground(Value::I(n)), _, _)) => Some(n),
        _ => None,
    }
}

fn const_bool_of(t: &Term) -> Option<bool> {
    match t {
        Term::TPure(PureFn::Const(CVal::Ground(Value::B(b)), _, _)) => Some(*b),
        _ => None,
    }
}

fn is_const(t: &Term) -> bool {
    matches!(t, Term::TPure(PureFn::Const(_, _, _)))
}

struct Hit {
    len: usize,
    replacement: Vec<Term>,
    side_cond: Result<(), String>,
    desc: String,
    note: Option<String>,
}

/// Enumerate structural matches of a rewrite rule over a goal side, in scan
/// order. Missing required bindings error out before any scanning.
pub fn rule_candidates(
    rule: RuleId,
    dir: Direction,
    b: &Bindings,
    side: &Term,
    env: &TypeEnv,
) -> Result<Vec<Candidate>, StepError> {
    if rule.role() != RuleRole::Rewrite {
        return Err(StepError::NotRewritable(format!(
            "rule {} is a {} rule and cannot be cited in a rewrite step",
            rule,
            match rule.role() {
                RuleRole::Conversion => "conversion",
                RuleRole::Split => "split",
                RuleRole::Rewrite => unreachable!(),
            }
        )));
    }
    check_required_bindings(rule, dir, b)?;
    let descend = rule.eq_kind() == EqKind::SS;
    let mut out = Vec::new();
    for site in rewrite::sites(side, descend) {
        let n = site.factors.len();
        for start in 0..n {
            if let Some(hit) = match_rule_window(rule, dir, b, &site.factors[start..], env)? {
                out.push(Candidate {
                    site_path: site.path.clone(),
                    start,
                    len: hit.len,
                    replacement: hit.replacement,
                    side_cond: hit.side_cond,
                    binds_desc: hit.desc,
                    note: hit.note,
                });
            }
        }
    }
    Ok(out)
}

fn check_required_bindings(rule: RuleId, dir: Direction, b: &Bindings) -> Result<(), StepError> {
    let need: &[&str] = match (rule, dir) {
        (RuleId::UnitW, _) | (RuleId::EmptyW, _) => &["f", "g"],
        (RuleId::Pair1, Direction::Backward)
        | (RuleId::Pair2, Direction::Backward)
        | (RuleId::Copair1, Direction::Backward)
        | (RuleId::Copair2, Direction::Backward) => &["f1", "f2"],
        (RuleId::DowncastW, Direction::Backward) => &["f"],
        (RuleId::PropEmpty, Direction::Backward) => &["g"],
        (RuleId::Ax1, Direction::Backward) => &["i"],
        (RuleId::Eax1, Direction::Backward) => &["e"],
        (RuleId::Imp6, Direction::Backward) => &["f", "g"],
        (RuleId::Imp7, Direction::Forward) => &["g"],
        (RuleId::Imp7, Direction::Backward) => &["f"],
        _ => &[],
    };
    for key in need {
        if !b.contains_key(*key) {
            return Err(StepError::BindingTypeMismatch(format!(
                "rule {} cited {} requires `with {} := ...`",
                rule,
                match dir {
                    Direction::Forward => "forward",
                    Direction::Backward => "backward",
                },
                key
            )));
        }
    }
    Ok(())
}

/// Try to match `rule` at the head of `w` (a spine suffix).
fn match_rule_window(
    rule: RuleId,
    dir: Direction,
    b: &Bindings,
    w: &[Term],
    env: &TypeEnv,
) -> Result<Option<Hit>, StepError> {
    match rule {
        RuleId::Ax1 => Ok(ax1(dir, b, w, env)),
        RuleId::Ax2 => Ok(ax2(dir, b, w, env)),
        RuleId::UnitW => unit_or_empty_w(rule, dir, b, w, env),
        RuleId::EmptyW => unit_or_empty_w(rule, dir, b, w, env),
        RuleId::Pair1 => pair_proj(true, dir, b, w, env),
        RuleId::Pair2 => pair_proj(false, dir, b, w, env),
        RuleId::Eax1 => Ok(eax1(dir, b, w, env)),
        RuleId::Eax2 => Ok(eax2(dir, b, w, env)),
        RuleId::DowncastW => Ok(downcast_w(dir, b, w, env)),
        RuleId::Copair1 => copair_inj(true, dir, b, w, env),
        RuleId::Copair2 => copair_inj(false, dir, b, w, env),
        RuleId::PropEmpty => prop_empty(dir, b, w, env),
        RuleId::ImpLoopIter => Ok(imp_loopiter(dir, w, env)),
        RuleId::Imp1 => imp_arith(dir, w, env),
        RuleId::Imp2 => imp_cmp(dir, w, env, false),
        RuleId::Imp3 => imp_cmp(dir, w, env, true),
        RuleId::Imp4 => imp_bool(dir, w, env, false),
        RuleId::Imp5 => imp_bool(dir, w, env, true),
        RuleId::Imp6 => Ok(imp6(dir, b, w, env)),
        RuleId::Imp7 => imp7(dir, b, w, env),
        _ => unreachable!("non-rewrite rules rejected earlier"),
    }
}

// lookup(i) o update(i) ~== id
fn ax1(dir: Direction, b: &Bindings, w: &[Term], env: &TypeEnv) -> Option<Hit> {
    match dir {
        Direction::Forward => {
            let (Term::Lookup(i), Term::Update(j)) = (w.first()?, w.get(1)?) else {
                return None;
            };
            if i != j {
                return None;
            }
            if let Some(bi) = get_loc(b, "i") {
                if &bi != i {
                    return None;
                }
            }
            Some(Hit {
                len: 2,
                replacement: vec![],
                side_cond: Ok(()),
                desc: desc_of(&[("i".into(), i.to_string())]),
                note: None,
            })
        }
        Direction::Backward => {
            let i = get_loc(b, "i")?;
            let Term::TPure(p) = w.first()? else { return None };
            if !p.is_identity() || !env.types_eq(&p.dom(), &ObjType::ValOf(i.clone())) {
                return None;
            }
            Some(Hit {
                len: 1,
                replacement: vec![Term::Lookup(i.clone()), Term::Update(i.clone())],
                side_cond: Ok(()),
                desc: desc_of(&[("i".into(), i.to_string())]),
                note: None,
            })
        }
    }
}

// lookup(i) o update(j) ~== lookup(i) o forget   (i and j distinct)
fn ax2(dir: Direction, b: &Bindings, w: &[Term], env: &TypeEnv) -> Option<Hit> {
    match dir {
        Direction::Forward => {
            let (Term::Lookup(i), Term::Update(j)) = (w.first()?, w.get(1)?) else {
                return None;
            };
            if let Some(bi) = get_loc(b, "i") {
                if &bi != i {
                    return None;
                }
            }
            if let Some(bj) = get_loc(b, "j") {
                if &bj != j {
                    return None;
                }
            }
            let side_cond = if i == j {
                Err(format!("ax2 requires distinct locations; both are {}", i))
            } else {
                Ok(())
            };
            Some(Hit {
                len: 2,
                replacement: vec![
                    Term::Lookup(i.clone()),
                    Term::forget(ObjType::ValOf(j.clone())),
                ],
                side_cond,
                desc: desc_of(&[("i".into(), i.to_string()), ("j".into(), j.to_string())]),
                note: None,
            })
        }
        Direction::Backward => {
            let (Term::Lookup(i), Term::TPure(PureFn::ToUnit(t))) = (w.first()?, w.get(1)?)
            else {
                return None;
            };
            let j = match get_loc(b, "j") {
                Some(j) => j,
                None => match t {
                    ObjType::ValOf(j) => j.clone(),
                    _ => return None,
                },
            };
            if !env.types_eq(t, &ObjType::ValOf(j.clone())) {
                return None;
            }
            let side_cond = if i == &j {
                Err(format!("ax2 requires distinct locations; both are {}", i))
            } else {
                Ok(())
            };
            Some(Hit {
                len: 2,
                replacement: vec![Term::Lookup(i.clone()), Term::Update(j.clone())],
                side_cond,
                desc: desc_of(&[("i".into(), i.to_string()), ("j".into(), j.to_string())]),
                note: None,
            })
        }
    }
}

// unit_w: f ~== g for any f, g : X -> unit.  empty_w: f ==~ g for f, g : empty -> X.
// Both sides always explicit; the pattern side is matched literally.
fn unit_or_empty_w(
    rule: RuleId,
    dir: Direction,
    b: &Bindings,
    w: &[Term],
    env: &TypeEnv,
) -> Result<Option<Hit>, StepError> {
    let f = get_term(b, "f").ok_or_else(|| bad_binding(rule, "f", "a term"))?;
    let g = get_term(b, "g").ok_or_else(|| bad_binding(rule, "g", "a term"))?;
    let (fd, fc) = f
        .typecheck(env)
        .map_err(|e| StepError::BindingTypeMismatch(format!("{} binding f: {}", rule, e)))?;
    let (gd, gc) = g
        .typecheck(env)
        .map_err(|e| StepError::BindingTypeMismatch(format!("{} binding g: {}", rule, e)))?;
    let iface_ok = match rule {
        RuleId::UnitW => {
            env.types_eq(&fc, &ObjType::Unit)
                && env.types_eq(&gc, &ObjType::Unit)
                && env.types_eq(&fd, &gd)
        }
        _ => {
            env.types_eq(&fd, &ObjType::Empty)
                && env.types_eq(&gd, &ObjType::Empty)
                && env.types_eq(&fc, &gc)
        }
    };
    if !iface_ok {
        return Err(StepError::BindingTypeMismatch(format!(
            "{} needs {} with a shared interface; got {} -> {} and {} -> {}",
            rule,
            if rule == RuleId::UnitW {
                "two maps into unit"
            } else {
                "two maps out of empty"
            },
            fd,
            fc,
            gd,
            gc
        )));
    }
    let (pat, rep) = match dir {
        Direction::Forward => (&f, &g),
        Direction::Backward => (&g, &f),
    };
    let ps = pat.spine();
    if w.len() < ps.len() || !factors_eq(&ps, &w[..ps.len()], env) {
        return Ok(None);
    }
    Ok(Some(Hit {
        len: ps.len(),
        replacement: rep.spine(),
        side_cond: Ok(()),
        desc: desc_of(&[("f".into(), f.to_string()), ("g".into(), g.to_string())]),
        note: None,
    }))
}

fn bad_binding(rule: RuleId, key: &str, what: &str) -> StepError {
    StepError::BindingTypeMismatch(format!("rule {} requires binding {} to be {}", rule, key, what))
}

// pair1: pi1 o pair(f1, f2) ~== f1.  pair2: pi2 o pair(f1, f2) == f2.
// Both demand a state-accessor first component (degree <= 1).
fn pair_proj(
    first: bool,
    dir: Direction,
    b: &Bindings,
    w: &[Term],
    env: &TypeEnv,
) -> Result<Option<Hit>, StepError> {
    let rule = if first { RuleId::Pair1 } else { RuleId::Pair2 };
    match dir {
        Direction::Forward => {
            let (Term::TPure(p), Term::Pair(f1, f2)) = (
                match w.first() {
                    Some(t) => t,
                    None => return Ok(None),
                },
                match w.get(1) {
                    Some(t) => t,
                    None => return Ok(None),
                },
            ) else {
                return Ok(None);
            };
            let Ok((_, c1)) = f1.typecheck(env) else { return Ok(None) };
            let Ok((_, c2)) = f2.typecheck(env) else { return Ok(None) };
            let proj_ok = match p {
                PureFn::Fst(a, bb) if first => env.types_eq(a, &c1) && env.types_eq(bb, &c2),
                PureFn::Snd(a, bb) if !first => env.types_eq(a, &c1) && env.types_eq(bb, &c2),
                // Projections into unit canonicalize to the forget map.
                PureFn::ToUnit(t) => {
                    env.types_eq(t, &ObjType::prod(c1.clone(), c2.clone()))
                        && env.types_eq(if first { &c1 } else { &c2 }, &ObjType::Unit)
                }
                _ => return Ok(None),
            };
            if !proj_ok {
                return Ok(None);
            }
            for (key, given, actual) in
                [("f1", get_term(b, "f1"), f1), ("f2", get_term(b, "f2"), f2)]
            {
                if let Some(t) = given {
                    if !t.eq_resolved(actual, env) {
                        let _ = key;
                        return Ok(None);
                    }
                }
            }
            let side_cond = accessor_cond(rule, f1);
            let kept = if first { f1 } else { f2 };
            Ok(Some(Hit {
                len: 2,
                replacement: kept.spine(),
                side_cond,
                desc: desc_of(&[
                    ("f1".into(), f1.to_string()),
                    ("f2".into(), f2.to_string()),
                ]),
                note: None,
            }))
        }
        Direction::Backward => {
            let f1 = get_term(b, "f1").ok_or_else(|| bad_binding(rule, "f1", "a term"))?;
            let f2 = get_term(b, "f2").ok_or_else(|| bad_binding(rule, "f2", "a term"))?;
            let (d1, c1) = f1
                .typecheck(env)
                .map_err(|e| StepError::BindingTypeMismatch(format!("{} binding f1: {}", rule, e)))?;
            let (d2, c2) = f2
                .typecheck(env)
                .map_err(|e| StepError::BindingTypeMismatch(format!("{} binding f2: {}", rule, e)))?;
            if !env.types_eq(&d1, &d2) {
                return Err(StepError::BindingTypeMismatch(format!(
                    "{}: pair components need a common domain; got {} and {}",
                    rule, d1, d2
                )));
            }
            let kept = if first { &f1 } else { &f2 };
            let ps = kept.spine();
            if w.len() < ps.len() || !factors_eq(&ps, &w[..ps.len()], env) {
                return Ok(None);
            }
            let proj = if first {
                Term::pi1(c1.clone(), c2.clone())
            } else {
                Term::pi2(c1.clone(), c2.clone())
            };
            Ok(Some(Hit {
                len: ps.len(),
                replacement: vec![proj, Term::pair(f1.clone(), f2.clone())],
                side_cond: accessor_cond(rule, &f1),
                desc: desc_of(&[
                    ("f1".into(), f1.to_string()),
                    ("f2".into(), f2.to_string()),
                ]),
                note: None,
            }))
        }
    }
}

fn accessor_cond(rule: RuleId, f1: &Term) -> Result<(), String> {
    let d = f1.decoration();
    if d.state <= 1 {
        Ok(())
    } else {
        Err(format!(
            "{} requires the first pair component to be a state accessor (degree <= 1); `{}` has degree {}",
            rule, f1, d.state
        ))
    }
}

// untag(e) o tag(e) ==~ id
fn eax1(dir: Direction, b: &Bindings, w: &[Term], env: &TypeEnv) -> Option<Hit> {
    match dir {
        Direction::Forward => {
            let (Term::Untag(e), Term::Tag(e2)) = (w.first()?, w.get(1)?) else {
                return None;
            };
            if e != e2 {
                return None;
            }
            if let Some(be) = get_exc(b, "e") {
                if &be != e {
                    return None;
                }
            }
            Some(Hit {
                len: 2,
                replacement: vec![],
                side_cond: Ok(()),
                desc: desc_of(&[("e".into(), e.to_string())]),
                note: None,
            })
        }
        Direction::Backward => {
            let e = get_exc(b, "e")?;
            let Term::TPure(p) = w.first()? else { return None };
            if !p.is_identity() || !env.types_eq(&p.dom(), &ObjType::EValOf(e.clone())) {
                return None;
            }
            Some(Hit {
                len: 1,
                replacement: vec![Term::Untag(e.clone()), Term::Tag(e.clone())],
                side_cond: Ok(()),
                desc: desc_of(&[("e".into(), e.to_string())]),
                note: None,
            })
        }
    }
}

// untag(e1) o tag(e2) ==~ empty(eval(e1)) o tag(e2)   (e1 and e2 distinct)
fn eax2(dir: Direction, b: &Bindings, w: &[Term], env: &TypeEnv) -> Option<Hit> {
    match dir {
        Direction::Forward => {
            let (Term::Untag(e1), Term::Tag(e2)) = (w.first()?, w.get(1)?) else {
                return None;
            };
            if let Some(be) = get_exc(b, "e1") {
                if &be != e1 {
                    return None;
                }
            }
            if let Some(be) = get_exc(b, "e2") {
                if &be != e2 {
                    return None;
                }
            }
            let side_cond = if e1 == e2 {
                Err(format!("eax2 requires distinct exception names; both are {}", e1))
            } else {
                Ok(())
            };
            Some(Hit {
                len: 2,
                replacement: vec![
                    Term::empty_from(ObjType::EValOf(e1.clone())),
                    Term::Tag(e2.clone()),
                ],
                side_cond,
                desc: desc_of(&[("e1".into(), e1.to_string()), ("e2".into(), e2.to_string())]),
                note: None,
            })
        }
        Direction::Backward => {
            let (Term::TPure(PureFn::FromEmpty(t)), Term::Tag(e2)) = (w.first()?, w.get(1)?)
            else {
                return None;
            };
            let e1 = match get_exc(b, "e1") {
                Some(e) => e,
                None => match t {
                    ObjType::EValOf(e) => e.clone(),
                    _ => return None,
                },
            };
            if !env.types_eq(t, &ObjType::EValOf(e1.clone())) {
                return None;
            }
            let side_cond = if &e1 == e2 {
                Err(format!("eax2 requires distinct exception names; both are {}", e1))
            } else {
                Ok(())
            };
            Some(Hit {
                len: 2,
                replacement: vec![Term::Untag(e1.clone()), Term::Tag(e2.clone())],
                side_cond,
                desc: desc_of(&[("e1".into(), e1.to_string()), ("e2".into(), e2.to_string())]),
                note: None,
            })
        }
    }
}

// downcast(f) ==~ f
fn downcast_w(dir: Direction, b: &Bindings, w: &[Term], env: &TypeEnv) -> Option<Hit> {
    match dir {
        Direction::Forward => {
            let Term::Downcast(f) = w.first()? else { return None };
            if let Some(bf) = get_term(b, "f") {
                if !bf.eq_resolved(f, env) {
                    return None;
                }
            }
            Some(Hit {
                len: 1,
                replacement: f.spine(),
                side_cond: Ok(()),
                desc: desc_of(&[("f".into(), f.to_string())]),
                note: None,
            })
        }
        Direction::Backward => {
            let f = get_term(b, "f")?;
            let ps = f.spine();
            if w.len() < ps.len() || !factors_eq(&ps, &w[..ps.len()], env) {
                return None;
            }
            Some(Hit {
                len: ps.len(),
                replacement: vec![Term::downcast(f.clone())],
                side_cond: Ok(()),
                desc: desc_of(&[("f".into(), f.to_string())]),
                note: None,
            })
        }
    }
}

// copair1: copair(f1, f2) o inl ==~ f1.  copair2: copair(f1, f2) o inr == f2.
// Both demand an exception-propagating first component (degree <= 1).
fn copair_inj(
    first: bool,
    dir: Direction,
    b: &Bindings,
    w: &[Term],
    env: &TypeEnv,
) -> Result<Option<Hit>, StepError> {
    let rule = if first { RuleId::Copair1 } else { RuleId::Copair2 };
    match dir {
        Direction::Forward => {
            let (Some(Term::Copair(f1, f2)), Some(Term::TPure(p))) = (w.first(), w.get(1)) else {
                return Ok(None);
            };
            let Ok((d1, _)) = f1.typecheck(env) else { return Ok(None) };
            let Ok((d2, _)) = f2.typecheck(env) else { return Ok(None) };
            let inj_ok = match p {
                PureFn::InjLeft(a, bb) if first => env.types_eq(a, &d1) && env.types_eq(bb, &d2),
                PureFn::InjRight(a, bb) if !first => env.types_eq(a, &d1) && env.types_eq(bb, &d2),
                _ => false,
            };
            if !inj_ok {
                return Ok(None);
            }
            for (given, actual) in [(get_term(b, "f1"), f1), (get_term(b, "f2"), f2)] {
                if let Some(t) = given {
                    if !t.eq_resolved(actual, env) {
                        return Ok(None);
                    }
                }
            }
            let kept = if first { f1 } else { f2 };
            Ok(Some(Hit {
                len: 2,
                replacement: kept.spine(),
                side_cond: propagator_cond(rule, f1),
                desc: desc_of(&[
                    ("f1".into(), f1.to_string()),
                    ("f2".into(), f2.to_string()),
                ]),
                note: None,
            }))
        }
        Direction::Backward => {
            let f1 = get_term(b, "f1").ok_or_else(|| bad_binding(rule, "f1", "a term"))?;
            let f2 = get_term(b, "f2").ok_or_else(|| bad_binding(rule, "f2", "a term"))?;
            let (d1, c1) = f1
                .typecheck(env)
                .map_err(|e| StepError::BindingTypeMismatch(format!("{} binding f1: {}", rule, e)))?;
            let (d2, c2) = f2
                .typecheck(env)
                .map_err(|e| StepError::BindingTypeMismatch(format!("{} binding f2: {}", rule, e)))?;
            if !env.types_eq(&c1, &c2) {
                return Err(StepError::BindingTypeMismatch(format!(
                    "{}: copair components need a common codomain; got {} and {}",
                    rule, c1, c2
                )));
            }
            let kept = if first { &f1 } else { &f2 };
            let ps = kept.spine();
            if w.len() < ps.len() || !factors_eq(&ps, &w[..ps.len()], env) {
                return Ok(None);
            }
            let inj = if first {
                Term::inl(d1.clone(), d2.clone())
            } else {
                Term::inr(d1.clone(), d2.clone())
            };
            Ok(Some(Hit {
                len: ps.len(),
                replacement: vec![Term::copair(f1.clone(), f2.clone()), inj],
                side_cond: propagator_cond(rule, &f1),
                desc: desc_of(&[
                    ("f1".into(), f1.to_string()),
                    ("f2".into(), f2.to_string()),
                ]),
                note: None,
            }))
        }
    }
}

fn propagator_cond(rule: RuleId, f1: &Term) -> Result<(), String> {
    let d = f1.decoration();
    if d.exc <= 1 {
        Ok(())
    } else {
        Err(format!(
            "{} requires the first copair component to propagate exceptions (degree <= 1); `{}` has degree {}",
            rule, f1, d.exc
        ))
    }
}

/// Recognize the canonical empty coercion: `empty(t)` normalizes to
/// `to_unit(empty)` when `t` is `unit`, so both spellings must count.
fn empty_coercion(t: &Term) -> Option<ObjType> {
    match t {
        Term::TPure(PureFn::FromEmpty(c)) => Some(c.clone()),
        Term::TPure(PureFn::ToUnit(ObjType::Empty)) => Some(ObjType::Unit),
        _ => None,
    }
}

// g o empty(X) == empty(Y) for an exception-propagating g : X -> Y.
fn prop_empty(
    dir: Direction,
    b: &Bindings,
    w: &[Term],
    env: &TypeEnv,
) -> Result<Option<Hit>, StepError> {
    match dir {
        Direction::Forward => {
            let (g_len, g_term): (usize, Term) = match get_term(b, "g") {
                Some(g) => {
                    let ps = g.spine();
                    if w.len() < ps.len() + 1 || !factors_eq(&ps, &w[..ps.len()], env) {
                        return Ok(None);
                    }
                    (ps.len(), g)
                }
                None => {
                    if w.len() < 2 {
                        return Ok(None);
                    }
                    (1, w[0].clone())
                }
            };
            if w.get(g_len).and_then(empty_coercion).is_none() {
                return Ok(None);
            }
            let Ok((_, gc)) = g_term.typecheck(env) else { return Ok(None) };
            let d = g_term.decoration();
            let side_cond = if d.exc <= 1 {
                Ok(())
            } else {
                Err(format!(
                    "prop_empty requires an exception-propagating term (degree <= 1); `{}` has degree {}",
                    g_term, d.exc
                ))
            };
            Ok(Some(Hit {
                len: g_len + 1,
                replacement: vec![Term::empty_from(gc)],
                side_cond,
                desc: desc_of(&[("g".into(), g_term.to_string())]),
                note: None,
            }))
        }
        Direction::Backward => {
            let g = get_term(b, "g").ok_or_else(|| bad_binding(RuleId::PropEmpty, "g", "a term"))?;
            let (gd, gc) = g.typecheck(env).map_err(|e| {
                StepError::BindingTypeMismatch(format!("prop_empty binding g: {}", e))
            })?;
            let Some(t) = w.first().and_then(empty_coercion) else {
                return Ok(None);
            };
            if !env.types_eq(&t, &gc) {
                return Ok(None);
            }
            let d = g.decoration();
            let side_cond = if d.exc <= 1 {
                Ok(())
            } else {
                Err(format!(
                    "prop_empty requires an exception-propagating term (degree <= 1); `{}` has degree {}",
                    g, d.exc
                ))
            };
            let mut replacement = g.spine();
            replacement.push(Term::empty_from(gd));
            Ok(Some(Hit {
                len: 1,
                replacement,
                side_cond,
                desc: desc_of(&[("g".into(), g.to_string())]),
                note: None,
            }))
        }
    }
}

// lpi(b, f) == copair(lpi(b, f) o f, id) o b
fn imp_loopiter(dir: Direction, w: &[Term], env: &TypeEnv) -> Option<Hit> {
    match dir {
        Direction::Forward => {
            let Term::Lpi(cond, body) = w.first()? else { return None };
            let unrolled = Term::copair(
                Term::comp(Term::lpi((**cond).clone(), (**body).clone()), (**body).clone()),
                Term::id(ObjType::Unit),
            );
            let mut replacement = vec![unrolled];
            replacement.extend(cond.spine());
            Some(Hit {
                len: 1,
                replacement,
                side_cond: Ok(()),
                desc: desc_of(&[("b".into(), cond.to_string()), ("f".into(), body.to_string())]),
                note: None,
            })
        }
        Direction::Backward => {
            let Term::Copair(c1, c2) = w.first()? else { return None };
            if !matches!(&**c2, Term::TPure(p) if p.is_identity()) {
                return None;
            }
            let inner = c1.spine();
            let Term::Lpi(cond, body) = inner.first()? else { return None };
            let body_spine = body.spine();
            if inner.len() != 1 + body_spine.len()
                || !factors_eq(&inner[1..], &body_spine, env)
            {
                return None;
            }
            let cond_spine = cond.spine();
            if w.len() < 1 + cond_spine.len()
                || !factors_eq(&cond_spine, &w[1..1 + cond_spine.len()], env)
            {
                return None;
            }
            Some(Hit {
                len: 1 + cond_spine.len(),
                replacement: vec![Term::lpi((**cond).clone(), (**body).clone())],
                side_cond: Ok(()),
                desc: desc_of(&[("b".into(), cond.to_string()), ("f".into(), body.to_string())]),
                note: None,
            })
        }
    }
}

fn no_backward(rule: RuleId) -> StepError {
    StepError::NotRewritable(format!(
        "rule {} cannot be cited backward: the folded constant does not determine the operands",
        rule
    ))
}

// tpure(op) o pair(constant(p), constant(q)) == constant(op(p, q)) for arithmetic op.
fn imp_arith(dir: Direction, w: &[Term], env: &TypeEnv) -> Result<Option<Hit>, StepError> {
    if dir == Direction::Backward {
        return Err(no_backward(RuleId::Imp1));
    }
    let (Some(Term::TPure(PureFn::Arith(op))), Some(Term::Pair(f1, f2))) = (w.first(), w.get(1))
    else {
        return Ok(None);
    };
    if !is_const(f1) || !is_const(f2) {
        return Ok(None);
    }
    let side_cond;
    let replacement;
    match (const_int_of(f1), const_int_of(f2)) {
        (Some(p), Some(q)) => {
            let folded = op.apply(p, q);
            let Ok((dom, _)) = f1.typecheck(env) else { return Ok(None) };
            replacement = vec![Term::pure(PureFn::Const(
                CVal::Ground(Value::I(folded.clone())),
                dom,
                ObjType::Int,
            ))];
            side_cond = Ok(());
        }
        _ => {
            replacement = vec![];
            side_cond = Err("imp1 requires ground integer constants".to_string());
        }
    }
    Ok(Some(Hit {
        len: 2,
        replacement,
        side_cond,
        desc: desc_of(&[("op".into(), op.name().into())]),
        note: None,
    }))
}

// pbl o tpure(cmp) o pair(constant(p), constant(q)) == ffalse / ttrue.
fn imp_cmp(
    dir: Direction,
    w: &[Term],
    env: &TypeEnv,
    want: bool,
) -> Result<Option<Hit>, StepError> {
    let rule = if want { RuleId::Imp3 } else { RuleId::Imp2 };
    if dir == Direction::Backward {
        return Err(no_backward(rule));
    }
    let (Some(Term::Pbl), Some(Term::TPure(PureFn::Cmp(op))), Some(Term::Pair(f1, f2))) =
        (w.first(), w.get(1), w.get(2))
    else {
        return Ok(None);
    };
    if !is_const(f1) || !is_const(f2) {
        return Ok(None);
    }
    let _ = env;
    let side_cond = match (const_int_of(f1), const_int_of(f2)) {
        (Some(p), Some(q)) => {
            let v = op.apply(p, q);
            if v == want {
                Ok(())
            } else {
                Err(format!(
                    "{} requires {}({}, {}) to be {}; it is {}",
                    rule,
                    op.name(),
                    p,
                    q,
                    want,
                    v
                ))
            }
        }
        _ => Err(format!("{} requires ground integer constants", rule)),
    };
    Ok(Some(Hit {
        len: 3,
        replacement: vec![if want { Term::ttrue() } else { Term::ffalse() }],
        side_cond,
        desc: desc_of(&[("op".into(), op.name().into())]),
        note: None,
    }))
}

// pbl o tpure(bop) o pair(constant(a), constant(b)) == ffalse / ttrue.
fn imp_bool(
    dir: Direction,
    w: &[Term],
    env: &TypeEnv,
    want: bool,
) -> Result<Option<Hit>, StepError> {
    let rule = if want { RuleId::Imp5 } else { RuleId::Imp4 };
    if dir == Direction::Backward {
        return Err(no_backward(rule));
    }
    let (Some(Term::Pbl), Some(Term::TPure(PureFn::Bool(op))), Some(Term::Pair(f1, f2))) =
        (w.first(), w.get(1), w.get(2))
    else {
        return Ok(None);
    };
    if !is_const(f1) || !is_const(f2) {
        return Ok(None);
    }
    let _ = env;
    let side_cond = match (const_bool_of(f1), const_bool_of(f2)) {
        (Some(p), Some(q)) => {
            let v = op.apply(p, q);
            if v == want {
                Ok(())
            } else {
                Err(format!(
                    "{} requires {}({}, {}) to be {}; it is {}",
                    rule,
                    op.name(),
                    p,
                    q,
                    want,
                    v
                ))
            }
        }
        _ => Err(format!("{} requires ground boolean constants", rule)),
    };
    Ok(Some(Hit {
        len: 3,
        replacement: vec![if want { Term::ttrue() } else { Term::ffalse() }],
        side_cond,
        desc: desc_of(&[("op".into(), op.name().into())]),
        note: None,
    }))
}

// tpure(f) o tpure(g) == tpure(comp(f, g)); two adjacent pure factors merge.
fn imp6(dir: Direction, b: &Bindings, w: &[Term], env: &TypeEnv) -> Option<Hit> {
    match dir {
        Direction::Forward => {
            let (Term::TPure(f), Term::TPure(g)) = (w.first()?, w.get(1)?) else {
                return None;
            };
            if let Some(bf) = get_purefn(b, "f") {
                let res = |t: &ObjType| env.resolve(t);
                if bf.map_types(&res) != f.map_types(&res) {
                    return None;
                }
            }
            if let Some(bg) = get_purefn(b, "g") {
                let res = |t: &ObjType| env.resolve(t);
                if bg.map_types(&res) != g.map_types(&res) {
                    return None;
                }
            }
            Some(Hit {
                len: 2,
                replacement: vec![Term::pure(PureFn::Compose(
                    Box::new(f.clone()),
                    Box::new(g.clone()),
                ))],
                side_cond: Ok(()),
                desc: desc_of(&[("f".into(), f.to_string()), ("g".into(), g.to_string())]),
                note: None,
            })
        }
        Direction::Backward => {
            let f = get_purefn(b, "f")?;
            let g = get_purefn(b, "g")?;
            if !env.types_eq(&g.cod(), &f.dom()) {
                return None;
            }
            let merged = Term::pure(PureFn::Compose(Box::new(f.clone()), Box::new(g.clone())));
            let Term::TPure(_) = w.first()? else { return None };
            if !merged.eq_resolved(&w[0], env) {
                return None;
            }
            Some(Hit {
                len: 1,
                replacement: vec![Term::pure(f.clone()), Term::pure(g.clone())],
                side_cond: Ok(()),
                desc: desc_of(&[("f".into(), f.to_string()), ("g".into(), g.to_string())]),
                note: None,
            })
        }
    }
}

/// How extensional equality of two pure functions was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtTier {
    /// Normal forms coincide or the (finite) domain was enumerated.
    Exact,
    /// The domain involves integers; equality was sampled, not proven.
    Bounded,
}

/// Private sampling seed for the bounded tier; fixed so proofs replay
/// identically everywhere.
const EXT_SAMPLE_SEED: u64 = 0xD0C0;
const EXT_SAMPLES: usize = 1000;

/// Tiered extensional equality of pure functions: syntactic normal forms,
/// then exhaustive evaluation over finite domains, then seeded sampling when
/// integers make the domain infinite.
pub fn ext_eq(f: &PureFn, g: &PureFn, env: &TypeEnv) -> Result<ExtTier, String> {
    let res = |t: &ObjType| env.resolve(t);
    let fr = f.map_types(&res).normalize();
    let gr = g.map_types(&res).normalize();
    if !env.types_eq(&fr.dom(), &gr.dom()) || !env.types_eq(&fr.cod(), &gr.cod()) {
        return Err(format!(
            "signature mismatch: {} -> {} versus {} -> {}",
            fr.dom(),
            fr.cod(),
            gr.dom(),
            gr.cod()
        ));
    }
    if fr == gr {
        return Ok(ExtTier::Exact);
    }
    if fr.has_symbolic() || gr.has_symbolic() {
        return Err("extensional comparison requires ground constants".to_string());
    }
    let dom = fr.dom();
    match enumerate_type(&dom) {
        Some(values) => {
            for v in values {
                check_ext_point(&fr, &gr, &v)?;
            }
            Ok(ExtTier::Exact)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(EXT_SAMPLE_SEED);
            for _ in 0..EXT_SAMPLES {
                let v = sample_value(&dom, &mut rng)
                    .ok_or_else(|| "domain is uninhabited yet not enumerable".to_string())?;
                check_ext_point(&fr, &gr, &v)?;
            }
            Ok(ExtTier::Bounded)
        }
    }
}

fn check_ext_point(f: &PureFn, g: &PureFn, v: &Value) -> Result<(), String> {
    let a = f.eval(v).map_err(|e| format!("left side failed on {}: {}", v, e))?;
    let b = g.eval(v).map_err(|e| format!("right side failed on {}: {}", v, e))?;
    if a != b {
        return Err(format!("functions differ at {}: {} versus {}", v, a, b));
    }
    Ok(())
}

/// All values of a finite resolved type; None when integers appear.
pub fn enumerate_type(t: &ObjType) -> Option<Vec<Value>> {
    match t {
        ObjType::Unit => Some(vec![Value::U]),
        ObjType::Bool => Some(vec![Value::B(false), Value::B(true)]),
        ObjType::Empty => Some(vec![]),
        ObjType::Int => None,
        ObjType::Prod(a, b) => {
            let xs = enumerate_type(a)?;
            let ys = enumerate_type(b)?;
            let mut out = Vec::with_capacity(xs.len() * ys.len());
            for x in &xs {
                for y in &ys {
                    out.push(Value::P(Box::new(x.clone()), Box::new(y.clone())));
                }
            }
            Some(out)
        }
        ObjType::Sum(a, b) => {
            let mut out: Vec<Value> =
                enumerate_type(a)?.into_iter().map(|v| Value::L(Box::new(v))).collect();
            out.extend(enumerate_type(b)?.into_iter().map(|v| Value::R(Box::new(v))));
            Some(out)
        }
        ObjType::ValOf(_) | ObjType::EValOf(_) => None,
    }
}

fn inhabited(t: &ObjType) -> bool {
    match t {
        ObjType::Empty => false,
        ObjType::Prod(a, b) => inhabited(a) && inhabited(b),
        ObjType::Sum(a, b) => inhabited(a) || inhabited(b),
        _ => true,
    }
}

/// A random value of a resolved type; None for uninhabited types.
pub fn sample_value(t: &ObjType, rng: &mut ChaCha8Rng) -> Option<Value> {
    match t {
        ObjType::Unit => Some(Value::U),
        ObjType::Bool => Some(Value::B(rng.gen())),
        ObjType::Int => Some(Value::I(BigInt::from(rng.gen_range(-32i64..=32)))),
        ObjType::Empty => None,
        ObjType::Prod(a, b) => Some(Value::P(
            Box::new(sample_value(a, rng)?),
            Box::new(sample_value(b, rng)?),
        )),
        ObjType::Sum(a, b) => {
            let la = inhabited(a);
            let lb = inhabited(b);
            let left = match (la, lb) {
                (true, true) => rng.gen(),
                (true, false) => true,
                (false, true) => false,
                (false, false) => return None,
            };
            if left {
                Some(Value::L(Box::new(sample_value(a, rng)?)))
            } else {
                Some(Value::R(Box::new(sample_value(b, rng)?)))
            }
        }
        ObjType::ValOf(_) | ObjType::EValOf(_) => None,
    }
}

// tpure(f) == tpure(g) when f and g agree extensionally.
fn imp7(
    dir: Direction,
    b: &Bindings,
    w: &[Term],
    env: &TypeEnv,
) -> Result<Option<Hit>, StepError> {
    // Backward swaps the roles: the mandatory binding names the replacement.
    let (pat_key, rep_key) = match dir {
        Direction::Forward => ("f", "g"),
        Direction::Backward => ("g", "f"),
    };
    let rep = get_purefn(b, rep_key).ok_or_else(|| {
        bad_binding(RuleId::Imp7, rep_key, "a pure function term such as tpure(...)")
    })?;
    let Some(Term::TPure(found)) = w.first() else { return Ok(None) };
    if let Some(pat) = get_purefn(b, pat_key) {
        let res = |t: &ObjType| env.resolve(t);
        if pat.map_types(&res) != found.map_types(&res) {
            return Ok(None);
        }
    } else if !env.types_eq(&found.dom(), &rep.dom()) || !env.types_eq(&found.cod(), &rep.cod()) {
        return Ok(None);
    }
    let (side_cond, note) = match ext_eq(found, &rep, env) {
        Ok(ExtTier::Exact) => (Ok(()), None),
        Ok(ExtTier::Bounded) => (Ok(()), Some("bounded-extensional".to_string())),
        Err(e) => (Err(format!("imp7 extensionality check failed: {}", e)), None),
    };
    Ok(Some(Hit {
        len: 1,
        replacement: vec![Term::pure(rep.clone())],
        side_cond,
        desc: desc_of(&[
            (pat_key.to_string(), found.to_string()),
            (rep_key.to_string(), rep.to_string()),
        ]),
        note,
    }))
}

pub(crate) fn collect_syms(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::TPure(p) => collect_purefn_syms(p, out),
        Term::Comp(a, b)
        | Term::Pair(a, b)
        | Term::Copair(a, b)
        | Term::Lpi(a, b) => {
            collect_syms(a, out);
            collect_syms(b, out);
        }
        Term::Downcast(a) | Term::Def(_, a) => collect_syms(a, out),
        _ => {}
    }
}

fn collect_purefn_syms(p: &PureFn, out: &mut BTreeSet<String>) {
    match p {
        PureFn::Const(CVal::Sym(s), _, _) => {
            out.insert(s.clone());
        }
        PureFn::Compose(a, b) | PureFn::PairFn(a, b) => {
            collect_purefn_syms(a, out);
            collect_purefn_syms(b, out);
        }
        _ => {}
    }
}

/// Enumerate structural matches of a proven lemma cited as a rewrite.
/// Explicit bindings are substituted before matching; the remaining
/// schematic parameters are inferred from the matched window.
pub fn lemma_candidates(
    lemma: &Lemma,
    dir: Direction,
    b: &Bindings,
    side: &Term,
    env: &TypeEnv,
) -> Result<Vec<Candidate>, StepError> {
    let mut seed = MatchEnv::default();
    for (key, val) in b {
        if let Some(decl) = lemma.term_params.iter().find(|v| &v.name == key) {
            let Binding::Term(t) = val else {
                return Err(StepError::BindingTypeMismatch(format!(
                    "lemma {} parameter {} expects a term",
                    lemma.name, key
                )));
            };
            let (d, c) = t.typecheck(env).map_err(|e| {
                StepError::BindingTypeMismatch(format!(
                    "lemma {} binding {}: {}",
                    lemma.name, key, e
                ))
            })?;
            if !env.types_eq(&d, &decl.dom) || !env.types_eq(&c, &decl.cod) {
                return Err(StepError::BindingTypeMismatch(format!(
                    "lemma {} parameter {} has interface {} -> {}; binding has {} -> {}",
                    lemma.name, key, decl.dom, decl.cod, d, c
                )));
            }
            if !t.decoration().leq(decl.deco) {
                return Err(StepError::BindingTypeMismatch(format!(
                    "lemma {} parameter {} is bounded by {}; binding has {}",
                    lemma.name,
                    key,
                    decl.deco,
                    t.decoration()
                )));
            }
            seed.terms.insert(key.clone(), t.clone());
        } else if lemma.int_params.iter().any(|p| p == key) {
            let Binding::Int(n) = val else {
                return Err(StepError::BindingTypeMismatch(format!(
                    "lemma {} parameter {} expects an integer",
                    lemma.name, key
                )));
            };
            seed.ints.insert(key.clone(), n.clone());
        } else {
            return Err(StepError::BindingTypeMismatch(format!(
                "lemma {} has no parameter named {}",
                lemma.name, key
            )));
        }
    }
    let (pat_side, rep_side) = match dir {
        Direction::Forward => (&lemma.eq.lhs, &lemma.eq.rhs),
        Direction::Backward => (&lemma.eq.rhs, &lemma.eq.lhs),
    };
    let pattern = pat_side.substitute(&seed.terms, &seed.ints);
    let pat_spine = pattern.spine();
    let descend = lemma.eq.kind == EqKind::SS;
    let mut out = Vec::new();
    for site in rewrite::sites(side, descend) {
        let n = site.factors.len();
        if pat_spine.len() > n {
            continue;
        }
        for start in 0..=(n - pat_spine.len()) {
            let window = &site.factors[start..start + pat_spine.len()];
            let mut menv = seed.clone();
            if !rewrite::match_window(&pat_spine, window, env, &mut menv) {
                continue;
            }
            let replacement_term = rep_side.substitute(&menv.terms, &menv.ints);
            let side_cond = unresolved_params(lemma, &replacement_term, &menv);
            let desc = desc_of(
                &menv
                    .terms
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_string()))
                    .chain(menv.ints.iter().map(|(k, v)| (k.clone(), v.to_string())))
                    .collect::<Vec<_>>(),
            );
            out.push(Candidate {
                site_path: site.path.clone(),
                start,
                len: pat_spine.len(),
                replacement: replacement_term.spine(),
                side_cond,
                binds_desc: desc,
                note: None,
            });
        }
    }
    Ok(out)
}

fn unresolved_params(lemma: &Lemma, replacement: &Term, menv: &MatchEnv) -> Result<(), String> {
    let mut vars = Vec::new();
    replacement.var_names(&mut vars);
    for v in vars {
        if lemma.term_params.iter().any(|p| p.name == v) && !menv.terms.contains_key(&v) {
            return Err(format!(
                "lemma {} parameter {} is not determined by the matched window; bind it explicitly",
                lemma.name, v
            ));
        }
    }
    let mut syms = BTreeSet::new();
    collect_syms(replacement, &mut syms);
    for s in syms {
        if lemma.int_params.iter().any(|p| p == &s) && !menv.ints.contains_key(&s) {
            return Err(format!(
                "lemma {} parameter {} is not determined by the matched window; bind it explicitly",
                lemma.name, s
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Decoration, ExcName, LocId};

    fn env2() -> TypeEnv {
        TypeEnv::new(
            vec![LocId::new("x"), LocId::new("y")],
            vec![ExcName::new("e"), ExcName::new("t")],
        )
    }

    fn first_legal(cands: &[Candidate]) -> &Candidate {
        cands
            .iter()
            .find(|c| c.side_cond.is_ok())
            .expect("no legal candidate")
    }

    #[test]
    fn catalog_has_28_distinct_named_rules() {
        let names: BTreeSet<&str> = RuleId::ALL.iter().map(|r| r.name()).collect();
        assert_eq!(names.len(), 28);
        for r in RuleId::ALL {
            assert_eq!(RuleId::parse(r.name()), Some(r));
        }
    }

    #[test]
    fn ax1_matches_and_collapses() {
        let env = env2();
        let x = LocId::new("x");
        let side = Term::comp(Term::Lookup(x.clone()), Term::Update(x.clone()));
        let cands =
            rule_candidates(RuleId::Ax1, Direction::Forward, &Bindings::new(), &side, &env)
                .unwrap();
        assert_eq!(cands.len(), 1);
        let out = rewrite::apply(&side, first_legal(&cands), &env).unwrap();
        assert_eq!(out, Term::id(ObjType::ValOf(x)));
    }

    #[test]
    fn ax2_side_condition_rejects_equal_locations() {
        let env = env2();
        let x = LocId::new("x");
        let side = Term::comp(Term::Lookup(x.clone()), Term::Update(x));
        let cands =
            rule_candidates(RuleId::Ax2, Direction::Forward, &Bindings::new(), &side, &env)
                .unwrap();
        assert_eq!(cands.len(), 1);
        assert!(cands[0].side_cond.is_err());
    }

    #[test]
    fn pair_projections_respect_the_accessor_bound() {
        let env = env2();
        let x = LocId::new("x");
        // pi2 o pair(update(x) o ..., lookup(x)): first component is a modifier.
        let f1 = Term::comp(Term::Update(x.clone()), Term::const_int(1.into()));
        let side = Term::comp(
            Term::pi2(ObjType::Unit, ObjType::ValOf(x.clone())),
            Term::pair(f1, Term::Lookup(x.clone())),
        );
        let cands =
            rule_candidates(RuleId::Pair2, Direction::Forward, &Bindings::new(), &side, &env)
                .unwrap();
        assert_eq!(cands.len(), 1);
        assert!(cands[0].side_cond.is_err());
        // With an accessor first component the rewrite goes through.
        let side2 = Term::comp(
            Term::pi2(ObjType::ValOf(x.clone()), ObjType::ValOf(x.clone())),
            Term::pair(Term::Lookup(x.clone()), Term::Lookup(x.clone())),
        );
        let cands2 =
            rule_candidates(RuleId::Pair2, Direction::Forward, &Bindings::new(), &side2, &env)
                .unwrap();
        let out = rewrite::apply(&side2, first_legal(&cands2), &env).unwrap();
        assert_eq!(out, Term::Lookup(x));
    }

    #[test]
    fn pair1_matches_the_canonical_unit_projection() {
        let env = env2();
        let x = LocId::new("x");
        // pi1 with unit first codomain canonicalizes to forget; pair1 must still see it.
        let side = Term::comp(
            Term::pi1(ObjType::Unit, ObjType::ValOf(x.clone())),
            Term::pair(Term::forget(ObjType::Unit), Term::Lookup(x.clone())),
        );
        let cands =
            rule_candidates(RuleId::Pair1, Direction::Forward, &Bindings::new(), &side, &env)
                .unwrap();
        assert_eq!(cands.len(), 1);
        let out = rewrite::apply(&side, first_legal(&cands), &env).unwrap();
        assert_eq!(out, Term::forget(ObjType::Unit));
    }

    #[test]
    fn copair_rules_enforce_propagating_first_component() {
        let env = env2();
        let e = ExcName::new("e");
        let catcher = Term::comp(Term::Tag(e.clone()), Term::Untag(e.clone()));
        assert_eq!(catcher.decoration().exc, 2);
        let side = Term::comp(
            Term::copair(catcher, Term::id(ObjType::Empty)),
            Term::inl(ObjType::Empty, ObjType::Empty),
        );
        let cands =
            rule_candidates(RuleId::Copair1, Direction::Forward, &Bindings::new(), &side, &env)
                .unwrap();
        assert_eq!(cands.len(), 1);
        assert!(cands[0].side_cond.is_err());
    }

    #[test]
    fn prop_empty_matches_a_propagator_before_an_empty_map() {
        let env = env2();
        let e = ExcName::new("e");
        let side = Term::comp(Term::Tag(e.clone()), Term::empty_from(ObjType::EValOf(e)));
        let cands =
            rule_candidates(RuleId::PropEmpty, Direction::Forward, &Bindings::new(), &side, &env)
                .unwrap();
        let out = rewrite::apply(&side, first_legal(&cands), &env).unwrap();
        // tag : eval(e) -> empty, so the collapsed map is empty -> empty = id.
        assert_eq!(out, Term::id(ObjType::Empty));
    }

    #[test]
    fn loop_unrolling_round_trips() {
        let env = env2();
        let x = LocId::new("x");
        let cond = Term::comp(
            Term::Pbl,
            Term::comp(
                Term::pure(PureFn::Cmp(crate::purefn::CmpOp::Lt)),
                Term::pair(Term::Lookup(x.clone()), Term::const_int(11.into())),
            ),
        );
        let body = Term::comp(Term::Update(x.clone()), Term::const_int(0.into()));
        let side = Term::lpi(cond.clone(), body.clone());
        let cands = rule_candidates(
            RuleId::ImpLoopIter,
            Direction::Forward,
            &Bindings::new(),
            &side,
            &env,
        )
        .unwrap();
        let unrolled = rewrite::apply(&side, first_legal(&cands), &env).unwrap();
        let back = rule_candidates(
            RuleId::ImpLoopIter,
            Direction::Backward,
            &Bindings::new(),
            &unrolled,
            &env,
        )
        .unwrap();
        let out = rewrite::apply(&unrolled, first_legal(&back), &env).unwrap();
        assert_eq!(out, side);
    }

    #[test]
    fn guard_folding_picks_the_right_branch_constant() {
        let env = env2();
        let guard = Term::comp(
            Term::Pbl,
            Term::comp(
                Term::pure(PureFn::Cmp(crate::purefn::CmpOp::Lt)),
                Term::pair(Term::const_int(14.into()), Term::const_int(11.into())),
            ),
        );
        // 14 < 11 is false: imp2 applies, imp3's side condition fails.
        let c2 = rule_candidates(RuleId::Imp2, Direction::Forward, &Bindings::new(), &guard, &env)
            .unwrap();
        let out = rewrite::apply(&guard, first_legal(&c2), &env).unwrap();
        assert_eq!(out, Term::ffalse());
        let c3 = rule_candidates(RuleId::Imp3, Direction::Forward, &Bindings::new(), &guard, &env)
            .unwrap();
        assert!(c3[0].side_cond.is_err());
    }

    #[test]
    fn arith_folding_replaces_with_the_computed_constant() {
        let env = env2();
        let side = Term::comp(
            Term::pure(PureFn::Arith(crate::purefn::ArithOp::Add)),
            Term::pair(Term::const_int(2.into()), Term::const_int(4.into())),
        );
        let cands =
            rule_candidates(RuleId::Imp1, Direction::Forward, &Bindings::new(), &side, &env)
                .unwrap();
        let out = rewrite::apply(&side, first_legal(&cands), &env).unwrap();
        assert_eq!(out, Term::const_int(6.into()));
    }

    #[test]
    fn imp7_uses_tiered_extensionality() {
        let env = env2();
        // fst o pairfn(id, forget) == id: not syntactic, but the bool domain
        // is finite, so enumeration decides it exactly.
        let f = PureFn::Compose(
            Box::new(PureFn::Fst(ObjType::Bool, ObjType::Unit)),
            Box::new(PureFn::PairFn(
                Box::new(PureFn::Identity(ObjType::Bool)),
                Box::new(PureFn::ToUnit(ObjType::Bool)),
            )),
        );
        assert_eq!(ext_eq(&f, &PureFn::Identity(ObjType::Bool), &env), Ok(ExtTier::Exact));
        // x*1 == x is not syntactic; over int it lands in the bounded tier...
        let times_one = PureFn::Compose(
            Box::new(PureFn::Arith(crate::purefn::ArithOp::Mul)),
            Box::new(PureFn::PairFn(
                Box::new(PureFn::Identity(ObjType::Int)),
                Box::new(PureFn::Const(
                    CVal::Ground(Value::I(1.into())),
                    ObjType::Int,
                    ObjType::Int,
                )),
            )),
        );
        assert_eq!(ext_eq(&times_one, &PureFn::Identity(ObjType::Int), &env), Ok(ExtTier::Bounded));
        // ...and a genuine difference is caught.
        let succ = PureFn::Compose(
            Box::new(PureFn::Arith(crate::purefn::ArithOp::Add)),
            Box::new(PureFn::PairFn(
                Box::new(PureFn::Identity(ObjType::Int)),
                Box::new(PureFn::Const(
                    CVal::Ground(Value::I(1.into())),
                    ObjType::Int,
                    ObjType::Int,
                )),
            )),
        );
        assert!(ext_eq(&succ, &PureFn::Identity(ObjType::Int), &env).is_err());
        // Finite domains are decided exactly.
        let not_not = PureFn::Identity(ObjType::Bool);
        assert_eq!(ext_eq(&not_not, &PureFn::Identity(ObjType::Bool), &env), Ok(ExtTier::Exact));
    }

    #[test]
    fn lemma_citation_binds_schematic_parameters_from_the_window() {
        let env = env2();
        let x = LocId::new("x");
        // Schematic lemma: update(x) o constant(p) o update(x) o constant(q) == update(x) o constant(p).
        let ux = Term::Update(x.clone());
        let lemma = Lemma {
            name: "iuu".into(),
            eq: Equation::new(
                Term::comp(
                    ux.clone(),
                    Term::comp(
                        Term::const_sym("p"),
                        Term::comp(ux.clone(), Term::const_sym("q")),
                    ),
                ),
                Term::comp(ux.clone(), Term::const_sym("p")),
                EqKind::SS,
            ),
            term_params: vec![],
            int_params: vec!["p".into(), "q".into()],
        };
        let goal = Term::comp(
            ux.clone(),
            Term::comp(Term::const_int(14.into()), Term::comp(ux.clone(), Term::const_int(10.into()))),
        );
        let cands =
            lemma_candidates(&lemma, Direction::Forward, &Bindings::new(), &goal, &env).unwrap();
        assert_eq!(cands.len(), 1);
        assert!(cands[0].binds_desc.contains("p := 14"));
        let out = rewrite::apply(&goal, first_legal(&cands), &env).unwrap();
        assert_eq!(out, Term::comp(ux, Term::const_int(14.into())));
    }

    #[test]
    fn lemma_citation_rejects_undetermined_replacement_parameters() {
        let env = env2();
        let x = LocId::new("x");
        // Backward use of a lemma whose right side forgets q: q must be bound.
        let ux = Term::Update(x.clone());
        let lemma = Lemma {
            name: "iuu".into(),
            eq: Equation::new(
                Term::comp(
                    ux.clone(),
                    Term::comp(
                        Term::const_sym("p"),
                        Term::comp(ux.clone(), Term::const_sym("q")),
                    ),
                ),
                Term::comp(ux.clone(), Term::const_sym("p")),
                EqKind::SS,
            ),
            term_params: vec![],
            int_params: vec!["p".into(), "q".into()],
        };
        let goal = Term::comp(ux.clone(), Term::const_int(14.into()));
        let cands =
            lemma_candidates(&lemma, Direction::Backward, &Bindings::new(), &goal, &env).unwrap();
        assert!(!cands.is_empty());
        assert!(cands[0].side_cond.is_err());
        // Binding q resolves it.
        let mut b = Bindings::new();
        b.insert("q".into(), Binding::Int(10.into()));
        let cands2 = lemma_candidates(&lemma, Direction::Backward, &b, &goal, &env).unwrap();
        let out = rewrite::apply(&goal, first_legal(&cands2), &env).unwrap();
        assert_eq!(
            out,
            Term::comp(
                ux.clone(),
                Term::comp(Term::const_int(14.into()), Term::comp(ux, Term::const_int(10.into())))
            )
        );
    }

    #[test]
    fn var_bound_lemma_parameters_check_interface_and_decoration() {
        let env = env2();
        let x = LocId::new("x");
        let var = TermVar {
            name: "k".into(),
            dom: ObjType::Unit,
            cod: ObjType::Unit,
            deco: Decoration::new(0, 0),
        };
        let lemma = Lemma {
            name: "triv".into(),
            eq: Equation::new(Term::Var(var.clone()), Term::Var(var.clone()), EqKind::SS),
            term_params: vec![var],
            int_params: vec![],
        };
        let mut b = Bindings::new();
        b.insert("k".into(), Binding::Term(Term::comp(Term::Update(x.clone()), Term::const_int(1.into()))));
        let goal = Term::id(ObjType::Unit);
        let err = lemma_candidates(&lemma, Direction::Forward, &b, &goal, &env).unwrap_err();
        assert!(matches!(err, StepError::BindingTypeMismatch(_)));
        let _ = x;
    }
}
