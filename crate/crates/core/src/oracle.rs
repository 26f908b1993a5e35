//! Brute-force denotational oracle over finite models.
//!
//! Terms are interpreted as set-level functions in one of three effect
//! worlds:
//!
//! * state:      `X x S -> Y x S`, for terms with exception degree 0;
//! * exception:  `X + E -> Y + E`, for terms with state degree 0;
//! * combined:   `(X + E) x S -> (Y + E) x S`, for any term.
//!
//! `S` is the set of stores over the declared locations, `E` the set of
//! declared exception names. Loops unfold under a fuel bound; exhaustion
//! is reported as an explicit [`Den::Divergent`] outcome and is never
//! silently equated with a value.
//!
//! [`semantic_eq`] compares two terms pointwise over an enumerated (or
//! seeded-sampled, when `int` appears in the interface) input space, with
//! the comparison relaxed according to the equation kind: weak-state
//! ignores final stores, weak-exception skips exceptional inputs.

use std::fmt;

use num_bigint::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::imp::{self, Outcome, Program, Store};
use crate::purefn::PureEvalError;
use crate::term::Term;
use crate::translate::d_cmd;
use crate::types::{EqKind, ExcName, LocId, ObjType, Strength, TypeEnv, Value};

/// Which effect interpretation a check runs in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum World {
    State,
    Exception,
    Combined,
}

impl fmt::Display for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            World::State => write!(f, "state"),
            World::Exception => write!(f, "exception"),
            World::Combined => write!(f, "combined"),
        }
    }
}

/// A value in the exception monad: an ordinary value or a raised exception.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Flow {
    Ord(Value),
    Exc(ExcName),
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flow::Ord(v) => write!(f, "{}", v),
            Flow::Exc(e) => write!(f, "exc {}", e.0),
        }
    }
}

/// A denotation outcome: a result, or fuel exhaustion inside a loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Den<T> {
    Val(T),
    Divergent,
}

impl<T: fmt::Display> fmt::Display for Den<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Den::Val(v) => write!(f, "{}", v),
            Den::Divergent => write!(f, "divergent"),
        }
    }
}

fn pure_err(e: PureEvalError) -> CoreError {
    match e {
        PureEvalError::Symbolic(s) => CoreError::Schematic(format!("constant `{}`", s)),
        other => CoreError::TypeMismatch(other.to_string()),
    }
}

// ----- state world: X x S -> Y x S -----

fn eval_state(
    t: &Term,
    env: &TypeEnv,
    x: Value,
    s: Store,
    fuel: u64,
) -> Result<Den<(Value, Store)>, CoreError> {
    match t {
        Term::TPure(p) => Ok(Den::Val((p.eval(&x).map_err(pure_err)?, s))),
        Term::Lookup(i) => match x {
            Value::U => Ok(Den::Val((Value::I(s.get(i)), s))),
            v => Err(CoreError::TypeMismatch(format!("lookup applied to {}", v))),
        },
        Term::Update(i) => match x {
            Value::I(v) => {
                let mut s = s;
                s.set(i, v);
                Ok(Den::Val((Value::U, s)))
            }
            v => Err(CoreError::TypeMismatch(format!("update applied to {}", v))),
        },
        Term::Comp(f, g) => match eval_state(g, env, x, s, fuel)? {
            Den::Val((y, s1)) => eval_state(f, env, y, s1, fuel),
            Den::Divergent => Ok(Den::Divergent),
        },
        Term::Pair(f, g) => {
            let (y1, s1) = match eval_state(f, env, x.clone(), s, fuel)? {
                Den::Val(r) => r,
                Den::Divergent => return Ok(Den::Divergent),
            };
            let (y2, s2) = match eval_state(g, env, x, s1, fuel)? {
                Den::Val(r) => r,
                Den::Divergent => return Ok(Den::Divergent),
            };
            Ok(Den::Val((Value::P(Box::new(y1), Box::new(y2)), s2)))
        }
        Term::Copair(f, g) => match x {
            Value::L(v) => eval_state(f, env, *v, s, fuel),
            Value::R(v) => eval_state(g, env, *v, s, fuel),
            v => Err(CoreError::TypeMismatch(format!("copair applied to {}", v))),
        },
        // Precondition exc degree 0 makes a downcast body propagator-free.
        Term::Downcast(f) => eval_state(f, env, x, s, fuel),
        Term::Lpi(b, f) => {
            let mut s = s;
            for _ in 0..fuel {
                let (t, s1) = match eval_state(b, env, Value::U, s, fuel)? {
                    Den::Val(r) => r,
                    Den::Divergent => return Ok(Den::Divergent),
                };
                s = s1;
                match t {
                    Value::L(_) => match eval_state(f, env, Value::U, s, fuel)? {
                        Den::Val((_, s2)) => s = s2,
                        Den::Divergent => return Ok(Den::Divergent),
                    },
                    Value::R(_) => return Ok(Den::Val((Value::U, s))),
                    v => {
                        return Err(CoreError::TypeMismatch(format!("loop guard gave {}", v)))
                    }
                }
            }
            Ok(Den::Divergent)
        }
        Term::Pbl => match x {
            Value::B(true) => Ok(Den::Val((Value::inl(Value::U), s))),
            Value::B(false) => Ok(Den::Val((Value::inr(Value::U), s))),
            v => Err(CoreError::TypeMismatch(format!("pbl applied to {}", v))),
        },
        Term::Var(v) => Err(CoreError::Schematic(v.name.clone())),
        Term::Def(_, body) => eval_state(body, env, x, s, fuel),
        Term::Tag(_) | Term::Untag(_) => Err(CoreError::EffectMismatch(format!(
            "{} has no state-world denotation",
            t
        ))),
    }
}

// ----- exception world: X + E -> Y + E -----

fn eval_exc(t: &Term, env: &TypeEnv, x: Flow, fuel: u64) -> Result<Den<Flow>, CoreError> {
    match t {
        Term::TPure(p) => match x {
            Flow::Ord(v) => Ok(Den::Val(Flow::Ord(p.eval(&v).map_err(pure_err)?))),
            exc => Ok(Den::Val(exc)),
        },
        Term::Tag(e) => match x {
            Flow::Ord(_) => Ok(Den::Val(Flow::Exc(e.clone()))),
            exc => Ok(Den::Val(exc)),
        },
        Term::Untag(e) => match x {
            Flow::Exc(e1) if e1 == *e => Ok(Den::Val(Flow::Ord(Value::U))),
            Flow::Exc(e1) => Ok(Den::Val(Flow::Exc(e1))),
            Flow::Ord(v) => Err(CoreError::TypeMismatch(format!(
                "untag applied to ordinary {}",
                v
            ))),
        },
        Term::Comp(f, g) => match eval_exc(g, env, x, fuel)? {
            Den::Val(y) => eval_exc(f, env, y, fuel),
            Den::Divergent => Ok(Den::Divergent),
        },
        // Pairs come from the state fragment; exceptional inputs pass through.
        Term::Pair(f, g) => match x {
            Flow::Ord(v) => {
                let y1 = match eval_exc(f, env, Flow::Ord(v.clone()), fuel)? {
                    Den::Val(Flow::Ord(y)) => y,
                    Den::Val(exc) => return Ok(Den::Val(exc)),
                    Den::Divergent => return Ok(Den::Divergent),
                };
                let y2 = match eval_exc(g, env, Flow::Ord(v), fuel)? {
                    Den::Val(Flow::Ord(y)) => y,
                    Den::Val(exc) => return Ok(Den::Val(exc)),
                    Den::Divergent => return Ok(Den::Divergent),
                };
                Ok(Den::Val(Flow::Ord(Value::P(Box::new(y1), Box::new(y2)))))
            }
            exc => Ok(Den::Val(exc)),
        },
        // The second branch of a copair receives exceptional inputs.
        Term::Copair(f, g) => match x {
            Flow::Ord(Value::L(v)) => eval_exc(f, env, Flow::Ord(*v), fuel),
            Flow::Ord(Value::R(v)) => eval_exc(g, env, Flow::Ord(*v), fuel),
            Flow::Ord(v) => Err(CoreError::TypeMismatch(format!("copair applied to {}", v))),
            exc => eval_exc(g, env, exc, fuel),
        },
        Term::Downcast(f) => match x {
            Flow::Ord(_) => eval_exc(f, env, x, fuel),
            exc => Ok(Den::Val(exc)),
        },
        // Fixpoint reading: lpi(b, f) = copair(lpi(b, f) o f, id) o b, so the
        // guard also sees exceptional inputs (propagator guards fix them).
        Term::Lpi(b, f) => {
            let mut x = x;
            for _ in 0..fuel {
                match eval_exc(b, env, x, fuel)? {
                    Den::Val(Flow::Ord(Value::L(_))) => {
                        match eval_exc(f, env, Flow::Ord(Value::U), fuel)? {
                            Den::Val(y) => x = y,
                            Den::Divergent => return Ok(Den::Divergent),
                        }
                    }
                    Den::Val(Flow::Ord(Value::R(_))) => {
                        return Ok(Den::Val(Flow::Ord(Value::U)))
                    }
                    Den::Val(Flow::Ord(v)) => {
                        return Err(CoreError::TypeMismatch(format!("loop guard gave {}", v)))
                    }
                    Den::Val(exc) => return Ok(Den::Val(exc)),
                    Den::Divergent => return Ok(Den::Divergent),
                }
            }
            Ok(Den::Divergent)
        }
        Term::Pbl => match x {
            Flow::Ord(Value::B(true)) => Ok(Den::Val(Flow::Ord(Value::inl(Value::U)))),
            Flow::Ord(Value::B(false)) => Ok(Den::Val(Flow::Ord(Value::inr(Value::U)))),
            Flow::Ord(v) => Err(CoreError::TypeMismatch(format!("pbl applied to {}", v))),
            exc => Ok(Den::Val(exc)),
        },
        Term::Var(v) => Err(CoreError::Schematic(v.name.clone())),
        Term::Def(_, body) => eval_exc(body, env, x, fuel),
        Term::Lookup(_) | Term::Update(_) => Err(CoreError::EffectMismatch(format!(
            "{} has no exception-world denotation",
            t
        ))),
    }
}

// ----- combined world: (X + E) x S -> (Y + E) x S -----

fn eval_comb(
    t: &Term,
    env: &TypeEnv,
    x: Flow,
    s: Store,
    fuel: u64,
) -> Result<Den<(Flow, Store)>, CoreError> {
    match t {
        Term::TPure(p) => match x {
            Flow::Ord(v) => Ok(Den::Val((Flow::Ord(p.eval(&v).map_err(pure_err)?), s))),
            exc => Ok(Den::Val((exc, s))),
        },
        Term::Lookup(i) => match x {
            Flow::Ord(Value::U) => {
                let v = Value::I(s.get(i));
                Ok(Den::Val((Flow::Ord(v), s)))
            }
            Flow::Ord(v) => Err(CoreError::TypeMismatch(format!("lookup applied to {}", v))),
            exc => Ok(Den::Val((exc, s))),
        },
        Term::Update(i) => match x {
            Flow::Ord(Value::I(v)) => {
                let mut s = s;
                s.set(i, v);
                Ok(Den::Val((Flow::Ord(Value::U), s)))
            }
            Flow::Ord(v) => Err(CoreError::TypeMismatch(format!("update applied to {}", v))),
            exc => Ok(Den::Val((exc, s))),
        },
        Term::Tag(e) => match x {
            Flow::Ord(_) => Ok(Den::Val((Flow::Exc(e.clone()), s))),
            exc => Ok(Den::Val((exc, s))),
        },
        Term::Untag(e) => match x {
            Flow::Exc(e1) if e1 == *e => Ok(Den::Val((Flow::Ord(Value::U), s))),
            Flow::Exc(e1) => Ok(Den::Val((Flow::Exc(e1), s))),
            Flow::Ord(v) => Err(CoreError::TypeMismatch(format!(
                "untag applied to ordinary {}",
                v
            ))),
        },
        Term::Comp(f, g) => match eval_comb(g, env, x, s, fuel)? {
            Den::Val((y, s1)) => eval_comb(f, env, y, s1, fuel),
            Den::Divergent => Ok(Den::Divergent),
        },
        Term::Pair(f, g) => match x {
            Flow::Ord(v) => {
                let (y1, s1) = match eval_comb(f, env, Flow::Ord(v.clone()), s, fuel)? {
                    Den::Val((Flow::Ord(y), s1)) => (y, s1),
                    Den::Val(exc) => return Ok(Den::Val(exc)),
                    Den::Divergent => return Ok(Den::Divergent),
                };
                let (y2, s2) = match eval_comb(g, env, Flow::Ord(v), s1, fuel)? {
                    Den::Val((Flow::Ord(y), s2)) => (y, s2),
                    Den::Val(exc) => return Ok(Den::Val(exc)),
                    Den::Divergent => return Ok(Den::Divergent),
                };
                Ok(Den::Val((
                    Flow::Ord(Value::P(Box::new(y1), Box::new(y2))),
                    s2,
                )))
            }
            exc => Ok(Den::Val((exc, s))),
        },
        Term::Copair(f, g) => match x {
            Flow::Ord(Value::L(v)) => eval_comb(f, env, Flow::Ord(*v), s, fuel),
            Flow::Ord(Value::R(v)) => eval_comb(g, env, Flow::Ord(*v), s, fuel),
            Flow::Ord(v) => Err(CoreError::TypeMismatch(format!("copair applied to {}", v))),
            exc => eval_comb(g, env, exc, s, fuel),
        },
        Term::Downcast(f) => match x {
            Flow::Ord(_) => eval_comb(f, env, x, s, fuel),
            exc => Ok(Den::Val((exc, s))),
        },
        // Fixpoint reading, as in the exception world: the guard runs first
        // on whatever arrives, exceptional inputs included.
        Term::Lpi(b, f) => {
            let mut x = x;
            let mut s = s;
            for _ in 0..fuel {
                let (t, s1) = match eval_comb(b, env, x, s, fuel)? {
                    Den::Val(r) => r,
                    Den::Divergent => return Ok(Den::Divergent),
                };
                s = s1;
                match t {
                    Flow::Ord(Value::L(_)) => {
                        match eval_comb(f, env, Flow::Ord(Value::U), s, fuel)? {
                            Den::Val((y, s2)) => {
                                x = y;
                                s = s2;
                            }
                            Den::Divergent => return Ok(Den::Divergent),
                        }
                    }
                    Flow::Ord(Value::R(_)) => return Ok(Den::Val((Flow::Ord(Value::U), s))),
                    Flow::Ord(v) => {
                        return Err(CoreError::TypeMismatch(format!("loop guard gave {}", v)))
                    }
                    exc => return Ok(Den::Val((exc, s))),
                }
            }
            Ok(Den::Divergent)
        }
        Term::Pbl => match x {
            Flow::Ord(Value::B(true)) => Ok(Den::Val((Flow::Ord(Value::inl(Value::U)), s))),
            Flow::Ord(Value::B(false)) => Ok(Den::Val((Flow::Ord(Value::inr(Value::U)), s))),
            Flow::Ord(v) => Err(CoreError::TypeMismatch(format!("pbl applied to {}", v))),
            exc => Ok(Den::Val((exc, s))),
        },
        Term::Var(v) => Err(CoreError::Schematic(v.name.clone())),
        Term::Def(_, body) => eval_comb(body, env, x, s, fuel),
    }
}

/// State-world denotation. Requires exception degree 0.
pub fn denote_state(
    t: &Term,
    env: &TypeEnv,
    x: Value,
    s: Store,
    fuel: u64,
) -> Result<Den<(Value, Store)>, CoreError> {
    let d = t.decoration();
    if d.exc != 0 {
        return Err(CoreError::EffectMismatch(format!(
            "state world needs exception degree 0, term has {}",
            d
        )));
    }
    eval_state(t, env, x, s, fuel)
}

/// Exception-world denotation. Requires state degree 0.
pub fn denote_exception(
    t: &Term,
    env: &TypeEnv,
    x: Flow,
    fuel: u64,
) -> Result<Den<Flow>, CoreError> {
    let d = t.decoration();
    if d.state != 0 {
        return Err(CoreError::EffectMismatch(format!(
            "exception world needs state degree 0, term has {}",
            d
        )));
    }
    eval_exc(t, env, x, fuel)
}

/// Combined denotation; defined for every well-typed closed term.
pub fn denote_combined(
    t: &Term,
    env: &TypeEnv,
    x: Flow,
    s: Store,
    fuel: u64,
) -> Result<Den<(Flow, Store)>, CoreError> {
    eval_comb(t, env, x, s, fuel)
}

// ----- finite models -----

/// A finite interpretation: declared names plus a store-value carrier.
///
/// Stores range over `carrier ^ locations` and are always enumerated
/// exhaustively. Interface types are enumerated when finite; `int`-typed
/// interfaces fall back to the carrier plus seeded uniform samples in
/// `int_lo..=int_hi`, capped at `n_samples` values.
#[derive(Clone, Debug)]
pub struct FiniteModel {
    pub env: TypeEnv,
    pub carrier: Vec<BigInt>,
    pub n_samples: usize,
    pub int_lo: i64,
    pub int_hi: i64,
}

impl FiniteModel {
    /// Two locations, carrier {0..3}, two exceptions. 16 stores.
    pub fn small() -> FiniteModel {
        let env = TypeEnv::new(
            vec![LocId("x".into()), LocId("y".into())],
            vec![ExcName("e".into()), ExcName("t".into())],
        );
        FiniteModel {
            env,
            carrier: (0..=3).map(BigInt::from).collect(),
            n_samples: 100,
            int_lo: -8,
            int_hi: 8,
        }
    }

    /// One location, carrier {0, 1}, one exception. 2 stores.
    pub fn tiny() -> FiniteModel {
        let env = TypeEnv::new(vec![LocId("x".into())], vec![ExcName("e".into())]);
        FiniteModel {
            env,
            carrier: vec![BigInt::from(0), BigInt::from(1)],
            n_samples: 100,
            int_lo: -8,
            int_hi: 8,
        }
    }

    /// The small model's carrier and sampling bounds over a caller-supplied
    /// environment (used to check terms that mention specific programs'
    /// locations and exceptions).
    pub fn for_env(env: TypeEnv) -> FiniteModel {
        FiniteModel {
            env,
            carrier: (0..=3).map(BigInt::from).collect(),
            n_samples: 100,
            int_lo: -8,
            int_hi: 8,
        }
    }

    /// Every store over the declared locations with values in the carrier.
    pub fn stores(&self) -> Vec<Store> {
        let mut out = vec![Store::zeros(&self.env)];
        for loc in &self.env.locations {
            let mut next = Vec::with_capacity(out.len() * self.carrier.len());
            for s in &out {
                for v in &self.carrier {
                    let mut s1 = s.clone();
                    s1.set(loc, v.clone());
                    next.push(s1);
                }
            }
            out = next;
        }
        out
    }

    /// A random value of a resolved type, ints drawn from the carrier or
    /// the sampling range; None for uninhabited types.
    pub(crate) fn sample(&self, t: &ObjType, rng: &mut ChaCha8Rng) -> Option<Value> {
        match t {
            ObjType::Unit => Some(Value::U),
            ObjType::Bool => Some(Value::B(rng.gen())),
            ObjType::Int => {
                let v = if rng.gen::<bool>() && !self.carrier.is_empty() {
                    self.carrier[rng.gen_range(0..self.carrier.len())].clone()
                } else {
                    BigInt::from(rng.gen_range(self.int_lo..=self.int_hi))
                };
                Some(Value::I(v))
            }
            ObjType::Empty => None,
            ObjType::Prod(a, b) => Some(Value::P(
                Box::new(self.sample(a, rng)?),
                Box::new(self.sample(b, rng)?),
            )),
            ObjType::Sum(a, b) => {
                let la = self.sample(a, &mut rng.clone()).is_some();
                let lb = self.sample(b, &mut rng.clone()).is_some();
                match (la, lb) {
                    (true, true) => {
                        if rng.gen() {
                            Some(Value::inl(self.sample(a, rng)?))
                        } else {
                            Some(Value::inr(self.sample(b, rng)?))
                        }
                    }
                    (true, false) => Some(Value::inl(self.sample(a, rng)?)),
                    (false, true) => Some(Value::inr(self.sample(b, rng)?)),
                    (false, false) => None,
                }
            }
            ObjType::ValOf(_) | ObjType::EValOf(_) => {
                self.sample(&self.env.resolve(t), rng)
            }
        }
    }

    /// Input values for a domain type: exhaustive when the resolved type is
    /// finite (second component true), otherwise carrier values followed by
    /// seeded samples, deduplicated, capped at `n_samples`.
    pub fn inputs(&self, dom: &ObjType, seed: u64) -> (Vec<Value>, bool) {
        let resolved = self.env.resolve(dom);
        if let Some(all) = crate::rules::enumerate_type(&resolved) {
            return (all, true);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out: Vec<Value> = Vec::new();
        if resolved == ObjType::Int {
            out.extend(self.carrier.iter().cloned().map(Value::I));
        }
        let mut misses = 0;
        while out.len() < self.n_samples && misses < 10 * self.n_samples {
            match self.sample(&resolved, &mut rng) {
                Some(v) if !out.contains(&v) => out.push(v),
                _ => misses += 1,
            }
        }
        (out, false)
    }

    /// `n` seeded stores with values uniform in the sampling range; the
    /// all-zeros store always comes first.
    pub fn sampled_stores(&self, n: usize, seed: u64) -> Vec<Store> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![Store::zeros(&self.env)];
        while out.len() < n {
            let mut s = Store::zeros(&self.env);
            for loc in &self.env.locations {
                s.set(loc, BigInt::from(rng.gen_range(self.int_lo..=self.int_hi)));
            }
            out.push(s);
        }
        out
    }
}

// ----- pointwise comparison -----

/// Result of a brute-force comparison.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub holds: bool,
    /// Rendered first failing input with both outputs.
    pub counterexample: Option<String>,
    /// Number of input points compared.
    pub checked: usize,
    /// True when the whole input space was enumerated.
    pub exhaustive: bool,
}

impl Verdict {
    fn pass(checked: usize, exhaustive: bool) -> Verdict {
        Verdict { holds: true, counterexample: None, checked, exhaustive }
    }

    fn fail(cex: String, checked: usize, exhaustive: bool) -> Verdict {
        Verdict { holds: false, counterexample: Some(cex), checked, exhaustive }
    }
}

fn show_state_out(r: &Den<(Value, Store)>) -> String {
    match r {
        Den::Val((v, s)) => format!("({}, {})", v, s),
        Den::Divergent => "divergent".into(),
    }
}

fn show_comb_out(r: &Den<(Flow, Store)>) -> String {
    match r {
        Den::Val((v, s)) => format!("({}, {})", v, s),
        Den::Divergent => "divergent".into(),
    }
}

/// Do two closed terms with a common interface agree pointwise, up to the
/// relaxations the equation kind grants?
///
/// Weak state compares value components only (final stores ignored); weak
/// exception restricts to ordinary inputs. Divergence is a distinguished
/// outcome equal only to itself. In the state world the exception dimension
/// of `kind` is vacuous, and symmetrically in the exception world.
pub fn semantic_eq(
    t1: &Term,
    t2: &Term,
    kind: EqKind,
    model: &FiniteModel,
    world: World,
    fuel: u64,
    seed: u64,
) -> Result<Verdict, CoreError> {
    let env = &model.env;
    let (dom1, cod1) = t1.typecheck(env)?;
    let (dom2, cod2) = t2.typecheck(env)?;
    if !env.types_eq(&dom1, &dom2) || !env.types_eq(&cod1, &cod2) {
        return Err(CoreError::SignatureMismatch(format!(
            "{} -> {} vs {} -> {}",
            dom1, cod1, dom2, cod2
        )));
    }
    match world {
        World::State => {
            let d1 = t1.decoration();
            let d2 = t2.decoration();
            if d1.exc != 0 || d2.exc != 0 {
                return Err(CoreError::EffectMismatch(
                    "state world needs exception degree 0 on both sides".into(),
                ));
            }
        }
        World::Exception => {
            let d1 = t1.decoration();
            let d2 = t2.decoration();
            if d1.state != 0 || d2.state != 0 {
                return Err(CoreError::EffectMismatch(
                    "exception world needs state degree 0 on both sides".into(),
                ));
            }
        }
        World::Combined => {}
    }

    let (xs, exhaustive) = model.inputs(&dom1, seed);
    let weak_state = kind.state == Strength::Weak;
    let weak_exc = kind.exc == Strength::Weak;
    let mut checked = 0;

    match world {
        World::State => {
            for s in model.stores() {
                for x in &xs {
                    checked += 1;
                    let r1 = eval_state(t1, env, x.clone(), s.clone(), fuel)?;
                    let r2 = eval_state(t2, env, x.clone(), s.clone(), fuel)?;
                    let ok = match (&r1, &r2) {
                        (Den::Val((v1, s1)), Den::Val((v2, s2))) => {
                            v1 == v2 && (weak_state || s1 == s2)
                        }
                        (Den::Divergent, Den::Divergent) => true,
                        _ => false,
                    };
                    if !ok {
                        return Ok(Verdict::fail(
                            format!(
                                "input {} in store {}: lhs {} vs rhs {}",
                                x,
                                s,
                                show_state_out(&r1),
                                show_state_out(&r2)
                            ),
                            checked,
                            exhaustive,
                        ));
                    }
                }
            }
        }
        World::Exception => {
            let mut flows: Vec<Flow> = xs.iter().cloned().map(Flow::Ord).collect();
            if !weak_exc {
                flows.extend(env.exceptions.iter().cloned().map(Flow::Exc));
            }
            for x in &flows {
                checked += 1;
                let r1 = eval_exc(t1, env, x.clone(), fuel)?;
                let r2 = eval_exc(t2, env, x.clone(), fuel)?;
                if r1 != r2 {
                    return Ok(Verdict::fail(
                        format!("input {}: lhs {} vs rhs {}", x, r1, r2),
                        checked,
                        exhaustive,
                    ));
                }
            }
        }
        World::Combined => {
            let mut flows: Vec<Flow> = xs.iter().cloned().map(Flow::Ord).collect();
            if !weak_exc {
                flows.extend(env.exceptions.iter().cloned().map(Flow::Exc));
            }
            for s in model.stores() {
                for x in &flows {
                    checked += 1;
                    let r1 = eval_comb(t1, env, x.clone(), s.clone(), fuel)?;
                    let r2 = eval_comb(t2, env, x.clone(), s.clone(), fuel)?;
                    let ok = match (&r1, &r2) {
                        (Den::Val((v1, s1)), Den::Val((v2, s2))) => {
                            v1 == v2 && (weak_state || s1 == s2)
                        }
                        (Den::Divergent, Den::Divergent) => true,
                        _ => false,
                    };
                    if !ok {
                        return Ok(Verdict::fail(
                            format!(
                                "input {} in store {}: lhs {} vs rhs {}",
                                x,
                                s,
                                show_comb_out(&r1),
                                show_comb_out(&r2)
                            ),
                            checked,
                            exhaustive,
                        ));
                    }
                }
            }
        }
    }
    Ok(Verdict::pass(checked, exhaustive))
}

// ----- adequacy: interpreter vs denotation -----

/// Result of comparing the small-step interpreter with the denotation of
/// the translated term over sampled initial stores.
#[derive(Clone, Debug)]
pub struct AdequacyReport {
    pub ok: bool,
    pub stores_checked: usize,
    pub mismatch: Option<String>,
}

/// Run `prog` from `n_stores` seeded stores and check each outcome against
/// the combined denotation of its translation applied to `(ordinary (), s)`:
/// normal termination must give the same final store, an uncaught exception
/// must give the same exception name (stores not compared), and fuel
/// exhaustion must pair with divergence.
pub fn adequacy(prog: &Program, n_stores: usize, seed: u64, fuel: u64) -> Result<AdequacyReport, CoreError> {
    let model = FiniteModel::for_env(prog.env.clone());
    let term = d_cmd(&prog.cmd);
    let mut checked = 0;
    for s in model.sampled_stores(n_stores, seed) {
        checked += 1;
        let ran = imp::run(&prog.cmd, s.clone(), fuel);
        let den = denote_combined(&term, &prog.env, Flow::Ord(Value::U), s.clone(), fuel)?;
        let ok = match (&ran, &den) {
            (Outcome::Final(s1), Den::Val((Flow::Ord(Value::U), s2))) => s1 == s2,
            (Outcome::Uncaught(e, _), Den::Val((Flow::Exc(e2), _))) => e == e2,
            (Outcome::OutOfFuel(_), Den::Divergent) => true,
            _ => false,
        };
        if !ok {
            let ran_s = match &ran {
                Outcome::Final(s1) => format!("final {}", s1),
                Outcome::Uncaught(e, s1) => format!("uncaught {} in {}", e.0, s1),
                Outcome::OutOfFuel(_) => "out of fuel".into(),
            };
            return Ok(AdequacyReport {
                ok: false,
                stores_checked: checked,
                mismatch: Some(format!(
                    "store {}: interpreter {} vs denotation {}",
                    s,
                    ran_s,
                    show_comb_out(&den)
                )),
            });
        }
    }
    Ok(AdequacyReport { ok: true, stores_checked: checked, mismatch: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imp::parse_program;
    use crate::types::Decoration;

    fn int(v: i64) -> Value {
        Value::I(BigInt::from(v))
    }

    #[test]
    fn interaction_holds_weakly_not_strongly() {
        let m = FiniteModel::small();
        let x = LocId("x".into());
        let lu = Term::comp(Term::Lookup(x.clone()), Term::Update(x.clone()));
        let idv = Term::id(ObjType::ValOf(x.clone()));
        let ws = EqKind::WS;
        let v = semantic_eq(&lu, &idv, ws, &m, World::State, 100, 7).unwrap();
        assert!(v.holds, "{:?}", v.counterexample);
        assert!(!v.exhaustive);
        assert!(v.checked > 0);

        let ss = EqKind::SS;
        let v1 = semantic_eq(&lu, &idv, ss, &m, World::State, 100, 7).unwrap();
        let v2 = semantic_eq(&lu, &idv, ss, &m, World::State, 100, 7).unwrap();
        assert!(!v1.holds);
        assert_eq!(v1.counterexample, v2.counterexample);
    }

    #[test]
    fn update_value_agrees_store_differs() {
        let m = FiniteModel::small();
        let x = LocId("x".into());
        let u1 = Term::comp(Term::Update(x.clone()), Term::const_int(BigInt::from(1)));
        let u2 = Term::comp(Term::Update(x.clone()), Term::const_int(BigInt::from(2)));
        let ws = EqKind::WS;
        let ss = EqKind::SS;
        assert!(semantic_eq(&u1, &u2, ws, &m, World::Combined, 100, 0).unwrap().holds);
        let v = semantic_eq(&u1, &u2, ss, &m, World::Combined, 100, 0).unwrap();
        assert!(!v.holds);
        assert!(v.counterexample.unwrap().contains("store"));
    }

    #[test]
    fn untag_tag_ordinary_only() {
        let m = FiniteModel::small();
        let e = ExcName("e".into());
        let ut = Term::comp(Term::Untag(e.clone()), Term::Tag(e.clone()));
        let idt = Term::id(ObjType::EValOf(e.clone()));
        let sw = EqKind::SW;
        let ss = EqKind::SS;
        let v = semantic_eq(&ut, &idt, sw, &m, World::Exception, 100, 0).unwrap();
        assert!(v.holds);
        assert!(v.exhaustive);
        let v = semantic_eq(&ut, &idt, ss, &m, World::Exception, 100, 0).unwrap();
        assert!(!v.holds);
        assert!(v.counterexample.unwrap().contains("exc e"));
    }

    #[test]
    fn effect_preconditions_enforced() {
        let m = FiniteModel::small();
        let tag = Term::Tag(ExcName("e".into()));
        let lk = Term::Lookup(LocId("x".into()));
        let err = denote_state(&tag, &m.env, Value::U, Store::zeros(&m.env), 10).unwrap_err();
        assert!(matches!(err, CoreError::EffectMismatch(_)));
        let err = denote_exception(&lk, &m.env, Flow::Ord(Value::U), 10).unwrap_err();
        assert!(matches!(err, CoreError::EffectMismatch(_)));
        let ss = EqKind::SS;
        let err = semantic_eq(&tag, &tag, ss, &m, World::State, 10, 0).unwrap_err();
        assert!(matches!(err, CoreError::EffectMismatch(_)));
    }

    #[test]
    fn signature_mismatch_rejected() {
        let m = FiniteModel::small();
        let ss = EqKind::SS;
        let err = semantic_eq(
            &Term::Lookup(LocId("x".into())),
            &Term::id(ObjType::Unit),
            ss,
            &m,
            World::State,
            10,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, CoreError::SignatureMismatch(_)));
    }

    #[test]
    fn combined_translation_runs_programs() {
        let env_src = "locations x y; x := x + 4";
        let prog = parse_program(env_src).unwrap();
        let t = d_cmd(&prog.cmd);
        let mut s = Store::zeros(&prog.env);
        s.set(&LocId("x".into()), BigInt::from(2));
        let r = denote_combined(&t, &prog.env, Flow::Ord(Value::U), s, 100).unwrap();
        match r {
            Den::Val((Flow::Ord(Value::U), s1)) => {
                assert_eq!(s1.get(&LocId("x".into())), BigInt::from(6));
            }
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn divergent_loop_detected_and_self_equal() {
        let prog = parse_program("locations x; while true do skip").unwrap();
        let t = d_cmd(&prog.cmd);
        let r = denote_combined(&t, &prog.env, Flow::Ord(Value::U), Store::zeros(&prog.env), 50)
            .unwrap();
        assert_eq!(r, Den::Divergent);
        let m = FiniteModel::for_env(prog.env.clone());
        let ss = EqKind::SS;
        let v = semantic_eq(&t, &t, ss, &m, World::Combined, 50, 0).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn adequacy_on_assignment_throw_and_loop() {
        let acc = parse_program("locations x y; { x := 2; x := x + 4 }").unwrap();
        let r = adequacy(&acc, 20, 1, 1000).unwrap();
        assert!(r.ok, "{:?}", r.mismatch);
        assert_eq!(r.stores_checked, 20);

        let thr =
            parse_program("locations x; exceptions e; { x := 3; throw e; x := 9 }").unwrap();
        let r = adequacy(&thr, 20, 1, 1000).unwrap();
        assert!(r.ok, "{:?}", r.mismatch);

        let div = parse_program("locations x; while true do x := x + 1").unwrap();
        let r = adequacy(&div, 5, 1, 200).unwrap();
        assert!(r.ok, "{:?}", r.mismatch);

        let caught = parse_program(
            "locations x y; exceptions e; \
             { x := 1; try { while true do { if x <= 0 then throw e else x := x - 1 } } \
               catch e => y := 7 }",
        )
        .unwrap();
        let r = adequacy(&caught, 20, 1, 1000).unwrap();
        assert!(r.ok, "{:?}", r.mismatch);
    }

    #[test]
    fn model_shapes() {
        assert_eq!(FiniteModel::small().stores().len(), 16);
        assert_eq!(FiniteModel::tiny().stores().len(), 2);
        let m = FiniteModel::small();
        let (bools, ex) = m.inputs(&ObjType::Bool, 0);
        assert!(ex);
        assert_eq!(bools.len(), 2);
        // Only 17 distinct ints exist in carrier + [-8, 8], so dedup caps
        // the sample list below n_samples.
        let (ints, ex) = m.inputs(&ObjType::Int, 0);
        assert!(!ex);
        assert!(ints.len() <= m.n_samples);
        assert_eq!(ints.len(), 17);
        assert_eq!(&ints[..4], &[int(0), int(1), int(2), int(3)]);
        let (again, _) = m.inputs(&ObjType::Int, 0);
        assert_eq!(ints, again);
        let (empty, ex) = m.inputs(&ObjType::Empty, 0);
        assert!(ex);
        assert!(empty.is_empty());
    }

    #[test]
    fn schematic_terms_have_no_denotation() {
        let m = FiniteModel::small();
        let v = Term::Var(crate::term::TermVar {
            name: "f".into(),
            dom: ObjType::Unit,
            cod: ObjType::Unit,
            deco: Decoration::PURE,
        });
        let err = denote_combined(&v, &m.env, Flow::Ord(Value::U), Store::zeros(&m.env), 10)
            .unwrap_err();
        assert!(matches!(err, CoreError::Schematic(_)));
    }
}
