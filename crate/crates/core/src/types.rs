//! Object types, the signature environment, and runtime values.
//!
//! Types are compared *modulo resolution*: `val(x)` is the value type of a
//! declared location (always `int` here) and `eval(e)` is the parameter type
//! of a declared exception name (always `unit` here). Terms keep the named
//! forms so printing stays informative; every equality check that matters
//! goes through [`TypeEnv::resolve`].

use std::fmt;
use std::rc::Rc;

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::CoreError;

/// Name of a mutable storage location.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LocId(pub String);

/// Name of an exception constructor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ExcName(pub String);

impl LocId {
    pub fn new(s: impl Into<String>) -> Self {
        LocId(s.into())
    }
}

impl ExcName {
    pub fn new(s: impl Into<String>) -> Self {
        ExcName(s.into())
    }
}

impl fmt::Display for LocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ExcName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Object types of the base category.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjType {
    Unit,
    Empty,
    Int,
    Bool,
    Prod(Rc<ObjType>, Rc<ObjType>),
    Sum(Rc<ObjType>, Rc<ObjType>),
    /// Value type of a declared location; resolves to `Int`.
    ValOf(LocId),
    /// Parameter type of a declared exception name; resolves to `Unit`.
    EValOf(ExcName),
}

impl ObjType {
    pub fn prod(a: ObjType, b: ObjType) -> ObjType {
        ObjType::Prod(Rc::new(a), Rc::new(b))
    }

    pub fn sum(a: ObjType, b: ObjType) -> ObjType {
        ObjType::Sum(Rc::new(a), Rc::new(b))
    }

    /// The canonical `unit + unit` used for embedded booleans.
    pub fn two() -> ObjType {
        ObjType::sum(ObjType::Unit, ObjType::Unit)
    }
}

impl fmt::Display for ObjType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjType::Unit => write!(f, "unit"),
            ObjType::Empty => write!(f, "empty"),
            ObjType::Int => write!(f, "int"),
            ObjType::Bool => write!(f, "bool"),
            ObjType::Prod(a, b) => write!(f, "({} * {})", a, b),
            ObjType::Sum(a, b) => write!(f, "({} + {})", a, b),
            ObjType::ValOf(i) => write!(f, "val({})", i),
            ObjType::EValOf(e) => write!(f, "eval({})", e),
        }
    }
}

/// Declared locations and exception names of a signature.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeEnv {
    pub locations: Vec<LocId>,
    pub exceptions: Vec<ExcName>,
}

impl TypeEnv {
    pub fn new(locations: Vec<LocId>, exceptions: Vec<ExcName>) -> Self {
        TypeEnv { locations, exceptions }
    }

    pub fn has_location(&self, i: &LocId) -> bool {
        self.locations.contains(i)
    }

    pub fn has_exception(&self, e: &ExcName) -> bool {
        self.exceptions.contains(e)
    }

    pub fn check_location(&self, i: &LocId) -> Result<(), CoreError> {
        if self.has_location(i) {
            Ok(())
        } else {
            Err(CoreError::UnknownLocation(i.0.clone()))
        }
    }

    pub fn check_exception(&self, e: &ExcName) -> Result<(), CoreError> {
        if self.has_exception(e) {
            Ok(())
        } else {
            Err(CoreError::UnknownException(e.0.clone()))
        }
    }

    /// Replace `val(_)`/`eval(_)` by their underlying types, recursively.
    pub fn resolve(&self, t: &ObjType) -> ObjType {
        match t {
            ObjType::ValOf(_) => ObjType::Int,
            ObjType::EValOf(_) => ObjType::Unit,
            ObjType::Prod(a, b) => ObjType::prod(self.resolve(a), self.resolve(b)),
            ObjType::Sum(a, b) => ObjType::sum(self.resolve(a), self.resolve(b)),
            other => other.clone(),
        }
    }

    /// Type equality modulo resolution.
    pub fn types_eq(&self, a: &ObjType, b: &ObjType) -> bool {
        self.resolve(a) == self.resolve(b)
    }
}

/// Ground values of the base category.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    U,
    B(bool),
    I(BigInt),
    P(Box<Value>, Box<Value>),
    L(Box<Value>),
    R(Box<Value>),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::I(BigInt::from(n))
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::P(Box::new(a), Box::new(b))
    }

    pub fn inl(v: Value) -> Value {
        Value::L(Box::new(v))
    }

    pub fn inr(v: Value) -> Value {
        Value::R(Box::new(v))
    }

    /// Does the value inhabit the (resolved) type?
    pub fn has_type(&self, t: &ObjType, env: &TypeEnv) -> bool {
        match (self, &env.resolve(t)) {
            (Value::U, ObjType::Unit) => true,
            (Value::B(_), ObjType::Bool) => true,
            (Value::I(_), ObjType::Int) => true,
            (Value::P(a, b), ObjType::Prod(ta, tb)) => a.has_type(ta, env) && b.has_type(tb, env),
            (Value::L(a), ObjType::Sum(ta, _)) => a.has_type(ta, env),
            (Value::R(b), ObjType::Sum(_, tb)) => b.has_type(tb, env),
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::U => write!(f, "()"),
            Value::B(b) => write!(f, "{}", b),
            Value::I(n) => write!(f, "{}", n),
            Value::P(a, b) => write!(f, "({}, {})", a, b),
            Value::L(v) => write!(f, "inl {}", v),
            Value::R(v) => write!(f, "inr {}", v),
        }
    }
}

/// Per-effect degree: pure, read-only observer, full access.
///
/// For state: 0 = pure, 1 = accessor, 2 = modifier.
/// For exceptions: 0 = pure, 1 = propagator, 2 = catcher.
pub type Degree = u8;

/// Combined decoration `(state degree, exception degree)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Decoration {
    pub state: Degree,
    pub exc: Degree,
}

impl Decoration {
    pub const PURE: Decoration = Decoration { state: 0, exc: 0 };

    pub fn new(state: Degree, exc: Degree) -> Self {
        debug_assert!(state <= 2 && exc <= 2);
        Decoration { state, exc }
    }

    pub fn join(self, other: Decoration) -> Decoration {
        Decoration {
            state: self.state.max(other.state),
            exc: self.exc.max(other.exc),
        }
    }

    pub fn leq(self, other: Decoration) -> bool {
        self.state <= other.state && self.exc <= other.exc
    }
}

impl fmt::Display for Decoration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.state, self.exc)
    }
}

/// Strength of an equation in one effect dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Strength {
    Weak,
    Strong,
}

/// Kind of a decorated equation: a strength per effect dimension.
///
/// Strong-state compares final stores; weak-state compares returned values
/// only. Strong-exception compares all cases; weak-exception compares
/// ordinary (non-exceptional) cases only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct EqKind {
    pub state: Strength,
    pub exc: Strength,
}

impl EqKind {
    pub const SS: EqKind = EqKind { state: Strength::Strong, exc: Strength::Strong };
    pub const SW: EqKind = EqKind { state: Strength::Strong, exc: Strength::Weak };
    pub const WS: EqKind = EqKind { state: Strength::Weak, exc: Strength::Strong };
    pub const WW: EqKind = EqKind { state: Strength::Weak, exc: Strength::Weak };

    /// `self` proves at least as much as `other`, componentwise.
    pub fn geq(self, other: EqKind) -> bool {
        self.state >= other.state && self.exc >= other.exc
    }

    /// Script token, e.g. `==.~` for strong state / weak exceptions.
    pub fn token(self) -> &'static str {
        match (self.state, self.exc) {
            (Strength::Strong, Strength::Strong) => "==.==",
            (Strength::Strong, Strength::Weak) => "==.~",
            (Strength::Weak, Strength::Strong) => "~.==",
            (Strength::Weak, Strength::Weak) => "~.~",
        }
    }

    pub fn from_token(s: &str) -> Option<EqKind> {
        match s {
            "==.==" => Some(EqKind::SS),
            "==.~" => Some(EqKind::SW),
            "~.==" => Some(EqKind::WS),
            "~.~" => Some(EqKind::WW),
            _ => None,
        }
    }
}

impl fmt::Display for EqKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_collapses_named_types() {
        let env = TypeEnv::new(vec![LocId::new("x")], vec![ExcName::new("e")]);
        let t = ObjType::prod(
            ObjType::ValOf(LocId::new("x")),
            ObjType::EValOf(ExcName::new("e")),
        );
        assert_eq!(env.resolve(&t), ObjType::prod(ObjType::Int, ObjType::Unit));
        assert!(env.types_eq(&ObjType::ValOf(LocId::new("x")), &ObjType::Int));
        assert!(!env.types_eq(&ObjType::Int, &ObjType::Bool));
    }

    #[test]
    fn decoration_join_is_componentwise_max() {
        let a = Decoration::new(1, 0);
        let b = Decoration::new(0, 2);
        assert_eq!(a.join(b), Decoration::new(1, 2));
        assert!(Decoration::PURE.leq(a));
        assert!(!a.leq(Decoration::PURE));
    }

    #[test]
    fn kind_lattice_order() {
        assert!(EqKind::SS.geq(EqKind::SW));
        assert!(EqKind::SS.geq(EqKind::WS));
        assert!(EqKind::SS.geq(EqKind::WW));
        assert!(EqKind::SW.geq(EqKind::WW));
        assert!(EqKind::WS.geq(EqKind::WW));
        assert!(!EqKind::SW.geq(EqKind::WS));
        assert!(!EqKind::WS.geq(EqKind::SW));
        for k in [EqKind::SS, EqKind::SW, EqKind::WS, EqKind::WW] {
            assert_eq!(EqKind::from_token(k.token()), Some(k));
        }
    }

    #[test]
    fn value_typing() {
        let env = TypeEnv::default();
        assert!(Value::U.has_type(&ObjType::Unit, &env));
        assert!(Value::int(3).has_type(&ObjType::Int, &env));
        assert!(Value::inl(Value::U).has_type(&ObjType::two(), &env));
        assert!(!Value::inl(Value::U).has_type(&ObjType::Int, &env));
        assert!(Value::pair(Value::U, Value::B(true))
            .has_type(&ObjType::prod(ObjType::Unit, ObjType::Bool), &env));
    }
}
