//! Surface syntax for terms, types, and pure functions.
//!
//! Terms are parsed in two phases: a recursive-descent pass builds a parse
//! tree whose type slots are unification holes, then a constraint pass
//! unifies interfaces across compositions, pairs, and the other binders.
//! Location and exception value types unify with their resolutions (val(x)
//! with int, eval(e) with unit), so surface terms rarely need ascriptions.
//! Holes still unconstrained after unification default to unit, the
//! overwhelmingly common interface for program fragments; an ascription
//! `(t : A -> B)` overrides.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;

use crate::error::ParseError;
use crate::purefn::{ArithOp, BoolOp, CVal, CmpOp, PureFn};
use crate::rules::Equation;
use crate::term::{Term, TermVar};
use crate::types::{EqKind, ExcName, LocId, ObjType, TypeEnv, Value};

/// Names usable inside terms: the ambient environment plus declared
/// schematic variables, integer parameters, and definitions.
#[derive(Debug, Clone, Default)]
pub struct ScriptContext {
    pub env: TypeEnv,
    pub int_params: Vec<String>,
    pub vars: BTreeMap<String, TermVar>,
    pub defs: BTreeMap<String, Term>,
}

impl ScriptContext {
    pub fn new(env: TypeEnv) -> Self {
        ScriptContext { env, ..Default::default() }
    }
}

// ----- lexer -----

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokKind {
    Ident(String),
    Int(BigInt),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Tok {
    pub kind: TokKind,
    pub line: usize,
    pub col: usize,
}

const PUNCTS: &[&str] = &[
    "==.==", "==.~", "~.==", "~.~", ":=", "->", "<-", "=>", "<>", "<=", ">=", "&&", "||", "(",
    ")", "[", "]", "{", "}", ",", ";", ":", "*", "+", "@", "#", "-", ".", "=", "<", ">",
];

pub(crate) fn lex(src: &str) -> Result<Vec<Tok>, ParseError> {
    let mut toks = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && i + 1 < bytes.len() && bytes[i + 1] == b'-' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            let s = &src[start..i];
            toks.push(Tok { kind: TokKind::Ident(s.to_string()), line, col });
            col += i - start;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            let n: BigInt = src[start..i].parse().expect("digit run parses");
            toks.push(Tok { kind: TokKind::Int(n), line, col });
            col += i - start;
            continue;
        }
        let mut matched = None;
        for p in PUNCTS {
            if src[i..].starts_with(p) {
                matched = Some(*p);
                break;
            }
        }
        match matched {
            Some(p) => {
                toks.push(Tok { kind: TokKind::Punct(p), line, col });
                i += p.len();
                col += p.len();
            }
            None => {
                return Err(ParseError::new(line, col, format!("unexpected character `{}`", c)));
            }
        }
    }
    toks.push(Tok { kind: TokKind::Eof, line, col });
    Ok(toks)
}

pub(crate) struct Cursor<'a> {
    toks: &'a [Tok],
    pub i: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Tok]) -> Self {
        Cursor { toks, i: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.i.min(self.toks.len() - 1)]
    }

    pub fn next(&mut self) -> Tok {
        let t = self.toks[self.i.min(self.toks.len() - 1)].clone();
        if self.i < self.toks.len() - 1 {
            self.i += 1;
        }
        t
    }

    pub fn err(&self, msg: impl Into<String>) -> ParseError {
        let t = self.peek();
        ParseError::new(t.line, t.col, msg)
    }

    pub fn at_punct(&self, p: &str) -> bool {
        matches!(&self.peek().kind, TokKind::Punct(q) if *q == p)
    }

    pub fn at_ident(&self, s: &str) -> bool {
        matches!(&self.peek().kind, TokKind::Ident(q) if q == s)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn eat_ident(&mut self, s: &str) -> bool {
        if self.at_ident(s) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`, found {}", p, describe(&self.peek().kind))))
        }
    }

    pub fn expect_ident_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_ident(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`, found {}", s, describe(&self.peek().kind))))
        }
    }

    pub fn expect_any_ident(&mut self) -> Result<String, ParseError> {
        match &self.peek().kind {
            TokKind::Ident(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            other => Err(self.err(format!("expected an identifier, found {}", describe(other)))),
        }
    }

    pub fn expect_int(&mut self) -> Result<BigInt, ParseError> {
        match &self.peek().kind {
            TokKind::Int(n) => {
                let n = n.clone();
                self.next();
                Ok(n)
            }
            other => Err(self.err(format!("expected an integer, found {}", describe(other)))),
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokKind::Eof)
    }
}

pub(crate) fn describe(k: &TokKind) -> String {
    match k {
        TokKind::Ident(s) => format!("`{}`", s),
        TokKind::Int(n) => format!("`{}`", n),
        TokKind::Punct(p) => format!("`{}`", p),
        TokKind::Eof => "end of input".to_string(),
    }
}

// ----- unification types -----

#[derive(Debug, Clone, PartialEq)]
enum UType {
    Unit,
    Empty,
    Int,
    Bool,
    Prod(Box<UType>, Box<UType>),
    Sum(Box<UType>, Box<UType>),
    ValOf(LocId),
    EValOf(ExcName),
    Hole(u32),
}

impl fmt::Display for UType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UType::Unit => f.write_str("unit"),
            UType::Empty => f.write_str("empty"),
            UType::Int => f.write_str("int"),
            UType::Bool => f.write_str("bool"),
            UType::Prod(a, b) => write!(f, "({}*{})", a, b),
            UType::Sum(a, b) => write!(f, "({}+{})", a, b),
            UType::ValOf(x) => write!(f, "val({})", x),
            UType::EValOf(e) => write!(f, "eval({})", e),
            UType::Hole(_) => f.write_str("_"),
        }
    }
}

fn u_of(t: &ObjType) -> UType {
    match t {
        ObjType::Unit => UType::Unit,
        ObjType::Empty => UType::Empty,
        ObjType::Int => UType::Int,
        ObjType::Bool => UType::Bool,
        ObjType::Prod(a, b) => UType::Prod(Box::new(u_of(a)), Box::new(u_of(b))),
        ObjType::Sum(a, b) => UType::Sum(Box::new(u_of(a)), Box::new(u_of(b))),
        ObjType::ValOf(x) => UType::ValOf(x.clone()),
        ObjType::EValOf(e) => UType::EValOf(e.clone()),
    }
}

#[derive(Debug, Default)]
struct Holes {
    slots: Vec<Option<UType>>,
}

impl Holes {
    fn fresh(&mut self) -> UType {
        self.slots.push(None);
        UType::Hole(self.slots.len() as u32 - 1)
    }

    fn shallow(&self, t: &UType) -> UType {
        let mut cur = t.clone();
        while let UType::Hole(i) = cur {
            match &self.slots[i as usize] {
                Some(next) => cur = next.clone(),
                None => return cur,
            }
        }
        cur
    }

    fn occurs(&self, i: u32, t: &UType) -> bool {
        match self.shallow(t) {
            UType::Hole(j) => i == j,
            UType::Prod(a, b) | UType::Sum(a, b) => self.occurs(i, &a) || self.occurs(i, &b),
            _ => false,
        }
    }

    fn unify(&mut self, a: &UType, b: &UType, env: &TypeEnv) -> Result<(), String> {
        let a = self.shallow(a);
        let b = self.shallow(b);
        match (&a, &b) {
            (UType::Hole(i), t) | (t, UType::Hole(i)) => {
                if let UType::Hole(j) = t {
                    if i == j {
                        return Ok(());
                    }
                }
                if self.occurs(*i, t) {
                    return Err(format!("recursive type constraint on {}", t));
                }
                self.slots[*i as usize] = Some(t.clone());
                Ok(())
            }
            (UType::Prod(a1, a2), UType::Prod(b1, b2))
            | (UType::Sum(a1, a2), UType::Sum(b1, b2)) => {
                self.unify(a1, b1, env)?;
                self.unify(a2, b2, env)
            }
            _ => {
                // Hole-free leaves (and mixed leaf/compound pairs) compare
                // modulo resolution, so val(x) unifies with int.
                match (self.to_obj(&a), self.to_obj(&b)) {
                    (Some(x), Some(y)) if env.types_eq(&x, &y) => Ok(()),
                    _ => Err(format!("cannot unify {} with {}", a, b)),
                }
            }
        }
    }

    fn to_obj(&self, t: &UType) -> Option<ObjType> {
        match self.shallow(t) {
            UType::Unit => Some(ObjType::Unit),
            UType::Empty => Some(ObjType::Empty),
            UType::Int => Some(ObjType::Int),
            UType::Bool => Some(ObjType::Bool),
            UType::Prod(a, b) => Some(ObjType::prod(self.to_obj(&a)?, self.to_obj(&b)?)),
            UType::Sum(a, b) => Some(ObjType::sum(self.to_obj(&a)?, self.to_obj(&b)?)),
            UType::ValOf(x) => Some(ObjType::ValOf(x)),
            UType::EValOf(e) => Some(ObjType::EValOf(e)),
            UType::Hole(_) => None,
        }
    }

    /// Resolution with the unit default for unconstrained holes.
    fn finish(&mut self, t: &UType) -> ObjType {
        match self.shallow(t) {
            UType::Hole(i) => {
                self.slots[i as usize] = Some(UType::Unit);
                ObjType::Unit
            }
            UType::Prod(a, b) => ObjType::prod(self.finish(&a), self.finish(&b)),
            UType::Sum(a, b) => ObjType::sum(self.finish(&a), self.finish(&b)),
            other => self.to_obj(&other).expect("shallow non-hole resolves"),
        }
    }
}

// ----- parse trees -----

#[derive(Debug)]
enum PPure {
    Identity(UType),
    Fst(UType, UType),
    Snd(UType, UType),
    ToUnit(UType),
    InjLeft(UType, UType),
    InjRight(UType, UType),
    FromEmpty(UType),
    Const(CVal, UType, UType),
    Arith(ArithOp),
    Cmp(CmpOp),
    Bool(BoolOp),
    BoolToTwo,
    Compose(Box<PPure>, Box<PPure>),
    PairFn(Box<PPure>, Box<PPure>),
}

#[derive(Debug)]
enum PTerm {
    Comp(Box<PTerm>, Box<PTerm>),
    Pair(Box<PTerm>, Box<PTerm>),
    Copair(Box<PTerm>, Box<PTerm>),
    Downcast(Box<PTerm>),
    Lpi(Box<PTerm>, Box<PTerm>),
    Lookup(LocId),
    Update(LocId),
    Tag(ExcName),
    Untag(ExcName),
    Pbl,
    Pure(PPure),
    Throw(ObjType, ExcName),
    TryCatch(Box<PTerm>, ExcName, Box<PTerm>, UType),
    Var(TermVar),
    Def(String, Term),
    Ascribe(Box<PTerm>, ObjType, ObjType),
}

const RESERVED: &[&str] = &[
    "pair", "copair", "downcast", "lpi", "lookup", "update", "tag", "untag", "pbl", "tpure",
    "id", "pi1", "pi2", "forget", "empty", "inl", "inr", "constant", "throw", "try", "catch",
    "ttrue", "ffalse", "true", "false", "o", "unit", "int", "bool", "val", "eval",
];

/// Is `name` reserved by the term or type grammar?
pub fn is_reserved_name(name: &str) -> bool {
    RESERVED.contains(&name)
}

// ----- type parser (concrete types only) -----

pub(crate) fn parse_type_at(cur: &mut Cursor, env: &TypeEnv) -> Result<ObjType, ParseError> {
    let mut left = parse_type_factor(cur, env)?;
    while cur.at_punct("+") {
        cur.next();
        let right = parse_type_factor(cur, env)?;
        left = ObjType::sum(left, right);
    }
    Ok(left)
}

fn parse_type_factor(cur: &mut Cursor, env: &TypeEnv) -> Result<ObjType, ParseError> {
    let mut left = parse_type_atom(cur, env)?;
    while cur.at_punct("*") {
        cur.next();
        let right = parse_type_atom(cur, env)?;
        left = ObjType::prod(left, right);
    }
    Ok(left)
}

fn parse_type_atom(cur: &mut Cursor, env: &TypeEnv) -> Result<ObjType, ParseError> {
    if cur.eat_punct("(") {
        let t = parse_type_at(cur, env)?;
        cur.expect_punct(")")?;
        return Ok(t);
    }
    let name = cur.expect_any_ident()?;
    match name.as_str() {
        "unit" => Ok(ObjType::Unit),
        "empty" => Ok(ObjType::Empty),
        "int" => Ok(ObjType::Int),
        "bool" => Ok(ObjType::Bool),
        "val" => {
            cur.expect_punct("(")?;
            let x = cur.expect_any_ident()?;
            cur.expect_punct(")")?;
            let loc = LocId::new(&x);
            if !env.has_location(&loc) {
                return Err(cur.err(format!("unknown location `{}`", x)));
            }
            Ok(ObjType::ValOf(loc))
        }
        "eval" => {
            cur.expect_punct("(")?;
            let e = cur.expect_any_ident()?;
            cur.expect_punct(")")?;
            let exc = ExcName::new(&e);
            if !env.has_exception(&exc) {
                return Err(cur.err(format!("unknown exception `{}`", e)));
            }
            Ok(ObjType::EValOf(exc))
        }
        other => Err(cur.err(format!("expected a type, found `{}`", other))),
    }
}

// ----- pure function parser -----

fn parse_ppure(cur: &mut Cursor, ctx: &ScriptContext, holes: &mut Holes) -> Result<PPure, ParseError> {
    let name = cur.expect_any_ident()?;
    let one_targ = |cur: &mut Cursor, holes: &mut Holes| -> Result<UType, ParseError> {
        if cur.eat_punct("[") {
            let t = parse_type_at(cur, &ctx.env)?;
            cur.expect_punct("]")?;
            Ok(u_of(&t))
        } else {
            Ok(holes.fresh())
        }
    };
    let two_targs =
        |cur: &mut Cursor, holes: &mut Holes| -> Result<(UType, UType), ParseError> {
            if cur.eat_punct("[") {
                let a = parse_type_at(cur, &ctx.env)?;
                cur.expect_punct(",")?;
                let b = parse_type_at(cur, &ctx.env)?;
                cur.expect_punct("]")?;
                Ok((u_of(&a), u_of(&b)))
            } else {
                Ok((holes.fresh(), holes.fresh()))
            }
        };
    match name.as_str() {
        "identity" => Ok(PPure::Identity(one_targ(cur, holes)?)),
        "fst" => {
            let (a, b) = two_targs(cur, holes)?;
            Ok(PPure::Fst(a, b))
        }
        "snd" => {
            let (a, b) = two_targs(cur, holes)?;
            Ok(PPure::Snd(a, b))
        }
        "to_unit" => Ok(PPure::ToUnit(one_targ(cur, holes)?)),
        "inj_l" => {
            let (a, b) = two_targs(cur, holes)?;
            Ok(PPure::InjLeft(a, b))
        }
        "inj_r" => {
            let (a, b) = two_targs(cur, holes)?;
            Ok(PPure::InjRight(a, b))
        }
        "from_empty" => Ok(PPure::FromEmpty(one_targ(cur, holes)?)),
        "const" => {
            cur.expect_punct("(")?;
            let (cv, cod) = parse_const_val(cur, ctx)?;
            cur.expect_punct(")")?;
            Ok(PPure::Const(cv, holes.fresh(), u_of(&cod)))
        }
        "add" => Ok(PPure::Arith(ArithOp::Add)),
        "sub" => Ok(PPure::Arith(ArithOp::Sub)),
        "mul" => Ok(PPure::Arith(ArithOp::Mul)),
        "eq" => Ok(PPure::Cmp(CmpOp::Eq)),
        "neq" => Ok(PPure::Cmp(CmpOp::Neq)),
        "lt" => Ok(PPure::Cmp(CmpOp::Lt)),
        "gt" => Ok(PPure::Cmp(CmpOp::Gt)),
        "le" => Ok(PPure::Cmp(CmpOp::Le)),
        "ge" => Ok(PPure::Cmp(CmpOp::Ge)),
        "and" => Ok(PPure::Bool(BoolOp::And)),
        "or" => Ok(PPure::Bool(BoolOp::Or)),
        "bool_to_two" => Ok(PPure::BoolToTwo),
        "comp" => {
            cur.expect_punct("(")?;
            let f = parse_ppure(cur, ctx, holes)?;
            cur.expect_punct(",")?;
            let g = parse_ppure(cur, ctx, holes)?;
            cur.expect_punct(")")?;
            Ok(PPure::Compose(Box::new(f), Box::new(g)))
        }
        "pairfn" => {
            cur.expect_punct("(")?;
            let f = parse_ppure(cur, ctx, holes)?;
            cur.expect_punct(",")?;
            let g = parse_ppure(cur, ctx, holes)?;
            cur.expect_punct(")")?;
            Ok(PPure::PairFn(Box::new(f), Box::new(g)))
        }
        other => Err(cur.err(format!("expected a pure function, found `{}`", other))),
    }
}

/// Constant payloads: an integer literal (optionally negated), a boolean,
/// or a declared integer parameter (kept symbolic).
fn parse_const_val(cur: &mut Cursor, ctx: &ScriptContext) -> Result<(CVal, ObjType), ParseError> {
    if cur.eat_punct("-") {
        let n = cur.expect_int()?;
        return Ok((CVal::Ground(Value::I(-n)), ObjType::Int));
    }
    match &cur.peek().kind {
        TokKind::Int(_) => {
            let n = cur.expect_int()?;
            Ok((CVal::Ground(Value::I(n)), ObjType::Int))
        }
        TokKind::Ident(s) if s == "true" => {
            cur.next();
            Ok((CVal::Ground(Value::B(true)), ObjType::Bool))
        }
        TokKind::Ident(s) if s == "false" => {
            cur.next();
            Ok((CVal::Ground(Value::B(false)), ObjType::Bool))
        }
        TokKind::Ident(s) if ctx.int_params.contains(s) => {
            let s = s.clone();
            cur.next();
            Ok((CVal::Sym(s), ObjType::Int))
        }
        other => Err(cur.err(format!(
            "expected an integer, boolean, or declared parameter, found {}",
            describe(other)
        ))),
    }
}

// ----- term parser -----

fn parse_pterm(cur: &mut Cursor, ctx: &ScriptContext, holes: &mut Holes) -> Result<PTerm, ParseError> {
    let mut left = parse_atom(cur, ctx, holes)?;
    while cur.at_ident("o") {
        cur.next();
        let right = parse_atom(cur, ctx, holes)?;
        left = PTerm::Comp(Box::new(left), Box::new(right));
    }
    Ok(left)
}

fn loc_arg(cur: &mut Cursor, ctx: &ScriptContext) -> Result<LocId, ParseError> {
    cur.expect_punct("(")?;
    let x = cur.expect_any_ident()?;
    cur.expect_punct(")")?;
    let loc = LocId::new(&x);
    if !ctx.env.has_location(&loc) {
        return Err(cur.err(format!("unknown location `{}`", x)));
    }
    Ok(loc)
}

fn exc_arg_name(cur: &mut Cursor, ctx: &ScriptContext) -> Result<ExcName, ParseError> {
    let e = cur.expect_any_ident()?;
    let exc = ExcName::new(&e);
    if !ctx.env.has_exception(&exc) {
        return Err(cur.err(format!("unknown exception `{}`", e)));
    }
    Ok(exc)
}

fn exc_arg(cur: &mut Cursor, ctx: &ScriptContext) -> Result<ExcName, ParseError> {
    cur.expect_punct("(")?;
    let e = exc_arg_name(cur, ctx)?;
    cur.expect_punct(")")?;
    Ok(e)
}

fn parse_atom(cur: &mut Cursor, ctx: &ScriptContext, holes: &mut Holes) -> Result<PTerm, ParseError> {
    if cur.eat_punct("(") {
        let t = parse_pterm(cur, ctx, holes)?;
        if cur.eat_punct(":") {
            let dom = parse_type_at(cur, &ctx.env)?;
            cur.expect_punct("->")?;
            let cod = parse_type_at(cur, &ctx.env)?;
            cur.expect_punct(")")?;
            return Ok(PTerm::Ascribe(Box::new(t), dom, cod));
        }
        cur.expect_punct(")")?;
        return Ok(t);
    }
    let name = cur.expect_any_ident()?;
    match name.as_str() {
        "pair" | "copair" | "lpi" => {
            cur.expect_punct("(")?;
            let a = parse_pterm(cur, ctx, holes)?;
            cur.expect_punct(",")?;
            let b = parse_pterm(cur, ctx, holes)?;
            cur.expect_punct(")")?;
            Ok(match name.as_str() {
                "pair" => PTerm::Pair(Box::new(a), Box::new(b)),
                "copair" => PTerm::Copair(Box::new(a), Box::new(b)),
                _ => PTerm::Lpi(Box::new(a), Box::new(b)),
            })
        }
        "downcast" => {
            cur.expect_punct("(")?;
            let t = parse_pterm(cur, ctx, holes)?;
            cur.expect_punct(")")?;
            Ok(PTerm::Downcast(Box::new(t)))
        }
        "lookup" => Ok(PTerm::Lookup(loc_arg(cur, ctx)?)),
        "update" => Ok(PTerm::Update(loc_arg(cur, ctx)?)),
        "tag" => Ok(PTerm::Tag(exc_arg(cur, ctx)?)),
        "untag" => Ok(PTerm::Untag(exc_arg(cur, ctx)?)),
        "pbl" => Ok(PTerm::Pbl),
        "tpure" => {
            cur.expect_punct("(")?;
            let p = parse_ppure(cur, ctx, holes)?;
            cur.expect_punct(")")?;
            Ok(PTerm::Pure(p))
        }
        "id" => Ok(PTerm::Pure(PPure::Identity(holes.fresh()))),
        "pi1" => {
            let (a, b) = (holes.fresh(), holes.fresh());
            Ok(PTerm::Pure(PPure::Fst(a, b)))
        }
        "pi2" => {
            let (a, b) = (holes.fresh(), holes.fresh());
            Ok(PTerm::Pure(PPure::Snd(a, b)))
        }
        "forget" => Ok(PTerm::Pure(PPure::ToUnit(holes.fresh()))),
        "empty" => {
            cur.expect_punct("(")?;
            let t = parse_type_at(cur, &ctx.env)?;
            cur.expect_punct(")")?;
            Ok(PTerm::Pure(PPure::FromEmpty(u_of(&t))))
        }
        "inl" | "inr" => {
            let (a, b) = if cur.eat_punct("[") {
                let a = parse_type_at(cur, &ctx.env)?;
                cur.expect_punct(",")?;
                let b = parse_type_at(cur, &ctx.env)?;
                cur.expect_punct("]")?;
                (u_of(&a), u_of(&b))
            } else {
                (holes.fresh(), holes.fresh())
            };
            Ok(PTerm::Pure(if name == "inl" {
                PPure::InjLeft(a, b)
            } else {
                PPure::InjRight(a, b)
            }))
        }
        "constant" => {
            cur.expect_punct("(")?;
            let (cv, cod) = parse_const_val(cur, ctx)?;
            cur.expect_punct(")")?;
            // Program constants are unit-domained by convention.
            Ok(PTerm::Pure(PPure::Const(cv, UType::Unit, u_of(&cod))))
        }
        "ttrue" => Ok(PTerm::Pure(PPure::InjLeft(UType::Unit, UType::Unit))),
        "ffalse" => Ok(PTerm::Pure(PPure::InjRight(UType::Unit, UType::Unit))),
        "throw" => {
            cur.expect_punct("(")?;
            let t = parse_type_at(cur, &ctx.env)?;
            cur.expect_punct(",")?;
            let e = exc_arg_name(cur, ctx)?;
            cur.expect_punct(")")?;
            Ok(PTerm::Throw(t, e))
        }
        "try" => {
            cur.expect_punct("(")?;
            let c = parse_pterm(cur, ctx, holes)?;
            cur.expect_punct(")")?;
            cur.expect_ident_kw("catch")?;
            let e = exc_arg(cur, ctx)?;
            cur.expect_punct("(")?;
            let h = parse_pterm(cur, ctx, holes)?;
            cur.expect_punct(")")?;
            let cod = holes.fresh();
            Ok(PTerm::TryCatch(Box::new(c), e, Box::new(h), cod))
        }
        other => {
            if let Some(v) = ctx.vars.get(other) {
                return Ok(PTerm::Var(v.clone()));
            }
            if let Some(body) = ctx.defs.get(other) {
                return Ok(PTerm::Def(other.to_string(), body.clone()));
            }
            Err(cur.err(format!("unknown term name `{}`", other)))
        }
    }
}

// ----- constraint pass -----

fn infer_ppure(p: &PPure, holes: &mut Holes, env: &TypeEnv) -> Result<(UType, UType), String> {
    Ok(match p {
        PPure::Identity(t) => (t.clone(), t.clone()),
        PPure::Fst(a, b) => (UType::Prod(Box::new(a.clone()), Box::new(b.clone())), a.clone()),
        PPure::Snd(a, b) => (UType::Prod(Box::new(a.clone()), Box::new(b.clone())), b.clone()),
        PPure::ToUnit(t) => (t.clone(), UType::Unit),
        PPure::InjLeft(a, b) => {
            (a.clone(), UType::Sum(Box::new(a.clone()), Box::new(b.clone())))
        }
        PPure::InjRight(a, b) => {
            (b.clone(), UType::Sum(Box::new(a.clone()), Box::new(b.clone())))
        }
        PPure::FromEmpty(t) => (UType::Empty, t.clone()),
        PPure::Const(_, d, c) => (d.clone(), c.clone()),
        PPure::Arith(_) => (UType::Prod(Box::new(UType::Int), Box::new(UType::Int)), UType::Int),
        PPure::Cmp(_) => (UType::Prod(Box::new(UType::Int), Box::new(UType::Int)), UType::Bool),
        PPure::Bool(_) => {
            (UType::Prod(Box::new(UType::Bool), Box::new(UType::Bool)), UType::Bool)
        }
        PPure::BoolToTwo => {
            (UType::Bool, UType::Sum(Box::new(UType::Unit), Box::new(UType::Unit)))
        }
        PPure::Compose(f, g) => {
            let (fd, fc) = infer_ppure(f, holes, env)?;
            let (gd, gc) = infer_ppure(g, holes, env)?;
            holes.unify(&fd, &gc, env)?;
            (gd, fc)
        }
        PPure::PairFn(f, g) => {
            let (fd, fc) = infer_ppure(f, holes, env)?;
            let (gd, gc) = infer_ppure(g, holes, env)?;
            holes.unify(&fd, &gd, env)?;
            (fd, UType::Prod(Box::new(fc), Box::new(gc)))
        }
    })
}

fn infer_pterm(t: &PTerm, holes: &mut Holes, env: &TypeEnv) -> Result<(UType, UType), String> {
    Ok(match t {
        PTerm::Comp(a, b) => {
            let (ad, ac) = infer_pterm(a, holes, env)?;
            let (bd, bc) = infer_pterm(b, holes, env)?;
            holes.unify(&ad, &bc, env)?;
            (bd, ac)
        }
        PTerm::Pair(a, b) => {
            let (ad, ac) = infer_pterm(a, holes, env)?;
            let (bd, bc) = infer_pterm(b, holes, env)?;
            holes.unify(&ad, &bd, env)?;
            (ad, UType::Prod(Box::new(ac), Box::new(bc)))
        }
        PTerm::Copair(a, b) => {
            let (ad, ac) = infer_pterm(a, holes, env)?;
            let (bd, bc) = infer_pterm(b, holes, env)?;
            holes.unify(&ac, &bc, env)?;
            (UType::Sum(Box::new(ad), Box::new(bd)), ac)
        }
        PTerm::Downcast(a) => infer_pterm(a, holes, env)?,
        PTerm::Lpi(c, f) => {
            let (cd, cc) = infer_pterm(c, holes, env)?;
            let (fd, fc) = infer_pterm(f, holes, env)?;
            holes.unify(&cd, &UType::Unit, env)?;
            holes.unify(
                &cc,
                &UType::Sum(Box::new(UType::Unit), Box::new(UType::Unit)),
                env,
            )?;
            holes.unify(&fd, &UType::Unit, env)?;
            holes.unify(&fc, &UType::Unit, env)?;
            (UType::Unit, UType::Unit)
        }
        PTerm::Lookup(x) => (UType::Unit, UType::ValOf(x.clone())),
        PTerm::Update(x) => (UType::ValOf(x.clone()), UType::Unit),
        PTerm::Tag(e) => (UType::EValOf(e.clone()), UType::Empty),
        PTerm::Untag(e) => (UType::Empty, UType::EValOf(e.clone())),
        PTerm::Pbl => (UType::Bool, UType::Sum(Box::new(UType::Unit), Box::new(UType::Unit))),
        PTerm::Pure(p) => infer_ppure(p, holes, env)?,
        PTerm::Throw(ty, e) => (UType::EValOf(e.clone()), u_of(ty)),
        PTerm::TryCatch(c, e, h, cod) => {
            let (cd, cc) = infer_pterm(c, holes, env)?;
            let (hd, hc) = infer_pterm(h, holes, env)?;
            holes.unify(&cc, cod, env)?;
            holes.unify(&hc, cod, env)?;
            holes.unify(&hd, &UType::EValOf(e.clone()), env)?;
            (cd, cod.clone())
        }
        PTerm::Var(v) => (u_of(&v.dom), u_of(&v.cod)),
        PTerm::Def(_, body) => {
            let (d, c) = body.typecheck(env).map_err(|e| e.to_string())?;
            (u_of(&d), u_of(&c))
        }
        PTerm::Ascribe(inner, dom, cod) => {
            let (d, c) = infer_pterm(inner, holes, env)?;
            holes.unify(&d, &u_of(dom), env)?;
            holes.unify(&c, &u_of(cod), env)?;
            (u_of(dom), u_of(cod))
        }
    })
}

fn build_ppure(p: &PPure, holes: &mut Holes) -> PureFn {
    match p {
        PPure::Identity(t) => PureFn::Identity(holes.finish(t)),
        PPure::Fst(a, b) => PureFn::Fst(holes.finish(a), holes.finish(b)),
        PPure::Snd(a, b) => PureFn::Snd(holes.finish(a), holes.finish(b)),
        PPure::ToUnit(t) => PureFn::ToUnit(holes.finish(t)),
        PPure::InjLeft(a, b) => PureFn::InjLeft(holes.finish(a), holes.finish(b)),
        PPure::InjRight(a, b) => PureFn::InjRight(holes.finish(a), holes.finish(b)),
        PPure::FromEmpty(t) => PureFn::FromEmpty(holes.finish(t)),
        PPure::Const(cv, d, c) => PureFn::Const(cv.clone(), holes.finish(d), holes.finish(c)),
        PPure::Arith(op) => PureFn::Arith(*op),
        PPure::Cmp(op) => PureFn::Cmp(*op),
        PPure::Bool(op) => PureFn::Bool(*op),
        PPure::BoolToTwo => PureFn::BoolToTwo,
        PPure::Compose(f, g) => PureFn::Compose(
            Box::new(build_ppure(f, holes)),
            Box::new(build_ppure(g, holes)),
        ),
        PPure::PairFn(f, g) => PureFn::PairFn(
            Box::new(build_ppure(f, holes)),
            Box::new(build_ppure(g, holes)),
        ),
    }
}

fn build_pterm(t: &PTerm, holes: &mut Holes) -> Term {
    match t {
        PTerm::Comp(a, b) => Term::comp(build_pterm(a, holes), build_pterm(b, holes)),
        PTerm::Pair(a, b) => Term::pair(build_pterm(a, holes), build_pterm(b, holes)),
        PTerm::Copair(a, b) => Term::copair(build_pterm(a, holes), build_pterm(b, holes)),
        PTerm::Downcast(a) => Term::downcast(build_pterm(a, holes)),
        PTerm::Lpi(c, f) => Term::lpi(build_pterm(c, holes), build_pterm(f, holes)),
        PTerm::Lookup(x) => Term::Lookup(x.clone()),
        PTerm::Update(x) => Term::Update(x.clone()),
        PTerm::Tag(e) => Term::Tag(e.clone()),
        PTerm::Untag(e) => Term::Untag(e.clone()),
        PTerm::Pbl => Term::Pbl,
        PTerm::Pure(p) => Term::pure(build_ppure(p, holes)),
        PTerm::Throw(ty, e) => Term::throw(ty.clone(), e.clone()),
        PTerm::TryCatch(c, e, h, cod) => {
            let cod = holes.finish(cod);
            Term::try_catch(build_pterm(c, holes), e.clone(), build_pterm(h, holes), cod)
        }
        PTerm::Var(v) => Term::Var(v.clone()),
        PTerm::Def(name, body) => Term::def(name, body.clone()),
        PTerm::Ascribe(inner, _, _) => build_pterm(inner, holes),
    }
}

// ----- entry points -----

/// Parse one term from the cursor, inferring interface types.
pub(crate) fn parse_term_at(cur: &mut Cursor, ctx: &ScriptContext) -> Result<Term, ParseError> {
    let start = cur.peek().clone();
    let mut holes = Holes::default();
    let pt = parse_pterm(cur, ctx, &mut holes)?;
    infer_pterm(&pt, &mut holes, &ctx.env)
        .map_err(|m| ParseError::new(start.line, start.col, m))?;
    let term = build_pterm(&pt, &mut holes);
    term.typecheck(&ctx.env)
        .map_err(|e| ParseError::new(start.line, start.col, e.to_string()))?;
    Ok(term)
}

/// Parse `TERM KIND TERM`, unifying the interfaces of the two sides so
/// that, say, a bare `id` picks up its type from the other side.
pub(crate) fn parse_equation_at(
    cur: &mut Cursor,
    ctx: &ScriptContext,
) -> Result<Equation, ParseError> {
    let start = cur.peek().clone();
    let mut holes = Holes::default();
    let p_lhs = parse_pterm(cur, ctx, &mut holes)?;
    let kind = parse_kind_at(cur)?;
    let p_rhs = parse_pterm(cur, ctx, &mut holes)?;
    let both = (|| -> Result<(), String> {
        let (ld, lc) = infer_pterm(&p_lhs, &mut holes, &ctx.env)?;
        let (rd, rc) = infer_pterm(&p_rhs, &mut holes, &ctx.env)?;
        holes.unify(&ld, &rd, &ctx.env).map_err(|m| format!("equation domains: {}", m))?;
        holes.unify(&lc, &rc, &ctx.env).map_err(|m| format!("equation codomains: {}", m))?;
        Ok(())
    })();
    both.map_err(|m| ParseError::new(start.line, start.col, m))?;
    let lhs = build_pterm(&p_lhs, &mut holes);
    let rhs = build_pterm(&p_rhs, &mut holes);
    let eq = Equation::new(lhs, rhs, kind);
    eq.check(&ctx.env)
        .map_err(|e| ParseError::new(start.line, start.col, e.to_string()))?;
    Ok(eq)
}

pub(crate) fn parse_kind_at(cur: &mut Cursor) -> Result<EqKind, ParseError> {
    for tok in ["==.==", "==.~", "~.==", "~.~"] {
        if cur.eat_punct(tok) {
            return Ok(EqKind::from_token(tok).expect("kind token table"));
        }
    }
    Err(cur.err(format!(
        "expected an equation kind (==.==, ==.~, ~.==, ~.~), found {}",
        describe(&cur.peek().kind)
    )))
}

/// Parse a complete source string as one term.
pub fn parse_term(src: &str, ctx: &ScriptContext) -> Result<Term, ParseError> {
    let toks = lex(src)?;
    let mut cur = Cursor::new(&toks);
    let t = parse_term_at(&mut cur, ctx)?;
    if !cur.at_eof() {
        return Err(cur.err(format!("trailing input: {}", describe(&cur.peek().kind))));
    }
    Ok(t)
}

/// Parse a complete source string as one object type.
pub fn parse_type(src: &str, env: &TypeEnv) -> Result<ObjType, ParseError> {
    let toks = lex(src)?;
    let mut cur = Cursor::new(&toks);
    let t = parse_type_at(&mut cur, env)?;
    if !cur.at_eof() {
        return Err(cur.err(format!("trailing input: {}", describe(&cur.peek().kind))));
    }
    Ok(t)
}
