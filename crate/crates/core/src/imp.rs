//! The imperative language with exceptions: AST, parser, and a fuel-bounded
//! small-step interpreter.
//!
//! Programs declare their locations (and optionally exceptions) in a header,
//! then give one command. Expressions are effect-free and evaluated in one
//! go; commands step one rule at a time so traces show every intermediate
//! configuration, including exception propagation through `;` and `try`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::error::ParseError;
use crate::purefn::PureFn;
use crate::syntax::{describe, lex, Cursor, TokKind};
use crate::types::{ExcName, LocId, ObjType, TypeEnv, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Neq,
    Lt,
    Gt,
    Le,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn token(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "=",
            BinOp::Neq => "<>",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul)
    }

    pub fn is_cmp(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge)
    }

    // Binding strength for parsing and printing; higher binds tighter.
    fn prec(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            _ if self.is_cmp() => 3,
            BinOp::Add | BinOp::Sub => 4,
            _ => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Exp {
    IntConst(BigInt),
    BoolConst(bool),
    Var(LocId),
    /// Not reachable from the grammar; for programmatic construction.
    Unary(PureFn, Box<Exp>),
    Binary(BinOp, Box<Exp>, Box<Exp>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpType {
    Int,
    Bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cmd {
    Skip,
    Assign(LocId, Exp),
    Seq(Box<Cmd>, Box<Cmd>),
    If(Exp, Box<Cmd>, Box<Cmd>),
    While(Exp, Box<Cmd>),
    Throw(ExcName),
    TryCatch(Box<Cmd>, ExcName, Box<Cmd>),
}

/// A parsed program: the declared signature plus its command.
#[derive(Debug, Clone)]
pub struct Program {
    pub env: TypeEnv,
    pub cmd: Cmd,
}

#[derive(Debug, Error)]
pub enum ImpError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Type(String),
}

// ----- store and configurations -----

/// Total integer store over the declared locations; absent entries read 0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Store {
    vals: BTreeMap<LocId, BigInt>,
}

impl Store {
    /// All declared locations at 0.
    pub fn zeros(env: &TypeEnv) -> Store {
        let vals = env.locations.iter().map(|l| (l.clone(), BigInt::from(0))).collect();
        Store { vals }
    }

    /// Zeros overridden by the given assignments; undeclared names error.
    pub fn with(
        env: &TypeEnv,
        pairs: impl IntoIterator<Item = (LocId, BigInt)>,
    ) -> Result<Store, String> {
        let mut s = Store::zeros(env);
        for (l, v) in pairs {
            if !env.has_location(&l) {
                return Err(format!("unknown location `{}`", l));
            }
            s.vals.insert(l, v);
        }
        Ok(s)
    }

    pub fn get(&self, l: &LocId) -> BigInt {
        self.vals.get(l).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, l: &LocId, v: BigInt) {
        self.vals.insert(l.clone(), v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LocId, &BigInt)> {
        self.vals.iter()
    }
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (l, v)) in self.vals.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {}", l, v)?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub store: Store,
    pub cmd: Cmd,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Final(Store),
    Uncaught(ExcName, Store),
    OutOfFuel(Config),
}

pub const DEFAULT_FUEL: u64 = 10_000;

// ----- expression evaluation -----

/// Total on well-typed expressions; never touches the store.
pub fn eval_exp(e: &Exp, s: &Store) -> Value {
    match e {
        Exp::IntConst(n) => Value::I(n.clone()),
        Exp::BoolConst(b) => Value::B(*b),
        Exp::Var(x) => Value::I(s.get(x)),
        Exp::Unary(p, e) =>

            p.eval(&eval_exp(e, s)).expect("well-typed unary application"),
        Exp::Binary(op, l, r) => {
            let lv = eval_exp(l, s);
            let rv = eval_exp(r, s);
            match op {
                BinOp::And | BinOp::Or => {
                    let (Value::B(a), Value::B(b)) = (lv, rv) else {
                        panic!("boolean operator on non-boolean operands");
                    };
                    Value::B(if *op == BinOp::And { a && b } else { a || b })
                }
                _ => {
                    let (Value::I(a), Value::I(b)) = (lv, rv) else {
                        panic!("integer operator on non-integer operands");
                    };
                    match op {
                        BinOp::Add => Value::I(a + b),
                        BinOp::Sub => Value::I(a - b),
                        BinOp::Mul => Value::I(a * b),
                        BinOp::Eq => Value::B(a == b),
                        BinOp::Neq => Value::B(a != b),
                        BinOp::Lt => Value::B(a < b),
                        BinOp::Gt => Value::B(a > b),
                        BinOp::Le => Value::B(a <= b),
                        BinOp::Ge => Value::B(a >= b),
                        _ => unreachable!(),
                    }
                }
            }
        }
    }
}

fn eval_bool(e: &Exp, s: &Store) -> bool {
    match eval_exp(e, s) {
        Value::B(b) => b,
        _ => panic!("guard evaluated to a non-boolean"),
    }
}

fn eval_int(e: &Exp, s: &Store) -> BigInt {
    match eval_exp(e, s) {
        Value::I(n) => n,
        _ => panic!("assignment source evaluated to a non-integer"),
    }
}

// ----- small-step interpreter -----

/// Is this configuration an end state (ordinary or exceptional)?
pub fn is_terminal(cmd: &Cmd) -> bool {
    matches!(cmd, Cmd::Skip | Cmd::Throw(_))
}

/// One reduction step; `None` exactly on terminal configurations.
pub fn step(cfg: Config) -> Option<Config> {
    if is_terminal(&cfg.cmd) {
        return None;
    }
    Some(step_nonterminal(cfg.cmd, cfg.store))
}

fn step_nonterminal(cmd: Cmd, mut store: Store) -> Config {
    match cmd {
        Cmd::Assign(x, e) => {
            let v = eval_int(&e, &store);
            store.set(&x, v);
            Config { store, cmd: Cmd::Skip }
        }
        Cmd::Seq(c1, c2) => match *c1 {
            Cmd::Skip => Config { store, cmd: *c2 },
            Cmd::Throw(e) => Config { store, cmd: Cmd::Throw(e) },
            other => {
                let next = step_nonterminal(other, store);
                Config { store: next.store, cmd: Cmd::Seq(Box::new(next.cmd), c2) }
            }
        },
        Cmd::If(b, c1, c2) => {
            let branch = if eval_bool(&b, &store) { c1 } else { c2 };
            Config { store, cmd: *branch }
        }
        Cmd::While(b, c) => {
            if eval_bool(&b, &store) {
                let again = Cmd::While(b, c.clone());
                Config { store, cmd: Cmd::Seq(c, Box::new(again)) }
            } else {
                Config { store, cmd: Cmd::Skip }
            }
        }
        Cmd::TryCatch(c1, e, c2) => match *c1 {
            Cmd::Skip => Config { store, cmd: Cmd::Skip },
            Cmd::Throw(e1) if e1 == e => Config { store, cmd: *c2 },
            Cmd::Throw(e1) => Config { store, cmd: Cmd::Throw(e1) },
            // Congruence inside the protected body, needed for progress.
            other => {
                let next = step_nonterminal(other, store);
                Config {
                    store: next.store,
                    cmd: Cmd::TryCatch(Box::new(next.cmd), e, c2),
                }
            }
        },
        Cmd::Skip | Cmd::Throw(_) => unreachable!("terminal configurations do not step"),
    }
}

/// Iterate `step` at most `fuel` times.
pub fn run(cmd: &Cmd, store: Store, fuel: u64) -> Outcome {
    let mut cfg = Config { store, cmd: cmd.clone() };
    for _ in 0..fuel {
        match cfg.cmd {
            Cmd::Skip => return Outcome::Final(cfg.store),
            Cmd::Throw(e) => return Outcome::Uncaught(e, cfg.store),
            other => cfg = step_nonterminal(other, cfg.store),
        }
    }
    match cfg.cmd {
        Cmd::Skip => Outcome::Final(cfg.store),
        Cmd::Throw(e) => Outcome::Uncaught(e, cfg.store),
        _ => Outcome::OutOfFuel(cfg),
    }
}

/// Like `run`, also returning every visited configuration in order.
pub fn trace(cmd: &Cmd, store: Store, fuel: u64) -> (Outcome, Vec<Config>) {
    let mut cfg = Config { store, cmd: cmd.clone() };
    let mut visited = vec![cfg.clone()];
    for _ in 0..fuel {
        match step(cfg.clone()) {
            None => break,
            Some(next) => {
                visited.push(next.clone());
                cfg = next;
            }
        }
    }
    let out = match cfg.cmd {
        Cmd::Skip => Outcome::Final(cfg.store),
        Cmd::Throw(e) => Outcome::Uncaught(e, cfg.store),
        _ => Outcome::OutOfFuel(cfg),
    };
    (out, visited)
}

// ----- typing -----

fn sort_of_objtype(t: &ObjType, env: &TypeEnv) -> Result<ExpType, String> {
    match env.resolve(t) {
        ObjType::Int => Ok(ExpType::Int),
        ObjType::Bool => Ok(ExpType::Bool),
        other => Err(format!("expression position has non-storable type {}", other)),
    }
}

impl Exp {
    pub fn exp_type(&self, env: &TypeEnv) -> Result<ExpType, String> {
        match self {
            Exp::IntConst(_) => Ok(ExpType::Int),
            Exp::BoolConst(_) => Ok(ExpType::Bool),
            Exp::Var(_) => Ok(ExpType::Int),
            Exp::Unary(p, e) => {
                let want = sort_of_objtype(&p.dom(), env)?;
                let got = e.exp_type(env)?;
                if want != got {
                    return Err(format!("operand of {} has the wrong sort", p));
                }
                sort_of_objtype(&p.cod(), env)
            }
            Exp::Binary(op, l, r) => {
                let lt = l.exp_type(env)?;
                let rt = r.exp_type(env)?;
                let (want, out) = if op.is_arith() {
                    (ExpType::Int, ExpType::Int)
                } else if op.is_cmp() {
                    (ExpType::Int, ExpType::Bool)
                } else {
                    (ExpType::Bool, ExpType::Bool)
                };
                if lt != want || rt != want {
                    return Err(format!("operands of `{}` must be {:?}-sorted", op.token(), want));
                }
                Ok(out)
            }
        }
    }
}

fn typecheck_cmd(cmd: &Cmd, env: &TypeEnv) -> Result<(), String> {
    match cmd {
        Cmd::Skip | Cmd::Throw(_) => Ok(()),
        Cmd::Assign(x, e) => {
            if e.exp_type(env)? != ExpType::Int {
                return Err(format!("assignment to {} needs an integer expression", x));
            }
            Ok(())
        }
        Cmd::Seq(a, b) => {
            typecheck_cmd(a, env)?;
            typecheck_cmd(b, env)
        }
        Cmd::If(b, c1, c2) => {
            if b.exp_type(env)? != ExpType::Bool {
                return Err("if guard must be boolean".into());
            }
            typecheck_cmd(c1, env)?;
            typecheck_cmd(c2, env)
        }
        Cmd::While(b, c) => {
            if b.exp_type(env)? != ExpType::Bool {
                return Err("while guard must be boolean".into());
            }
            typecheck_cmd(c, env)
        }
        Cmd::TryCatch(c1, _, c2) => {
            typecheck_cmd(c1, env)?;
            typecheck_cmd(c2, env)
        }
    }
}

// ----- parser -----

const KEYWORDS: &[&str] = &[
    "skip", "if", "then", "else", "while", "do", "throw", "try", "catch", "true", "false",
    "locations", "exceptions",
];

pub fn parse_program(src: &str) -> Result<Program, ImpError> {
    let toks = lex(src)?;
    let mut cur = Cursor::new(&toks);
    let mut env = TypeEnv::default();

    cur.expect_ident_kw("locations")?;
    while let TokKind::Ident(name) = &cur.peek().kind {
        if KEYWORDS.contains(&name.as_str()) {
            return Err(cur.err(format!("`{}` is a keyword", name)).into());
        }
        env.locations.push(LocId::new(cur.expect_any_ident()?));
    }
    if env.locations.is_empty() {
        return Err(cur.err("`locations` needs at least one name").into());
    }
    cur.expect_punct(";")?;
    if cur.eat_ident("exceptions") {
        while let TokKind::Ident(name) = &cur.peek().kind {
            if KEYWORDS.contains(&name.as_str()) {
                return Err(cur.err(format!("`{}` is a keyword", name)).into());
            }
            env.exceptions.push(ExcName::new(cur.expect_any_ident()?));
        }
        if env.exceptions.is_empty() {
            return Err(cur.err("`exceptions` needs at least one name").into());
        }
        cur.expect_punct(";")?;
    }

    let cmd = parse_seq(&mut cur, &env)?;
    if !cur.at_eof() {
        return Err(cur.err(format!("trailing input: {}", describe(&cur.peek().kind))).into());
    }
    typecheck_cmd(&cmd, &env).map_err(ImpError::Type)?;
    Ok(Program { env, cmd })
}

/// Parse one expression against an environment (mostly for tests and
/// diagnostics); the sort comes out of `exp_type`.
pub fn parse_exp(src: &str, env: &TypeEnv) -> Result<Exp, ImpError> {
    let toks = lex(src)?;
    let mut cur = Cursor::new(&toks);
    let e = parse_exp_at(&mut cur, env)?;
    if !cur.at_eof() {
        return Err(cur.err(format!("trailing input: {}", describe(&cur.peek().kind))).into());
    }
    e.exp_type(env).map_err(ImpError::Type)?;
    Ok(e)
}

fn parse_seq(cur: &mut Cursor, env: &TypeEnv) -> Result<Cmd, ParseError> {
    let first = parse_cmd_atom(cur, env)?;
    if cur.eat_punct(";") {
        let rest = parse_seq(cur, env)?;
        Ok(Cmd::Seq(Box::new(first), Box::new(rest)))
    } else {
        Ok(first)
    }
}

fn parse_cmd_atom(cur: &mut Cursor, env: &TypeEnv) -> Result<Cmd, ParseError> {
    if cur.eat_punct("{") {
        let inner = parse_seq(cur, env)?;
        cur.expect_punct("}")?;
        return Ok(inner);
    }
    let name = cur.expect_any_ident()?;
    match name.as_str() {
        "skip" => Ok(Cmd::Skip),
        "if" => {
            let b = parse_exp_at(cur, env)?;
            cur.expect_ident_kw("then")?;
            let c1 = parse_cmd_atom(cur, env)?;
            cur.expect_ident_kw("else")?;
            let c2 = parse_cmd_atom(cur, env)?;
            Ok(Cmd::If(b, Box::new(c1), Box::new(c2)))
        }
        "while" => {
            let b = parse_exp_at(cur, env)?;
            cur.expect_ident_kw("do")?;
            let c = parse_cmd_atom(cur, env)?;
            Ok(Cmd::While(b, Box::new(c)))
        }
        "throw" => {
            let e = cur.expect_any_ident()?;
            let exc = ExcName::new(&e);
            if !env.has_exception(&exc) {
                return Err(cur.err(format!("unknown exception `{}`", e)));
            }
            Ok(Cmd::Throw(exc))
        }
        "try" => {
            let c1 = parse_cmd_atom(cur, env)?;
            cur.expect_ident_kw("catch")?;
            let e = cur.expect_any_ident()?;
            let exc = ExcName::new(&e);
            if !env.has_exception(&exc) {
                return Err(cur.err(format!("unknown exception `{}`", e)));
            }
            cur.expect_punct("=>")?;
            let c2 = parse_cmd_atom(cur, env)?;
            Ok(Cmd::TryCatch(Box::new(c1), exc, Box::new(c2)))
        }
        other => {
            let loc = LocId::new(other);
            if !env.has_location(&loc) {
                return Err(cur.err(format!("unknown command or location `{}`", other)));
            }
            cur.expect_punct(":=")?;
            let e = parse_exp_at(cur, env)?;
            Ok(Cmd::Assign(loc, e))
        }
    }
}

fn parse_exp_at(cur: &mut Cursor, env: &TypeEnv) -> Result<Exp, ParseError> {
    parse_binary(cur, env, 1)
}

fn parse_binary(cur: &mut Cursor, env: &TypeEnv, min_prec: u8) -> Result<Exp, ParseError> {
    let mut left = if min_prec >= 5 {
        parse_exp_atom(cur, env)?
    } else {
        parse_binary(cur, env, min_prec + 1)?
    };
    loop {
        let op = match &cur.peek().kind {
            TokKind::Punct(p) => match *p {
                "||" => BinOp::Or,
                "&&" => BinOp::And,
                "=" => BinOp::Eq,
                "<>" => BinOp::Neq,
                "<" => BinOp::Lt,
                ">" => BinOp::Gt,
                "<=" => BinOp::Le,
                ">=" => BinOp::Ge,
                "+" => BinOp::Add,
                "-" => BinOp::Sub,
                "*" => BinOp::Mul,
                _ => break,
            },
            _ => break,
        };
        if op.prec() != min_prec {
            break;
        }
        cur.next();
        let right = if min_prec >= 5 {
            parse_exp_atom(cur, env)?
        } else {
            parse_binary(cur, env, min_prec + 1)?
        };
        left = Exp::Binary(op, Box::new(left), Box::new(right));
        if op.is_cmp() {
            break; // comparisons do not chain
        }
    }
    Ok(left)
}

fn parse_exp_atom(cur: &mut Cursor, env: &TypeEnv) -> Result<Exp, ParseError> {
    if cur.eat_punct("(") {
        let e = parse_exp_at(cur, env)?;
        cur.expect_punct(")")?;
        return Ok(e);
    }
    if cur.eat_punct("-") {
        let n = cur.expect_int()?;
        return Ok(Exp::IntConst(-n));
    }
    match &cur.peek().kind {
        TokKind::Int(_) => Ok(Exp::IntConst(cur.expect_int()?)),
        TokKind::Ident(s) if s == "true" => {
            cur.next();
            Ok(Exp::BoolConst(true))
        }
        TokKind::Ident(s) if s == "false" => {
            cur.next();
            Ok(Exp::BoolConst(false))
        }
        TokKind::Ident(s) => {
            let loc = LocId::new(s.as_str());
            if !env.has_location(&loc) {
                return Err(cur.err(format!("unknown location `{}`", s)));
            }
            cur.next();
            Ok(Exp::Var(loc))
        }
        other => Err(cur.err(format!("expected an expression, found {}", describe(other)))),
    }
}

// ----- pretty printing -----

impl fmt::Display for Exp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_exp(self, f, 0)
    }
}

fn fmt_exp(e: &Exp, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
    match e {
        Exp::IntConst(n) => write!(f, "{}", n),
        Exp::BoolConst(b) => write!(f, "{}", b),
        Exp::Var(x) => write!(f, "{}", x),
        Exp::Unary(p, e) => {
            write!(f, "{}(", p)?;
            fmt_exp(e, f, 0)?;
            f.write_str(")")
        }
        Exp::Binary(op, l, r) => {
            let p = op.prec();
            if p < min_prec {
                f.write_str("(")?;
            }
            fmt_exp(l, f, p)?;
            write!(f, " {} ", op.token())?;
            fmt_exp(r, f, p + 1)?;
            if p < min_prec {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Cmd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cmd::Skip => f.write_str("skip"),
            Cmd::Assign(x, e) => write!(f, "{} := {}", x, e),
            Cmd::Seq(a, b) => write!(f, "{} ; {}", fmt_atom(a), b),
            Cmd::If(b, c1, c2) => {
                write!(f, "if {} then {} else {}", b, fmt_atom(c1), fmt_atom(c2))
            }
            Cmd::While(b, c) => write!(f, "while {} do {}", b, fmt_atom(c)),
            Cmd::Throw(e) => write!(f, "throw {}", e),
            Cmd::TryCatch(c1, e, c2) => {
                write!(f, "try {} catch {} => {}", fmt_atom(c1), e, fmt_atom(c2))
            }
        }
    }
}

// Sequences in atom position need braces to reparse the same way.
fn fmt_atom(c: &Cmd) -> String {
    match c {
        Cmd::Seq(..) => format!("{{ {} }}", c),
        _ => c.to_string(),
    }
}
