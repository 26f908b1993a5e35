//! Translation of programs into decorated terms.
//!
//! Expressions become `unit -> int` or `unit -> bool` terms that at worst
//! read the store; commands become `unit -> unit` terms that may write it
//! and raise exceptions. The translation is purely structural, so proofs
//! about translated programs proceed by the same rewrites as hand-written
//! terms.

use crate::imp::{BinOp, Cmd, Exp};
use crate::purefn::{ArithOp, BoolOp, CmpOp, PureFn};
use crate::term::Term;
use crate::types::ObjType;

pub fn binop_purefn(op: BinOp) -> PureFn {
    match op {
        BinOp::Add => PureFn::Arith(ArithOp::Add),
        BinOp::Sub => PureFn::Arith(ArithOp::Sub),
        BinOp::Mul => PureFn::Arith(ArithOp::Mul),
        BinOp::Eq => PureFn::Cmp(CmpOp::Eq),
        BinOp::Neq => PureFn::Cmp(CmpOp::Neq),
        BinOp::Lt => PureFn::Cmp(CmpOp::Lt),
        BinOp::Gt => PureFn::Cmp(CmpOp::Gt),
        BinOp::Le => PureFn::Cmp(CmpOp::Le),
        BinOp::Ge => PureFn::Cmp(CmpOp::Ge),
        BinOp::And => PureFn::Bool(BoolOp::And),
        BinOp::Or => PureFn::Bool(BoolOp::Or),
    }
}

/// Expressions denote store readers: constants are pure, variables are
/// lookups, operators act pointwise on the pair of sub-results.
pub fn d_exp(e: &Exp) -> Term {
    match e {
        Exp::IntConst(n) => Term::const_int(n.clone()),
        Exp::BoolConst(b) => Term::const_bool(*b),
        Exp::Var(x) => Term::Lookup(x.clone()),
        Exp::Unary(p, inner) => Term::comp(Term::pure(p.clone()), d_exp(inner)),
        Exp::Binary(op, l, r) => {
            Term::comp(Term::pure(binop_purefn(*op)), Term::pair(d_exp(l), d_exp(r)))
        }
    }
}

pub fn d_cmd(c: &Cmd) -> Term {
    match c {
        Cmd::Skip => Term::id(ObjType::Unit),
        Cmd::Assign(x, e) => Term::comp(Term::Update(x.clone()), d_exp(e)),
        Cmd::Seq(a, b) => Term::comp(d_cmd(b), d_cmd(a)),
        Cmd::If(b, c1, c2) => Term::comp(
            Term::copair(d_cmd(c1), d_cmd(c2)),
            Term::comp(Term::Pbl, d_exp(b)),
        ),
        Cmd::While(b, c) => {
            let cond = Term::comp(Term::Pbl, d_exp(b));
            let body = d_cmd(c);
            let looped = Term::comp(Term::lpi(cond.clone(), body.clone()), body);
            Term::comp(Term::copair(looped, Term::id(ObjType::Unit)), cond)
        }
        Cmd::Throw(e) => Term::throw(ObjType::Unit, e.clone()),
        Cmd::TryCatch(c1, e, c2) => {
            Term::try_catch(d_cmd(c1), e.clone(), d_cmd(c2), ObjType::Unit)
        }
    }
}

/// Canonical textual form with a `{state,exc}` decoration on every node.
pub fn render_decorated(t: &Term) -> String {
    t.spine().iter().map(factor_decorated).collect::<Vec<_>>().join(" o ")
}

fn factor_decorated(t: &Term) -> String {
    let d = t.decoration();
    let core = match t {
        Term::Pair(a, b) => format!("pair({}, {})", render_decorated(a), render_decorated(b)),
        Term::Copair(a, b) => {
            format!("copair({}, {})", render_decorated(a), render_decorated(b))
        }
        Term::Downcast(a) => format!("downcast({})", render_decorated(a)),
        Term::Lpi(c, f) => format!("lpi({}, {})", render_decorated(c), render_decorated(f)),
        Term::Def(name, _) => name.clone(),
        leaf => leaf.to_string(),
    };
    format!("{}{{{},{}}}", core, d.state, d.exc)
}
