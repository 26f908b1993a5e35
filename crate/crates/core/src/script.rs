//! Proof scripts: the `.dlp` format.
//!
//! A script declares its vocabulary (locations, exceptions, integer
//! parameters, schematic term variables), optionally names reusable term
//! definitions, and then states lemmas with step-by-step proofs. Scripts
//! are self-contained: lemmas may cite earlier lemmas from the same script
//! by name, but nothing outside it.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::ToPrimitive;

use crate::engine::{check_lemma, LemmaOutcome, Side, Step};
use crate::error::ParseError;
use crate::rewrite::{Binding, Bindings};
use crate::rules::{self, Equation, Lemma, RuleId, RuleRole};
use crate::syntax::{
    describe, is_reserved_name, lex, parse_equation_at, parse_kind_at, parse_term_at,
    parse_type_at, Cursor, ScriptContext, TokKind,
};
use crate::term::TermVar;
use crate::types::{Decoration, ExcName, LocId};

/// A lemma as written in a script: statement plus proof steps.
#[derive(Debug, Clone)]
pub struct ScriptLemma {
    pub name: String,
    pub eq: Equation,
    pub steps: Vec<Step>,
}

/// A parsed script: the declaration context and the lemmas in order.
#[derive(Debug, Clone)]
pub struct Script {
    pub ctx: ScriptContext,
    pub defs: Vec<(String, crate::term::Term)>,
    pub lemmas: Vec<ScriptLemma>,
}

/// Result of checking every lemma of a script in order.
#[derive(Debug)]
pub struct ScriptOutcome {
    pub lemmas: Vec<LemmaOutcome>,
    /// Accepted lemmas, available for citation by later scripts or callers.
    pub library: BTreeMap<String, Lemma>,
    pub all_accepted: bool,
}

pub fn parse_script(src: &str) -> Result<Script, ParseError> {
    let toks = lex(src)?;
    let mut cur = Cursor::new(&toks);
    let mut ctx = ScriptContext::default();
    let mut defs = Vec::new();
    let mut lemmas: Vec<ScriptLemma> = Vec::new();
    let mut names_used: BTreeSet<String> = BTreeSet::new();
    let mut saw_body = false; // a def or lemma has been parsed

    while !cur.at_eof() {
        let kw = cur.expect_any_ident()?;
        match kw.as_str() {
            "locations" | "exceptions" | "ints" => {
                if saw_body {
                    return Err(cur.err(format!(
                        "`{}` must appear before the first def or lemma",
                        kw
                    )));
                }
                let mut names = Vec::new();
                while let TokKind::Ident(_) = &cur.peek().kind {
                    names.push(cur.expect_any_ident()?);
                }
                if names.is_empty() {
                    return Err(cur.err(format!("`{}` needs at least one name", kw)));
                }
                cur.expect_punct(";")?;
                for n in names {
                    claim_name(&mut names_used, &n, &cur)?;
                    match kw.as_str() {
                        "locations" => ctx.env.locations.push(LocId::new(&n)),
                        "exceptions" => ctx.env.exceptions.push(ExcName::new(&n)),
                        _ => ctx.int_params.push(n),
                    }
                }
            }
            "terms" => {
                if saw_body {
                    return Err(cur.err("`terms` must appear before the first def or lemma"));
                }
                let mut names = Vec::new();
                while let TokKind::Ident(_) = &cur.peek().kind {
                    names.push(cur.expect_any_ident()?);
                }
                if names.is_empty() {
                    return Err(cur.err("`terms` needs at least one name"));
                }
                cur.expect_punct(":")?;
                let dom = parse_type_at(&mut cur, &ctx.env)?;
                cur.expect_punct("->")?;
                let cod = parse_type_at(&mut cur, &ctx.env)?;
                cur.expect_punct("@")?;
                cur.expect_punct("(")?;
                let s = small_degree(&mut cur)?;
                cur.expect_punct(",")?;
                let e = small_degree(&mut cur)?;
                cur.expect_punct(")")?;
                cur.expect_punct(";")?;
                for n in names {
                    claim_name(&mut names_used, &n, &cur)?;
                    ctx.vars.insert(
                        n.clone(),
                        TermVar {
                            name: n,
                            dom: dom.clone(),
                            cod: cod.clone(),
                            deco: Decoration::new(s, e),
                        },
                    );
                }
            }
            "def" => {
                let name = cur.expect_any_ident()?;
                claim_name(&mut names_used, &name, &cur)?;
                cur.expect_punct(":=")?;
                let body = parse_term_at(&mut cur, &ctx)?;
                cur.expect_punct(";")?;
                ctx.defs.insert(name.clone(), body.clone());
                defs.push((name, body));
                saw_body = true;
            }
            "lemma" => {
                let name = cur.expect_any_ident()?;
                if RuleId::parse(&name).is_some() {
                    return Err(cur.err(format!(
                        "lemma name `{}` collides with a built-in rule",
                        name
                    )));
                }
                if lemmas.iter().any(|l| l.name == name) {
                    return Err(cur.err(format!("duplicate lemma name `{}`", name)));
                }
                cur.expect_punct(":")?;
                let eq = parse_equation_at(&mut cur, &ctx)?;
                cur.expect_ident_kw("proof")?;
                let mut steps = Vec::new();
                while !cur.eat_ident("qed") {
                    if cur.at_eof() {
                        return Err(cur.err("proof not closed with `qed`"));
                    }
                    steps.push(parse_step(&mut cur, &ctx)?);
                }
                lemmas.push(ScriptLemma { name, eq, steps });
                saw_body = true;
            }
            other => {
                return Err(cur.err(format!(
                    "expected a declaration, def, or lemma, found `{}`",
                    other
                )));
            }
        }
    }
    Ok(Script { ctx, defs, lemmas })
}

fn claim_name(used: &mut BTreeSet<String>, n: &str, cur: &Cursor) -> Result<(), ParseError> {
    if is_reserved_name(n) {
        return Err(cur.err(format!("`{}` is reserved by the term grammar", n)));
    }
    if !used.insert(n.to_string()) {
        return Err(cur.err(format!("`{}` is already declared", n)));
    }
    Ok(())
}

fn small_degree(cur: &mut Cursor) -> Result<u8, ParseError> {
    let n = cur.expect_int()?;
    match n.to_u8() {
        Some(d) if d <= 2 => Ok(d),
        _ => Err(cur.err("decoration degrees range over 0, 1, 2")),
    }
}

fn parse_step(cur: &mut Cursor, ctx: &ScriptContext) -> Result<Step, ParseError> {
    let kw = cur.expect_any_ident()?;
    let step = match kw.as_str() {
        "rewrite" => {
            let backward = cur.eat_punct("<-");
            let name = cur.expect_any_ident()?;
            let mut bindings: Bindings = BTreeMap::new();
            if cur.eat_ident("with") {
                loop {
                    let k = cur.expect_any_ident()?;
                    cur.expect_punct(":=")?;
                    let v = parse_binding_value(cur, ctx)?;
                    if bindings.insert(k.clone(), v).is_some() {
                        return Err(cur.err(format!("binding `{}` given twice", k)));
                    }
                    if !cur.eat_punct(",") {
                        break;
                    }
                }
            }
            cur.expect_ident_kw("at")?;
            let side = parse_side(cur)?;
            let mut occurrence = None;
            let mut path = None;
            if cur.eat_punct("#") {
                let n = cur.expect_int()?;
                match n.to_usize() {
                    Some(k) if k >= 1 => occurrence = Some(k),
                    _ => return Err(cur.err("occurrence selectors are 1-based")),
                }
            } else if cur.at_punct("[") {
                path = Some(parse_path(cur)?);
            }
            Step::Rewrite { name, backward, bindings, side, occurrence, path }
        }
        "conv" => Step::Conv { target: parse_kind_at(cur)? },
        "unfold" => {
            let name = cur.expect_any_ident()?;
            if name != "pbl" && !ctx.defs.contains_key(&name) {
                return Err(cur.err(format!("`{}` is not a definition or `pbl`", name)));
            }
            cur.expect_ident_kw("at")?;
            let side = parse_side(cur)?;
            let path = if cur.at_punct("[") { Some(parse_path(cur)?) } else { None };
            Step::Unfold { name, side, path }
        }
        "split" => {
            let name = cur.expect_any_ident()?;
            match RuleId::parse(&name) {
                Some(r) if r.role() == RuleRole::Split => Step::Split { rule: r },
                _ => {
                    return Err(cur.err(format!(
                        "`{}` is not a split rule (eq2, eq3, eeq2, eeq3, pair_split)",
                        name
                    )));
                }
            }
        }
        "refl" => Step::Refl,
        other => {
            return Err(cur.err(format!(
                "expected rewrite, conv, unfold, split, or refl, found `{}`",
                other
            )));
        }
    };
    cur.expect_punct(";")?;
    Ok(step)
}

fn parse_side(cur: &mut Cursor) -> Result<Side, ParseError> {
    if cur.eat_ident("lhs") {
        Ok(Side::Lhs)
    } else if cur.eat_ident("rhs") {
        Ok(Side::Rhs)
    } else {
        Err(cur.err(format!("expected `lhs` or `rhs`, found {}", describe(&cur.peek().kind))))
    }
}

fn parse_path(cur: &mut Cursor) -> Result<Vec<usize>, ParseError> {
    cur.expect_punct("[")?;
    let mut path = Vec::new();
    if !cur.at_punct("]") {
        loop {
            let n = cur.expect_int()?;
            match n.to_usize() {
                Some(k) if k <= 1 => path.push(k),
                _ => return Err(cur.err("path components are 0 or 1")),
            }
            if !cur.eat_punct(",") {
                break;
            }
        }
    }
    cur.expect_punct("]")?;
    Ok(path)
}

/// Binding values are tried in a fixed order: integer literal, boolean,
/// declared location, declared exception, and finally a term.
fn parse_binding_value(cur: &mut Cursor, ctx: &ScriptContext) -> Result<Binding, ParseError> {
    if cur.at_punct("-") {
        cur.next();
        let n = cur.expect_int()?;
        return Ok(Binding::Int(-n));
    }
    if let TokKind::Int(_) = &cur.peek().kind {
        return Ok(Binding::Int(cur.expect_int()?));
    }
    if let TokKind::Ident(s) = &cur.peek().kind {
        match s.as_str() {
            "true" => {
                cur.next();
                return Ok(Binding::Bool(true));
            }
            "false" => {
                cur.next();
                return Ok(Binding::Bool(false));
            }
            other => {
                let loc = LocId::new(other);
                if ctx.env.has_location(&loc) {
                    cur.next();
                    return Ok(Binding::Loc(loc));
                }
                let exc = ExcName::new(other);
                if ctx.env.has_exception(&exc) {
                    cur.next();
                    return Ok(Binding::Exc(exc));
                }
            }
        }
    }
    Ok(Binding::Term(parse_term_at(cur, ctx)?))
}

/// Check every lemma in script order. Accepted lemmas join the library and
/// are citable by the lemmas after them; rejected ones are skipped but the
/// remaining lemmas are still checked.
pub fn check_script(script: &Script) -> ScriptOutcome {
    let mut library: BTreeMap<String, Lemma> = BTreeMap::new();
    let mut outcomes = Vec::new();
    for sl in &script.lemmas {
        let (term_params, int_params) = statement_params(&sl.eq, &script.ctx);
        let (outcome, lemma) = check_lemma(
            &script.ctx.env,
            &library,
            &sl.name,
            &sl.eq,
            &sl.steps,
            term_params,
            int_params,
        );
        if let Some(l) = lemma {
            library.insert(l.name.clone(), l);
        }
        outcomes.push(outcome);
    }
    let all_accepted = outcomes.iter().all(|o| o.accepted);
    ScriptOutcome { lemmas: outcomes, library, all_accepted }
}

/// The parameters of a lemma are the declared schematic variables and
/// integer parameters that actually occur in its statement.
fn statement_params(eq: &Equation, ctx: &ScriptContext) -> (Vec<TermVar>, Vec<String>) {
    let mut names = Vec::new();
    eq.lhs.var_names(&mut names);
    eq.rhs.var_names(&mut names);
    names.sort();
    names.dedup();
    let term_params =
        names.iter().filter_map(|n| ctx.vars.get(n)).cloned().collect::<Vec<_>>();
    let mut syms = BTreeSet::new();
    rules::collect_syms(&eq.lhs, &mut syms);
    rules::collect_syms(&eq.rhs, &mut syms);
    let int_params = syms
        .into_iter()
        .filter(|s| ctx.int_params.iter().any(|p| p == s))
        .collect::<Vec<_>>();
    (term_params, int_params)
}

/// Convenience: parse and check in one call.
pub fn run_script(src: &str) -> Result<ScriptOutcome, ParseError> {
    let script = parse_script(src)?;
    Ok(check_script(&script))
}
