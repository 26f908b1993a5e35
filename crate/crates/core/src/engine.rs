//! The proof checker: applies script steps to a stack of goal equations.
//!
//! Goals live on a stack; the current goal is the top. A rewrite transforms
//! one side of the current goal, a conversion changes its kind, a split
//! replaces it with subgoals (pushed so the first listed is processed next),
//! and refl closes it when the sides coincide syntactically modulo type
//! resolution. A lemma is accepted when every step checks and no goal
//! remains.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::StepError;
use crate::purefn::PureFn;
use crate::rewrite::{self, Bindings, Candidate, Direction};
use crate::rules::{self, Equation, Lemma, RuleId, RuleRole};
use crate::term::{Term, TermVar};
use crate::types::{EqKind, Strength, TypeEnv};

/// Which side of the goal a step targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lhs,
    Rhs,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Lhs => "lhs",
            Side::Rhs => "rhs",
        })
    }
}

/// One proof step, as parsed from a script.
#[derive(Debug, Clone)]
pub enum Step {
    Rewrite {
        name: String,
        backward: bool,
        bindings: Bindings,
        side: Side,
        occurrence: Option<usize>,
        path: Option<Vec<usize>>,
    },
    Conv {
        target: EqKind,
    },
    Unfold {
        name: String,
        side: Side,
        path: Option<Vec<usize>>,
    },
    Split {
        rule: RuleId,
    },
    Refl,
}

/// One transcript row per checked step. Replays byte-identically.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct TranscriptRow {
    pub lemma: String,
    pub step: usize,
    pub rule: String,
    pub goal_before: String,
    pub goal_after: String,
}

/// Outcome of checking one lemma's proof.
#[derive(Debug, Clone)]
pub struct LemmaOutcome {
    pub name: String,
    pub accepted: bool,
    /// 1-based failing step and its error; step 0 means the statement itself
    /// was rejected, steps past the last mean the proof left goals open.
    pub error: Option<(usize, StepError)>,
    pub transcript: Vec<TranscriptRow>,
}

/// Check one lemma against the current library. On success the returned
/// lemma is ready to be added to the library.
pub fn check_lemma(
    env: &TypeEnv,
    library: &BTreeMap<String, Lemma>,
    name: &str,
    statement: &Equation,
    steps: &[Step],
    term_params: Vec<TermVar>,
    int_params: Vec<String>,
) -> (LemmaOutcome, Option<Lemma>) {
    let mut transcript = Vec::new();
    if let Err(e) = statement.check(env) {
        return (
            LemmaOutcome {
                name: name.into(),
                accepted: false,
                error: Some((0, e.into())),
                transcript,
            },
            None,
        );
    }
    let mut goals = vec![statement.clone()];
    for (i, step) in steps.iter().enumerate() {
        let before = match goals.last() {
            Some(g) => g.to_string(),
            None => "no goals".to_string(),
        };
        match apply_step(env, library, &mut goals, step) {
            Ok((rule, after)) => transcript.push(TranscriptRow {
                lemma: name.into(),
                step: i + 1,
                rule,
                goal_before: before,
                goal_after: after,
            }),
            Err(e) => {
                return (
                    LemmaOutcome {
                        name: name.into(),
                        accepted: false,
                        error: Some((i + 1, e)),
                        transcript,
                    },
                    None,
                );
            }
        }
    }
    if !goals.is_empty() {
        let open = goals
            .iter()
            .rev()
            .map(|g| g.to_string())
            .collect::<Vec<_>>()
            .join(" ; ");
        return (
            LemmaOutcome {
                name: name.into(),
                accepted: false,
                error: Some((steps.len() + 1, StepError::NotClosed(open))),
                transcript,
            },
            None,
        );
    }
    let lemma = Lemma {
        name: name.into(),
        eq: statement.clone(),
        term_params,
        int_params,
    };
    (
        LemmaOutcome { name: name.into(), accepted: true, error: None, transcript },
        Some(lemma),
    )
}

/// Apply one step to the goal stack, returning the rendered rule citation
/// and the resulting goal (or subgoals, or "closed").
pub fn apply_step(
    env: &TypeEnv,
    library: &BTreeMap<String, Lemma>,
    goals: &mut Vec<Equation>,
    step: &Step,
) -> Result<(String, String), StepError> {
    if goals.is_empty() {
        return Err(StepError::NoOpenGoal);
    }
    match step {
        Step::Rewrite { name, backward, bindings, side, occurrence, path } => {
            apply_rewrite(env, library, goals, name, *backward, bindings, *side, *occurrence, path.as_deref())
        }
        Step::Conv { target } => apply_conv(goals, *target),
        Step::Unfold { name, side, path } => apply_unfold(env, goals, name, *side, path.as_deref()),
        Step::Split { rule } => apply_split(env, goals, *rule),
        Step::Refl => {
            let goal = goals.last().unwrap();
            if goal.lhs.eq_resolved(&goal.rhs, env) {
                goals.pop();
                Ok(("refl".to_string(), "closed".to_string()))
            } else {
                Err(StepError::ReflFailed(format!(
                    "sides differ: {} versus {}",
                    goal.lhs, goal.rhs
                )))
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn apply_rewrite(
    env: &TypeEnv,
    library: &BTreeMap<String, Lemma>,
    goals: &mut Vec<Equation>,
    name: &str,
    backward: bool,
    bindings: &Bindings,
    side: Side,
    occurrence: Option<usize>,
    path: Option<&[usize]>,
) -> Result<(String, String), StepError> {
    let goal = goals.last().unwrap().clone();
    let side_term = match side {
        Side::Lhs => &goal.lhs,
        Side::Rhs => &goal.rhs,
    };
    let dir = if backward { Direction::Backward } else { Direction::Forward };
    let (eq_kind, cands) = match RuleId::parse(name) {
        Some(rule) => (rule.eq_kind(), rules::rule_candidates(rule, dir, bindings, side_term, env)?),
        None => match library.get(name) {
            Some(lemma) => (
                lemma.eq.kind,
                rules::lemma_candidates(lemma, dir, bindings, side_term, env)?,
            ),
            None => return Err(StepError::UnknownRule(name.to_string())),
        },
    };
    if !eq_kind.geq(goal.kind) {
        return Err(StepError::KindTooWeak {
            equation: eq_kind.to_string(),
            goal: goal.kind.to_string(),
        });
    }
    let filtered: Vec<&Candidate> = match path {
        Some(p) => {
            let mut kept = Vec::new();
            for c in &cands {
                let holder = side_term.subterm_at(&c.site_path)?;
                if c.matches_path(p, holder.spine().len()) {
                    kept.push(c);
                }
            }
            if kept.is_empty() {
                return Err(StepError::RewriteNoMatch(format!(
                    "rule {} has no structural match at path {:?} on the {} side",
                    name, p, side
                )));
            }
            kept
        }
        None => cands.iter().collect(),
    };
    let frames_of = |c: &Candidate| -> Result<(), StepError> {
        let holder = side_term.subterm_at(&c.site_path)?;
        rewrite::check_frames(eq_kind, &c.site_path, &holder.spine(), c.start, c.len)
    };
    let chosen: &Candidate = if let Some(k) = occurrence {
        let c = filtered.get(k.wrapping_sub(1)).copied().ok_or_else(|| {
            StepError::RewriteNoMatch(format!(
                "occurrence #{} requested but rule {} has {} structural match(es) on the {} side",
                k,
                name,
                filtered.len(),
                side
            ))
        })?;
        if let Err(m) = &c.side_cond {
            return Err(StepError::SideConditionViolated(m.clone()));
        }
        frames_of(c)?;
        c
    } else {
        let mut first_err: Option<StepError> = None;
        let mut found: Option<&Candidate> = None;
        for c in &filtered {
            if let Err(m) = &c.side_cond {
                first_err.get_or_insert(StepError::SideConditionViolated(m.clone()));
                continue;
            }
            if let Err(e) = frames_of(c) {
                first_err.get_or_insert(e);
                continue;
            }
            found = Some(c);
            break;
        }
        match found {
            Some(c) => c,
            None => {
                return Err(first_err.unwrap_or_else(|| {
                    StepError::RewriteNoMatch(format!(
                        "rule {} has no structural match on the {} side",
                        name, side
                    ))
                }));
            }
        }
    };
    let new_side = rewrite::apply(side_term, chosen, env)?;
    new_side.typecheck(env)?;
    let goal_mut = goals.last_mut().unwrap();
    match side {
        Side::Lhs => goal_mut.lhs = new_side,
        Side::Rhs => goal_mut.rhs = new_side,
    }
    let mut rule_str = String::from("rewrite ");
    if backward {
        rule_str.push_str("<- ");
    }
    rule_str.push_str(name);
    if !chosen.binds_desc.is_empty() {
        rule_str.push_str(" with ");
        rule_str.push_str(&chosen.binds_desc);
    }
    rule_str.push_str(&format!(" at {}", side));
    if let Some(p) = path {
        rule_str.push_str(&format!(" {:?}", p));
    }
    if let Some(k) = occurrence {
        rule_str.push_str(&format!(" #{}", k));
    }
    if let Some(n) = &chosen.note {
        rule_str.push_str(&format!(" [{}]", n));
    }
    Ok((rule_str, goals.last().unwrap().to_string()))
}

fn apply_conv(goals: &mut Vec<Equation>, target: EqKind) -> Result<(String, String), StepError> {
    let goal = goals.last_mut().unwrap();
    let mut via: Vec<&str> = Vec::new();
    if target.state < goal.kind.state {
        let dl = goal.lhs.decoration().state;
        let dr = goal.rhs.decoration().state;
        if dl > 1 || dr > 1 {
            return Err(StepError::DecorationBoundViolated(format!(
                "conv to {} weakens the state dimension, which needs both sides at state degree <= 1; degrees are {} and {}",
                target, dl, dr
            )));
        }
        via.push("eq1");
    }
    if target.exc < goal.kind.exc {
        let dl = goal.lhs.decoration().exc;
        let dr = goal.rhs.decoration().exc;
        if dl > 1 || dr > 1 {
            return Err(StepError::DecorationBoundViolated(format!(
                "conv to {} weakens the exception dimension, which needs both sides at exception degree <= 1; degrees are {} and {}",
                target, dl, dr
            )));
        }
        via.push("eeq1");
    }
    goal.kind = target;
    let label = match via.len() {
        2 => " via ww_to_ss".to_string(),
        1 => format!(" via {}", via[0]),
        _ => String::new(),
    };
    Ok((format!("conv {}{}", target, label), goal.to_string()))
}

fn apply_unfold(
    env: &TypeEnv,
    goals: &mut Vec<Equation>,
    name: &str,
    side: Side,
    path: Option<&[usize]>,
) -> Result<(String, String), StepError> {
    let goal = goals.last().unwrap().clone();
    let side_term = match side {
        Side::Lhs => &goal.lhs,
        Side::Rhs => &goal.rhs,
    };
    let new_side = match path {
        None => {
            if name == "pbl" {
                side_term.unfold_pbl()
            } else {
                side_term.unfold_def(name)
            }
        }
        Some(p) => {
            let sub = side_term.subterm_at(p)?;
            let replacement = match (name, sub) {
                ("pbl", Term::Pbl) => Term::pure(PureFn::BoolToTwo),
                (_, Term::Def(dn, body)) if dn == name => (**body).clone(),
                _ => {
                    return Err(StepError::RewriteNoMatch(format!(
                        "the subterm at path {:?} is `{}`, not an occurrence of {}",
                        p, sub, name
                    )));
                }
            };
            side_term.replace_at(p, replacement)?
        }
    };
    if new_side == *side_term {
        return Err(StepError::RewriteNoMatch(format!(
            "no occurrence of {} on the {} side",
            name, side
        )));
    }
    new_side.typecheck(env)?;
    let goal_mut = goals.last_mut().unwrap();
    match side {
        Side::Lhs => goal_mut.lhs = new_side,
        Side::Rhs => goal_mut.rhs = new_side,
    }
    let mut rule_str = format!("unfold {} at {}", name, side);
    if let Some(p) = path {
        rule_str.push_str(&format!(" {:?}", p));
    }
    Ok((rule_str, goals.last().unwrap().to_string()))
}

fn apply_split(
    env: &TypeEnv,
    goals: &mut Vec<Equation>,
    rule: RuleId,
) -> Result<(String, String), StepError> {
    if rule.role() != RuleRole::Split {
        return Err(StepError::SplitNotApplicable(
            rule.name().to_string(),
            "not a split rule".to_string(),
        ));
    }
    let goal = goals.last().unwrap().clone();
    let (dom, cod) = goal.lhs.typecheck(env)?;
    let na = |reason: String| StepError::SplitNotApplicable(rule.name().to_string(), reason);
    let subgoals: Vec<Equation> = match rule {
        RuleId::Eq2 => {
            if goal.kind.state != Strength::Strong {
                return Err(na("the goal is already state-weak".into()));
            }
            let fgt = Term::forget(cod.clone());
            vec![
                Equation::new(
                    Term::comp(fgt.clone(), goal.lhs.clone()),
                    Term::comp(fgt, goal.rhs.clone()),
                    EqKind { state: Strength::Strong, exc: goal.kind.exc },
                ),
                Equation::new(
                    goal.lhs.clone(),
                    goal.rhs.clone(),
                    EqKind { state: Strength::Weak, exc: goal.kind.exc },
                ),
            ]
        }
        RuleId::Eq3 => {
            if goal.kind.state != Strength::Strong {
                return Err(na("the goal is already state-weak".into()));
            }
            if !env.types_eq(&cod, &crate::types::ObjType::Unit) {
                return Err(na(format!("the codomain must be unit; it is {}", cod)));
            }
            if env.locations.is_empty() {
                return Err(na("no locations are declared".into()));
            }
            env.locations
                .iter()
                .map(|i| {
                    Equation::new(
                        Term::comp(Term::Lookup(i.clone()), goal.lhs.clone()),
                        Term::comp(Term::Lookup(i.clone()), goal.rhs.clone()),
                        EqKind { state: Strength::Weak, exc: goal.kind.exc },
                    )
                })
                .collect()
        }
        RuleId::Eeq2 => {
            if goal.kind.exc != Strength::Strong {
                return Err(na("the goal is already exception-weak".into()));
            }
            let emp = Term::empty_from(dom.clone());
            vec![
                Equation::new(
                    Term::comp(goal.lhs.clone(), emp.clone()),
                    Term::comp(goal.rhs.clone(), emp),
                    EqKind { state: goal.kind.state, exc: Strength::Strong },
                ),
                Equation::new(
                    goal.lhs.clone(),
                    goal.rhs.clone(),
                    EqKind { state: goal.kind.state, exc: Strength::Weak },
                ),
            ]
        }
        RuleId::Eeq3 => {
            if goal.kind.exc != Strength::Strong {
                return Err(na("the goal is already exception-weak".into()));
            }
            if !env.types_eq(&dom, &crate::types::ObjType::Empty) {
                return Err(na(format!("the domain must be empty; it is {}", dom)));
            }
            if env.exceptions.is_empty() {
                return Err(na("no exceptions are declared".into()));
            }
            env.exceptions
                .iter()
                .map(|e| {
                    Equation::new(
                        Term::comp(goal.lhs.clone(), Term::Tag(e.clone())),
                        Term::comp(goal.rhs.clone(), Term::Tag(e.clone())),
                        EqKind { state: goal.kind.state, exc: Strength::Weak },
                    )
                })
                .collect()
        }
        RuleId::PairSplit => {
            let crate::types::ObjType::Prod(a, b) = &cod else {
                return Err(na(format!("the codomain must be a product; it is {}", cod)));
            };
            let p1 = Term::pi1((**a).clone(), (**b).clone());
            let p2 = Term::pi2((**a).clone(), (**b).clone());
            vec![
                Equation::new(
                    Term::comp(p1.clone(), goal.lhs.clone()),
                    Term::comp(p1, goal.rhs.clone()),
                    goal.kind,
                ),
                Equation::new(
                    Term::comp(p2.clone(), goal.lhs.clone()),
                    Term::comp(p2, goal.rhs.clone()),
                    goal.kind,
                ),
            ]
        }
        _ => unreachable!("role checked above"),
    };
    for sg in &subgoals {
        sg.check(env)?;
    }
    goals.pop();
    let after = subgoals
        .iter()
        .map(|g| g.to_string())
        .collect::<Vec<_>>()
        .join(" ; ");
    for sg in subgoals.into_iter().rev() {
        goals.push(sg);
    }
    Ok((format!("split {}", rule.name()), after))
}
