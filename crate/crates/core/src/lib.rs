//! Proof kernel and toolchain for decorated equational reasoning about
//! programs combining mutable state and exceptions.
//!
//! The crate is organized bottom-up:
//! - [`types`]: object types, values, decorations, equation kinds;
//! - [`purefn`]: the registry of pure functions with evaluator and normalizer;
//! - [`term`]: decorated terms in canonical composition form;
//! - [`rewrite`]: window matching, frame checks, and rewriting machinery;
//! - [`rules`]: the rule catalog and per-rule matchers;
//! - [`engine`]: the proof checker driving goals through script steps.

pub mod engine;
pub mod error;
pub mod harness;
pub mod purefn;
pub mod rewrite;
pub mod imp;
pub mod lemmas;
pub mod oracle;
pub mod rules;
pub mod script;
pub mod syntax;
pub mod translate;
pub mod term;
pub mod types;

pub use engine::{LemmaOutcome, Side, Step, TranscriptRow};
pub use error::{CoreError, ParseError, StepError};
pub use purefn::{ArithOp, BoolOp, CVal, CmpOp, PureFn};
pub use rewrite::{Binding, Bindings, Direction};
pub use rules::{Equation, Lemma, RuleId, RuleRole};
pub use term::{Term, TermVar};
pub use types::{Decoration, EqKind, ExcName, LocId, ObjType, Strength, TypeEnv, Value};
