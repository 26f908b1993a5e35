//! Error types shared across the kernel.

use thiserror::Error;

/// Errors raised by typing, decoration checking, and term construction.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CoreError {
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("unknown exception `{0}`")]
    UnknownException(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("effect mismatch: {0}")]
    EffectMismatch(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("unknown definition `{0}`")]
    UnknownDefinition(String),
    #[error("schematic term `{0}` has no denotation")]
    Schematic(String),
}

/// Errors raised while checking a proof step.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("equation kind {equation} is too weak for goal kind {goal}")]
    KindTooWeak { equation: String, goal: String },
    #[error("impure context: {0}")]
    ImpureContext(String),
    #[error("decoration bound violated: {0}")]
    DecorationBoundViolated(String),
    #[error("rewrite does not match: {0}")]
    RewriteNoMatch(String),
    #[error("side condition violated: {0}")]
    SideConditionViolated(String),
    #[error("binding type mismatch: {0}")]
    BindingTypeMismatch(String),
    #[error("no open goal")]
    NoOpenGoal,
    #[error("proof ended with open goals: {0}")]
    NotClosed(String),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("unknown rule or lemma `{0}`")]
    UnknownRule(String),
    #[error("not rewritable: {0}")]
    NotRewritable(String),
    #[error("split `{0}` does not apply: {1}")]
    SplitNotApplicable(String, String),
    #[error("refl failed: {0}")]
    ReflFailed(String),
}

/// Errors raised by the surface parsers (.imp programs, .dlp scripts, terms).
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "parse error at {}:{}: {}", self.line, self.col, self.message)
    }
}

impl ParseError {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError { line, col, message: message.into() }
    }
}
