//! Bundled proof scripts and example programs.
//!
//! The `.dlp` scripts under `scripts/` carry the shipped proof corpus:
//! general store laws, raise/handle laws, control-flow facts, and three
//! worked program equivalences. The deliberately broken mutants pin down
//! that the checker rejects bad steps for the right reason. The `.imp`
//! corpus feeds the interpreter/denotation adequacy tests and the CLI.

use crate::error::ParseError;
use crate::imp::{parse_program, ImpError, Program};
use crate::script::{run_script, ScriptOutcome};

/// Proof scripts shipped with the crate. Each file is self-contained:
/// lemmas cite earlier lemmas of the same script but nothing across files.
pub const SCRIPTS: &[(&str, &str)] = &[
    ("state_properties", include_str!("../scripts/state_properties.dlp")),
    ("exception_properties", include_str!("../scripts/exception_properties.dlp")),
    ("imp_properties", include_str!("../scripts/imp_properties.dlp")),
    ("lemma1", include_str!("../scripts/lemma1.dlp")),
    ("lemma2", include_str!("../scripts/lemma2.dlp")),
    ("lemma3", include_str!("../scripts/lemma3.dlp")),
];

/// Deliberately broken scripts. Each must be rejected, and the paired
/// fragment must appear in the reported step error.
pub const MUTANTS: &[(&str, &str, &str)] = &[
    (
        "mutant_flipped_direction",
        include_str!("../scripts/mutant_flipped_direction.dlp"),
        "does not match",
    ),
    ("mutant_wrong_rule", include_str!("../scripts/mutant_wrong_rule.dlp"), "side condition"),
    (
        "mutant_impure_frame",
        include_str!("../scripts/mutant_impure_frame.dlp"),
        "impure context",
    ),
];

/// Example programs: name and source.
pub const CORPUS: &[(&str, &str)] = &[
    ("01_skip", include_str!("../corpus/01_skip.imp")),
    ("02_assign_const", include_str!("../corpus/02_assign_const.imp")),
    ("03_assign_arith", include_str!("../corpus/03_assign_arith.imp")),
    ("04_seq_copy", include_str!("../corpus/04_seq_copy.imp")),
    ("05_if_const", include_str!("../corpus/05_if_const.imp")),
    ("06_if_read", include_str!("../corpus/06_if_read.imp")),
    ("07_count_loop", include_str!("../corpus/07_count_loop.imp")),
    ("08_count_flat", include_str!("../corpus/08_count_flat.imp")),
    ("09_loop_skipped", include_str!("../corpus/09_loop_skipped.imp")),
    ("10_sum_down", include_str!("../corpus/10_sum_down.imp")),
    ("11_diverge", include_str!("../corpus/11_diverge.imp")),
    ("12_throw", include_str!("../corpus/12_throw.imp")),
    ("13_catch_raise", include_str!("../corpus/13_catch_raise.imp")),
    ("14_catch_pure", include_str!("../corpus/14_catch_pure.imp")),
    ("15_nested_catch", include_str!("../corpus/15_nested_catch.imp")),
    ("16_uncaught", include_str!("../corpus/16_uncaught.imp")),
    ("17_loop_raise", include_str!("../corpus/17_loop_raise.imp")),
    ("18_loop_raise_flat", include_str!("../corpus/18_loop_raise_flat.imp")),
    ("19_guard_combo", include_str!("../corpus/19_guard_combo.imp")),
    ("20_rethrow", include_str!("../corpus/20_rethrow.imp")),
    ("21_diverge_in_try", include_str!("../corpus/21_diverge_in_try.imp")),
    ("22_negative", include_str!("../corpus/22_negative.imp")),
];

/// Parse and check one bundled script by name.
pub fn replay(name: &str) -> Option<Result<ScriptOutcome, ParseError>> {
    SCRIPTS.iter().find(|(n, _)| *n == name).map(|(_, src)| run_script(src))
}

/// Parse and check every bundled script, in bundle order.
pub fn check_bundled() -> Vec<(&'static str, Result<ScriptOutcome, ParseError>)> {
    SCRIPTS.iter().map(|(n, src)| (*n, run_script(src))).collect()
}

/// Parse one bundled example program by name.
pub fn corpus_program(name: &str) -> Option<Result<Program, ImpError>> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, src)| parse_program(src))
}
