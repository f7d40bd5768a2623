//! Objective intelligibility: a gammatone-envelope, Gaussian-copula variant
//! of speech intelligibility in bits (SIIB), plus corpus-level evaluation
//! under speech-shaped noise.

mod eval;
mod gammatone;
mod mi;
mod siib;

pub use eval::{evaluate_condition, read_report, write_report, EvalRow, Utterance, REPORT_HEADER};
pub use gammatone::{erb_space, gammatone_envelopes, Envelopes};
pub use mi::mutual_information_gc;
pub use siib::{siib, SiibConfig, SiibScore, MIN_CLEAN_S};
