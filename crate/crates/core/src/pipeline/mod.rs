//! Experiment stages shared by the `lvc` binary and the integration tests.

mod config;
mod prepare;
mod report;
mod stages;

pub use config::ExperimentConfig;
pub use prepare::{analyse, mgc_stats_array, mgc_stats_from_array, prepare, Analysed, Prepared};
pub use report::{format_table, run_eval, write_experiment_report, EvalRequest, ExperimentReport, ReportMeta, SystemSource};
pub use stages::{
    conversion_file_name, extract, format_train_log, load_classifier, run_conversion, run_enhance, save_classifier,
    save_vc, train_classifier_stage, train_vc_stage, ClassifierOutcome, Provenance, VcOutcome, PROVENANCE_FILE, VERSION,
};
