//! The staged collect / select / compose / retrain loop.

pub mod plan;
pub mod run;
pub mod select;
pub mod store;

pub use plan::{default_plan, validate_plan, CollectorSpec, CompositionPart, StageSpec, StopRule};
pub use run::{
    assemble_training, best_in_group, evaluate_stage_policy, run_bootstrap, run_stage, AttemptSummary, EvalSummary,
    FitSummary, RunReport, StageDocument, StageIssue, StageResult, StageSummary, EPISODE_ID_STRIDE,
};
pub use select::{balance_score, compose, select_balanced, select_balanced_bruteforce};
pub use store::{output_root, RunStore};
