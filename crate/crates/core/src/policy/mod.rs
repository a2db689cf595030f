//! Behavior-cloning policies: joint Gaussian mixtures over (observation,
//! action) fitted by EM and conditioned in closed form, plus random and oracle
//! collectors and the evaluation protocol.

pub mod collector;
pub mod eval;
pub mod gmm;
pub mod model;

pub use collector::{
    act_episode, grasp_bounds, grasp_pair, stack_bounds, stack_pair, ActionPlan, ActionSource, Collector,
    Observation,
};
pub use eval::{evaluate_policy, EvalReport, TrialRecord, DEFAULT_TRIALS};
pub use gmm::{FitReport, Gmm, GmmParams, COVARIANCE_FLOOR};
pub use model::{ActionBounds, ComponentDoc, PolicyKind, PolicyModel, PredictMode, Subtask};
