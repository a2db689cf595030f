//! Executing stages and whole plans.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::plan::{CollectorSpec, StageSpec, StopRule};
use super::select::{compose, select_balanced};
use super::store::RunStore;
use crate::error::{Error, Result};
use crate::metrics::l1_avg;
use crate::monitor::{OutcomeLabel, Pipeline, TaskTarget};
use crate::policy::{
    evaluate_policy, grasp_bounds, grasp_pair, stack_bounds, stack_pair, Collector, EvalReport, FitReport,
    PolicyKind, PolicyModel, Subtask,
};
use crate::rng::{derive_seed, label};
use crate::rollout::Rollout;
use crate::store::{Dataset, RunConfig};

/// Stride between the episode ids of consecutive stages.
pub const EPISODE_ID_STRIDE: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub trials: usize,
    pub successes_subtask1: usize,
    pub successes_full: usize,
    pub rate_subtask1: f64,
    pub rate_full: f64,
    pub infrastructure_reruns: usize,
}

impl From<&EvalReport> for EvalSummary {
    fn from(r: &EvalReport) -> Self {
        Self {
            trials: r.trials,
            successes_subtask1: r.successes_subtask1,
            successes_full: r.successes_full,
            rate_subtask1: r.rate_subtask1,
            rate_full: r.rate_full,
            infrastructure_reruns: r.infrastructure_reruns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub subtask: Subtask,
    pub samples: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_log_likelihood: f64,
    pub monotone: bool,
}

impl FitSummary {
    fn new(subtask: Subtask, samples: usize, r: &FitReport) -> Self {
        Self {
            subtask,
            samples,
            iterations: r.iterations,
            converged: r.converged,
            final_log_likelihood: r.log_likelihood.last().copied().unwrap_or(f64::NAN),
            monotone: r.monotone,
        }
    }
}

/// One labeled attempt of a stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptSummary {
    pub episode_id: u64,
    pub green_init: [f64; 2],
    pub red_init: [f64; 2],
    pub pick: [f64; 2],
    pub drop: Option<[f64; 3]>,
    pub l: u8,
    pub grasp_confirmed: bool,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage_id: String,
    pub group: Option<String>,
    pub target: TaskTarget,
    /// Labeled episodes; infrastructure failures are not attempts.
    pub attempts: usize,
    pub successes: usize,
    pub infrastructure_failures: usize,
    /// Simulated hours: episode time plus reset overhead, including episodes
    /// lost to the infrastructure.
    pub wall_hours: f64,
    /// Whether the collector consulted a trained model.
    pub uses_model: bool,
    pub aborted: bool,
    /// Stage whose policy grasped for a hybrid collector.
    pub grasp_policy_from: Option<String>,
    pub training_ids: Vec<u64>,
    pub l1_avg_train: Option<f64>,
    /// Over the stage's successful episodes.
    pub l1_avg_dataset: Option<f64>,
    /// Over every attempt, successful or not.
    pub l1_avg_all_attempts: Option<f64>,
    pub fits: Vec<FitSummary>,
    pub eval: Option<EvalSummary>,
}

impl StageSummary {
    pub fn success_rate(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.successes as f64 / self.attempts as f64)
    }
}

/// Contents of a stage's `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDocument {
    pub summary: StageSummary,
    pub attempts: Vec<AttemptSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub summary: StageSummary,
    pub attempts: Vec<AttemptSummary>,
    /// Successful episodes.
    pub dataset: Dataset,
    pub policy: Option<PolicyModel>,
}

impl StageResult {
    pub fn document(&self) -> StageDocument {
        StageDocument {
            summary: self.summary.clone(),
            attempts: self.attempts.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageIssue {
    pub stage_id: String,
    pub reason: String,
}

/// Summary of a whole plan. Contains no wall-clock data, so identical
/// configurations produce identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub seed: u64,
    /// Completed and aborted stages, in plan order.
    pub stages: Vec<StageSummary>,
    /// Best-evaluated member of each stage group, by subtask-I rate.
    pub best_in_group: BTreeMap<String, String>,
    pub aborted: Vec<String>,
    pub failed: Vec<StageIssue>,
    pub skipped: Vec<StageIssue>,
}

impl RunReport {
    pub fn stage(&self, id: &str) -> Option<&StageSummary> {
        self.stages.iter().find(|s| s.stage_id == id)
    }
}

/// Grasp-phase model of a stage policy.
pub fn grasp_model(policy: &PolicyModel) -> &PolicyModel {
    match policy.kind {
        PolicyKind::Composed => &policy.parts[0],
        _ => policy,
    }
}

/// Best completed, evaluated member of `group` (highest subtask-I rate;
/// earlier stages win ties).
pub fn best_in_group<'a>(
    plan: &'a [StageSpec],
    group: &str,
    completed: &BTreeMap<String, StageResult>,
) -> Option<&'a str> {
    let mut best: Option<(&str, f64)> = None;
    for s in plan.iter().filter(|s| s.group.as_deref() == Some(group)) {
        let Some(rate) = completed
            .get(&s.id)
            .and_then(|r| r.summary.eval.as_ref())
            .map(|e| e.rate_subtask1)
        else {
            continue;
        };
        if best.is_none_or(|(_, b)| rate > b) {
            best = Some((&s.id, rate));
        }
    }
    best.map(|(id, _)| id)
}

fn dependency<'a>(completed: &'a BTreeMap<String, StageResult>, id: &str) -> Result<&'a StageResult> {
    completed
        .get(id)
        .ok_or_else(|| Error::Precondition(format!("stage `{id}` has not completed")))
}

/// Training set of a stage: the unbalanced parts, composed with the balanced
/// parts selected against them.
pub fn assemble_training(spec: &StageSpec, completed: &BTreeMap<String, StageResult>) -> Result<Dataset> {
    let take = |part: &super::plan::CompositionPart| -> Result<&Dataset> {
        let ds = &dependency(completed, &part.source)?.dataset;
        if ds.len() < part.count {
            return Err(Error::InsufficientData {
                needed: part.count,
                got: ds.len(),
            });
        }
        Ok(ds)
    };
    let mut new = Dataset::default();
    for part in spec.training.iter().filter(|p| !p.balanced) {
        new = compose(&new, &take(part)?.head(part.count))?;
    }
    let mut selected = Dataset::default();
    for part in spec.training.iter().filter(|p| p.balanced) {
        selected = compose(&selected, &select_balanced(take(part)?, &new, part.count)?)?;
    }
    let mut training = compose(&selected, &new)?;
    training.stage_tag = spec.id.clone();
    Ok(training)
}

fn fit_stage_policy(
    spec: &StageSpec,
    training: &Dataset,
    config: &RunConfig,
) -> Result<(PolicyModel, Vec<FitSummary>)> {
    let seed = derive_seed(config.seed, &[label(&spec.id), label("fit")]);
    let ws = &config.workspace;
    let grasp_pairs = training.episodes.iter().map(grasp_pair).collect::<Result<Vec<_>>>()?;
    let grasp = PolicyModel::fit(
        Subtask::Grasp,
        &grasp_pairs,
        grasp_bounds(ws),
        &config.policy.params(derive_seed(seed, &[label("grasp")])),
    )?;
    let mut fits = vec![FitSummary::new(Subtask::Grasp, grasp_pairs.len(), grasp.fit.as_ref().expect("fitted"))];
    if spec.target == TaskTarget::Subtask1 {
        return Ok((grasp, fits));
    }
    let stack_pairs = training
        .episodes
        .iter()
        .filter(|e| e.task == TaskTarget::Full)
        .map(stack_pair)
        .collect::<Result<Vec<_>>>()?;
    let stack = PolicyModel::fit(
        Subtask::Stack,
        &stack_pairs,
        stack_bounds(ws),
        &config.policy.params(derive_seed(seed, &[label("stack")])),
    )?;
    fits.push(FitSummary::new(Subtask::Stack, stack_pairs.len(), stack.fit.as_ref().expect("fitted")));
    Ok((PolicyModel::composed(grasp, stack), fits))
}

fn l1_opt(points: &[[f64; 2]]) -> Option<f64> {
    l1_avg(points).ok()
}

/// Evaluate a stage policy with the configured protocol.
pub fn evaluate_stage_policy(policy: &PolicyModel, config: &RunConfig) -> Result<EvalReport> {
    evaluate_policy(
        &Collector::from_model(policy)?,
        &config.environment(),
        &config.pipeline,
        config.eval.trials,
        config.eval.seed,
    )
}

/// Run one stage: assemble and fit its policy if it trains, collect until the
/// stop rule, evaluate the policy. Hitting the attempt ceiling marks the
/// result aborted rather than failing.
fn execute_stage(
    plan: &[StageSpec],
    ordinal: usize,
    config: &RunConfig,
    completed: &BTreeMap<String, StageResult>,
) -> Result<StageResult> {
    let spec = &plan[ordinal];
    let mut training_ids = Vec::new();
    let mut l1_avg_train = None;
    let mut fits = Vec::new();
    let mut policy = None;
    let mut grasp_policy_from = None;

    let collector = match &spec.collector {
        CollectorSpec::Random => Collector::random(),
        CollectorSpec::Policy => {
            let training = assemble_training(spec, completed)?;
            training_ids = training.ids();
            l1_avg_train = l1_opt(&training.green_inits);
            let (model, f) = fit_stage_policy(spec, &training, config)?;
            fits = f;
            let c = Collector::from_model(&model)?;
            policy = Some(model);
            c
        }
        CollectorSpec::Hybrid { grasp_from } => {
            let source = if completed.contains_key(grasp_from) {
                grasp_from.as_str()
            } else {
                best_in_group(plan, grasp_from, completed)
                    .ok_or_else(|| Error::Precondition(format!("no evaluated policy in `{grasp_from}`")))?
            };
            let model = dependency(completed, source)?
                .policy
                .as_ref()
                .ok_or_else(|| Error::Precondition(format!("stage `{source}` has no policy")))?;
            grasp_policy_from = Some(source.to_string());
            Collector::policy(Arc::new(grasp_model(model).clone()), None)
        }
    };

    let env = config.environment();
    let pipeline = Pipeline::new(config.pipeline.clone(), env.model, env.workspace.cube_edge)?;
    let mut rollout = Rollout::new(env, pipeline, derive_seed(config.seed, &[label(&spec.id)]))?;
    let base_id = (ordinal as u64 + 1) * EPISODE_ID_STRIDE;
    let ceiling = config.attempt_ceiling;

    let mut attempts = Vec::new();
    let mut episodes = Vec::new();
    let mut infrastructure_failures = 0;
    let mut seconds = 0.0;
    let mut next = 0u64;
    let mut aborted = false;
    loop {
        let done = match spec.stop {
            StopRule::SuccessCount(n) => episodes.len() >= n,
            StopRule::EpisodeCount(n) => attempts.len() >= n,
        };
        if done {
            break;
        }
        if attempts.len() >= ceiling || infrastructure_failures >= ceiling {
            aborted = true;
            break;
        }
        let a = rollout.attempt(base_id + next, spec.target, &collector)?;
        next += 1;
        seconds += a.duration + config.reset_overhead_s;
        let Some(l) = a.outcome.label.as_l() else {
            debug_assert_eq!(a.outcome.label, OutcomeLabel::InfrastructureFailure);
            infrastructure_failures += 1;
            continue;
        };
        attempts.push(AttemptSummary {
            episode_id: a.episode_id,
            green_init: a.initial.green_cube.xy(),
            red_init: a.initial.red_cube.xy(),
            pick: a.plan.pick,
            drop: a.plan.drop,
            l,
            grasp_confirmed: a.outcome.grasp_confirmed,
            duration: a.duration,
        });
        if l == 1 {
            if let Some(r) = a.to_record(&spec.id) {
                episodes.push(r);
            }
        }
    }
    let dataset = Dataset::new(spec.id.clone(), episodes);
    let eval = match (&policy, aborted) {
        (Some(p), false) => Some(EvalSummary::from(&evaluate_stage_policy(p, config)?)),
        _ => None,
    };
    let all_inits: Vec<[f64; 2]> = attempts.iter().map(|a| a.green_init).collect();
    let summary = StageSummary {
        stage_id: spec.id.clone(),
        group: spec.group.clone(),
        target: spec.target,
        attempts: attempts.len(),
        successes: dataset.len(),
        infrastructure_failures,
        wall_hours: seconds / 3600.0,
        uses_model: collector.uses_model(),
        aborted,
        grasp_policy_from,
        training_ids,
        l1_avg_train,
        l1_avg_dataset: l1_opt(&dataset.green_inits),
        l1_avg_all_attempts: l1_opt(&all_inits),
        fits,
        eval,
    };
    Ok(StageResult {
        summary,
        attempts,
        dataset,
        policy,
    })
}

/// Run stage `ordinal` of `plan` against the completed earlier stages and
/// persist its outputs. A stage that reaches the attempt ceiling persists its
/// partial results and returns a stage-abort error.
pub fn run_stage(
    plan: &[StageSpec],
    ordinal: usize,
    config: &RunConfig,
    completed: &BTreeMap<String, StageResult>,
    store: &RunStore,
) -> Result<StageResult> {
    let spec = plan
        .get(ordinal)
        .ok_or_else(|| Error::Input(format!("plan has no stage {ordinal}")))?;
    store.clear_stage(&spec.id)?;
    let result = execute_stage(plan, ordinal, config, completed)?;
    store.save_stage(&result)?;
    if result.summary.aborted {
        return Err(Error::StageAbort {
            stage: spec.id.clone(),
            attempts: result.summary.attempts,
            successes: result.summary.successes,
        });
    }
    Ok(result)
}

/// Whether a stage error should stop the whole run instead of only the
/// stage's dependents.
fn is_fatal(e: &Error) -> bool {
    matches!(e, Error::Io(_) | Error::Json(_) | Error::Csv(_))
}

/// Execute a validated plan in order under `<root>/runs/<run-id>/`. A stage
/// that fails or aborts skips the stages depending on it; the rest of the
/// plan still runs.
pub fn run_bootstrap(config: &RunConfig, root: &Path) -> Result<RunReport> {
    config.validate()?;
    let config = config.clone().resolved();
    let run_id = config.run_id();
    let store = RunStore::create(root, &run_id)?;
    store.save_config(&config)?;
    let plan = &config.plan;

    let mut completed: BTreeMap<String, StageResult> = BTreeMap::new();
    let mut unavailable: Vec<String> = Vec::new();
    let mut report = RunReport {
        run_id,
        seed: config.seed,
        stages: Vec::new(),
        best_in_group: BTreeMap::new(),
        aborted: Vec::new(),
        failed: Vec::new(),
        skipped: Vec::new(),
    };
    for (ordinal, spec) in plan.iter().enumerate() {
        let missing = spec.dependencies().into_iter().find(|dep| {
            if completed.contains_key(*dep) {
                return false;
            }
            let is_group = plan.iter().any(|s| s.group.as_deref() == Some(*dep));
            !(is_group && best_in_group(plan, dep, &completed).is_some())
        });
        if let Some(dep) = missing {
            let reason = if unavailable.iter().any(|u| u == dep) {
                format!("dependency `{dep}` did not complete")
            } else {
                format!("dependency `{dep}` has no usable result")
            };
            log::warn!("skipping {}: {reason}", spec.id);
            store.clear_stage(&spec.id)?;
            report.skipped.push(StageIssue {
                stage_id: spec.id.clone(),
                reason,
            });
            unavailable.push(spec.id.clone());
            continue;
        }
        log::info!("stage {}", spec.id);
        match run_stage(plan, ordinal, &config, &completed, &store) {
            Ok(result) => {
                report.stages.push(result.summary.clone());
                completed.insert(spec.id.clone(), result);
            }
            Err(Error::StageAbort { .. }) => {
                let partial = store.load_stage(&spec.id, &config)?;
                log::warn!(
                    "stage {} aborted after {} attempts ({} successes)",
                    spec.id,
                    partial.summary.attempts,
                    partial.summary.successes
                );
                report.stages.push(partial.summary);
                report.aborted.push(spec.id.clone());
                unavailable.push(spec.id.clone());
            }
            Err(e) if is_fatal(&e) => return Err(e),
            Err(e) => {
                log::warn!("stage {} failed: {e}", spec.id);
                store.clear_stage(&spec.id)?;
                report.failed.push(StageIssue {
                    stage_id: spec.id.clone(),
                    reason: e.to_string(),
                });
                unavailable.push(spec.id.clone());
            }
        }
    }
    let groups: std::collections::BTreeSet<&str> = plan.iter().filter_map(|s| s.group.as_deref()).collect();
    for g in groups {
        if let Some(best) = best_in_group(plan, g, &completed) {
            report.best_in_group.insert(g.to_string(), best.to_string());
        }
    }
    store.save_report(&report)?;
    Ok(report)
}
