use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bootstrap::plan::{default_plan, validate_plan, StageSpec};
use crate::error::{Error, Result};
use crate::metrics::CostRates;
use crate::monitor::PipelineConfig;
use crate::policy::{GmmParams, DEFAULT_TRIALS};
use crate::rollout::Environment;
use crate::sim::motion::{GRIPPER_ACTUATION_S, XY_SPEED, Z_TRAVERSE_S};
use crate::sim::{SensorConfig, SuccessMode, SuccessModel, WorkspaceSpec, DEFAULT_DWELL_TICKS};

/// Either a named success mode or explicit tolerance boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SuccessModelConfig {
    Mode(SuccessMode),
    Explicit(SuccessModel),
}

impl Default for SuccessModelConfig {
    fn default() -> Self {
        SuccessModelConfig::Explicit(SuccessModel::default())
    }
}

impl SuccessModelConfig {
    pub fn resolve(self) -> SuccessModel {
        match self {
            SuccessModelConfig::Mode(m) => SuccessModel::from_mode(m),
            SuccessModelConfig::Explicit(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub trials: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: 2024,
        }
    }
}

/// Mixture fitting settings shared by every stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub components: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        let p = GmmParams::default();
        Self {
            components: p.k,
            max_iters: p.max_iters,
            tol: p.tol,
        }
    }
}

impl PolicyConfig {
    pub fn params(&self, seed: u64) -> GmmParams {
        GmmParams {
            k: self.components,
            seed,
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory name under `runs/`; defaults to `seed-<seed>`.
    pub run_id: Option<String>,
    pub seed: u64,
    pub workspace: WorkspaceSpec,
    pub success_model: SuccessModelConfig,
    pub pipeline: PipelineConfig,
    /// Gripper footprint seen by the bottom camera, meters.
    pub footprint_half_extent: f64,
    pub dwell_ticks: usize,
    pub policy: PolicyConfig,
    pub plan: Vec<StageSpec>,
    pub eval: EvalConfig,
    pub rates: CostRates,
    /// Attempts after which a stage that has not met its stop rule aborts.
    pub attempt_ceiling: usize,
    /// Simulated seconds charged per reset on top of episode time.
    pub reset_overhead_s: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            run_id: None,
            seed: 0,
            workspace: WorkspaceSpec::default(),
            success_model: SuccessModelConfig::default(),
            pipeline: PipelineConfig::default(),
            footprint_half_extent: SensorConfig::default().footprint_half_extent,
            dwell_ticks: DEFAULT_DWELL_TICKS,
            policy: PolicyConfig::default(),
            plan: default_plan(),
            eval: EvalConfig::default(),
            rates: CostRates::default(),
            attempt_ceiling: 100_000,
            reset_overhead_s: 8.0,
        }
    }
}

impl RunConfig {
    pub fn run_id(&self) -> String {
        self.run_id.clone().unwrap_or_else(|| format!("seed-{}", self.seed))
    }

    pub fn environment(&self) -> Environment {
        Environment {
            workspace: self.workspace,
            model: self.success_model.resolve(),
            sensors: SensorConfig {
                sigma_obs: self.pipeline.sigma_obs,
                footprint_half_extent: self.footprint_half_extent,
            },
            dwell_ticks: self.dwell_ticks,
        }
    }

    /// Fill in derived values so the config echoes exactly what runs.
    pub fn resolved(mut self) -> Self {
        self.run_id = Some(self.run_id());
        self.success_model = SuccessModelConfig::Explicit(self.success_model.resolve());
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.workspace.validate()?;
        self.success_model.resolve().validate()?;
        self.pipeline.validate()?;
        self.rates.validate()?;
        validate_plan(&self.plan)?;
        if let Some(id) = &self.run_id {
            if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
                return Err(Error::validation("run_id", "must be a plain directory name"));
            }
        }
        if !(self.footprint_half_extent.is_finite() && self.footprint_half_extent > 0.0) {
            return Err(Error::validation("footprint_half_extent", "must be positive"));
        }
        if self.footprint_half_extent >= self.workspace.cube_edge {
            return Err(Error::validation(
                "footprint_half_extent",
                "must be smaller than the cube edge",
            ));
        }
        if self.policy.components == 0 {
            return Err(Error::validation("policy.components", "must be at least 1"));
        }
        if self.policy.max_iters == 0 {
            return Err(Error::validation("policy.max_iters", "must be at least 1"));
        }
        if !(self.policy.tol.is_finite() && self.policy.tol > 0.0) {
            return Err(Error::validation("policy.tol", "must be positive"));
        }
        if self.eval.trials == 0 {
            return Err(Error::validation("eval.trials", "must be at least 1"));
        }
        if self.attempt_ceiling == 0 {
            return Err(Error::validation("attempt_ceiling", "must be at least 1"));
        }
        if !(self.reset_overhead_s.is_finite() && self.reset_overhead_s >= 0.0) {
            return Err(Error::validation("reset_overhead_s", "must be non-negative"));
        }
        // Episodes must be able to finish before the monitoring timeout.
        let spec = &self.workspace;
        let bound = 2.0 * (spec.extent_x + spec.extent_y) / XY_SPEED
            + 4.0 * Z_TRAVERSE_S
            + 2.0 * GRIPPER_ACTUATION_S
            + self.dwell_ticks as f64 / spec.control_rate;
        if self.pipeline.timeout_s <= bound {
            return Err(Error::validation(
                "pipeline.timeout_s",
                format!("{} s cannot cover a full episode (up to {bound:.2} s)", self.pipeline.timeout_s),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

/// Parse, default and cross-validate a JSON run configuration.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.plan.len(), 10);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_json(r#"{"sed": 3}"#), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::from_json(r#"{"pipeline": {"confirm_frame": 3}}"#),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn mode_shorthand() {
        let c = RunConfig::from_json(r#"{"success_model": "fig2b"}"#).unwrap();
        assert_eq!(c.environment().model, SuccessModel::fig2b());
    }

    #[test]
    fn effective_config_round_trips() {
        let c = RunConfig::from_json(r#"{"seed": 5, "success_model": "fig2b"}"#).unwrap().resolved();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn infeasible_exclusion_rejected() {
        let err = RunConfig::from_json(r#"{"workspace": {"exclusion_half_extent": 0.2}}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_) | Error::Validation { .. }), "{err}");
    }
}
