use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::gmm::{floor_covariance, log_sum_exp, FitReport, Gmm, GmmParams, COVARIANCE_FLOOR};
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Random,
    GmmBc,
    Composed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subtask {
    Grasp,
    Stack,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictMode {
    #[default]
    Mean,
    Sample,
}

/// Box that predicted actions are clipped to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ActionBounds {
    pub fn clip(&self, act: &mut [f64]) {
        for ((a, lo), hi) in act.iter_mut().zip(&self.lo).zip(&self.hi) {
            *a = a.clamp(*lo, *hi);
        }
    }
}

/// One mixture component of the joint (observation, action) density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Row-major `(obs_dim + act_dim)²` matrix.
    pub covariance: Vec<f64>,
}

/// A behavior-cloning policy. `gmm-bc` models carry a joint mixture;
/// `composed` models carry one part per subtask; `random` models carry only
/// their action bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyModel {
    pub kind: PolicyKind,
    pub subtask: Subtask,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub k: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ComponentDoc>,
    pub bounds: ActionBounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<PolicyModel>,
}

struct Conditional {
    log_weight: f64,
    obs_mean: DVector<f64>,
    obs_cov: DMatrix<f64>,
    act_mean: DVector<f64>,
    gain: DMatrix<f64>,
    act_cov: DMatrix<f64>,
}

impl PolicyModel {
    /// Fit a joint mixture to `(obs, act)` pairs.
    pub fn fit(
        subtask: Subtask,
        pairs: &[(Vec<f64>, Vec<f64>)],
        bounds: ActionBounds,
        params: &GmmParams,
    ) -> Result<Self> {
        let Some((o0, a0)) = pairs.first() else {
            return Err(Error::InsufficientData {
                needed: params.k,
                got: 0,
            });
        };
        let (obs_dim, act_dim) = (o0.len(), a0.len());
        if pairs.iter().any(|(o, a)| o.len() != obs_dim || a.len() != act_dim) {
            return Err(Error::Input("training pairs have inconsistent dimensions".into()));
        }
        if bounds.lo.len() != act_dim || bounds.hi.len() != act_dim {
            return Err(Error::Input("action bounds do not match action dimension".into()));
        }
        let rows: Vec<Vec<f64>> = pairs
            .iter()
            .map(|(o, a)| o.iter().chain(a).copied().collect())
            .collect();
        let (gmm, report) = Gmm::fit(&rows, params)?;
        Ok(Self {
            kind: PolicyKind::GmmBc,
            subtask,
            obs_dim,
            act_dim,
            k: params.k,
            seed: params.seed,
            components: gmm
                .components
                .iter()
                .map(|c| ComponentDoc {
                    weight: c.weight,
                    mean: c.mean.iter().copied().collect(),
                    covariance: c.cov.transpose().iter().copied().collect(),
                })
                .collect(),
            bounds,
            fit: Some(report),
            parts: Vec::new(),
        })
    }

    pub fn random(subtask: Subtask, obs_dim: usize, bounds: ActionBounds) -> Self {
        Self {
            kind: PolicyKind::Random,
            subtask,
            obs_dim,
            act_dim: bounds.lo.len(),
            k: 0,
            seed: 0,
            components: Vec::new(),
            bounds,
            fit: None,
            parts: Vec::new(),
        }
    }

    pub fn composed(grasp: PolicyModel, stack: PolicyModel) -> Self {
        Self {
            kind: PolicyKind::Composed,
            subtask: Subtask::Full,
            obs_dim: 0,
            act_dim: 0,
            k: 0,
            seed: 0,
            components: Vec::new(),
            bounds: ActionBounds {
                lo: Vec::new(),
                hi: Vec::new(),
            },
            fit: None,
            parts: vec![grasp, stack],
        }
    }

    pub fn to_gmm(&self) -> Gmm {
        let d = self.obs_dim + self.act_dim;
        Gmm {
            components: self
                .components
                .iter()
                .map(|c| super::gmm::Component {
                    weight: c.weight,
                    mean: DVector::from_column_slice(&c.mean),
                    cov: DMatrix::from_row_slice(d, d, &c.covariance),
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PolicyKind::Composed => {
                if self.parts.len() != 2 {
                    return Err(Error::validation("parts", "composed policy needs grasp and stack parts"));
                }
                if self.parts[0].subtask != Subtask::Grasp || self.parts[1].subtask != Subtask::Stack {
                    return Err(Error::validation("parts", "parts must be [grasp, stack]"));
                }
                return self.parts.iter().try_for_each(|p| p.validate());
            }
            PolicyKind::Random => {}
            PolicyKind::GmmBc => {
                if self.components.len() != self.k || self.k == 0 {
                    return Err(Error::validation("components", "expected k components"));
                }
                let d = self.obs_dim + self.act_dim;
                let total: f64 = self.components.iter().map(|c| c.weight).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::validation("weights", format!("sum to {total}, not 1")));
                }
                for c in &self.components {
                    if !(c.weight > 0.0) {
                        return Err(Error::validation("weights", "must be positive"));
                    }
                    if c.mean.len() != d || c.covariance.len() != d * d {
                        return Err(Error::validation("components", "dimension mismatch"));
                    }
                    let cov = DMatrix::from_row_slice(d, d, &c.covariance);
                    if (&cov - cov.transpose()).amax() > 1e-12 * cov.amax().max(1.0) {
                        return Err(Error::validation("covariances", "not symmetric"));
                    }
                    let min = cov.symmetric_eigen().eigenvalues.min();
                    if min < COVARIANCE_FLOOR * (1.0 - 1e-6) {
                        return Err(Error::validation("covariances", format!("eigenvalue {min} below floor")));
                    }
                }
            }
        }
        if self.bounds.lo.len() != self.act_dim
            || self.bounds.hi.len() != self.act_dim
            || self.bounds.lo.iter().zip(&self.bounds.hi).any(|(l, h)| !(l <= h))
        {
            return Err(Error::validation("bounds", "must match act_dim with lo <= hi"));
        }
        Ok(())
    }

    fn conditionals(&self) -> Result<Vec<Conditional>> {
        let (o, a) = (self.obs_dim, self.act_dim);
        self.to_gmm()
            .components
            .into_iter()
            .map(|c| {
                let s_oo = c.cov.view((0, 0), (o, o)).into_owned();
                let s_ao = c.cov.view((o, 0), (a, o)).into_owned();
                let s_aa = c.cov.view((o, o), (a, a)).into_owned();
                let chol = s_oo
                    .clone()
                    .cholesky()
                    .ok_or_else(|| Error::Input("observation covariance is not positive definite".into()))?;
                // gain = Σ_ao Σ_oo⁻¹
                let gain = chol.solve(&s_ao.transpose()).transpose();
                let act_cov = floor_covariance(&(&s_aa - &gain * s_ao.transpose()), COVARIANCE_FLOOR);
                Ok(Conditional {
                    log_weight: c.weight.ln(),
                    obs_mean: c.mean.rows(0, o).into_owned(),
                    obs_cov: s_oo,
                    act_mean: c.mean.rows(o, a).into_owned(),
                    gain,
                    act_cov,
                })
            })
            .collect()
    }

    /// Responsibilities of each component for `obs` and the per-component
    /// conditional action means, before clipping.
    pub fn condition(&self, obs: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if self.kind != PolicyKind::GmmBc {
            return Err(Error::Precondition(format!("{:?} policy has no mixture", self.kind)));
        }
        if obs.len() != self.obs_dim {
            return Err(Error::Input(format!(
                "observation has {} values, policy expects {}",
                obs.len(),
                self.obs_dim
            )));
        }
        if obs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("observation contains non-finite values".into()));
        }
        let x = DVector::from_column_slice(obs);
        let conds = self.conditionals()?;
        let mut logs = Vec::with_capacity(conds.len());
        let mut means = Vec::with_capacity(conds.len());
        for c in &conds {
            logs.push(c.log_weight + super::gmm::log_normal(&x, &c.obs_mean, &c.obs_cov)?);
            let m = &c.act_mean + &c.gain * (&x - &c.obs_mean);
            means.push(m.iter().copied().collect());
        }
        let lse = log_sum_exp(&logs);
        Ok((logs.iter().map(|l| (l - lse).exp()).collect(), means))
    }

    /// Conditional expectation (mean mode) or a conditional draw (sample
    /// mode), clipped to the action bounds.
    pub fn predict(&self, obs: &[f64], mode: PredictMode, rng: &mut SimRng) -> Result<Vec<f64>> {
        let (resp, means) = self.condition(obs)?;
        let mut act = match mode {
            PredictMode::Mean => {
                let mut out = vec![0.0; self.act_dim];
                for (r, m) in resp.iter().zip(&means) {
                    for (o, v) in out.iter_mut().zip(m) {
                        *o += r * v;
                    }
                }
                out
            }
            PredictMode::Sample => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut j = resp.len() - 1;
                for (i, r) in resp.iter().enumerate() {
                    acc += r;
                    if u < acc {
                        j = i;
                        break;
                    }
                }
                let conds = self.conditionals()?;
                let l = conds[j]
                    .act_cov
                    .clone()
                    .cholesky()
                    .expect("floored covariance is positive definite")
                    .l();
                let z = DVector::from_fn(self.act_dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                let draw = DVector::from_column_slice(&means[j]) + l * z;
                draw.iter().copied().collect()
            }
        };
        self.bounds.clip(&mut act);
        Ok(act)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: PolicyModel = serde_json::from_str(&text)?;
        model.validate()?;
        Ok(model)
    }
}
