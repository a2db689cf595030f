//! Full-covariance Gaussian mixtures fitted by expectation-maximization.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Smallest eigenvalue any fitted covariance may have.
pub const COVARIANCE_FLOOR: f64 = 1e-8;
const WEIGHT_FLOOR: f64 = 1e-300;
/// Relative slack allowed when checking that the log-likelihood never drops.
pub const MONOTONE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmParams {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Convergence threshold on the change in mean per-sample log-likelihood.
    pub tol: f64,
}

impl Default for GmmParams {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 0,
            max_iters: 200,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub converged: bool,
    /// Total training log-likelihood before the first update and after every
    /// update.
    pub log_likelihood: Vec<f64>,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gmm {
    pub components: Vec<Component>,
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Log-density of `x` under `N(mean, cov)`.
pub fn log_normal(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Input("covariance is not positive definite".into()))?;
    let diff = x - mean;
    let z = chol.l().solve_lower_triangular(&diff).expect("triangular factor is invertible");
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(-0.5 * (x.len() as f64 * LN_2PI + log_det + z.norm_squared()))
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Symmetrize and raise every eigenvalue to at least `floor`. This is the
/// constrained maximum-likelihood covariance for the given scatter, so EM
/// stays monotone.
pub fn floor_covariance(cov: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= floor) {
        return sym;
    }
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    (&out + out.transpose()) * 0.5
}

fn kmeans_pp(data: &[DVector<f64>], k: usize, rng: &mut rng::SimRng) -> Vec<DVector<f64>> {
    let n = data.len();
    let mut centers = vec![data[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = data.iter().map(|x| (x - &centers[0]).norm_squared()).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = data[idx].clone();
        for (d, x) in d2.iter_mut().zip(data) {
            *d = d.min((x - &c).norm_squared());
        }
        centers.push(c);
    }
    centers
}

impl Gmm {
    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    /// Per-sample log-likelihood contributions and normalized responsibilities.
    fn e_step(&self, data: &[DVector<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
        let chols: Vec<_> = self
            .components
            .iter()
            .map(|c| {
                c.cov
                    .clone()
                    .cholesky()
                    .ok_or_else(|| Error::Input("covariance is not positive definite".into()))
            })
            .collect::<Result<_>>()?;
        let d = self.dim() as f64;
        let mut total = 0.0;
        let mut resp = Vec::with_capacity(data.len());
        let mut lp = vec![0.0; self.components.len()];
        for x in data {
            for (j, (c, chol)) in self.components.iter().zip(&chols).enumerate() {
                let z = chol
                    .l()
                    .solve_lower_triangular(&(x - &c.mean))
                    .expect("triangular factor is invertible");
                let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                lp[j] = c.weight.ln() - 0.5 * (d * LN_2PI + log_det + z.norm_squared());
            }
            let lse = log_sum_exp(&lp);
            total += lse;
            resp.push(lp.iter().map(|v| (v - lse).exp()).collect());
        }
        Ok((total, resp))
    }

    fn m_step(&mut self, data: &[DVector<f64>], resp: &[Vec<f64>]) {
        let n = data.len() as f64;
        let dim = self.dim();
        for (j, comp) in self.components.iter_mut().enumerate() {
            let nk: f64 = resp.iter().map(|r| r[j]).sum();
            comp.weight = (nk / n).max(WEIGHT_FLOOR);
            if nk < 1e-12 {
                // An empty component's mean and covariance do not affect the
                // likelihood; keep them.
                continue;
            }
            let mut mean = DVector::zeros(dim);
            for (x, r) in data.iter().zip(resp) {
                mean.axpy(r[j], x, 1.0);
            }
            mean /= nk;
            let mut cov = DMatrix::zeros(dim, dim);
            for (x, r) in data.iter().zip(resp) {
                let d = x - &mean;
                cov.ger(r[j], &d, &d, 1.0);
            }
            cov /= nk;
            comp.mean = mean;
            comp.cov = floor_covariance(&cov, COVARIANCE_FLOOR);
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        for c in &mut self.components {
            c.weight /= total;
        }
    }

    /// Fit a `k`-component mixture to `data` (one row per sample).
    pub fn fit(data: &[Vec<f64>], params: &GmmParams) -> Result<(Gmm, FitReport)> {
        let k = params.k;
        if k == 0 {
            return Err(Error::validation("k", "must be at least 1"));
        }
        if data.len() < k {
            return Err(Error::InsufficientData {
                needed: k,
                got: data.len(),
            });
        }
        let dim = data[0].len();
        if dim == 0 || data.iter().any(|r| r.len() != dim) {
            return Err(Error::Input("training rows must share a non-zero dimension".into()));
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Input("training data contains non-finite values".into()));
        }
        let xs: Vec<DVector<f64>> = data.iter().map(|r| DVector::from_column_slice(r)).collect();
        let n = xs.len() as f64;
        let mut mean = DVector::zeros(dim);
        for x in &xs {
            mean += x;
        }
        mean /= n;
        let mut global = DMatrix::zeros(dim, dim);
        for x in &xs {
            let d = x - &mean;
            global.ger(1.0, &d, &d, 1.0);
        }
        global /= n;
        let global = floor_covariance(&global, COVARIANCE_FLOOR);

        let mut rng = rng::substream(params.seed, &[rng::label("gmm-init")]);
        let centers = kmeans_pp(&xs, k, &mut rng);
        let mut gmm = Gmm {
            components: centers
                .into_iter()
                .map(|c| Component {
                    weight: 1.0 / k as f64,
                    mean: c,
                    cov: global.clone(),
                })
                .collect(),
        };

        let (mut ll, mut resp) = gmm.e_step(&xs)?;
        let mut history = vec![ll];
        let mut converged = false;
        let mut iterations = 0;
        while iterations < params.max_iters {
            gmm.m_step(&xs, &resp);
            iterations += 1;
            let (next_ll, next_resp) = gmm.e_step(&xs)?;
            history.push(next_ll);
            let delta = (next_ll - ll) / n;
            ll = next_ll;
            resp = next_resp;
            if delta.abs() < params.tol {
                converged = true;
                break;
            }
        }
        let monotone = history
            .windows(2)
            .all(|w| w[1] >= w[0] - MONOTONE_RTOL * w[0].abs().max(1.0));
        if !monotone {
            log::warn!("EM log-likelihood decreased during fit");
        }
        Ok((
            gmm,
            FitReport {
                iterations,
                converged,
                log_likelihood: history,
                monotone,
            },
        ))
    }

    pub fn log_likelihood(&self, data: &[Vec<f64>]) -> Result<f64> {
        let xs: Vec<DVector<f64>> = data.iter().map(|r| DVector::from_column_slice(r)).collect();
        Ok(self.e_step(&xs)?.0)
    }
}
