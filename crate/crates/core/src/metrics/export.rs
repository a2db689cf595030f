//! CSV exports of a persisted run. Column layouts are documented in
//! `docs/formats.md`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::bootstrap::run::{grasp_model, StageResult};
use crate::bootstrap::RunStore;
use crate::error::Result;
use crate::policy::ActionSource;
use crate::store::RunConfig;

use super::cost::{cost_report, effectiveness_hours, CostCategory, CostLine};
use super::discrepancy::{mean_delta, prediction_discrepancies, DeltaRecord};

pub const TRAJECTORIES_CSV: &str = "trajectories.csv";
pub const SCATTER_CSV: &str = "scatter.csv";
pub const ARROWS_CSV: &str = "arrows.csv";
pub const STAGES_CSV: &str = "stages.csv";
pub const COST_CSV: &str = "cost.csv";

/// Successful episodes per stage that cost and effectiveness are quoted for.
pub const EFFECTIVENESS_TARGET: usize = 100;

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn writer(dir: &Path, name: &str, header: &[&str]) -> Result<(csv::Writer<std::fs::File>, PathBuf)> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(header)?;
    Ok((w, path))
}

/// Grasp predictions of the policy that collected a stage.
fn stage_deltas(stage: &StageResult, stages: &[StageResult]) -> Result<Vec<DeltaRecord>> {
    let model = match (&stage.policy, &stage.summary.grasp_policy_from) {
        (Some(p), _) => grasp_model(p).clone(),
        (None, Some(src)) => match stages.iter().find(|s| &s.summary.stage_id == src).and_then(|s| s.policy.as_ref()) {
            Some(p) => grasp_model(p).clone(),
            None => return Ok(Vec::new()),
        },
        (None, None) => return Ok(Vec::new()),
    };
    prediction_discrepancies(&ActionSource::Model(Arc::new(model)), &stage.dataset)
}

/// Write every CSV report for the run in `run_dir` and return their paths.
/// Output depends only on the persisted run, so re-running is byte-identical.
pub fn export_reports(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let store = RunStore::open(run_dir)?;
    let config: RunConfig = store.load_config()?;
    let report = store.load_report()?;
    let stages: Vec<StageResult> = report
        .stages
        .iter()
        .map(|s| store.load_stage(&s.stage_id, &config))
        .collect::<Result<_>>()?;
    let dt = 1.0 / config.workspace.control_rate;
    let mut paths = Vec::new();

    let (mut w, p) = writer(
        run_dir,
        TRAJECTORIES_CSV,
        &["stage_id", "episode_id", "k", "t", "x", "y", "z", "yaw", "aperture", "l"],
    )?;
    for s in &stages {
        for e in &s.dataset.episodes {
            for k in 0..e.n {
                let c = e.p_column(k);
                w.write_record([
                    s.summary.stage_id.clone(),
                    e.episode_id.to_string(),
                    k.to_string(),
                    num(k as f64 * dt),
                    num(c[0]),
                    num(c[1]),
                    num(c[2]),
                    num(c[3]),
                    num(c[4]),
                    e.l.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    paths.push(p);

    let (mut w, p) = writer(
        run_dir,
        SCATTER_CSV,
        &["stage_id", "episode_id", "green_x", "green_y", "red_x", "red_y", "l"],
    )?;
    for s in &stages {
        for a in &s.attempts {
            w.write_record([
                s.summary.stage_id.clone(),
                a.episode_id.to_string(),
                num(a.green_init[0]),
                num(a.green_init[1]),
                num(a.red_init[0]),
                num(a.red_init[1]),
                a.l.to_string(),
            ])?;
        }
    }
    w.flush()?;
    paths.push(p);

    let mut deltas = Vec::with_capacity(stages.len());
    let (mut w, p) = writer(
        run_dir,
        ARROWS_CSV,
        &["stage_id", "episode_id", "truth_x", "truth_y", "pred_x", "pred_y", "dx", "dy"],
    )?;
    for s in &stages {
        let d = stage_deltas(s, &stages)?;
        for r in &d {
            w.write_record([
                s.summary.stage_id.clone(),
                r.episode_id.to_string(),
                num(r.ground_truth[0]),
                num(r.ground_truth[1]),
                num(r.predicted[0]),
                num(r.predicted[1]),
                num(r.delta[0]),
                num(r.delta[1]),
            ])?;
        }
        deltas.push(mean_delta(&d));
    }
    w.flush()?;
    paths.push(p);

    let (mut w, p) = writer(
        run_dir,
        STAGES_CSV,
        &[
            "stage_id",
            "group",
            "target",
            "attempts",
            "successes",
            "success_rate",
            "infrastructure_failures",
            "wall_hours",
            "aborted",
            "eval_rate_subtask1",
            "eval_rate_full",
            "l1_avg_train",
            "l1_avg_dataset",
            "l1_avg_all_attempts",
            "mean_dx",
            "mean_dy",
        ],
    )?;
    for (s, d) in stages.iter().zip(&deltas) {
        let m = &s.summary;
        w.write_record([
            m.stage_id.clone(),
            m.group.clone().unwrap_or_default(),
            serde_json::to_value(m.target)?.as_str().unwrap_or_default().to_string(),
            m.attempts.to_string(),
            m.successes.to_string(),
            opt(m.success_rate()),
            m.infrastructure_failures.to_string(),
            num(m.wall_hours),
            m.aborted.to_string(),
            opt(m.eval.as_ref().map(|e| e.rate_subtask1)),
            opt(m.eval.as_ref().map(|e| e.rate_full)),
            opt(m.l1_avg_train),
            opt(m.l1_avg_dataset),
            opt(m.l1_avg_all_attempts),
            opt(d.map(|v| v[0])),
            opt(d.map(|v| v[1])),
        ])?;
    }
    w.flush()?;
    paths.push(p);

    let (mut w, p) = writer(
        run_dir,
        COST_CSV,
        &[
            "stage_id",
            "wall_hours",
            "successes",
            "effectiveness_hours",
            "hardware_usd",
            "inference_usd",
            "total_usd",
        ],
    )?;
    for s in &stages {
        let m = &s.summary;
        let mut row = vec![m.stage_id.clone(), num(m.wall_hours), m.successes.to_string()];
        match effectiveness_hours(m.wall_hours, m.successes, EFFECTIVENESS_TARGET) {
            Ok(h) => {
                let mut lines = vec![CostLine {
                    category: CostCategory::Hardware,
                    hours: h,
                    rate: config.rates.hardware,
                }];
                if m.uses_model {
                    lines.push(CostLine {
                        category: CostCategory::Inference,
                        hours: h,
                        rate: config.rates.inference,
                    });
                }
                let b = cost_report(&lines)?;
                row.push(num(h));
                row.push(format!("{:.2}", b.amount(CostCategory::Hardware)));
                row.push(format!("{:.2}", b.amount(CostCategory::Inference)));
                row.push(format!("{:.2}", b.total));
            }
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    paths.push(p);
    Ok(paths)
}
