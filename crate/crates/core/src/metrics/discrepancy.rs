use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{ActionSource, PredictMode};
use crate::rng;
use crate::store::Dataset;

/// Offset between a policy's pick point and the true green-cube position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub episode_id: u64,
    pub ground_truth: [f64; 2],
    pub predicted: [f64; 2],
    /// `predicted - ground_truth`.
    pub delta: [f64; 2],
}

/// Predicted pick (mean mode, noise-free observation) against the true
/// initial green position, for every successful episode.
pub fn prediction_discrepancies(grasp: &ActionSource, dataset: &Dataset) -> Result<Vec<DeltaRecord>> {
    let mut out = Vec::new();
    for e in dataset.episodes.iter().filter(|e| e.is_success()) {
        let truth = e.green_init;
        let predicted = match grasp {
            ActionSource::Oracle => truth,
            ActionSource::Model(m) => {
                let a = m.predict(&truth, PredictMode::Mean, &mut rng::stream(0))?;
                [a[0], a[1]]
            }
            ActionSource::Random => {
                return Err(Error::Precondition("random actions have no prediction to compare".into()))
            }
        };
        out.push(DeltaRecord {
            episode_id: e.episode_id,
            ground_truth: truth,
            predicted,
            delta: [predicted[0] - truth[0], predicted[1] - truth[1]],
        });
    }
    Ok(out)
}

/// Mean delta vector; `None` for no records.
pub fn mean_delta(records: &[DeltaRecord]) -> Option<[f64; 2]> {
    if records.is_empty() {
        return None;
    }
    let n = records.len() as f64;
    let sx: f64 = records.iter().map(|r| r.delta[0]).sum();
    let sy: f64 = records.iter().map(|r| r.delta[1]).sum();
    Some([sx / n, sy / n])
}
