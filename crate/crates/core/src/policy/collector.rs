use std::sync::Arc;

use serde::Serialize;

use super::model::{ActionBounds, PolicyKind, PolicyModel, PredictMode, Subtask};
use crate::error::{Error, Result};
use crate::monitor::TaskTarget;
use crate::rng::SimRng;
use crate::sim::scene::sample_drop_xyz;
use crate::sim::{random_pick_target, FramePayload, MotionPrimitive, ObjectId, SceneState, SensorFrame, WorkspaceSpec};
use crate::store::EpisodeRecord;

/// What a policy sees at the start of an episode: cube centroids from the
/// first top-camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub green: [f64; 2],
    pub red: [f64; 2],
}

impl Observation {
    pub fn from_top_frame(frame: &SensorFrame) -> Result<Self> {
        let FramePayload::Top { objects } = &frame.payload else {
            return Err(Error::Precondition("observation needs a top-camera frame".into()));
        };
        let find = |id| {
            objects
                .iter()
                .find(|o| o.object == id)
                .map(|o| o.position.xy())
                .ok_or_else(|| Error::Input(format!("top frame lacks {id:?} cube")))
        };
        Ok(Self {
            green: find(ObjectId::Green)?,
            red: find(ObjectId::Red)?,
        })
    }
}

pub fn grasp_bounds(spec: &WorkspaceSpec) -> ActionBounds {
    ActionBounds {
        lo: vec![0.0, 0.0],
        hi: vec![spec.extent_x, spec.extent_y],
    }
}

pub fn stack_bounds(spec: &WorkspaceSpec) -> ActionBounds {
    ActionBounds {
        lo: vec![0.0, 0.0, 0.0],
        hi: vec![spec.extent_x, spec.extent_y, spec.extent_z],
    }
}

#[derive(Debug, Clone)]
pub enum ActionSource {
    /// Uniform endpoints.
    Random,
    Model(Arc<PolicyModel>),
    /// Ground-truth cube positions; a perfect policy for testing.
    Oracle,
}

/// Chooses action endpoints for the grasp and stack phases.
#[derive(Debug, Clone)]
pub struct Collector {
    pub grasp: ActionSource,
    pub stack: ActionSource,
    pub mode: PredictMode,
}

impl Collector {
    pub fn random() -> Self {
        Self {
            grasp: ActionSource::Random,
            stack: ActionSource::Random,
            mode: PredictMode::Mean,
        }
    }

    pub fn oracle() -> Self {
        Self {
            grasp: ActionSource::Oracle,
            stack: ActionSource::Oracle,
            mode: PredictMode::Mean,
        }
    }

    /// Grasp with `grasp`, stack with `stack` or at random.
    pub fn policy(grasp: Arc<PolicyModel>, stack: Option<Arc<PolicyModel>>) -> Self {
        Self {
            grasp: ActionSource::Model(grasp),
            stack: stack.map_or(ActionSource::Random, ActionSource::Model),
            mode: PredictMode::Mean,
        }
    }

    /// The collector a stored policy file describes.
    pub fn from_model(model: &PolicyModel) -> Result<Self> {
        model.validate()?;
        let source = |m: &PolicyModel| match m.kind {
            PolicyKind::Random => ActionSource::Random,
            _ => ActionSource::Model(Arc::new(m.clone())),
        };
        Ok(match (model.kind, model.subtask) {
            (PolicyKind::Composed, _) => Self {
                grasp: source(&model.parts[0]),
                stack: source(&model.parts[1]),
                mode: PredictMode::Mean,
            },
            (_, Subtask::Stack) => Self {
                grasp: ActionSource::Oracle,
                stack: source(model),
                mode: PredictMode::Mean,
            },
            _ => Self {
                grasp: source(model),
                stack: ActionSource::Random,
                mode: PredictMode::Mean,
            },
        })
    }

    /// Whether any phase consults a trained model (and so incurs inference).
    pub fn uses_model(&self) -> bool {
        matches!(self.grasp, ActionSource::Model(_)) || matches!(self.stack, ActionSource::Model(_))
    }

    pub fn with_mode(mut self, mode: PredictMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionPlan {
    pub pick: [f64; 2],
    pub drop: Option<[f64; 3]>,
    pub grasp: Vec<MotionPrimitive>,
    pub stack: Option<Vec<MotionPrimitive>>,
}

fn check_model(m: &PolicyModel, subtask: Subtask) -> Result<()> {
    if m.subtask != subtask || m.kind != PolicyKind::GmmBc {
        return Err(Error::Precondition(format!(
            "{:?} {:?} policy used for the {subtask:?} phase",
            m.kind, m.subtask
        )));
    }
    Ok(())
}

/// Plan the canonical primitive sequence: lift, move over the predicted pick
/// point, lower, close; for the full task also lift, move over the predicted
/// drop point, lower to its height, open. The simulator runs the stack phase
/// only if the grasp succeeded.
pub fn act_episode(
    collector: &Collector,
    scene: &SceneState,
    obs: &Observation,
    spec: &WorkspaceSpec,
    target: TaskTarget,
    rng: &mut SimRng,
) -> Result<ActionPlan> {
    let pick = match &collector.grasp {
        ActionSource::Random => random_pick_target(scene, spec, rng)?.xy(),
        ActionSource::Oracle => scene.green_cube.xy(),
        ActionSource::Model(m) => {
            check_model(m, Subtask::Grasp)?;
            let a = m.predict(&obs.green, collector.mode, rng)?;
            [a[0], a[1]]
        }
    };
    let grasp = vec![
        MotionPrimitive::Lift { z: 1.0 },
        MotionPrimitive::MoveXy { x: pick[0], y: pick[1] },
        MotionPrimitive::Lower { z: 0.0 },
        MotionPrimitive::Close,
    ];
    let drop = match target {
        TaskTarget::Subtask1 => None,
        TaskTarget::Full => Some(match &collector.stack {
            ActionSource::Random => {
                let p = sample_drop_xyz(spec, rng);
                [p.x, p.y, p.z]
            }
            ActionSource::Oracle => [scene.red_cube.x, scene.red_cube.y, spec.cube_edge],
            ActionSource::Model(m) => {
                check_model(m, Subtask::Stack)?;
                let a = m.predict(&obs.red, collector.mode, rng)?;
                [a[0], a[1], a[2]]
            }
        }),
    };
    let stack = drop.map(|d| {
        vec![
            MotionPrimitive::Lift { z: 1.0 },
            MotionPrimitive::MoveXy { x: d[0], y: d[1] },
            MotionPrimitive::Lower {
                z: (d[2] / spec.extent_z).clamp(0.0, 1.0),
            },
            MotionPrimitive::Open,
        ]
    });
    Ok(ActionPlan {
        pick,
        drop,
        grasp,
        stack,
    })
}

/// Column of the first close command: the gripper's setpoint when it began
/// to close.
fn close_column(record: &EpisodeRecord) -> Option<usize> {
    (0..record.n).find(|&k| record.a[4][k] < 1.0)
}

/// Grasp training pair: observed green xy → commanded pick xy.
pub fn grasp_pair(record: &EpisodeRecord) -> Result<(Vec<f64>, Vec<f64>)> {
    let obs = record
        .first_top(ObjectId::Green)
        .ok_or_else(|| Error::validation("top_track", "no green observation"))?;
    let k = close_column(record).ok_or_else(|| Error::validation("A", "no close command"))?;
    Ok((obs.to_vec(), vec![record.a[0][k], record.a[1][k]]))
}

/// Stack training pair: observed red xy → commanded drop xyz.
pub fn stack_pair(record: &EpisodeRecord) -> Result<(Vec<f64>, Vec<f64>)> {
    let obs = record
        .first_top(ObjectId::Red)
        .ok_or_else(|| Error::validation("top_track", "no red observation"))?;
    let close = close_column(record).ok_or_else(|| Error::validation("A", "no close command"))?;
    let open = (close + 1..record.n)
        .find(|&k| record.a[4][k] > record.a[4][k - 1])
        .ok_or_else(|| Error::validation("A", "no open command after the grasp"))?;
    // The open starts from where the lower ended.
    let p = record.a_column(open - 1);
    Ok((obs.to_vec(), vec![p[0], p[1], p[2]]))
}
