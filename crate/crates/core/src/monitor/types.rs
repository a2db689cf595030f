use serde::{Deserialize, Serialize};

use crate::sim::{ObjectId, Position};

/// What an episode is trying to achieve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskTarget {
    /// Grasp only.
    Subtask1,
    /// Grasp followed by stack.
    Full,
}

impl TaskTarget {
    pub fn success_pattern(self) -> PatternId {
        match self {
            TaskTarget::Subtask1 => PatternId::GraspSuccess,
            TaskTarget::Full => PatternId::StackSuccess,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackUpdate {
    pub episode_id: u64,
    pub t: f64,
    pub object_id: ObjectId,
    pub position: Position,
    pub in_gripper: bool,
    pub visible: bool,
}

/// All track updates derived from one bottom-camera frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackBatch {
    pub frame_seq: u64,
    pub updates: Vec<TrackUpdate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternId {
    GraspSuccess,
    StackSuccess,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictEvent {
    pub episode_id: u64,
    pub pattern_id: PatternId,
    pub matched: bool,
    pub t: f64,
    pub streak: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum LifecycleCommand {
    Start { target: TaskTarget, deadline_s: f64 },
    SequenceComplete,
    /// The robot could not execute its motion plan.
    Fault,
    /// Wall-clock watchdog; carries the current episode time in the envelope.
    Timeout,
    ResetRequest,
    ResetOrder,
    ResetDone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLabel {
    Success,
    Failure,
    /// Not a label: the episode was lost to the monitoring infrastructure and is
    /// excluded from success statistics.
    InfrastructureFailure,
}

impl OutcomeLabel {
    /// The binary label `l`, if this outcome carries one.
    pub fn as_l(self) -> Option<u8> {
        match self {
            OutcomeLabel::Success => Some(1),
            OutcomeLabel::Failure => Some(0),
            OutcomeLabel::InfrastructureFailure => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeReason {
    GraspSuccess,
    StackSuccess,
    NoPattern,
    Timeout,
    Fault,
    Infrastructure,
}

impl From<PatternId> for OutcomeReason {
    fn from(p: PatternId) -> Self {
        match p {
            PatternId::GraspSuccess => OutcomeReason::GraspSuccess,
            PatternId::StackSuccess => OutcomeReason::StackSuccess,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub episode_id: u64,
    pub label: OutcomeLabel,
    pub reason: OutcomeReason,
    pub t: f64,
    /// Whether a grasp-success verdict was seen during the episode.
    pub grasp_confirmed: bool,
}

impl EpisodeOutcome {
    pub fn infrastructure(episode_id: u64, t: f64) -> Self {
        Self {
            episode_id,
            label: OutcomeLabel::InfrastructureFailure,
            reason: OutcomeReason::Infrastructure,
            t,
            grasp_confirmed: false,
        }
    }

    pub fn is_success(&self) -> bool {
        self.label == OutcomeLabel::Success
    }
}
