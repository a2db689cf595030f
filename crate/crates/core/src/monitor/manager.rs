use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::types::{
    EpisodeOutcome, OutcomeLabel, OutcomeReason, PatternId, TaskTarget, VerdictEvent,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LifecycleState {
    Idle,
    Running,
    SuccessDetected,
    FailureDetected,
    Resetting,
}

impl LifecycleState {
    pub const ALL: [LifecycleState; 5] = [
        LifecycleState::Idle,
        LifecycleState::Running,
        LifecycleState::SuccessDetected,
        LifecycleState::FailureDetected,
        LifecycleState::Resetting,
    ];
}

/// Declared lifecycle edges.
pub fn is_declared_edge(from: LifecycleState, to: LifecycleState) -> bool {
    use LifecycleState::*;
    matches!(
        (from, to),
        (Idle, Running)
            | (Running, SuccessDetected)
            | (Running, FailureDetected)
            | (SuccessDetected, Resetting)
            | (FailureDetected, Resetting)
            | (Resetting, Idle)
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManagerEvent {
    Start { target: TaskTarget, deadline_s: f64 },
    Verdict(VerdictEvent),
    SequenceComplete,
    Fault,
    Timeout,
    ResetDone,
}

impl ManagerEvent {
    /// One representative of every event kind, for exhaustive checks.
    pub fn kinds() -> Vec<ManagerEvent> {
        let verdict = |pattern_id| {
            ManagerEvent::Verdict(VerdictEvent {
                episode_id: 0,
                pattern_id,
                matched: true,
                t: 0.0,
                streak: 5,
            })
        };
        vec![
            ManagerEvent::Start {
                target: TaskTarget::Subtask1,
                deadline_s: 30.0,
            },
            verdict(PatternId::GraspSuccess),
            verdict(PatternId::StackSuccess),
            ManagerEvent::SequenceComplete,
            ManagerEvent::Fault,
            ManagerEvent::Timeout,
            ManagerEvent::ResetDone,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ManagerOutput {
    Outcome(EpisodeOutcome),
    ResetRequest { episode_id: u64, t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLifecycle {
    pub episode_id: u64,
    pub state: LifecycleState,
    pub started_at: f64,
    pub deadline: f64,
    pub target: TaskTarget,
    pub outcome: Option<EpisodeOutcome>,
    pub grasp_confirmed: bool,
}

/// Owns the robot's episode lifecycle. One episode is active at a time; all
/// handlers are idempotent under duplicated or late messages.
#[derive(Debug, Default)]
pub struct EpisodeManager {
    current: Option<EpisodeLifecycle>,
    finished: HashSet<u64>,
    transitions: Vec<(u64, LifecycleState, LifecycleState)>,
}

impl EpisodeManager {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> LifecycleState {
        self.current
            .as_ref()
            .map_or(LifecycleState::Idle, |c| c.state)
    }

    pub fn current(&self) -> Option<&EpisodeLifecycle> {
        self.current.as_ref()
    }

    /// Every state change made so far, as `(episode, from, to)`.
    pub fn transitions(&self) -> &[(u64, LifecycleState, LifecycleState)] {
        &self.transitions
    }

    fn move_to(&mut self, to: LifecycleState) {
        let cur = self.current.as_mut().expect("active episode");
        debug_assert!(is_declared_edge(cur.state, to));
        self.transitions.push((cur.episode_id, cur.state, to));
        cur.state = to;
    }

    fn terminate(&mut self, label: OutcomeLabel, reason: OutcomeReason, t: f64) -> Vec<ManagerOutput> {
        let detected = match label {
            OutcomeLabel::Success => LifecycleState::SuccessDetected,
            _ => LifecycleState::FailureDetected,
        };
        self.move_to(detected);
        let cur = self.current.as_mut().expect("active episode");
        let outcome = EpisodeOutcome {
            episode_id: cur.episode_id,
            label,
            reason,
            t,
            grasp_confirmed: cur.grasp_confirmed,
        };
        cur.outcome = Some(outcome);
        let episode_id = cur.episode_id;
        self.move_to(LifecycleState::Resetting);
        vec![
            ManagerOutput::Outcome(outcome),
            ManagerOutput::ResetRequest { episode_id, t },
        ]
    }

    pub fn handle(&mut self, episode_id: u64, t: f64, event: ManagerEvent) -> Result<Vec<ManagerOutput>> {
        if self.finished.contains(&episode_id) {
            return Ok(Vec::new());
        }
        let active = self.current.as_ref().map(|c| (c.episode_id, c.state));
        match (event, active) {
            (ManagerEvent::Start { target, deadline_s }, None) => {
                self.current = Some(EpisodeLifecycle {
                    episode_id,
                    state: LifecycleState::Idle,
                    started_at: t,
                    deadline: t + deadline_s,
                    target,
                    outcome: None,
                    grasp_confirmed: false,
                });
                self.move_to(LifecycleState::Running);
                Ok(Vec::new())
            }
            (ManagerEvent::Start { .. }, Some((id, _))) if id == episode_id => Ok(Vec::new()),
            (ManagerEvent::Start { .. }, Some((id, state))) => Err(Error::StateConflict {
                episode_id,
                message: format!("start while episode {id} is {state:?}"),
            }),
            (_, Some((id, _))) if id != episode_id => Ok(Vec::new()),
            (_, None) => Ok(Vec::new()),
            (ManagerEvent::ResetDone, Some((_, LifecycleState::Resetting))) => {
                self.move_to(LifecycleState::Idle);
                self.current = None;
                self.finished.insert(episode_id);
                Ok(Vec::new())
            }
            (_, Some((_, LifecycleState::Running))) => {
                let cur = self.current.as_mut().expect("active episode");
                let deadline = cur.deadline;
                let target = cur.target;
                if t > deadline {
                    return Ok(self.terminate(OutcomeLabel::Failure, OutcomeReason::Timeout, t));
                }
                match event {
                    ManagerEvent::Verdict(v) if v.matched => {
                        if v.pattern_id == PatternId::GraspSuccess {
                            cur.grasp_confirmed = true;
                        }
                        if v.pattern_id == target.success_pattern() {
                            return Ok(self.terminate(OutcomeLabel::Success, v.pattern_id.into(), t));
                        }
                        Ok(Vec::new())
                    }
                    ManagerEvent::SequenceComplete => {
                        Ok(self.terminate(OutcomeLabel::Failure, OutcomeReason::NoPattern, t))
                    }
                    ManagerEvent::Fault => Ok(self.terminate(OutcomeLabel::Failure, OutcomeReason::Fault, t)),
                    // A timer tick before the deadline changes nothing.
                    _ => Ok(Vec::new()),
                }
            }
            _ => Ok(Vec::new()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(pattern_id: PatternId, t: f64) -> ManagerEvent {
        ManagerEvent::Verdict(VerdictEvent {
            episode_id: 1,
            pattern_id,
            matched: true,
            t,
            streak: 5,
        })
    }

    fn start(m: &mut EpisodeManager, target: TaskTarget) {
        m.handle(
            1,
            0.0,
            ManagerEvent::Start {
                target,
                deadline_s: 30.0,
            },
        )
        .unwrap();
    }

    fn outcomes(out: &[ManagerOutput]) -> Vec<EpisodeOutcome> {
        out.iter()
            .filter_map(|o| match o {
                ManagerOutput::Outcome(o) => Some(*o),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn grasp_verdict_labels_success() {
        let mut m = EpisodeManager::new();
        start(&mut m, TaskTarget::Subtask1);
        let out = m.handle(1, 2.0, verdict(PatternId::GraspSuccess, 2.0)).unwrap();
        let o = outcomes(&out);
        assert_eq!(o.len(), 1);
        assert_eq!(o[0].label.as_l(), Some(1));
        assert_eq!(o[0].reason, OutcomeReason::GraspSuccess);
        assert!(out.iter().any(|x| matches!(x, ManagerOutput::ResetRequest { .. })));
        assert_eq!(m.state(), LifecycleState::Resetting);
    }

    #[test]
    fn deadline_expiry_is_timeout_failure() {
        let mut m = EpisodeManager::new();
        start(&mut m, TaskTarget::Subtask1);
        assert!(m.handle(1, 29.0, ManagerEvent::Timeout).unwrap().is_empty());
        let o = outcomes(&m.handle(1, 30.05, ManagerEvent::Timeout).unwrap());
        assert_eq!(o[0].label.as_l(), Some(0));
        assert_eq!(o[0].reason, OutcomeReason::Timeout);
    }

    #[test]
    fn replayed_verdict_emits_single_outcome() {
        let mut m = EpisodeManager::new();
        start(&mut m, TaskTarget::Subtask1);
        let mut all = Vec::new();
        for _ in 0..3 {
            all.extend(m.handle(1, 1.0, verdict(PatternId::GraspSuccess, 1.0)).unwrap());
        }
        all.extend(m.handle(1, 2.0, ManagerEvent::SequenceComplete).unwrap());
        assert_eq!(outcomes(&all).len(), 1);
        m.handle(1, 3.0, ManagerEvent::ResetDone).unwrap();
        m.handle(1, 3.0, ManagerEvent::ResetDone).unwrap();
        assert!(m.handle(1, 3.0, verdict(PatternId::GraspSuccess, 3.0)).unwrap().is_empty());
        assert_eq!(m.state(), LifecycleState::Idle);
    }

    #[test]
    fn start_while_busy_conflicts() {
        let mut m = EpisodeManager::new();
        start(&mut m, TaskTarget::Full);
        let err = m
            .handle(
                2,
                0.0,
                ManagerEvent::Start {
                    target: TaskTarget::Full,
                    deadline_s: 30.0,
                },
            )
            .unwrap_err();
        assert!(matches!(err, Error::StateConflict { episode_id: 2, .. }));
    }

    #[test]
    fn grasp_verdict_in_full_task_only_marks_progress() {
        let mut m = EpisodeManager::new();
        start(&mut m, TaskTarget::Full);
        assert!(m.handle(1, 1.0, verdict(PatternId::GraspSuccess, 1.0)).unwrap().is_empty());
        let o = outcomes(&m.handle(1, 5.0, ManagerEvent::SequenceComplete).unwrap());
        assert_eq!(o[0].reason, OutcomeReason::NoPattern);
        assert!(o[0].grasp_confirmed);
    }

    #[test]
    fn only_declared_edges_are_taken() {
        // Drive the manager into each state, then apply every event kind.
        let reach = |s: LifecycleState| -> EpisodeManager {
            let mut m = EpisodeManager::new();
            if s == LifecycleState::Idle {
                return m;
            }
            start(&mut m, TaskTarget::Subtask1);
            if s == LifecycleState::Running {
                return m;
            }
            m.handle(1, 1.0, verdict(PatternId::GraspSuccess, 1.0)).unwrap();
            m
        };
        for state in [LifecycleState::Idle, LifecycleState::Running, LifecycleState::Resetting] {
            for ev in ManagerEvent::kinds() {
                let mut m = reach(state);
                let before = m.transitions().len();
                let _ = m.handle(1, 2.0, ev);
                for &(_, from, to) in &m.transitions()[before..] {
                    assert!(is_declared_edge(from, to), "{from:?} -> {to:?} via {ev:?}");
                }
            }
        }
        for from in LifecycleState::ALL {
            for to in LifecycleState::ALL {
                if is_declared_edge(from, to) {
                    assert_ne!(from, to);
                }
            }
        }
    }
}
