use std::collections::{HashMap, HashSet, VecDeque};

use log::warn;

use super::types::{PatternId, TrackBatch, VerdictEvent};
use crate::sim::{ObjectId, Position, SuccessModel};

/// Aperture at or above which the gripper counts as open.
pub const OPEN_APERTURE: f64 = 0.9;
pub const PENDING_CAPACITY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifierConfig {
    pub confirm_frames: u32,
    pub model: SuccessModel,
    pub cube_edge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VerifierInput {
    Tracks(TrackBatch),
    Proprio {
        episode_id: u64,
        seq: u64,
        t: f64,
        state: [f64; 5],
    },
}

impl VerifierInput {
    fn episode_id(&self) -> Option<u64> {
        match self {
            VerifierInput::Tracks(b) => b.updates.first().map(|u| u.episode_id),
            VerifierInput::Proprio { episode_id, .. } => Some(*episode_id),
        }
    }
}

#[derive(Debug, Default)]
struct EpisodeCheck {
    last_track_seq: Option<u64>,
    last_proprio_seq: Option<u64>,
    grasp_streak: u32,
    stack_streak: u32,
    green: Option<Position>,
    red: Option<Position>,
    grasp_fired: bool,
    stack_fired: bool,
}

/// Checks tracked state against the success patterns and debounces matches
/// over `confirm_frames` consecutive frames.
#[derive(Debug)]
pub struct Verifier {
    config: VerifierConfig,
    running: HashMap<u64, EpisodeCheck>,
    closed: HashSet<u64>,
    pending: VecDeque<VerifierInput>,
    dropped: usize,
}

impl Verifier {
    pub fn new(config: VerifierConfig) -> Self {
        Self {
            config,
            running: HashMap::new(),
            closed: HashSet::new(),
            pending: VecDeque::new(),
            dropped: 0,
        }
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Begin checking an episode, replaying any buffered input for it.
    pub fn start(&mut self, episode_id: u64) -> Vec<VerdictEvent> {
        if self.closed.contains(&episode_id) || self.running.contains_key(&episode_id) {
            return Vec::new();
        }
        self.running.insert(episode_id, EpisodeCheck::default());
        let (mine, rest): (VecDeque<_>, VecDeque<_>) = std::mem::take(&mut self.pending)
            .into_iter()
            .partition(|i| i.episode_id() == Some(episode_id));
        self.pending = rest;
        mine.into_iter().flat_map(|i| self.verify(i)).collect()
    }

    /// Stop checking an episode; later input for it is ignored.
    pub fn close(&mut self, episode_id: u64) {
        self.running.remove(&episode_id);
        self.closed.insert(episode_id);
    }

    pub fn verify(&mut self, input: VerifierInput) -> Vec<VerdictEvent> {
        let Some(episode_id) = input.episode_id() else {
            return Vec::new();
        };
        if self.closed.contains(&episode_id) {
            return Vec::new();
        }
        let cfg = self.config;
        let Some(ep) = self.running.get_mut(&episode_id) else {
            if self.pending.len() >= PENDING_CAPACITY {
                warn!("verifier: buffer full, dropping update for unknown episode {episode_id}");
                self.dropped += 1;
            } else {
                self.pending.push_back(input);
            }
            return Vec::new();
        };
        let mut out = Vec::new();
        match input {
            VerifierInput::Tracks(batch) => {
                if ep.last_track_seq.is_some_and(|s| batch.frame_seq <= s) {
                    return out;
                }
                ep.last_track_seq = Some(batch.frame_seq);
                let mut held = false;
                let mut t = 0.0;
                for u in &batch.updates {
                    t = u.t;
                    match u.object_id {
                        ObjectId::Green => {
                            ep.green = Some(u.position);
                            held = u.in_gripper;
                        }
                        ObjectId::Red => ep.red = Some(u.position),
                        ObjectId::Unknown => {}
                    }
                }
                ep.grasp_streak = if held { ep.grasp_streak + 1 } else { 0 };
                if ep.grasp_streak >= cfg.confirm_frames && !ep.grasp_fired {
                    ep.grasp_fired = true;
                    out.push(VerdictEvent {
                        episode_id,
                        pattern_id: PatternId::GraspSuccess,
                        matched: true,
                        t,
                        streak: ep.grasp_streak,
                    });
                }
            }
            VerifierInput::Proprio { seq, t, state, .. } => {
                if ep.last_proprio_seq.is_some_and(|s| seq <= s) {
                    return out;
                }
                ep.last_proprio_seq = Some(seq);
                let open = state[4] >= OPEN_APERTURE;
                let stacked = match (ep.green, ep.red) {
                    (Some(g), Some(r)) => {
                        let (lo, hi) = SuccessModel::stack_z_window(cfg.cube_edge);
                        cfg.model.within_stack_box(g.x - r.x, g.y - r.y) && (lo..=hi).contains(&g.z)
                    }
                    _ => false,
                };
                ep.stack_streak = if open && stacked { ep.stack_streak + 1 } else { 0 };
                if ep.stack_streak >= cfg.confirm_frames && !ep.stack_fired {
                    ep.stack_fired = true;
                    out.push(VerdictEvent {
                        episode_id,
                        pattern_id: PatternId::StackSuccess,
                        matched: true,
                        t,
                        streak: ep.stack_streak,
                    });
                }
            }
        }
        out
    }
}
