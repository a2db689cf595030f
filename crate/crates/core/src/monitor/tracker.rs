use std::collections::{BTreeMap, HashMap};

use log::warn;

use super::types::TrackUpdate;
use crate::error::{Error, Result};
use crate::sim::{FramePayload, FrameSource, ObjectId, Position, SensorFrame};

/// Aperture below which the gripper counts as closed.
pub const CLOSED_APERTURE: f64 = 0.1;

#[derive(Debug, Default)]
struct EpisodeTracks {
    last_seq: Option<u64>,
    last_known: BTreeMap<ObjectId, Position>,
}

/// Turns bottom-camera detections into per-object track updates.
#[derive(Debug, Default)]
pub struct Tracker {
    episodes: HashMap<u64, EpisodeTracks>,
    dropped_frames: usize,
}

impl Tracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dropped_frames(&self) -> usize {
        self.dropped_frames
    }

    pub fn forget(&mut self, episode_id: u64) {
        self.episodes.remove(&episode_id);
    }

    /// One update per object in the frame. Duplicate or stale frames yield
    /// nothing; frames naming unknown objects are dropped.
    pub fn track_objects(&mut self, frame: &SensorFrame) -> Result<Vec<TrackUpdate>> {
        let FramePayload::Bottom { objects, aperture } = &frame.payload else {
            return Err(Error::Precondition(format!(
                "tracker expects bottom frames, got {:?}",
                frame.source
            )));
        };
        debug_assert_eq!(frame.source, FrameSource::Bottom);
        if objects.iter().any(|o| o.object == ObjectId::Unknown) {
            warn!(
                "episode {} frame {}: unknown object id, frame dropped",
                frame.episode_id, frame.seq
            );
            self.dropped_frames += 1;
            return Ok(Vec::new());
        }
        let ep = self.episodes.entry(frame.episode_id).or_default();
        if ep.last_seq.is_some_and(|s| frame.seq <= s) {
            return Ok(Vec::new());
        }
        ep.last_seq = Some(frame.seq);
        let closed = *aperture < CLOSED_APERTURE;
        let mut updates = Vec::with_capacity(objects.len());
        for obs in objects {
            if obs.visible {
                ep.last_known.insert(obs.object, obs.position);
                updates.push(TrackUpdate {
                    episode_id: frame.episode_id,
                    t: frame.t,
                    object_id: obs.object,
                    position: obs.position,
                    in_gripper: closed && obs.in_footprint.unwrap_or(false),
                    visible: true,
                });
            } else if let Some(&last) = ep.last_known.get(&obs.object) {
                updates.push(TrackUpdate {
                    episode_id: frame.episode_id,
                    t: frame.t,
                    object_id: obs.object,
                    position: last,
                    in_gripper: false,
                    visible: false,
                });
            }
        }
        Ok(updates)
    }
}
