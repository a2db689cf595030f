//! Simulated cameras. The top and bottom "cameras" report detected object
//! centroids rather than images; the proprio channel reports the gripper pose.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::scene::SceneState;
use super::workspace::{ObjectId, Position, WorkspaceSpec};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    /// Standard deviation of additive centroid noise, meters.
    pub sigma_obs: f64,
    /// Half-extent of the gripper footprint seen from below, meters.
    pub footprint_half_extent: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            sigma_obs: 0.0005,
            footprint_half_extent: 0.002,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameSource {
    Top,
    Bottom,
    Proprio,
}

impl FrameSource {
    pub const ALL: [FrameSource; 3] = [FrameSource::Top, FrameSource::Bottom, FrameSource::Proprio];

    fn index(self) -> u64 {
        match self {
            FrameSource::Top => 0,
            FrameSource::Bottom => 1,
            FrameSource::Proprio => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectObservation {
    pub object: ObjectId,
    pub position: Position,
    pub visible: bool,
    /// Bottom camera only: whether the object lies within the gripper footprint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_footprint: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FramePayload {
    Top {
        objects: Vec<ObjectObservation>,
    },
    Bottom {
        objects: Vec<ObjectObservation>,
        aperture: f64,
    },
    Proprio {
        state: [f64; 5],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub source: FrameSource,
    pub seq: u64,
    pub episode_id: u64,
    pub t: f64,
    pub payload: FramePayload,
}

/// Deterministic per-episode noise source. Noise for a given
/// (tick, source, object) never depends on emission order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorRig {
    pub config: SensorConfig,
    pub seed: u64,
}

impl SensorRig {
    pub fn new(config: SensorConfig, seed: u64) -> Self {
        Self { config, seed }
    }

    fn noisy(&self, p: &Position, tick: u64, source: FrameSource, object: ObjectId) -> Position {
        let sigma = self.config.sigma_obs;
        if sigma <= 0.0 {
            return *p;
        }
        let obj = match object {
            ObjectId::Green => 0,
            ObjectId::Red => 1,
            ObjectId::Unknown => 2,
        };
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[tick, source.index(), obj]));
        let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
        Position::new(
            p.x + normal.sample(&mut rng),
            p.y + normal.sample(&mut rng),
            p.z + normal.sample(&mut rng),
        )
    }

    fn in_footprint(&self, spec: &WorkspaceSpec, scene: &SceneState, p: &Position) -> bool {
        let g = &scene.gripper;
        let h = self.config.footprint_half_extent;
        (p.x - g.x).abs() <= h
            && (p.y - g.y).abs() <= h
            && (p.z - g.z).abs() <= 0.5 * spec.cube_edge
    }

    /// Frames for one control tick, in the order top, bottom, proprio. Sequence
    /// numbers equal the tick index, so they increase strictly per source.
    pub fn emit(
        &self,
        spec: &WorkspaceSpec,
        scene: &SceneState,
        episode_id: u64,
        tick: u64,
    ) -> [SensorFrame; 3] {
        let objects = [
            (ObjectId::Green, scene.green_cube),
            (ObjectId::Red, scene.red_cube),
        ];
        let top = objects
            .iter()
            .map(|(id, p)| ObjectObservation {
                object: *id,
                position: self.noisy(p, tick, FrameSource::Top, *id),
                visible: true,
                in_footprint: None,
            })
            .collect();
        let bottom = objects
            .iter()
            .map(|(id, p)| {
                let observed = self.noisy(p, tick, FrameSource::Bottom, *id);
                ObjectObservation {
                    object: *id,
                    position: observed,
                    visible: true,
                    in_footprint: Some(self.in_footprint(spec, scene, &observed)),
                }
            })
            .collect();
        let frame = |source, payload| SensorFrame {
            source,
            seq: tick,
            episode_id,
            t: scene.time,
            payload,
        };
        [
            frame(FrameSource::Top, FramePayload::Top { objects: top }),
            frame(
                FrameSource::Bottom,
                FramePayload::Bottom {
                    objects: bottom,
                    aperture: scene.gripper.aperture,
                },
            ),
            frame(
                FrameSource::Proprio,
                FramePayload::Proprio {
                    state: scene.gripper.channels(),
                },
            ),
        ]
    }
}

/// Convenience wrapper over [`SensorRig::emit`].
pub fn emit_sensor_frames(
    spec: &WorkspaceSpec,
    rig: &SensorRig,
    scene: &SceneState,
    episode_id: u64,
    tick: u64,
) -> Vec<SensorFrame> {
    rig.emit(spec, scene, episode_id, tick).to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scene::init_scene;

    fn centroid(frame: &SensorFrame, id: ObjectId) -> Position {
        match &frame.payload {
            FramePayload::Top { objects } | FramePayload::Bottom { objects, .. } => {
                objects.iter().find(|o| o.object == id).unwrap().position
            }
            FramePayload::Proprio { .. } => panic!("no centroids in proprio"),
        }
    }

    #[test]
    fn zero_noise_reports_ground_truth() {
        let spec = WorkspaceSpec::default();
        let scene = init_scene(&spec, 1).unwrap();
        let rig = SensorRig::new(
            SensorConfig {
                sigma_obs: 0.0,
                ..Default::default()
            },
            3,
        );
        let frames = rig.emit(&spec, &scene, 0, 0);
        assert_eq!(centroid(&frames[0], ObjectId::Green), scene.green_cube);
        assert_eq!(centroid(&frames[1], ObjectId::Red), scene.red_cube);
        assert!(matches!(frames[2].payload, FramePayload::Proprio { state } if state == scene.gripper.channels()));
    }

    #[test]
    fn noise_std_matches_sigma() {
        let spec = WorkspaceSpec::default();
        let scene = init_scene(&spec, 1).unwrap();
        let rig = SensorRig::new(SensorConfig::default(), 11);
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|t| centroid(&rig.emit(&spec, &scene, 0, t)[0], ObjectId::Green).x - scene.green_cube.x)
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let std = var.sqrt();
        assert!((std - 0.0005).abs() < 0.1 * 0.0005, "std = {std}");
    }

    #[test]
    fn emission_is_pure_and_sequenced() {
        let spec = WorkspaceSpec::default();
        let scene = init_scene(&spec, 1).unwrap();
        let rig = SensorRig::new(SensorConfig::default(), 5);
        assert_eq!(rig.emit(&spec, &scene, 2, 7), rig.emit(&spec, &scene, 2, 7));
        let seqs: Vec<u64> = (0..5).map(|t| rig.emit(&spec, &scene, 2, t)[1].seq).collect();
        assert!(seqs.windows(2).all(|w| w[1] > w[0]));
    }
}
