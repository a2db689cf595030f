//! Monitored episodes: plan with a collector, simulate, label through the
//! monitoring pipeline, reset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitor::{EpisodeFeed, EpisodeOutcome, Pipeline, TaskTarget};
use crate::policy::{act_episode, ActionPlan, Collector, Observation};
use crate::rng::{self, derive_seed, label};
use crate::sim::{
    init_scene, reset_scene, run_episode, EpisodeRun, EpisodeSpec, ObjectId, SceneState, SensorConfig,
    SensorRig, SuccessModel, WorkspaceSpec, DEFAULT_DWELL_TICKS,
};
use crate::store::{BottomObservation, EpisodeRecord, TopObservation, SCHEMA_VERSION};

/// Everything needed to simulate an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub workspace: WorkspaceSpec,
    pub model: SuccessModel,
    pub sensors: SensorConfig,
    pub dwell_ticks: usize,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            workspace: WorkspaceSpec::default(),
            model: SuccessModel::default(),
            sensors: SensorConfig::default(),
            dwell_ticks: DEFAULT_DWELL_TICKS,
        }
    }
}

/// One monitored episode.
#[derive(Debug, Clone)]
pub struct Attempt {
    pub episode_id: u64,
    pub seed: u64,
    pub target: TaskTarget,
    pub initial: SceneState,
    pub observation: Observation,
    pub plan: ActionPlan,
    /// `None` if the robot rejected the motion plan.
    pub run: Option<EpisodeRun>,
    pub outcome: EpisodeOutcome,
    /// Simulated seconds from start to the end of the last primitive.
    pub duration: f64,
}

impl Attempt {
    /// The persisted form of this episode; `None` for infrastructure failures,
    /// which carry no label.
    pub fn to_record(&self, stage_tag: &str) -> Option<EpisodeRecord> {
        let l = self.outcome.label.as_l()?;
        let run = self.run.as_ref()?;
        let n = run.trace.p.len();
        let rows = |m: &Vec<[f64; 5]>| -> Vec<Vec<f64>> { (0..5).map(|c| m.iter().map(|col| col[c]).collect()).collect() };
        let mut top_track = Vec::with_capacity(n);
        let mut bottom_track = Vec::with_capacity(n);
        for f in &run.frames {
            match &f.payload {
                crate::sim::FramePayload::Top { objects } => top_track.push(
                    objects
                        .iter()
                        .map(|o| TopObservation {
                            object: o.object,
                            xy: o.position.xy(),
                        })
                        .collect(),
                ),
                crate::sim::FramePayload::Bottom { objects, aperture } => bottom_track.push(
                    objects
                        .iter()
                        .map(|o| BottomObservation {
                            object: o.object,
                            xy: o.position.xy(),
                            in_gripper: *aperture < crate::monitor::tracker::CLOSED_APERTURE
                                && o.in_footprint.unwrap_or(false),
                        })
                        .collect(),
                ),
                crate::sim::FramePayload::Proprio { .. } => {}
            }
        }
        Some(EpisodeRecord {
            episode_id: self.episode_id,
            stage_tag: stage_tag.to_string(),
            task: self.target,
            n,
            p: rows(&run.trace.p),
            a: rows(&run.trace.a),
            top_track,
            bottom_track,
            l,
            green_init: self.initial.green_cube.xy(),
            red_init: self.initial.red_cube.xy(),
            duration: self.duration,
            seed: self.seed,
            schema_version: SCHEMA_VERSION,
        })
    }
}

/// Runs monitored episodes on one robot. The reset ordered at the end of an
/// episode produces the next episode's scene.
pub struct Rollout {
    env: Environment,
    pipeline: Pipeline,
    seed: u64,
    next_scene: Option<SceneState>,
}

impl Rollout {
    pub fn new(env: Environment, pipeline: Pipeline, seed: u64) -> Result<Self> {
        env.workspace.validate()?;
        env.model.validate()?;
        Ok(Self {
            env,
            pipeline,
            seed,
            next_scene: None,
        })
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn episode_seed(&self, episode_id: u64) -> u64 {
        derive_seed(self.seed, &[episode_id])
    }

    /// Scene the next attempt will start from.
    pub fn peek_scene(&mut self, episode_id: u64) -> Result<SceneState> {
        if self.next_scene.is_none() {
            let seed = derive_seed(self.episode_seed(episode_id), &[label("scene")]);
            self.next_scene = Some(init_scene(&self.env.workspace, seed)?);
        }
        Ok(self.next_scene.expect("scene"))
    }

    pub fn attempt(&mut self, episode_id: u64, target: TaskTarget, collector: &Collector) -> Result<Attempt> {
        let initial = self.peek_scene(episode_id)?;
        self.next_scene = None;
        let seed = self.episode_seed(episode_id);
        let spec = self.env.workspace;
        let rig = SensorRig::new(self.env.sensors, derive_seed(seed, &[label("sensors")]));
        let observation = Observation::from_top_frame(&rig.emit(&spec, &initial, episode_id, 0)[0])?;
        let mut act_rng = rng::substream(seed, &[label("act")]);
        let plan = act_episode(collector, &initial, &observation, &spec, target, &mut act_rng)?;

        let episode_spec = EpisodeSpec {
            workspace: &spec,
            model: &self.env.model,
            rig: &rig,
            dwell_ticks: self.env.dwell_ticks,
        };
        let mut sim_rng = rng::substream(seed, &[label("sim")]);
        let run = match run_episode(&episode_spec, &initial, episode_id, &plan.grasp, plan.stack.as_deref(), &mut sim_rng) {
            Ok(run) => Some(run),
            Err(Error::MotionRejected(m)) => {
                log::warn!("episode {episode_id}: {m}");
                None
            }
            Err(e) => return Err(e),
        };
        let mut feed = EpisodeFeed {
            episode_id,
            target,
            frames: Vec::new(),
            end_t: run.as_ref().map_or(initial.time, |r| r.final_state.time),
            fault: run.is_none(),
        };
        let mut run = run;
        if let Some(r) = &mut run {
            feed.frames = std::mem::take(&mut r.frames);
        }
        let mut reset_rng = rng::substream(self.seed, &[label("reset"), episode_id]);
        let mut next = None;
        let monitored = self.pipeline.monitor(&feed, &mut || {
            let scene = reset_scene(&spec, &mut reset_rng)?;
            scene.check_invariants(&spec)?;
            next = Some(scene);
            Ok(())
        })?;
        self.next_scene = next;
        if let Some(r) = &mut run {
            r.frames = feed.frames;
        }
        let duration = run.as_ref().map_or(0.0, |r| r.duration());
        Ok(Attempt {
            episode_id,
            seed,
            target,
            initial,
            observation,
            plan,
            run,
            outcome: monitored.outcome,
            duration,
        })
    }
}

/// Ground truth for a finished attempt: (grasp held, stacked).
pub fn ground_truth(attempt: &Attempt) -> (bool, bool) {
    let Some(run) = &attempt.run else {
        return (false, false);
    };
    let grasp = run.grasp == Some(true);
    let stack = run.stack == Some(true) && run.final_state.green_cube.z > 0.0;
    debug_assert!(!stack || !run.final_state.is_holding(ObjectId::Green));
    (grasp, stack)
}
