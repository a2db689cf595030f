#![allow(dead_code)]

use autoboot_core::monitor::{EpisodeFeed, EpisodeOutcome, OutcomeLabel, TaskTarget, VerifierConfig, WireMessage};
use rand::Rng;
use autoboot_core::policy::{act_episode, Collector, Observation};
use autoboot_core::rng::{self, derive_seed, label};
use autoboot_core::rollout::Environment;
use autoboot_core::sim::{init_scene, run_episode, EpisodeRun, EpisodeSpec, SensorRig};

/// Simulate one episode on a fresh scene without monitoring it.
pub fn simulate(env: &Environment, episode_id: u64, seed: u64, collector: &Collector, target: TaskTarget) -> EpisodeRun {
    let scene = init_scene(&env.workspace, derive_seed(seed, &[episode_id, label("scene")])).unwrap();
    let rig = SensorRig::new(env.sensors, derive_seed(seed, &[episode_id, label("sensors")]));
    let obs = Observation::from_top_frame(&rig.emit(&env.workspace, &scene, episode_id, 0)[0]).unwrap();
    let mut act = rng::substream(seed, &[episode_id, label("act")]);
    let plan = act_episode(collector, &scene, &obs, &env.workspace, target, &mut act).unwrap();
    let spec = EpisodeSpec {
        workspace: &env.workspace,
        model: &env.model,
        rig: &rig,
        dwell_ticks: env.dwell_ticks,
    };
    let mut sim = rng::substream(seed, &[episode_id, label("sim")]);
    run_episode(&spec, &scene, episode_id, &plan.grasp, plan.stack.as_deref(), &mut sim).unwrap()
}

pub fn feed(run: &EpisodeRun, target: TaskTarget) -> EpisodeFeed {
    EpisodeFeed {
        episode_id: run.episode_id,
        target,
        frames: run.frames.clone(),
        end_t: run.final_state.time,
        fault: false,
    }
}

/// Alternates random and oracle collectors so both labels occur.
pub fn mixed_collector(i: u64) -> Collector {
    if i % 2 == 0 {
        Collector::random()
    } else {
        Collector::oracle()
    }
}

pub fn target_for(i: u64) -> TaskTarget {
    if (i / 2) % 2 == 0 {
        TaskTarget::Subtask1
    } else {
        TaskTarget::Full
    }
}

use autoboot_core::sim::ObjectId;
use autoboot_core::store::{BottomObservation, Dataset, EpisodeRecord, TopObservation, SCHEMA_VERSION};

/// A small valid episode whose initial green cube is at `green`.
pub fn record(id: u64, tag: &str, green: [f64; 2]) -> EpisodeRecord {
    let n = 2;
    EpisodeRecord {
        episode_id: id,
        stage_tag: tag.into(),
        task: TaskTarget::Subtask1,
        n,
        p: vec![vec![0.075; n]; 5],
        a: vec![vec![0.075; n]; 5],
        top_track: vec![
            vec![
                TopObservation { object: ObjectId::Green, xy: green },
                TopObservation { object: ObjectId::Red, xy: [0.075, 0.075] },
            ];
            n
        ],
        bottom_track: vec![vec![BottomObservation { object: ObjectId::Green, xy: green, in_gripper: false }]; n],
        l: 1,
        green_init: green,
        red_init: [0.075, 0.075],
        duration: 0.1,
        seed: id,
        schema_version: SCHEMA_VERSION,
    }
}

pub fn dataset(tag: &str, first_id: u64, points: &[[f64; 2]]) -> Dataset {
    Dataset::new(
        tag,
        points.iter().enumerate().map(|(i, &p)| record(first_id + i as u64, tag, p)).collect(),
    )
}

/// Three stages: random grasping, a policy trained on it, and a fixed-size
/// evaluation-style stage.
pub fn small_plan() -> Vec<autoboot_core::bootstrap::StageSpec> {
    serde_json::from_str(
        r#"[
            {"id": "R", "collector": {"kind": "random"}, "target": "subtask1", "stop": {"success_count": 6}},
            {"id": "P", "collector": {"kind": "policy"}, "target": "subtask1", "stop": {"success_count": 6},
             "training": [{"source": "R", "count": 6}]},
            {"id": "Q", "collector": {"kind": "policy"}, "target": "subtask1", "stop": {"episode_count": 15},
             "training": [{"source": "R", "count": 3, "balanced": true}, {"source": "P", "count": 3}]}
        ]"#,
    )
    .unwrap()
}

pub fn small_config(seed: u64) -> autoboot_core::store::RunConfig {
    let mut config = autoboot_core::store::RunConfig {
        seed,
        plan: small_plan(),
        ..Default::default()
    };
    config.eval.trials = 20;
    config.pipeline.transport = autoboot_core::monitor::TransportKind::Inline;
    config.policy.components = 2;
    config
}

fn overlap(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0].max(b[0]), a[1].max(b[1]), a[2].min(b[2]), a[3].min(b[3])]
}

fn area(r: [f64; 4]) -> f64 {
    (r[2] - r[0]).max(0.0) * (r[3] - r[1]).max(0.0)
}

/// Probability that a uniform pick over the workspace minus the keep-out box
/// lands in the grasp capture box, computed from rectangle areas.
pub fn analytic_grasp_probability(
    spec: &autoboot_core::sim::WorkspaceSpec,
    model: &autoboot_core::sim::SuccessModel,
    scene: &autoboot_core::sim::SceneState,
) -> f64 {
    let ws = [0.0, 0.0, spec.extent_x, spec.extent_y];
    let (g, r) = (scene.green_cube, scene.red_cube);
    let [hx, hy] = model.grasp_half_extents;
    let e = spec.exclusion_half_extent;
    let capture = overlap([g.x - hx, g.y - hy, g.x + hx, g.y + hy], ws);
    let keep_out = overlap([r.x - e, r.y - e, r.x + e, r.y + e], ws);
    let admissible = area(ws) - area(keep_out);
    (area(capture) - area(overlap(capture, keep_out))) / admissible
}

/// Probability that a uniform drop over the workspace volume stacks on `red`.
pub fn analytic_stack_probability(
    spec: &autoboot_core::sim::WorkspaceSpec,
    model: &autoboot_core::sim::SuccessModel,
    red: &autoboot_core::sim::Position,
) -> f64 {
    let ws = [0.0, 0.0, spec.extent_x, spec.extent_y];
    let [hx, hy] = model.stack_half_extents;
    let capture = overlap([red.x - hx, red.y - hy, red.x + hx, red.y + hy], ws);
    let (lo, hi) = autoboot_core::sim::SuccessModel::stack_z_window(spec.cube_edge);
    area(capture) / area(ws) * (hi.min(spec.extent_z) - lo.max(0.0)).max(0.0) / spec.extent_z
}

/// Outcome of `n` chance trials: successes, the sum of analytic
/// probabilities, and the sum of their binomial variances.
#[derive(Debug, Default, Clone, Copy)]
pub struct ChanceTally {
    pub trials: usize,
    pub successes: usize,
    pub expected: f64,
    pub variance: f64,
}

impl ChanceTally {
    fn add(&mut self, hit: bool, p: f64) {
        self.trials += 1;
        self.successes += hit as usize;
        self.expected += p;
        self.variance += p * (1.0 - p);
    }

    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// Distance of the observed count from its expectation, in standard
    /// deviations.
    pub fn z_score(&self) -> f64 {
        (self.successes as f64 - self.expected) / self.variance.sqrt()
    }
}

/// Random picks on fresh scenes, and random drops with the green cube held.
pub fn chance_trials(
    spec: &autoboot_core::sim::WorkspaceSpec,
    model: &autoboot_core::sim::SuccessModel,
    n: usize,
    seed: u64,
) -> (ChanceTally, ChanceTally) {
    use autoboot_core::sim::{
        grasp_outcome, init_scene, random_drop_target, random_pick_target, stack_outcome, ObjectId,
    };
    let mut rng = rng::stream(seed);
    let (mut grasp, mut stack) = (ChanceTally::default(), ChanceTally::default());
    for i in 0..n as u64 {
        let scene = init_scene(spec, derive_seed(seed, &[i])).unwrap();
        let pick = random_pick_target(&scene, spec, &mut rng).unwrap();
        let hit = grasp_outcome(&scene, &pick, model, &mut rng);
        grasp.add(hit, analytic_grasp_probability(spec, model, &scene));

        let mut held = scene;
        held.held_object = Some(ObjectId::Green);
        held.gripper.aperture = 0.0;
        let drop = random_drop_target(&held, spec, &mut rng).unwrap();
        stack.add(stack_outcome(&held, &drop, model, spec), analytic_stack_probability(spec, model, &held.red_cube));
    }
    (grasp, stack)
}

pub fn verifier(env: &Environment, confirm_frames: u32) -> VerifierConfig {
    VerifierConfig {
        confirm_frames,
        model: env.model,
        cube_edge: env.workspace.cube_edge,
    }
}

/// Deliver every message in order, plus duplicates at random later
/// positions. First deliveries keep their per-source order, as the transport
/// guarantees.
pub fn with_duplicates(msgs: &[WireMessage], p: f64, rng: &mut rng::SimRng) -> Vec<WireMessage> {
    let mut out: Vec<WireMessage> = Vec::with_capacity(msgs.len() * 2);
    let mut pending: Vec<(usize, WireMessage)> = Vec::new();
    for (i, m) in msgs.iter().enumerate() {
        out.push(m.clone());
        pending.retain(|(due, dup)| {
            if *due <= i {
                out.push(dup.clone());
                false
            } else {
                true
            }
        });
        if rng.random::<f64>() < p {
            pending.push((rng.random_range(i..msgs.len() + 5), m.clone()));
        }
    }
    out.extend(pending.into_iter().map(|(_, m)| m));
    out
}

pub fn labels(out: &[WireMessage], ep: u64) -> Vec<EpisodeOutcome> {
    out.iter()
        .filter(|m| m.episode_id == ep)
        .filter_map(|m| m.as_outcome().copied())
        .filter(|o| o.label != OutcomeLabel::InfrastructureFailure)
        .collect()
}

