use super::motion::{execute_primitive, MotionPrimitive, TraceSegment};
use super::scene::SceneState;
use super::sensors::{SensorFrame, SensorRig};
use super::workspace::{ObjectId, SuccessModel, WorkspaceSpec};
use crate::error::Result;
use crate::rng::SimRng;

/// Ticks the robot holds still after its last primitive so the monitor can
/// confirm a pattern.
pub const DEFAULT_DWELL_TICKS: usize = 10;

/// Everything the simulator produced during one episode.
#[derive(Debug, Clone)]
pub struct EpisodeRun {
    pub episode_id: u64,
    pub initial: SceneState,
    pub final_state: SceneState,
    pub trace: TraceSegment,
    /// Sensor frames, three per tick, in emission order.
    pub frames: Vec<SensorFrame>,
    /// Ground-truth grasp outcome (`None` if no close happened while lowered).
    pub grasp: Option<bool>,
    /// Ground-truth stack outcome (`None` if the cube was never released).
    pub stack: Option<bool>,
    pub primitives: Vec<MotionPrimitive>,
}

impl EpisodeRun {
    pub fn duration(&self) -> f64 {
        self.final_state.time - self.initial.time
    }
}

pub struct EpisodeSpec<'a> {
    pub workspace: &'a WorkspaceSpec,
    pub model: &'a SuccessModel,
    pub rig: &'a SensorRig,
    pub dwell_ticks: usize,
}

/// Execute the grasp phase, then the stack phase if the green cube is held,
/// then dwell. Frames are emitted for the state before every tick.
pub fn run_episode(
    env: &EpisodeSpec<'_>,
    scene: &SceneState,
    episode_id: u64,
    grasp_phase: &[MotionPrimitive],
    stack_phase: Option<&[MotionPrimitive]>,
    rng: &mut SimRng,
) -> Result<EpisodeRun> {
    let mut state = *scene;
    let mut trace = TraceSegment::default();
    let mut executed = Vec::new();
    for prim in grasp_phase {
        let (next, seg) = execute_primitive(&state, env.workspace, env.model, prim, rng)?;
        state = next;
        trace.extend(seg);
        executed.push(*prim);
    }
    if let Some(stack) = stack_phase {
        if state.is_holding(ObjectId::Green) {
            for prim in stack {
                let (next, seg) = execute_primitive(&state, env.workspace, env.model, prim, rng)?;
                state = next;
                trace.extend(seg);
                executed.push(*prim);
            }
        }
    }
    let dt = 1.0 / env.workspace.control_rate;
    for _ in 0..env.dwell_ticks {
        let hold = state.gripper.channels();
        trace.p.push(hold);
        trace.a.push(hold);
        trace.pre_states.push(state);
        state.time += dt;
    }
    let frames = trace
        .pre_states
        .iter()
        .enumerate()
        .flat_map(|(tick, s)| env.rig.emit(env.workspace, s, episode_id, tick as u64))
        .collect();
    Ok(EpisodeRun {
        episode_id,
        initial: *scene,
        final_state: state,
        grasp: trace.grasp,
        stack: trace.stack,
        trace,
        frames,
        primitives: executed,
    })
}
