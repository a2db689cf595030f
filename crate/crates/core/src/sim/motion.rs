use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scene::SceneState;
use super::workspace::{ObjectId, Position, SuccessModel, WorkspaceSpec};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Horizontal gripper speed, m/s.
pub const XY_SPEED: f64 = 0.05;
/// Seconds to traverse the full workspace height.
pub const Z_TRAVERSE_S: f64 = 1.0;
/// Seconds for a full open or close.
pub const GRIPPER_ACTUATION_S: f64 = 0.5;

/// A single position-controlled motion. Heights are normalized: `0` is the
/// table and `1` is the top of the workspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MotionPrimitive {
    Lift { z: f64 },
    MoveXy { x: f64, y: f64 },
    Lower { z: f64 },
    Close,
    Open,
}

impl MotionPrimitive {
    fn validate(&self, spec: &WorkspaceSpec) -> Result<()> {
        match *self {
            MotionPrimitive::Lift { z } | MotionPrimitive::Lower { z } => {
                if !(0.0..=1.0).contains(&z) {
                    return Err(Error::MotionRejected(format!(
                        "normalized height {z} outside [0, 1]"
                    )));
                }
            }
            MotionPrimitive::MoveXy { x, y } => {
                if !(x.is_finite() && y.is_finite()) || !spec.contains_xy(x, y) {
                    return Err(Error::MotionRejected(format!(
                        "xy target ({x}, {y}) outside workspace"
                    )));
                }
            }
            MotionPrimitive::Close | MotionPrimitive::Open => {}
        }
        Ok(())
    }
}

/// Per-tick record of one primitive. Column `k` of `p` is the gripper pose
/// before tick `k`; column `k` of `a` is the setpoint commanded at tick `k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceSegment {
    pub p: Vec<[f64; 5]>,
    pub a: Vec<[f64; 5]>,
    /// Scene before each tick; aligned with `p`.
    pub pre_states: Vec<SceneState>,
    /// Grasp resolution, if a close completed while lowered.
    pub grasp: Option<bool>,
    /// Stack resolution, if an open released the held cube.
    pub stack: Option<bool>,
}

impl TraceSegment {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn extend(&mut self, other: TraceSegment) {
        self.p.extend(other.p);
        self.a.extend(other.a);
        self.pre_states.extend(other.pre_states);
        self.grasp = other.grasp.or(self.grasp);
        self.stack = other.stack.or(self.stack);
    }
}

fn tick_count(spec: &WorkspaceSpec, from: [f64; 5], to: [f64; 5]) -> usize {
    let rate = spec.control_rate;
    let xy_step = XY_SPEED / rate;
    let z_step = spec.extent_z / (Z_TRAVERSE_S * rate);
    let ap_step = 1.0 / (GRIPPER_ACTUATION_S * rate);
    let dxy = (to[0] - from[0]).hypot(to[1] - from[1]);
    let dz = (to[2] - from[2]).abs();
    let dap = (to[4] - from[4]).abs();
    let steps = (dxy / xy_step).max(dz / z_step).max(dap / ap_step);
    ((steps - 1e-9).ceil() as usize).max(1)
}

/// Geometric capture test followed by the slip draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraspResult {
    Captured,
    Missed,
    Slipped,
}

pub fn grasp_attempt(
    scene: &SceneState,
    grip: &Position,
    model: &SuccessModel,
    rng: &mut SimRng,
) -> GraspResult {
    let dx = grip.x - scene.green_cube.x;
    let dy = grip.y - scene.green_cube.y;
    if !model.within_grasp_box(dx, dy) {
        return GraspResult::Missed;
    }
    if model.slip_probability > 0.0 && rng.random::<f64>() < model.slip_probability {
        return GraspResult::Slipped;
    }
    GraspResult::Captured
}

/// Whether closing the gripper at `grip` captures the green cube.
pub fn grasp_outcome(
    scene: &SceneState,
    grip: &Position,
    model: &SuccessModel,
    rng: &mut SimRng,
) -> bool {
    grasp_attempt(scene, grip, model, rng) == GraspResult::Captured
}

/// Whether releasing the held green cube at `release` leaves it stacked on the
/// red cube.
pub fn stack_outcome(
    scene: &SceneState,
    release: &Position,
    model: &SuccessModel,
    spec: &WorkspaceSpec,
) -> bool {
    let dx = release.x - scene.red_cube.x;
    let dy = release.y - scene.red_cube.y;
    let (lo, hi) = SuccessModel::stack_z_window(spec.cube_edge);
    model.within_stack_box(dx, dy) && (lo..=hi).contains(&release.z)
}

fn separate_from_red(spec: &WorkspaceSpec, red: &Position, x: f64, y: f64) -> (f64, f64) {
    let dx = x - red.x;
    let dy = y - red.y;
    if dx.abs() + dy.abs() >= spec.cube_edge {
        return (x, y);
    }
    // Topple off along the dominant axis, falling back to the opposite side at
    // a workspace boundary.
    let candidates = if dx.abs() >= dy.abs() {
        let s = if dx < 0.0 { -1.0 } else { 1.0 };
        [
            (red.x + s * spec.cube_edge, y),
            (red.x - s * spec.cube_edge, y),
        ]
    } else {
        let s = if dy < 0.0 { -1.0 } else { 1.0 };
        [
            (x, red.y + s * spec.cube_edge),
            (x, red.y - s * spec.cube_edge),
        ]
    };
    candidates
        .into_iter()
        .find(|&(cx, cy)| spec.contains_xy(cx, cy))
        .unwrap_or(candidates[0])
}

fn slip_displacement(spec: &WorkspaceSpec, scene: &SceneState) -> (f64, f64) {
    let g = &scene.green_cube;
    let dir = if g.x - scene.gripper.x < 0.0 { -1.0 } else { 1.0 };
    for s in [dir, -dir] {
        let x = g.x + s * spec.cube_edge;
        let l1 = (x - scene.red_cube.x).abs() + (g.y - scene.red_cube.y).abs();
        if spec.contains_xy(x, g.y) && l1 >= spec.cube_edge {
            return (x, g.y);
        }
    }
    (g.x, g.y)
}

/// Run one primitive to completion at the control rate.
pub fn execute_primitive(
    scene: &SceneState,
    spec: &WorkspaceSpec,
    model: &SuccessModel,
    prim: &MotionPrimitive,
    rng: &mut SimRng,
) -> Result<(SceneState, TraceSegment)> {
    prim.validate(spec)?;
    let start = scene.gripper.channels();
    let mut target = start;
    match *prim {
        MotionPrimitive::Lift { z } | MotionPrimitive::Lower { z } => target[2] = z * spec.extent_z,
        MotionPrimitive::MoveXy { x, y } => {
            target[0] = x;
            target[1] = y;
        }
        MotionPrimitive::Close => target[4] = 0.0,
        MotionPrimitive::Open => target[4] = 1.0,
    }
    let n = tick_count(spec, start, target);
    let dt = 1.0 / spec.control_rate;
    let mut state = *scene;
    let mut seg = TraceSegment::default();
    for k in 1..=n {
        let frac = k as f64 / n as f64;
        let setpoint: [f64; 5] = if k == n {
            target
        } else {
            std::array::from_fn(|i| start[i] + (target[i] - start[i]) * frac)
        };
        seg.p.push(state.gripper.channels());
        seg.a.push(setpoint);
        seg.pre_states.push(state);

        state.gripper = super::workspace::GripperPose::from_channels(setpoint);
        state.time += dt;

        if *prim == MotionPrimitive::Open && k == 1 && state.is_holding(ObjectId::Green) {
            let release = state.gripper.position();
            let ok = stack_outcome(&state, &release, model, spec);
            state.held_object = None;
            state.green_cube = if ok {
                Position::new(release.x, release.y, spec.cube_edge)
            } else {
                let (x, y) = spec.clamp_xy(release.x, release.y);
                let (x, y) = separate_from_red(spec, &state.red_cube, x, y);
                Position::new(x, y, 0.0)
            };
            seg.stack = Some(ok);
        }
        if let Some(id) = state.held_object {
            let p = state.gripper.position();
            match id {
                ObjectId::Green => state.green_cube = p,
                ObjectId::Red => state.red_cube = p,
                ObjectId::Unknown => {}
            }
        }
        let lowered = state.gripper.z <= 0.5 * spec.cube_edge;
        if *prim == MotionPrimitive::Close && k == n && state.held_object.is_none() && lowered {
            let grip = state.gripper.position();
            let result = grasp_attempt(&state, &grip, model, rng);
            match result {
                GraspResult::Captured => {
                    state.held_object = Some(ObjectId::Green);
                    state.green_cube = grip;
                }
                GraspResult::Slipped => {
                    let (x, y) = slip_displacement(spec, &state);
                    state.green_cube.x = x;
                    state.green_cube.y = y;
                }
                GraspResult::Missed => {}
            }
            seg.grasp = Some(result == GraspResult::Captured);
        }
    }
    Ok((state, seg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sim::scene::init_scene;

    fn lowered_over(scene: &SceneState, dx: f64, dy: f64) -> SceneState {
        let mut s = *scene;
        s.gripper.x = s.green_cube.x + dx;
        s.gripper.y = s.green_cube.y + dy;
        s.gripper.z = 0.0;
        s
    }

    #[test]
    fn lift_from_table_takes_one_second() {
        let spec = WorkspaceSpec::default();
        let mut scene = init_scene(&spec, 1).unwrap();
        scene.gripper.z = 0.0;
        let (out, seg) = execute_primitive(
            &scene,
            &spec,
            &SuccessModel::default(),
            &MotionPrimitive::Lift { z: 1.0 },
            &mut rng::stream(0),
        )
        .unwrap();
        assert_eq!(seg.len(), 20);
        assert_eq!(out.gripper.z, spec.extent_z);
        assert!((out.time - 1.0).abs() < 1e-12);
        assert_eq!(seg.p[0][2], 0.0);
    }

    #[test]
    fn move_to_current_position_is_one_tick() {
        let spec = WorkspaceSpec::default();
        let scene = init_scene(&spec, 2).unwrap();
        let prim = MotionPrimitive::MoveXy {
            x: scene.gripper.x,
            y: scene.gripper.y,
        };
        let (out, seg) = execute_primitive(
            &scene,
            &spec,
            &SuccessModel::default(),
            &prim,
            &mut rng::stream(0),
        )
        .unwrap();
        assert_eq!(seg.len(), 1);
        let mut expected = scene;
        expected.time = out.time;
        assert_eq!(out, expected);
    }

    #[test]
    fn out_of_workspace_motion_rejected() {
        let spec = WorkspaceSpec::default();
        let scene = init_scene(&spec, 2).unwrap();
        let res = execute_primitive(
            &scene,
            &spec,
            &SuccessModel::default(),
            &MotionPrimitive::MoveXy { x: 0.2, y: 0.05 },
            &mut rng::stream(0),
        );
        assert!(matches!(res, Err(Error::MotionRejected(_))));
    }

    #[test]
    fn close_over_center_grasps_in_fig2b() {
        let spec = WorkspaceSpec::default();
        let scene = lowered_over(&init_scene(&spec, 3).unwrap(), 0.0, 0.0);
        let (out, seg) = execute_primitive(
            &scene,
            &spec,
            &SuccessModel::fig2b(),
            &MotionPrimitive::Close,
            &mut rng::stream(0),
        )
        .unwrap();
        assert_eq!(out.held_object, Some(ObjectId::Green));
        assert_eq!(seg.grasp, Some(true));
        assert_eq!(seg.len(), 10);
    }

    #[test]
    fn grasp_boundary_is_inclusive() {
        let spec = WorkspaceSpec::default();
        let scene = init_scene(&spec, 4).unwrap();
        let g = scene.green_cube;
        let m = SuccessModel::fig2b();
        let mut r = rng::stream(0);
        // Offsets chosen so the float subtraction reproduces the boundary.
        let at = |dx: f64, dy: f64| Position::new(g.x + dx, g.y + dy, 0.0);
        let mut s = scene;
        s.green_cube = Position::new(0.0, 0.0, 0.0);
        assert!(grasp_outcome(&s, &Position::new(0.0025, 0.0025, 0.0), &m, &mut r));
        assert!(!grasp_outcome(&s, &Position::new(0.0026, 0.0, 0.0), &m, &mut r));
        assert!(grasp_outcome(&scene, &at(0.0, 0.0), &m, &mut r));
    }

    #[test]
    fn close_in_the_air_grasps_nothing() {
        let spec = WorkspaceSpec::default();
        let mut scene = lowered_over(&init_scene(&spec, 5).unwrap(), 0.0, 0.0);
        scene.gripper.z = spec.extent_z;
        let (out, seg) = execute_primitive(
            &scene,
            &spec,
            &SuccessModel::fig2b(),
            &MotionPrimitive::Close,
            &mut rng::stream(0),
        )
        .unwrap();
        assert_eq!(out.held_object, None);
        assert_eq!(seg.grasp, None);
    }

    #[test]
    fn stack_outcome_geometry() {
        let spec = WorkspaceSpec::default();
        let mut scene = init_scene(&spec, 6).unwrap();
        scene.red_cube = Position::new(0.0, 0.0, 0.0);
        let m = SuccessModel::fig2b();
        assert!(stack_outcome(&scene, &Position::new(0.0, 0.0, 0.01), &m, &spec));
        assert!(!stack_outcome(&scene, &Position::new(0.0030, 0.0, 0.01), &m, &spec));
        assert!(!stack_outcome(&scene, &Position::new(0.0, 0.0, 0.02), &m, &spec));
        assert!(stack_outcome(&scene, &Position::new(0.0029, 0.0036, 0.005), &m, &spec));
    }

    #[test]
    fn release_over_red_stacks_and_elsewhere_drops() {
        let spec = WorkspaceSpec::default();
        let model = SuccessModel::fig2b();
        let base = init_scene(&spec, 7).unwrap();
        let mut held = base;
        held.held_object = Some(ObjectId::Green);
        held.gripper.aperture = 0.0;
        held.gripper.x = base.red_cube.x;
        held.gripper.y = base.red_cube.y;
        held.gripper.z = spec.cube_edge;
        held.green_cube = held.gripper.position();
        let (out, seg) =
            execute_primitive(&held, &spec, &model, &MotionPrimitive::Open, &mut rng::stream(0))
                .unwrap();
        assert_eq!(seg.stack, Some(true));
        assert_eq!(out.green_cube.z, spec.cube_edge);
        assert_eq!(out.held_object, None);
        out.check_invariants(&spec).unwrap();

        held.gripper.z = 0.0;
        held.green_cube = held.gripper.position();
        let (out, seg) =
            execute_primitive(&held, &spec, &model, &MotionPrimitive::Open, &mut rng::stream(0))
                .unwrap();
        assert_eq!(seg.stack, Some(false));
        assert_eq!(out.green_cube.z, 0.0);
        out.check_invariants(&spec).unwrap();
    }

    #[test]
    fn held_cube_moves_with_gripper() {
        let spec = WorkspaceSpec::default();
        let scene = lowered_over(&init_scene(&spec, 8).unwrap(), 0.0, 0.0);
        let model = SuccessModel::fig2b();
        let mut r = rng::stream(0);
        let (s, _) = execute_primitive(&scene, &spec, &model, &MotionPrimitive::Close, &mut r).unwrap();
        let (s, seg) =
            execute_primitive(&s, &spec, &model, &MotionPrimitive::Lift { z: 1.0 }, &mut r).unwrap();
        assert_eq!(s.green_cube.z, spec.extent_z);
        for st in &seg.pre_states {
            assert_eq!(st.green_cube, st.gripper.position());
        }
    }

    #[test]
    fn slip_knocks_cube_out_of_gripper() {
        let spec = WorkspaceSpec::default();
        let scene = lowered_over(&init_scene(&spec, 9).unwrap(), 0.0, 0.0);
        let model = SuccessModel {
            slip_probability: 1.0,
            ..SuccessModel::fig2b()
        };
        let (out, seg) =
            execute_primitive(&scene, &spec, &model, &MotionPrimitive::Close, &mut rng::stream(1))
                .unwrap();
        assert_eq!(seg.grasp, Some(false));
        assert_eq!(out.held_object, None);
        let d = (out.green_cube.x - out.gripper.x).abs();
        assert!((d - spec.cube_edge).abs() < 1e-12);
        out.check_invariants(&spec).unwrap();
    }
}
