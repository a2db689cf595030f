use rand::Rng;
use serde::{Deserialize, Serialize};

use super::workspace::{GripperPose, ObjectId, Position, WorkspaceSpec};
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

pub const MAX_REJECTION_ATTEMPTS: usize = 10_000;

/// Ground-truth state of the workspace. Cube positions are the center of the
/// cube footprint in xy and the height of its bottom face in z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub green_cube: Position,
    pub red_cube: Position,
    pub gripper: GripperPose,
    pub held_object: Option<ObjectId>,
    pub time: f64,
}

impl SceneState {
    pub fn position_of(&self, id: ObjectId) -> Option<Position> {
        match id {
            ObjectId::Green => Some(self.green_cube),
            ObjectId::Red => Some(self.red_cube),
            ObjectId::Unknown => None,
        }
    }

    pub fn is_holding(&self, id: ObjectId) -> bool {
        self.held_object == Some(id)
    }

    pub fn check_invariants(&self, spec: &WorkspaceSpec) -> Result<()> {
        for (name, p) in [("green_cube", &self.green_cube), ("red_cube", &self.red_cube)] {
            if !p.is_finite() || !spec.contains_xy(p.x, p.y) {
                return Err(Error::validation(name, format!("{p:?} outside workspace")));
            }
        }
        let g = &self.gripper;
        if !(g.x.is_finite() && g.y.is_finite()) || !spec.contains_xy(g.x, g.y) {
            return Err(Error::validation("gripper", "xy outside workspace"));
        }
        if !(0.0..=1.0).contains(&g.aperture) {
            return Err(Error::validation("gripper.aperture", "outside [0, 1]"));
        }
        if self.held_object.is_some() && !g.is_closed() {
            return Err(Error::validation("held_object", "held with open gripper"));
        }
        let both_on_table = self.held_object.is_none()
            && self.green_cube.z < spec.cube_edge
            && self.red_cube.z < spec.cube_edge;
        if both_on_table {
            let l1 = (self.green_cube.x - self.red_cube.x).abs()
                + (self.green_cube.y - self.red_cube.y).abs();
            if l1 < spec.cube_edge {
                return Err(Error::validation("green_cube", "interpenetrates red cube"));
            }
        }
        Ok(())
    }
}

pub fn home_pose(spec: &WorkspaceSpec) -> GripperPose {
    let (cx, cy) = spec.center();
    GripperPose {
        x: cx,
        y: cy,
        z: spec.extent_z,
        yaw: 0.0,
        aperture: 1.0,
    }
}

/// Place both cubes and park the gripper. Deterministic in `seed`.
pub fn init_scene(spec: &WorkspaceSpec, seed: u64) -> Result<SceneState> {
    spec.validate()?;
    let mut rng = rng::stream(seed);
    let (cx, cy) = spec.center();
    let r = spec.red_region_half_extent;
    let red = Position::new(
        rng.random_range(cx - r..=cx + r),
        rng.random_range(cy - r..=cy + r),
        0.0,
    );
    let (gx, gy) = sample_admissible_xy(spec, &red, &mut rng)?;
    Ok(SceneState {
        green_cube: Position::new(gx, gy, 0.0),
        red_cube: red,
        gripper: home_pose(spec),
        held_object: None,
        time: 0.0,
    })
}

/// Fresh scene after an episode terminates, seeded by a draw from `rng`.
pub fn reset_scene(spec: &WorkspaceSpec, rng: &mut SimRng) -> Result<SceneState> {
    init_scene(spec, rng.random())
}

/// Rejection-sample a point uniformly over the workspace minus the keep-out
/// box around `red`.
fn sample_admissible_xy(
    spec: &WorkspaceSpec,
    red: &Position,
    rng: &mut SimRng,
) -> Result<(f64, f64)> {
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let x = rng.random_range(0.0..=spec.extent_x);
        let y = rng.random_range(0.0..=spec.extent_y);
        let l1 = (x - red.x).abs() + (y - red.y).abs();
        if !spec.in_exclusion(red, x, y) && l1 >= spec.cube_edge {
            return Ok((x, y));
        }
    }
    Err(Error::Config(format!(
        "rejection sampling exceeded {MAX_REJECTION_ATTEMPTS} attempts"
    )))
}

/// Uniform pick target over the workspace minus the keep-out box. The returned
/// z is 0; primitive sequences control height.
pub fn random_pick_target(
    scene: &SceneState,
    spec: &WorkspaceSpec,
    rng: &mut SimRng,
) -> Result<Position> {
    let (x, y) = sample_admissible_xy(spec, &scene.red_cube, rng)?;
    Ok(Position::new(x, y, 0.0))
}

pub(crate) fn sample_drop_xyz(spec: &WorkspaceSpec, rng: &mut SimRng) -> Position {
    Position::new(
        rng.random_range(0.0..=spec.extent_x),
        rng.random_range(0.0..=spec.extent_y),
        rng.random_range(0.0..=spec.extent_z),
    )
}

/// Uniform drop-off target over the workspace volume. Requires the green cube
/// to be held.
pub fn random_drop_target(
    scene: &SceneState,
    spec: &WorkspaceSpec,
    rng: &mut SimRng,
) -> Result<Position> {
    if !scene.is_holding(ObjectId::Green) {
        return Err(Error::Precondition(
            "random drop target requested while nothing is held".into(),
        ));
    }
    Ok(sample_drop_xyz(spec, rng))
}
