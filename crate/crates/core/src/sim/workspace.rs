use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of the tabletop workspace. All lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkspaceSpec {
    pub extent_x: f64,
    pub extent_y: f64,
    pub extent_z: f64,
    pub cube_edge: f64,
    /// Half-extent of the square keep-out box around the red cube, applied to
    /// random pick targets and to green-cube placement.
    pub exclusion_half_extent: f64,
    /// Control ticks per second.
    pub control_rate: f64,
    /// Half-width of the side of the central square in which the red cube is
    /// placed.
    pub red_region_half_extent: f64,
}

impl Default for WorkspaceSpec {
    fn default() -> Self {
        Self {
            extent_x: 0.15,
            extent_y: 0.15,
            extent_z: 0.03,
            cube_edge: 0.01,
            exclusion_half_extent: 0.03,
            control_rate: 20.0,
            red_region_half_extent: 0.025,
        }
    }
}

impl WorkspaceSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.extent_x,
            self.extent_y,
            self.extent_z,
            self.cube_edge,
            self.exclusion_half_extent,
            self.control_rate,
            self.red_region_half_extent,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("workspace parameters must be finite".into()));
        }
        if self.extent_x <= 0.0 || self.extent_y <= 0.0 || self.extent_z <= 0.0 {
            return Err(Error::Config("workspace extents must be positive".into()));
        }
        if self.cube_edge <= 0.0 || self.cube_edge >= self.extent_x.min(self.extent_y) {
            return Err(Error::Config(format!(
                "cube_edge {} must lie in (0, {})",
                self.cube_edge,
                self.extent_x.min(self.extent_y)
            )));
        }
        if self.exclusion_half_extent < self.cube_edge {
            return Err(Error::Config(format!(
                "exclusion_half_extent {} must be at least cube_edge {}",
                self.exclusion_half_extent, self.cube_edge
            )));
        }
        if 2.0 * self.exclusion_half_extent >= self.extent_x.min(self.extent_y) {
            return Err(Error::Config(format!(
                "exclusion box of half-extent {} covers the whole workspace",
                self.exclusion_half_extent
            )));
        }
        if self.control_rate <= 0.0 {
            return Err(Error::Config("control_rate must be positive".into()));
        }
        if self.red_region_half_extent < 0.0
            || 2.0 * self.red_region_half_extent > self.extent_x.min(self.extent_y)
        {
            return Err(Error::Config(
                "red_region_half_extent must fit inside the workspace".into(),
            ));
        }
        Ok(())
    }

    pub fn center(&self) -> (f64, f64) {
        (self.extent_x / 2.0, self.extent_y / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.extent_x * self.extent_y
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        (0.0..=self.extent_x).contains(&x) && (0.0..=self.extent_y).contains(&y)
    }

    pub fn contains(&self, p: &Position) -> bool {
        self.contains_xy(p.x, p.y) && (0.0..=self.extent_z).contains(&p.z)
    }

    pub fn clamp_xy(&self, x: f64, y: f64) -> (f64, f64) {
        (x.clamp(0.0, self.extent_x), y.clamp(0.0, self.extent_y))
    }

    /// True if `(x, y)` falls strictly inside the keep-out box around `red`.
    pub fn in_exclusion(&self, red: &Position, x: f64, y: f64) -> bool {
        (x - red.x).abs().max((y - red.y).abs()) < self.exclusion_half_extent
    }

    /// Area of the workspace not covered by the keep-out box around `red`.
    pub fn admissible_area(&self, red: &Position) -> f64 {
        let h = self.exclusion_half_extent;
        let wx = (red.x + h).min(self.extent_x) - (red.x - h).max(0.0);
        let wy = (red.y + h).min(self.extent_y) - (red.y - h).max(0.0);
        self.area() - wx.max(0.0) * wy.max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    /// 0 = closed, 1 = fully open.
    pub aperture: f64,
}

impl GripperPose {
    /// The five proprioception channels `(x, y, z, yaw, aperture)`.
    pub fn channels(&self) -> [f64; 5] {
        [self.x, self.y, self.z, self.yaw, self.aperture]
    }

    pub fn from_channels(c: [f64; 5]) -> Self {
        Self {
            x: c[0],
            y: c[1],
            z: c[2],
            yaw: c[3],
            aperture: c[4],
        }
    }

    pub fn position(&self) -> Position {
        Position::new(self.x, self.y, self.z)
    }

    pub fn is_closed(&self) -> bool {
        self.aperture < 0.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectId {
    Green,
    Red,
    /// Any object name the pipeline does not know about.
    #[serde(other)]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuccessMode {
    /// Capture boxes exactly as printed for the physical detector.
    Fig2b,
    /// Capture boxes enlarged so that random actions succeed at the observed
    /// chance rates (5% grasp, 2% stack).
    RateCalibrated,
}

/// Tolerance boxes deciding whether a grasp or a stack succeeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuccessModel {
    pub grasp_half_extents: [f64; 2],
    pub stack_half_extents: [f64; 2],
    pub mode: SuccessMode,
    #[serde(default)]
    pub slip_probability: f64,
}

impl Default for SuccessModel {
    fn default() -> Self {
        Self::rate_calibrated()
    }
}

impl SuccessModel {
    pub const FIG2B_GRASP: [f64; 2] = [0.0025, 0.0025];
    pub const FIG2B_STACK: [f64; 2] = [0.0029, 0.0036];
    pub const CALIBRATED_GRASP: [f64; 2] = [0.01677, 0.01677];
    pub const CALIBRATED_STACK: [f64; 2] = [0.0165, 0.0205];

    pub fn fig2b() -> Self {
        Self {
            grasp_half_extents: Self::FIG2B_GRASP,
            stack_half_extents: Self::FIG2B_STACK,
            mode: SuccessMode::Fig2b,
            slip_probability: 0.0,
        }
    }

    pub fn rate_calibrated() -> Self {
        Self {
            grasp_half_extents: Self::CALIBRATED_GRASP,
            stack_half_extents: Self::CALIBRATED_STACK,
            mode: SuccessMode::RateCalibrated,
            slip_probability: 0.0,
        }
    }

    pub fn from_mode(mode: SuccessMode) -> Self {
        match mode {
            SuccessMode::Fig2b => Self::fig2b(),
            SuccessMode::RateCalibrated => Self::rate_calibrated(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let extents = self
            .grasp_half_extents
            .iter()
            .chain(self.stack_half_extents.iter());
        for &h in extents {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Config(format!(
                    "success-model half-extents must be positive, got {h}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.slip_probability) {
            return Err(Error::Config(format!(
                "slip_probability {} outside [0, 1]",
                self.slip_probability
            )));
        }
        if self.mode == SuccessMode::Fig2b
            && (self.grasp_half_extents != Self::FIG2B_GRASP
                || self.stack_half_extents != Self::FIG2B_STACK)
        {
            return Err(Error::Config(
                "fig2b mode requires the printed tolerance boxes".into(),
            ));
        }
        Ok(())
    }

    /// Release-height window for a successful stack, relative to cube edge.
    pub fn stack_z_window(cube_edge: f64) -> (f64, f64) {
        (0.5 * cube_edge, 1.5 * cube_edge)
    }

    pub fn within_stack_box(&self, dx: f64, dy: f64) -> bool {
        dx.abs() <= self.stack_half_extents[0] && dy.abs() <= self.stack_half_extents[1]
    }

    pub fn within_grasp_box(&self, dx: f64, dy: f64) -> bool {
        dx.abs() <= self.grasp_half_extents[0] && dy.abs() <= self.grasp_half_extents[1]
    }
}
