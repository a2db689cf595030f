//! Tabletop workspace simulation: scene sampling, motion primitives, outcome
//! models and simulated sensors.

pub mod episode;
pub mod motion;
pub mod scene;
pub mod sensors;
pub mod workspace;

pub use episode::{run_episode, EpisodeRun, EpisodeSpec, DEFAULT_DWELL_TICKS};
pub use motion::{
    execute_primitive, grasp_attempt, grasp_outcome, stack_outcome, GraspResult,
    MotionPrimitive, TraceSegment,
};
pub use scene::{
    init_scene, random_drop_target, random_pick_target, reset_scene, SceneState,
};
pub use sensors::{
    emit_sensor_frames, FramePayload, FrameSource, ObjectObservation, SensorConfig, SensorFrame,
    SensorRig,
};
pub use workspace::{
    GripperPose, ObjectId, Position, SuccessMode, SuccessModel, WorkspaceSpec,
};
