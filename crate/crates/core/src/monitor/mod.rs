//! Episode monitoring: object tracking, success-pattern verification, episode
//! lifecycle management and resetting, connected by a line-oriented message
//! protocol.

pub mod manager;
pub mod replay;
pub mod reset;
pub mod services;
pub mod tracker;
pub mod types;
pub mod verifier;
pub mod wire;

pub use manager::{is_declared_edge, EpisodeLifecycle, EpisodeManager, LifecycleState, ManagerEvent, ManagerOutput};
pub use replay::{replay_log, ReplayReport};
pub use reset::ResetController;
pub use services::{
    build_services, driver_messages, run_services, EpisodeFeed, FaultPlan, InlineChain, Monitored, Pipeline,
    PipelineConfig, PipelineStats, Service, SimHandle, TransportKind,
};
pub use tracker::Tracker;
pub use types::*;
pub use verifier::{Verifier, VerifierConfig, VerifierInput};
pub use wire::{decode_message, encode_message, write_message, Body, MessageKind, Source, StreamDecoder, WireMessage};
