//! Episode persistence and run configuration.

pub mod episode;

pub use episode::{
    parse_episode_line, read_dataset, read_dataset_from, write_dataset, write_episode, BottomObservation, Dataset,
    EpisodeRecord, EpisodeWriter, TopObservation, SCHEMA_VERSION,
};
pub mod config;

pub use config::{load_config, EvalConfig, PolicyConfig, RunConfig, SuccessModelConfig};
