use std::collections::HashSet;

use super::types::LifecycleCommand;

/// Turns reset requests into reset orders for the robot, at most once per
/// episode.
#[derive(Debug, Default)]
pub struct ResetController {
    ordered: HashSet<u64>,
}

impl ResetController {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn on_request(&mut self, episode_id: u64) -> Option<LifecycleCommand> {
        self.ordered
            .insert(episode_id)
            .then_some(LifecycleCommand::ResetOrder)
    }
}
