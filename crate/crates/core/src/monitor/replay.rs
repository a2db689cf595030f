use std::io::BufRead;

use serde::Serialize;

use super::services::InlineChain;
use super::types::EpisodeOutcome;
use super::verifier::VerifierConfig;
use super::wire::{Body, Source, StreamDecoder};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub messages: usize,
    pub outcomes: Vec<EpisodeOutcome>,
}

/// Re-run the services over a driver message log and check that they produce
/// the logged outcomes. Infrastructure failures recorded by the driver restart
/// the services, as they did in the original run.
pub fn replay_log<R: BufRead>(log: R, verifier: VerifierConfig) -> Result<ReplayReport> {
    let mut chain = InlineChain::new(verifier);
    let mut expected = Vec::new();
    let mut produced = Vec::new();
    let mut messages = 0;
    for msg in StreamDecoder::new(log) {
        let msg = msg?;
        messages += 1;
        match (&msg.body, msg.source) {
            (Body::Outcome(o), Source::Driver) => {
                expected.push(*o);
                produced.push(*o);
                chain = InlineChain::new(verifier);
            }
            (Body::Outcome(o), _) => expected.push(*o),
            (_, s) if s.is_robot_side() => {
                produced.extend(chain.push(msg).iter().filter_map(|m| m.as_outcome().copied()));
            }
            _ => {}
        }
    }
    if let Some(i) = (0..expected.len().max(produced.len())).find(|&i| expected.get(i) != produced.get(i)) {
        return Err(Error::ReplayMismatch(format!(
            "outcome {i}: logged {:?}, replayed {:?}",
            expected.get(i),
            produced.get(i)
        )));
    }
    Ok(ReplayReport {
        messages,
        outcomes: produced,
    })
}
