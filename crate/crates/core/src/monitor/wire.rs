//! Newline-delimited JSON wire format.
//!
//! One message per line with the fields `kind`, `seq`, `episode_id`, `t`,
//! `source`, `payload` and `checksum`. The checksum is the CRC32 (hex,
//! lowercase) of the compact JSON encoding of `payload` with object keys in
//! sorted order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::types::{EpisodeOutcome, LifecycleCommand, TrackBatch, VerdictEvent};
use crate::error::{Error, Result};
use crate::sim::{FramePayload, FrameSource, SensorFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageKind {
    Sensor,
    Track,
    Verdict,
    LifecycleCommand,
    Outcome,
}

impl MessageKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sensor" => MessageKind::Sensor,
            "track" => MessageKind::Track,
            "verdict" => MessageKind::Verdict,
            "lifecycle-command" => MessageKind::LifecycleCommand,
            "outcome" => MessageKind::Outcome,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Sensor => "sensor",
            MessageKind::Track => "track",
            MessageKind::Verdict => "verdict",
            MessageKind::LifecycleCommand => "lifecycle-command",
            MessageKind::Outcome => "outcome",
        }
    }
}

/// Emitter of a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Top,
    Bottom,
    Proprio,
    Driver,
    Tracker,
    Verifier,
    Manager,
    Reset,
}

impl From<FrameSource> for Source {
    fn from(s: FrameSource) -> Self {
        match s {
            FrameSource::Top => Source::Top,
            FrameSource::Bottom => Source::Bottom,
            FrameSource::Proprio => Source::Proprio,
        }
    }
}

impl Source {
    pub fn frame_source(self) -> Option<FrameSource> {
        match self {
            Source::Top => Some(FrameSource::Top),
            Source::Bottom => Some(FrameSource::Bottom),
            Source::Proprio => Some(FrameSource::Proprio),
            _ => None,
        }
    }

    /// Messages emitted by the robot side (inputs to the pipeline).
    pub fn is_robot_side(self) -> bool {
        matches!(
            self,
            Source::Top | Source::Bottom | Source::Proprio | Source::Driver
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Sensor(FramePayload),
    Track(TrackBatch),
    Verdict(VerdictEvent),
    Command(LifecycleCommand),
    Outcome(EpisodeOutcome),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireMessage {
    pub seq: u64,
    pub episode_id: u64,
    pub t: f64,
    pub source: Source,
    pub body: Body,
}

impl WireMessage {
    pub fn kind(&self) -> MessageKind {
        match self.body {
            Body::Sensor(_) => MessageKind::Sensor,
            Body::Track(_) => MessageKind::Track,
            Body::Verdict(_) => MessageKind::Verdict,
            Body::Command(_) => MessageKind::LifecycleCommand,
            Body::Outcome(_) => MessageKind::Outcome,
        }
    }

    pub fn from_frame(frame: SensorFrame) -> Self {
        Self {
            seq: frame.seq,
            episode_id: frame.episode_id,
            t: frame.t,
            source: frame.source.into(),
            body: Body::Sensor(frame.payload),
        }
    }

    pub fn command(source: Source, seq: u64, episode_id: u64, t: f64, cmd: LifecycleCommand) -> Self {
        Self {
            seq,
            episode_id,
            t,
            source,
            body: Body::Command(cmd),
        }
    }

    /// The sensor frame carried by this message, if any.
    pub fn as_frame(&self) -> Option<SensorFrame> {
        match (&self.body, self.source.frame_source()) {
            (Body::Sensor(payload), Some(source)) => Some(SensorFrame {
                source,
                seq: self.seq,
                episode_id: self.episode_id,
                t: self.t,
                payload: payload.clone(),
            }),
            _ => None,
        }
    }

    pub fn as_command(&self) -> Option<LifecycleCommand> {
        match self.body {
            Body::Command(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_outcome(&self) -> Option<&EpisodeOutcome> {
        match &self.body {
            Body::Outcome(o) => Some(o),
            _ => None,
        }
    }
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    kind: &'static str,
    seq: u64,
    episode_id: u64,
    t: f64,
    source: Source,
    payload: &'a Value,
    checksum: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvelopeIn {
    kind: String,
    seq: u64,
    episode_id: u64,
    t: f64,
    source: Source,
    payload: Value,
    checksum: String,
}

fn body_value(body: &Body) -> Value {
    let v = match body {
        Body::Sensor(p) => serde_json::to_value(p),
        Body::Track(p) => serde_json::to_value(p),
        Body::Verdict(p) => serde_json::to_value(p),
        Body::Command(p) => serde_json::to_value(p),
        Body::Outcome(p) => serde_json::to_value(p),
    };
    v.expect("message bodies always serialize")
}

pub fn checksum(payload: &Value) -> String {
    let canonical = serde_json::to_string(payload).expect("values always serialize");
    format!("{:08x}", crc32fast::hash(canonical.as_bytes()))
}

/// Encode one message as a single JSON line (no trailing newline).
pub fn encode_message(msg: &WireMessage) -> Result<Vec<u8>> {
    if !msg.t.is_finite() {
        return Err(Error::Input(format!("non-finite time {}", msg.t)));
    }
    let payload = body_value(&msg.body);
    let env = EnvelopeOut {
        kind: msg.kind().as_str(),
        seq: msg.seq,
        episode_id: msg.episode_id,
        t: msg.t,
        source: msg.source,
        checksum: checksum(&payload),
        payload: &payload,
    };
    Ok(serde_json::to_vec(&env)?)
}

pub fn write_message<W: Write>(w: &mut W, msg: &WireMessage) -> Result<()> {
    let mut line = encode_message(msg)?;
    line.push(b'\n');
    w.write_all(&line)?;
    Ok(())
}

fn find(haystack: &[u8], needle: &[u8]) -> usize {
    haystack
        .windows(needle.len())
        .position(|w| w == needle)
        .unwrap_or(0)
}

fn protocol(offset: usize, message: impl Into<String>) -> Error {
    Error::Protocol {
        offset,
        message: message.into(),
    }
}

/// Decode one line. A trailing `\n` or `\r\n` is accepted. Error offsets are
/// relative to the start of `bytes`.
pub fn decode_message(bytes: &[u8]) -> Result<WireMessage> {
    let mut line = bytes;
    if let Some(stripped) = line.strip_suffix(b"\n") {
        line = stripped;
    }
    if let Some(stripped) = line.strip_suffix(b"\r") {
        line = stripped;
    }
    if let Some(pos) = line.iter().position(|&b| b == b'\n') {
        return Err(protocol(pos, "embedded newline"));
    }
    let text = std::str::from_utf8(line)
        .map_err(|e| protocol(e.valid_up_to(), "invalid UTF-8"))?;
    let env: EnvelopeIn = serde_json::from_str(text).map_err(|e| {
        let offset = e.column().saturating_sub(1).min(line.len());
        protocol(offset, e.to_string())
    })?;
    let kind = MessageKind::parse(&env.kind)
        .ok_or_else(|| protocol(find(line, b"\"kind\""), format!("unknown kind `{}`", env.kind)))?;
    if checksum(&env.payload) != env.checksum {
        return Err(protocol(find(line, b"\"checksum\""), "checksum mismatch"));
    }
    if !env.t.is_finite() {
        return Err(protocol(find(line, b"\"t\""), "non-finite time"));
    }
    let payload_at = find(line, b"\"payload\"");
    let bad_payload = |e: serde_json::Error| protocol(payload_at, format!("bad {} payload: {e}", kind.as_str()));
    let body = match kind {
        MessageKind::Sensor => {
            let frame_source = env
                .source
                .frame_source()
                .ok_or_else(|| protocol(find(line, b"\"source\""), "sensor message from non-sensor source"))?;
            let payload: FramePayload = serde_json::from_value(env.payload).map_err(bad_payload)?;
            let matches = matches!(
                (&payload, frame_source),
                (FramePayload::Top { .. }, FrameSource::Top)
                    | (FramePayload::Bottom { .. }, FrameSource::Bottom)
                    | (FramePayload::Proprio { .. }, FrameSource::Proprio)
            );
            if !matches {
                return Err(protocol(payload_at, "payload type does not match source"));
            }
            Body::Sensor(payload)
        }
        MessageKind::Track => Body::Track(serde_json::from_value(env.payload).map_err(bad_payload)?),
        MessageKind::Verdict => Body::Verdict(serde_json::from_value(env.payload).map_err(bad_payload)?),
        MessageKind::LifecycleCommand => {
            Body::Command(serde_json::from_value(env.payload).map_err(bad_payload)?)
        }
        MessageKind::Outcome => Body::Outcome(serde_json::from_value(env.payload).map_err(bad_payload)?),
    };
    Ok(WireMessage {
        seq: env.seq,
        episode_id: env.episode_id,
        t: env.t,
        source: env.source,
        body,
    })
}

/// Reads messages from a line stream. A malformed line yields a protocol error
/// whose offset is absolute within the stream; decoding resumes at the next
/// newline.
pub struct StreamDecoder<R> {
    reader: R,
    offset: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> StreamDecoder<R> {
    pub fn new(reader: R) -> Self {
        Self {
            reader,
            offset: 0,
            buf: Vec::new(),
        }
    }

    /// Byte offset of the next unread line.
    pub fn offset(&self) -> usize {
        self.offset
    }
}

impl<R: BufRead> Iterator for StreamDecoder<R> {
    type Item = Result<WireMessage>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            let start = self.offset;
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(n) => self.offset += n,
                Err(e) => return Some(Err(e.into())),
            }
            if self.buf.iter().all(|b| b.is_ascii_whitespace()) {
                continue;
            }
            return Some(decode_message(&self.buf).map_err(|e| match e {
                Error::Protocol { offset, message } => Error::Protocol {
                    offset: start + offset,
                    message,
                },
                other => other,
            }));
        }
    }
}
