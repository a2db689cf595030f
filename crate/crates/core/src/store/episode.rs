use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::monitor::TaskTarget;
use crate::sim::{ObjectId, WorkspaceSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopObservation {
    pub object: ObjectId,
    pub xy: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BottomObservation {
    pub object: ObjectId,
    pub xy: [f64; 2],
    pub in_gripper: bool,
}

/// One persisted episode. `P` and `A` are stored channel-major: five rows of
/// `n` values (x, y, z, yaw, aperture).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeRecord {
    pub episode_id: u64,
    pub stage_tag: String,
    pub task: TaskTarget,
    pub n: usize,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub top_track: Vec<Vec<TopObservation>>,
    pub bottom_track: Vec<Vec<BottomObservation>>,
    pub l: u8,
    pub green_init: [f64; 2],
    pub red_init: [f64; 2],
    pub duration: f64,
    pub seed: u64,
    pub schema_version: u32,
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::validation(field, message)
}

impl EpisodeRecord {
    /// Proprioception column `k` as (x, y, z, yaw, aperture).
    pub fn p_column(&self, k: usize) -> [f64; 5] {
        std::array::from_fn(|c| self.p[c][k])
    }

    pub fn a_column(&self, k: usize) -> [f64; 5] {
        std::array::from_fn(|c| self.a[c][k])
    }

    pub fn is_success(&self) -> bool {
        self.l == 1
    }

    /// First top-camera observation of `object`.
    pub fn first_top(&self, object: ObjectId) -> Option<[f64; 2]> {
        self.top_track
            .first()?
            .iter()
            .find(|o| o.object == object)
            .map(|o| o.xy)
    }

    pub fn validate(&self, spec: &WorkspaceSpec) -> Result<()> {
        for (name, m) in [("P", &self.p), ("A", &self.a)] {
            if m.len() != 5 {
                return Err(invalid(name, format!("expected 5 rows, found {}", m.len())));
            }
            if let Some(row) = m.iter().position(|r| r.len() != self.n) {
                return Err(invalid(
                    name,
                    format!("row {row} has {} columns, n = {}", m[row].len(), self.n),
                ));
            }
            if m.iter().flatten().any(|v| !v.is_finite()) {
                return Err(invalid(name, "non-finite value"));
            }
        }
        if self.top_track.len() != self.n {
            return Err(invalid("top_track", format!("{} entries, n = {}", self.top_track.len(), self.n)));
        }
        if self.bottom_track.len() != self.n {
            return Err(invalid(
                "bottom_track",
                format!("{} entries, n = {}", self.bottom_track.len(), self.n),
            ));
        }
        if self.l > 1 {
            return Err(invalid("l", format!("label {} not in {{0, 1}}", self.l)));
        }
        for (name, p) in [("green_init", self.green_init), ("red_init", self.red_init)] {
            if !spec.contains_xy(p[0], p[1]) {
                return Err(invalid(name, format!("({}, {}) outside workspace", p[0], p[1])));
            }
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(invalid("duration", "must be a non-negative number"));
        }
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid("schema_version", format!("expected {SCHEMA_VERSION}")));
        }
        Ok(())
    }
}

/// Episodes of one stage (or of a composition of stages).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub stage_tag: String,
    pub episodes: Vec<EpisodeRecord>,
    /// Initial green xy of each episode, aligned with `episodes`.
    pub green_inits: Vec<[f64; 2]>,
}

impl Dataset {
    pub fn new(stage_tag: impl Into<String>, episodes: Vec<EpisodeRecord>) -> Self {
        let green_inits = episodes.iter().map(|e| e.green_init).collect();
        Self {
            stage_tag: stage_tag.into(),
            episodes,
            green_inits,
        }
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.episodes.iter().map(|e| e.episode_id).collect()
    }

    /// The first `k` episodes.
    pub fn head(&self, k: usize) -> Dataset {
        Dataset::new(self.stage_tag.clone(), self.episodes.iter().take(k).cloned().collect())
    }
}

/// Appends episodes to a JSONL file.
pub struct EpisodeWriter {
    out: BufWriter<File>,
}

impl EpisodeWriter {
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            out: BufWriter::new(file),
        })
    }

    pub fn write(&mut self, record: &EpisodeRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_episode(path: &Path, record: &EpisodeRecord) -> Result<()> {
    let mut w = EpisodeWriter::append(path)?;
    w.write(record)?;
    w.finish()
}

/// Write a whole dataset, replacing any existing file.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for e in &dataset.episodes {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn parse_episode_line(text: &str, line: usize, spec: &WorkspaceSpec) -> Result<EpisodeRecord> {
    let parse = |message: String| Error::Parse { line, message };
    let value: Value = serde_json::from_str(text).map_err(|e| parse(e.to_string()))?;
    let version = value
        .get("schema_version")
        .ok_or_else(|| invalid("schema_version", format!("missing at line {line}")))?;
    let found = version
        .as_u64()
        .ok_or_else(|| invalid("schema_version", format!("not an integer at line {line}")))?;
    if found != SCHEMA_VERSION as u64 {
        return Err(Error::SchemaVersion {
            line,
            found: found.min(u32::MAX as u64) as u32,
            expected: SCHEMA_VERSION,
        });
    }
    let record: EpisodeRecord = serde_json::from_value(value).map_err(|e| parse(e.to_string()))?;
    record.validate(spec).map_err(|e| match e {
        Error::Validation { field, message } => Error::Validation {
            field,
            message: format!("{message} (line {line})"),
        },
        other => other,
    })?;
    Ok(record)
}

/// Read a JSONL dataset. Lines are numbered from 1; blank lines are skipped.
pub fn read_dataset_from<R: BufRead>(reader: R, stage_tag: &str, spec: &WorkspaceSpec) -> Result<Dataset> {
    let mut episodes = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        episodes.push(parse_episode_line(&line, i + 1, spec)?);
    }
    Ok(Dataset::new(stage_tag, episodes))
}

/// Read a dataset file; the stage tag is taken from the episodes when they
/// agree, else from the file stem.
pub fn read_dataset(path: &Path, spec: &WorkspaceSpec) -> Result<Dataset> {
    let file = File::open(path)?;
    let mut ds = read_dataset_from(BufReader::new(file), "", spec)?;
    let first = ds.episodes.first().map(|e| e.stage_tag.clone());
    ds.stage_tag = match first {
        Some(tag) if ds.episodes.iter().all(|e| e.stage_tag == tag) => tag,
        _ => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    Ok(ds)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn record(id: u64, green: [f64; 2]) -> EpisodeRecord {
        let n = 3;
        EpisodeRecord {
            episode_id: id,
            stage_tag: "S1".into(),
            task: TaskTarget::Subtask1,
            n,
            p: vec![vec![0.075; n]; 5],
            a: vec![vec![0.075; n]; 5],
            top_track: vec![
                vec![
                    TopObservation {
                        object: ObjectId::Green,
                        xy: green,
                    },
                    TopObservation {
                        object: ObjectId::Red,
                        xy: [0.075, 0.075],
                    },
                ];
                n
            ],
            bottom_track: vec![
                vec![BottomObservation {
                    object: ObjectId::Green,
                    xy: green,
                    in_gripper: false,
                }];
                n
            ],
            l: 1,
            green_init: green,
            red_init: [0.075, 0.075],
            duration: 0.15,
            seed: id * 7,
            schema_version: SCHEMA_VERSION,
        }
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let ds = Dataset::new("S1", (0..3).map(|i| record(i, [0.01 * i as f64, 0.02])).collect());
        write_dataset(&path, &ds).unwrap();
        assert_eq!(read_dataset(&path, &WorkspaceSpec::default()).unwrap(), ds);
    }

    #[test]
    fn short_p_names_field() {
        let mut r = record(1, [0.02, 0.02]);
        r.p.pop();
        let line = serde_json::to_string(&r).unwrap();
        match parse_episode_line(&line, 1, &WorkspaceSpec::default()) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "P"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mixed_versions_fail_at_first_mismatch() {
        let good = serde_json::to_string(&record(1, [0.02, 0.02])).unwrap();
        let bad = good.replace("\"schema_version\":1", "\"schema_version\":2");
        let text = format!("{good}\n{good}\n{bad}\n{bad}\n");
        let err = read_dataset_from(text.as_bytes(), "x", &WorkspaceSpec::default()).unwrap_err();
        assert!(matches!(err, Error::SchemaVersion { line: 3, found: 2, expected: 1 }), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let good = serde_json::to_string(&record(1, [0.02, 0.02])).unwrap();
        let text = format!("{good}\n{{not json\n");
        let err = read_dataset_from(text.as_bytes(), "x", &WorkspaceSpec::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
