//! On-disk layout of a run: `<root>/runs/<run-id>/<stage-id>/`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::{RunReport, StageDocument, StageResult};
use crate::error::{Error, Result};
use crate::policy::PolicyModel;
use crate::store::{read_dataset, write_dataset, Dataset, RunConfig};

/// Environment variable overriding the default output root.
pub const RUN_DIR_ENV: &str = "AUTOBOOT_RUN_DIR";

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const POLICY_FILE: &str = "policy.json";
pub const RESULT_FILE: &str = "result.json";
pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_FILE: &str = "config.json";

/// `explicit`, else `$AUTOBOOT_RUN_DIR`, else the current directory.
pub fn output_root(explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(RUN_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map_or_else(|| PathBuf::from("."), PathBuf::from),
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone)]
pub struct RunStore {
    dir: PathBuf,
}

impl RunStore {
    pub fn create(root: &Path, run_id: &str) -> Result<Self> {
        let dir = root.join("runs").join(run_id);
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    /// An existing run directory.
    pub fn open(dir: &Path) -> Result<Self> {
        if !dir.join(REPORT_FILE).is_file() {
            return Err(Error::Input(format!("{} has no {REPORT_FILE}", dir.display())));
        }
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn stage_dir(&self, id: &str) -> PathBuf {
        self.dir.join(id)
    }

    /// Remove the files a previous run may have left for stage `id`.
    pub fn clear_stage(&self, id: &str) -> Result<()> {
        let dir = self.stage_dir(id);
        for f in [DATASET_FILE, POLICY_FILE, RESULT_FILE] {
            match fs::remove_file(dir.join(f)) {
                Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn save_stage(&self, result: &StageResult) -> Result<()> {
        let dir = self.stage_dir(&result.summary.stage_id);
        fs::create_dir_all(&dir)?;
        write_dataset(&dir.join(DATASET_FILE), &result.dataset)?;
        if let Some(p) = &result.policy {
            p.save(&dir.join(POLICY_FILE))?;
        }
        write_json(&dir.join(RESULT_FILE), &result.document())
    }

    pub fn load_stage(&self, id: &str, config: &RunConfig) -> Result<StageResult> {
        let dir = self.stage_dir(id);
        let doc: StageDocument = read_json(&dir.join(RESULT_FILE))?;
        let dataset = read_dataset(&dir.join(DATASET_FILE), &config.workspace)?;
        let dataset = Dataset::new(id, dataset.episodes);
        let policy_path = dir.join(POLICY_FILE);
        let policy = if policy_path.is_file() {
            Some(PolicyModel::load(&policy_path)?)
        } else {
            None
        };
        Ok(StageResult {
            summary: doc.summary,
            attempts: doc.attempts,
            dataset,
            policy,
        })
    }

    pub fn save_config(&self, config: &RunConfig) -> Result<()> {
        write_json(&self.dir.join(CONFIG_FILE), config)
    }

    pub fn load_config(&self) -> Result<RunConfig> {
        crate::store::load_config(&self.dir.join(CONFIG_FILE))
    }

    pub fn save_report(&self, report: &RunReport) -> Result<()> {
        write_json(&self.dir.join(REPORT_FILE), report)
    }

    pub fn load_report(&self) -> Result<RunReport> {
        read_json(&self.dir.join(REPORT_FILE))
    }
}
