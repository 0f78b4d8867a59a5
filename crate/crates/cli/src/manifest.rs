use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::Global;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    NotConverged,
}

/// Replayed outputs differ from the recorded ones.
#[derive(Debug)]
pub struct Mismatch(pub String);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "replay mismatch: {}", self.0)
    }
}

impl std::error::Error for Mismatch {}

/// 2 for usage, configuration and input errors, 4 for numerical failures.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<fluxfit::Error>() {
            return match err {
                fluxfit::Error::Numerical(_)
                | fluxfit::Error::Convergence { .. }
                | fluxfit::Error::UnreliableFit(_) => 4,
                _ => 2,
            };
        }
        if cause.downcast_ref::<Mismatch>().is_some() {
            return 4;
        }
    }
    2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn sha256(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn digest_file(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest { path: path.to_path_buf(), sha256: sha256(&bytes) })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Fully resolved command options.
    pub options: Value,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub started: String,
    pub finished: String,
    pub exit_code: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Manifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }
}

/// One command execution: output directory, recorded inputs and outputs.
pub struct Run {
    out: PathBuf,
    command: String,
    seed: u64,
    threads: Option<usize>,
    options: Value,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    started: chrono::DateTime<chrono::Utc>,
}

impl Run {
    pub fn start<T: Serialize>(global: &Global, command: &str, options: &T, inputs: &[PathBuf]) -> Result<Run> {
        std::fs::create_dir_all(&global.out).with_context(|| format!("creating {}", global.out.display()))?;
        let inputs = inputs.iter().map(|p| digest_file(p)).collect::<Result<Vec<_>>>()?;
        Ok(Run {
            out: global.out.clone(),
            command: command.into(),
            seed: global.seed,
            threads: global.threads,
            options: serde_json::to_value(options)?,
            inputs,
            outputs: Vec::new(),
            started: chrono::Utc::now(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let bytes = contents.as_ref();
        let path = self.out.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.retain(|o| o.path != Path::new(name));
        self.outputs.push(FileDigest { path: name.into(), sha256: sha256(bytes) });
        log::info!("wrote {}", path.display());
        Ok(())
    }

    /// Writes the manifest and passes `result` through.
    pub fn finish(self, result: Result<Status>) -> Result<Status> {
        let (exit_code, error) = match &result {
            Ok(Status::Success) => (0, None),
            Ok(Status::NotConverged) => (3, None),
            Err(e) => (exit_code(e), Some(format!("{e:#}"))),
        };
        let manifest = Manifest {
            tool: "fluxfit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.clone(),
            seed: self.seed,
            threads: self.threads,
            options: self.options,
            inputs: self.inputs,
            outputs: self.outputs,
            started: self.started.to_rfc3339(),
            finished: chrono::Utc::now().to_rfc3339(),
            exit_code,
            error,
        };
        let path = self.out.join(Manifest::file_name(&self.command));
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("writing {}", path.display()))?;
        result
    }
}
