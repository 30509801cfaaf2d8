//! Per-stage provenance: parameters, seed and file digests. No timestamps,
//! so unchanged reruns leave the manifest byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::io::{read_json, sha256_file, to_json_bytes, write_atomic};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the manifest's directory when possible.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub params: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    /// Loads `path`, or starts an empty manifest when it does not exist.
    pub fn load_or_default(path: &Path) -> Result<Self, CliError> {
        if path.exists() {
            read_json(path)
        } else {
            Ok(Self {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                stages: BTreeMap::new(),
            })
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, &to_json_bytes(self))
    }
}

pub fn digest(path: &Path, base: &Path) -> Result<FileDigest, CliError> {
    let shown = path.strip_prefix(base).unwrap_or(path);
    Ok(FileDigest {
        path: shown.to_string_lossy().replace('\\', "/"),
        sha256: sha256_file(path)?,
    })
}
