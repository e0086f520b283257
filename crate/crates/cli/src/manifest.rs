use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{read_input, CliError, CliResult, Command, Io};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

/// Written next to every output as `<out>.manifest.json`. Holds no
/// timestamps, so identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// The full command, replayable with `dualsys rerun`.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub versions: BTreeMap<String, String>,
    pub inputs: Vec<OutputRecord>,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn records(paths: &[std::path::PathBuf]) -> CliResult<Vec<OutputRecord>> {
    paths
        .iter()
        .map(|p| {
            Ok(OutputRecord {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

impl RunManifest {
    pub(crate) fn new(subcommand: &str, command: &Command, seed: Option<u64>, io: &Io) -> CliResult<Self> {
        let versions = BTreeMap::from([
            ("dualsys".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("manifest".to_string(), "1".to_string()),
        ]);
        Ok(Self {
            subcommand: subcommand.to_string(),
            config: serde_json::to_value(command).expect("commands serialize"),
            seed,
            versions,
            inputs: records(&io.inputs)?,
            outputs: records(&io.outputs)?,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        serde_json::from_str(&read_input(path)?)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}
