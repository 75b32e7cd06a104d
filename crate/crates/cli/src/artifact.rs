use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const ARTIFACT_DIR_VAR: &str = "NDNF_ARTIFACT_DIR";
pub const CONFIG_FILE: &str = "config.json";

/// Output root: `$NDNF_ARTIFACT_DIR`, or `artifacts` under the working
/// directory.
pub fn artifact_root() -> PathBuf {
    std::env::var_os(ARTIFACT_DIR_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("artifacts"))
}

pub fn hex_digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A run directory named `{command}-{env}-s{seed}-{hash}`, where the hash
/// covers everything that determines the run's outputs.
pub struct Artifact {
    pub dir: PathBuf,
}

impl Artifact {
    /// Creates the directory, refusing to touch an existing one unless
    /// `force` is set (in which case its contents are replaced).
    pub fn create(command: &str, env: &str, seed: u64, identity: &[&[u8]], force: bool) -> Result<Self, CliError> {
        let hash = hex_digest(identity);
        let dir = artifact_root().join(format!("{command}-{env}-s{seed}-{}", &hash[..12]));
        if dir.exists() {
            if !force {
                return Err(CliError::Exists(dir.display().to_string()));
            }
            fs::remove_dir_all(&dir).map_err(CliError::io(&dir))?;
        }
        fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
        Ok(Self { dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(&p, contents).map_err(CliError::io(&p))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, serde_json::to_string_pretty(value).expect("reports serialise") + "\n")
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(CliError::io(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
