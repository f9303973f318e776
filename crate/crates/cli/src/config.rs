//! Flat `key=value` config files, flag/file merging, and the reproducibility
//! header embedded in every output.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::CliError;

/// Key-value pairs loaded from `--config FILE`; flags override file entries.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{}: expected key=value, got `{line}`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Flag value if present, else the parsed config-file value.
    pub fn resolve<T: FromStr + Clone>(
        &self,
        flag: &Option<T>,
        key: &str,
    ) -> Result<Option<T>, CliError> {
        if let Some(v) = flag {
            return Ok(Some(v.clone()));
        }
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Config(format!("config key `{key}`: cannot parse `{s}`"))),
        }
    }

    /// Like [`ConfigFile::resolve`] with a default.
    pub fn resolve_or<T: FromStr + Clone>(
        &self,
        flag: &Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        Ok(self.resolve(flag, key)?.unwrap_or(default))
    }

    /// Like [`ConfigFile::resolve`] but the value must exist somewhere.
    pub fn require<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str) -> Result<T, CliError> {
        self.resolve(flag, key)?
            .ok_or_else(|| CliError::Config(format!("missing required parameter `{key}`")))
    }
}

/// Canonical serialization of the resolved semantic parameters of a run;
/// hashing it gives the config fingerprint carried in output headers.
/// Output paths and thread counts are excluded: they never change data.
#[derive(Debug, Default, Clone)]
pub struct RunStamp {
    fields: Vec<(String, String)>,
}

impl RunStamp {
    pub fn new(subcommand: &str) -> Self {
        RunStamp {
            fields: vec![("subcommand".into(), subcommand.into())],
        }
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn canonical(&self) -> String {
        self.fields
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn sha256_hex(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The `#`-prefixed header block for output files.
    pub fn header_lines(&self) -> Vec<String> {
        vec![
            format!("cantor-ei v{}", cantor_ei::VERSION),
            format!("config: {}", self.canonical()),
            format!("config-sha256: {}", self.sha256_hex()),
        ]
    }
}
