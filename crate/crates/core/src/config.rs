//! Engine configuration, read from one TOML file.
//!
//! ```toml
//! [linker]
//! tauNew = 0.25
//! [miner]
//! windowBatches = 10
//! [paths]
//! dataDir = "nous-data"
//! ```
//!
//! Every block is optional. Relative paths resolve against the directory
//! holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bpr::BprConfig;
use crate::error::{Error, Result};
use crate::ingest::IngestConfig;
use crate::linker::LinkerConfig;
use crate::mine::MinerConfig;
use crate::predmap::ExpandParams;
use crate::topics::QaConfig;

pub const DEFAULT_CONFIG_FILE: &str = "nous.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct ExpandConfig {
    pub min_evidence: usize,
    pub min_precision: f64,
}

impl Default for ExpandConfig {
    fn default() -> Self {
        let p = ExpandParams::default();
        ExpandConfig {
            min_evidence: p.min_evidence,
            min_precision: p.min_precision,
        }
    }
}

impl ExpandConfig {
    pub fn params(&self) -> ExpandParams {
        ExpandParams {
            min_evidence: self.min_evidence,
            min_precision: self.min_precision,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Facts shown on an entity card.
    pub card_facts: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            card_facts: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct PathsConfig {
    /// Where the engine keeps its state between runs. In-memory when unset.
    pub data_dir: Option<PathBuf>,
    /// Predicate seed file, loaded before the first ingest if no rules exist.
    pub seeds: Option<PathBuf>,
    /// Entity documents for topic training.
    pub docs: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            data_dir: Some(PathBuf::from("nous-data")),
            seeds: None,
            docs: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct EngineConfig {
    pub linker: LinkerConfig,
    pub bpr: BprConfig,
    pub miner: MinerConfig,
    pub qa: QaConfig,
    pub ingest: IngestConfig,
    pub expand: ExpandConfig,
    pub service: ServiceConfig,
    pub paths: PathsConfig,
}

impl EngineConfig {
    /// In-memory configuration with defaults everywhere.
    pub fn in_memory() -> Self {
        EngineConfig {
            paths: PathsConfig {
                data_dir: None,
                ..PathsConfig::default()
            },
            ..EngineConfig::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig {
            key: toml_key(&e, text),
            reason: e.message().trim().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.paths.data_dir, &mut self.paths.seeds, &mut self.paths.docs]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.linker.validate()?;
        self.bpr.validate()?;
        self.miner.validate()?;
        self.qa.validate()?;
        self.ingest.validate()?;
        let bad = |key: &str, reason: &str| {
            Err(Error::InvalidConfig {
                key: key.into(),
                reason: reason.into(),
            })
        };
        if self.expand.min_evidence == 0 {
            return bad("expand.minEvidence", "must be >= 1");
        }
        if !(self.expand.min_precision > 0.0 && self.expand.min_precision <= 1.0) {
            return bad("expand.minPrecision", "must lie in (0, 1]");
        }
        if self.service.card_facts == 0 {
            return bad("service.cardFacts", "must be >= 1");
        }
        Ok(())
    }
}

/// Best-effort `section.key` for a TOML error: the table header above the
/// error span plus the key on the offending line.
fn toml_key(err: &toml::de::Error, text: &str) -> String {
    let Some(span) = err.span() else {
        return "config".into();
    };
    let before = &text[..span.start.min(text.len())];
    let section = before
        .lines()
        .rev()
        .find_map(|l| {
            let l = l.trim();
            l.strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .map(|s| s.trim().to_string())
        });
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    let key = line.split('=').next().map(str::trim).filter(|k| !k.is_empty() && !k.starts_with('['));
    match (section, key) {
        (Some(s), Some(k)) => format!("{s}.{k}"),
        (Some(s), None) => s,
        (None, Some(k)) => k.to_string(),
        (None, None) => "config".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mine::LabelMode;

    #[test]
    fn defaults_when_empty() {
        let cfg = EngineConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.miner, MinerConfig::default());
        assert_eq!(cfg.qa.alpha(), 2.5);
        assert_eq!(cfg.service.port, 8080);
    }

    #[test]
    fn camel_case_keys() {
        let cfg = EngineConfig::from_toml_str(
            "[miner]\nwindowBatches = 4\nlabelMode = \"predicateOnly\"\n[qa]\nconstraintMode = \"lastEdge\"\n[ingest]\nbatchBy = \"time\"\nbucketSeconds = 60\n",
        )
        .unwrap();
        assert_eq!(cfg.miner.window_batches, 4);
        assert_eq!(cfg.miner.label_mode, LabelMode::PredicateOnly);
        assert_eq!(cfg.ingest.bucket_seconds, 60);
    }

    #[test]
    fn errors_name_the_key() {
        let e = EngineConfig::from_toml_str("[miner]\nminSupport = 0\n").unwrap_err();
        assert!(e.to_string().contains("miner.minSupport"), "{e}");
        let e = EngineConfig::from_toml_str("[miner]\nwindowBatchez = 3\n").unwrap_err();
        assert_eq!(e.name(), "InvalidConfig");
        assert!(e.to_string().contains("windowBatchez"), "{e}");
        let e = EngineConfig::from_toml_str("[linker]\ntauNew = \"high\"\n").unwrap_err();
        assert!(e.to_string().contains("linker.tauNew"), "{e}");
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let mut cfg = EngineConfig::from_toml_str("[paths]\ndataDir = \"state\"\ndocs = \"/abs/docs.jsonl\"\n").unwrap();
        cfg.resolve_paths(Path::new("/etc/nous"));
        assert_eq!(cfg.paths.data_dir.unwrap(), PathBuf::from("/etc/nous/state"));
        assert_eq!(cfg.paths.docs.unwrap(), PathBuf::from("/abs/docs.jsonl"));
    }
}
