//! Flat `key = value` service configuration.
//!
//! ```text
//! # comments start with '#'
//! listen = 127.0.0.1:8080
//! scheme = scheme.tsv
//! corpus = data/            # or: embeddings = ..., metadata = ...
//! adapter_table = queries.jsonl
//! default_k = 100
//! ```
//!
//! Every key can be overridden by an environment variable named
//! `ICONSEARCH_<KEY>` in upper case. Relative paths in the file resolve
//! against the file's directory; relative paths from the environment resolve
//! against the working directory.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use iconsearch_core::corpus::{EMBEDDINGS_FILE, METADATA_FILE};
use iconsearch_core::retrieval::{DEFAULT_ENDPOINT_TIMEOUT, DEFAULT_K, DEFAULT_MAX_IN_FLIGHT, DEFAULT_N};
use thiserror::Error;

pub const ENV_PREFIX: &str = "ICONSEARCH_";

const KEYS: &[&str] = &[
    "listen",
    "scheme",
    "corpus",
    "embeddings",
    "metadata",
    "adapter_table",
    "encoder_endpoint",
    "encoder_timeout_ms",
    "encoder_max_in_flight",
    "default_k",
    "default_n",
    "default_probe",
    "ivf_partitions",
    "seed",
    "static_dir",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config key {0:?} is required")]
    Missing(&'static str),
    #[error("config key {key:?}: {message}")]
    Invalid { key: String, message: String },
    #[error("config key {key:?} points to {path}, which does not exist")]
    FileNotFound { key: &'static str, path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub scheme: PathBuf,
    pub embeddings: PathBuf,
    pub metadata: PathBuf,
    pub adapter_table: Option<PathBuf>,
    pub encoder_endpoint: Option<String>,
    pub encoder_timeout: Duration,
    pub encoder_max_in_flight: usize,
    pub default_k: usize,
    pub default_n: usize,
    pub default_probe: Option<usize>,
    /// Build an IVF index with this many partitions instead of a flat one.
    pub ivf_partitions: Option<usize>,
    pub seed: u64,
    pub static_dir: Option<PathBuf>,
}

/// A raw value and the directory relative paths resolve against.
#[derive(Debug, Clone)]
struct Raw {
    value: String,
    base: PathBuf,
}

impl ServiceConfig {
    /// Reads `path` and applies overrides from the process environment.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::load_with_env(path, std::env::vars())
    }

    pub fn load_with_env(
        path: impl AsRef<Path>,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse_with_env(&text, &base, env)
    }

    /// Parses config text; `base` anchors relative paths.
    pub fn parse_with_env(
        text: &str,
        base: &Path,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ConfigError> {
        let mut raw = parse_pairs(text, base)?;
        let cwd = PathBuf::new();
        for (name, value) in env {
            let Some(key) = name.strip_prefix(ENV_PREFIX) else { continue };
            let key = key.to_ascii_lowercase();
            if KEYS.contains(&key.as_str()) {
                raw.insert(key, Raw { value, base: cwd.clone() });
            }
        }
        Self::from_raw(&raw)
    }

    fn from_raw(raw: &BTreeMap<String, Raw>) -> Result<Self, ConfigError> {
        let get = |key: &str| raw.get(key).filter(|r| !r.value.is_empty());
        let path_of = |key: &str| get(key).map(|r| r.base.join(&r.value));

        let (embeddings, metadata) = match (path_of("embeddings"), path_of("metadata"), path_of("corpus")) {
            (Some(e), Some(m), _) => (e, m),
            (e, m, Some(dir)) => (e.unwrap_or(dir.join(EMBEDDINGS_FILE)), m.unwrap_or(dir.join(METADATA_FILE))),
            (None, _, None) => return Err(ConfigError::Missing("embeddings")),
            (_, None, None) => return Err(ConfigError::Missing("metadata")),
        };

        let config = Self {
            listen: parse_or(get("listen"), "listen", "127.0.0.1:8080".parse().unwrap())?,
            scheme: path_of("scheme").ok_or(ConfigError::Missing("scheme"))?,
            embeddings,
            metadata,
            adapter_table: path_of("adapter_table"),
            encoder_endpoint: get("encoder_endpoint").map(|r| r.value.clone()),
            encoder_timeout: Duration::from_millis(parse_or(
                get("encoder_timeout_ms"),
                "encoder_timeout_ms",
                DEFAULT_ENDPOINT_TIMEOUT.as_millis() as u64,
            )?),
            encoder_max_in_flight: parse_or(get("encoder_max_in_flight"), "encoder_max_in_flight", DEFAULT_MAX_IN_FLIGHT)?,
            default_k: parse_or(get("default_k"), "default_k", DEFAULT_K)?,
            default_n: parse_or(get("default_n"), "default_n", DEFAULT_N)?,
            default_probe: get("default_probe").map(|r| parse_value(r, "default_probe")).transpose()?,
            ivf_partitions: get("ivf_partitions").map(|r| parse_value(r, "ivf_partitions")).transpose()?,
            seed: parse_or(get("seed"), "seed", 0)?,
            static_dir: path_of("static_dir"),
        };
        for (key, value) in [
            ("default_k", config.default_k),
            ("default_n", config.default_n),
            ("encoder_max_in_flight", config.encoder_max_in_flight),
            ("default_probe", config.default_probe.unwrap_or(1)),
            ("ivf_partitions", config.ivf_partitions.unwrap_or(1)),
        ] {
            if value == 0 {
                return Err(ConfigError::Invalid {
                    key: key.into(),
                    message: "must be at least 1".into(),
                });
            }
        }
        Ok(config)
    }

    /// Checks that every configured file and directory exists.
    pub fn validate_paths(&self) -> Result<(), ConfigError> {
        let mut required = vec![
            ("scheme", &self.scheme),
            ("embeddings", &self.embeddings),
            ("metadata", &self.metadata),
        ];
        if let Some(p) = &self.adapter_table {
            required.push(("adapter_table", p));
        }
        if let Some(p) = &self.static_dir {
            required.push(("static_dir", p));
        }
        for (key, path) in required {
            if !path.exists() {
                return Err(ConfigError::FileNotFound {
                    key,
                    path: path.clone(),
                });
            }
        }
        Ok(())
    }
}

fn parse_pairs(text: &str, base: &Path) -> Result<BTreeMap<String, Raw>, ConfigError> {
    let mut raw = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let syntax = |message: String| ConfigError::Syntax { line: idx + 1, message };
        let line = match line.split_once(" #") {
            Some((before, _)) => before,
            None => line,
        }
        .trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| syntax(format!("expected key = value, got {line:?}")))?;
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(syntax(format!("unknown key {key:?}")));
        }
        let entry = Raw {
            value: value.trim().to_string(),
            base: base.to_path_buf(),
        };
        if raw.insert(key.clone(), entry).is_some() {
            return Err(syntax(format!("duplicate key {key:?}")));
        }
    }
    Ok(raw)
}

fn parse_value<T: std::str::FromStr>(raw: &Raw, key: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.value.parse().map_err(|e: T::Err| ConfigError::Invalid {
        key: key.into(),
        message: format!("{:?}: {e}", raw.value),
    })
}

fn parse_or<T: std::str::FromStr>(raw: Option<&Raw>, key: &str, default: T) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.map_or(Ok(default), |r| parse_value(r, key))
}
