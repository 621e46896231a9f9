use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use vocalplay_core::{Estimator, EstimatorConfig};

pub const STORE_ENV: &str = "VOCALPLAY_STORE";
pub const DEFAULT_STORE: &str = "vocalplay-store";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

/// Service settings. Every field can come from the optional TOML file;
/// command-line flags override it.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub bind: SocketAddr,
    pub store: PathBuf,
    pub estimator: Estimator,
    pub bench_seed: u64,
    /// Analysis frames buffered per live connection before the oldest drop.
    pub ring_capacity: usize,
    pub pitch: EstimatorConfig,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            bind: DEFAULT_BIND.parse().unwrap(),
            store: PathBuf::from(DEFAULT_STORE),
            estimator: Estimator::default(),
            bench_seed: 0,
            ring_capacity: 512,
            pitch: EstimatorConfig::default(),
        }
    }
}

impl ServeConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
