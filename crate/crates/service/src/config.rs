//! Service configuration loaded from TOML.

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::Path;

use qsandbox_core::scene::DEFAULT_DT;
use qsandbox_core::{CouplingParams, QubitSpawn, SceneConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_PORT: u16 = 8740;
pub const DEFAULT_FRAME_RATE: f64 = 60.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub j_max: f64,
    pub theta_d: f64,
    pub dt: f64,
    pub seed: u64,
    pub host: IpAddr,
    pub port: u16,
    /// Frame broadcasts per second of wall time.
    pub frame_rate: f64,
    /// Qubits present at startup and after a plain reset.
    pub qubits: Vec<QubitSpawn>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let params = CouplingParams::default();
        Self {
            j_max: params.j_max,
            theta_d: params.theta_d,
            dt: DEFAULT_DT,
            seed: 0,
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            frame_rate: DEFAULT_FRAME_RATE,
            qubits: vec![
                QubitSpawn { theta: 0.0, phi: 0.0, position: [-4.0, 0.0, 0.0] },
                QubitSpawn { theta: 0.0, phi: 0.0, position: [4.0, 0.0, 0.0] },
            ],
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scene_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(ConfigError::Invalid(format!("frame_rate must be positive, got {}", self.frame_rate)));
        }
        if self.frame_rate > 1.0 / self.dt {
            return Err(ConfigError::Invalid(format!(
                "frame_rate {} exceeds the tick rate 1/dt = {}",
                self.frame_rate,
                1.0 / self.dt
            )));
        }
        if self.qubits.len() > qsandbox_core::state::MAX_QUBITS {
            return Err(ConfigError::Invalid(format!("at most {} qubits", qsandbox_core::state::MAX_QUBITS)));
        }
        Ok(())
    }

    pub fn scene_config(&self) -> SceneConfig {
        SceneConfig {
            coupling: CouplingParams {
                j_max: self.j_max,
                theta_d: self.theta_d,
            },
            dt: self.dt,
            seed: self.seed,
        }
    }

    pub fn listen_addr(&self) -> SocketAddr {
        SocketAddr::new(self.host, self.port)
    }
}
