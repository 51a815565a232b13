//! Run configuration: a strict JSON schema with documented defaults.
//!
//! Unknown keys are rejected with the offending key named; syntax errors
//! carry line and column. The full schema is documented in the repository
//! README; serialization round-trips exactly.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::balance::LawId;
use crate::dynamics::Scheme;
use crate::error::{KdvError, Result};
use crate::experiments::ProfileSpec;
use crate::thresholds;

/// Experiment subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    VerifyIdentities,
    BalanceScan,
    Fields,
    Drift,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::VerifyIdentities => "verify-identities",
            Command::BalanceScan => "balance-scan",
            Command::Fields => "fields",
            Command::Drift => "drift",
        }
    }
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Grid block of the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
}

fn default_dt() -> f64 {
    0.005
}

fn default_stride() -> usize {
    100
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment run, fully deterministic (no seeds anywhere).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub grid: GridSpec,
    pub epsilon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Initial data; a centered unit-amplitude solitary wave when absent.
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    /// Laws evaluated by balance-scan; the three approximate laws when
    /// absent. verify-identities always covers all six.
    #[serde(default)]
    pub laws: Option<Vec<LawId>>,
    /// Epsilon ladder for balance-scan; the default ladder when absent.
    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    /// Sample times for dynamic-mode balance-scan; analysis mode only when
    /// absent.
    #[serde(default)]
    pub sample_times: Option<Vec<f64>>,
    /// Heights for the fields command; {0, 0.5, 1.0} when absent.
    #[serde(default)]
    pub heights: Option<Vec<f64>>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Effective epsilon ladder for scans.
    pub fn eps_ladder(&self) -> Vec<f64> {
        self.eps_list
            .clone()
            .unwrap_or_else(|| thresholds::DEFAULT_EPS_LADDER.to_vec())
    }

    /// Effective law list for balance-scan.
    pub fn scan_laws(&self) -> Vec<LawId> {
        self.laws
            .clone()
            .unwrap_or_else(|| vec![LawId::Momentum, LawId::Energy, LawId::EnergyStar])
    }

    /// Effective profile: centered solitary wave when unspecified.
    pub fn profile_spec(&self) -> ProfileSpec {
        self.profile.clone().unwrap_or(ProfileSpec::Solitary {
            amplitude: 1.0,
            x0: self.grid.length / 2.0,
        })
    }

    /// Effective heights for the fields command.
    pub fn height_list(&self) -> Vec<f64> {
        self.heights.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0])
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(KdvError::Config(format!(
                "epsilon out of range (0, 0.5]: {}",
                self.epsilon
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(KdvError::Config(format!(
                "dt must be positive: {}",
                self.dt
            )));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(KdvError::Config(format!(
                "t_end must be non-negative: {}",
                self.t_end
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(KdvError::Config("snapshot_stride must be >= 1".into()));
        }
        if let Some(list) = &self.eps_list {
            if list.is_empty() {
                return Err(KdvError::Config("eps_list must not be empty".into()));
            }
            for w in list.windows(2) {
                if !(w[1] > w[0]) {
                    return Err(KdvError::Config(
                        "eps_list must be strictly increasing".into(),
                    ));
                }
            }
            for &e in list {
                if !(e > 0.0 && e <= 0.5) {
                    return Err(KdvError::Config(format!(
                        "eps_list entry out of range (0, 0.5]: {e}"
                    )));
                }
            }
        }
        if let Some(times) = &self.sample_times {
            for w in times.windows(2) {
                if !(w[1] > w[0]) {
                    return Err(KdvError::Config(
                        "sample_times must be strictly increasing".into(),
                    ));
                }
            }
            if times.iter().any(|t| *t < 0.0) {
                return Err(KdvError::Config("sample_times must be >= 0".into()));
            }
        }
        if let Some(heights) = &self.heights {
            if heights.iter().any(|z| *z < 0.0 || !z.is_finite()) {
                return Err(KdvError::Config(
                    "heights must be non-negative and finite".into(),
                ));
            }
        }
        if let Some(laws) = &self.laws {
            if laws.is_empty() {
                return Err(KdvError::Config("laws must not be empty".into()));
            }
        }
        Ok(())
    }
}

/// Parse and validate a configuration document.
///
/// Syntax errors report line and column; unknown keys are named; semantic
/// violations name the offending field.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig =
        serde_json::from_str(text).map_err(|e| KdvError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Serialize a configuration so that [`parse_config`] reproduces it
/// exactly.
pub fn serialize_config(config: &RunConfig) -> String {
    serde_json::to_string_pretty(config).expect("configuration serializes")
}
