use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::FaultPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Zonal offices authenticate residents; the registry is a fallback.
    Zonal,
    /// Every request goes to the central registry.
    Baseline,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Zonal => "zonal",
            Mode::Baseline => "baseline",
        })
    }
}

impl FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zonal" => Ok(Mode::Zonal),
            "baseline" => Ok(Mode::Baseline),
            other => Err(ConfigError::Invalid(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Scenario parameters. Read from JSON; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub zone_count: u16,
    pub user_count: u32,
    pub sp_count: u16,
    pub auth_count: u32,
    /// Chance that an attempt goes through the user's home zone.
    pub in_zone_probability: f64,
    /// Fetched-record cache lifetime, simulated seconds.
    pub cache_ttl_secs: u64,
    /// How long a zone waits for the registry before giving up, simulated seconds.
    pub fetch_timeout_secs: u64,
    /// Gap between consecutive attempts.
    pub auth_interval_ms: u64,
    pub impostor_probability: f64,
    pub unknown_number_probability: f64,
    pub no_liveness_probability: f64,
    pub wrong_otp_probability: f64,
    /// Chance that an attempt also uses a one-time password.
    pub otp_probability: f64,
    pub faults: FaultPlan,
    /// Debug aid: copies one enrolled number into a provider transcript so
    /// the auditor has something to find.
    pub plant_leak: bool,
    /// Simulated wall clock at the start of the run, Unix milliseconds.
    pub start_time_ms: u64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Zonal,
            zone_count: 4,
            user_count: 400,
            sp_count: 3,
            auth_count: 1000,
            in_zone_probability: 0.9,
            cache_ttl_secs: 300,
            fetch_timeout_secs: 30,
            auth_interval_ms: 1000,
            impostor_probability: 0.0,
            unknown_number_probability: 0.0,
            no_liveness_probability: 0.0,
            wrong_otp_probability: 0.0,
            otp_probability: 0.0,
            faults: FaultPlan::default(),
            plant_leak: false,
            start_time_ms: 1_735_689_600_000,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.zone_count == 0 {
            return bad("zone_count must be at least 1".into());
        }
        if self.auth_count > 0 && (self.user_count == 0 || self.sp_count == 0) {
            return bad("authentications need at least one user and one service provider".into());
        }
        let probs = [
            ("in_zone_probability", self.in_zone_probability),
            ("impostor_probability", self.impostor_probability),
            ("unknown_number_probability", self.unknown_number_probability),
            ("no_liveness_probability", self.no_liveness_probability),
            ("wrong_otp_probability", self.wrong_otp_probability),
            ("otp_probability", self.otp_probability),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        let kinds = self.impostor_probability
            + self.unknown_number_probability
            + self.no_liveness_probability
            + self.wrong_otp_probability;
        if kinds > 1.0 {
            return bad(format!("attempt kind probabilities sum to {kinds}, more than 1"));
        }
        if self.plant_leak && (self.sp_count == 0 || self.user_count == 0) {
            return bad("plant_leak needs a user and a service provider".into());
        }
        self.faults.validate().map_err(ConfigError::Invalid)
    }

    pub fn cache_ttl_ms(&self) -> u64 {
        self.cache_ttl_secs.saturating_mul(1000)
    }

    pub fn fetch_timeout_ms(&self) -> u64 {
        self.fetch_timeout_secs.saturating_mul(1000)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = ScenarioConfig::default();
        assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn partial_json_takes_defaults() {
        let cfg = ScenarioConfig::from_json(r#"{"mode":"baseline","seed":9}"#).unwrap();
        assert_eq!(cfg.mode, Mode::Baseline);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.zone_count, 4);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            ScenarioConfig::from_json(r#"{"zone_cout":3}"#),
            Err(ConfigError::Parse(_))
        ));
        assert!(ScenarioConfig::from_json(r#"{"faults":{"drop":0.1}}"#).is_err());
    }

    #[test]
    fn invariants_enforced() {
        for bad in [
            r#"{"zone_count":0}"#,
            r#"{"in_zone_probability":1.2}"#,
            r#"{"impostor_probability":0.6,"wrong_otp_probability":0.6}"#,
            r#"{"sp_count":0}"#,
            r#"{"faults":{"partitions":[{"from":"*","to":"cidr","start_ms":9,"end_ms":3}]}}"#,
        ] {
            assert!(
                matches!(ScenarioConfig::from_json(bad), Err(ConfigError::Invalid(_))),
                "{bad}"
            );
        }
    }
}
