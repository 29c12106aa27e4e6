//! Flat `key = value` scenario files.
//!
//! ```text
//! # Table of defaults
//! n_nodes = 50
//! t_min = 5, t_max = 15
//! delta = 2e-8
//! ```
//!
//! Several assignments may share a line when separated by commas. Unknown
//! keys are rejected; missing keys take the defaults of
//! [`ScenarioConfig::default`].

use thiserror::Error;

use crate::engine::ScenarioConfig;
use crate::metrics::MetricKind;
use crate::routing::{KnowledgeScope, Policy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid value `{value}` for `{key}`")]
    InvalidValue { key: String, value: String },
    #[error("`{key}` out of range: {reason}")]
    OutOfRange { key: String, reason: String },
    #[error("`{0}` is required")]
    Missing(&'static str),
}

/// Values read from a file or the command line; absent entries are `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub n_nodes: Option<usize>,
    pub n_locations: Option<usize>,
    pub duration: Option<f64>,
    pub traffic_horizon: Option<f64>,
    pub packet_interval: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub delta: Option<f64>,
    pub time_step: Option<f64>,
    pub d: Option<f64>,
    pub policy: Option<String>,
    pub metric: Option<String>,
    pub knowledge: Option<usize>,
    pub knowledge_scope: Option<String>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
}

fn value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse().map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        value: raw.to_string(),
    })
}

pub fn parse_config(text: &str) -> Result<ConfigFile, ConfigError> {
    let mut cfg = ConfigFile::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        for assignment in content.split(',') {
            let Some((key, val)) = assignment.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line,
                    text: assignment.trim().to_string(),
                });
            };
            let (key, val) = (key.trim(), val.trim());
            if key.is_empty() || val.is_empty() {
                return Err(ConfigError::Malformed {
                    line,
                    text: assignment.trim().to_string(),
                });
            }
            cfg.set(key, val).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line, key },
                other => other,
            })?;
        }
    }
    Ok(cfg)
}

impl ConfigFile {
    fn set(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
        match key {
            "n_nodes" => self.n_nodes = Some(value(key, raw)?),
            "n_locations" => self.n_locations = Some(value(key, raw)?),
            "duration" => self.duration = Some(value(key, raw)?),
            "traffic_horizon" => self.traffic_horizon = Some(value(key, raw)?),
            "packet_interval" => self.packet_interval = Some(value(key, raw)?),
            "t_min" => self.t_min = Some(value(key, raw)?),
            "t_max" => self.t_max = Some(value(key, raw)?),
            "delta" => self.delta = Some(value(key, raw)?),
            "time_step" => self.time_step = Some(value(key, raw)?),
            "d" => self.d = Some(value(key, raw)?),
            "policy" => self.policy = Some(raw.to_string()),
            "metric" => self.metric = Some(raw.to_string()),
            "knowledge" | "l" => self.knowledge = Some(value(key, raw)?),
            "knowledge_scope" => self.knowledge_scope = Some(raw.to_string()),
            "seed" => self.seed = Some(value(key, raw)?),
            "runs" => self.runs = Some(value(key, raw)?),
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Fields set in `other` win.
    pub fn overlay(mut self, other: &ConfigFile) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f.clone(); } )* };
        }
        take!(n_nodes, n_locations, duration, traffic_horizon, packet_interval, t_min, t_max, delta, time_step, d, policy, metric, knowledge, knowledge_scope, seed, runs);
        self
    }

    /// Environment parameters with defaults; `d` and `policy` left at their
    /// defaults when absent. Used by the experiment grid.
    pub fn base_scenario(&self) -> Result<ScenarioConfig, ConfigError> {
        let def = ScenarioConfig::default();
        let cfg = ScenarioConfig {
            n_nodes: self.n_nodes.unwrap_or(def.n_nodes),
            n_locations: self.n_locations.unwrap_or(def.n_locations),
            duration: self.duration.unwrap_or(def.duration),
            traffic_horizon: self.traffic_horizon.unwrap_or(def.traffic_horizon),
            packet_interval: self.packet_interval.unwrap_or(def.packet_interval),
            t_min: self.t_min.unwrap_or(def.t_min),
            t_max: self.t_max.unwrap_or(def.t_max),
            delta: self.delta.unwrap_or(def.delta),
            time_step: self.time_step.unwrap_or(def.time_step),
            d: self.d.unwrap_or(def.d),
            policy: def.policy,
            knowledge_scope: match self.knowledge_scope.as_deref() {
                None => def.knowledge_scope,
                Some(name) => parse_scope(name)?,
            },
            seed: self.seed.unwrap_or(def.seed),
            runs: self.runs.unwrap_or(def.runs),
        };
        check_ranges(&cfg)?;
        Ok(cfg)
    }

    /// A complete single-scenario config: `d` and `policy` are required, and
    /// `pattern` also needs `metric` and `knowledge`.
    pub fn scenario(&self) -> Result<ScenarioConfig, ConfigError> {
        let d = self.d.ok_or(ConfigError::Missing("d"))?;
        let policy_name = self.policy.as_deref().ok_or(ConfigError::Missing("policy"))?;
        let mut cfg = self.base_scenario()?;
        cfg.d = d;
        cfg.policy = self.policy_named(policy_name, cfg.delta)?;
        check_ranges(&cfg)?;
        Ok(cfg)
    }

    fn policy_named(&self, name: &str, delta: f64) -> Result<Policy, ConfigError> {
        Ok(match name {
            "epidemic" => Policy::Epidemic,
            "opportunistic" => Policy::Opportunistic,
            "random" => Policy::Random,
            "pattern" => {
                let metric = self.metric.as_deref().ok_or(ConfigError::Missing("metric"))?;
                let knowledge = self.knowledge.ok_or(ConfigError::Missing("knowledge"))?;
                Policy::Pattern {
                    metric: parse_metric(metric, delta)?,
                    knowledge,
                }
            }
            other => {
                return Err(ConfigError::InvalidValue {
                    key: "policy".into(),
                    value: other.into(),
                })
            }
        })
    }
}

pub fn parse_scope(name: &str) -> Result<KnowledgeScope, ConfigError> {
    match name {
        "destination" => Ok(KnowledgeScope::DestinationOnly),
        "all" => Ok(KnowledgeScope::All),
        other => Err(ConfigError::InvalidValue {
            key: "knowledge_scope".into(),
            value: other.into(),
        }),
    }
}

pub fn parse_metric(name: &str, delta: f64) -> Result<MetricKind, ConfigError> {
    match MetricKind::from_name(name, delta) {
        None => Err(ConfigError::InvalidValue {
            key: "metric".into(),
            value: name.into(),
        }),
        Some(Err(e)) => Err(ConfigError::OutOfRange {
            key: "delta".into(),
            reason: e.to_string(),
        }),
        Some(Ok(m)) => Ok(m),
    }
}

fn check_ranges(c: &ScenarioConfig) -> Result<(), ConfigError> {
    let range = |key: &str, reason: String| ConfigError::OutOfRange {
        key: key.to_string(),
        reason,
    };
    if c.t_min > c.t_max {
        return Err(range("t_min", format!("t_min {} > t_max {}", c.t_min, c.t_max)));
    }
    if !(c.t_min > 0.0) {
        return Err(range("t_min", format!("must be positive, got {}", c.t_min)));
    }
    if !(c.delta >= 0.0) || !c.delta.is_finite() {
        return Err(range("delta", format!("must be finite and >= 0, got {}", c.delta)));
    }
    if !(c.d >= 1.0) || !c.d.is_finite() {
        return Err(range("d", format!("must be >= 1, got {}", c.d)));
    }
    if c.runs == 0 {
        return Err(range("runs", "must be at least 1".into()));
    }
    if c.n_nodes < 2 {
        return Err(range("n_nodes", format!("must be >= 2, got {}", c.n_nodes)));
    }
    if c.n_locations == 0 {
        return Err(range("n_locations", "must be >= 1".into()));
    }
    if c.traffic_horizon > c.duration {
        return Err(range(
            "traffic_horizon",
            format!("{} exceeds duration {}", c.traffic_horizon, c.duration),
        ));
    }
    for (key, v) in [
        ("duration", c.duration),
        ("traffic_horizon", c.traffic_horizon),
        ("packet_interval", c.packet_interval),
        ("time_step", c.time_step),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(range(key, format!("must be positive, got {v}")));
        }
    }
    if let Policy::Pattern { knowledge, .. } = c.policy {
        if knowledge == 0 || knowledge > c.n_locations {
            return Err(range("knowledge", format!("must be in 1..={}, got {knowledge}", c.n_locations)));
        }
    }
    c.validate().map_err(|e| range("scenario", e.to_string()))
}
