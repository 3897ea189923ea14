//! Run configuration file.
//!
//! A TOML file of flat `key = value` pairs grouped into `[ladder]`,
//! `[filter]`, `[engine]`, `[signal]` and `[power]` sections. Every key is
//! optional; missing keys take the value from the embedded defaults file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::SimConfig;
use crate::error::{Error, Result};
use crate::filter::FilterDesign;
use crate::ladder::{ChannelParts, LadderConfig};
use crate::power::{AimqBudget, IsoAmpBudget};
use crate::signal::{random_walk_bus_clamped, BusTrace};

/// The defaults file, compiled in.
pub const DEFAULTS_TOML: &str = include_str!("../defaults.toml");

/// SHA-256 of [`DEFAULTS_TOML`], lowercase hex.
pub fn defaults_hash() -> String {
    Sha256::digest(DEFAULTS_TOML.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AimqConfig {
    pub version: u32,
    pub ladder: LadderSection,
    pub filter: FilterSection,
    pub engine: EngineSection,
    pub signal: SignalSection,
    pub power: PowerSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSection {
    pub thresholds: Vec<f64>,
    pub v_adc_max: f64,
    pub diode_drop: f64,
    pub overlap_time: f64,
    pub forward_current: f64,
    pub ctr: f64,
    pub beta: f64,
    pub dynamic_resistance: f64,
    pub current_limiting: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub crossover_hz: f64,
    pub gain: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    pub engine_dt: f64,
    pub reconstruction_scale: f64,
    pub settling_time: f64,
    pub warm_start: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub v0: f64,
    pub steps: usize,
    pub t_s: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    pub v_pri: f64,
    pub i_b: f64,
    pub v_iso: f64,
    pub i_pri: f64,
    pub eta: f64,
    pub i_zf: f64,
    pub v_sec: f64,
    pub i_sec: f64,
    pub i_out: f64,
}

impl Default for AimqConfig {
    fn default() -> Self {
        Self::defaults()
    }
}

/// Overlay `patch` onto `base`, table by table.
fn merge(base: &mut toml::Table, patch: toml::Table) {
    for (key, value) in patch {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) => merge(b, p),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

impl AimqConfig {
    pub fn defaults() -> Self {
        toml::from_str(DEFAULTS_TOML).expect("embedded defaults parse")
    }

    /// Parse a config, filling unspecified keys from the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = DEFAULTS_TOML.parse().expect("embedded defaults parse");
        let patch: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        merge(&mut table, patch);
        let config: AimqConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Check everything that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        self.sim_config()?;
        if self.signal.steps == 0 {
            return Err(Error::config("signal.steps must be at least 1"));
        }
        if !(self.signal.t_s > 0.0 && self.signal.t_s.is_finite()) {
            return Err(Error::config("signal.t_s must be positive"));
        }
        if let Some([lo, hi]) = self.signal.clamp {
            if !(lo <= hi) {
                return Err(Error::config(format!("signal.clamp [{lo}, {hi}] is empty")));
            }
        }
        self.iso_budget().validate()?;
        self.aimq_budget().validate()?;
        Ok(())
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let config = SimConfig {
            ladder: self.ladder.build()?,
            filter: FilterDesign {
                crossover_hz: self.filter.crossover_hz,
                gain: self.filter.gain,
                q: self.filter.q,
                sample_interval: self.engine.engine_dt,
            },
            engine_dt: self.engine.engine_dt,
            reconstruction_scale: self.engine.reconstruction_scale,
            settling_time: self.engine.settling_time,
            warm_start: self.engine.warm_start,
        };
        config.validate()?;
        Ok(config)
    }

    /// The configured random walk.
    pub fn bus_trace(&self) -> Result<BusTrace> {
        let s = &self.signal;
        random_walk_bus_clamped(s.v0, s.steps, s.t_s, s.seed, s.clamp.map(|[a, b]| (a, b)))
    }

    pub fn iso_budget(&self) -> IsoAmpBudget {
        let p = &self.power;
        IsoAmpBudget {
            v_pri: p.v_pri,
            i_b: p.i_b,
            v_iso: p.v_iso,
            i_pri: p.i_pri,
            eta: p.eta,
            v_sec: p.v_sec,
            i_sec: p.i_sec,
        }
    }

    pub fn aimq_budget(&self) -> AimqBudget {
        let p = &self.power;
        AimqBudget {
            v_pri: p.v_pri,
            i_zf: p.i_zf,
            v_sec: p.v_sec,
            i_out: p.i_out,
        }
    }
}

impl LadderSection {
    pub fn build(&self) -> Result<LadderConfig> {
        let parts = ChannelParts {
            forward_current: self.forward_current,
            ctr: self.ctr,
            dynamic_resistance: self.dynamic_resistance,
            beta: self.beta,
        };
        let mut ladder = LadderConfig::from_thresholds(
            &self.thresholds,
            parts,
            self.v_adc_max,
            self.diode_drop,
            self.overlap_time,
        )?;
        ladder.current_limiting = self.current_limiting;
        Ok(ladder)
    }
}
