//! Behavioral models of the discrete parts a channel is built from.
//!
//! These are idealized: a Zener stack is a sharp threshold, the series-pass
//! transistor limits current perfectly to the optocoupler forward current, and
//! the output OR is a single diode drop below the highest candidate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A series stack of Zener diodes acting as a channel's turn-on threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZenerStack {
    /// Stack breakdown voltage in volts.
    pub breakdown_voltage: f64,
    /// Slope above breakdown in ohms. Only consulted when current limiting is off.
    pub dynamic_resistance: f64,
}

impl ZenerStack {
    pub fn new(breakdown_voltage: f64, dynamic_resistance: f64) -> Result<Self> {
        let stack = ZenerStack {
            breakdown_voltage,
            dynamic_resistance,
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.breakdown_voltage > 0.0 && self.breakdown_voltage.is_finite()) {
            return Err(Error::config(format!(
                "zener breakdown voltage must be positive, got {}",
                self.breakdown_voltage
            )));
        }
        if !(self.dynamic_resistance > 0.0 && self.dynamic_resistance.is_finite()) {
            return Err(Error::config(format!(
                "zener dynamic resistance must be positive, got {}",
                self.dynamic_resistance
            )));
        }
        Ok(())
    }

    /// Current through the stack with no series limiting.
    pub fn unlimited_current(&self, v_applied: f64) -> f64 {
        if zener_conducts(v_applied, self) {
            (v_applied - self.breakdown_voltage) / self.dynamic_resistance
        } else {
            0.0
        }
    }
}

/// Optocoupler plus its output pull-down resistor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optocoupler {
    /// LED forward current while the channel is active, amperes.
    pub forward_current: f64,
    /// Current transfer ratio.
    pub ctr: f64,
    /// Output-side pull-down resistance, ohms.
    pub pull_down_resistance: f64,
}

impl Optocoupler {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("forward current", self.forward_current),
            ("current transfer ratio", self.ctr),
            ("pull-down resistance", self.pull_down_resistance),
        ];
        for (name, value) in checks {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(format!(
                    "optocoupler {name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Bipolar transistor reduced to its current gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transistor {
    pub beta: f64,
}

impl Transistor {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!(
                "transistor beta must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Whether a stack conducts at `v_applied`. A voltage exactly at breakdown conducts.
pub fn zener_conducts(v_applied: f64, stack: &ZenerStack) -> bool {
    v_applied >= stack.breakdown_voltage
}

/// Base current needed to sustain `collector_current`.
pub fn base_current(collector_current: f64, transistor: &Transistor) -> f64 {
    collector_current / transistor.beta
}

/// Secondary-side voltage developed across the pull-down resistor.
pub fn opto_output_voltage(opto: &Optocoupler) -> f64 {
    opto.ctr * opto.forward_current * opto.pull_down_resistance
}

/// Voltage at the common node of a diode-OR: the highest candidate less one
/// diode drop, floored at zero. No candidates gives zero.
pub fn diode_or(candidate_voltages: &[f64], diode_drop: f64) -> f64 {
    candidate_voltages
        .iter()
        .copied()
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        })
        .map_or(0.0, |max| (max - diode_drop).max(0.0))
}
