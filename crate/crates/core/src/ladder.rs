//! The threshold ladder: ordered channels, highest-conducting-wins selection,
//! transition overlap, and the diode-OR'd output.
//!
//! In steady state exactly one channel (or none) conducts: the highest stack
//! in breakdown pulls down the series-pass transistors of every lower stack.
//! When the winner changes, the outgoing channel does not release instantly.
//! Both channels conduct for `overlap_time`, which is where the primary-side
//! current spikes come from.

use serde::{Deserialize, Serialize};

use crate::devices::{diode_or, opto_output_voltage, Optocoupler, Transistor, ZenerStack};
use crate::encoding::{one_hot_encode, OneHotWord, MAX_WIDTH};
use crate::error::{Error, Result};

/// Relative slack used when comparing accumulated time against the overlap window.
const TIME_SLACK: f64 = 1e-9;

/// One quantizer channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// 1-based level number.
    pub index: usize,
    pub zener: ZenerStack,
    pub opto: Optocoupler,
    pub pass_transistor: Transistor,
    /// Nominal secondary-side output while this channel is the winner.
    pub output_level_voltage: f64,
}

impl ChannelSpec {
    pub fn threshold(&self) -> f64 {
        self.zener.breakdown_voltage
    }
}

/// Component values shared by every channel of a uniformly built ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParts {
    pub forward_current: f64,
    pub ctr: f64,
    pub dynamic_resistance: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderConfig {
    pub channels: Vec<ChannelSpec>,
    /// Full-scale input of the downstream ADC; the top channel outputs this.
    pub v_adc_max: f64,
    pub diode_drop: f64,
    /// How long two channels conduct together during a hand-over, seconds.
    pub overlap_time: f64,
    /// When false, channel current follows the Zener dynamic resistance
    /// instead of being pinned at the optocoupler forward current.
    pub current_limiting: bool,
}

impl LadderConfig {
    /// Build a ladder from ascending thresholds. Pull-down resistors are sized
    /// so channel `n` of `N` outputs `v_adc_max * n / N`.
    pub fn from_thresholds(
        thresholds: &[f64],
        parts: ChannelParts,
        v_adc_max: f64,
        diode_drop: f64,
        overlap_time: f64,
    ) -> Result<Self> {
        let n = thresholds.len();
        if !(parts.forward_current > 0.0 && parts.ctr > 0.0) {
            return Err(Error::config(
                "forward current and current transfer ratio must be positive",
            ));
        }
        let channels = thresholds
            .iter()
            .enumerate()
            .map(|(i, &v_z)| {
                let index = i + 1;
                let output_level_voltage = v_adc_max * index as f64 / n as f64;
                ChannelSpec {
                    index,
                    zener: ZenerStack {
                        breakdown_voltage: v_z,
                        dynamic_resistance: parts.dynamic_resistance,
                    },
                    opto: Optocoupler {
                        forward_current: parts.forward_current,
                        ctr: parts.ctr,
                        pull_down_resistance: output_level_voltage
                            / (parts.ctr * parts.forward_current),
                    },
                    pass_transistor: Transistor { beta: parts.beta },
                    output_level_voltage,
                }
            })
            .collect();
        let config = LadderConfig {
            channels,
            v_adc_max,
            diode_drop,
            overlap_time,
            current_limiting: true,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.channels.len();
        if n == 0 {
            return Err(Error::config("ladder needs at least one channel"));
        }
        if n > MAX_WIDTH {
            return Err(Error::config(format!(
                "ladder has {n} channels; at most {MAX_WIDTH} are supported"
            )));
        }
        if !(self.v_adc_max > 0.0 && self.v_adc_max.is_finite()) {
            return Err(Error::config("v_adc_max must be positive"));
        }
        if !(self.diode_drop >= 0.0 && self.diode_drop.is_finite()) {
            return Err(Error::config("diode_drop must be non-negative"));
        }
        if !(self.overlap_time >= 0.0 && self.overlap_time.is_finite()) {
            return Err(Error::config("overlap_time must be non-negative"));
        }
        for (i, ch) in self.channels.iter().enumerate() {
            if ch.index != i + 1 {
                return Err(Error::config(format!(
                    "channel at position {i} has index {}, expected {}",
                    ch.index,
                    i + 1
                )));
            }
            ch.zener.validate()?;
            ch.opto.validate()?;
            ch.pass_transistor.validate()?;
            let expected = self.v_adc_max * ch.index as f64 / n as f64;
            if (ch.output_level_voltage - expected).abs() > 1e-9 * self.v_adc_max {
                return Err(Error::config(format!(
                    "channel {} outputs {} V, expected {expected} V",
                    ch.index, ch.output_level_voltage
                )));
            }
            let opto_v = opto_output_voltage(&ch.opto);
            if (opto_v - expected).abs() > 1e-9 * self.v_adc_max {
                return Err(Error::config(format!(
                    "channel {} optocoupler develops {opto_v} V across its pull-down, expected {expected} V",
                    ch.index
                )));
            }
        }
        for pair in self.channels.windows(2) {
            if pair[1].threshold() <= pair[0].threshold() {
                return Err(Error::config(format!(
                    "thresholds must strictly increase: channel {} at {} V follows {} V",
                    pair[1].index,
                    pair[1].threshold(),
                    pair[0].threshold()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.channels.iter().map(ChannelSpec::threshold).collect()
    }

    /// Channel for a 1-based level. Level 0 has no channel.
    pub fn channel(&self, level: usize) -> Option<&ChannelSpec> {
        level.checked_sub(1).and_then(|i| self.channels.get(i))
    }

    /// Top breakdown voltage over ADC full scale.
    pub fn gamma(&self) -> f64 {
        self.channels[self.len() - 1].threshold() / self.v_adc_max
    }

    /// Input voltage a level stands for. Level `n >= 1` maps to its own
    /// threshold. Level 0 maps one spacing below the first threshold (or to
    /// 0 V for a single-channel ladder).
    pub fn reconstruct(&self, level: usize) -> f64 {
        match level {
            0 => match self.channels.as_slice() {
                [first, second, ..] => 2.0 * first.threshold() - second.threshold(),
                _ => 0.0,
            },
            n => self.channels[n.min(self.len()) - 1].threshold(),
        }
    }
}

/// Which channels conduct, plus hand-over bookkeeping.
///
/// The ladder is in a transition whenever `previous_channel != active_channel`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderState {
    pub active_channel: usize,
    pub previous_channel: usize,
    pub time_in_transition: f64,
}

impl Default for LadderState {
    fn default() -> Self {
        LadderState::settled(0)
    }
}

impl LadderState {
    pub fn settled(level: usize) -> Self {
        LadderState {
            active_channel: level,
            previous_channel: level,
            time_in_transition: 0.0,
        }
    }

    pub fn in_transition(&self) -> bool {
        self.previous_channel != self.active_channel
    }
}

/// Default 8-channel ladder.
pub fn default_ladder() -> LadderConfig {
    crate::config::AimqConfig::defaults()
        .ladder
        .build()
        .expect("embedded defaults describe a valid ladder")
}

/// Steady-state winner: the highest level whose threshold is at or below `v_pri`.
pub fn select_level(v_pri: f64, config: &LadderConfig) -> usize {
    config
        .channels
        .partition_point(|ch| ch.threshold() <= v_pri)
}

/// Number of steps a hand-over keeps two channels conducting at a fixed `dt`.
pub fn overlap_steps(overlap_time: f64, dt: f64) -> usize {
    ((overlap_time / dt) - TIME_SLACK).ceil().max(0.0) as usize
}

/// Advance the ladder by `dt` with primary voltage `v_pri`.
///
/// A change of winner starts a hand-over from the current active channel. A
/// further change before the hand-over finishes retargets it and restarts the
/// timer. A jump across several thresholds goes straight to the new winner.
pub fn step_ladder(state: LadderState, v_pri: f64, dt: f64, config: &LadderConfig) -> LadderState {
    let target = select_level(v_pri, config);
    let mut next = state;
    if target != next.active_channel {
        next.previous_channel = next.active_channel;
        next.active_channel = target;
        next.time_in_transition = 0.0;
    } else if next.in_transition() {
        next.time_in_transition += dt;
    }
    if next.in_transition() && next.time_in_transition + TIME_SLACK * dt >= config.overlap_time {
        next = LadderState::settled(next.active_channel);
    }
    next
}

/// Levels currently conducting, ascending. Level 0 never appears.
pub fn conducting_set(state: &LadderState, _config: &LadderConfig) -> Vec<usize> {
    let mut set = Vec::with_capacity(2);
    let (lo, hi) = if state.previous_channel <= state.active_channel {
        (state.previous_channel, state.active_channel)
    } else {
        (state.active_channel, state.previous_channel)
    };
    if lo != 0 && lo != hi {
        set.push(lo);
    }
    if hi != 0 {
        set.push(hi);
    }
    set
}

/// Voltage at the diode-OR output node.
pub fn raw_output(state: &LadderState, config: &LadderConfig) -> f64 {
    let outputs: Vec<f64> = conducting_set(state, config)
        .into_iter()
        .filter_map(|level| config.channel(level))
        .map(|ch| ch.output_level_voltage)
        .collect();
    diode_or(&outputs, config.diode_drop)
}

/// One-hot view of the ladder. Fails while two channels conduct.
pub fn one_hot_word(state: &LadderState, config: &LadderConfig) -> Result<OneHotWord> {
    let set = conducting_set(state, config);
    if set.len() > 1 {
        return Err(Error::Overlap {
            previous: state.previous_channel,
            active: state.active_channel,
        });
    }
    one_hot_encode(state.active_channel, config.len())
}
