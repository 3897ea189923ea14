//! Time-stepped simulation of a full quantizer run.
//!
//! Each bus sample is held for `sample_interval / engine_dt` engine steps.
//! Every step advances the ladder, takes the diode-OR output, runs it
//! through the smoothing filter, and books the primary power drawn by the
//! conducting channels.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::encoding::OneHotWord;
use crate::error::{Error, Result};
use crate::filter::{design_sallen_key, filter_step, FilterDesign};
use crate::ladder::{
    conducting_set, one_hot_word, raw_output, select_level, step_ladder, LadderConfig, LadderState,
};
use crate::power::instantaneous_primary_power;
use crate::signal::BusTrace;

/// Column header of the trace CSV.
pub const TRACE_CSV_HEADER: &str = "t,v_bus,level,one_hot,v_raw,v_filt,v_recon,p_pri,transition";

/// Marker written in the `one_hot` column while two channels overlap.
pub const OVERLAP_MARKER: &str = "--";

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub ladder: LadderConfig,
    /// Smoothing filter. Its `sample_interval` must equal `engine_dt`.
    pub filter: FilterDesign,
    pub engine_dt: f64,
    /// Multiplier from filtered output back to bus volts for the `v_recon` column.
    pub reconstruction_scale: f64,
    /// Rows before this time are left out of tracking metrics.
    pub settling_time: f64,
    /// Start the ladder settled on the first sample and the filter at its
    /// steady state, instead of from an all-off, zero-state circuit.
    pub warm_start: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        crate::config::AimqConfig::defaults()
            .sim_config()
            .expect("embedded defaults describe a valid simulation")
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.ladder.validate()?;
        self.filter.validate()?;
        if !(self.engine_dt > 0.0 && self.engine_dt.is_finite()) {
            return Err(Error::config(format!(
                "engine_dt must be positive, got {}",
                self.engine_dt
            )));
        }
        if (self.filter.sample_interval - self.engine_dt).abs() > 1e-12 * self.engine_dt {
            return Err(Error::config(format!(
                "filter runs at {} s but the engine steps at {} s",
                self.filter.sample_interval, self.engine_dt
            )));
        }
        if !(self.reconstruction_scale > 0.0 && self.reconstruction_scale.is_finite()) {
            return Err(Error::config("reconstruction_scale must be positive"));
        }
        if !(self.settling_time >= 0.0 && self.settling_time.is_finite()) {
            return Err(Error::config("settling_time must be non-negative"));
        }
        Ok(())
    }

    /// Engine steps per bus sample.
    pub fn hold_steps(&self, sample_interval: f64) -> Result<usize> {
        if self.engine_dt > sample_interval * (1.0 + 1e-9) {
            return Err(Error::config(format!(
                "engine_dt {} s is longer than the input sample interval {sample_interval} s",
                self.engine_dt
            )));
        }
        let ratio = sample_interval / self.engine_dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-6 * ratio {
            return Err(Error::config(format!(
                "input sample interval {sample_interval} s is not a whole number of {} s engine steps",
                self.engine_dt
            )));
        }
        Ok(steps as usize)
    }
}

/// One engine step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub v_bus: f64,
    /// Active level; during a hand-over this is the incoming level.
    pub level: usize,
    /// `None` while two channels conduct.
    pub one_hot: Option<OneHotWord>,
    pub v_raw: f64,
    pub v_filt: f64,
    pub v_recon: f64,
    pub p_pri: f64,
    /// Two or more channels conducting.
    pub in_transition: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    rows: Vec<TraceRow>,
    engine_dt: f64,
}

impl SimTrace {
    pub fn from_rows(rows: Vec<TraceRow>, engine_dt: f64) -> Self {
        SimTrace { rows, engine_dt }
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn engine_dt(&self) -> f64 {
        self.engine_dt
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn simulate(config: &SimConfig, bus: &BusTrace) -> Result<SimTrace> {
    config.validate()?;
    bus.validate()?;
    let hold = config.hold_steps(bus.sample_interval)?;
    let ladder = &config.ladder;
    let dt = config.engine_dt;

    let mut filter = design_sallen_key(&config.filter)?;
    let mut state = if config.warm_start {
        LadderState::settled(select_level(bus.samples[0], ladder))
    } else {
        LadderState::default()
    };
    if config.warm_start {
        filter.warm_start(raw_output(&state, ladder));
    }

    let mut rows = Vec::with_capacity(bus.len() * hold);
    for &v_bus in &bus.samples {
        for _ in 0..hold {
            state = step_ladder(state, v_bus, dt, ladder);
            let conducting = conducting_set(&state, ladder);
            let v_raw = raw_output(&state, ladder);
            let v_filt = filter_step(&mut filter, v_raw);
            rows.push(TraceRow {
                t: rows.len() as f64 * dt,
                v_bus,
                level: state.active_channel,
                one_hot: one_hot_word(&state, ladder).ok(),
                v_raw,
                v_filt,
                v_recon: v_filt * config.reconstruction_scale,
                p_pri: instantaneous_primary_power(v_bus, &conducting, ladder),
                in_transition: conducting.len() >= 2,
            });
        }
    }
    Ok(SimTrace {
        rows,
        engine_dt: dt,
    })
}

/// How tracking metrics turn the filtered output back into bus volts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructionMode {
    /// The `v_recon` column: filtered output times `reconstruction_scale`.
    Scaled,
    /// Undo the filter gain, then interpolate between the nominal level
    /// outputs and the thresholds those levels stand for.
    Threshold,
}

/// Secondary-side decoder from filtered output voltage to bus volts.
///
/// Built from the points `(output of level n, threshold n)`, with level 0 at
/// 0 V. Between points it interpolates linearly; above the top level it
/// saturates at the top threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdDecoder {
    gain: f64,
    points: Vec<(f64, f64)>,
}

impl ThresholdDecoder {
    pub fn new(ladder: &LadderConfig, filter_gain: f64) -> Self {
        let mut points: Vec<(f64, f64)> = vec![(0.0, ladder.reconstruct(0))];
        for ch in &ladder.channels {
            let out = (ch.output_level_voltage - ladder.diode_drop).max(0.0);
            let point = (out, ch.threshold());
            match points.last_mut() {
                // Levels whose output is swallowed by the diode drop collapse
                // onto one point; keep the highest.
                Some(last) if out <= last.0 => *last = point,
                _ => points.push(point),
            }
        }
        ThresholdDecoder {
            gain: filter_gain,
            points,
        }
    }

    pub fn decode(&self, v_filt: f64) -> f64 {
        let u = v_filt / self.gain;
        let first = self.points[0];
        if u <= first.0 {
            return first.1;
        }
        for pair in self.points.windows(2) {
            let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
            if u <= x1 {
                return y0 + (y1 - y0) * (u - x0) / (x1 - x0);
            }
        }
        self.points[self.points.len() - 1].1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingMetrics {
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    /// Whether a settling window was dropped from the front of the trace.
    pub settling_excluded: bool,
    pub samples_evaluated: usize,
    pub mode: ReconstructionMode,
}

/// Compare bus voltage with its reconstruction over rows after
/// `config.settling_time`, skipping rows where channels overlap.
pub fn tracking_metrics(
    trace: &SimTrace,
    config: &SimConfig,
    mode: ReconstructionMode,
) -> Result<TrackingMetrics> {
    let decoder = ThresholdDecoder::new(&config.ladder, config.filter.gain);
    let settle_from = config.settling_time - 1e-9 * trace.engine_dt;
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for row in trace.rows() {
        if row.t < settle_from || row.in_transition {
            continue;
        }
        let recon = match mode {
            ReconstructionMode::Scaled => row.v_recon,
            ReconstructionMode::Threshold => decoder.decode(row.v_filt),
        };
        let err = (row.v_bus - recon).abs();
        max = max.max(err);
        sum += err;
        count += 1;
    }
    if count == 0 {
        return Err(Error::TraceTooShort {
            rows: trace.len(),
            settling: config.settling_time,
        });
    }
    Ok(TrackingMetrics {
        max_abs_error: max,
        mean_abs_error: sum / count as f64,
        settling_excluded: config.settling_time > 0.0,
        samples_evaluated: count,
        mode,
    })
}

/// Format with 9 significant digits, positional for ordinary magnitudes and
/// scientific otherwise.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

pub fn trace_csv_string(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(trace.len() * 96);
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for r in trace.rows() {
        let word = r
            .one_hot
            .map_or_else(|| OVERLAP_MARKER.to_string(), |w| w.to_string());
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            format_sig9(r.t),
            format_sig9(r.v_bus),
            r.level,
            word,
            format_sig9(r.v_raw),
            format_sig9(r.v_filt),
            format_sig9(r.v_recon),
            format_sig9(r.p_pri),
            u8::from(r.in_transition),
        )
        .unwrap();
    }
    out
}

pub fn write_trace_csv(trace: &SimTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, trace_csv_string(trace)).map_err(|e| Error::io(path, e))
}

/// Parse a trace CSV back into rows. `engine_dt` is taken from the first two rows.
pub fn parse_trace_csv(text: &str, path: &Path) -> Result<SimTrace> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h == TRACE_CSV_HEADER => {}
        Some((n, h)) => return Err(err(n, format!("unexpected header `{h}`"))),
        None => return Err(err(1, "empty trace CSV".to_string())),
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(err(n, format!("expected 9 fields, found {}", fields.len())));
        }
        let float = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|e| err(n, format!("field {}: {e}", i + 1)))
        };
        let one_hot = match fields[3] {
            OVERLAP_MARKER => None,
            s => Some(OneHotWord::parse(s).map_err(|e| err(n, e.to_string()))?),
        };
        rows.push(TraceRow {
            t: float(0)?,
            v_bus: float(1)?,
            level: fields[2]
                .parse()
                .map_err(|e| err(n, format!("field 3: {e}")))?,
            one_hot,
            v_raw: float(4)?,
            v_filt: float(5)?,
            v_recon: float(6)?,
            p_pri: float(7)?,
            in_transition: match fields[8] {
                "0" => false,
                "1" => true,
                other => return Err(err(n, format!("bad transition flag `{other}`"))),
            },
        });
    }
    let engine_dt = match rows.as_slice() {
        [a, b, ..] => b.t - a.t,
        _ => 0.0,
    };
    Ok(SimTrace { rows, engine_dt })
}
