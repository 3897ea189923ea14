//! Bus voltage test signals.
//!
//! The random walk draws its increments from ChaCha8 (`rand_chacha`) seeded
//! with `seed_from_u64`, so a seed names the same trace on every platform.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Name of the generator behind [`random_walk_bus`], recorded in run reports.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3, seed_from_u64)";

/// A uniformly sampled bus voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct BusTrace {
    /// Seconds between samples.
    pub sample_interval: f64,
    pub samples: Vec<f64>,
    /// Seed the trace was generated from, if it is random.
    pub seed: Option<u64>,
}

impl BusTrace {
    pub fn new(sample_interval: f64, samples: Vec<f64>) -> Result<Self> {
        let trace = BusTrace {
            sample_interval,
            samples,
            seed: None,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::config(format!(
                "sample interval must be positive, got {}",
                self.sample_interval
            )));
        }
        if self.samples.is_empty() {
            return Err(Error::config("bus trace has no samples"));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!("bus sample {i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.sample_interval
    }
}

fn check_interval(t_s: f64) -> Result<()> {
    if t_s > 0.0 && t_s.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!(
            "sample interval must be positive, got {t_s}"
        )))
    }
}

/// Random walk whose increments are i.i.d. uniform on the open interval (-1, 1) V.
///
/// `steps` counts samples, so `steps == 1` is just `[v0]`.
pub fn random_walk_bus(v0: f64, steps: usize, t_s: f64, seed: u64) -> Result<BusTrace> {
    random_walk_bus_clamped(v0, steps, t_s, seed, None)
}

/// As [`random_walk_bus`], optionally clamping every sample to `[min, max]`.
pub fn random_walk_bus_clamped(
    v0: f64,
    steps: usize,
    t_s: f64,
    seed: u64,
    clamp: Option<(f64, f64)>,
) -> Result<BusTrace> {
    if steps == 0 {
        return Err(Error::config("random walk needs at least one step"));
    }
    check_interval(t_s)?;
    if let Some((lo, hi)) = clamp {
        if !(lo <= hi) {
            return Err(Error::config(format!("clamp range [{lo}, {hi}] is empty")));
        }
    }
    let bound = |v: f64| clamp.map_or(v, |(lo, hi)| v.clamp(lo, hi));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(steps);
    let mut v = bound(v0);
    samples.push(v);
    for _ in 1..steps {
        let u: f64 = rng.sample(Open01);
        v = bound(v + (2.0 * u - 1.0));
        samples.push(v);
    }
    Ok(BusTrace {
        sample_interval: t_s,
        samples,
        seed: Some(seed),
    })
}

/// Linear ramp from `v_start` to `v_end`, both included.
pub fn ramp(v_start: f64, v_end: f64, steps: usize, t_s: f64) -> Result<BusTrace> {
    if steps < 2 {
        return Err(Error::config("a ramp needs at least two steps"));
    }
    check_interval(t_s)?;
    let last = (steps - 1) as f64;
    let samples = (0..steps)
        .map(|i| {
            let frac = i as f64 / last;
            v_start + (v_end - v_start) * frac
        })
        .collect();
    BusTrace::new(t_s, samples)
}

pub fn constant(v: f64, steps: usize, t_s: f64) -> Result<BusTrace> {
    if steps == 0 {
        return Err(Error::config("a constant trace needs at least one step"));
    }
    check_interval(t_s)?;
    BusTrace::new(t_s, vec![v; steps])
}

/// Serialize to the trace file format: `t_s=<seconds>` then one voltage per line.
pub fn format_trace(trace: &BusTrace) -> String {
    let mut out = format!("t_s={}\n", trace.sample_interval);
    for v in &trace.samples {
        writeln!(out, "{v}").expect("writing to a String cannot fail");
    }
    out
}

pub fn write_trace(trace: &BusTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_trace(trace)).map_err(|e| Error::io(path, e))
}

/// Parse trace file contents. Blank lines are skipped; `path` only labels errors.
pub fn parse_trace(text: &str, path: &Path) -> Result<BusTrace> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty trace file".to_string()))?;
    let t_s: f64 = header
        .strip_prefix("t_s=")
        .ok_or_else(|| {
            parse_err(
                header_line,
                format!("expected `t_s=<seconds>`, got `{header}`"),
            )
        })?
        .trim()
        .parse()
        .map_err(|e| parse_err(header_line, format!("bad sample interval: {e}")))?;
    if !(t_s > 0.0 && t_s.is_finite()) {
        return Err(parse_err(
            header_line,
            format!("sample interval must be positive, got {t_s}"),
        ));
    }

    let mut samples = Vec::new();
    for (line, text) in lines {
        let v: f64 = text
            .parse()
            .map_err(|e| parse_err(line, format!("bad voltage `{text}`: {e}")))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("voltage `{text}` is not finite")));
        }
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(parse_err(header_line, "trace has no samples".to_string()));
    }
    Ok(BusTrace {
        sample_interval: t_s,
        samples,
        seed: None,
    })
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<BusTrace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text, path)
}
