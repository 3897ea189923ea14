//! Second-order low-pass that smooths the ladder output.
//!
//! The continuous prototype is the unity-feedback Sallen-Key response
//!
//! ```text
//! H(s) = G wc^2 / (s^2 + (wc/Q) s + wc^2)
//! ```
//!
//! discretized with the bilinear transform, pre-warped so the discrete
//! response matches the prototype exactly at `crossover_hz`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterDesign {
    pub crossover_hz: f64,
    /// DC gain.
    pub gain: f64,
    pub q: f64,
    /// Seconds per filter step.
    pub sample_interval: f64,
}

impl FilterDesign {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("crossover frequency", self.crossover_hz),
            ("gain", self.gain),
            ("Q", self.q),
            ("sample interval", self.sample_interval),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Design(format!("{name} must be positive, got {v}")));
            }
        }
        let nyquist = 0.5 / self.sample_interval;
        if self.crossover_hz >= nyquist {
            return Err(Error::Design(format!(
                "crossover {} Hz is not below the half-rate {nyquist} Hz",
                self.crossover_hz
            )));
        }
        Ok(())
    }

    /// Magnitude of the continuous prototype at `f` hertz.
    pub fn analog_magnitude(&self, f: f64) -> f64 {
        let wc = 2.0 * PI * self.crossover_hz;
        let w = 2.0 * PI * f;
        let re = wc * wc - w * w;
        let im = wc * w / self.q;
        self.gain * wc * wc / re.hypot(im)
    }
}

/// Normalized biquad in transposed direct form II.
#[derive(Debug, Clone, PartialEq)]
pub struct BiquadFilter {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
    s1: f64,
    s2: f64,
    sample_interval: f64,
}

pub fn design_sallen_key(design: &FilterDesign) -> Result<BiquadFilter> {
    design.validate()?;
    let wc = 2.0 * PI * design.crossover_hz;
    let k = wc / (wc * design.sample_interval / 2.0).tan();
    let k2 = k * k;
    let wc2 = wc * wc;
    let damp = wc * k / design.q;
    let a0 = k2 + damp + wc2;
    let b = design.gain * wc2 / a0;
    let filter = BiquadFilter {
        b0: b,
        b1: 2.0 * b,
        b2: b,
        a1: 2.0 * (wc2 - k2) / a0,
        a2: (k2 - damp + wc2) / a0,
        s1: 0.0,
        s2: 0.0,
        sample_interval: design.sample_interval,
    };
    if filter.pole_radius() >= 1.0 {
        return Err(Error::Design(format!(
            "discretized filter is unstable (pole radius {})",
            filter.pole_radius()
        )));
    }
    Ok(filter)
}

/// Advance one sample.
pub fn filter_step(filter: &mut BiquadFilter, x: f64) -> f64 {
    let y = filter.b0 * x + filter.s1;
    filter.s1 = filter.b1 * x - filter.a1 * y + filter.s2;
    filter.s2 = filter.b2 * x - filter.a2 * y;
    y
}

/// Magnitude and phase (radians) of the discrete response at `f` hertz.
pub fn frequency_response(filter: &BiquadFilter, f: f64) -> (f64, f64) {
    let w = 2.0 * PI * f * filter.sample_interval;
    // z^-1 = e^{-jw}
    let (c1, s1) = (w.cos(), -w.sin());
    let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
    let num_re = filter.b0 + filter.b1 * c1 + filter.b2 * c2;
    let num_im = filter.b1 * s1 + filter.b2 * s2;
    let den_re = 1.0 + filter.a1 * c1 + filter.a2 * c2;
    let den_im = filter.a1 * s1 + filter.a2 * s2;
    let mag = num_re.hypot(num_im) / den_re.hypot(den_im);
    let phase = num_im.atan2(num_re) - den_im.atan2(den_re);
    (mag, wrap_phase(phase))
}

fn wrap_phase(p: f64) -> f64 {
    let wrapped = (p + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped == -PI {
        PI
    } else {
        wrapped
    }
}

impl BiquadFilter {
    pub fn sample_interval(&self) -> f64 {
        self.sample_interval
    }

    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Poles as (re, im) pairs, roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [(f64, f64); 2] {
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        let re = -self.a1 / 2.0;
        if disc >= 0.0 {
            let r = disc.sqrt() / 2.0;
            [(re + r, 0.0), (re - r, 0.0)]
        } else {
            let im = (-disc).sqrt() / 2.0;
            [(re, im), (re, -im)]
        }
    }

    /// Largest pole magnitude.
    pub fn pole_radius(&self) -> f64 {
        self.poles()
            .iter()
            .map(|(re, im)| re.hypot(*im))
            .fold(0.0, f64::max)
    }

    /// Clear internal state.
    pub fn reset(&mut self) {
        self.s1 = 0.0;
        self.s2 = 0.0;
    }

    /// Load the steady state for a constant input `x`, so the next output is `dc_gain * x`.
    pub fn warm_start(&mut self, x: f64) {
        let y = self.dc_gain() * x;
        self.s2 = self.b2 * x - self.a2 * y;
        self.s1 = self.b1 * x - self.a1 * y + self.s2;
    }
}
