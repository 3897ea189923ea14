//! Primary-side power: per-step accounting for simulation traces, and the
//! closed-form comparison against an isolation amplifier fed by its own
//! isolated converter.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::SimTrace;
use crate::error::{Error, Result};
use crate::ladder::LadderConfig;

/// Share of the secondary term, relative to the primary term, below which
/// the secondary-neglecting ratio is treated as valid.
pub const NEGLIGIBLE_SECONDARY: f64 = 0.01;

/// Power inputs for an isolation amplifier with a supplemental converter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoAmpBudget {
    pub v_pri: f64,
    /// Amplifier input bias current; the divider is fed ten times this.
    pub i_b: f64,
    pub v_iso: f64,
    pub i_pri: f64,
    /// Converter efficiency in (0, 1].
    pub eta: f64,
    pub v_sec: f64,
    pub i_sec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AimqBudget {
    pub v_pri: f64,
    /// The larger of the Zener knee current and the LED forward current.
    pub i_zf: f64,
    pub v_sec: f64,
    pub i_out: f64,
}

fn check_non_negative(values: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in values {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::config(format!(
                "{name} must be non-negative, got {v}"
            )));
        }
    }
    Ok(())
}

impl IsoAmpBudget {
    pub fn validate(&self) -> Result<()> {
        check_non_negative(&[
            ("v_pri", self.v_pri),
            ("i_b", self.i_b),
            ("v_iso", self.v_iso),
            ("i_pri", self.i_pri),
            ("v_sec", self.v_sec),
            ("i_sec", self.i_sec),
        ])?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::config(format!(
                "converter efficiency must be in (0, 1], got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

impl AimqBudget {
    pub fn validate(&self) -> Result<()> {
        check_non_negative(&[
            ("v_pri", self.v_pri),
            ("i_zf", self.i_zf),
            ("v_sec", self.v_sec),
            ("i_out", self.i_out),
        ])
    }

    /// Whether the secondary term is small enough to drop.
    pub fn secondary_negligible(&self) -> bool {
        self.v_sec * self.i_out <= NEGLIGIBLE_SECONDARY * self.v_pri * self.i_zf
    }
}

/// Current drawn from the primary bus by one conducting channel.
pub fn channel_current(v_pri: f64, level: usize, config: &LadderConfig) -> f64 {
    match config.channel(level) {
        None => 0.0,
        Some(ch) if config.current_limiting => ch.opto.forward_current,
        Some(ch) => ch.zener.unlimited_current(v_pri),
    }
}

/// Bus voltage times the summed current of every conducting channel.
pub fn instantaneous_primary_power(v_pri: f64, conducting: &[usize], config: &LadderConfig) -> f64 {
    let current: f64 = conducting
        .iter()
        .map(|&level| channel_current(v_pri, level, config))
        .sum();
    v_pri * current
}

pub fn iso_amp_total_power(b: &IsoAmpBudget) -> Result<f64> {
    if b.eta == 0.0 {
        return Err(Error::ZeroDenominator {
            what: "converter efficiency",
        });
    }
    Ok(b.v_pri * 10.0 * b.i_b + b.v_iso * b.i_pri / b.eta + b.v_sec * b.i_sec)
}

pub fn aimq_total_power(b: &AimqBudget) -> f64 {
    b.v_pri * b.i_zf + b.v_sec * b.i_out
}

/// Ratio of quantizer power to isolation-amplifier power.
///
/// With `neglect_secondary` the result is `1 / (10 + (v_iso i_pri / eta) / (v_pri i_zf))`,
/// which assumes `i_b == i_zf` and drops both secondary terms. Otherwise it is
/// the quotient of the two full totals.
pub fn power_ratio(iso: &IsoAmpBudget, aimq: &AimqBudget, neglect_secondary: bool) -> Result<f64> {
    if iso.eta == 0.0 {
        return Err(Error::ZeroDenominator {
            what: "converter efficiency",
        });
    }
    if neglect_secondary {
        let primary = aimq.v_pri * aimq.i_zf;
        if primary == 0.0 {
            return Err(Error::ZeroDenominator {
                what: "quantizer primary power",
            });
        }
        let converter = iso.v_iso * iso.i_pri / iso.eta;
        Ok(1.0 / (10.0 + converter / primary))
    } else {
        let total = iso_amp_total_power(iso)?;
        if total == 0.0 {
            return Err(Error::ZeroDenominator {
                what: "isolation amplifier power",
            });
        }
        Ok(aimq_total_power(aimq) / total)
    }
}

/// Summary of the primary-power column of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerReport {
    pub mean_primary_power: f64,
    pub peak_primary_power: f64,
    /// Maximal runs of consecutive rows with two or more channels conducting.
    pub spike_count: usize,
    /// (min, max) power over rows where at most one channel conducts.
    /// `None` if every row overlaps.
    pub steady_band: Option<(f64, f64)>,
    /// Fraction of rows with two or more channels conducting.
    pub transition_fraction: f64,
    pub rows: usize,
}

pub fn summarize_power(trace: &SimTrace) -> PowerReport {
    let rows = trace.rows();
    let n = rows.len();
    let mut sum = 0.0;
    let mut peak = f64::NEG_INFINITY;
    let mut spikes = 0;
    let mut transition_rows = 0;
    let mut was_spiking = false;
    let mut band: Option<(f64, f64)> = None;
    for row in rows {
        sum += row.p_pri;
        peak = peak.max(row.p_pri);
        if row.in_transition {
            transition_rows += 1;
            if !was_spiking {
                spikes += 1;
            }
        } else {
            band = Some(match band {
                None => (row.p_pri, row.p_pri),
                Some((lo, hi)) => (lo.min(row.p_pri), hi.max(row.p_pri)),
            });
        }
        was_spiking = row.in_transition;
    }
    PowerReport {
        mean_primary_power: if n == 0 { 0.0 } else { sum / n as f64 },
        peak_primary_power: if n == 0 { 0.0 } else { peak },
        spike_count: spikes,
        steady_band: band,
        transition_fraction: if n == 0 {
            0.0
        } else {
            transition_rows as f64 / n as f64
        },
        rows: n,
    }
}

impl PowerReport {
    fn metrics(&self) -> Vec<(&'static str, f64, &'static str)> {
        let (lo, hi) = self.steady_band.unwrap_or((f64::NAN, f64::NAN));
        vec![
            ("mean_primary_power", self.mean_primary_power, "W"),
            ("peak_primary_power", self.peak_primary_power, "W"),
            ("steady_band_min", lo, "W"),
            ("steady_band_max", hi, "W"),
            ("spike_count", self.spike_count as f64, "count"),
            ("transition_fraction", self.transition_fraction, "ratio"),
            ("rows", self.rows as f64, "count"),
        ]
    }

    /// `metric,value,unit` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value,unit\n");
        for (name, value, unit) in self.metrics() {
            writeln!(out, "{name},{value},{unit}").unwrap();
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("primary power\n");
        writeln!(out, "  mean          {:.6} W", self.mean_primary_power).unwrap();
        writeln!(out, "  peak          {:.6} W", self.peak_primary_power).unwrap();
        match self.steady_band {
            Some((lo, hi)) => {
                writeln!(out, "  steady band   {lo:.6} .. {hi:.6} W").unwrap();
            }
            None => out.push_str("  steady band   none\n"),
        }
        writeln!(out, "  spikes        {}", self.spike_count).unwrap();
        writeln!(
            out,
            "  in transition {:.3}% of {} rows",
            100.0 * self.transition_fraction,
            self.rows
        )
        .unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ladder::default_ladder;
    use proptest::prelude::*;

    fn eq8_iso() -> IsoAmpBudget {
        IsoAmpBudget {
            v_pri: 120.0,
            i_b: 100e-9,
            v_iso: 5.0,
            i_pri: 100e-9,
            eta: 0.6,
            v_sec: 0.0,
            i_sec: 100e-9,
        }
    }

    fn eq8_aimq() -> AimqBudget {
        AimqBudget {
            v_pri: 120.0,
            i_zf: 100e-9,
            v_sec: 0.0,
            i_out: 100e-9,
        }
    }

    #[test]
    fn instantaneous_power_examples() {
        let l = default_ladder();
        assert!((instantaneous_primary_power(120.0, &[6], &l) - 0.12).abs() < 1e-12);
        assert_eq!(instantaneous_primary_power(120.0, &[], &l), 0.0);
        assert!((instantaneous_primary_power(130.0, &[6, 7], &l) - 0.26).abs() < 1e-12);
    }

    #[test]
    fn unlimited_mode_uses_dynamic_resistance() {
        let mut l = default_ladder();
        l.current_limiting = false;
        let r = l.channels[5].zener.dynamic_resistance;
        let expected = 120.0 * (120.0 - 116.0) / r;
        assert!((instantaneous_primary_power(120.0, &[6], &l) - expected).abs() < 1e-9);
    }

    #[test]
    fn iso_amp_examples() {
        let p = iso_amp_total_power(&eq8_iso()).unwrap();
        let expected = 120.0 * 10.0 * 100e-9 + 5.0 * 100e-9 / 0.6;
        assert!((p - expected).abs() < 1e-15);
        assert!((p - 1.208e-4).abs() < 1e-7);
        let zero = IsoAmpBudget {
            i_b: 0.0,
            i_pri: 0.0,
            i_sec: 0.0,
            ..eq8_iso()
        };
        assert_eq!(iso_amp_total_power(&zero).unwrap(), 0.0);
        let doubled = IsoAmpBudget {
            i_b: 200e-9,
            ..eq8_iso()
        };
        let delta = iso_amp_total_power(&doubled).unwrap() - p;
        assert!((delta - 120.0 * 10.0 * 100e-9).abs() < 1e-15);
        let bad = IsoAmpBudget {
            eta: 0.0,
            ..eq8_iso()
        };
        assert!(matches!(
            iso_amp_total_power(&bad),
            Err(Error::ZeroDenominator { .. })
        ));
    }

    #[test]
    fn aimq_examples() {
        assert!((aimq_total_power(&eq8_aimq()) - 1.2e-5).abs() < 1e-18);
        let zero = AimqBudget {
            i_zf: 0.0,
            i_out: 0.0,
            ..eq8_aimq()
        };
        assert_eq!(aimq_total_power(&zero), 0.0);
        let secondary_only = AimqBudget {
            v_pri: 0.0,
            i_zf: 1.0,
            v_sec: 5.0,
            i_out: 2e-3,
        };
        assert_eq!(aimq_total_power(&secondary_only), 5.0 * 2e-3);
    }

    #[test]
    fn ratio_examples() {
        let r = power_ratio(&eq8_iso(), &eq8_aimq(), true).unwrap();
        assert!((r - 1.0 / (10.0 + 5.0 / 72.0)).abs() < 1e-12);
        assert!((r - 1.0 / 10.1).abs() < 0.005);
        let no_pri = IsoAmpBudget {
            i_pri: 0.0,
            ..eq8_iso()
        };
        assert_eq!(power_ratio(&no_pri, &eq8_aimq(), true).unwrap(), 0.1);

        let iso = IsoAmpBudget {
            v_sec: 0.1,
            ..eq8_iso()
        };
        let aimq = AimqBudget {
            v_sec: 0.1,
            ..eq8_aimq()
        };
        assert!(aimq.secondary_negligible());
        let full = power_ratio(&iso, &aimq, false).unwrap();
        let simple = power_ratio(&iso, &aimq, true).unwrap();
        assert!((full - simple).abs() / simple < 0.01);
    }

    #[test]
    fn ratio_zero_denominators() {
        let aimq = AimqBudget {
            i_zf: 0.0,
            ..eq8_aimq()
        };
        assert!(power_ratio(&eq8_iso(), &aimq, true).is_err());
        let iso = IsoAmpBudget {
            i_b: 0.0,
            i_pri: 0.0,
            i_sec: 0.0,
            ..eq8_iso()
        };
        assert!(power_ratio(&iso, &eq8_aimq(), false).is_err());
    }

    #[test]
    fn budget_validation() {
        assert!(eq8_iso().validate().is_ok());
        assert!(IsoAmpBudget {
            eta: 1.5,
            ..eq8_iso()
        }
        .validate()
        .is_err());
        assert!(IsoAmpBudget {
            eta: 0.0,
            ..eq8_iso()
        }
        .validate()
        .is_err());
        assert!(AimqBudget {
            i_zf: -1.0,
            ..eq8_aimq()
        }
        .validate()
        .is_err());
    }

    proptest! {
        #[test]
        fn totals_are_monotone(
            base in proptest::array::uniform7(0.0..200.0f64),
            which in 0usize..7,
            bump in 0.0..50.0f64,
            eta in 0.05..=1.0f64,
        ) {
            let mk = |v: [f64; 7]| IsoAmpBudget {
                v_pri: v[0], i_b: v[1] * 1e-6, v_iso: v[2], i_pri: v[3] * 1e-6,
                eta, v_sec: v[4], i_sec: v[5] * 1e-6,
            };
            let mut bumped = base;
            bumped[which] += bump;
            prop_assert!(iso_amp_total_power(&mk(bumped)).unwrap() >= iso_amp_total_power(&mk(base)).unwrap());

            let mka = |v: [f64; 7]| AimqBudget { v_pri: v[0], i_zf: v[1] * 1e-6, v_sec: v[2], i_out: v[3] * 1e-6 };
            prop_assert!(aimq_total_power(&mka(bumped)) >= aimq_total_power(&mka(base)));
        }
    }
}
