//! Behavioral simulator for an analog isolated multilevel quantizer.
//!
//! A ladder of Zener-thresholded channels watches a primary-side bus. The
//! highest channel in breakdown wins and switches off every channel below it,
//! so at most one optocoupler is lit and the secondary side sees one of
//! `N + 1` discrete output levels: an analog one-hot code. This crate models
//! that ladder step by step, together with its output filter and the power it
//! draws from the bus.
//!
//! ```
//! use aimq::engine::{simulate, tracking_metrics, ReconstructionMode, SimConfig};
//! use aimq::power::summarize_power;
//! use aimq::signal::random_walk_bus;
//!
//! let config = SimConfig::default();
//! let bus = random_walk_bus(100.0, 200, 0.01, 42)?;
//! let trace = simulate(&config, &bus)?;
//! let power = summarize_power(&trace);
//! assert!(power.peak_primary_power < 0.4);
//! let fit = tracking_metrics(&trace, &config, ReconstructionMode::Threshold)?;
//! assert!(fit.max_abs_error < 12.0);
//! # Ok::<(), aimq::Error>(())
//! ```

pub mod config;
pub mod devices;
pub mod encoding;
pub mod engine;
pub mod error;
pub mod filter;
pub mod ladder;
pub mod power;
pub mod signal;

pub use config::AimqConfig;
pub use error::{Error, Result};

// Run the guide's code listings as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/devices.md")]
    mod devices {}
    #[doc = include_str!("../../../book/src/one-hot.md")]
    mod one_hot {}
    #[doc = include_str!("../../../book/src/ladder.md")]
    mod ladder {}
    #[doc = include_str!("../../../book/src/signals.md")]
    mod signals {}
    #[doc = include_str!("../../../book/src/filter.md")]
    mod filter {}
    #[doc = include_str!("../../../book/src/power.md")]
    mod power {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
