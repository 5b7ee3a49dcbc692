//! Behavioral simulator for discharge-based analog multiplication inside a
//! 6T SRAM array.
//!
//! The crate covers the square-law access-transistor model ([`device`]),
//! bit-line-bar discharge ([`discharge`]), linear and root word-line DAC laws
//! ([`wl_dac`]), kT/C-limited SNR ([`snr`]), the charge-sharing 4x4
//! multiplier ([`mac`]) and a seeded Monte Carlo mismatch engine
//! ([`varsim`]). [`cli`] ties them into a CSV-emitting command-line tool.

pub mod cli;
pub mod device;
pub mod discharge;
pub mod error;
pub mod exec;
pub mod mac;
pub mod snr;
pub mod varsim;
pub mod wl_dac;

pub use device::{Region, TechParams};
pub use discharge::{DischargeModel, DischargeTrace, PulseBound};
pub use error::{Error, Result};
pub use exec::Execution;
pub use mac::{MacConfig, MacResult, Multiplier, Weighting};
pub use snr::{NoiseModel, SnrConfig};
pub use varsim::{McGrid, McStats, VariationSpec};
pub use wl_dac::{DacConfig, DacMode};
