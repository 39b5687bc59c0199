//! Multi-AIRS multi-user downlink scheduling lab.
//!
//! Fading channels with active reflecting surfaces, Monte Carlo ergodic SE,
//! neural and table channel knowledge maps, and the SM-IB max-min scheduler
//! with exact and random baselines.

pub mod airs;
pub mod channel;
pub mod ckm;
pub mod cli;
pub mod neural;
pub mod error;
pub mod oracle;
pub mod rng;
pub mod scenario;
pub mod sched;
pub mod scene;
pub mod units;

pub use error::{Error, Result};
