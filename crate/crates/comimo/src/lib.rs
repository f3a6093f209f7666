//! Simulation and optimization toolkit for end-user-centric collaborative
//! MIMO: a nearby device amplifies and forwards the base-station signal on a
//! second band, appending relay rows to the direct channel matrix.
//!
//! Modules:
//! - [`channel`]: statistical channel generation (line-of-sight phases,
//!   Rician mixing, path loss, deterministic sub-streams).
//! - [`composite`]: relay-channel construction for both phase-shifter
//!   structures, channel stacking, and the rank-one additive baseline.
//! - [`spectrum`]: singular-spectrum analysis of the stacked channel via
//!   the secular-equation rank-one update, with interlacing diagnostics.
//! - [`metrics`]: spectral efficiency and its base/gain split, averaged
//!   SNR, and the proxy rank-indicator / throughput models.
//! - [`optimize`]: exhaustive and blind-greedy phase searches plus the
//!   closed-form rank-one solutions.
//! - [`harness`]: scenario configuration, Monte-Carlo experiment drivers,
//!   and CSV/JSON persistence.

pub mod channel;
pub mod composite;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod optimize;
pub mod spectrum;

pub use error::{Error, Result};
