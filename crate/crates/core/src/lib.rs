//! Stochastic-geometry toolkit for studying when network densification stops
//! paying off once near-field propagation is taken into account.
//!
//! The crate is organised by subsystem:
//!
//! * [`propagation`]: field-region boundaries and bounded/unbounded multi-slope
//!   pathloss laws.
//! * [`geometry`]: Poisson and grid deployments, nearest-point association and
//!   link-distance statistics.
//! * [`linklevel`]: Monte Carlo SINR at a typical user, coverage probability and
//!   spatial throughput.
//! * [`critical_density`]: search for the throughput-maximising density and the
//!   `μ·exp(−κμ)` scaling fit.
//! * [`interference_field`]: aggregate interference rasters over grid deployments.
//! * [`mitigation`]: SIC, IA and the hybrid ICA decoder behind a strategy registry.
//! * [`fitting`]: pathloss model fitting to distance/power measurements.
//!
//! All randomness flows through [`seeding::SeedSchedule`], which derives an
//! independent counter-based stream per `(tag, index)` so results never depend
//! on the number of worker threads.

pub mod critical_density;
pub mod error;
pub mod fitting;
pub mod geometry;
pub mod interference_field;
pub mod linklevel;
pub mod mitigation;
pub mod propagation;
pub mod report;
pub mod seeding;
pub mod units;

pub use error::{Error, Result};
