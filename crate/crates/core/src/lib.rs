//! Secure massive MIMO-NOMA downlink with artificial noise: closed-form ergodic
//! secrecy rates, a Monte Carlo link simulator that checks them, and DC/Dinkelbach
//! power allocation for sum secrecy rate and energy efficiency.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: system configuration, power variables and estimation quality
//! - [`rates`]: closed-form legitimate, eavesdropper and secrecy rates, asymptotes, OMA
//! - [`montecarlo`]: channel draws, MMSE/MRT/AN pipeline and empirical oracles
//! - [`kernel`]: projected-gradient maximizer for smooth concave problems
//! - [`optim`]: DC programming, Dinkelbach and the baseline allocators
//! - [`experiment`]: JSON experiment specs and CSV drivers used by the binary

pub mod error;
pub mod experiment;
pub mod kernel;
pub mod model;
pub mod montecarlo;
pub mod optim;
pub mod rates;

pub use error::{Error, Result};
pub use model::{
    compute_rho, db_to_linear, linear_to_db, ClusterConfig, DownlinkPower, EstimationQuality,
    PowerBudget, SystemConfig, UplinkCap, UplinkPower,
};
pub use rates::{secrecy_report, RateReport};
