//! Simulator and training harness for hierarchical spectrum sharing across a
//! LEO satellite, high-altitude platforms, UAVs and terrestrial base stations.

pub mod agents;
pub mod baselines;
pub mod channel;
pub mod complexity;
pub mod env;
pub mod error;
pub mod harness;
pub mod hdrl;
pub mod metrics;
pub mod phy;
pub mod policy;
pub mod rl;
pub mod topology;

pub use error::{Error, Result};
