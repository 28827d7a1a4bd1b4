//! Policy-gradient learning core: networks, optimizer, advantage
//! estimation, the clipped-surrogate update and convergence detection.

pub mod adam;
pub mod checkpoint;
pub mod convergence;
pub mod dist;
pub mod gae;
pub mod net;
pub mod ppo;

pub use net::{Net, NetSpec};
pub use ppo::{Learner, PpoConfig, Transition};
