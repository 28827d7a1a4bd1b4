//! Reference controllers: uniformly random actions, myopic exhaustive
//! search, and a single centralized PPO policy.

pub mod exhaustive;
pub mod flat;
pub mod random;

pub use exhaustive::ExhaustiveController;
pub use flat::FlatController;
pub use random::RandomController;
