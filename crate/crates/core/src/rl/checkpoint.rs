//! JSON checkpoints of learners. Floats are written in round-trip form so a
//! save/load cycle is bit-exact.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::net::{Net, NetSpec};
use super::ppo::{Learner, PpoConfig};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// One learner's network (parameters in the layer order documented in
/// `net`), optimizer moments and update count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub spec: NetSpec,
    pub params: Vec<f64>,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    pub adam_t: u64,
    pub updates: u64,
}

impl LearnerState {
    pub fn capture(l: &Learner) -> Self {
        Self {
            spec: l.net.spec.clone(),
            params: l.net.params.clone(),
            adam_m: l.adam.m.clone(),
            adam_v: l.adam.v.clone(),
            adam_t: l.adam.t,
            updates: l.updates,
        }
    }

    pub fn restore(&self, cfg: &PpoConfig, seed: u64) -> Result<Learner> {
        let n = self.spec.param_count();
        if self.params.len() != n || self.adam_m.len() != n || self.adam_v.len() != n {
            return Err(Error::Shape(format!("checkpoint holds {} parameters but its network needs {n}", self.params.len())));
        }
        let net = Net { spec: self.spec.clone(), params: self.params.clone() };
        let mut adam = Adam::new(n, cfg.learning_rate);
        adam.m.clone_from(&self.adam_m);
        adam.v.clone_from(&self.adam_v);
        adam.t = self.adam_t;
        Ok(Learner::from_parts(net, adam, cfg.clone(), self.updates, seed))
    }
}

/// Every learner of a trained controller plus the context needed to reload it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub algorithm: String,
    pub config_hash: String,
    pub episodes: usize,
    pub ppo: PpoConfig,
    pub learners: BTreeMap<String, LearnerState>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!("checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})", ck.version)));
        }
        Ok(ck)
    }
}
