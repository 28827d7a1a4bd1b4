//! Uniformly random valid actions for every due tier.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents;
use crate::env::{ActionSet, AgentId, HierEnv};
use crate::error::Result;
use crate::policy::Controller;

#[derive(Debug, Clone)]
pub struct RandomController {
    rng: ChaCha8Rng,
}

impl RandomController {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Controller for RandomController {
    fn label(&self) -> &'static str {
        "random"
    }

    fn act(&mut self, env: &HierEnv) -> Result<ActionSet> {
        let mut set = ActionSet::default();
        for agent in env.due_agents() {
            let start = Instant::now();
            let heads = agents::heads(env, agent);
            let mask = agents::mask(env, agent);
            let digits: Vec<usize> = heads.iter().zip(&mask).map(|(&n, &on)| if on { self.rng.gen_range(0..n) } else { 0 }).collect();
            match agent {
                AgentId::Global => set.global = Some(agents::decode_global(env, &digits)),
                AgentId::Regional(h) => {
                    set.regional.insert(h, agents::decode_regional(&digits));
                }
                AgentId::Local(i) => {
                    set.local.insert(i, agents::decode_local(env, i, &digits));
                }
            }
            set.latency_s.insert(agent, start.elapsed().as_secs_f64());
        }
        Ok(set)
    }
}
