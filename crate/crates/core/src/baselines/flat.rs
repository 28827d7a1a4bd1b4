//! A single centralized PPO policy over the joint action of every agent.
//!
//! The observation concatenates every agent's view; the action heads
//! concatenate every agent's heads, with only the heads of due agents active.
//! The reward of each slot is the network-scope score minus that slot's
//! penalties.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents;
use crate::env::{ActionSet, AgentId, HierEnv, ObsMode, StepOutcome};
use crate::error::Result;
use crate::policy::Controller;
use crate::rl::checkpoint::LearnerState;
use crate::rl::{Learner, NetSpec, PpoConfig, Transition};

/// Key of the single policy in checkpoints.
pub const FLAT_POLICY_KEY: &str = "central";

#[derive(Debug, Clone)]
pub struct FlatController {
    pub learner: Learner,
    pub training: bool,
    agents: Vec<AgentId>,
    /// Number of heads of each agent, in `agents` order.
    head_counts: Vec<usize>,
    ppo: PpoConfig,
    seed: u64,
    rng: ChaCha8Rng,
    pending: Option<Transition>,
    slots_since_update: usize,
}

impl FlatController {
    pub fn new(template: &HierEnv, ppo: PpoConfig, seed: u64) -> Result<Self> {
        ppo.validate()?;
        let agents = template.agents();
        let mut heads = Vec::new();
        let mut head_counts = Vec::new();
        let mut input = 0;
        for &a in &agents {
            let h = agents::heads(template, a);
            head_counts.push(h.len());
            heads.extend(h);
            input += template.obs_len(a, ObsMode::Hierarchical);
        }
        let spec = NetSpec::new(input, ppo.hidden.clone(), heads)?;
        Ok(Self {
            learner: Learner::new(spec, ppo.clone(), seed),
            training: true,
            agents,
            head_counts,
            ppo,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5EED),
            pending: None,
            slots_since_update: 0,
        })
    }

    pub fn states(&self) -> BTreeMap<String, LearnerState> {
        BTreeMap::from([(FLAT_POLICY_KEY.to_string(), LearnerState::capture(&self.learner))])
    }

    pub fn restore(&mut self, states: &BTreeMap<String, LearnerState>) -> Result<()> {
        let state = states.get(FLAT_POLICY_KEY).ok_or_else(|| crate::Error::Config("checkpoint has no central policy".into()))?;
        if state.spec != *self.learner.spec() {
            return Err(crate::Error::Shape("checkpoint policy shape does not match the scenario".into()));
        }
        self.learner = state.restore(&self.ppo, self.seed)?;
        Ok(())
    }
}

impl Controller for FlatController {
    fn label(&self) -> &'static str {
        "flat"
    }

    fn act(&mut self, env: &HierEnv) -> Result<ActionSet> {
        let start = Instant::now();
        let due = env.due_agents();
        let mut obs = Vec::with_capacity(self.learner.spec().input_len);
        let mut mask = Vec::with_capacity(self.learner.spec().heads.len());
        for (&a, &n) in self.agents.iter().zip(&self.head_counts) {
            obs.extend(env.observe(a, ObsMode::Hierarchical));
            if due.contains(&a) {
                mask.extend(agents::mask(env, a));
            } else {
                mask.extend(std::iter::repeat(false).take(n));
            }
        }
        let digits = if self.training {
            let d = self.learner.act(&obs, &mask, &mut self.rng)?;
            self.pending = Some(Transition { obs, actions: d.actions.clone(), mask, logp: d.logp, reward: 0.0, value: d.value, done: false });
            d.actions
        } else {
            self.learner.act_greedy(&obs, &mask)?
        };

        let mut set = ActionSet::default();
        let mut at = 0;
        for (&a, &n) in self.agents.iter().zip(&self.head_counts) {
            let d = &digits[at..at + n];
            at += n;
            if !due.contains(&a) {
                continue;
            }
            match a {
                AgentId::Global => set.global = Some(agents::decode_global(env, d)),
                AgentId::Regional(h) => {
                    set.regional.insert(h, agents::decode_regional(d));
                }
                AgentId::Local(i) => {
                    set.local.insert(i, agents::decode_local(env, i, d));
                }
            }
        }
        // One central decision per slot, hosted at the top of the hierarchy.
        set.latency_s.insert(AgentId::Global, start.elapsed().as_secs_f64());
        Ok(set)
    }

    fn feedback(&mut self, outcome: &StepOutcome) -> Result<()> {
        if let Some(mut t) = self.pending.take() {
            t.reward = outcome.global_score - outcome.penalty;
            t.done = outcome.done;
            self.learner.push(t);
        }
        Ok(())
    }

    fn end_episode(&mut self, slots: usize) -> Result<()> {
        self.pending = None;
        if !self.training {
            return Ok(());
        }
        self.slots_since_update += slots;
        if self.slots_since_update >= self.ppo.batch_slots && self.learner.buffer_len() > 0 {
            self.learner.update()?;
            self.slots_since_update = 0;
        }
        Ok(())
    }
}
