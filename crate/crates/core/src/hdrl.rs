//! Per-agent PPO controllers: the hierarchical controller, where only due
//! tiers run their policies and lower tiers observe the allocation handed
//! down to them, and the independent multi-agent variant, where every agent
//! runs its policy every slot on its own local view.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents;
use crate::env::{ActionSet, AgentId, HierEnv, ObsMode, StepOutcome};
use crate::error::{Error, Result};
use crate::policy::Controller;
use crate::rl::checkpoint::LearnerState;
use crate::rl::ppo::UpdateStats;
use crate::rl::{Learner, NetSpec, PpoConfig, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Hierarchical,
    Independent,
}

#[derive(Debug, Clone)]
pub struct MultiAgentController {
    variant: Variant,
    pub learners: BTreeMap<AgentId, Learner>,
    pub training: bool,
    ppo: PpoConfig,
    seed: u64,
    rng: ChaCha8Rng,
    pending: BTreeMap<AgentId, Transition>,
    slots_since_update: usize,
    pub last_updates: Vec<(AgentId, UpdateStats)>,
}

fn agent_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64 + 1)
}

impl MultiAgentController {
    /// One learner per agent of `template`; shapes depend only on the
    /// scenario, so any episode of the same configuration fits.
    pub fn new(template: &HierEnv, variant: Variant, ppo: PpoConfig, seed: u64) -> Result<Self> {
        ppo.validate()?;
        let mode = Self::mode_of(variant);
        let mut learners = BTreeMap::new();
        for (k, agent) in template.agents().into_iter().enumerate() {
            let spec = NetSpec::new(template.obs_len(agent, mode), ppo.hidden.clone(), agents::heads(template, agent))?;
            learners.insert(agent, Learner::new(spec, ppo.clone(), agent_seed(seed, k)));
        }
        Ok(Self {
            variant,
            learners,
            training: true,
            ppo,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: BTreeMap::new(),
            slots_since_update: 0,
            last_updates: Vec::new(),
        })
    }

    fn mode_of(variant: Variant) -> ObsMode {
        match variant {
            Variant::Hierarchical => ObsMode::Hierarchical,
            Variant::Independent => ObsMode::Independent,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn states(&self) -> BTreeMap<String, LearnerState> {
        self.learners.iter().map(|(a, l)| (a.to_string(), LearnerState::capture(l))).collect()
    }

    pub fn restore(&mut self, states: &BTreeMap<String, LearnerState>) -> Result<()> {
        for (k, (agent, learner)) in self.learners.iter_mut().enumerate() {
            let state = states.get(&agent.to_string()).ok_or_else(|| Error::Config(format!("checkpoint has no policy for {agent}")))?;
            if state.spec != *learner.spec() {
                return Err(Error::Shape(format!("checkpoint policy for {agent} has shape {:?}, expected {:?}", state.spec, learner.spec())));
            }
            *learner = state.restore(&self.ppo, agent_seed(self.seed, k))?;
        }
        Ok(())
    }

    /// Run every learner with a nonempty buffer through one update.
    pub fn update_all(&mut self) -> Result<()> {
        self.last_updates.clear();
        for (&agent, learner) in &mut self.learners {
            if learner.buffer_len() > 0 {
                let stats = learner.update()?;
                self.last_updates.push((agent, stats));
            }
        }
        self.slots_since_update = 0;
        Ok(())
    }
}

impl Controller for MultiAgentController {
    fn label(&self) -> &'static str {
        match self.variant {
            Variant::Hierarchical => "hdrl",
            Variant::Independent => "mappo",
        }
    }

    fn act(&mut self, env: &HierEnv) -> Result<ActionSet> {
        let mode = Self::mode_of(self.variant);
        let due = env.due_agents();
        let running = match self.variant {
            Variant::Hierarchical => due.clone(),
            Variant::Independent => env.agents(),
        };
        let mut set = ActionSet::default();
        for agent in running {
            let start = Instant::now();
            let learner = self.learners.get(&agent).ok_or_else(|| Error::Config(format!("no policy for agent {agent}")))?;
            let obs = env.observe(agent, mode);
            let mask = agents::mask(env, agent);
            let is_due = due.contains(&agent);
            let digits = if self.training && is_due {
                let d = learner.act(&obs, &mask, &mut self.rng)?;
                let t = Transition { obs, actions: d.actions.clone(), mask, logp: d.logp, reward: 0.0, value: d.value, done: false };
                self.pending.insert(agent, t);
                d.actions
            } else {
                learner.act_greedy(&obs, &mask)?
            };
            if is_due {
                match agent {
                    AgentId::Global => set.global = Some(agents::decode_global(env, &digits)),
                    AgentId::Regional(h) => {
                        set.regional.insert(h, agents::decode_regional(&digits));
                    }
                    AgentId::Local(i) => {
                        set.local.insert(i, agents::decode_local(env, i, &digits));
                    }
                }
            }
            set.latency_s.insert(agent, start.elapsed().as_secs_f64());
        }
        Ok(set)
    }

    fn feedback(&mut self, outcome: &StepOutcome) -> Result<()> {
        if !self.training {
            return Ok(());
        }
        for &(agent, r) in &outcome.rewards {
            if let Some(mut t) = self.pending.remove(&agent) {
                t.reward = r;
                t.done = outcome.done;
                self.learners.get_mut(&agent).expect("pending agent has a learner").push(t);
            }
        }
        Ok(())
    }

    fn end_episode(&mut self, slots: usize) -> Result<()> {
        self.pending.clear();
        if !self.training {
            return Ok(());
        }
        self.slots_since_update += slots;
        if self.slots_since_update >= self.ppo.batch_slots {
            self.update_all()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::run_episode;
    use crate::topology::ScenarioConfig;

    fn short() -> ScenarioConfig {
        ScenarioConfig { slots_per_episode: 100, ..ScenarioConfig::micro() }
    }

    #[test]
    fn rewards_reach_each_learner_once_per_decision() {
        let cfg = short();
        let env = HierEnv::new(&cfg, 0).unwrap();
        let ppo = PpoConfig { batch_slots: 10_000, ..PpoConfig::default() };
        let mut ctl = MultiAgentController::new(&env, Variant::Hierarchical, ppo, 1).unwrap();
        let mut env = HierEnv::new(&cfg, 0).unwrap();
        run_episode(&mut env, &mut ctl, None).unwrap();
        assert_eq!(ctl.learners[&AgentId::Global].buffer_len(), 2);
        assert_eq!(ctl.learners[&AgentId::Regional(0)].buffer_len(), 10);
        assert_eq!(ctl.learners[&AgentId::Local(0)].buffer_len(), 100);
    }

    #[test]
    fn independent_runs_all_policies_every_slot() {
        let cfg = short();
        let env = HierEnv::new(&cfg, 0).unwrap();
        let mut ctl = MultiAgentController::new(&env, Variant::Independent, PpoConfig::default(), 1).unwrap();
        ctl.training = false;
        let mut env = HierEnv::new(&cfg, 0).unwrap();
        env.step(&ctl.act(&env).unwrap()).unwrap();
        let set = ctl.act(&env).unwrap();
        assert!(set.global.is_none() && set.regional.is_empty());
        assert_eq!(set.latency_s.len(), env.agents().len());
    }

    #[test]
    fn update_after_batch() {
        let cfg = short();
        let env = HierEnv::new(&cfg, 0).unwrap();
        let ppo = PpoConfig { batch_slots: 100, minibatch: 64, ..PpoConfig::default() };
        let mut ctl = MultiAgentController::new(&env, Variant::Hierarchical, ppo, 1).unwrap();
        let mut env = HierEnv::new(&cfg, 0).unwrap();
        run_episode(&mut env, &mut ctl, None).unwrap();
        assert_eq!(ctl.last_updates.len(), env.agents().len());
        assert!(ctl.learners.values().all(|l| l.buffer_len() == 0 && l.updates == 1));
    }
}
