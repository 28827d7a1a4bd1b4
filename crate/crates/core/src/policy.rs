//! Controllers that drive an environment episode, and the episode summary
//! they produce.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::env::{ActionSet, EpisodeTrace, HierEnv, StepOutcome, Tier};
use crate::error::Result;

/// Decisions excluded from latency statistics at the start of an episode.
pub const LATENCY_WARMUP_SLOTS: usize = 10;

pub trait Controller {
    fn label(&self) -> &'static str;

    /// Actions for every agent due at the environment's current slot, with
    /// the measured decision time of each agent that ran a policy.
    fn act(&mut self, env: &HierEnv) -> Result<ActionSet>;

    fn feedback(&mut self, _outcome: &StepOutcome) -> Result<()> {
        Ok(())
    }

    /// Called after the last slot of an episode of `slots` slots.
    fn end_episode(&mut self, _slots: usize) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub slots: usize,
    /// Mean over tiers of each tier's mean decision reward.
    pub reward: f64,
    pub tier_rewards: BTreeMap<Tier, f64>,
    pub mean_global_score: f64,
    pub mean_throughput_bps: f64,
    pub throughput_variance: f64,
    pub mean_se: f64,
    pub mean_fairness: f64,
    pub mean_violation: f64,
    /// Summed decision time of all control nodes per slot, averaged over the
    /// slots after the warm-up.
    pub mean_latency_s: f64,
    pub slot_latency_s: Vec<f64>,
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    mean(&x.iter().map(|v| (v - m).powi(2)).collect::<Vec<_>>())
}

impl EpisodeSummary {
    pub fn from_trace(seed: u64, trace: &EpisodeTrace, scores: &[f64], slot_latency_s: Vec<f64>) -> Self {
        let mut by_tier: BTreeMap<Tier, Vec<f64>> = BTreeMap::new();
        for d in &trace.decisions {
            by_tier.entry(d.agent.tier()).or_default().push(d.reward);
        }
        let tier_rewards: BTreeMap<Tier, f64> = by_tier.iter().map(|(&t, r)| (t, mean(r))).collect();
        let m = &trace.metrics;
        let thr: Vec<f64> = m.iter().map(|s| s.throughput_bps).collect();
        let lat = slot_latency_s.get(LATENCY_WARMUP_SLOTS..).unwrap_or(&[]);
        Self {
            seed,
            slots: m.len(),
            reward: mean(&tier_rewards.values().copied().collect::<Vec<_>>()),
            mean_global_score: mean(scores),
            mean_throughput_bps: mean(&thr),
            throughput_variance: variance(&thr),
            mean_se: mean(&m.iter().map(|s| s.spectral_efficiency).collect::<Vec<_>>()),
            mean_fairness: mean(&m.iter().map(|s| s.fairness).collect::<Vec<_>>()),
            mean_violation: mean(&m.iter().map(|s| s.violation_fraction).collect::<Vec<_>>()),
            mean_latency_s: mean(lat),
            tier_rewards,
            slot_latency_s,
        }
    }
}

/// Run `env` to the end of its episode (or for at most `max_slots` slots).
pub fn run_episode(env: &mut HierEnv, ctl: &mut dyn Controller, max_slots: Option<usize>) -> Result<EpisodeSummary> {
    let limit = max_slots.unwrap_or(usize::MAX);
    let mut scores = Vec::new();
    let mut latency = Vec::new();
    let mut slots = 0;
    while !env.done() && slots < limit {
        let actions = ctl.act(env)?;
        latency.push(actions.latency_s.values().sum());
        let out = env.step(&actions)?;
        scores.push(out.global_score);
        ctl.feedback(&out)?;
        slots += 1;
    }
    ctl.end_episode(slots)?;
    Ok(EpisodeSummary::from_trace(env.seed(), env.trace(), &scores, latency))
}

/// Keeps the environment's initial allocation; UAVs hold position.
#[derive(Debug, Default, Clone, Copy)]
pub struct HoldController;

impl Controller for HoldController {
    fn label(&self) -> &'static str {
        "hold"
    }

    fn act(&mut self, env: &HierEnv) -> Result<ActionSet> {
        Ok(env.hold_actions())
    }
}
