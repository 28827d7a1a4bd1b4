//! Clipped-surrogate policy optimization over factorized categorical heads.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{clip_grad_norm, Adam};
use super::dist::{argmax, entropy, log_softmax, sample};
use super::gae::gae_with_dones;
use super::net::{Net, NetSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub learning_rate: f64,
    /// Environment slots of experience gathered between updates.
    pub batch_slots: usize,
    pub gamma: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub gae_lambda: f64,
    pub epochs_per_update: usize,
    pub minibatch: usize,
    pub max_grad_norm: f64,
    pub hidden: Vec<usize>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            batch_slots: 2000,
            gamma: 0.99,
            clip: 0.2,
            entropy_coef: 0.01,
            value_coef: 1.0,
            gae_lambda: 0.95,
            epochs_per_update: 4,
            minibatch: 256,
            max_grad_norm: 0.5,
            hidden: vec![64, 64],
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.clip > 0.0
            && self.clip < 1.0
            && (0.0..=1.0).contains(&self.gamma)
            && (0.0..=1.0).contains(&self.gae_lambda)
            && self.learning_rate > 0.0
            && self.minibatch > 0
            && self.epochs_per_update > 0
            && self.batch_slots > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid PPO configuration {self:?}")))
        }
    }
}

/// One decision of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Vec<f64>,
    /// Chosen index per head.
    pub actions: Vec<usize>,
    /// Heads that took part in the decision.
    pub mask: Vec<bool>,
    pub logp: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

/// A transition with its advantage and return, ready for the loss.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub obs: &'a [f64],
    pub actions: &'a [usize],
    pub mask: &'a [bool],
    pub logp_old: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
}

/// `−min(r·A, clip(r, 1−ε, 1+ε)·A)` for one sample.
pub fn clipped_objective(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

/// Joint log-probability and summed entropy of the active heads.
pub fn heads_logp_entropy(spec: &NetSpec, logits: &[f64], actions: &[usize], mask: &[bool]) -> (f64, f64) {
    let mut logp = 0.0;
    let mut ent = 0.0;
    let mut at = 0;
    for (h, &size) in spec.heads.iter().enumerate() {
        if mask[h] {
            let lp = log_softmax(&logits[at..at + size]);
            logp += lp[actions[h]];
            ent += entropy(&lp);
        }
        at += size;
    }
    (logp, ent)
}

/// Mean loss over `batch` and, when `grad` is given, its exact gradient
/// (accumulated into `grad`, which must start zeroed).
pub fn loss_and_grad(net: &Net, batch: &[Sample], cfg: &PpoConfig, mut grad: Option<&mut [f64]>) -> Result<LossStats> {
    let n = batch.len() as f64;
    let spec = &net.spec;
    let mut stats = LossStats::default();
    let mut dlogits = vec![0.0; spec.logits_len()];
    for s in batch {
        let fwd = net.forward(s.obs)?;
        let mut logp = 0.0;
        let mut ent = 0.0;
        let mut head_lp = Vec::with_capacity(spec.heads.len());
        let mut at = 0;
        for (h, &size) in spec.heads.iter().enumerate() {
            if s.mask[h] {
                let lp = log_softmax(&fwd.logits[at..at + size]);
                logp += lp[s.actions[h]];
                let e = entropy(&lp);
                ent += e;
                head_lp.push((h, at, size, lp, e));
            }
            at += size;
        }
        let ratio = (logp - s.logp_old).exp();
        let surrogate = clipped_objective(ratio, s.advantage, cfg.clip);
        let verr = fwd.value - s.ret;
        stats.policy -= surrogate / n;
        stats.value += verr * verr / n;
        stats.entropy += ent / n;
        stats.mean_ratio += ratio / n;
        if (ratio - 1.0).abs() > cfg.clip {
            stats.clip_fraction += 1.0 / n;
        }
        if !(ratio.is_finite() && verr.is_finite()) {
            return Err(Error::Numerical { index: 0, detail: format!("non-finite ratio {ratio} or value error {verr}") });
        }

        if let Some(g) = grad.as_deref_mut() {
            // d surrogate / d logp: r·A when the unclipped branch is the min.
            let unclipped = ratio * s.advantage <= ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * s.advantage;
            let dsurr_dlogp = if unclipped { ratio * s.advantage } else { 0.0 };
            dlogits.iter_mut().for_each(|d| *d = 0.0);
            for (h, at, size, lp, e) in head_lp {
                for j in 0..size {
                    let p = lp[j].exp();
                    let onehot = if j == s.actions[h] { 1.0 } else { 0.0 };
                    // −surrogate term and −entropy term of the loss.
                    dlogits[at + j] = (-dsurr_dlogp * (onehot - p) + cfg.entropy_coef * p * (lp[j] + e)) / n;
                }
            }
            let dvalue = cfg.value_coef * 2.0 * verr / n;
            net.backward(&fwd, &dlogits, dvalue, g);
        }
    }
    stats.total = stats.policy + cfg.value_coef * stats.value - cfg.entropy_coef * stats.entropy;
    if let Some(g) = grad {
        if let Some(index) = g.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numerical { index, detail: "non-finite gradient".into() });
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub actions: Vec<usize>,
    pub logp: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UpdateStats {
    pub samples: usize,
    /// Mean ratio over the first minibatch (1 before any step).
    pub first_ratio: f64,
    pub last: LossStats,
    pub grad_norm: f64,
}

/// One agent's policy, optimizer state and experience buffer.
#[derive(Debug, Clone)]
pub struct Learner {
    pub net: Net,
    pub adam: Adam,
    pub cfg: PpoConfig,
    pub updates: u64,
    buffer: Vec<Transition>,
    rng: ChaCha8Rng,
}

impl Learner {
    pub fn new(spec: NetSpec, cfg: PpoConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Net::init(spec, &mut rng);
        let adam = Adam::new(net.params.len(), cfg.learning_rate);
        Self { net, adam, cfg, updates: 0, buffer: Vec::new(), rng }
    }

    pub fn from_parts(net: Net, adam: Adam, cfg: PpoConfig, updates: u64, seed: u64) -> Self {
        Self { net, adam, cfg, updates, buffer: Vec::new(), rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn spec(&self) -> &NetSpec {
        &self.net.spec
    }

    /// Sample every head (inactive heads report index 0 and are not scored).
    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], mask: &[bool], rng: &mut R) -> Result<Decision> {
        let fwd = self.net.forward(obs)?;
        let mut actions = Vec::with_capacity(mask.len());
        let mut at = 0;
        for (h, &size) in self.net.spec.heads.iter().enumerate() {
            actions.push(if mask[h] { sample(&fwd.logits[at..at + size], rng) } else { 0 });
            at += size;
        }
        let (logp, _) = heads_logp_entropy(&self.net.spec, &fwd.logits, &actions, mask);
        Ok(Decision { actions, logp, value: fwd.value })
    }

    /// Most likely index per active head; the critic is not evaluated.
    pub fn act_greedy(&self, obs: &[f64], mask: &[bool]) -> Result<Vec<usize>> {
        let logits = self.net.policy_logits(obs)?;
        let mut actions = Vec::with_capacity(mask.len());
        let mut at = 0;
        for (h, &size) in self.net.spec.heads.iter().enumerate() {
            actions.push(if mask[h] { argmax(&logits[at..at + size]) } else { 0 });
            at += size;
        }
        Ok(actions)
    }

    pub fn push(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    pub fn clear_buffer(&mut self) {
        self.buffer.clear();
    }

    /// Consume the buffer: GAE, per-batch advantage normalization, then
    /// `epochs_per_update` shuffled minibatch passes of clipped Adam steps.
    pub fn update(&mut self) -> Result<UpdateStats> {
        if self.buffer.is_empty() {
            return Err(Error::Protocol("update called with an empty batch".into()));
        }
        let buffer = std::mem::take(&mut self.buffer);
        let rewards: Vec<f64> = buffer.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = buffer.iter().map(|t| t.value).collect();
        let dones: Vec<bool> = buffer.iter().map(|t| t.done).collect();
        let bootstrap = if buffer.last().is_some_and(|t| t.done) {
            0.0
        } else {
            self.net.forward(&buffer.last().expect("nonempty").obs)?.value
        };
        let (mut adv, returns) = gae_with_dones(&rewards, &values, &dones, bootstrap, self.cfg.gamma, self.cfg.gae_lambda);
        normalize(&mut adv);

        let samples: Vec<Sample> = buffer
            .iter()
            .zip(adv.iter().zip(&returns))
            .map(|(t, (&a, &r))| Sample { obs: &t.obs, actions: &t.actions, mask: &t.mask, logp_old: t.logp, advantage: a, ret: r })
            .collect();

        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut stats = UpdateStats { samples: samples.len(), ..Default::default() };
        let mut grad = vec![0.0; self.net.params.len()];
        let mut first = true;
        for _ in 0..self.cfg.epochs_per_update {
            order.shuffle(&mut self.rng);
            for chunk in order.chunks(self.cfg.minibatch) {
                let mb: Vec<Sample> = chunk.iter().map(|&i| samples[i]).collect();
                grad.iter_mut().for_each(|g| *g = 0.0);
                let loss = loss_and_grad(&self.net, &mb, &self.cfg, Some(&mut grad))?;
                if first {
                    stats.first_ratio = loss.mean_ratio;
                    first = false;
                }
                stats.grad_norm = clip_grad_norm(&mut grad, self.cfg.max_grad_norm);
                self.adam.step(&mut self.net.params, &grad);
                if let Some(index) = self.net.params.iter().position(|p| !p.is_finite()) {
                    return Err(Error::Numerical { index, detail: "parameter became non-finite".into() });
                }
                stats.last = loss;
            }
        }
        self.updates += 1;
        Ok(stats)
    }
}

fn normalize(x: &mut [f64]) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for v in x.iter_mut() {
        *v = (*v - mean) / (std + 1e-8);
    }
}
