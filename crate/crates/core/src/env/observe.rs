//! Fixed-length tier observations.
//!
//! Global (per beam): user count, demand, previous-epoch normalized SE,
//! previous-epoch violation fraction. Length `4B`.
//!
//! Regional (per controlled node): user count, mean gain, previous-epoch
//! normalized SE, previous-epoch violation fraction; then the HAP's share of
//! chunks. Length `4n + 1`.
//!
//! Local (per user slot, padded to `M_MAX`): gain, previous rate, previous
//! interference-to-noise, demand flag; then the node's sub-band one-hot and,
//! for UAVs, the offset from the region center. Length `4·M_MAX + S (+ 2)`.
//!
//! In `ObsMode::Independent` the higher-tier decisions (chunk share, sub-band
//! one-hot) are left out.

use serde::{Deserialize, Serialize};

use super::{AgentId, HierEnv};

pub const M_MAX: usize = 16;
pub const LOCAL_USER_FEATURES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObsMode {
    Hierarchical,
    Independent,
}

/// Gain in dB mapped to roughly [-1, 1] for typical access links.
pub fn gain_feature(g: f64) -> f64 {
    if g <= 0.0 {
        return -3.0;
    }
    ((10.0 * g.log10() + 100.0) / 20.0).clamp(-3.0, 3.0)
}

fn rate_feature(rate_bps: f64) -> f64 {
    (1.0 + rate_bps / 1e6).log10() / 3.0
}

fn interference_feature(ratio: f64) -> f64 {
    (1.0 + ratio).log10()
}

impl HierEnv {
    pub fn global_obs_len(&self) -> usize {
        4 * self.config.beams
    }

    pub fn regional_obs_len(&self, hap: usize, mode: ObsMode) -> usize {
        4 * self.hap_nodes[hap].len() + usize::from(mode == ObsMode::Hierarchical)
    }

    pub fn local_obs_len(&self, serving_idx: usize, mode: ObsMode) -> usize {
        let mut n = LOCAL_USER_FEATURES * M_MAX;
        if mode == ObsMode::Hierarchical {
            n += self.config.subbands;
        }
        if self.is_uav(serving_idx) {
            n += 2;
        }
        n
    }

    pub fn obs_len(&self, agent: AgentId, mode: ObsMode) -> usize {
        match agent {
            AgentId::Global => self.global_obs_len(),
            AgentId::Regional(h) => self.regional_obs_len(h, mode),
            AgentId::Local(i) => self.local_obs_len(i, mode),
        }
    }

    pub fn observe(&self, agent: AgentId, mode: ObsMode) -> Vec<f64> {
        match agent {
            AgentId::Global => self.observe_global(),
            AgentId::Regional(h) => self.observe_regional(h, mode),
            AgentId::Local(i) => self.observe_local(i, mode),
        }
    }

    pub fn observe_all(&self, mode: ObsMode) -> Vec<(AgentId, Vec<f64>)> {
        self.agents().into_iter().map(|a| (a, self.observe(a, mode))).collect()
    }

    fn observe_global(&self) -> Vec<f64> {
        let cfg = &self.config;
        let per_beam_capacity = (cfg.regions_per_beam() * cfg.users_per_region_range[1]).max(1) as f64;
        let mut counts = vec![0usize; cfg.beams];
        for &b in &self.user_beam {
            counts[b] += 1;
        }
        let mut v = Vec::with_capacity(self.global_obs_len());
        for b in 0..cfg.beams {
            v.push(counts[b] as f64 / per_beam_capacity);
            v.push(if counts[b] > 0 { 1.0 } else { 0.0 });
            v.push(self.prev_beam_stats[b][0]);
            v.push(self.prev_beam_stats[b][1]);
        }
        v
    }

    fn mean_gain_feature(&self, serving_idx: usize) -> f64 {
        let users = &self.node_users[serving_idx];
        if users.is_empty() {
            return 0.0;
        }
        users.iter().map(|u| gain_feature(self.realization.gain(serving_idx, self.user_index[u]))).sum::<f64>() / users.len() as f64
    }

    fn observe_regional(&self, hap: usize, mode: ObsMode) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.regional_obs_len(hap, mode));
        for &i in &self.hap_nodes[hap] {
            v.push(self.node_users[i].len() as f64 / M_MAX as f64);
            v.push(self.mean_gain_feature(i));
            v.push(self.prev_node_stats[i][0]);
            v.push(self.prev_node_stats[i][1]);
        }
        if mode == ObsMode::Hierarchical {
            let beam = self.graph.node(self.graph.haps[hap]).beam_id;
            v.push(self.alloc.global[beam] as f64 / self.config.chunks as f64);
        }
        v
    }

    fn observe_local(&self, serving_idx: usize, mode: ObsMode) -> Vec<f64> {
        let mut v = vec![0.0; self.local_obs_len(serving_idx, mode)];
        for (k, u) in self.node_users[serving_idx].iter().take(M_MAX).enumerate() {
            let ui = self.user_index[u];
            let base = LOCAL_USER_FEATURES * k;
            v[base] = gain_feature(self.realization.gain(serving_idx, ui));
            v[base + 1] = rate_feature(self.prev_rates[ui]);
            v[base + 2] = interference_feature(self.prev_interference_ratio[ui]);
            v[base + 3] = 1.0;
        }
        let mut at = LOCAL_USER_FEATURES * M_MAX;
        let node = self.graph.serving[serving_idx];
        if mode == ObsMode::Hierarchical {
            v[at + self.alloc.regional[&node]] = 1.0;
            at += self.config.subbands;
        }
        if self.is_uav(serving_idx) {
            let n = self.graph.node(node);
            let region = &self.graph.regions[n.region_id.expect("serving nodes live in a region")];
            v[at] = (n.position[0] - region.center[0]) / region.half_extent;
            v[at + 1] = (n.position[1] - region.center[1]) / region.half_extent;
        }
        v
    }
}
