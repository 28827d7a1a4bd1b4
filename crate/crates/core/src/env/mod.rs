//! The three-tier, multi-timescale spectrum environment.
//!
//! The satellite (global tier) splits chunks between beams every
//! `global_period_slots`, each HAP (regional tier) picks a sub-band for every
//! TBS/UAV it controls every `regional_period_slots`, and every TBS/UAV (local
//! tier) picks a channel and power level for each of its users every slot.

pub mod action;
pub mod alloc;
pub mod observe;
pub mod trace;

use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use action::{GlobalAction, LocalAction, RegionalAction};
pub use alloc::{validate_hierarchy, AllocationState, ValidationReport};
pub use observe::{ObsMode, M_MAX};
pub use trace::{AgentId, DecisionRecord, EpisodeTrace, Tier};

use crate::channel::{association_gains, realize, ChannelRealization};
use crate::error::{Error, Result};
use crate::metrics::{jain_index, normalized_se, qos_violations, SlotMetrics};
use crate::phy::{aggregate_interference, noise_power_w, noma_sinr, power_fractions_from_levels, sic_order, NomaCluster, MAX_CLUSTER_SIZE};
use crate::topology::{associate_users, build_topology, step_mobility, Move, NetworkGraph, NodeId, NodeKind, ScenarioConfig};

/// Reward added (as a negative) for every decision that had to be clamped.
pub const CLAMP_PENALTY: f64 = 0.1;

/// RNG stream ids derived from one episode seed.
const STREAM_TOPOLOGY: u64 = 0;
const STREAM_MOBILITY: u64 = 1;
const STREAM_FADING: u64 = 2;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for TierWeights {
    fn default() -> Self {
        Self { w1: 1.0, w2: 0.5, w3: 0.5 }
    }
}

impl TierWeights {
    /// `w1·E + w2·F − w3·V`.
    pub fn score(&self, e: f64, f: f64, v: f64) -> f64 {
        self.w1 * e + self.w2 * f - self.w3 * v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    pub global: TierWeights,
    pub regional: TierWeights,
    pub local: TierWeights,
    pub w4_mobility: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { global: TierWeights::default(), regional: TierWeights::default(), local: TierWeights::default(), w4_mobility: 0.1 }
    }
}

impl RewardWeights {
    /// Penalty for a UAV `outside_m` meters outside its region.
    pub fn mobility_penalty(&self, outside_m: f64) -> f64 {
        self.w4_mobility * outside_m / 100.0
    }
}

/// Which tiers must act at the current slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Due {
    pub global: bool,
    pub regional: bool,
}

/// Actions supplied for one slot. Exactly the due tiers must be present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActionSet {
    pub global: Option<GlobalAction>,
    /// Keyed by HAP index.
    pub regional: BTreeMap<usize, RegionalAction>,
    /// Keyed by serving-node index.
    pub local: BTreeMap<usize, LocalAction>,
    /// Wall-clock decision time per agent, recorded in the trace.
    pub latency_s: BTreeMap<AgentId, f64>,
}

/// Rates and interference of one allocation on one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotEvaluation {
    pub rates_bps: Vec<f64>,
    pub node_throughput_bps: Vec<f64>,
    pub co_channel_w: Vec<f64>,
    pub noise_w: Vec<f64>,
    pub served: Vec<bool>,
}

/// Per-slot tier scores before penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotScores {
    pub global: f64,
    pub regional: Vec<f64>,
    pub local: Vec<f64>,
    pub beam_norm_se: Vec<f64>,
    pub beam_violation: Vec<f64>,
    pub node_norm_se: Vec<f64>,
    pub node_violation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// The slot that was just simulated.
    pub slot: usize,
    pub metrics: SlotMetrics,
    /// Network-scope score `w1·E + w2·F − w3·V` of this slot.
    pub global_score: f64,
    /// Rewards of every agent whose epoch closed at this step.
    pub rewards: Vec<(AgentId, f64)>,
    /// Clamp and mobility penalties incurred this slot, as a positive sum.
    pub penalty: f64,
    pub done: bool,
}

#[derive(Debug, Clone, Default)]
struct EpochAcc {
    score_sum: f64,
    slots: usize,
}

impl EpochAcc {
    fn push(&mut self, x: f64) {
        self.score_sum += x;
        self.slots += 1;
    }

    fn take_mean(&mut self) -> f64 {
        let m = if self.slots == 0 { 0.0 } else { self.score_sum / self.slots as f64 };
        *self = Self::default();
        m
    }
}

#[derive(Debug, Clone)]
struct StatAcc {
    sums: Vec<[f64; 2]>,
    slots: usize,
}

impl StatAcc {
    fn new(n: usize) -> Self {
        Self { sums: vec![[0.0; 2]; n], slots: 0 }
    }

    fn push(&mut self, a: &[f64], b: &[f64]) {
        for (k, s) in self.sums.iter_mut().enumerate() {
            s[0] += a[k];
            s[1] += b[k];
        }
        self.slots += 1;
    }

    fn take_means(&mut self) -> Vec<[f64; 2]> {
        let n = self.slots.max(1) as f64;
        let out = self.sums.iter().map(|s| [s[0] / n, s[1] / n]).collect();
        *self = Self::new(self.sums.len());
        out
    }
}

#[derive(Debug, Clone)]
pub struct HierEnv {
    config: ScenarioConfig,
    seed: u64,
    graph: NetworkGraph,
    realization: ChannelRealization,
    association: BTreeMap<NodeId, NodeId>,
    /// Users of each serving node, ascending id.
    node_users: Vec<Vec<NodeId>>,
    serving_index: HashMap<NodeId, usize>,
    user_index: HashMap<NodeId, usize>,
    user_beam: Vec<usize>,
    /// Serving-node indices controlled by each HAP.
    hap_nodes: Vec<Vec<usize>>,
    alloc: AllocationState,
    slot: usize,
    mobility_rng: ChaCha8Rng,
    fading_rng: ChaCha8Rng,

    prev_rates: Vec<f64>,
    prev_interference_ratio: Vec<f64>,
    global_stats: StatAcc,
    regional_stats: StatAcc,
    prev_beam_stats: Vec<[f64; 2]>,
    prev_node_stats: Vec<[f64; 2]>,

    global_epoch: EpochAcc,
    regional_epochs: Vec<EpochAcc>,
    pending_global: Option<(usize, f64)>,
    pending_regional: Vec<Option<(usize, f64)>>,
    trace: EpisodeTrace,
}

impl HierEnv {
    /// Build a fresh episode: topology, association, first channel draw and
    /// the default allocation. Deterministic in `(config, seed)`.
    pub fn new(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut topo_rng = stream_rng(seed, STREAM_TOPOLOGY);
        let graph = build_topology(config, &mut topo_rng)?;
        let mut fading_rng = stream_rng(seed, STREAM_FADING);
        let realization = realize(&graph, config.carrier_hz, &config.fading, 0, &mut fading_rng)?;

        let serving_index = graph.serving.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let user_index = graph.users.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let user_beam = graph.users.iter().map(|&u| graph.node(u).beam_id).collect();
        let hap_nodes = (0..graph.haps.len())
            .map(|h| graph.controlled_by_hap(h).iter().map(|n| graph.serving.iter().position(|m| m == n).expect("serving")).collect())
            .collect();

        let mut regional = BTreeMap::new();
        for region in &graph.regions {
            for (k, n) in graph.serving_in_region(region.id).into_iter().enumerate() {
                // Without a regional controller each region keeps a fixed
                // frequency-reuse plan instead of stacking every node on sub-band 0.
                let sb = if config.hierarchy.has_haps() { 0 } else { k % config.subbands };
                regional.insert(n, sb);
            }
        }
        let alloc = AllocationState {
            global: alloc::even_split(config.chunks, config.beams),
            regional,
            local: BTreeMap::new(),
            uav_moves: graph.uavs().map(|u| (u, Move::Stay)).collect(),
        };

        let n_users = graph.users.len();
        let n_serving = graph.serving.len();
        let n_haps = graph.haps.len();
        let mut env = Self {
            config: config.clone(),
            seed,
            realization,
            association: BTreeMap::new(),
            node_users: vec![Vec::new(); n_serving],
            serving_index,
            user_index,
            user_beam,
            hap_nodes,
            alloc,
            slot: 0,
            mobility_rng: stream_rng(seed, STREAM_MOBILITY),
            fading_rng,
            prev_rates: vec![0.0; n_users],
            prev_interference_ratio: vec![0.0; n_users],
            global_stats: StatAcc::new(config.beams),
            regional_stats: StatAcc::new(n_serving),
            prev_beam_stats: vec![[0.0; 2]; config.beams],
            prev_node_stats: vec![[0.0; 2]; n_serving],
            global_epoch: EpochAcc::default(),
            regional_epochs: vec![EpochAcc::default(); n_haps],
            pending_global: None,
            pending_regional: vec![None; n_haps],
            trace: EpisodeTrace::default(),
            graph,
        };
        env.reassociate()?;
        for users in env.node_users.clone() {
            for (k, u) in users.into_iter().enumerate() {
                env.alloc.local.insert(u, (k % config.channels_per_subband, 1));
            }
        }
        Ok(env)
    }

    fn reassociate(&mut self) -> Result<()> {
        let gains = association_gains(&self.graph, self.config.carrier_hz)?;
        self.association = associate_users(&self.graph, &gains);
        for users in &mut self.node_users {
            users.clear();
        }
        for (&u, &n) in &self.association {
            self.node_users[self.serving_index[&n]].push(u);
        }
        Ok(())
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn realization(&self) -> &ChannelRealization {
        &self.realization
    }

    pub fn association(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.association
    }

    pub fn allocation(&self) -> &AllocationState {
        &self.alloc
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn done(&self) -> bool {
        self.slot >= self.config.slots_per_episode
    }

    pub fn trace(&self) -> &EpisodeTrace {
        &self.trace
    }

    pub fn into_trace(self) -> EpisodeTrace {
        self.trace
    }

    pub fn node_users(&self, serving_idx: usize) -> &[NodeId] {
        &self.node_users[serving_idx]
    }

    pub fn user_idx(&self, user: NodeId) -> usize {
        self.user_index[&user]
    }

    pub fn serving_idx(&self, node: NodeId) -> usize {
        self.serving_index[&node]
    }

    pub fn hap_nodes(&self, hap: usize) -> &[usize] {
        &self.hap_nodes[hap]
    }

    pub fn has_global_agent(&self) -> bool {
        self.graph.satellite.is_some()
    }

    pub fn num_haps(&self) -> usize {
        self.graph.haps.len()
    }

    pub fn num_serving(&self) -> usize {
        self.graph.serving.len()
    }

    pub fn is_uav(&self, serving_idx: usize) -> bool {
        self.graph.node(self.graph.serving[serving_idx]).kind == NodeKind::Uav
    }

    /// All agents, global first, then HAPs, then serving nodes.
    pub fn agents(&self) -> Vec<AgentId> {
        let mut v = Vec::new();
        if self.has_global_agent() {
            v.push(AgentId::Global);
        }
        v.extend((0..self.num_haps()).map(AgentId::Regional));
        v.extend((0..self.num_serving()).map(AgentId::Local));
        v
    }

    pub fn due(&self) -> Due {
        Due {
            global: self.has_global_agent() && self.slot % self.config.global_period_slots == 0,
            regional: self.num_haps() > 0 && self.slot % self.config.regional_period_slots == 0,
        }
    }

    /// Agents that must act at the current slot.
    pub fn due_agents(&self) -> Vec<AgentId> {
        let due = self.due();
        self.agents()
            .into_iter()
            .filter(|a| match a.tier() {
                Tier::Global => due.global,
                Tier::Regional => due.regional,
                Tier::Local => true,
            })
            .collect()
    }

    fn check_protocol(&self, actions: &ActionSet) -> Result<()> {
        if self.done() {
            return Err(Error::Protocol("episode already finished".into()));
        }
        let due = self.due();
        match (due.global, actions.global.is_some()) {
            (true, false) => return Err(Error::Protocol(format!("global action due at slot {} is missing", self.slot))),
            (false, true) => return Err(Error::Protocol(format!("global action supplied at non-due slot {}", self.slot))),
            _ => {}
        }
        let want_regional = if due.regional { self.num_haps() } else { 0 };
        if !due.regional && !actions.regional.is_empty() {
            return Err(Error::Protocol(format!("regional actions supplied at non-due slot {}", self.slot)));
        }
        if (0..want_regional).any(|h| !actions.regional.contains_key(&h)) || actions.regional.keys().any(|&h| h >= want_regional) {
            return Err(Error::Protocol(format!("regional actions at slot {} must cover exactly HAPs 0..{want_regional}", self.slot)));
        }
        let n = self.num_serving();
        if (0..n).any(|i| !actions.local.contains_key(&i)) || actions.local.keys().any(|&i| i >= n) {
            return Err(Error::Protocol(format!("local actions at slot {} must cover exactly nodes 0..{n}", self.slot)));
        }
        Ok(())
    }

    /// Clamp and write the supplied actions into `alloc`. Returns one
    /// `(agent, action index, clamped)` entry per decision.
    fn apply_actions(&self, alloc: &mut AllocationState, actions: &ActionSet) -> Result<Vec<(AgentId, u128, bool)>> {
        let cfg = &self.config;
        let mut decisions = Vec::new();
        if let Some(g) = &actions.global {
            let (v, clamped) = alloc::clamp_global(g, cfg.chunks, cfg.beams);
            let index = action::encode_global(&GlobalAction { chunks_per_beam: v.clone() }, cfg.chunks, cfg.beams)?;
            alloc.global = v;
            decisions.push((AgentId::Global, index, clamped));
        }
        for (&h, a) in &actions.regional {
            let nodes = &self.hap_nodes[h];
            let (v, clamped) = alloc::clamp_regional(a, cfg.subbands, nodes.len());
            for (&i, &sb) in nodes.iter().zip(&v) {
                alloc.regional.insert(self.graph.serving[i], sb);
            }
            let index = action::encode_regional(&RegionalAction { subbands: v }, cfg.subbands)?;
            decisions.push((AgentId::Regional(h), index, clamped));
        }
        for (&i, a) in &actions.local {
            let node = self.graph.serving[i];
            let kind = self.graph.node(node).kind;
            let users = &self.node_users[i];
            let (v, mv, clamped) = alloc::clamp_local(a, cfg.channels_per_subband, cfg.power_levels, users.len(), kind);
            for (&u, &cl) in users.iter().zip(&v) {
                alloc.local.insert(u, cl);
            }
            if kind == NodeKind::Uav {
                alloc.uav_moves.insert(node, mv);
            }
            let local = LocalAction { assignments: v, uav_move: mv };
            let index = action::encode_local(&local, cfg.channels_per_subband, cfg.power_levels, kind == NodeKind::Uav)?;
            decisions.push((AgentId::Local(i), index, clamped));
        }
        Ok(decisions)
    }

    /// Build NOMA clusters for `alloc` and compute every user's rate on the
    /// current channel realization.
    pub fn evaluate(&self, alloc: &AllocationState) -> Result<SlotEvaluation> {
        let cfg = &self.config;
        let (s, c) = (cfg.subbands, cfg.channels_per_subband);
        let chunk_bw = cfg.chunk_bandwidth_hz();
        let n_users = self.graph.users.len();
        let mut out = SlotEvaluation {
            rates_bps: vec![0.0; n_users],
            node_throughput_bps: vec![0.0; self.num_serving()],
            co_channel_w: vec![0.0; n_users],
            noise_w: vec![0.0; n_users],
            served: vec![false; n_users],
        };

        let mut clusters = Vec::new();
        let mut cluster_bw = Vec::new();
        for (i, &n) in self.graph.serving.iter().enumerate() {
            let beam = self.graph.node(n).beam_id;
            let beam_bw = alloc.global[beam] as f64 * chunk_bw;
            if beam_bw == 0.0 {
                continue;
            }
            let sb = alloc.regional[&n];
            let ch_bw = beam_bw / (s * c) as f64;
            let mut buckets: Vec<Vec<NodeId>> = vec![Vec::new(); c];
            for &u in &self.node_users[i] {
                let want = alloc.local[&u].0;
                let target = if buckets[want].len() < MAX_CLUSTER_SIZE {
                    Some(want)
                } else {
                    (0..c).find(|&k| buckets[k].len() < MAX_CLUSTER_SIZE)
                };
                if let Some(k) = target {
                    buckets[k].push(u);
                }
            }
            for (k, bucket) in buckets.into_iter().enumerate() {
                if bucket.is_empty() {
                    continue;
                }
                let gains: Vec<(NodeId, f64)> = bucket.iter().map(|&u| (u, self.realization.gain(i, self.user_index[&u]))).collect();
                let order = sic_order(&gains);
                let levels: Vec<usize> = order.iter().map(|u| alloc.local[u].1).collect();
                let fractions = power_fractions_from_levels(&levels);
                let members = order.into_iter().zip(fractions).collect();
                clusters.push(NomaCluster::new(n, beam, sb * c + k, members)?);
                cluster_bw.push(ch_bw);
            }
        }

        let interference = aggregate_interference(
            &clusters,
            |t, u| self.realization.gain(self.serving_index[&t], self.user_index[&u]),
            |t| self.graph.node(t).tx_power_w,
            |t| self.graph.node(t).kind,
        );
        for (cluster, &bw) in clusters.iter().zip(&cluster_bw) {
            let i = self.serving_index[&cluster.node];
            let gains: Vec<f64> = cluster.members.iter().map(|(u, _)| self.realization.gain(i, self.user_index[u])).collect();
            let co: Vec<_> = cluster.members.iter().map(|(u, _)| interference[u]).collect();
            let noise = noise_power_w(bw);
            let tx = self.graph.node(cluster.node).tx_power_w;
            for (row, co) in noma_sinr(cluster, &gains, tx, &co, noise, bw)?.into_iter().zip(&co) {
                let k = self.user_index[&row.user];
                out.rates_bps[k] = row.rate_bps;
                out.co_channel_w[k] = co.total();
                out.noise_w[k] = noise;
                out.served[k] = true;
                out.node_throughput_bps[i] += row.rate_bps;
            }
        }
        Ok(out)
    }

    /// Slot metrics and per-tier scores for an evaluation of `alloc`.
    pub fn score(&self, alloc: &AllocationState, eval: &SlotEvaluation) -> (SlotMetrics, SlotScores) {
        let cfg = &self.config;
        let w = &cfg.reward_weights;
        let metrics = SlotMetrics::from_rates(self.slot, eval.rates_bps.clone(), &self.user_beam, cfg.beams, cfg.total_bandwidth_hz, cfg.r_min_bps);
        let (_, e) = crate::metrics::spectral_efficiency(metrics.throughput_bps, cfg.total_bandwidth_hz);
        let global = w.global.score(e, metrics.fairness, metrics.violation_fraction);

        let chunk_bw = cfg.chunk_bandwidth_hz();
        let beam_bw: Vec<f64> = alloc.global.iter().map(|&k| k as f64 * chunk_bw).collect();
        let rates_of = |users: &[NodeId]| -> Vec<f64> { users.iter().map(|u| eval.rates_bps[self.user_index[u]]).collect() };

        let mut beam_norm_se = vec![0.0; cfg.beams];
        let mut beam_violation = vec![0.0; cfg.beams];
        for b in 0..cfg.beams {
            if beam_bw[b] > 0.0 {
                beam_norm_se[b] = normalized_se(metrics.beam_throughput_bps[b] / beam_bw[b]);
            }
            let rates: Vec<f64> = eval.rates_bps.iter().zip(&self.user_beam).filter(|(_, &ub)| ub == b).map(|(r, _)| *r).collect();
            beam_violation[b] = qos_violations(&rates, cfg.r_min_bps);
        }

        let n = self.num_serving();
        let mut node_norm_se = vec![0.0; n];
        let mut node_violation = vec![0.0; n];
        let mut local = vec![0.0; n];
        for i in 0..n {
            let beam = self.graph.node(self.graph.serving[i]).beam_id;
            let sub_bw = beam_bw[beam] / cfg.subbands as f64;
            if sub_bw > 0.0 {
                node_norm_se[i] = normalized_se(eval.node_throughput_bps[i] / sub_bw);
            }
            let rates = rates_of(&self.node_users[i]);
            node_violation[i] = qos_violations(&rates, cfg.r_min_bps);
            local[i] = w.local.score(node_norm_se[i], jain_index(&rates), node_violation[i]);
        }

        let regional = self
            .hap_nodes
            .iter()
            .enumerate()
            .map(|(h, nodes)| {
                let beam = self.graph.node(self.graph.haps[h]).beam_id;
                let thr: Vec<f64> = nodes.iter().map(|&i| eval.node_throughput_bps[i]).collect();
                let e = if beam_bw[beam] > 0.0 { normalized_se(thr.iter().sum::<f64>() / beam_bw[beam]) } else { 0.0 };
                let users: Vec<NodeId> = nodes.iter().flat_map(|&i| self.node_users[i].iter().copied()).collect();
                let v = qos_violations(&rates_of(&users), cfg.r_min_bps);
                w.regional.score(e, jain_index(&thr), v)
            })
            .collect();

        (metrics, SlotScores { global, regional, local, beam_norm_se, beam_violation, node_norm_se, node_violation })
    }

    /// Network-scope score the slot would get if `actions` were applied now,
    /// without advancing the environment.
    pub fn score_candidate(&self, actions: &ActionSet) -> Result<f64> {
        let mut alloc = self.alloc.clone();
        self.apply_actions(&mut alloc, actions)?;
        let eval = self.evaluate(&alloc)?;
        Ok(self.score(&alloc, &eval).1.global)
    }

    /// Apply the due actions, simulate the slot, move UAVs and users, and
    /// close any epochs that end here.
    pub fn step(&mut self, actions: &ActionSet) -> Result<StepOutcome> {
        self.check_protocol(actions)?;
        let cfg = self.config.clone();
        let t = self.slot;

        let mut alloc = self.alloc.clone();
        let decisions = self.apply_actions(&mut alloc, actions)?;
        self.alloc = alloc;

        let mut penalty = 0.0;
        let mut local_clamp = vec![0.0; self.num_serving()];
        for &(agent, action_index, clamped) in &decisions {
            let p = if clamped { CLAMP_PENALTY } else { 0.0 };
            penalty += p;
            let record = self.trace.decisions.len();
            self.trace.decisions.push(DecisionRecord {
                slot: t,
                agent,
                action_index,
                clamped,
                reward: 0.0,
                latency_s: actions.latency_s.get(&agent).copied().unwrap_or(0.0),
            });
            match agent {
                AgentId::Global => self.pending_global = Some((record, p)),
                AgentId::Regional(h) => self.pending_regional[h] = Some((record, p)),
                AgentId::Local(i) => local_clamp[i] = p,
            }
        }

        let eval = self.evaluate(&self.alloc)?;
        let (metrics, scores) = self.score(&self.alloc, &eval);
        self.global_epoch.push(scores.global);
        for (acc, &s) in self.regional_epochs.iter_mut().zip(&scores.regional) {
            acc.push(s);
        }
        self.global_stats.push(&scores.beam_norm_se, &scores.beam_violation);
        self.regional_stats.push(&scores.node_norm_se, &scores.node_violation);
        self.prev_rates.clone_from(&eval.rates_bps);
        for k in 0..eval.rates_bps.len() {
            self.prev_interference_ratio[k] = if eval.served[k] { eval.co_channel_w[k] / eval.noise_w[k] } else { 0.0 };
        }

        let moves = self.alloc.uav_moves.clone();
        let outside = step_mobility(&mut self.graph, &moves, &mut self.mobility_rng);

        let mut rewards = Vec::new();
        let first_local = self.trace.decisions.len() - self.num_serving();
        for i in 0..self.num_serving() {
            let node = self.graph.serving[i];
            let mobility = outside.get(&node).map_or(0.0, |&d| cfg.reward_weights.mobility_penalty(d));
            penalty += mobility;
            let r = scores.local[i] - mobility - local_clamp[i];
            self.trace.decisions[first_local + i].reward = r;
            *self.trace.returns.entry(AgentId::Local(i)).or_default() += r;
            rewards.push((AgentId::Local(i), r));
        }

        self.slot = t + 1;
        let done = self.done();
        let regional_close = self.slot % cfg.regional_period_slots == 0 || done;
        let global_close = self.slot % cfg.global_period_slots == 0 || done;
        if regional_close {
            for h in 0..self.num_haps() {
                let mean = self.regional_epochs[h].take_mean();
                if let Some((record, p)) = self.pending_regional[h].take() {
                    let r = mean - p;
                    self.trace.decisions[record].reward = r;
                    *self.trace.returns.entry(AgentId::Regional(h)).or_default() += r;
                    rewards.push((AgentId::Regional(h), r));
                }
            }
            self.prev_node_stats = self.regional_stats.take_means();
        }
        if global_close {
            let mean = self.global_epoch.take_mean();
            if let Some((record, p)) = self.pending_global.take() {
                let r = mean - p;
                self.trace.decisions[record].reward = r;
                *self.trace.returns.entry(AgentId::Global).or_default() += r;
                rewards.push((AgentId::Global, r));
            }
            self.prev_beam_stats = self.global_stats.take_means();
        }

        if !done {
            if self.slot % cfg.regional_period_slots == 0 {
                self.reassociate()?;
            }
            self.realization = realize(&self.graph, cfg.carrier_hz, &cfg.fading, self.slot, &mut self.fading_rng)?;
        }
        self.trace.metrics.push(metrics.clone());
        rewards.sort_by_key(|(a, _)| *a);
        Ok(StepOutcome { slot: t, metrics, global_score: scores.global, rewards, penalty, done })
    }

    /// Actions that keep the current allocation (and hold UAVs still).
    pub fn hold_actions(&self) -> ActionSet {
        let due = self.due();
        let mut set = ActionSet::default();
        if due.global {
            set.global = Some(GlobalAction { chunks_per_beam: self.alloc.global.clone() });
        }
        if due.regional {
            for h in 0..self.num_haps() {
                let subbands = self.hap_nodes[h].iter().map(|&i| self.alloc.regional[&self.graph.serving[i]]).collect();
                set.regional.insert(h, RegionalAction { subbands });
            }
        }
        for i in 0..self.num_serving() {
            let assignments = self.node_users[i].iter().map(|u| self.alloc.local[u]).collect();
            set.local.insert(i, LocalAction { assignments, uav_move: Move::Stay });
        }
        set
    }

    pub fn validate(&self) -> ValidationReport {
        validate_hierarchy(&self.alloc, &self.config, &self.graph, &self.association)
    }
}
