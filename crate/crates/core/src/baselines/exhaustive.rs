//! Myopic exhaustive search: at every slot, score every joint action of the
//! due tiers on the current channel and keep the best.
//!
//! The joint index is mixed radix with the global action most significant,
//! then each HAP's action in HAP order, then each serving node's local action
//! in node order (user digits, then the UAV move digit). Ties go to the
//! lowest joint index. Moves cannot change the current slot's score, so only
//! Stay is enumerated, which is exactly the lowest-index choice among equal
//! scores.
//!
//! Candidates are scored by `FastScorer`, a flat re-implementation of the
//! environment's slot evaluation that performs the same floating-point
//! operations in the same order, so its scores equal the environment's bit
//! for bit.

use std::time::Instant;

use rayon::prelude::*;

use crate::env::action::{compositions, local_cardinality};
use crate::env::{ActionSet, AgentId, GlobalAction, HierEnv, LocalAction, RegionalAction, TierWeights};
use crate::error::{Error, Result};
use crate::metrics::{jain_index, qos_violations, spectral_efficiency};
use crate::phy::{noise_power_w, MAX_CLUSTER_SIZE};
use crate::policy::Controller;
use crate::topology::{Move, NodeKind};

/// Dense copy of everything a slot score depends on besides the allocation.
#[derive(Debug, Clone)]
pub struct FastScorer {
    n_users: usize,
    gain: Vec<f64>,
    tx: Vec<f64>,
    kind: Vec<NodeKind>,
    node_beam: Vec<usize>,
    /// User indices of each node, ascending.
    node_users: Vec<Vec<usize>>,
    user_beam: Vec<usize>,
    beams: usize,
    subbands: usize,
    channels: usize,
    chunk_bw: f64,
    total_bw: f64,
    r_min: f64,
    weights: TierWeights,
}

/// Reusable buffers for one scoring thread.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    rates: Vec<f64>,
    beam_thr: Vec<f64>,
    buckets: Vec<Vec<usize>>,
    /// `(node, channel key, bandwidth, first member, member count)`
    clusters: Vec<(usize, usize, f64, usize, usize)>,
    members: Vec<usize>,
    alphas: Vec<f64>,
    lifted: Vec<f64>,
}

/// `power_fractions_from_levels` without allocating.
fn fractions_into(levels: impl Iterator<Item = usize>, lifted: &mut Vec<f64>, out: &mut Vec<f64>) {
    lifted.clear();
    let mut running = 0usize;
    for l in levels {
        running = running.max(l);
        lifted.push(running as f64);
    }
    let sum: f64 = lifted.iter().sum();
    let start = out.len();
    out.extend(lifted.iter().map(|l| l / sum));
    let residue = 1.0 - out[start..].iter().sum::<f64>();
    if let Some(last) = out.last_mut() {
        *last += residue;
    }
}

impl FastScorer {
    pub fn new(env: &HierEnv) -> Self {
        let cfg = env.config();
        let graph = env.graph();
        let n = env.num_serving();
        Self {
            n_users: graph.users.len(),
            gain: env.realization().access().to_vec(),
            tx: graph.serving.iter().map(|&s| graph.node(s).tx_power_w).collect(),
            kind: graph.serving.iter().map(|&s| graph.node(s).kind).collect(),
            node_beam: graph.serving.iter().map(|&s| graph.node(s).beam_id).collect(),
            node_users: (0..n).map(|i| env.node_users(i).iter().map(|&u| env.user_idx(u)).collect()).collect(),
            user_beam: graph.users.iter().map(|&u| graph.node(u).beam_id).collect(),
            beams: cfg.beams,
            subbands: cfg.subbands,
            channels: cfg.channels_per_subband,
            chunk_bw: cfg.chunk_bandwidth_hz(),
            total_bw: cfg.total_bandwidth_hz,
            r_min: cfg.r_min_bps,
            weights: cfg.reward_weights.global,
        }
    }

    pub fn scratch(&self) -> Scratch {
        Scratch { buckets: vec![Vec::new(); self.channels], ..Default::default() }
    }

    fn g(&self, node: usize, user: usize) -> f64 {
        self.gain[node * self.n_users + user]
    }

    /// Network-scope score of one allocation: chunk counts per beam, sub-band
    /// per serving node, and `(channel, level)` per user index.
    pub fn score(&self, global: &[usize], subband: &[usize], local: &[(usize, usize)], sc: &mut Scratch) -> f64 {
        let (s, c) = (self.subbands, self.channels);
        sc.rates.clear();
        sc.rates.resize(self.n_users, 0.0);
        sc.clusters.clear();
        sc.members.clear();
        sc.alphas.clear();

        for (i, users) in self.node_users.iter().enumerate() {
            let beam_bw = global[self.node_beam[i]] as f64 * self.chunk_bw;
            if beam_bw == 0.0 {
                continue;
            }
            let ch_bw = beam_bw / (s * c) as f64;
            for b in &mut sc.buckets {
                b.clear();
            }
            for &u in users {
                let want = local[u].0;
                let target = if sc.buckets[want].len() < MAX_CLUSTER_SIZE {
                    Some(want)
                } else {
                    (0..c).find(|&k| sc.buckets[k].len() < MAX_CLUSTER_SIZE)
                };
                if let Some(k) = target {
                    sc.buckets[k].push(u);
                }
            }
            for k in 0..c {
                if sc.buckets[k].is_empty() {
                    continue;
                }
                let bucket = &mut sc.buckets[k];
                bucket.sort_by(|&a, &b| self.g(i, b).total_cmp(&self.g(i, a)).then(a.cmp(&b)));
                let start = sc.members.len();
                sc.members.extend_from_slice(bucket);
                fractions_into(bucket.iter().map(|&u| local[u].1), &mut sc.lifted, &mut sc.alphas);
                sc.clusters.push((i, subband[i] * c + k, ch_bw, start, bucket.len()));
            }
        }

        for &(i, key, bw, start, len) in &sc.clusters {
            let beam = self.node_beam[i];
            let noise = noise_power_w(bw);
            let tx = self.tx[i];
            for m in 0..len {
                let u = sc.members[start + m];
                let (mut same, mut cross) = (0.0, 0.0);
                for &(t, tkey, _, _, _) in &sc.clusters {
                    if t == i || tkey != key || self.node_beam[t] != beam {
                        continue;
                    }
                    let w = self.tx[t] * self.g(t, u);
                    if self.kind[t] == self.kind[i] {
                        same += w;
                    } else {
                        cross += w;
                    }
                }
                let g = self.g(i, u);
                let stronger: f64 = sc.alphas[start..start + m].iter().sum();
                let intra = stronger * tx * g;
                let signal = sc.alphas[start + m] * tx * g;
                let sinr = signal / (intra + (same + cross) + noise);
                sc.rates[u] = bw * (1.0 + sinr).log2();
            }
        }

        sc.beam_thr.clear();
        sc.beam_thr.resize(self.beams, 0.0);
        for (r, &b) in sc.rates.iter().zip(&self.user_beam) {
            sc.beam_thr[b] += r;
        }
        let thr: f64 = sc.beam_thr.iter().sum();
        let (_, e) = spectral_efficiency(thr, self.total_bw);
        self.weights.score(e, jain_index(&sc.beam_thr), qos_violations(&sc.rates, self.r_min))
    }
}

/// Size of the joint action space of the tiers due at the current slot,
/// including UAV move digits; `None` if it exceeds `u128`.
pub fn joint_cardinality(env: &HierEnv) -> Option<u128> {
    let cfg = env.config();
    let due = env.due();
    let mut total: u128 = 1;
    if due.global {
        total = total.checked_mul(compositions(cfg.chunks, cfg.beams).len() as u128)?;
    }
    if due.regional {
        for h in 0..env.num_haps() {
            total = total.checked_mul((cfg.subbands as u128).checked_pow(env.hap_nodes(h).len() as u32)?)?;
        }
    }
    for i in 0..env.num_serving() {
        let n = local_cardinality(cfg.channels_per_subband, cfg.power_levels, env.node_users(i).len(), env.is_uav(i)).ok()?;
        total = total.checked_mul(n)?;
    }
    Some(total)
}

/// The enumerated digits: global composition index (if due), one sub-band
/// per HAP-controlled node (if due), then one `c·P + (l−1)` digit per user.
struct Layout {
    radices: Vec<usize>,
    global: bool,
    /// Serving indices whose sub-band is enumerated, in digit order.
    regional_nodes: Vec<usize>,
    /// User indices in digit order.
    users: Vec<usize>,
}

pub struct SearchResult {
    pub actions: ActionSet,
    pub score: f64,
    pub evaluated: u64,
}

/// Best joint action of the due tiers at the current slot.
pub fn search(env: &HierEnv, cap: u128) -> Result<SearchResult> {
    let size = joint_cardinality(env)
        .ok_or_else(|| Error::ExhaustiveCap(format!("joint action space at slot {} exceeds 2^128, above the cap of {cap}", env.slot())))?;
    if size > cap {
        return Err(Error::ExhaustiveCap(format!("{size} joint actions at slot {} exceed the cap of {cap}", env.slot())));
    }
    let cfg = env.config();
    let due = env.due();
    let comps = compositions(cfg.chunks, cfg.beams);
    let p = cfg.power_levels;
    let layout = {
        let mut radices = Vec::new();
        if due.global {
            radices.push(comps.len());
        }
        let regional_nodes: Vec<usize> = if due.regional { (0..env.num_haps()).flat_map(|h| env.hap_nodes(h).to_vec()).collect() } else { Vec::new() };
        radices.extend(std::iter::repeat(cfg.subbands).take(regional_nodes.len()));
        let users: Vec<usize> = (0..env.num_serving()).flat_map(|i| env.node_users(i).iter().map(|&u| env.user_idx(u))).collect();
        radices.extend(std::iter::repeat(cfg.channels_per_subband * p).take(users.len()));
        Layout { radices, global: due.global, regional_nodes, users }
    };
    let scorer = FastScorer::new(env);
    let alloc = env.allocation();
    let base_global = alloc.global.clone();
    let base_sb: Vec<usize> = env.graph().serving.iter().map(|n| alloc.regional[n]).collect();
    let n_users = env.graph().users.len();
    let total: u64 = layout.radices.iter().map(|&r| r as u64).product();

    let apply = |digits: &[usize], global: &mut Vec<usize>, sb: &mut [usize], local: &mut [(usize, usize)]| {
        let mut at = 0;
        if layout.global {
            global.clone_from(&comps[digits[0]]);
            at = 1;
        }
        for &i in &layout.regional_nodes {
            sb[i] = digits[at];
            at += 1;
        }
        for &u in &layout.users {
            local[u] = (digits[at] / p, digits[at] % p + 1);
            at += 1;
        }
    };

    let chunk: u64 = 4096;
    let n_chunks = total.div_ceil(chunk);
    let best = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let (lo, hi) = (c * chunk, ((c + 1) * chunk).min(total));
            let mut digits = vec![0usize; layout.radices.len()];
            let mut rem = lo;
            for (d, &r) in digits.iter_mut().zip(&layout.radices).rev() {
                *d = (rem % r as u64) as usize;
                rem /= r as u64;
            }
            let mut global = base_global.clone();
            let mut sb = base_sb.clone();
            let mut local = vec![(0, 1); n_users];
            let mut sc = scorer.scratch();
            let mut best = (f64::NEG_INFINITY, u64::MAX);
            for idx in lo..hi {
                apply(&digits, &mut global, &mut sb, &mut local);
                let s = scorer.score(&global, &sb, &local, &mut sc);
                if s > best.0 {
                    best = (s, idx);
                }
                for (d, &r) in digits.iter_mut().zip(&layout.radices).rev() {
                    *d += 1;
                    if *d < r {
                        break;
                    }
                    *d = 0;
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });

    if !best.0.is_finite() {
        return Err(Error::Numerical { index: 0, detail: "no finite candidate score".into() });
    }
    let mut digits = vec![0usize; layout.radices.len()];
    let mut rem = best.1;
    for (d, &r) in digits.iter_mut().zip(&layout.radices).rev() {
        *d = (rem % r as u64) as usize;
        rem /= r as u64;
    }
    let mut global = base_global;
    let mut sb = base_sb;
    let mut local = vec![(0, 1); n_users];
    apply(&digits, &mut global, &mut sb, &mut local);

    let mut actions = ActionSet::default();
    if due.global {
        actions.global = Some(GlobalAction { chunks_per_beam: global });
    }
    if due.regional {
        for h in 0..env.num_haps() {
            actions.regional.insert(h, RegionalAction { subbands: env.hap_nodes(h).iter().map(|&i| sb[i]).collect() });
        }
    }
    for i in 0..env.num_serving() {
        let assignments = env.node_users(i).iter().map(|&u| local[env.user_idx(u)]).collect();
        actions.local.insert(i, LocalAction { assignments, uav_move: Move::Stay });
    }
    Ok(SearchResult { actions, score: best.0, evaluated: total })
}

#[derive(Debug, Clone)]
pub struct ExhaustiveController {
    pub cap: u128,
}

impl ExhaustiveController {
    pub fn new(cap: u128) -> Self {
        Self { cap }
    }
}

impl Controller for ExhaustiveController {
    fn label(&self) -> &'static str {
        "exhaustive"
    }

    fn act(&mut self, env: &HierEnv) -> Result<ActionSet> {
        let start = Instant::now();
        let mut actions = search(env, self.cap)?.actions;
        actions.latency_s.insert(AgentId::Global, start.elapsed().as_secs_f64());
        Ok(actions)
    }
}
