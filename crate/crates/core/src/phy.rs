//! Downlink power-domain NOMA with perfect successive interference
//! cancellation, co-channel interference and Shannon rates.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{NodeId, NodeKind};

pub const BOLTZMANN_J_PER_K: f64 = 1.380_649e-23;
pub const NOISE_TEMPERATURE_K: f64 = 290.0;
pub const NOISE_FIGURE_DB: f64 = 7.0;
pub const MAX_CLUSTER_SIZE: usize = 4;

/// Thermal noise power over `bandwidth_hz`, including the receiver noise figure.
pub fn noise_power_w(bandwidth_hz: f64) -> f64 {
    BOLTZMANN_J_PER_K * NOISE_TEMPERATURE_K * bandwidth_hz * 10f64.powf(NOISE_FIGURE_DB / 10.0)
}

pub fn capacity_bps(bandwidth_hz: f64, sinr: f64) -> Result<f64> {
    if !(sinr >= 0.0) {
        return Err(Error::Domain(format!("SINR must be nonnegative, got {sinr}")));
    }
    if !(bandwidth_hz > 0.0) {
        return Err(Error::Domain(format!("bandwidth must be positive, got {bandwidth_hz}")));
    }
    Ok(bandwidth_hz * (1.0 + sinr).log2())
}

/// Decode order: descending gain, ties by ascending user id.
pub fn sic_order(gains: &[(NodeId, f64)]) -> Vec<NodeId> {
    let mut v = gains.to_vec();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().map(|(u, _)| u).collect()
}

/// Users sharing one channel of one serving node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NomaCluster {
    pub node: NodeId,
    pub beam: usize,
    /// Channel index within the beam's spectrum (`subband * C + channel`).
    pub channel: usize,
    /// `(user, power fraction)` in decode order, strongest first.
    pub members: Vec<(NodeId, f64)>,
}

impl NomaCluster {
    pub fn new(node: NodeId, beam: usize, channel: usize, members: Vec<(NodeId, f64)>) -> Result<Self> {
        if members.is_empty() || members.len() > MAX_CLUSTER_SIZE {
            return Err(Error::Domain(format!("cluster size {} outside 1..={MAX_CLUSTER_SIZE}", members.len())));
        }
        if members.iter().any(|&(_, a)| !(a > 0.0)) {
            return Err(Error::Domain("power fractions must be positive".into()));
        }
        let sum: f64 = members.iter().map(|&(_, a)| a).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("power fractions sum to {sum}, not 1")));
        }
        Ok(Self { node, beam, channel, members })
    }
}

/// Co-channel interference from other transmitters, split by tier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CoChannel {
    pub same_tier_w: f64,
    pub cross_tier_w: f64,
}

impl CoChannel {
    pub fn total(&self) -> f64 {
        self.same_tier_w + self.cross_tier_w
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InterferenceBreakdown {
    pub intra_cluster_w: f64,
    pub co_channel_same_tier_w: f64,
    pub co_channel_cross_tier_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrRow {
    pub user: NodeId,
    pub node: NodeId,
    pub channel: usize,
    pub sinr: f64,
    pub rate_bps: f64,
    pub interference: InterferenceBreakdown,
}

/// Per-user SINR and rate inside one cluster. `gains[i]` and `co_channel[i]`
/// belong to `cluster.members[i]`. A stronger user may not receive a larger
/// power fraction than a strictly weaker one.
pub fn noma_sinr(
    cluster: &NomaCluster,
    gains: &[f64],
    tx_power_w: f64,
    co_channel: &[CoChannel],
    noise_w: f64,
    bandwidth_hz: f64,
) -> Result<Vec<SinrRow>> {
    let n = cluster.members.len();
    if gains.len() != n || co_channel.len() != n {
        return Err(Error::Shape(format!("cluster has {n} members but {} gains / {} interference terms", gains.len(), co_channel.len())));
    }
    if !(noise_w > 0.0) {
        return Err(Error::Domain("noise power must be positive".into()));
    }
    for i in 0..n {
        for j in 0..n {
            if gains[i] > gains[j] && cluster.members[i].1 > cluster.members[j].1 {
                return Err(Error::SicFeasibility(format!(
                    "user {} (gain {:e}) gets fraction {} above weaker user {} (gain {:e}, fraction {})",
                    cluster.members[i].0, gains[i], cluster.members[i].1, cluster.members[j].0, gains[j], cluster.members[j].1
                )));
            }
        }
    }
    let with_gain: Vec<(NodeId, f64)> = cluster.members.iter().zip(gains).map(|(&(u, _), &g)| (u, g)).collect();
    let order = sic_order(&with_gain);
    let rank: HashMap<NodeId, usize> = order.iter().enumerate().map(|(r, &u)| (u, r)).collect();

    let mut rows = Vec::with_capacity(n);
    for (i, &(user, alpha)) in cluster.members.iter().enumerate() {
        let g = gains[i];
        let stronger: f64 = cluster
            .members
            .iter()
            .filter(|(v, _)| rank[v] < rank[&user])
            .map(|&(_, a)| a)
            .sum();
        let intra = stronger * tx_power_w * g;
        let signal = alpha * tx_power_w * g;
        let sinr = signal / (intra + co_channel[i].total() + noise_w);
        rows.push(SinrRow {
            user,
            node: cluster.node,
            channel: cluster.channel,
            sinr,
            rate_bps: capacity_bps(bandwidth_hz, sinr)?,
            interference: InterferenceBreakdown {
                intra_cluster_w: intra,
                co_channel_same_tier_w: co_channel[i].same_tier_w,
                co_channel_cross_tier_w: co_channel[i].cross_tier_w,
            },
        });
    }
    Ok(rows)
}

/// Turn per-user power levels (in decode order, strongest first) into power
/// fractions that satisfy the inverse-gain ordering: a weaker user's level is
/// raised to at least that of every stronger user, then all are normalized.
pub fn power_fractions_from_levels(levels_in_decode_order: &[usize]) -> Vec<f64> {
    let mut running = 0usize;
    let lifted: Vec<f64> = levels_in_decode_order
        .iter()
        .map(|&l| {
            running = running.max(l);
            running as f64
        })
        .collect();
    let sum: f64 = lifted.iter().sum();
    let mut out: Vec<f64> = lifted.iter().map(|l| l / sum).collect();
    // Absorb rounding so the fractions sum to 1 to the last bit.
    let residue = 1.0 - out.iter().sum::<f64>();
    if let Some(last) = out.last_mut() {
        *last += residue;
    }
    out
}

/// Co-channel interference at every clustered user: the sum over every other
/// transmitter active on the same `(beam, channel)` of its per-channel power
/// times its gain to the user.
pub fn aggregate_interference(
    clusters: &[NomaCluster],
    gain: impl Fn(NodeId, NodeId) -> f64,
    tx_power_w: impl Fn(NodeId) -> f64,
    kind: impl Fn(NodeId) -> NodeKind,
) -> BTreeMap<NodeId, CoChannel> {
    let mut active: HashMap<(usize, usize), Vec<NodeId>> = HashMap::new();
    for c in clusters {
        let txs = active.entry((c.beam, c.channel)).or_default();
        if !txs.contains(&c.node) {
            txs.push(c.node);
        }
    }
    let mut out = BTreeMap::new();
    for c in clusters {
        let own_kind = kind(c.node);
        for &(user, _) in &c.members {
            let mut co = CoChannel::default();
            for &t in &active[&(c.beam, c.channel)] {
                if t == c.node {
                    continue;
                }
                let w = tx_power_w(t) * gain(t, user);
                if kind(t) == own_kind {
                    co.same_tier_w += w;
                } else {
                    co.cross_tier_w += w;
                }
            }
            out.insert(user, co);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(i: usize) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(capacity_bps(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(capacity_bps(20e6, 3.0).unwrap(), 40e6);
        assert_eq!(capacity_bps(5e6, 0.0).unwrap(), 0.0);
        assert!(capacity_bps(1.0, -0.1).is_err());
    }

    #[test]
    fn sic_order_examples() {
        assert_eq!(sic_order(&[(u(1), 1.0), (u(2), 0.25)]), vec![u(1), u(2)]);
        assert_eq!(sic_order(&[(u(3), 0.5), (u(2), 0.5)]), vec![u(2), u(3)]);
        assert_eq!(sic_order(&[(u(7), 0.1)]), vec![u(7)]);
    }

    #[test]
    fn two_user_worked_example() {
        let c = NomaCluster::new(u(100), 0, 0, vec![(u(1), 0.2), (u(2), 0.8)]).unwrap();
        let rows = noma_sinr(&c, &[1.0, 0.25], 1.0, &[CoChannel::default(); 2], 0.1, 1.0).unwrap();
        assert!((rows[0].sinr - 2.0).abs() < 1e-12);
        assert!((rows[0].rate_bps - 1.584_962_500_721_156).abs() < 1e-12);
        assert!((rows[1].sinr - 0.2 / 0.15).abs() < 1e-12);
        assert!((rows[1].rate_bps - 1.222_392_421_336_448_5).abs() < 1e-12);
        assert!((rows[1].interference.intra_cluster_w - 0.05).abs() < 1e-15);
    }

    #[test]
    fn singleton_is_point_to_point() {
        let c = NomaCluster::new(u(9), 0, 3, vec![(u(1), 1.0)]).unwrap();
        let rows = noma_sinr(&c, &[2e-10], 10.0, &[CoChannel::default()], 1e-12, 1e6).unwrap();
        assert!((rows[0].sinr - 10.0 * 2e-10 / 1e-12).abs() < 1e-9);
    }

    #[test]
    fn zero_gain_zero_rate() {
        let c = NomaCluster::new(u(9), 0, 0, vec![(u(1), 0.4), (u(2), 0.6)]).unwrap();
        let rows = noma_sinr(&c, &[1e-9, 0.0], 1.0, &[CoChannel::default(); 2], 1e-12, 1e6).unwrap();
        assert_eq!(rows[1].sinr, 0.0);
        assert_eq!(rows[1].rate_bps, 0.0);
    }

    #[test]
    fn inverted_powers_rejected() {
        let c = NomaCluster::new(u(9), 0, 0, vec![(u(1), 0.8), (u(2), 0.2)]).unwrap();
        let r = noma_sinr(&c, &[1.0, 0.25], 1.0, &[CoChannel::default(); 2], 0.1, 1.0);
        assert!(matches!(r, Err(Error::SicFeasibility(_))));
    }

    #[test]
    fn cluster_invariants_enforced() {
        assert!(NomaCluster::new(u(0), 0, 0, vec![]).is_err());
        assert!(NomaCluster::new(u(0), 0, 0, vec![(u(1), 0.5), (u(2), 0.4)]).is_err());
        let five = (1..=5).map(|i| (u(i), 0.2)).collect();
        assert!(NomaCluster::new(u(0), 0, 0, five).is_err());
    }

    #[test]
    fn level_projection_is_sic_feasible() {
        let f = power_fractions_from_levels(&[3, 1, 2, 1]);
        // lifted to [3,3,3,3]
        assert!(f.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let f = power_fractions_from_levels(&[1, 2, 4]);
        assert_eq!(f.iter().sum::<f64>(), 1.0);
        assert!(f.windows(2).all(|w| w[0] <= w[1]));
        assert!((f[0] - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_channels_do_not_interfere() {
        let a = NomaCluster::new(u(10), 0, 0, vec![(u(1), 1.0)]).unwrap();
        let b = NomaCluster::new(u(11), 0, 4, vec![(u(2), 1.0)]).unwrap();
        let i = aggregate_interference(&[a, b], |_, _| 1e-9, |_| 1.0, |_| NodeKind::Tbs);
        assert_eq!(i[&u(1)].total(), 0.0);
        assert_eq!(i[&u(2)].total(), 0.0);
    }

    #[test]
    fn shared_channel_single_term() {
        let tbs = NomaCluster::new(u(10), 0, 2, vec![(u(1), 1.0)]).unwrap();
        let uav = NomaCluster::new(u(11), 0, 2, vec![(u(2), 1.0)]).unwrap();
        let gain = |t: NodeId, r: NodeId| if t == u(10) && r == u(2) { 1e-9 } else { 1e-12 };
        let kind = |n: NodeId| if n == u(10) { NodeKind::Tbs } else { NodeKind::Uav };
        let i = aggregate_interference(&[tbs, uav], gain, |_| 1.0, kind);
        assert_eq!(i[&u(2)].cross_tier_w, 1e-9);
        assert_eq!(i[&u(2)].same_tier_w, 0.0);
    }

    #[test]
    fn same_channel_other_beam_is_orthogonal() {
        let a = NomaCluster::new(u(10), 0, 1, vec![(u(1), 1.0)]).unwrap();
        let b = NomaCluster::new(u(11), 1, 1, vec![(u(2), 1.0)]).unwrap();
        let i = aggregate_interference(&[a, b], |_, _| 1e-9, |_| 1.0, |_| NodeKind::Tbs);
        assert_eq!(i[&u(1)].total(), 0.0);
    }

    #[test]
    fn noise_is_thermal_plus_figure() {
        let n = noise_power_w(1.0);
        assert!((n / (1.380_649e-23 * 290.0 * 10f64.powf(0.7)) - 1.0).abs() < 1e-12);
    }
}
