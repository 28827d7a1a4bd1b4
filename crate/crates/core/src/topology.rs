//! Scenario description and the node graph of the satellite/HAP/TBS/UAV
//! hierarchy: construction, user association and per-slot mobility.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::FadingParams;
use crate::env::RewardWeights;
use crate::error::{Error, Result};

/// Half side length of every (square) region.
pub const REGION_HALF_EXTENT_M: f64 = 500.0;
/// Gap left between neighbouring region squares so closed squares never touch.
pub const REGION_GAP_M: f64 = 200.0;
/// Radius of the ring on which TBSs sit around the region center.
pub const TBS_RING_RADIUS_M: f64 = 250.0;
/// Radius of the ring used when a region has more than one UAV.
pub const UAV_RING_RADIUS_M: f64 = 150.0;
pub const TBS_HEIGHT_M: f64 = 25.0;
pub const USER_HEIGHT_M: f64 = 1.5;
pub const UAV_STEP_M: f64 = 10.0;
pub const USER_JITTER_SIGMA_M: f64 = 1.0;

/// Per-channel transmit powers in watts.
pub const TBS_TX_POWER_W: f64 = 10.0;
pub const UAV_TX_POWER_W: f64 = 1.0;
pub const HAP_TX_POWER_W: f64 = 10.0;
pub const SATELLITE_TX_POWER_W: f64 = 100.0;

/// Which tiers exist in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hierarchy {
    #[serde(alias = "space-air-ground", alias = "space_air_ground")]
    SpaceAirGround,
    #[serde(alias = "air-ground", alias = "air_ground")]
    AirGround,
    #[serde(alias = "uav-aided", alias = "uav_aided")]
    UavAided,
}

impl Hierarchy {
    pub const ALL: [Hierarchy; 3] = [Hierarchy::SpaceAirGround, Hierarchy::AirGround, Hierarchy::UavAided];

    pub fn has_satellite(self) -> bool {
        matches!(self, Hierarchy::SpaceAirGround)
    }

    pub fn has_haps(self) -> bool {
        !matches!(self, Hierarchy::UavAided)
    }

    pub fn label(self) -> &'static str {
        match self {
            Hierarchy::SpaceAirGround => "space-air-ground",
            Hierarchy::AirGround => "air-ground",
            Hierarchy::UavAided => "uav-aided",
        }
    }
}

impl fmt::Display for Hierarchy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Hierarchy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "space-air-ground" | "spaceairground" | "sag" => Ok(Hierarchy::SpaceAirGround),
            "air-ground" | "airground" | "ag" => Ok(Hierarchy::AirGround),
            "uav-aided" | "uavaided" | "uav" => Ok(Hierarchy::UavAided),
            other => Err(Error::Config(format!("unknown hierarchy `{other}`"))),
        }
    }
}

/// Full description of one simulated scenario. Loadable from JSON; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub hierarchy: Hierarchy,
    pub beams: usize,
    pub haps_per_beam: usize,
    pub regions_per_hap: usize,
    pub tbs_per_region: usize,
    pub uavs_per_region: usize,
    pub users_per_region_range: [usize; 2],
    pub sat_altitude_m: f64,
    pub hap_altitude_m: f64,
    pub uav_altitude_m: f64,
    pub carrier_hz: f64,
    pub total_bandwidth_hz: f64,
    pub chunks: usize,
    pub subbands: usize,
    pub channels_per_subband: usize,
    pub power_levels: usize,
    pub slots_per_episode: usize,
    pub global_period_slots: usize,
    pub regional_period_slots: usize,
    pub seed: u64,
    #[serde(default)]
    pub fading: FadingParams,
    #[serde(default = "default_exhaustive_cap")]
    pub exhaustive_cap: u128,
    #[serde(default)]
    pub reward_weights: RewardWeights,
    #[serde(default = "default_r_min_bps")]
    pub r_min_bps: f64,
}

fn default_exhaustive_cap() -> u128 {
    100_000
}

fn default_r_min_bps() -> f64 {
    1e6
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::space_air_ground()
    }
}

impl ScenarioConfig {
    /// Two Ka-band beams, one HAP per beam, two regions per HAP with two TBSs
    /// and one UAV each.
    pub fn space_air_ground() -> Self {
        Self {
            hierarchy: Hierarchy::SpaceAirGround,
            beams: 2,
            haps_per_beam: 1,
            regions_per_hap: 2,
            tbs_per_region: 2,
            uavs_per_region: 1,
            users_per_region_range: [10, 30],
            sat_altitude_m: 550e3,
            hap_altitude_m: 20e3,
            uav_altitude_m: 100.0,
            carrier_hz: 28e9,
            total_bandwidth_hz: 200e6,
            chunks: 4,
            subbands: 10,
            channels_per_subband: 4,
            power_levels: 4,
            slots_per_episode: 500,
            global_period_slots: 50,
            regional_period_slots: 10,
            seed: 0,
            fading: FadingParams::default(),
            exhaustive_cap: default_exhaustive_cap(),
            reward_weights: RewardWeights::default(),
            r_min_bps: default_r_min_bps(),
        }
    }

    /// One HAP with two regions and no satellite.
    pub fn air_ground() -> Self {
        Self { hierarchy: Hierarchy::AirGround, beams: 1, ..Self::space_air_ground() }
    }

    /// A single region of two TBSs and one UAV, no upper tiers.
    pub fn uav_aided() -> Self {
        Self {
            hierarchy: Hierarchy::UavAided,
            beams: 1,
            haps_per_beam: 0,
            regions_per_hap: 1,
            ..Self::space_air_ground()
        }
    }

    /// Default-scale preset for each hierarchy.
    pub fn preset(hierarchy: Hierarchy) -> Self {
        match hierarchy {
            Hierarchy::SpaceAirGround => Self::space_air_ground(),
            Hierarchy::AirGround => Self::air_ground(),
            Hierarchy::UavAided => Self::uav_aided(),
        }
    }

    /// Small scenario where exhaustive search stays tractable: one HAP over one
    /// region with two TBSs, one UAV and six users.
    pub fn micro() -> Self {
        Self {
            hierarchy: Hierarchy::SpaceAirGround,
            beams: 1,
            haps_per_beam: 1,
            regions_per_hap: 1,
            tbs_per_region: 2,
            uavs_per_region: 1,
            users_per_region_range: [6, 6],
            subbands: 4,
            channels_per_subband: 2,
            power_levels: 2,
            exhaustive_cap: 2_000_000,
            ..Self::space_air_ground()
        }
    }

    /// The micro scenario with the upper tiers removed to match `hierarchy`.
    pub fn micro_for(hierarchy: Hierarchy) -> Self {
        let base = Self::micro();
        match hierarchy {
            Hierarchy::SpaceAirGround => base,
            Hierarchy::AirGround => Self { hierarchy, ..base },
            Hierarchy::UavAided => Self { hierarchy, haps_per_beam: 0, ..base },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn num_satellites(&self) -> usize {
        usize::from(self.hierarchy.has_satellite())
    }

    pub fn num_haps(&self) -> usize {
        if self.hierarchy.has_haps() {
            self.beams * self.haps_per_beam
        } else {
            0
        }
    }

    pub fn num_regions(&self) -> usize {
        if self.hierarchy.has_haps() {
            self.num_haps() * self.regions_per_hap
        } else {
            self.beams * self.regions_per_hap
        }
    }

    pub fn regions_per_beam(&self) -> usize {
        self.num_regions() / self.beams
    }

    pub fn nodes_per_region(&self) -> usize {
        self.tbs_per_region + self.uavs_per_region
    }

    pub fn num_serving(&self) -> usize {
        self.num_regions() * self.nodes_per_region()
    }

    pub fn chunk_bandwidth_hz(&self) -> f64 {
        self.total_bandwidth_hz / self.chunks as f64
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.beams == 0 {
            return err(format!("{} hierarchy needs at least one beam", self.hierarchy));
        }
        match self.hierarchy {
            Hierarchy::SpaceAirGround | Hierarchy::AirGround if self.haps_per_beam == 0 => {
                return err(format!("{} hierarchy needs haps_per_beam >= 1", self.hierarchy));
            }
            Hierarchy::UavAided if self.haps_per_beam != 0 => {
                return err("uav-aided hierarchy has no HAPs; set haps_per_beam to 0".into());
            }
            _ => {}
        }
        let counts = [
            ("regions_per_hap", self.regions_per_hap),
            ("tbs_per_region", self.tbs_per_region),
            ("uavs_per_region", self.uavs_per_region),
            ("chunks", self.chunks),
            ("subbands", self.subbands),
            ("channels_per_subband", self.channels_per_subband),
            ("power_levels", self.power_levels),
            ("slots_per_episode", self.slots_per_episode),
            ("global_period_slots", self.global_period_slots),
            ("regional_period_slots", self.regional_period_slots),
        ];
        for (name, v) in counts {
            if v == 0 {
                return err(format!("{name} must be >= 1"));
            }
        }
        let [lo, hi] = self.users_per_region_range;
        if lo == 0 || lo > hi {
            return err(format!("users_per_region_range [{lo}, {hi}] must satisfy 1 <= min <= max"));
        }
        if self.global_period_slots % self.regional_period_slots != 0 {
            return err("global_period_slots must be a multiple of regional_period_slots".into());
        }
        for (name, v) in [
            ("sat_altitude_m", self.sat_altitude_m),
            ("hap_altitude_m", self.hap_altitude_m),
            ("uav_altitude_m", self.uav_altitude_m),
            ("carrier_hz", self.carrier_hz),
            ("total_bandwidth_hz", self.total_bandwidth_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return err(format!("{name} must be positive and finite"));
            }
        }
        if !(self.r_min_bps.is_finite() && self.r_min_bps >= 0.0) {
            return err("r_min_bps must be nonnegative and finite".into());
        }
        let chunk = self.total_bandwidth_hz / self.chunks as f64;
        if chunk.fract() != 0.0 {
            return err("total_bandwidth_hz must divide evenly into chunks".into());
        }
        if (chunk / (self.subbands * self.channels_per_subband) as f64).fract() != 0.0 {
            return err("each chunk must divide evenly into subbands x channels".into());
        }
        self.fading.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Satellite,
    Hap,
    Tbs,
    Uav,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub position: [f64; 3],
    /// Transmit power on each active channel, zero for users.
    pub tx_power_w: f64,
    pub beam_id: usize,
    /// `None` for the satellite and HAPs.
    pub region_id: Option<usize>,
    pub power_budget_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: usize,
    pub hap_id: Option<NodeId>,
    pub beam_id: usize,
    pub center: [f64; 2],
    pub half_extent: f64,
}

impl Region {
    /// Distance from a 2D point to the closed region square (0 inside).
    pub fn outside_distance(&self, x: f64, y: f64) -> f64 {
        let dx = ((x - self.center[0]).abs() - self.half_extent).max(0.0);
        let dy = ((y - self.center[1]).abs() - self.half_extent).max(0.0);
        dx.hypot(dy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    pub hierarchy: Hierarchy,
    pub beams: usize,
    pub nodes: Vec<Node>,
    pub regions: Vec<Region>,
    pub satellite: Option<NodeId>,
    pub haps: Vec<NodeId>,
    /// TBSs and UAVs in region order (TBSs first within a region).
    pub serving: Vec<NodeId>,
    pub users: Vec<NodeId>,
}

impl NetworkGraph {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn uavs(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.serving.iter().copied().filter(|&n| self.node(n).kind == NodeKind::Uav)
    }

    pub fn serving_in_region(&self, region: usize) -> Vec<NodeId> {
        self.serving.iter().copied().filter(|&n| self.node(n).region_id == Some(region)).collect()
    }

    pub fn users_in_region(&self, region: usize) -> Vec<NodeId> {
        self.users.iter().copied().filter(|&n| self.node(n).region_id == Some(region)).collect()
    }

    /// Serving nodes controlled by the HAP at `haps[hap_index]`.
    pub fn controlled_by_hap(&self, hap_index: usize) -> Vec<NodeId> {
        let hap = self.haps[hap_index];
        self.serving
            .iter()
            .copied()
            .filter(|&n| {
                let region = self.node(n).region_id.expect("serving nodes live in a region");
                self.regions[region].hap_id == Some(hap)
            })
            .collect()
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        distance(&self.node(a).position, &self.node(b).position)
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn ring_offset(k: usize, n: usize, radius: f64) -> [f64; 2] {
    let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
    [radius * angle.cos(), radius * angle.sin()]
}

/// Build the node graph. Deterministic for a fixed RNG state.
pub fn build_topology<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<NetworkGraph> {
    config.validate()?;
    let mut nodes: Vec<Node> = Vec::new();
    let push = |nodes: &mut Vec<Node>, kind, position, tx: f64, beam_id, region_id, channels: usize| {
        let id = NodeId(nodes.len());
        nodes.push(Node { id, kind, position, tx_power_w: tx, beam_id, region_id, power_budget_w: tx * channels as f64 });
        id
    };
    let channels = config.channels_per_subband;

    let n_regions = config.num_regions();
    let pitch = 2.0 * REGION_HALF_EXTENT_M + REGION_GAP_M;
    let centers: Vec<[f64; 2]> = (0..n_regions).map(|r| [r as f64 * pitch, 0.0]).collect();
    let centroid = |rs: &[usize]| -> [f64; 2] {
        let n = rs.len().max(1) as f64;
        [rs.iter().map(|&r| centers[r][0]).sum::<f64>() / n, rs.iter().map(|&r| centers[r][1]).sum::<f64>() / n]
    };

    let satellite = if config.hierarchy.has_satellite() {
        let all: Vec<usize> = (0..n_regions).collect();
        let c = centroid(&all);
        Some(push(&mut nodes, NodeKind::Satellite, [c[0], c[1], config.sat_altitude_m], SATELLITE_TX_POWER_W, 0, None, channels))
    } else {
        None
    };

    let mut haps = Vec::new();
    let mut regions = Vec::with_capacity(n_regions);
    if config.hierarchy.has_haps() {
        for h in 0..config.num_haps() {
            let beam = h / config.haps_per_beam;
            let rs: Vec<usize> = (h * config.regions_per_hap..(h + 1) * config.regions_per_hap).collect();
            let c = centroid(&rs);
            let id = push(&mut nodes, NodeKind::Hap, [c[0], c[1], config.hap_altitude_m], HAP_TX_POWER_W, beam, None, channels);
            haps.push(id);
            for r in rs {
                regions.push(Region { id: r, hap_id: Some(id), beam_id: beam, center: centers[r], half_extent: REGION_HALF_EXTENT_M });
            }
        }
    } else {
        for (r, &center) in centers.iter().enumerate() {
            let beam = r / config.regions_per_hap;
            regions.push(Region { id: r, hap_id: None, beam_id: beam, center, half_extent: REGION_HALF_EXTENT_M });
        }
    }

    let mut serving = Vec::new();
    for region in &regions {
        let [cx, cy] = region.center;
        for k in 0..config.tbs_per_region {
            let [dx, dy] = ring_offset(k, config.tbs_per_region, TBS_RING_RADIUS_M);
            serving.push(push(&mut nodes, NodeKind::Tbs, [cx + dx, cy + dy, TBS_HEIGHT_M], TBS_TX_POWER_W, region.beam_id, Some(region.id), channels));
        }
        for k in 0..config.uavs_per_region {
            let [dx, dy] = if k == 0 {
                [0.0, 0.0]
            } else {
                ring_offset(k - 1, config.uavs_per_region - 1, UAV_RING_RADIUS_M)
            };
            serving.push(push(&mut nodes, NodeKind::Uav, [cx + dx, cy + dy, config.uav_altitude_m], UAV_TX_POWER_W, region.beam_id, Some(region.id), channels));
        }
    }

    let [lo, hi] = config.users_per_region_range;
    let mut users = Vec::new();
    for region in &regions {
        let count = rng.gen_range(lo..=hi);
        let h = region.half_extent;
        for _ in 0..count {
            let x = region.center[0] + rng.gen_range(-h..=h);
            let y = region.center[1] + rng.gen_range(-h..=h);
            users.push(push(&mut nodes, NodeKind::User, [x, y, USER_HEIGHT_M], 0.0, region.beam_id, Some(region.id), channels));
        }
    }

    Ok(NetworkGraph { hierarchy: config.hierarchy, beams: config.beams, nodes, regions, satellite, haps, serving, users })
}

/// Per-node load cap used by association.
pub fn load_cap(users_in_region: usize, serving_in_region: usize) -> usize {
    users_in_region.div_ceil(serving_in_region.max(1)) + 2
}

/// Assign every user to one TBS/UAV of its region: strongest gain first,
/// subject to the per-node load cap, ties to the lowest node id. Users whose
/// gains are all zero go to the nearest node that still has room.
pub fn associate_users(graph: &NetworkGraph, gains: &HashMap<(NodeId, NodeId), f64>) -> BTreeMap<NodeId, NodeId> {
    let mut assignment = BTreeMap::new();
    for region in &graph.regions {
        let nodes = graph.serving_in_region(region.id);
        let users = graph.users_in_region(region.id);
        if nodes.is_empty() {
            continue;
        }
        let cap = load_cap(users.len(), nodes.len());
        let mut load: BTreeMap<NodeId, usize> = nodes.iter().map(|&n| (n, 0)).collect();

        let mut pairs: Vec<(f64, NodeId, NodeId)> = Vec::new();
        for &u in &users {
            for &n in &nodes {
                let g = gains.get(&(n, u)).copied().unwrap_or(0.0);
                if g > 0.0 {
                    pairs.push((g, n, u));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for (_, n, u) in pairs {
            if assignment.contains_key(&u) || load[&n] >= cap {
                continue;
            }
            assignment.insert(u, n);
            *load.get_mut(&n).unwrap() += 1;
        }

        for &u in &users {
            if assignment.contains_key(&u) {
                continue;
            }
            log::debug!("user {u} has no usable gain; falling back to nearest node");
            let nearest = nodes
                .iter()
                .copied()
                .filter(|n| load[n] < cap)
                .min_by(|&a, &b| graph.distance(a, u).total_cmp(&graph.distance(b, u)).then(a.cmp(&b)))
                .expect("load cap leaves room for every user");
            assignment.insert(u, nearest);
            *load.get_mut(&nearest).unwrap() += 1;
        }
    }
    assignment
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum Move {
    #[default]
    Stay,
    North,
    South,
    East,
    West,
}

impl Move {
    pub const ALL: [Move; 5] = [Move::Stay, Move::North, Move::South, Move::East, Move::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Move> {
        Self::ALL.get(i).copied()
    }

    fn delta(self) -> [f64; 2] {
        match self {
            Move::Stay => [0.0, 0.0],
            Move::North => [0.0, UAV_STEP_M],
            Move::South => [0.0, -UAV_STEP_M],
            Move::East => [UAV_STEP_M, 0.0],
            Move::West => [-UAV_STEP_M, 0.0],
        }
    }
}

/// Advance one slot of mobility. UAVs translate by their move at fixed
/// altitude; users jitter with a zero-mean Gaussian per axis. Returns each
/// UAV's distance outside its region square.
pub fn step_mobility<R: Rng + ?Sized>(
    graph: &mut NetworkGraph,
    uav_moves: &BTreeMap<NodeId, Move>,
    rng: &mut R,
) -> BTreeMap<NodeId, f64> {
    let jitter = Normal::new(0.0, USER_JITTER_SIGMA_M).expect("positive sigma");
    let mut outside = BTreeMap::new();
    for idx in 0..graph.serving.len() {
        let id = graph.serving[idx];
        if graph.node(id).kind != NodeKind::Uav {
            continue;
        }
        let [dx, dy] = uav_moves.get(&id).copied().unwrap_or_default().delta();
        let node = &mut graph.nodes[id.0];
        node.position[0] += dx;
        node.position[1] += dy;
        let region = node.region_id.expect("UAVs live in a region");
        let (x, y) = (node.position[0], node.position[1]);
        outside.insert(id, graph.regions[region].outside_distance(x, y));
    }
    for idx in 0..graph.users.len() {
        let id = graph.users[idx];
        let node = &mut graph.nodes[id.0];
        node.position[0] += jitter.sample(rng);
        node.position[1] += jitter.sample(rng);
    }
    outside
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn default_space_air_ground_counts() {
        let g = build_topology(&ScenarioConfig::space_air_ground(), &mut rng(1)).unwrap();
        assert_eq!(g.count(NodeKind::Satellite), 1);
        assert_eq!(g.count(NodeKind::Hap), 2);
        assert_eq!(g.count(NodeKind::Tbs), 8);
        assert_eq!(g.count(NodeKind::Uav), 4);
        assert_eq!(g.regions.len(), 4);
        for region in &g.regions {
            let n = g.users_in_region(region.id).len();
            assert!((10..=30).contains(&n));
        }
    }

    #[test]
    fn uav_aided_has_no_upper_tiers() {
        let g = build_topology(&ScenarioConfig::uav_aided(), &mut rng(2)).unwrap();
        assert!(g.satellite.is_none());
        assert!(g.haps.is_empty());
        assert_eq!(g.serving.len(), 3);
        assert_eq!(g.regions.len(), 1);
    }

    #[test]
    fn same_seed_same_graph() {
        let cfg = ScenarioConfig::space_air_ground();
        let a = build_topology(&cfg, &mut rng(9)).unwrap();
        let b = build_topology(&cfg, &mut rng(9)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for (x, y) in a.nodes.iter().zip(&b.nodes) {
            for k in 0..3 {
                assert_eq!(x.position[k].to_bits(), y.position[k].to_bits());
            }
        }
    }

    #[test]
    fn zero_beams_is_a_config_error() {
        let cfg = ScenarioConfig { beams: 0, ..ScenarioConfig::space_air_ground() };
        assert!(matches!(build_topology(&cfg, &mut rng(0)), Err(Error::Config(_))));
    }

    #[test]
    fn altitudes_and_power_ordering() {
        let cfg = ScenarioConfig::space_air_ground();
        let g = build_topology(&cfg, &mut rng(3)).unwrap();
        for n in &g.nodes {
            match n.kind {
                NodeKind::Satellite => assert_eq!(n.position[2], cfg.sat_altitude_m),
                NodeKind::Hap => assert_eq!(n.position[2], cfg.hap_altitude_m),
                NodeKind::Uav => assert_eq!(n.position[2], cfg.uav_altitude_m),
                _ => {}
            }
        }
        assert!(TBS_TX_POWER_W > UAV_TX_POWER_W);
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let mut v = serde_json::to_value(ScenarioConfig::micro()).unwrap();
        v.as_object_mut().unwrap().insert("bogus".into(), 1.into());
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
        let ok = serde_json::to_string(&ScenarioConfig::micro()).unwrap();
        assert_eq!(ScenarioConfig::from_json(&ok).unwrap(), ScenarioConfig::micro());
    }

    #[test]
    fn config_invariants_checked() {
        let bad_period = ScenarioConfig { global_period_slots: 45, ..ScenarioConfig::micro() };
        assert!(bad_period.validate().is_err());
        let bad_users = ScenarioConfig { users_per_region_range: [5, 4], ..ScenarioConfig::micro() };
        assert!(bad_users.validate().is_err());
        let bad_split = ScenarioConfig { channels_per_subband: 7, ..ScenarioConfig::micro() };
        assert!(bad_split.validate().is_err());
        let bad_uav = ScenarioConfig { haps_per_beam: 1, ..ScenarioConfig::uav_aided() };
        assert!(bad_uav.validate().is_err());
    }

    fn single_region_graph(users: usize) -> NetworkGraph {
        let cfg = ScenarioConfig { users_per_region_range: [users, users], ..ScenarioConfig::micro() };
        build_topology(&cfg, &mut rng(4)).unwrap()
    }

    #[test]
    fn association_picks_strongest_gain() {
        let g = single_region_graph(1);
        let (tbs1, uav) = (g.serving[0], g.serving[2]);
        let u = g.users[0];
        let gains = HashMap::from([((tbs1, u), 2e-10), ((uav, u), 5e-10)]);
        assert_eq!(associate_users(&g, &gains)[&u], uav);
    }

    #[test]
    fn association_ties_go_to_lowest_id() {
        let g = single_region_graph(2);
        let (t1, t2) = (g.serving[0], g.serving[1]);
        let mut gains = HashMap::new();
        for &u in &g.users {
            gains.insert((t1, u), 1e-9);
            gains.insert((t2, u), 1e-9);
        }
        let a = associate_users(&g, &gains);
        assert!(g.users.iter().all(|u| a[u] == t1));
    }

    #[test]
    fn association_respects_cap() {
        let g = single_region_graph(12);
        assert_eq!(load_cap(12, 3), 6);
        let t1 = g.serving[0];
        // Every user prefers the same node.
        let mut gains = HashMap::new();
        for (k, &u) in g.users.iter().enumerate() {
            gains.insert((t1, u), 1e-8 * (1.0 + k as f64));
            for &n in &g.serving[1..] {
                gains.insert((n, u), 1e-10);
            }
        }
        let a = associate_users(&g, &gains);
        assert_eq!(a.len(), 12);
        // Brute-force replay of the greedy: the 6 strongest users win t1.
        let on_t1: Vec<_> = g.users.iter().filter(|u| a[u] == t1).copied().collect();
        assert_eq!(on_t1, g.users[6..].to_vec());
        for &n in &g.serving {
            assert!(a.values().filter(|&&m| m == n).count() <= 6);
        }
    }

    #[test]
    fn zero_gain_user_goes_to_nearest() {
        let g = single_region_graph(1);
        let u = g.users[0];
        let a = associate_users(&g, &HashMap::new());
        let nearest = g.serving.iter().copied().min_by(|&x, &y| g.distance(x, u).total_cmp(&g.distance(y, u))).unwrap();
        assert_eq!(a[&u], nearest);
    }

    #[test]
    fn uav_outside_distance() {
        let mut g = single_region_graph(1);
        let uav = g.serving[2];
        let out = step_mobility(&mut g, &BTreeMap::from([(uav, Move::Stay)]), &mut rng(0));
        assert_eq!(out[&uav], 0.0);

        let c = g.regions[0].center;
        g.nodes[uav.0].position = [c[0] + REGION_HALF_EXTENT_M - 5.0, c[1], 100.0];
        let out = step_mobility(&mut g, &BTreeMap::from([(uav, Move::East)]), &mut rng(0));
        assert!((out[&uav] - 5.0).abs() < 1e-9);
        assert_eq!(g.node(uav).position[2], 100.0);
    }

    #[test]
    fn user_jitter_variance_grows_linearly() {
        let mut g = single_region_graph(200);
        let start: Vec<[f64; 3]> = g.users.iter().map(|&u| g.node(u).position).collect();
        let mut r = rng(11);
        for _ in 0..1000 {
            step_mobility(&mut g, &BTreeMap::new(), &mut r);
        }
        let mut sum = 0.0;
        for (k, &u) in g.users.iter().enumerate() {
            let p = g.node(u).position;
            sum += (p[0] - start[k][0]).powi(2) + (p[1] - start[k][1]).powi(2);
        }
        let var_per_axis = sum / (2.0 * g.users.len() as f64);
        assert!((var_per_axis / 1000.0 - 1.0).abs() < 0.1, "variance {var_per_axis}");
    }
}
