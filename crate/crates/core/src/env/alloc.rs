//! The three-tier spectrum allocation, its containment checks, and the
//! clamping that maps invalid tier actions onto the nearest valid ones.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::action::{GlobalAction, LocalAction, RegionalAction};
use crate::topology::{Move, NetworkGraph, NodeId, NodeKind, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationState {
    /// Chunk count per beam; beams take consecutive runs of chunks.
    pub global: Vec<usize>,
    /// Sub-band of each serving node, relative to its beam's spectrum.
    pub regional: BTreeMap<NodeId, usize>,
    /// `(channel within the node's sub-band, power level in 1..=P)` per user.
    pub local: BTreeMap<NodeId, (usize, usize)>,
    pub uav_moves: BTreeMap<NodeId, Move>,
}

impl AllocationState {
    pub fn chunk_range(&self, beam: usize) -> Range<usize> {
        let start: usize = self.global[..beam].iter().sum();
        start..start + self.global[beam]
    }

    /// The chunk index sets owned by each beam.
    pub fn chunk_sets(&self) -> Vec<Vec<usize>> {
        (0..self.global.len()).map(|b| self.chunk_range(b).collect()).collect()
    }
}

/// Split `chunks` as evenly as possible, earlier beams taking the remainder.
pub fn even_split(chunks: usize, beams: usize) -> Vec<usize> {
    (0..beams).map(|b| chunks / beams + usize::from(b < chunks % beams)).collect()
}

/// First containment violation found per tier, if any.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub global: Option<String>,
    pub regional: Option<(NodeId, String)>,
    pub local: Option<(NodeId, String)>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.global.is_none() && self.regional.is_none() && self.local.is_none()
    }
}

/// Check that chunks partition the band, every node's sub-band lies inside
/// the chunks of its own beam, and every user's channel lies inside its
/// node's sub-band with a legal power level.
pub fn validate_hierarchy(
    alloc: &AllocationState,
    config: &ScenarioConfig,
    graph: &NetworkGraph,
    association: &BTreeMap<NodeId, NodeId>,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let f = config.chunks;
    if alloc.global.len() != config.beams {
        report.global = Some(format!("{} beam entries for {} beams", alloc.global.len(), config.beams));
    } else if alloc.global.iter().sum::<usize>() != f {
        report.global = Some(format!("chunk counts {:?} do not partition {f} chunks", alloc.global));
    }

    let s = config.subbands;
    for &n in &graph.serving {
        let beam = graph.node(n).beam_id;
        match alloc.regional.get(&n) {
            None => {
                report.regional = Some((n, "no sub-band assigned".into()));
            }
            Some(&sb) if sb >= s => {
                let owner = if report.global.is_none() {
                    // Width of one sub-band in chunks is owned/S; sub-band sb starts sb/S
                    // of the way through the beam's run, i.e. at or past its end.
                    let next = (beam + 1..config.beams).find(|&b| alloc.global[b] > 0);
                    match next {
                        Some(b) => format!("lands in chunks owned by beam {b}"),
                        None => "lies beyond the last chunk".to_string(),
                    }
                } else {
                    "lies outside its beam's chunks".to_string()
                };
                report.regional = Some((n, format!("sub-band {sb} of beam {beam} {owner}")));
            }
            _ => continue,
        }
        break;
    }

    let (c, p) = (config.channels_per_subband, config.power_levels);
    for &u in &graph.users {
        let msg = match (association.get(&u), alloc.local.get(&u)) {
            (None, _) => Some("user is not associated".to_string()),
            (_, None) => Some("no channel assigned".to_string()),
            (Some(_), Some(&(ch, _))) if ch >= c => Some(format!("channel {ch} outside its node's {c} channels")),
            (Some(_), Some(&(_, lvl))) if lvl == 0 || lvl > p => Some(format!("power level {lvl} outside 1..={p}")),
            _ => None,
        };
        if let Some(m) = msg {
            report.local = Some((u, m));
            break;
        }
    }
    report
}

/// Nearest valid composition: pad/truncate to B entries, then give missing
/// chunks to the last beam or take surplus from the last beams first.
/// Returns whether anything changed.
pub fn clamp_global(action: &GlobalAction, chunks: usize, beams: usize) -> (Vec<usize>, bool) {
    let mut v = action.chunks_per_beam.clone();
    let mut clamped = v.len() != beams;
    v.resize(beams, 0);
    let total: usize = v.iter().sum();
    if total < chunks {
        *v.last_mut().expect("beams >= 1") += chunks - total;
        clamped = true;
    } else if total > chunks {
        let mut surplus = total - chunks;
        for x in v.iter_mut().rev() {
            let take = surplus.min(*x);
            *x -= take;
            surplus -= take;
        }
        clamped = true;
    }
    (v, clamped)
}

pub fn clamp_regional(action: &RegionalAction, subbands: usize, nodes: usize) -> (Vec<usize>, bool) {
    let mut clamped = action.subbands.len() != nodes;
    let mut v: Vec<usize> = action.subbands.iter().take(nodes).copied().collect();
    v.resize(nodes, 0);
    for x in &mut v {
        if *x >= subbands {
            *x = subbands - 1;
            clamped = true;
        }
    }
    (v, clamped)
}

/// Clamp channels into `0..C` and levels into `1..=P`; missing users get the
/// round-robin default, extra entries are dropped, and a TBS move becomes Stay.
pub fn clamp_local(action: &LocalAction, channels: usize, levels: usize, users: usize, kind: NodeKind) -> (Vec<(usize, usize)>, Move, bool) {
    let mut clamped = action.assignments.len() != users;
    let mut v = Vec::with_capacity(users);
    for k in 0..users {
        let (c, l) = action.assignments.get(k).copied().unwrap_or((k % channels, 1));
        let cc = c.min(channels - 1);
        let ll = l.clamp(1, levels);
        clamped |= cc != c || ll != l;
        v.push((cc, ll));
    }
    let mv = if kind == NodeKind::Uav {
        action.uav_move
    } else {
        clamped |= action.uav_move != Move::Stay;
        Move::Stay
    };
    (v, mv, clamped)
}
