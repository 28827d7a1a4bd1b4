//! Policy-head layouts of each agent and the mapping from head indices to
//! structured tier actions.
//!
//! Global: one head over the chunk compositions. Regional: one head of size
//! S per controlled node. Local: a channel head (C) and a power head (P) for
//! each of `M_MAX` user slots, plus a 5-way move head for UAVs; slots beyond
//! the node's current users are masked out.

use crate::env::action::compositions;
use crate::env::{AgentId, GlobalAction, HierEnv, LocalAction, RegionalAction, M_MAX};
use crate::topology::Move;

pub fn heads(env: &HierEnv, agent: AgentId) -> Vec<usize> {
    let cfg = env.config();
    match agent {
        AgentId::Global => vec![compositions(cfg.chunks, cfg.beams).len()],
        AgentId::Regional(h) => vec![cfg.subbands; env.hap_nodes(h).len()],
        AgentId::Local(i) => {
            let mut v = Vec::with_capacity(2 * M_MAX + 1);
            for _ in 0..M_MAX {
                v.push(cfg.channels_per_subband);
                v.push(cfg.power_levels);
            }
            if env.is_uav(i) {
                v.push(Move::ALL.len());
            }
            v
        }
    }
}

/// Heads that take part in the agent's current decision.
pub fn mask(env: &HierEnv, agent: AgentId) -> Vec<bool> {
    match agent {
        AgentId::Global => vec![true],
        AgentId::Regional(h) => vec![true; env.hap_nodes(h).len()],
        AgentId::Local(i) => {
            let m = env.node_users(i).len().min(M_MAX);
            let mut v = vec![false; 2 * M_MAX];
            v[..2 * m].iter_mut().for_each(|x| *x = true);
            if env.is_uav(i) {
                v.push(true);
            }
            v
        }
    }
}

pub fn decode_global(env: &HierEnv, digits: &[usize]) -> GlobalAction {
    let cfg = env.config();
    let chunks_per_beam = compositions(cfg.chunks, cfg.beams).swap_remove(digits[0]);
    GlobalAction { chunks_per_beam }
}

pub fn decode_regional(digits: &[usize]) -> RegionalAction {
    RegionalAction { subbands: digits.to_vec() }
}

/// Users past `M_MAX` keep the round-robin default.
pub fn decode_local(env: &HierEnv, serving_idx: usize, digits: &[usize]) -> LocalAction {
    let c = env.config().channels_per_subband;
    let users = env.node_users(serving_idx).len();
    let assignments = (0..users)
        .map(|k| if k < M_MAX { (digits[2 * k], digits[2 * k + 1] + 1) } else { (k % c, 1) })
        .collect();
    let uav_move = if env.is_uav(serving_idx) { Move::ALL[digits[2 * M_MAX]] } else { Move::Stay };
    LocalAction { assignments, uav_move }
}
