//! Structured tier actions and their flat integer indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Move;

/// Chunk counts per beam. Beam `b` owns the contiguous run of chunks that
/// follows the chunks of beams `0..b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlobalAction {
    pub chunks_per_beam: Vec<usize>,
}

/// One sub-band index per serving node controlled by the HAP, in node order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegionalAction {
    pub subbands: Vec<usize>,
}

/// `(channel, power level)` for every associated user in ascending user id,
/// plus the UAV move (must be `Stay` for TBSs).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalAction {
    pub assignments: Vec<(usize, usize)>,
    pub uav_move: Move,
}

/// Mixed-radix integer coding, most significant digit first.
pub fn encode_digits(digits: &[usize], radices: &[u128]) -> Result<u128> {
    if digits.len() != radices.len() {
        return Err(Error::Shape(format!("{} digits for {} radices", digits.len(), radices.len())));
    }
    let mut index: u128 = 0;
    for (&d, &r) in digits.iter().zip(radices) {
        if d as u128 >= r {
            return Err(Error::Domain(format!("digit {d} out of range for radix {r}")));
        }
        index = index
            .checked_mul(r)
            .and_then(|x| x.checked_add(d as u128))
            .ok_or_else(|| Error::CardinalityOverflow(format!("radices {radices:?}")))?;
    }
    Ok(index)
}

pub fn decode_digits(mut index: u128, radices: &[u128]) -> Result<Vec<usize>> {
    let cardinality = cardinality(radices)?;
    if index >= cardinality {
        return Err(Error::ActionOutOfRange { index, cardinality });
    }
    let mut digits = vec![0usize; radices.len()];
    for (slot, &r) in digits.iter_mut().zip(radices).rev() {
        *slot = (index % r) as usize;
        index /= r;
    }
    Ok(digits)
}

pub fn cardinality(radices: &[u128]) -> Result<u128> {
    radices
        .iter()
        .try_fold(1u128, |acc, &r| acc.checked_mul(r))
        .ok_or_else(|| Error::CardinalityOverflow(format!("radices {radices:?}")))
}

/// All ways to give `chunks` chunks to `beams` beams, lexicographic with the
/// first beam's count ascending: B=2, F=4 gives (0,4), (1,3), (2,2), (3,1), (4,0).
pub fn compositions(chunks: usize, beams: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, beams: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if beams == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(left - k, beams - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if beams > 0 {
        rec(chunks, beams, &mut Vec::with_capacity(beams), &mut out);
    }
    out
}

pub fn encode_global(action: &GlobalAction, chunks: usize, beams: usize) -> Result<u128> {
    compositions(chunks, beams)
        .iter()
        .position(|c| *c == action.chunks_per_beam)
        .map(|p| p as u128)
        .ok_or_else(|| Error::Domain(format!("{:?} is not a composition of {chunks} over {beams} beams", action.chunks_per_beam)))
}

pub fn decode_global(index: u128, chunks: usize, beams: usize) -> Result<GlobalAction> {
    let all = compositions(chunks, beams);
    let cardinality = all.len() as u128;
    all.into_iter()
        .nth(usize::try_from(index).unwrap_or(usize::MAX))
        .map(|chunks_per_beam| GlobalAction { chunks_per_beam })
        .ok_or(Error::ActionOutOfRange { index, cardinality })
}

pub fn regional_radices(subbands: usize, nodes: usize) -> Vec<u128> {
    vec![subbands as u128; nodes]
}

pub fn encode_regional(action: &RegionalAction, subbands: usize) -> Result<u128> {
    encode_digits(&action.subbands, &regional_radices(subbands, action.subbands.len()))
}

pub fn decode_regional(index: u128, subbands: usize, nodes: usize) -> Result<RegionalAction> {
    Ok(RegionalAction { subbands: decode_digits(index, &regional_radices(subbands, nodes))? })
}

/// Radices of a local action: one `C·P` digit per user, then 5 moves for a UAV.
pub fn local_radices(channels: usize, levels: usize, users: usize, is_uav: bool) -> Vec<u128> {
    let mut r = vec![(channels * levels) as u128; users];
    if is_uav {
        r.push(Move::ALL.len() as u128);
    }
    r
}

pub fn local_cardinality(channels: usize, levels: usize, users: usize, is_uav: bool) -> Result<u128> {
    cardinality(&local_radices(channels, levels, users, is_uav))
}

pub fn encode_local(action: &LocalAction, channels: usize, levels: usize, is_uav: bool) -> Result<u128> {
    let mut digits = Vec::with_capacity(action.assignments.len() + 1);
    for &(c, l) in &action.assignments {
        if c >= channels || l == 0 || l > levels {
            return Err(Error::Domain(format!("(channel {c}, level {l}) outside {channels}x{levels}")));
        }
        digits.push(c * levels + (l - 1));
    }
    if is_uav {
        digits.push(action.uav_move.index());
    } else if action.uav_move != Move::Stay {
        return Err(Error::Domain("only UAVs move".into()));
    }
    encode_digits(&digits, &local_radices(channels, levels, action.assignments.len(), is_uav))
}

pub fn decode_local(index: u128, channels: usize, levels: usize, users: usize, is_uav: bool) -> Result<LocalAction> {
    let digits = decode_digits(index, &local_radices(channels, levels, users, is_uav))?;
    let assignments = digits[..users].iter().map(|&d| (d / levels, d % levels + 1)).collect();
    let uav_move = if is_uav { Move::ALL[digits[users]] } else { Move::Stay };
    Ok(LocalAction { assignments, uav_move })
}
