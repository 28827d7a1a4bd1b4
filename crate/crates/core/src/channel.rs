//! Link gains: free-space path loss, a constant atmospheric loss on satellite
//! links, and block small-scale fading redrawn every slot.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{distance, NetworkGraph, Node, NodeId, NodeKind};

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;
/// Extra loss applied to every satellite-originated link.
pub const SATELLITE_ATMOSPHERIC_DB: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FadingKind {
    ShadowedRician,
    Rayleigh,
}

/// Small-scale fading model used on satellite-originated links. Terrestrial
/// and aerial links are always Rayleigh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FadingParams {
    pub kind: FadingKind,
    /// Average power of the scattered component (half of it per quadrature).
    pub rician_b: f64,
    /// Nakagami-m severity of the line-of-sight shadowing.
    pub rician_m: f64,
    /// Average line-of-sight power.
    pub rician_omega: f64,
}

impl Default for FadingParams {
    fn default() -> Self {
        Self { kind: FadingKind::ShadowedRician, rician_b: 0.063, rician_m: 0.739, rician_omega: 8.97e-4 }
    }
}

impl FadingParams {
    pub fn rayleigh() -> Self {
        Self { kind: FadingKind::Rayleigh, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == FadingKind::Rayleigh {
            return Ok(());
        }
        let ok = self.rician_m.is_finite()
            && self.rician_m > 0.0
            && self.rician_b.is_finite()
            && self.rician_b > 0.0
            && self.rician_omega.is_finite()
            && self.rician_omega >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid shadowed-Rician parameters {self:?}")))
        }
    }

    /// Closed-form mean of |h|².
    pub fn mean_power(&self) -> f64 {
        match self.kind {
            FadingKind::Rayleigh => 1.0,
            FadingKind::ShadowedRician => 2.0 * self.rician_b + self.rician_omega,
        }
    }
}

/// Free-space path loss in dB.
pub fn path_loss_db(tx: &[f64; 3], rx: &[f64; 3], carrier_hz: f64) -> Result<f64> {
    if !(carrier_hz > 0.0 && carrier_hz.is_finite()) {
        return Err(Error::Domain(format!("carrier frequency must be positive, got {carrier_hz}")));
    }
    let d = distance(tx, rx);
    if !(d > 0.0) {
        return Err(Error::Domain("path loss undefined for coincident endpoints".into()));
    }
    Ok(20.0 * d.log10() + 20.0 * carrier_hz.log10() + 20.0 * (4.0 * std::f64::consts::PI / SPEED_OF_LIGHT_M_S).log10())
}

/// One draw of the linear power fading factor |h|².
pub fn sample_fading<R: Rng + ?Sized>(params: &FadingParams, rng: &mut R) -> f64 {
    match params.kind {
        FadingKind::Rayleigh => Exp1.sample(rng),
        FadingKind::ShadowedRician => {
            // LOS power A² ~ Gamma(m, Ω/m) gives a Nakagami-m amplitude.
            let los_power = if params.rician_omega > 0.0 {
                Gamma::new(params.rician_m, params.rician_omega / params.rician_m)
                    .expect("validated parameters")
                    .sample(rng)
            } else {
                0.0
            };
            let phase = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let scatter = Normal::new(0.0, params.rician_b.sqrt()).expect("validated parameters");
            let re = los_power.sqrt() * phase.cos() + scatter.sample(rng);
            let im = los_power.sqrt() * phase.sin() + scatter.sample(rng);
            re * re + im * im
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn atmospheric_db(tx: &Node) -> f64 {
    if tx.kind == NodeKind::Satellite {
        SATELLITE_ATMOSPHERIC_DB
    } else {
        0.0
    }
}

/// Gain without small-scale fading.
pub fn large_scale_gain(tx: &Node, rx: &Node, carrier_hz: f64, atmospheric_db: f64) -> Result<f64> {
    let pl = path_loss_db(&tx.position, &rx.position, carrier_hz)?;
    Ok(db_to_linear(-(pl + atmospheric_db)))
}

/// Linear gain of one link including a fresh fading draw. Satellite links use
/// `params`; every other link is Rayleigh.
pub fn link_gain<R: Rng + ?Sized>(
    tx: &Node,
    rx: &Node,
    carrier_hz: f64,
    params: &FadingParams,
    atmospheric_db: f64,
    rng: &mut R,
) -> Result<f64> {
    let large = large_scale_gain(tx, rx, carrier_hz, atmospheric_db)?;
    let fading = if tx.kind == NodeKind::Satellite {
        sample_fading(params, rng)
    } else {
        sample_fading(&FadingParams::rayleigh(), rng)
    };
    Ok(large * fading)
}

/// Gains of every access link (serving node to user) and every satellite to
/// HAP backhaul link for one slot. Fading is flat across channels, so a single
/// gain per link covers every channel index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub slot: usize,
    n_users: usize,
    /// Row-major `[serving index][user index]` gains.
    access: Vec<f64>,
    /// Satellite to HAP gains in HAP order (empty without a satellite).
    pub backhaul: Vec<f64>,
}

impl ChannelRealization {
    pub fn from_parts(slot: usize, n_users: usize, access: Vec<f64>, backhaul: Vec<f64>) -> Self {
        debug_assert!(n_users == 0 || access.len() % n_users == 0);
        Self { slot, n_users, access, backhaul }
    }

    /// Gain from serving node `serving_idx` (index into `graph.serving`) to
    /// user `user_idx` (index into `graph.users`).
    #[inline]
    pub fn gain(&self, serving_idx: usize, user_idx: usize) -> f64 {
        self.access[serving_idx * self.n_users + user_idx]
    }

    pub fn access(&self) -> &[f64] {
        &self.access
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }
}

/// Draw a fresh realization for all links in a fixed order (serving-major,
/// then backhaul) so that it is a pure function of the RNG state.
pub fn realize<R: Rng + ?Sized>(
    graph: &NetworkGraph,
    carrier_hz: f64,
    params: &FadingParams,
    slot: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let mut access = Vec::with_capacity(graph.serving.len() * graph.users.len());
    for &s in &graph.serving {
        let tx = graph.node(s);
        for &u in &graph.users {
            access.push(link_gain(tx, graph.node(u), carrier_hz, params, atmospheric_db(tx), rng)?);
        }
    }
    let mut backhaul = Vec::new();
    if let Some(sat) = graph.satellite {
        let tx = graph.node(sat);
        for &h in &graph.haps {
            backhaul.push(link_gain(tx, graph.node(h), carrier_hz, params, atmospheric_db(tx), rng)?);
        }
    }
    Ok(ChannelRealization::from_parts(slot, graph.users.len(), access, backhaul))
}

/// Large-scale gains for every same-region (serving node, user) pair, the
/// input to user association.
pub fn association_gains(graph: &NetworkGraph, carrier_hz: f64) -> Result<HashMap<(NodeId, NodeId), f64>> {
    let mut gains = HashMap::new();
    for &s in &graph.serving {
        let tx = graph.node(s);
        for &u in &graph.users {
            let rx = graph.node(u);
            if rx.region_id == tx.region_id {
                gains.insert((s, u), large_scale_gain(tx, rx, carrier_hz, atmospheric_db(tx))?);
            }
        }
    }
    Ok(gains)
}
