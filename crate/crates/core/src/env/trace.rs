//! Per-episode record of slot metrics and tier decisions, with CSV output.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::SlotMetrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    Global,
    Regional,
    Local,
}

impl Tier {
    pub fn label(self) -> &'static str {
        match self {
            Tier::Global => "global",
            Tier::Regional => "regional",
            Tier::Local => "local",
        }
    }
}

/// A decision maker. Regional agents are indexed by HAP order, local agents
/// by serving-node order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentId {
    Global,
    Regional(usize),
    Local(usize),
}

impl AgentId {
    pub fn tier(self) -> Tier {
        match self {
            AgentId::Global => Tier::Global,
            AgentId::Regional(_) => Tier::Regional,
            AgentId::Local(_) => Tier::Local,
        }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentId::Global => f.write_str("sat"),
            AgentId::Regional(h) => write!(f, "hap{h}"),
            AgentId::Local(n) => write!(f, "node{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub slot: usize,
    pub agent: AgentId,
    pub action_index: u128,
    pub clamped: bool,
    /// Filled in when the decision's epoch closes.
    pub reward: f64,
    pub latency_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub metrics: Vec<SlotMetrics>,
    pub decisions: Vec<DecisionRecord>,
    #[serde(with = "pairs")]
    pub returns: BTreeMap<AgentId, f64>,
}

/// JSON object keys must be strings, so agent-keyed maps go out as pairs.
mod pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::AgentId;

    pub fn serialize<S: Serializer>(map: &BTreeMap<AgentId, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<AgentId, f64>, D::Error> {
        Ok(Vec::<(AgentId, f64)>::deserialize(d)?.into_iter().collect())
    }
}

/// Format a float with 9 significant digits, shortest form.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.8e}");
        let (mant, e) = s.split_once('e').expect("exponent form");
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{mant}e{e}")
    }
}

impl EpisodeTrace {
    pub fn records_for(&self, agent: AgentId) -> impl Iterator<Item = &DecisionRecord> + '_ {
        self.decisions.iter().filter(move |d| d.agent == agent)
    }

    /// metrics.csv rows, keeping only slots that are multiples of `every`.
    pub fn write_metrics_csv<W: Write>(&self, out: &mut W, every: usize) -> Result<()> {
        writeln!(out, "slot,throughput_bps,se,fairness,violations")?;
        for m in self.metrics.iter().filter(|m| m.slot % every.max(1) == 0) {
            writeln!(
                out,
                "{},{},{},{},{}",
                m.slot,
                fmt_g9(m.throughput_bps),
                fmt_g9(m.spectral_efficiency),
                fmt_g9(m.fairness),
                fmt_g9(m.violation_fraction)
            )?;
        }
        Ok(())
    }

    pub fn write_decisions_csv<W: Write>(&self, out: &mut W, with_latency: bool) -> Result<()> {
        writeln!(out, "slot,tier,agent,action_index,reward,latency_s")?;
        for d in &self.decisions {
            let lat = if with_latency { fmt_g9(d.latency_s) } else { String::new() };
            writeln!(out, "{},{},{},{},{},{}", d.slot, d.agent.tier().label(), d.agent, d.action_index, fmt_g9(d.reward), lat)?;
        }
        Ok(())
    }
}
