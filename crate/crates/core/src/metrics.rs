//! Network scores: spectral efficiency, Jain fairness, QoS violations.

use serde::{Deserialize, Serialize};

/// Spectral efficiency at which the normalized score saturates.
pub const SE_CAP_BPS_PER_HZ: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotMetrics {
    pub slot: usize,
    pub user_rates_bps: Vec<f64>,
    pub beam_throughput_bps: Vec<f64>,
    pub throughput_bps: f64,
    pub spectral_efficiency: f64,
    pub fairness: f64,
    pub violation_fraction: f64,
}

impl SlotMetrics {
    pub fn from_rates(slot: usize, user_rates_bps: Vec<f64>, user_beams: &[usize], beams: usize, total_bandwidth_hz: f64, r_min_bps: f64) -> Self {
        let mut beam_throughput_bps = vec![0.0; beams];
        for (r, &b) in user_rates_bps.iter().zip(user_beams) {
            beam_throughput_bps[b] += r;
        }
        let throughput_bps: f64 = beam_throughput_bps.iter().sum();
        let (spectral_efficiency, _) = spectral_efficiency(throughput_bps, total_bandwidth_hz);
        Self {
            slot,
            fairness: jain_index(&beam_throughput_bps),
            violation_fraction: qos_violations(&user_rates_bps, r_min_bps),
            user_rates_bps,
            beam_throughput_bps,
            throughput_bps,
            spectral_efficiency,
        }
    }
}

/// Raw SE and its normalized value `min(SE / SE_cap, 1)`.
pub fn spectral_efficiency(throughput_bps: f64, bandwidth_hz: f64) -> (f64, f64) {
    debug_assert!(bandwidth_hz > 0.0);
    let se = throughput_bps / bandwidth_hz;
    (se, normalized_se(se))
}

pub fn normalized_se(se: f64) -> f64 {
    (se / SE_CAP_BPS_PER_HZ).clamp(0.0, 1.0)
}

/// Jain's index. An empty or all-zero input counts as perfectly fair.
pub fn jain_index(values: &[f64]) -> f64 {
    let sum: f64 = values.iter().sum();
    let sq: f64 = values.iter().map(|x| x * x).sum();
    if values.is_empty() || sq == 0.0 {
        log::trace!("Jain index of an all-zero vector taken as 1");
        return 1.0;
    }
    (sum * sum / (values.len() as f64 * sq)).min(1.0)
}

/// Fraction of users below `r_min_bps`; zero for an empty population.
pub fn qos_violations(rates_bps: &[f64], r_min_bps: f64) -> f64 {
    if rates_bps.is_empty() {
        return 0.0;
    }
    rates_bps.iter().filter(|&&r| r < r_min_bps).count() as f64 / rates_bps.len() as f64
}
