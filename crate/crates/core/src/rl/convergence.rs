//! Plateau detection on a normalized reward curve.

/// Divide each reward by the running maximum so far, clamped into [0, 1].
pub fn normalize_by_running_max(history: &[f64]) -> Vec<f64> {
    let mut max = f64::NEG_INFINITY;
    history
        .iter()
        .map(|&r| {
            max = max.max(r);
            if max > 0.0 {
                (r / max).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// True once the episode-to-episode improvement has stayed below
/// `threshold` for the last `patience` consecutive episodes.
pub fn converged_with(normalized: &[f64], threshold: f64, patience: usize) -> bool {
    if normalized.len() < patience + 1 {
        return false;
    }
    normalized[normalized.len() - patience - 1..].windows(2).all(|w| w[1] - w[0] < threshold)
}

pub const CONVERGENCE_THRESHOLD: f64 = 0.15;
pub const CONVERGENCE_PATIENCE: usize = 10;

pub fn converged(normalized: &[f64]) -> bool {
    converged_with(normalized, CONVERGENCE_THRESHOLD, CONVERGENCE_PATIENCE)
}
