//! Categorical distributions over logits.

use rand::Rng;

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

pub fn entropy(log_probs: &[f64]) -> f64 {
    -log_probs.iter().map(|lp| lp.exp() * lp).sum::<f64>()
}

/// Inverse-CDF draw from the categorical defined by `logits`.
pub fn sample<R: Rng + ?Sized>(logits: &[f64], rng: &mut R) -> usize {
    let p = softmax(logits);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, pk) in p.iter().enumerate() {
        acc += pk;
        if u < acc {
            return k;
        }
    }
    p.len() - 1
}

/// Lowest index among the maximal logits.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (k, &z) in logits.iter().enumerate() {
        if z > logits[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_normalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let z: Vec<f64> = (0..7).map(|_| rng.gen_range(-30.0..30.0)).collect();
            assert!((softmax(&z).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((entropy(&log_softmax(&[0.0; 4])) - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sampling_frequencies_within_three_sigma() {
        let logits = [0.3, -1.0, 1.2, 0.0];
        let p = softmax(&logits);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample(&logits, &mut rng)] += 1;
        }
        for k in 0..4 {
            let sigma = (n as f64 * p[k] * (1.0 - p[k])).sqrt();
            assert!((counts[k] as f64 - n as f64 * p[k]).abs() < 3.0 * sigma, "head {k}");
        }
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }
}
