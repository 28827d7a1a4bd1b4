//! Generalized advantage estimation.

/// Advantages and returns for one uninterrupted trajectory that continues
/// past its end with value `bootstrap`.
pub fn gae(rewards: &[f64], values: &[f64], bootstrap: f64, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let dones = vec![false; rewards.len()];
    gae_with_dones(rewards, values, &dones, bootstrap, gamma, lambda)
}

/// As `gae`, but `dones[t]` marks a terminal step: nothing is bootstrapped
/// across it.
pub fn gae_with_dones(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n);
    assert_eq!(dones.len(), n);
    let mut adv = vec![0.0; n];
    let mut next_value = bootstrap;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        adv[t] = delta + gamma * lambda * live * next_adv;
        next_value = values[t];
        next_adv = adv[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_step_hand_recursion() {
        let (a, r) = gae(&[1.0, 1.0], &[0.0, 0.0], 0.0, 0.99, 0.95);
        assert!((a[1] - 1.0).abs() < 1e-12);
        assert!((a[0] - (1.0 + 0.99 * 0.95)).abs() < 1e-12);
        assert!((a[0] - 1.9405).abs() < 1e-12);
        assert_eq!(r, a);
    }

    #[test]
    fn lambda_zero_is_td_error() {
        let rewards = [0.5, -1.0, 2.0];
        let values = [0.1, 0.4, -0.2];
        let (a, _) = gae(&rewards, &values, 0.7, 0.9, 0.0);
        let next = [0.4, -0.2, 0.7];
        for t in 0..3 {
            assert!((a[t] - (rewards[t] + 0.9 * next[t] - values[t])).abs() < 1e-12);
        }
    }

    #[test]
    fn zeros_give_zero() {
        let (a, r) = gae(&[0.0; 5], &[0.0; 5], 0.0, 0.99, 0.95);
        assert!(a.iter().chain(&r).all(|&x| x == 0.0));
    }

    #[test]
    fn done_cuts_bootstrap() {
        let (a, _) = gae_with_dones(&[1.0, 1.0], &[0.0, 5.0], &[true, true], 9.0, 0.99, 0.95);
        assert_eq!(a, vec![1.0, -4.0]);
    }
}
