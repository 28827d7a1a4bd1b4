//! Adaptive-moment gradient descent.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    /// One descent step on `params` along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Scale `grad` so its global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grad.iter_mut() {
            *g *= s;
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut a = Adam::new(2, 0.01);
        let mut p = [1.0, -1.0];
        a.step(&mut p, &[3.0, -0.5]);
        assert!((p[0] - 0.99).abs() < 1e-9);
        assert!((p[1] + 0.99).abs() < 1e-9);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut a = Adam::new(1, 0.1);
        let mut p = [5.0];
        for _ in 0..500 {
            let g = [2.0 * (p[0] - 2.0)];
            a.step(&mut p, &g);
        }
        assert!((p[0] - 2.0).abs() < 1e-2);
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut g = [3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 0.5), 5.0);
        assert!((g[0] - 0.3).abs() < 1e-12 && (g[1] - 0.4).abs() < 1e-12);
        let mut small = [0.1, 0.1];
        clip_grad_norm(&mut small, 0.5);
        assert_eq!(small, [0.1, 0.1]);
    }
}
