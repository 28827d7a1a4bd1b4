//! Actor and critic MLPs with tanh hidden layers and hand-written backprop.
//!
//! Parameters live in one flat vector: every actor layer, then every critic
//! layer; each layer stores its weights out-major (`W[o * in + i]`) followed
//! by its biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input_len: usize,
    pub hidden: Vec<usize>,
    /// Size of each categorical head; the actor emits their logits back to back.
    pub heads: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

impl NetSpec {
    pub fn new(input_len: usize, hidden: Vec<usize>, heads: Vec<usize>) -> Result<Self> {
        if input_len == 0 || hidden.iter().any(|&h| h == 0) || heads.is_empty() || heads.iter().any(|&h| h == 0) {
            return Err(Error::Shape(format!("invalid network shape: input {input_len}, hidden {hidden:?}, heads {heads:?}")));
        }
        Ok(Self { input_len, hidden, heads })
    }

    pub fn logits_len(&self) -> usize {
        self.heads.iter().sum()
    }

    fn tower(&self, out: usize) -> Vec<usize> {
        let mut sizes = vec![self.input_len];
        sizes.extend(&self.hidden);
        sizes.push(out);
        sizes
    }

    fn layers(&self) -> (Vec<Layer>, Vec<Layer>, usize) {
        let mut at = 0;
        let mut build = |sizes: &[usize]| -> Vec<Layer> {
            sizes
                .windows(2)
                .map(|w| {
                    let l = Layer { w: at, b: at + w[0] * w[1], fan_in: w[0], fan_out: w[1] };
                    at += w[0] * w[1] + w[1];
                    l
                })
                .collect()
        };
        let actor = build(&self.tower(self.logits_len()));
        let critic = build(&self.tower(1));
        (actor, critic, at)
    }

    pub fn param_count(&self) -> usize {
        self.layers().2
    }

    /// Start offsets of each head inside the logits vector.
    pub fn head_offsets(&self) -> Vec<usize> {
        let mut at = 0;
        self.heads
            .iter()
            .map(|&h| {
                let o = at;
                at += h;
                o
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub spec: NetSpec,
    pub params: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: Vec<f64>,
    pub value: f64,
    actor: Vec<Vec<f64>>,
    critic: Vec<Vec<f64>>,
}

fn dense(params: &[f64], l: &Layer, input: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let w = &params[l.w..l.w + l.fan_in * l.fan_out];
    let b = &params[l.b..l.b + l.fan_out];
    for o in 0..l.fan_out {
        let row = &w[o * l.fan_in..(o + 1) * l.fan_in];
        let mut z = b[o];
        for (wi, xi) in row.iter().zip(input) {
            z += wi * xi;
        }
        out.push(z);
    }
}

/// Run a tower, returning every layer's output (tanh for hidden layers,
/// linear for the last); `acts[0]` is the input.
fn run_tower(params: &[f64], layers: &[Layer], input: &[f64]) -> Vec<Vec<f64>> {
    let mut acts = Vec::with_capacity(layers.len() + 1);
    acts.push(input.to_vec());
    for (k, l) in layers.iter().enumerate() {
        let mut out = Vec::with_capacity(l.fan_out);
        dense(params, l, acts.last().expect("input present"), &mut out);
        if k + 1 < layers.len() {
            for z in &mut out {
                *z = z.tanh();
            }
        }
        acts.push(out);
    }
    acts
}

fn back_tower(params: &[f64], layers: &[Layer], acts: &[Vec<f64>], delta_out: &[f64], grad: &mut [f64]) {
    let mut delta = delta_out.to_vec();
    for k in (0..layers.len()).rev() {
        let l = &layers[k];
        let input = &acts[k];
        for o in 0..l.fan_out {
            let d = delta[o];
            if d == 0.0 {
                continue;
            }
            grad[l.b + o] += d;
            let row = &mut grad[l.w + o * l.fan_in..l.w + (o + 1) * l.fan_in];
            for (g, x) in row.iter_mut().zip(input) {
                *g += d * x;
            }
        }
        if k == 0 {
            break;
        }
        let mut prev = vec![0.0; l.fan_in];
        let w = &params[l.w..l.w + l.fan_in * l.fan_out];
        for o in 0..l.fan_out {
            let d = delta[o];
            if d == 0.0 {
                continue;
            }
            for (p, wi) in prev.iter_mut().zip(&w[o * l.fan_in..(o + 1) * l.fan_in]) {
                *p += d * wi;
            }
        }
        for (p, a) in prev.iter_mut().zip(input) {
            *p *= 1.0 - a * a;
        }
        delta = prev;
    }
}

impl Net {
    pub fn zeros(spec: NetSpec) -> Self {
        let n = spec.param_count();
        Self { spec, params: vec![0.0; n] }
    }

    /// Weights uniform in ±sqrt(6 / (fan_in + fan_out)), biases zero.
    pub fn init<R: Rng + ?Sized>(spec: NetSpec, rng: &mut R) -> Self {
        let mut net = Self::zeros(spec);
        let (actor, critic, _) = net.spec.layers();
        for l in actor.iter().chain(&critic) {
            let bound = (6.0 / (l.fan_in + l.fan_out) as f64).sqrt();
            for w in &mut net.params[l.w..l.w + l.fan_in * l.fan_out] {
                *w = rng.gen_range(-bound..=bound);
            }
        }
        net
    }

    fn check_input(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.spec.input_len {
            return Err(Error::Shape(format!("observation length {} but network expects {}", obs.len(), self.spec.input_len)));
        }
        Ok(())
    }

    pub fn forward(&self, obs: &[f64]) -> Result<Forward> {
        self.check_input(obs)?;
        let (actor_l, critic_l, _) = self.spec.layers();
        let actor = run_tower(&self.params, &actor_l, obs);
        let critic = run_tower(&self.params, &critic_l, obs);
        Ok(Forward { logits: actor.last().expect("output").clone(), value: critic.last().expect("output")[0], actor, critic })
    }

    /// Logits only; skips the critic.
    pub fn policy_logits(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.check_input(obs)?;
        let (actor_l, _, _) = self.spec.layers();
        let mut acts = run_tower(&self.params, &actor_l, obs);
        Ok(acts.pop().expect("output"))
    }

    /// Accumulate into `grad` the gradient of a scalar loss whose partials
    /// with respect to the logits and the value are `dlogits` and `dvalue`.
    pub fn backward(&self, fwd: &Forward, dlogits: &[f64], dvalue: f64, grad: &mut [f64]) {
        let (actor_l, critic_l, _) = self.spec.layers();
        back_tower(&self.params, &actor_l, &fwd.actor, dlogits, grad);
        if dvalue != 0.0 {
            back_tower(&self.params, &critic_l, &fwd.critic, &[dvalue], grad);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_is_uniform_with_zero_value() {
        let net = Net::zeros(NetSpec::new(5, vec![4, 4], vec![3, 2]).unwrap());
        let f = net.forward(&[1.0, -2.0, 0.5, 3.0, 0.0]).unwrap();
        assert!(f.logits.iter().all(|&z| z == 0.0));
        assert_eq!(f.value, 0.0);
    }

    #[test]
    fn param_count_matches_layout() {
        let spec = NetSpec::new(3, vec![4], vec![2, 2]).unwrap();
        // actor 3*4+4 + 4*4+4, critic 3*4+4 + 4*1+1
        assert_eq!(spec.param_count(), 16 + 20 + 16 + 5);
        assert_eq!(spec.head_offsets(), vec![0, 2]);
    }

    #[test]
    fn forward_deterministic_and_shape_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Net::init(NetSpec::new(4, vec![8, 8], vec![3]).unwrap(), &mut rng);
        let x = [0.1, 0.2, -0.3, 0.4];
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        assert_eq!(a.logits, b.logits);
        assert_eq!(a.value, b.value);
        assert_eq!(net.policy_logits(&x).unwrap(), a.logits);
        assert!(matches!(net.forward(&[0.0; 3]), Err(Error::Shape(_))));
    }
}
