//! Exact decision-space sizes of the three tiers and order-of-magnitude cost
//! estimates for training and inference.
//!
//! The tier formulas are evaluated exactly as stated, including where they
//! differ from the counts of the environment's own encodings: the multi-band
//! global count is C(F+B−1, B) (multisets of B bands drawn from F), while the
//! environment's contiguous chunk splits number C(F+B−1, B−1).

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::topology::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GlobalMode {
    /// Beam cells may receive several bands.
    MultiBand,
    /// Each beam cell gets one band; bands may be shared between cells.
    SingleBand,
}

/// Stirling number of the second kind; zero when `k > n`.
pub fn stirling2(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    // row[j] = S(i, j)
    let mut row = vec![BigUint::zero(); k + 1];
    row[0] = BigUint::one();
    for _ in 1..=n {
        for j in (1..=k).rev() {
            row[j] = &row[j] * j + &row[j - 1];
        }
        row[0] = BigUint::zero();
    }
    row[k].clone()
}

/// Signed-input variant that rejects negative arguments.
pub fn stirling2_checked(n: i64, k: i64) -> Result<BigUint> {
    if n < 0 || k < 0 {
        return Err(Error::Domain(format!("S({n}, {k}) needs nonnegative arguments")));
    }
    Ok(stirling2(n as usize, k as usize))
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

pub fn global_dim(f: usize, b: usize, mode: GlobalMode) -> BigUint {
    match mode {
        GlobalMode::MultiBand => binomial(f + b - 1, b),
        GlobalMode::SingleBand => (1..=f.min(b)).map(|k| stirling2(b, k) * binomial(f, k)).sum(),
    }
}

pub fn regional_dim(s: usize, n_uav: usize, n_tbs: usize) -> BigUint {
    BigUint::from(s).pow((n_uav + n_tbs) as u32)
}

pub fn local_dim(c: usize, p: usize, m: usize) -> BigUint {
    BigUint::from(c * p).pow(m as u32)
}

/// Network and batch sizes entering the cost expressions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostInputs {
    pub layers: usize,
    pub hidden: [usize; 3],
    pub batch: [usize; 3],
    pub regions: usize,
    pub local_nodes: usize,
}

/// `B_g·L·H_g² + |D_g| + R(B_r·L·H_r² + |D_r|) + N(B_l·L·H_l² + |D_l|)` and
/// `H_g² + |D_g| + R(H_r² + |D_r|) + N(H_l² + |D_l|)` with unit constants.
pub fn cost_estimates(inputs: &CostInputs, d_global: &BigUint, d_regional: &BigUint, d_local: &BigUint) -> (BigUint, BigUint) {
    let l = BigUint::from(inputs.layers);
    let h2 = |t: usize| BigUint::from(inputs.hidden[t]).pow(2);
    let pass = |t: usize| BigUint::from(inputs.batch[t]) * &l * h2(t);
    let r = BigUint::from(inputs.regions);
    let n = BigUint::from(inputs.local_nodes);
    let training = pass(0) + d_global + &r * (pass(1) + d_regional) + &n * (pass(2) + d_local);
    let inference = h2(0) + d_global + &r * (h2(1) + d_regional) + &n * (h2(2) + d_local);
    (training, inference)
}

fn as_decimal<S: Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_str_radix(10))
}

/// Decision-space sizes and cost estimates for one scenario. The cost
/// fields are order-of-magnitude estimates, not operation counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    #[serde(serialize_with = "as_decimal")]
    pub d_global_multiband: BigUint,
    #[serde(serialize_with = "as_decimal")]
    pub d_global_singleband: BigUint,
    #[serde(serialize_with = "as_decimal")]
    pub d_regional: BigUint,
    #[serde(serialize_with = "as_decimal")]
    pub d_local: BigUint,
    #[serde(serialize_with = "as_decimal")]
    pub d_total: BigUint,
    #[serde(serialize_with = "as_decimal")]
    pub training_cost_per_epoch: BigUint,
    #[serde(serialize_with = "as_decimal")]
    pub inference_cost: BigUint,
    pub inputs: CostInputs,
    /// Users per local policy used for `d_local`.
    pub users_per_node: usize,
}

impl ComplexityReport {
    /// Per-region node counts give `d_regional`; `M` is the largest region's
    /// users spread over its nodes; `R` counts all regions and `N` all
    /// TBS/UAV nodes. Networks are two hidden layers of 64 units with the
    /// learner's batch size.
    pub fn for_config(config: &ScenarioConfig, batch_slots: usize) -> Self {
        let m = config.users_per_region_range[1].div_ceil(config.nodes_per_region());
        let d_global_multiband = global_dim(config.chunks, config.beams, GlobalMode::MultiBand);
        let d_global_singleband = global_dim(config.chunks, config.beams, GlobalMode::SingleBand);
        let d_regional = regional_dim(config.subbands, config.uavs_per_region, config.tbs_per_region);
        let d_local = local_dim(config.channels_per_subband, config.power_levels, m);
        let d_total = &d_global_multiband * &d_regional * &d_local;
        let inputs = CostInputs {
            layers: 2,
            hidden: [64; 3],
            batch: [batch_slots; 3],
            regions: config.num_regions(),
            local_nodes: config.num_serving(),
        };
        let (training_cost_per_epoch, inference_cost) = cost_estimates(&inputs, &d_global_multiband, &d_regional, &d_local);
        Self {
            d_global_multiband,
            d_global_singleband,
            d_regional,
            d_local,
            d_total,
            training_cost_per_epoch,
            inference_cost,
            inputs,
            users_per_node: m,
        }
    }

    pub fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("d_global_multiband", self.d_global_multiband.to_string()),
            ("d_global_singleband", self.d_global_singleband.to_string()),
            ("d_regional", self.d_regional.to_string()),
            ("d_local", self.d_local.to_string()),
            ("d_total", self.d_total.to_string()),
            ("training_cost_per_epoch", self.training_cost_per_epoch.to_string()),
            ("inference_cost", self.inference_cost.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        let width = self.fields().iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in self.fields() {
            s.push_str(&format!("{k:<width$}  {v}\n"));
        }
        s.push_str(&format!(
            "{:<width$}  L={} H={:?} batch={:?} R={} N={} M={} (cost rows are order-of-magnitude estimates)\n",
            "inputs", self.inputs.layers, self.inputs.hidden, self.inputs.batch, self.inputs.regions, self.inputs.local_nodes, self.users_per_node
        ));
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
