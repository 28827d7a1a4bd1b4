//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectrum_lab::complexity::{binomial, global_dim, local_dim, regional_dim, stirling2, GlobalMode};
use spectrum_lab::phy::{aggregate_interference, noma_sinr, CoChannel, NomaCluster};
use spectrum_lab::rl::ppo::{loss_and_grad, Sample};
use spectrum_lab::rl::{Learner, Net, NetSpec, PpoConfig, Transition};
use spectrum_lab::topology::{NodeId, NodeKind};

pub type Check = Result<String, String>;

/// Written to the process stdout directly so the line shows up even when
/// the test harness captures `println!` output.
pub fn report(n: usize, name: &str, outcome: &Check) {
    let line = match outcome {
        Ok(detail) => format!("PASS criterion {n} ({name}): {detail}"),
        Err(detail) => format!("FAIL criterion {n} ({name}): {detail}"),
    };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

// ---------------------------------------------------------------- counting

/// Restricted growth strings of length n: one per set partition. Returns
/// the number of partitions with each block count.
pub fn partitions_by_blocks(n: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n + 1];
    if n == 0 {
        counts[0] = 1;
        return counts;
    }
    let mut a = vec![0usize; n];
    loop {
        let blocks = a.iter().max().unwrap() + 1;
        counts[blocks] += 1;
        // next restricted growth string
        let mut i = n - 1;
        loop {
            let max_prefix = a[..i].iter().max().copied().unwrap_or(0);
            if i > 0 && a[i] <= max_prefix {
                a[i] += 1;
                for x in &mut a[i + 1..] {
                    *x = 0;
                }
                break;
            }
            if i <= 1 {
                return counts;
            }
            i -= 1;
        }
    }
}

pub fn subsets_of_size(n: usize, k: usize) -> u64 {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == k).count() as u64
}

/// Non-decreasing length-`b` sequences over `f` symbols.
pub fn multisets(f: usize, b: usize) -> u64 {
    fn rec(f: usize, left: usize, lo: usize) -> u64 {
        if left == 0 {
            return 1;
        }
        (lo..f).map(|x| rec(f, left - 1, x)).sum()
    }
    rec(f, b, 0)
}

/// Count of (partition of `b` beams into k blocks, k-subset of `f` bands)
/// pairs, enumerated pair by pair.
pub fn partition_band_pairs(f: usize, b: usize) -> u64 {
    let parts = partitions_by_blocks(b);
    let mut total = 0;
    for (k, &p) in parts.iter().enumerate().skip(1) {
        for _ in 0..p {
            total += subsets_of_size(f, k);
        }
    }
    total
}

/// Every assignment of `n` items to `s` values, enumerated as odometer steps.
pub fn assignments(s: usize, n: usize) -> u64 {
    if s == 0 {
        return u64::from(n == 0);
    }
    let mut digits = vec![0usize; n];
    let mut count = 0;
    loop {
        count += 1;
        let mut i = 0;
        loop {
            if i == n {
                return count;
            }
            digits[i] += 1;
            if digits[i] < s {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Every `(channel, power level)` tuple for `m` users.
pub fn channel_power_tuples(c: usize, p: usize, m: usize) -> u64 {
    let pairs: Vec<(usize, usize)> = (0..c).flat_map(|ch| (1..=p).map(move |l| (ch, l))).collect();
    fn rec(pairs: &[(usize, usize)], left: usize) -> u64 {
        if left == 0 {
            1
        } else {
            pairs.iter().map(|_| rec(pairs, left - 1)).sum()
        }
    }
    rec(&pairs, m)
}

const COUNT_LIMIT: u64 = 100_000;

pub fn check_combinatorics() -> Check {
    let mut checked = 0usize;
    let b = |x: u64| BigUint::from(x);
    for n in 0..=10 {
        let parts = partitions_by_blocks(n);
        for k in 0..=n + 1 {
            let want = parts.get(k).copied().unwrap_or(0);
            if stirling2(n, k) != b(want) {
                return Err(format!("S({n},{k}) = {} but enumeration gives {want}", stirling2(n, k)));
            }
            checked += 1;
        }
    }
    for n in 0..=16 {
        for k in 0..=n {
            if binomial(n, k) != b(subsets_of_size(n, k)) {
                return Err(format!("C({n},{k}) mismatch"));
            }
            checked += 1;
        }
    }
    for f in 1..=10 {
        for bb in 1..=8 {
            let want = multisets(f, bb);
            if want <= COUNT_LIMIT {
                if global_dim(f, bb, GlobalMode::MultiBand) != b(want) {
                    return Err(format!("multi-band F={f} B={bb}: formula {} vs {want}", global_dim(f, bb, GlobalMode::MultiBand)));
                }
                checked += 1;
            }
            if bb <= 8 && f <= 10 {
                let want = partition_band_pairs(f, bb);
                if want <= COUNT_LIMIT {
                    if global_dim(f, bb, GlobalMode::SingleBand) != b(want) {
                        return Err(format!("single-band F={f} B={bb}: formula {} vs {want}", global_dim(f, bb, GlobalMode::SingleBand)));
                    }
                    checked += 1;
                }
            }
        }
    }
    for s in 1..=12 {
        for n_uav in 0..=4 {
            for n_tbs in 0..=4 {
                let n = n_uav + n_tbs;
                if (s as f64).powi(n as i32) > COUNT_LIMIT as f64 {
                    continue;
                }
                if regional_dim(s, n_uav, n_tbs) != b(assignments(s, n)) {
                    return Err(format!("regional S={s} N={n} mismatch"));
                }
                checked += 1;
            }
        }
    }
    for c in 1..=4 {
        for p in 1..=4 {
            for m in 0..=8 {
                if ((c * p) as f64).powi(m as i32) > COUNT_LIMIT as f64 {
                    continue;
                }
                if local_dim(c, p, m) != b(channel_power_tuples(c, p, m)) {
                    return Err(format!("local C={c} P={p} M={m} mismatch"));
                }
                checked += 1;
            }
        }
    }
    let named = [
        (stirling2(3, 2), 3u64, "S(3,2)"),
        (stirling2(4, 2), 7, "S(4,2)"),
        (global_dim(3, 3, GlobalMode::SingleBand), 13, "single-band F=3 B=3"),
        (regional_dim(10, 1, 2), 1000, "regional S=10 N=3"),
    ];
    for (got, want, what) in named {
        if got != b(want) {
            return Err(format!("{what} = {got}, expected {want}"));
        }
    }
    Ok(format!("{checked} inputs match enumeration; S(3,2)=3, S(4,2)=7, single-band(3,3)=13, regional(10,3)=1000"))
}

// ---------------------------------------------------------------- PHY

/// Direct per-user SINR: interference from every cluster member that is
/// decoded after this user (stronger channel, or equal channel and lower id)
/// plus co-channel power and noise.
pub fn naive_sinr(members: &[(usize, f64, f64)], me: usize, p: f64, co: f64, noise: f64) -> f64 {
    let (id, alpha, g) = members[me];
    let mut intra = 0.0;
    for &(j, a, gj) in members {
        if j != id && (gj > g || (gj == g && j < id)) {
            intra += a * p * g;
        }
    }
    alpha * p * g / (intra + co + noise)
}

pub struct PhyInstance {
    pub clusters: Vec<NomaCluster>,
    pub gains: BTreeMap<(usize, usize), f64>,
    pub power: BTreeMap<usize, f64>,
    pub kind: BTreeMap<usize, NodeKind>,
}

/// Random clusters over a few transmitters sharing a few channels.
pub fn random_phy_instance(rng: &mut ChaCha8Rng) -> PhyInstance {
    let n_tx = rng.gen_range(1..=4);
    let channels = rng.gen_range(1..=3);
    let mut gains = BTreeMap::new();
    let mut power = BTreeMap::new();
    let mut kind = BTreeMap::new();
    let mut clusters = Vec::new();
    let mut next_user = 1000;
    for t in 0..n_tx {
        power.insert(t, 10f64.powf(rng.gen_range(-1.0..2.0)));
        kind.insert(t, if rng.gen_bool(0.5) { NodeKind::Tbs } else { NodeKind::Uav });
        for ch in 0..channels {
            if !rng.gen_bool(0.7) {
                continue;
            }
            let size = rng.gen_range(1..=4);
            let mut users: Vec<(usize, f64)> = (0..size)
                .map(|_| {
                    next_user += 1;
                    (next_user, 10f64.powf(rng.gen_range(-12.0..-6.0)))
                })
                .collect();
            users.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut raw: Vec<f64> = (0..size).map(|_| rng.gen_range(0.1..1.0)).collect();
            raw.sort_by(f64::total_cmp);
            let sum: f64 = raw.iter().sum();
            let mut fr: Vec<f64> = raw.iter().map(|x| x / sum).collect();
            let resid = 1.0 - fr.iter().sum::<f64>();
            *fr.last_mut().unwrap() += resid;
            let members = users.iter().zip(&fr).map(|(&(u, _), &a)| (NodeId(u), a)).collect();
            clusters.push(NomaCluster::new(NodeId(t), 0, ch, members).unwrap());
            for &(u, g) in &users {
                for s in 0..n_tx {
                    let gain = if s == t { g } else { 10f64.powf(rng.gen_range(-14.0..-8.0)) };
                    gains.insert((s, u), gain);
                }
            }
        }
    }
    PhyInstance { clusters, gains, power, kind }
}

pub fn check_phy() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut users = 0usize;
    for inst in 0..1000 {
        let x = random_phy_instance(&mut rng);
        let g = |t: NodeId, u: NodeId| x.gains[&(t.0, u.0)];
        let co = aggregate_interference(&x.clusters, g, |t| x.power[&t.0], |t| x.kind[&t.0]);
        let noise = 10f64.powf(rng.gen_range(-14.0..-11.0));
        for c in &x.clusters {
            let mut naive_co = Vec::new();
            for &(u, _) in &c.members {
                let mut same = 0.0;
                let mut cross = 0.0;
                let mut seen = Vec::new();
                for other in &x.clusters {
                    if other.node == c.node || other.channel != c.channel || other.beam != c.beam || seen.contains(&other.node) {
                        continue;
                    }
                    seen.push(other.node);
                    let w = x.power[&other.node.0] * x.gains[&(other.node.0, u.0)];
                    if x.kind[&other.node.0] == x.kind[&c.node.0] {
                        same += w;
                    } else {
                        cross += w;
                    }
                }
                for (got, want) in [(co[&u].same_tier_w, same), (co[&u].cross_tier_w, cross)] {
                    let rel = (got - want).abs() / want.abs().max(1e-300);
                    if want == 0.0 && got != 0.0 || want != 0.0 && rel > 1e-9 {
                        return Err(format!("instance {inst}: interference at user {u} is {got:e}, reference {want:e}"));
                    }
                    if want != 0.0 {
                        worst = worst.max(rel);
                    }
                }
                naive_co.push(same + cross);
            }
            let gains: Vec<f64> = c.members.iter().map(|&(u, _)| g(c.node, u)).collect();
            let cos: Vec<CoChannel> = c.members.iter().map(|&(u, _)| co[&u]).collect();
            let p = x.power[&c.node.0];
            let rows = noma_sinr(c, &gains, p, &cos, noise, 1e6).map_err(|e| format!("instance {inst}: {e}"))?;
            let members: Vec<(usize, f64, f64)> = c.members.iter().zip(&gains).map(|(&(u, a), &gn)| (u.0, a, gn)).collect();
            for (k, row) in rows.iter().enumerate() {
                let want = naive_sinr(&members, k, p, naive_co[k], noise);
                let rel = (row.sinr - want).abs() / want.abs().max(1e-300);
                worst = worst.max(rel);
                if rel > 1e-9 {
                    return Err(format!("instance {inst}: SINR {} vs reference {want} (rel {rel:e})", row.sinr));
                }
                let rate = 1e6 * (1.0 + want).log2();
                if (row.rate_bps - rate).abs() / rate.max(1e-300) > 1e-9 {
                    return Err(format!("instance {inst}: rate {} vs {rate}", row.rate_bps));
                }
                users += 1;
            }
        }
    }
    let c = NomaCluster::new(NodeId(100), 0, 0, vec![(NodeId(1), 0.2), (NodeId(2), 0.8)]).unwrap();
    let rows = noma_sinr(&c, &[1.0, 0.25], 1.0, &[CoChannel::default(); 2], 0.1, 1.0).map_err(|e| e.to_string())?;
    if rows[0].sinr != 2.0 || (rows[1].sinr - 4.0 / 3.0).abs() > 1e-15 {
        return Err(format!("worked example gives {} / {}", rows[0].sinr, rows[1].sinr));
    }
    Ok(format!("1000 instances, {users} users, worst relative error {worst:.2e}; worked example 2.0 / {:.4}", rows[1].sinr))
}

// ---------------------------------------------------------------- gradients

/// Central-difference check of the full PPO loss on one network. A sample
/// of every layer's weights and biases in both towers is perturbed.
pub fn gradient_check(spec: &NetSpec, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = Net::init(spec.clone(), &mut rng);
    let cfg = PpoConfig::default();
    let n = 6;
    let data: Vec<(Vec<f64>, Vec<usize>, Vec<bool>, f64, f64, f64)> = (0..n)
        .map(|_| {
            let obs: Vec<f64> = (0..spec.input_len).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let actions: Vec<usize> = spec.heads.iter().map(|&h| rng.gen_range(0..h)).collect();
            let mut mask: Vec<bool> = spec.heads.iter().map(|_| rng.gen_bool(0.7)).collect();
            mask[0] = true;
            let logits = net.policy_logits(&obs).unwrap();
            let (logp, _) = spectrum_lab::rl::ppo::heads_logp_entropy(spec, &logits, &actions, &mask);
            // Old log-probabilities close to the current ones keep every
            // ratio strictly inside the clip band, where the loss is smooth.
            (obs, actions, mask, logp + rng.gen_range(-0.1..0.1), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
        .collect();
    let batch: Vec<Sample> =
        data.iter().map(|(o, a, m, lp, adv, r)| Sample { obs: o, actions: a, mask: m, logp_old: *lp, advantage: *adv, ret: *r }).collect();
    let mut grad = vec![0.0; net.params.len()];
    loss_and_grad(&net, &batch, &cfg, Some(&mut grad)).map_err(|e| e.to_string())?;

    // Layer boundaries in parameter order: actor layers then critic layers.
    let mut bounds = Vec::new();
    let mut at = 0;
    for out in [spec.logits_len(), 1] {
        let mut sizes = vec![spec.input_len];
        sizes.extend(&spec.hidden);
        sizes.push(out);
        for w in sizes.windows(2) {
            bounds.push((at, w[0] * w[1]));
            bounds.push((at + w[0] * w[1], w[1]));
            at += w[0] * w[1] + w[1];
        }
    }
    assert_eq!(at, net.params.len());
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (start, len) in bounds {
        for _ in 0..12 {
            let i = start + rng.gen_range(0..len);
            let mut plus = net.clone();
            plus.params[i] += h;
            let mut minus = net.clone();
            minus.params[i] -= h;
            let lp = loss_and_grad(&plus, &batch, &cfg, None).unwrap().total;
            let lm = loss_and_grad(&minus, &batch, &cfg, None).unwrap().total;
            let fd = (lp - lm) / (2.0 * h);
            let scale = fd.abs().max(grad[i].abs());
            if scale < 1e-7 {
                // Both vanish; relative error is meaningless at round-off level.
                if (fd - grad[i]).abs() > 1e-9 {
                    return Err(format!("param {i}: fd {fd:e} vs analytic {:e}", grad[i]));
                }
                continue;
            }
            let rel = (fd - grad[i]).abs() / scale;
            worst = worst.max(rel);
            if rel >= 1e-4 {
                return Err(format!("param {i} of {:?}: fd {fd:e} vs analytic {:e} (rel {rel:e})", spec.heads.len(), grad[i]));
            }
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------- bandit

/// Train a learner on a two-armed bandit (arm 1 pays 1, arm 0 pays 0) and
/// return the number of updates until P(arm 1) > 0.95, if within `max_updates`.
pub fn bandit_updates(seed: u64, max_updates: usize) -> Option<usize> {
    let cfg = PpoConfig { minibatch: 64, ..PpoConfig::default() };
    let spec = NetSpec::new(1, cfg.hidden.clone(), vec![2]).unwrap();
    let mut learner = Learner::new(spec, cfg, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xBA4D17);
    let obs = [1.0];
    for update in 1..=max_updates {
        for _ in 0..64 {
            let d = learner.act(&obs, &[true], &mut rng).unwrap();
            let reward = if d.actions[0] == 1 { 1.0 } else { 0.0 };
            learner.push(Transition { obs: obs.to_vec(), actions: d.actions, mask: vec![true], logp: d.logp, reward, value: d.value, done: true });
        }
        learner.update().unwrap();
        let logits = learner.net.policy_logits(&obs).unwrap();
        let p1 = spectrum_lab::rl::dist::softmax(&logits)[1];
        if p1 > 0.95 {
            return Some(update);
        }
    }
    None
}
