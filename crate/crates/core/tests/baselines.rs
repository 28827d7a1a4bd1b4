use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectrum_lab::agents;
use spectrum_lab::baselines::exhaustive::{joint_cardinality, search};
use spectrum_lab::baselines::RandomController;
use spectrum_lab::env::{ActionSet, AgentId, HierEnv, LocalAction, RegionalAction};
use spectrum_lab::policy::{Controller, HoldController};
use spectrum_lab::topology::{Hierarchy, Move, ScenarioConfig};

fn tiny() -> ScenarioConfig {
    ScenarioConfig { users_per_region_range: [4, 4], subbands: 2, channels_per_subband: 2, power_levels: 2, ..ScenarioConfig::micro() }
}

/// Odometer over mixed radices.
fn next(digits: &mut [usize], radices: &[usize]) -> bool {
    for (d, &r) in digits.iter_mut().zip(radices).rev() {
        *d += 1;
        if *d < r {
            return true;
        }
        *d = 0;
    }
    false
}

/// Best score over every joint action of the due tiers, built as plain
/// action sets and scored one by one through the environment.
fn brute_force_best(env: &HierEnv) -> (f64, usize) {
    let cfg = env.config();
    let due = env.due();
    let n_global = if due.global { agents::heads(env, AgentId::Global)[0] } else { 1 };
    let reg_nodes: Vec<usize> = if due.regional { (0..env.num_haps()).map(|h| env.hap_nodes(h).len()).collect() } else { vec![] };
    let users: Vec<usize> = (0..env.num_serving()).map(|i| env.node_users(i).len()).collect();
    let cp = cfg.channels_per_subband * cfg.power_levels;
    let mut radices = vec![n_global];
    radices.extend(reg_nodes.iter().flat_map(|&n| std::iter::repeat(cfg.subbands).take(n)));
    radices.extend(users.iter().flat_map(|&n| std::iter::repeat(cp).take(n)));
    let mut digits = vec![0; radices.len()];
    let mut best = f64::NEG_INFINITY;
    let mut count = 0;
    loop {
        let mut set = ActionSet::default();
        let mut at = 1;
        if due.global {
            set.global = Some(agents::decode_global(env, &digits[..1]));
        }
        for (h, &n) in reg_nodes.iter().enumerate() {
            set.regional.insert(h, RegionalAction { subbands: digits[at..at + n].to_vec() });
            at += n;
        }
        for (i, &n) in users.iter().enumerate() {
            let assignments = digits[at..at + n].iter().map(|&d| (d / cfg.power_levels, d % cfg.power_levels + 1)).collect();
            set.local.insert(i, LocalAction { assignments, uav_move: Move::Stay });
            at += n;
        }
        best = best.max(env.score_candidate(&set).unwrap());
        count += 1;
        if !next(&mut digits, &radices) {
            return (best, count);
        }
    }
}

#[test]
fn exhaustive_matches_brute_force_at_every_epoch_kind() {
    let cfg = tiny();
    for seed in 0..3 {
        let mut env = HierEnv::new(&cfg, seed).unwrap();
        // Slot 0 has all tiers due, slot 10 global idle, slot 11 only local.
        for target in [0, 10, 11] {
            while env.slot() < target {
                let a = HoldController.act(&env).unwrap();
                env.step(&a).unwrap();
            }
            let fast = search(&env, u128::MAX).unwrap();
            let (best, count) = brute_force_best(&env);
            assert_eq!(fast.evaluated as usize, count);
            assert_eq!(fast.score, best, "seed {seed} slot {target}");
            assert_eq!(env.score_candidate(&fast.actions).unwrap(), fast.score);
        }
    }
}

#[test]
fn cardinality_counts_moves() {
    let env = HierEnv::new(&tiny(), 0).unwrap();
    // 3 nodes x 2 sub-bands, 4 users x 4 choices, one UAV with 5 moves.
    let expected = 8 * 4u128.pow(4) * 5;
    assert_eq!(joint_cardinality(&env), Some(expected));
}

#[test]
fn random_digits_are_uniform() {
    let cfg = ScenarioConfig::micro();
    let env = HierEnv::new(&cfg, 0).unwrap();
    let mut ctl = RandomController::new(42);
    let cp = cfg.channels_per_subband * cfg.power_levels;
    let n = 40_000;
    let mut counts = vec![0usize; cp];
    let mut sub_counts = vec![0usize; cfg.subbands];
    for _ in 0..n {
        let a = ctl.act(&env).unwrap();
        let (c, l) = a.local[&0].assignments[0];
        counts[c * cfg.power_levels + l - 1] += 1;
        sub_counts[a.regional[&0].subbands[0]] += 1;
    }
    // Chi-square against uniform; critical values at p = 0.001.
    let chi = |obs: &[usize]| {
        let e = n as f64 / obs.len() as f64;
        obs.iter().map(|&o| (o as f64 - e).powi(2) / e).sum::<f64>()
    };
    assert!(chi(&counts) < 16.27, "{counts:?}");
    assert!(chi(&sub_counts) < 16.27, "{sub_counts:?}");
}

#[test]
fn random_never_leaves_action_ranges() {
    let cfg = ScenarioConfig::micro_for(Hierarchy::UavAided);
    let mut env = HierEnv::new(&cfg, 3).unwrap();
    let mut ctl = RandomController::new(ChaCha8Rng::seed_from_u64(9).gen());
    while !env.done() {
        let a = ctl.act(&env).unwrap();
        env.step(&a).unwrap();
    }
    assert!(env.trace().decisions.iter().all(|d| !d.clamped));
}

#[test]
fn agent_counts_per_hierarchy() {
    let sag = HierEnv::new(&ScenarioConfig::preset(Hierarchy::SpaceAirGround), 0).unwrap();
    assert_eq!(sag.agents().len(), 15);
    // Same network without the satellite: one agent fewer.
    let cfg = ScenarioConfig { hierarchy: Hierarchy::AirGround, ..ScenarioConfig::space_air_ground() };
    let ag = HierEnv::new(&cfg, 0).unwrap();
    assert_eq!(ag.agents().len(), 14);
    assert!(!ag.agents().contains(&AgentId::Global));
}

#[test]
fn exhaustive_refuses_default_scale() {
    let env = HierEnv::new(&ScenarioConfig::preset(Hierarchy::SpaceAirGround), 0).unwrap();
    assert!(matches!(search(&env, env.config().exhaustive_cap), Err(spectrum_lab::Error::ExhaustiveCap(_))));
}
