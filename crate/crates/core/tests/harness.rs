use spectrum_lab::complexity::ComplexityReport;
use spectrum_lab::harness::{self, evaluate, train, Algo, AnyController, TrainOptions};
use spectrum_lab::rl::checkpoint::Checkpoint;
use spectrum_lab::rl::PpoConfig;
use spectrum_lab::topology::ScenarioConfig;

fn quick() -> ScenarioConfig {
    ScenarioConfig { slots_per_episode: 50, ..ScenarioConfig::micro() }
}

#[test]
fn curve_has_one_row_per_episode() {
    let dir = tempfile::tempdir().unwrap();
    let opts = TrainOptions { stop_on_convergence: false, ..TrainOptions::new(50, 1) };
    let out = train(&quick(), Algo::Hdrl, &opts, Some(dir.path())).unwrap();
    assert_eq!(out.curve.len(), 50);
    assert!(out.curve.iter().all(|r| (0.0..=1.0).contains(&r.normalized_reward) || r.raw_reward <= 0.0));
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 51);
    assert!(csv.starts_with("episode,raw_reward,normalized_reward"));
    let ck = Checkpoint::load(&dir.path().join("checkpoints").join("final.json")).unwrap();
    assert_eq!(ck.episodes, 50);
    assert_eq!(ck.config_hash, harness::config_hash(&quick()).unwrap());
}

#[test]
fn checkpoint_round_trip_reproduces_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick();
    let out = train(&cfg, Algo::FlatPpo, &TrainOptions { stop_on_convergence: false, ..TrainOptions::new(4, 2) }, Some(dir.path())).unwrap();
    let loaded = harness::load_controller(Algo::FlatPpo, &cfg, Some(&dir.path().join("checkpoints").join("final.json")), 2).unwrap();
    let a = evaluate(&cfg, &out.controller, &[5, 6], 1).unwrap();
    let b = evaluate(&cfg, &loaded, &[5, 6], 1).unwrap();
    let rows = |v: &[harness::EvalEpisode]| v.iter().map(|e| (e.row.mean_score, e.row.mean_throughput_bps)).collect::<Vec<_>>();
    assert_eq!(rows(&a), rows(&b));
}

#[test]
fn evaluation_is_deterministic_and_consistent() {
    let cfg = quick();
    let ctl = AnyController::build(Algo::Random, &cfg, &PpoConfig::default(), 0).unwrap();
    let a = evaluate(&cfg, &ctl, &[0, 1, 2], 2).unwrap();
    let b = evaluate(&cfg, &ctl, &[0, 1, 2], 2).unwrap();
    assert_eq!(a.len(), 6);
    for (x, y) in a.iter().zip(&b) {
        let strip = |t: &spectrum_lab::env::EpisodeTrace| {
            let mut t = t.clone();
            t.decisions.iter_mut().for_each(|d| d.latency_s = 0.0);
            t
        };
        assert_eq!(strip(&x.trace), strip(&y.trace));
        let json = serde_json::to_string(&x.trace).unwrap();
        assert_eq!(serde_json::from_str::<spectrum_lab::env::EpisodeTrace>(&json).unwrap(), x.trace);
        let (rx, ry) = (&x.row, &y.row);
        assert_eq!((rx.mean_score, rx.mean_se, rx.reward), (ry.mean_score, ry.mean_se, ry.reward));
        // Spectral efficiency is throughput over the whole band on the sampled slots.
        let se = rx.mean_throughput_bps / cfg.total_bandwidth_hz;
        assert!((rx.mean_se - se.min(10.0)).abs() <= 1e-9 * se.max(1.0));
        assert!((0.0..=1.0).contains(&rx.mean_fairness) && (0.0..=1.0).contains(&rx.mean_violation));
    }
}

#[test]
fn eval_command_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let rows = harness::cmd_eval(&quick(), Algo::Random, None, &[3], 1, dir.path()).unwrap();
    assert_eq!(rows.len(), 1);
    for f in ["metrics_seed3_ep0.csv", "summary.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let metrics = std::fs::read_to_string(dir.path().join("metrics_seed3_ep0.csv")).unwrap();
    // Header plus slots 0, 10, 20, 30, 40.
    assert_eq!(metrics.lines().count(), 6);
}

#[test]
fn complexity_of_small_regional_space() {
    let cfg = ScenarioConfig { subbands: 10, ..ScenarioConfig::micro() };
    let report = ComplexityReport::for_config(&cfg, 2000);
    assert_eq!(report.d_regional.to_string(), "1000");
}
