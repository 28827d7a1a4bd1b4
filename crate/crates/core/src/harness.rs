//! Experiment orchestration: training with reward curves and checkpoints,
//! greedy evaluation, latency benchmarks and complexity reports, each writing
//! its outputs under one run directory.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{ExhaustiveController, FlatController, RandomController};
use crate::complexity::ComplexityReport;
use crate::env::trace::fmt_g9;
use crate::env::{ActionSet, EpisodeTrace, HierEnv, StepOutcome, Tier};
use crate::error::{Error, Result};
use crate::hdrl::{MultiAgentController, Variant};
use crate::policy::{run_episode, Controller, EpisodeSummary};
use crate::rl::checkpoint::{Checkpoint, LearnerState, CHECKPOINT_VERSION};
use crate::rl::convergence::{converged, normalize_by_running_max};
use crate::rl::PpoConfig;
use crate::topology::{Hierarchy, ScenarioConfig};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "SPECTRUM_LAB_THREADS";
/// Slot-metric sampling period of evaluation CSVs.
pub const METRICS_EVERY: usize = 10;
pub const CHECKPOINT_EVERY: usize = 100;

/// Size the global worker pool from `SPECTRUM_LAB_THREADS` (if set). Safe
/// to call more than once; only the first call has an effect.
pub fn init_threads() {
    let n = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    if let Some(n) = n {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("worker pool already initialized; {THREADS_ENV}={n} ignored");
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Hdrl,
    FlatPpo,
    IndependentMappo,
    Random,
    Exhaustive,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::Random, Algo::FlatPpo, Algo::Hdrl, Algo::IndependentMappo, Algo::Exhaustive];

    pub fn label(self) -> &'static str {
        match self {
            Algo::Hdrl => "hdrl",
            Algo::FlatPpo => "flat_ppo",
            Algo::IndependentMappo => "independent_mappo",
            Algo::Random => "random",
            Algo::Exhaustive => "exhaustive",
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, Algo::Hdrl | Algo::FlatPpo | Algo::IndependentMappo)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "hdrl" => Ok(Algo::Hdrl),
            "flat_ppo" | "flat" => Ok(Algo::FlatPpo),
            "independent_mappo" | "mappo" => Ok(Algo::IndependentMappo),
            "random" => Ok(Algo::Random),
            "exhaustive" => Ok(Algo::Exhaustive),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Any controller the harness can run.
#[derive(Debug, Clone)]
pub enum AnyController {
    Multi(MultiAgentController),
    Flat(FlatController),
    Random(RandomController),
    Exhaustive(ExhaustiveController),
}

impl AnyController {
    pub fn build(algo: Algo, config: &ScenarioConfig, ppo: &PpoConfig, seed: u64) -> Result<Self> {
        let template = || HierEnv::new(config, seed);
        Ok(match algo {
            Algo::Hdrl => Self::Multi(MultiAgentController::new(&template()?, Variant::Hierarchical, ppo.clone(), seed)?),
            Algo::IndependentMappo => Self::Multi(MultiAgentController::new(&template()?, Variant::Independent, ppo.clone(), seed)?),
            Algo::FlatPpo => Self::Flat(FlatController::new(&template()?, ppo.clone(), seed)?),
            Algo::Random => Self::Random(RandomController::new(seed)),
            Algo::Exhaustive => Self::Exhaustive(ExhaustiveController::new(config.exhaustive_cap)),
        })
    }

    fn inner(&mut self) -> &mut dyn Controller {
        match self {
            Self::Multi(c) => c,
            Self::Flat(c) => c,
            Self::Random(c) => c,
            Self::Exhaustive(c) => c,
        }
    }

    /// Stochastic, experience-collecting mode versus greedy evaluation.
    pub fn set_training(&mut self, on: bool) {
        match self {
            Self::Multi(c) => c.training = on,
            Self::Flat(c) => c.training = on,
            _ => {}
        }
    }

    pub fn states(&self) -> Option<BTreeMap<String, LearnerState>> {
        match self {
            Self::Multi(c) => Some(c.states()),
            Self::Flat(c) => Some(c.states()),
            _ => None,
        }
    }

    pub fn restore(&mut self, states: &BTreeMap<String, LearnerState>) -> Result<()> {
        match self {
            Self::Multi(c) => c.restore(states),
            Self::Flat(c) => c.restore(states),
            _ => Err(Error::Config("baseline controllers have no checkpoint".into())),
        }
    }
}

impl Controller for AnyController {
    fn label(&self) -> &'static str {
        match self {
            Self::Multi(c) => c.label(),
            Self::Flat(c) => c.label(),
            Self::Random(c) => c.label(),
            Self::Exhaustive(c) => c.label(),
        }
    }

    fn act(&mut self, env: &HierEnv) -> Result<ActionSet> {
        self.inner().act(env)
    }

    fn feedback(&mut self, outcome: &StepOutcome) -> Result<()> {
        self.inner().feedback(outcome)
    }

    fn end_episode(&mut self, slots: usize) -> Result<()> {
        self.inner().end_episode(slots)
    }
}

/// Stable hash of the scenario's canonical JSON form.
pub fn config_hash(config: &ScenarioConfig) -> Result<String> {
    let value = serde_json::to_value(config)?;
    // Round-tripping through `Value` sorts object keys.
    let canonical = serde_json::to_string(&value)?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub algorithm: Option<String>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub out_dir: PathBuf,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
}

impl RunManifest {
    pub fn begin(command: &str, config: &ScenarioConfig, algorithm: Option<Algo>, seeds: &[u64], episodes: usize, out_dir: &Path) -> Result<Self> {
        let config_hash = config_hash(config)?;
        let algo = algorithm.map(|a| a.label().to_string());
        let seeds_tag = seeds.iter().map(u64::to_string).collect::<Vec<_>>().join("-");
        let run_id = format!("{command}-{}-{}-s{seeds_tag}", algo.as_deref().unwrap_or("all"), &config_hash[..12]);
        Ok(Self {
            run_id,
            command: command.into(),
            config_hash,
            config: config.clone(),
            algorithm: algo,
            seeds: seeds.to_vec(),
            episodes,
            out_dir: out_dir.to_path_buf(),
            started_unix_s: unix_now(),
            finished_unix_s: 0.0,
        })
    }

    pub fn finish(mut self) -> Result<Self> {
        self.finished_unix_s = unix_now();
        write_json(&self.out_dir.join("manifest.json"), &self)?;
        Ok(self)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Environment seed of training episode `episode` of run seed `seed`.
pub fn train_episode_seed(seed: u64, episode: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(episode as u64)
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub episodes: usize,
    /// Convergence is not checked before this many episodes.
    pub min_episodes: usize,
    pub stop_on_convergence: bool,
    pub seed: u64,
    pub ppo: PpoConfig,
}

impl TrainOptions {
    pub fn new(episodes: usize, seed: u64) -> Self {
        Self { episodes, min_episodes: 0, stop_on_convergence: true, seed, ppo: PpoConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    pub raw_reward: f64,
    pub normalized_reward: f64,
    pub tier_rewards: BTreeMap<Tier, f64>,
    pub mean_global_score: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub controller: AnyController,
    pub curve: Vec<CurveRow>,
    /// Episode (1-based count) at which the plateau rule first fired.
    pub converged_at: Option<usize>,
}

pub fn write_curve_csv<W: Write>(rows: &[CurveRow], out: &mut W) -> Result<()> {
    writeln!(out, "episode,raw_reward,normalized_reward,global_reward,regional_reward,local_reward")?;
    for r in rows {
        let tier = |t: Tier| r.tier_rewards.get(&t).map(|&x| fmt_g9(x)).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.episode,
            fmt_g9(r.raw_reward),
            fmt_g9(r.normalized_reward),
            tier(Tier::Global),
            tier(Tier::Regional),
            tier(Tier::Local)
        )?;
    }
    Ok(())
}

fn save_checkpoint(path: &Path, algo: Algo, config: &ScenarioConfig, ppo: &PpoConfig, episodes: usize, ctl: &AnyController) -> Result<()> {
    let learners = ctl.states().ok_or_else(|| Error::Config(format!("{algo} has no learned policy to checkpoint")))?;
    Checkpoint { version: CHECKPOINT_VERSION, algorithm: algo.label().into(), config_hash: config_hash(config)?, episodes, ppo: ppo.clone(), learners }.save(path)
}

/// Train `algo` until the episode budget runs out or, after
/// `min_episodes`, the plateau rule fires. With `out_dir`, checkpoints are
/// written every 100 episodes and at the end.
pub fn train(config: &ScenarioConfig, algo: Algo, opts: &TrainOptions, out_dir: Option<&Path>) -> Result<TrainOutcome> {
    if !algo.is_learned() {
        return Err(Error::Config(format!("{algo} is not a trainable algorithm")));
    }
    config.validate()?;
    let mut ctl = AnyController::build(algo, config, &opts.ppo, opts.seed)?;
    ctl.set_training(true);
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir.join("checkpoints"))?;
    }
    let mut curve = Vec::new();
    let mut raw = Vec::new();
    let mut converged_at = None;
    for ep in 0..opts.episodes {
        let mut env = HierEnv::new(config, train_episode_seed(opts.seed, ep))?;
        let s = run_episode(&mut env, &mut ctl, None).map_err(|e| match e {
            Error::Numerical { index, detail } => Error::Numerical { index, detail: format!("episode {}: {detail}", ep + 1) },
            other => other,
        })?;
        raw.push(s.reward);
        let norm = normalize_by_running_max(&raw);
        curve.push(CurveRow {
            episode: ep + 1,
            raw_reward: s.reward,
            normalized_reward: *norm.last().expect("nonempty"),
            tier_rewards: s.tier_rewards.clone(),
            mean_global_score: s.mean_global_score,
        });
        log::info!("{algo} episode {}: reward {:.4} score {:.4}", ep + 1, s.reward, s.mean_global_score);
        if let Some(dir) = out_dir {
            if (ep + 1) % CHECKPOINT_EVERY == 0 {
                save_checkpoint(&dir.join("checkpoints").join(format!("episode_{:05}.json", ep + 1)), algo, config, &opts.ppo, ep + 1, &ctl)?;
            }
        }
        if converged_at.is_none() && ep + 1 >= opts.min_episodes && converged(&norm) {
            converged_at = Some(ep + 1);
            if opts.stop_on_convergence {
                break;
            }
        }
    }
    if let Some(dir) = out_dir {
        write_curve_csv(&curve, &mut create(&dir.join("curve.csv"))?)?;
        save_checkpoint(&dir.join("checkpoints").join("final.json"), algo, config, &opts.ppo, curve.len(), &ctl)?;
    }
    ctl.set_training(false);
    Ok(TrainOutcome { controller: ctl, curve, converged_at })
}

/// Per-seed evaluation summary over the sampled slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub seed: u64,
    pub episode: usize,
    pub mean_se: f64,
    pub mean_throughput_bps: f64,
    pub throughput_variance: f64,
    pub mean_fairness: f64,
    pub mean_violation: f64,
    /// Network-scope slot score over every slot of the episode.
    pub mean_score: f64,
    pub reward: f64,
    pub latency_s: f64,
}

fn mean(x: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = x.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

impl EvalRow {
    pub fn new(seed: u64, episode: usize, trace: &EpisodeTrace, summary: &EpisodeSummary) -> Self {
        let sampled: Vec<_> = trace.metrics.iter().filter(|m| m.slot % METRICS_EVERY == 0).collect();
        let thr = mean(sampled.iter().map(|m| m.throughput_bps));
        Self {
            seed,
            episode,
            mean_se: mean(sampled.iter().map(|m| m.spectral_efficiency)),
            mean_throughput_bps: thr,
            throughput_variance: mean(sampled.iter().map(|m| (m.throughput_bps - thr).powi(2))),
            mean_fairness: mean(sampled.iter().map(|m| m.fairness)),
            mean_violation: mean(sampled.iter().map(|m| m.violation_fraction)),
            mean_score: summary.mean_global_score,
            reward: summary.reward,
            latency_s: summary.mean_latency_s,
        }
    }
}

pub struct EvalEpisode {
    pub row: EvalRow,
    pub summary: EpisodeSummary,
    pub trace: EpisodeTrace,
}

/// Environment seed of evaluation episode `episode` for seed `seed`.
pub fn eval_episode_seed(seed: u64, episode: usize) -> u64 {
    seed.wrapping_add((episode as u64) << 32)
}

/// Greedy evaluation of `ctl` on every seed, seeds in parallel. Each seed
/// works on its own copy of the controller; random baselines are reseeded
/// per seed.
pub fn evaluate(config: &ScenarioConfig, ctl: &AnyController, seeds: &[u64], episodes: usize) -> Result<Vec<EvalEpisode>> {
    let per_seed: Vec<Result<Vec<EvalEpisode>>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut c = match ctl {
                AnyController::Random(_) => AnyController::Random(RandomController::new(seed)),
                other => other.clone(),
            };
            c.set_training(false);
            (0..episodes.max(1))
                .map(|k| {
                    let mut env = HierEnv::new(config, eval_episode_seed(seed, k))?;
                    let summary = run_episode(&mut env, &mut c, None)?;
                    let trace = env.into_trace();
                    Ok(EvalEpisode { row: EvalRow::new(seed, k, &trace, &summary), summary, trace })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for r in per_seed {
        out.extend(r?);
    }
    Ok(out)
}

pub fn write_summary_csv<W: Write>(rows: &[EvalRow], out: &mut W) -> Result<()> {
    writeln!(out, "seed,episode,mean_se,mean_throughput_bps,throughput_variance,fairness,violations,mean_score,reward,latency_ms")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.episode,
            fmt_g9(r.mean_se),
            fmt_g9(r.mean_throughput_bps),
            fmt_g9(r.throughput_variance),
            fmt_g9(r.mean_fairness),
            fmt_g9(r.mean_violation),
            fmt_g9(r.mean_score),
            fmt_g9(r.reward),
            fmt_g9(r.latency_s * 1e3)
        )?;
    }
    Ok(())
}

/// Load a controller for `algo`, restoring learned policies from `checkpoint`.
pub fn load_controller(algo: Algo, config: &ScenarioConfig, checkpoint: Option<&Path>, seed: u64) -> Result<AnyController> {
    let Some(path) = checkpoint else {
        if algo.is_learned() {
            log::warn!("evaluating {algo} without a checkpoint: policies are untrained");
        }
        return AnyController::build(algo, config, &PpoConfig::default(), seed);
    };
    let ck = Checkpoint::load(path)?;
    if ck.algorithm != algo.label() {
        return Err(Error::Config(format!("checkpoint holds {} policies, not {algo}", ck.algorithm)));
    }
    let hash = config_hash(config)?;
    if ck.config_hash != hash {
        log::warn!("checkpoint was trained on scenario {} but evaluating on {}", ck.config_hash, hash);
    }
    let mut ctl = AnyController::build(algo, config, &ck.ppo, seed)?;
    ctl.restore(&ck.learners)?;
    Ok(ctl)
}

/// Evaluate and write `metrics_seed{S}_ep{K}.csv`, `decisions_seed{S}_ep{K}.csv`,
/// `summary.csv` and `manifest.json` under `out_dir`.
pub fn cmd_eval(config: &ScenarioConfig, algo: Algo, checkpoint: Option<&Path>, seeds: &[u64], episodes: usize, out_dir: &Path) -> Result<Vec<EvalRow>> {
    fs::create_dir_all(out_dir)?;
    let manifest = RunManifest::begin("eval", config, Some(algo), seeds, episodes, out_dir)?;
    let ctl = load_controller(algo, config, checkpoint, seeds.first().copied().unwrap_or(0))?;
    let results = evaluate(config, &ctl, seeds, episodes)?;
    for r in &results {
        let tag = format!("seed{}_ep{}", r.row.seed, r.row.episode);
        r.trace.write_metrics_csv(&mut create(&out_dir.join(format!("metrics_{tag}.csv")))?, METRICS_EVERY)?;
        r.trace.write_decisions_csv(&mut create(&out_dir.join(format!("decisions_{tag}.csv")))?, false)?;
    }
    let rows: Vec<EvalRow> = results.into_iter().map(|r| r.row).collect();
    write_summary_csv(&rows, &mut create(&out_dir.join("summary.csv"))?)?;
    manifest.finish()?;
    Ok(rows)
}

pub fn cmd_train(config: &ScenarioConfig, algo: Algo, opts: &TrainOptions, out_dir: &Path) -> Result<TrainOutcome> {
    fs::create_dir_all(out_dir)?;
    let manifest = RunManifest::begin("train", config, Some(algo), &[opts.seed], opts.episodes, out_dir)?;
    let outcome = train(config, algo, opts, Some(out_dir))?;
    manifest.finish()?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub algorithm: Algo,
    pub hierarchy: Hierarchy,
    /// Mean per-slot decision time over seeds; `None` when the algorithm
    /// refused the scenario.
    pub mean_latency_s: Option<f64>,
    pub note: String,
}

/// Decision latency of every algorithm on every scenario, seeds run one
/// after another so timings do not contend. Learned policies act greedily;
/// their latency does not depend on their weights.
pub fn bench(configs: &[ScenarioConfig], algos: &[Algo], seeds: &[u64]) -> Result<Vec<BenchCell>> {
    let mut cells = Vec::new();
    for config in configs {
        for &algo in algos {
            let mut lat = Vec::new();
            let mut note = String::new();
            for &seed in seeds {
                let mut ctl = AnyController::build(algo, config, &PpoConfig::default(), seed)?;
                ctl.set_training(false);
                let mut env = HierEnv::new(config, seed)?;
                match run_episode(&mut env, &mut ctl, None) {
                    Ok(s) => lat.push(s.mean_latency_s),
                    Err(Error::ExhaustiveCap(msg)) => {
                        note = msg;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            let mean_latency_s = (lat.len() == seeds.len() && !lat.is_empty()).then(|| mean(lat.iter().copied()));
            cells.push(BenchCell { algorithm: algo, hierarchy: config.hierarchy, mean_latency_s, note });
        }
    }
    Ok(cells)
}

pub fn bench_table_text(cells: &[BenchCell]) -> String {
    let mut hierarchies: Vec<Hierarchy> = Vec::new();
    let mut algos: Vec<Algo> = Vec::new();
    for c in cells {
        if !hierarchies.contains(&c.hierarchy) {
            hierarchies.push(c.hierarchy);
        }
        if !algos.contains(&c.algorithm) {
            algos.push(c.algorithm);
        }
    }
    let mut s = format!("{:<18}", "algorithm (ms)");
    for h in &hierarchies {
        s.push_str(&format!("{:>18}", h.label()));
    }
    s.push('\n');
    for a in &algos {
        s.push_str(&format!("{:<18}", a.label()));
        for h in &hierarchies {
            let cell = cells.iter().find(|c| c.algorithm == *a && c.hierarchy == *h);
            let v = match cell.and_then(|c| c.mean_latency_s) {
                Some(x) => format!("{:.4}", x * 1e3),
                None => "refused".into(),
            };
            s.push_str(&format!("{v:>18}"));
        }
        s.push('\n');
    }
    s
}

pub fn write_bench_csv<W: Write>(cells: &[BenchCell], out: &mut W) -> Result<()> {
    writeln!(out, "algorithm,hierarchy,mean_latency_ms,note")?;
    for c in cells {
        let v = c.mean_latency_s.map(|x| fmt_g9(x * 1e3)).unwrap_or_default();
        writeln!(out, "{},{},{},{}", c.algorithm, c.hierarchy.label(), v, c.note.replace(',', ";"))?;
    }
    Ok(())
}

pub fn cmd_bench(configs: &[ScenarioConfig], algos: &[Algo], seeds: &[u64], out_dir: &Path) -> Result<Vec<BenchCell>> {
    fs::create_dir_all(out_dir)?;
    let first = configs.first().ok_or_else(|| Error::Config("no scenario to benchmark".into()))?;
    let manifest = RunManifest::begin("bench", first, None, seeds, 1, out_dir)?;
    let cells = bench(configs, algos, seeds)?;
    fs::write(out_dir.join("latency.txt"), bench_table_text(&cells))?;
    write_bench_csv(&cells, &mut create(&out_dir.join("latency.csv"))?)?;
    manifest.finish()?;
    Ok(cells)
}

pub fn cmd_complexity(config: &ScenarioConfig, batch_slots: usize, out_dir: Option<&Path>) -> Result<ComplexityReport> {
    config.validate()?;
    let report = ComplexityReport::for_config(config, batch_slots);
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("complexity.txt"), report.to_text())?;
        fs::write(dir.join("complexity.json"), report.to_json()? + "\n")?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algo_names_round_trip() {
        for a in Algo::ALL {
            assert_eq!(a.label().parse::<Algo>().unwrap(), a);
        }
        assert!("ddpg".parse::<Algo>().is_err());
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = ScenarioConfig::micro();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&a.clone()).unwrap());
        let b = ScenarioConfig { seed: 1, ..a.clone() };
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
    }

    #[test]
    fn bench_table_has_every_cell() {
        let cfg = ScenarioConfig { slots_per_episode: 20, ..ScenarioConfig::micro() };
        let cells = bench(&[cfg], &[Algo::Random, Algo::Hdrl], &[0]).unwrap();
        assert_eq!(cells.len(), 2);
        assert!(cells.iter().all(|c| c.mean_latency_s.unwrap() > 0.0));
        let text = bench_table_text(&cells);
        assert_eq!(text.lines().count(), 3);
    }
}
