use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spectrum_lab::harness::{self, Algo, TrainOptions};
use spectrum_lab::rl::PpoConfig;
use spectrum_lab::topology::{Hierarchy, ScenarioConfig};
use spectrum_lab::{Error, Result};

#[derive(Parser)]
#[command(name = "spectrum-lab", version, about = "Hierarchical spectrum sharing simulator and training harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in scenario when no file is given: sag, ag, uav, micro, micro-ag, micro-uav.
    #[arg(long, default_value = "micro")]
    preset: String,
    /// Largest joint action space the exhaustive baseline will enumerate.
    #[arg(long, value_name = "N")]
    exhaustive_cap: Option<u128>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a learned controller and write its reward curve and checkpoints.
    Train {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "hdrl")]
        algo: String,
        #[arg(long, default_value_t = 1500)]
        episodes: usize,
        /// Run seed; only the first entry is used.
        #[arg(long, default_value = "0")]
        seeds: String,
        #[arg(long, default_value = "runs/train")]
        out: PathBuf,
        /// Episodes before the plateau rule may stop training.
        #[arg(long, default_value_t = 0)]
        min_episodes: usize,
        /// Keep training to the episode budget even after a plateau.
        #[arg(long)]
        no_early_stop: bool,
        /// PPO hyperparameters as JSON.
        #[arg(long, value_name = "PATH")]
        ppo: Option<PathBuf>,
    },
    /// Evaluate a checkpoint or a baseline with greedy actions.
    Eval {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "hdrl")]
        algo: String,
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "0")]
        seeds: String,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        #[arg(long, default_value = "runs/eval")]
        out: PathBuf,
    },
    /// Measure per-slot decision latency of each algorithm on each hierarchy.
    Bench {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated algorithms; defaults to all five.
        #[arg(long)]
        algo: Option<String>,
        /// Hierarchies to cover when no config file is given.
        #[arg(long, default_value = "sag,ag,uav")]
        hierarchies: String,
        /// Use the default-scale presets instead of the micro ones.
        #[arg(long)]
        full_scale: bool,
        #[arg(long, default_value = "0")]
        seeds: String,
        #[arg(long, default_value = "runs/bench")]
        out: PathBuf,
    },
    /// Print decision-space sizes and cost estimates.
    Complexity {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 2000)]
        batch_slots: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn preset(name: &str) -> Result<ScenarioConfig> {
    let lower = name.to_ascii_lowercase();
    match lower.strip_prefix("micro") {
        Some("") => Ok(ScenarioConfig::micro()),
        Some(rest) => Ok(ScenarioConfig::micro_for(rest.trim_start_matches(['-', '_']).parse()?)),
        None => Ok(ScenarioConfig::preset(lower.parse()?)),
    }
}

fn scenario(args: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => preset(&args.preset)?,
    };
    if let Some(cap) = args.exhaustive_cap {
        cfg.exhaustive_cap = cap;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `0,3,5` or `0..20` (end exclusive), or a mix.
fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("invalid seed list {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            out.extend(a..b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn load_ppo(path: Option<&Path>) -> Result<PpoConfig> {
    let cfg = match path {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => PpoConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    harness::init_threads();
    match cli.command {
        Command::Train { scenario: sc, algo, episodes, seeds, out, min_episodes, no_early_stop, ppo } => {
            let cfg = scenario(&sc)?;
            let algo: Algo = algo.parse()?;
            let seed = parse_seeds(&seeds)?[0];
            let opts = TrainOptions { episodes, min_episodes, stop_on_convergence: !no_early_stop, seed, ppo: load_ppo(ppo.as_deref())? };
            let outcome = harness::cmd_train(&cfg, algo, &opts, &out)?;
            let last = outcome.curve.last().map_or(0.0, |r| r.raw_reward);
            match outcome.converged_at {
                Some(ep) => println!("{algo}: {} episodes, plateau at episode {ep}, last reward {last:.6}", outcome.curve.len()),
                None => println!("{algo}: {} episodes, no plateau, last reward {last:.6}", outcome.curve.len()),
            }
            println!("outputs in {}", out.display());
        }
        Command::Eval { scenario: sc, algo, checkpoint, seeds, episodes, out } => {
            let cfg = scenario(&sc)?;
            let algo: Algo = algo.parse()?;
            let rows = harness::cmd_eval(&cfg, algo, checkpoint.as_deref(), &parse_seeds(&seeds)?, episodes, &out)?;
            let mut text = Vec::new();
            harness::write_summary_csv(&rows, &mut text)?;
            print!("{}", String::from_utf8_lossy(&text));
        }
        Command::Bench { scenario: sc, algo, hierarchies, full_scale, seeds, out } => {
            let algos: Vec<Algo> = match algo {
                Some(list) => list.split(',').map(str::parse).collect::<Result<_>>()?,
                None => Algo::ALL.to_vec(),
            };
            let configs = if sc.config.is_some() {
                vec![scenario(&sc)?]
            } else {
                hierarchies
                    .split(',')
                    .map(|h| {
                        let h: Hierarchy = h.trim().parse()?;
                        let mut cfg = if full_scale { ScenarioConfig::preset(h) } else { ScenarioConfig::micro_for(h) };
                        if let Some(cap) = sc.exhaustive_cap {
                            cfg.exhaustive_cap = cap;
                        }
                        Ok(cfg)
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            let cells = harness::cmd_bench(&configs, &algos, &parse_seeds(&seeds)?, &out)?;
            print!("{}", harness::bench_table_text(&cells));
        }
        Command::Complexity { scenario: sc, batch_slots, out } => {
            let report = harness::cmd_complexity(&scenario(&sc)?, batch_slots, out.as_deref())?;
            print!("{}", report.to_text());
            println!("{}", report.to_json()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
