mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use garl_core::engine::run_campaign;
use garl_core::persist::{self, REWARD_CURVE};
use garl_core::rl::{random_policy_baseline, train_surrogate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::{ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "garl", version, about = "Falsification campaigns against UAV marker-landing systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    sut: Option<String>,
    #[arg(long)]
    budget: Option<usize>,
    /// Master seed (GARL_SEED takes precedence).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Weights file written by `train` and read by `run`.
    #[arg(long)]
    weights: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let o = Overrides {
            method: self.method.clone(),
            map: self.map.clone(),
            sut: self.sut.clone(),
            budget: self.budget,
            seed: self.seed,
            reps: self.reps,
            out: self.out.clone(),
            jobs: self.jobs,
            weights: self.weights.clone(),
        };
        ExperimentConfig::load(self.config.as_deref(), &o)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the object-steering DQN in the surrogate environment.
    Train(Common),
    /// Run campaign repetitions and write one directory per repetition.
    Run(Common),
    /// Compare campaign directories and emit plot data.
    Report {
        /// Campaign directories (or parents holding rep_* directories).
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "garl-report")]
        out: PathBuf,
    },
    /// Narrate a trace file and classify it.
    Replay { trace: PathBuf },
}

fn cmd_train(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (net, curve) = train_surrogate(&cfg.train, &mut rng)?;
    persist::save_weights(&cfg.weights, &net)?;
    let curve_path = cfg.weights.with_file_name(REWARD_CURVE);
    persist::write_reward_curve(&curve_path, &curve)?;
    let baseline = random_policy_baseline(200, &mut ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed))?;
    let tail: Vec<f64> = curve.iter().rev().take(100).map(|s| s.reward).collect();
    let tail_mean = if tail.is_empty() { 0.0 } else { tail.iter().sum::<f64>() / tail.len() as f64 };
    println!("weights: {} (sha256 {})", cfg.weights.display(), net.checksum());
    println!("reward curve: {}", curve_path.display());
    println!(
        "episodes {}; trailing-100 mean reward {tail_mean:.3}; random policy {baseline:.3}",
        curve.len()
    );
    Ok(())
}

fn cmd_run(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let method = cfg.method()?;
    let weights = if method.needs_weights() {
        if !cfg.weights.exists() {
            bail!(
                "method {method} needs trained weights but {} does not exist; run `garl train` first",
                cfg.weights.display()
            );
        }
        Some(persist::load_weights(&cfg.weights)?)
    } else {
        None
    };
    let curve_path = cfg.weights.with_file_name(REWARD_CURVE);
    let curve = match (&weights, curve_path.exists()) {
        (Some(_), true) => Some(persist::read_reward_curve(&curve_path)?),
        _ => None,
    };
    for rep in 0..cfg.repetitions {
        let campaign = cfg.campaign(rep)?;
        let result = run_campaign(&campaign, weights.as_ref(), cfg.jobs)?;
        let dir = cfg.out.join(format!("rep_{rep}"));
        persist::write_campaign(&dir, &result, weights.as_ref().map(|w| w.checksum()), curve.as_deref())?;
        let m = &result.metrics;
        println!(
            "{} rep {rep} seed {}: violations {:.2}% top-10 {} parameter distance {:.4} coverage {:.3}% -> {}",
            method,
            campaign.seed,
            m.violation_pct,
            m.top_10.map(|k| k.to_string()).unwrap_or_else(|| "cannot find".into()),
            m.parameter_distance,
            m.coverage_pct,
            dir.display()
        );
    }
    Ok(())
}

fn campaign_dirs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for d in inputs {
        if d.join(persist::MANIFEST).exists() {
            out.push(d.clone());
            continue;
        }
        let mut subs: Vec<PathBuf> = std::fs::read_dir(d)
            .with_context(|| format!("reading {}", d.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(persist::MANIFEST).exists())
            .collect();
        if subs.is_empty() {
            bail!("{} holds no campaign manifest", d.display());
        }
        subs.sort();
        out.extend(subs);
    }
    Ok(out)
}

fn cmd_report(dirs: &[PathBuf], out: &Path) -> Result<()> {
    if dirs.is_empty() {
        bail!("report needs at least one campaign directory");
    }
    let dirs = campaign_dirs(dirs)?;
    let rows = persist::write_report(&dirs, out)?;
    println!("method,sut,map,reps,violation_pct,top_10,parameter_distance,coverage_pct");
    let mut footnotes = 0;
    for r in &rows {
        let top = match r.top_10 {
            Some(k) if r.top_10_not_found > 0 => {
                footnotes += r.top_10_not_found;
                format!("{k:.1}*")
            }
            Some(k) => format!("{k:.1}"),
            None => "cannot find".into(),
        };
        println!(
            "{},{},{},{},{:.2},{},{:.4},{:.3}",
            r.method, r.sut, r.map, r.repetitions, r.violation_pct, top, r.parameter_distance, r.coverage_pct
        );
    }
    if footnotes > 0 {
        println!("* mean excludes {footnotes} repetition(s) that could not find 10 violations");
    }
    println!("tables and plot data written to {}", out.display());
    Ok(())
}

fn cmd_replay(path: &Path) -> ExitCode {
    let trace = match persist::read_trace(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let (text, record) = persist::narrate(&trace);
    print!("{text}");
    if record.is_some() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(c) => cmd_train(c),
        Command::Run(c) => cmd_run(c),
        Command::Report { dirs, out } => cmd_report(dirs, out),
        Command::Replay { trace } => return cmd_replay(trace),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
