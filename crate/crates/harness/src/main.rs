use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use blowsim::run::{self, EvalPolicy, Options};
use blowsim::{Preset, RunConfig};

#[derive(Parser)]
#[command(name = "blowsim", about = "Train and evaluate object-blowing agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run only this seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `desk` or `paper`.
    #[arg(long)]
    preset: Option<Preset>,
    /// Dump overhead, occupancy and trajectory maps as PGM after each
    /// evaluation episode.
    #[arg(long)]
    debug_maps: bool,
    /// Extra `key=value` overrides applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed, then evaluate the greedy policy.
    Train(Common),
    /// Evaluate saved checkpoints (or a random policy).
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        random: bool,
    },
    /// Train and evaluate over values of one config key.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: String,
        /// Comma separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Per-level action-channel fractions of saved multi-level policies.
    Stats(Common),
}

fn load(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = c.preset {
        cfg.preset = p;
    }
    if let Some(s) = c.seed {
        cfg.seeds = vec![s];
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.to_string_lossy().into_owned();
    }
    for kv in &c.overrides {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("override {kv:?} is not key=value"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn opts(c: &Common) -> Options {
    Options {
        debug_maps: c.debug_maps,
        verbose: true,
    }
}

fn print_eval(seed: u64, s: &run::EvalSummary) {
    let o = s.objects();
    println!(
        "seed {seed}: objects {:.2} ± {:.2} over {} episodes",
        run::mean(&o),
        run::std_dev(&o),
        o.len()
    );
}

fn real_main(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => {
            let res = load(&c)?.resolve()?;
            let mut per_seed = Vec::new();
            for &seed in &res.config.seeds {
                let t = run::train(&res, seed, opts(&c))?;
                println!(
                    "seed {seed}: {} iterations, {} env steps, {} episodes in {:.0}s -> {}",
                    t.iterations,
                    t.env_steps,
                    t.episodes,
                    t.seconds,
                    t.dir.display()
                );
                let e = run::evaluate(&res, seed, EvalPolicy::Trained, opts(&c))?;
                print_eval(seed, &e);
                per_seed.push(e.mean_objects());
            }
            println!(
                "mean over seeds: {:.2} ± {:.2}",
                run::mean(&per_seed),
                run::std_dev(&per_seed)
            );
        }
        Command::Eval { common, random } => {
            let res = load(&common)?.resolve()?;
            let policy = if random {
                EvalPolicy::Random
            } else {
                EvalPolicy::Trained
            };
            let mut per_seed = Vec::new();
            for &seed in &res.config.seeds {
                let e = run::evaluate(&res, seed, policy, opts(&common))?;
                print_eval(seed, &e);
                per_seed.push(e.mean_objects());
            }
            println!(
                "mean over seeds: {:.2} ± {:.2}",
                run::mean(&per_seed),
                run::std_dev(&per_seed)
            );
        }
        Command::Sweep { common, axis, values } => {
            let cfg = load(&common)?;
            for r in run::sweep(&cfg, &axis, &values, opts(&common))? {
                println!(
                    "{axis} = {}: {:.2} ± {:.2} ({} seeds)",
                    r.axis_value, r.mean, r.std, r.seeds
                );
            }
        }
        Command::Stats(c) => {
            let res = load(&c)?.resolve()?;
            for &seed in &res.config.seeds {
                let fr = run::specialization_stats(&res, seed, opts(&c))?;
                for (l, row) in fr.iter().enumerate() {
                    let cells: Vec<String> = row.iter().map(|f| format!("{f:.3}")).collect();
                    println!("seed {seed} level {l}: {}", cells.join(" "));
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
