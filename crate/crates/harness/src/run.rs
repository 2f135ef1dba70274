//! Training, evaluation, specialization statistics and sweeps, each
//! writing its artifacts under the run directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use blowsim_core::action::Action;
use blowsim_core::agent::STATE_CHANNELS;
use blowsim_core::agent::{evaluate as rollout, BlowingEnv, Environment, EvalEpisode, Policy, StepOutcome, Trainer};
use blowsim_core::grid::Grid;
use blowsim_core::mapping::{OverheadCell, StateTensor};
use blowsim_core::nn::{Architecture, QNetwork};

use crate::checkpoint;
use crate::config::{Resolved, RunConfig};
use crate::pgm;

#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    pub debug_maps: bool,
    /// Print progress lines to stderr.
    pub verbose: bool,
}

/// Directory of one seed of a configuration.
pub fn seed_dir(res: &Resolved, seed: u64) -> PathBuf {
    res.out_dir.join(format!("seed_{seed}"))
}

pub fn checkpoint_path(dir: &Path, level: usize) -> PathBuf {
    dir.join(format!("level{level}.ckpt"))
}

pub fn architecture(res: &Resolved) -> Architecture {
    Architecture::reduced(STATE_CHANNELS, res.variant().num_channels())
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub dir: PathBuf,
    pub iterations: u64,
    pub env_steps: u64,
    pub episodes: usize,
    pub seconds: f64,
}

/// Trains one seed and writes `config.toml`, `train_log.csv`,
/// `episodes.csv` and one checkpoint per level.
pub fn train(res: &Resolved, seed: u64, opts: Options) -> Result<TrainSummary> {
    let dir = seed_dir(res, seed);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut snapshot = res.config.clone();
    snapshot.seeds = vec![seed];
    fs::write(dir.join("config.toml"), snapshot.to_toml())?;

    let start = Instant::now();
    let mut env = BlowingEnv::new(res.env.clone())?;
    let mut trainer = Trainer::new(res.trainer, res.variant().num_channels(), res.crop, seed);
    let mut log = csv::Writer::from_path(dir.join("train_log.csv"))?;
    log.write_record(["iteration", "level", "loss", "epsilon", "env_steps"])?;
    let mut write_err = None;
    let total = res.trainer.total_iterations;
    let verbose = opts.verbose;
    let trace = trainer.train(&mut env, &mut |r| {
        let row = [
            r.iteration.to_string(),
            r.level.to_string(),
            r.loss.to_string(),
            r.epsilon.to_string(),
            r.env_steps.to_string(),
        ];
        if let Err(e) = log.write_record(&row) {
            write_err.get_or_insert(e);
        }
        if verbose && r.level == 0 && (r.iteration + 1) % 100 == 0 {
            eprintln!(
                "  iteration {}/{total} loss {:.4} eps {:.3}",
                r.iteration + 1,
                r.loss,
                r.epsilon
            );
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    log.flush()?;

    let mut eps = csv::Writer::from_path(dir.join("episodes.csv"))?;
    eps.write_record(["episode", "return"])?;
    for (i, r) in trace.episode_returns.iter().enumerate() {
        eps.write_record([i.to_string(), r.to_string()])?;
    }
    eps.flush()?;
    for (l, net) in trainer.networks().into_iter().enumerate() {
        checkpoint::save(&checkpoint_path(&dir, l), net, l as u32)?;
    }
    Ok(TrainSummary {
        dir,
        iterations: trainer.iteration,
        env_steps: trainer.env_steps,
        episodes: trace.episode_returns.len(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn load_networks(res: &Resolved, seed: u64) -> Result<Vec<QNetwork<f32>>> {
    let dir = seed_dir(res, seed);
    let arch = architecture(res);
    (0..res.schedule().n)
        .map(|l| checkpoint::load(&checkpoint_path(&dir, l), &arch))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalPolicy {
    Trained,
    Random,
}

#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub seed: u64,
    pub episodes: Vec<EvalEpisode>,
}

impl EvalSummary {
    pub fn objects(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.objects() as f64).collect()
    }

    pub fn mean_objects(&self) -> f64 {
        mean(&self.objects())
    }

    /// Mean over episodes of the step at which `target` objects were in;
    /// episodes that never got there count as `budget + 1`.
    pub fn mean_steps_to(&self, target: usize, budget: usize) -> f64 {
        let v: Vec<f64> = self
            .episodes
            .iter()
            .map(|e| e.steps_to(target).unwrap_or(budget + 1) as f64)
            .collect();
        mean(&v)
    }

    /// Fraction of each channel per level, pooled over episodes.
    pub fn channel_fractions(&self) -> Vec<Vec<f64>> {
        let levels = self.episodes.first().map_or(0, |e| e.channel_counts.len());
        (0..levels)
            .map(|l| {
                let mut tot = vec![0usize; self.episodes[0].channel_counts[l].len()];
                for e in &self.episodes {
                    for (t, c) in tot.iter_mut().zip(&e.channel_counts[l]) {
                        *t += c;
                    }
                }
                let n: usize = tot.iter().sum();
                tot.iter()
                    .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
                    .collect()
            })
            .collect()
    }
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Records the robot cell after every step and dumps maps at episode end.
struct MapRecorder<'a> {
    inner: BlowingEnv,
    dir: &'a Path,
    episode: Option<usize>,
    trail: Vec<(isize, isize)>,
}

impl MapRecorder<'_> {
    fn dump(&self) -> Result<()> {
        let Some(e) = self.episode else {
            return Ok(());
        };
        let maps = self.inner.maps();
        let (w, h) = (maps.overhead.width(), maps.overhead.height());
        let over: Vec<u8> = maps.overhead.as_slice().iter().map(|c| c.code()).collect();
        pgm::write_grid(&self.dir.join(format!("ep{e}_overhead.pgm")), w, h, &over)?;
        let occ: Vec<u8> = maps
            .occupancy
            .as_slice()
            .iter()
            .map(|o| match o {
                blowsim_core::mapping::Occupancy::Free => 255,
                blowsim_core::mapping::Occupancy::Occupied => 0,
                blowsim_core::mapping::Occupancy::Unknown => 128,
            })
            .collect();
        pgm::write_grid(&self.dir.join(format!("ep{e}_occupancy.pgm")), w, h, &occ)?;
        let mut trail: Grid<u8> = maps.overhead.map(|c| {
            if *c == OverheadCell::Unobserved {
                0
            } else {
                c.code() / 2
            }
        });
        for &(r, c) in &self.trail {
            trail.set(blowsim_core::grid::Cell::new(r, c), 255);
        }
        pgm::write_grid(&self.dir.join(format!("ep{e}_trajectory.pgm")), w, h, trail.as_slice())
    }

    fn mark(&mut self) {
        let w = self.inner.world();
        let c = w.layout.grid.cell_at(w.robot.position());
        self.trail.push((c.row, c.col));
    }
}

impl Environment for MapRecorder<'_> {
    fn channels(&self) -> usize {
        self.inner.channels()
    }

    fn crop(&self) -> usize {
        self.inner.crop()
    }

    fn reset(&mut self, seed: u64) -> blowsim_core::Result<StateTensor> {
        self.dump().map_err(|e| blowsim_core::Error::Config(e.to_string()))?;
        self.episode = Some(self.episode.map_or(0, |e| e + 1));
        let s = self.inner.reset(seed)?;
        self.trail.clear();
        self.mark();
        Ok(s)
    }

    fn step(&mut self, a: Action) -> blowsim_core::Result<StepOutcome> {
        let o = self.inner.step(a)?;
        self.mark();
        Ok(o)
    }
}

/// Greedy (or uniformly random) rollouts of one seed; writes the eval
/// curve CSV (`eval_curve.csv` or `eval_random.csv`).
pub fn evaluate(res: &Resolved, seed: u64, policy: EvalPolicy, opts: Options) -> Result<EvalSummary> {
    let dir = seed_dir(res, seed);
    fs::create_dir_all(&dir)?;
    let nets;
    let pol = match policy {
        EvalPolicy::Trained => {
            nets = load_networks(res, seed)?;
            Policy::Greedy {
                networks: nets.iter().collect(),
                schedule: res.schedule(),
            }
        }
        EvalPolicy::Random => Policy::Random,
    };
    let env = BlowingEnv::new(res.env.clone())?;
    let episodes = if opts.debug_maps {
        let maps_dir = dir.join(match policy {
            EvalPolicy::Trained => "maps",
            EvalPolicy::Random => "maps_random",
        });
        fs::create_dir_all(&maps_dir)?;
        let mut rec = MapRecorder {
            inner: env,
            dir: &maps_dir,
            episode: None,
            trail: Vec::new(),
        };
        let eps = rollout(&mut rec, &pol, res.eval_episodes, res.eval_max_steps, seed)?;
        rec.dump()?;
        eps
    } else {
        let mut env = env;
        rollout(&mut env, &pol, res.eval_episodes, res.eval_max_steps, seed)?
    };
    let name = match policy {
        EvalPolicy::Trained => "eval_curve.csv",
        EvalPolicy::Random => "eval_random.csv",
    };
    let mut w = csv::Writer::from_path(dir.join(name))?;
    w.write_record(["seed", "episode", "step", "objects"])?;
    for e in &episodes {
        w.write_record([seed.to_string(), e.episode.to_string(), "0".into(), "0".into()])?;
        for (i, c) in e.curve.iter().enumerate() {
            w.write_record([
                seed.to_string(),
                e.episode.to_string(),
                (i + 1).to_string(),
                c.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(EvalSummary { seed, episodes })
}

/// Per-level channel fractions of the greedy policy; writes
/// `specialization.csv` with one row per level and channel.
pub fn specialization_stats(res: &Resolved, seed: u64, opts: Options) -> Result<Vec<Vec<f64>>> {
    if res.schedule().n < 2 {
        bail!("specialization statistics need at least two levels");
    }
    let summary = evaluate(res, seed, EvalPolicy::Trained, opts)?;
    let fr = summary.channel_fractions();
    let mut w = csv::Writer::from_path(seed_dir(res, seed).join("specialization.csv"))?;
    w.write_record(["level", "channel", "fraction"])?;
    for (l, row) in fr.iter().enumerate() {
        for (c, f) in row.iter().enumerate() {
            w.write_record([l.to_string(), c.to_string(), f.to_string()])?;
        }
    }
    w.flush()?;
    Ok(fr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: String,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

/// Trains and evaluates every seed at every axis value, then writes
/// `sweep_summary.csv` to the base output directory. Each point's mean is
/// over per-seed mean objects collected.
pub fn sweep(base: &RunConfig, axis: &str, values: &[String], opts: Options) -> Result<Vec<SweepRow>> {
    let root = PathBuf::from(&base.out_dir);
    let mut rows = Vec::new();
    for v in values {
        let mut cfg = base.clone();
        cfg.set(axis, v)?;
        cfg.out_dir = root.join(format!("{axis}_{v}")).to_string_lossy().into_owned();
        let res = cfg.resolve()?;
        let mut per_seed = Vec::new();
        for &seed in &res.config.seeds {
            if opts.verbose {
                eprintln!("{axis} = {v}, seed {seed}");
            }
            train(&res, seed, opts)?;
            per_seed.push(evaluate(&res, seed, EvalPolicy::Trained, opts)?.mean_objects());
        }
        rows.push(SweepRow {
            axis_value: v.clone(),
            mean: mean(&per_seed),
            std: std_dev(&per_seed),
            seeds: per_seed.len(),
        });
    }
    fs::create_dir_all(&root)?;
    let mut w = csv::Writer::from_path(root.join("sweep_summary.csv"))?;
    w.write_record(["axis_value", "mean", "std", "seeds"])?;
    for r in &rows {
        w.write_record([
            r.axis_value.clone(),
            r.mean.to_string(),
            r.std.to_string(),
            r.seeds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}
