// SPDX-License-Identifier: MIT OR Apache-2.0

//! `pwbandits`: benchmark runner and detector checks.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad arguments,
//! configs or environments), 2 on runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pwbandits::harness::{
    check_assumptions, default_tunings, emit_results, run_experiment, ExperimentConfig,
    OutputFormat, Verdict,
};
use pwbandits::env::{load_env, PiecewiseEnv};
use pwbandits::kl::{beta_threshold, ThresholdFamily};
use pwbandits::policies::RestartMode;
use pwbandits::statcheck::{detection_delay, false_alarm_rate, two_sample_tail, TrialConfig};
use pwbandits::{Error, Result};

#[derive(Parser)]
#[command(name = "pwbandits", version, about = "Piece-wise stationary bandit benchmarks")]
struct Cli {
    /// Print machine-readable JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Threshold {
    Full,
    Practical,
    Infinite,
}

impl From<Threshold> for ThresholdFamily {
    fn from(t: Threshold) -> Self {
        match t {
            Threshold::Full => Self::Full,
            Threshold::Practical => Self::Practical,
            Threshold::Infinite => Self::Infinite,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Local,
    Global,
}

impl From<Mode> for RestartMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Local => Self::Local,
            Mode::Global => Self::Global,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => Self::Csv,
            Format::Json => Self::Json,
            Format::Both => Self::Both,
        }
    }
}

#[derive(clap::Args)]
struct DetectorArgs {
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, value_enum, default_value = "full")]
    threshold: Threshold,
    /// Test every `dn` samples.
    #[arg(long, default_value_t = 1)]
    dn: usize,
    /// Scan every `ds`-th split.
    #[arg(long, default_value_t = 1)]
    ds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a benchmark config and write curves and summaries.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallel: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Check the breakpoint spacing conditions for given (alpha, delta).
    CheckAssumptions {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum, default_value = "full")]
        threshold: Threshold,
    },
    /// Theory-driven (alpha, delta) for an environment.
    Tunings {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        known_upsilon: bool,
        #[arg(long, value_enum, default_value = "global")]
        mode: Mode,
        #[arg(long, default_value_t = 1.0)]
        alpha0: f64,
    },
    /// Empirical false-alarm rate of the GLR test on iid streams.
    FalseAlarm {
        #[arg(long)]
        mu0: f64,
        #[arg(long, default_value_t = 5000)]
        nmax: usize,
        #[command(flatten)]
        det: DetectorArgs,
    },
    /// Detection delay of the GLR test after a single change.
    Delay {
        #[arg(long)]
        mu0: f64,
        #[arg(long)]
        mu1: f64,
        #[arg(long)]
        tau: usize,
        /// Post-change samples per stream.
        #[arg(long, default_value_t = 2000)]
        nmax: usize,
        #[command(flatten)]
        det: DetectorArgs,
    },
    /// Two-sample deviation tail against 2 exp(-2u).
    TwoSample {
        #[arg(long)]
        s: u64,
        #[arg(long)]
        r: u64,
        #[arg(long)]
        mua: f64,
        #[arg(long)]
        mub: f64,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        u: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Runtime(format!("cannot serialize output: {e}")))?;
    println!("{text}");
    Ok(())
}

/// Environment of an experiment config, or of a bare environment file.
fn environment(config: &Path) -> Result<PiecewiseEnv> {
    match ExperimentConfig::load(config) {
        Ok((cfg, base)) => cfg.environment(&base),
        Err(e @ Error::Parse { .. }) => load_env(config).map_err(|_| e),
        Err(e) => Err(e),
    }
}

fn trial(mu0: f64, det: &DetectorArgs) -> TrialConfig {
    let mut cfg = TrialConfig::new(mu0, det.delta, det.threshold.into());
    cfg.repetitions = det.reps;
    cfg.stride_n = det.dn;
    cfg.stride_s = det.ds;
    cfg.seed = det.seed;
    cfg
}

fn verdict(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
        Verdict::NotCheckable => "not checkable",
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run {
            config,
            reps,
            seed,
            out,
            parallel,
            format,
        } => {
            let (mut cfg, base) = ExperimentConfig::load(&config)?;
            if let Some(r) = reps {
                cfg.repetitions = r;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(p) = parallel {
                cfg.parallel = p;
            }
            if let Some(f) = format {
                cfg.format = f.into();
            }
            cfg.validate()?;
            let out = out.or_else(|| cfg.output_dir.as_ref().map(|d| base.join(d)));
            cfg.keep_curves = out.is_some();
            let env = cfg.environment(&base)?;
            let res = run_experiment(&cfg, &env)?;
            let written = match &out {
                Some(dir) => emit_results(&res, dir, cfg.format)?,
                None => Vec::new(),
            };
            if cli.json {
                return json(&res);
            }
            println!(
                "T = {}, K = {}, {} repetitions, seed {}",
                res.horizon,
                env.arms(),
                cfg.repetitions,
                cfg.base_seed
            );
            println!(
                "{:<24} {:>12} {:>10} {:>10} {:>10} {:>10}",
                "algorithm", "regret", "std", "restarts", "ms/run", "viol."
            );
            for a in &res.algorithms {
                let viol = a.sampling_violations.map_or("-".into(), |v| v.to_string());
                println!(
                    "{:<24} {:>12.2} {:>10.2} {:>10.2} {:>10.2} {:>10}",
                    a.algorithm,
                    a.mean_final_regret,
                    a.std_final_regret,
                    a.mean_restarts,
                    a.mean_wall_ms,
                    viol
                );
            }
            for p in written {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Cmd::CheckAssumptions {
            config,
            alpha,
            delta,
            threshold,
        } => {
            let env = environment(&config)?;
            let rep = check_assumptions(&env, alpha, delta, threshold.into())?;
            if cli.json {
                return json(&rep);
            }
            println!("alpha = {alpha}, delta = {delta}, beta(T) = {:.4}", rep.beta);
            println!("{:<8} {:>6} {:>8} {:>8} {:>8} {:>10} {:>10}  ok", "arm", "k", "time", "prev", "gap", "d", "required");
            for c in rep.breakpoints.iter().chain(&rep.arm_changes) {
                let arm = c.arm.map_or("all".into(), |a| (a + 1).to_string());
                println!(
                    "{:<8} {:>6} {:>8} {:>8} {:>8.3} {:>10} {:>10}  {}",
                    arm,
                    c.index,
                    c.time,
                    c.previous_time,
                    c.gap,
                    c.delay,
                    c.required,
                    if c.ok { "yes" } else { "NO" }
                );
            }
            println!("global restarts: {}", verdict(rep.global));
            println!("local restarts:  {}", verdict(rep.local));
            println!("violations: {}", rep.violations());
            Ok(())
        }
        Cmd::Tunings {
            config,
            known_upsilon,
            mode,
            alpha0,
        } => {
            let meta = environment(&config)?.metadata();
            let t = default_tunings(&meta, known_upsilon, mode.into(), alpha0)?;
            if cli.json {
                return json(&t);
            }
            println!("T = {}, K = {}, breakpoints = {}", meta.horizon, meta.arms, meta.upsilon);
            println!("alpha = {:.6}", t.alpha);
            println!("delta = {:.6}", t.delta);
            Ok(())
        }
        Cmd::FalseAlarm { mu0, nmax, det } => {
            let mut cfg = trial(mu0, &det);
            cfg.n_max = nmax;
            let r = false_alarm_rate(&cfg)?;
            if cli.json {
                return json(&r);
            }
            println!("mu0 = {mu0}, n_max = {nmax}, delta = {}", det.delta);
            println!("alarms    {} / {}", r.alarms, r.repetitions);
            println!("rate      {:.5} (se {:.5})", r.rate, r.std_error);
            println!("95% CI    [{:.5}, {:.5}]", r.ci_low, r.ci_high);
            println!("rate <= delta: {}", if r.rate <= det.delta { "yes" } else { "NO" });
            Ok(())
        }
        Cmd::Delay {
            mu0,
            mu1,
            tau,
            nmax,
            det,
        } => {
            let mut cfg = trial(mu0, &det).with_change(mu1, tau);
            cfg.n_max = nmax;
            let r = detection_delay(&cfg)?;
            if cli.json {
                return json(&r);
            }
            let q = |v: Option<usize>| v.map_or("-".into(), |d| d.to_string());
            println!("mu0 = {mu0} -> mu1 = {mu1} at tau = {tau}, delta = {}", det.delta);
            println!("detected  {}", r.delays.len());
            println!("early     {}", r.early);
            println!("missed    {} ({:.2}%)", r.misses, 100.0 * r.miss_rate);
            println!("median    {}", q(r.median));
            println!("p95       {}", q(r.p95));
            let gap = mu1 - mu0;
            if gap != 0.0 {
                let b = beta_threshold(tau as u64 + nmax as u64, det.delta, det.threshold.into());
                println!("4 beta / gap^2 = {:.1}", 4.0 * b / (gap * gap));
            }
            Ok(())
        }
        Cmd::TwoSample {
            s,
            r,
            mua,
            mub,
            reps,
            u,
            seed,
        } => {
            let pts = two_sample_tail(s, r, mua, mub, &u, reps, seed)?;
            if cli.json {
                return json(&pts);
            }
            println!("{:>8} {:>12} {:>12} {:>10}  ok", "u", "empirical", "bound", "se");
            for p in &pts {
                println!(
                    "{:>8} {:>12.6} {:>12.6} {:>10.6}  {}",
                    p.u,
                    p.empirical,
                    p.bound,
                    p.std_error,
                    if p.ok { "yes" } else { "NO" }
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
