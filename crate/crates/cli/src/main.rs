use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use semiheat_core::barriers::BarrierError;
use semiheat_core::config::{ConfigError, RunConfig};
use semiheat_core::experiments::{self as exp, EvolutionJob, ExperimentError, JobOutcome};
use semiheat_core::export::write_json;
use semiheat_core::parabolic::Fate;
use semiheat_core::shooting::Classification;
use semiheat_core::PotentialSpec;

#[derive(Debug, Parser)]
#[command(name = "semiheat", version, about = "Stationary profiles, barriers and radial heat-flow experiments")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and paired runs; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Dotted override such as `experiment.tau=1`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Critical exponents and the H/A sign verdicts.
    Exponents,
    /// One regular profile from `experiment.alpha`.
    Shoot,
    /// Classify the regular profiles for every `experiment.alphas`.
    ClassifySweep,
    /// Phase-portrait bundle: trajectories, Pohozaev level sets, fixed points.
    Portrait,
    /// Build and verify the configured barrier family.
    Barriers,
    /// Evolve the configured initial data.
    Evolve,
    /// Evolve both barriers and require decay above, blow-up below.
    Dichotomy,
    /// Small Gaussian data on a wide grid.
    Fujita,
}

impl Command {
    fn dir_name(self) -> &'static str {
        match self {
            Self::Exponents => "exponents",
            Self::Shoot => "shoot",
            Self::ClassifySweep => "classify-sweep",
            Self::Portrait => "portrait",
            Self::Barriers => "barriers",
            Self::Evolve => "evolve",
            Self::Dichotomy => "dichotomy",
            Self::Fujita => "fujita",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok,
    Usage,
    Inconclusive,
    Failed,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Self::Ok => 0,
            Self::Usage => 1,
            Self::Inconclusive => 2,
            Self::Failed => 3,
        }
    }
}

fn error_status(err: &anyhow::Error) -> Status {
    if err.downcast_ref::<ConfigError>().is_some() {
        return Status::Usage;
    }
    match err.downcast_ref::<ExperimentError>() {
        Some(ExperimentError::Config(_) | ExperimentError::Potential(_) | ExperimentError::Io(_)) => Status::Usage,
        Some(ExperimentError::Barrier(BarrierError::Parameters(..))) => Status::Usage,
        Some(_) => Status::Inconclusive,
        None => Status::Usage,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Usage.code() } else { 0 });
        }
    };
    match run(&cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(error_status(&err).code())
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Status> {
    let path = cli.config.as_deref().ok_or_else(|| anyhow::anyhow!("--config PATH is required"))?;
    let mut cfg = RunConfig::load(path, &cli.overrides)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    let spec = cfg.spec()?;
    let dir = cfg.output.dir.join(cli.command.dir_name());
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json(&dir.join("config.json"), &cfg)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build()?;
    let status = match cli.command {
        Command::Exponents => exponents(&spec, &dir)?,
        Command::Shoot => shoot(&spec, &cfg, &dir)?,
        Command::ClassifySweep => pool.install(|| classify_sweep(&spec, &cfg, &dir))?,
        Command::Portrait => portrait(&spec, &cfg, &dir)?,
        Command::Barriers => barriers(&spec, &cfg, &dir)?,
        Command::Evolve => evolve(&spec, &cfg, &dir)?,
        Command::Dichotomy => pool.install(|| dichotomy(&spec, &cfg, &dir))?,
        Command::Fujita => fujita(&spec, &cfg, &dir)?,
    };
    Ok(status)
}

fn exponents(spec: &PotentialSpec, dir: &Path) -> Result<Status, ExperimentError> {
    let report = exp::exponents(spec)?;
    report.write(dir)?;
    print!("{}", report.table());
    Ok(Status::Ok)
}

fn shoot(spec: &PotentialSpec, cfg: &RunConfig, dir: &Path) -> Result<Status, ExperimentError> {
    let profile = exp::shoot(spec, cfg.experiment.alpha, &cfg.solver)?;
    exp::write_profile(dir, "profile", &profile)?;
    println!("alpha {} -> {}", cfg.experiment.alpha, describe(&profile.classification));
    Ok(if profile.classification == Classification::Undecided { Status::Inconclusive } else { Status::Ok })
}

fn describe(c: &Classification) -> String {
    match c {
        Classification::Crossing { radius } => format!("Crossing at R = {radius:.6}"),
        Classification::GroundStateFast { beta } | Classification::SingularFast { beta } => {
            format!("{} with L = {beta:.6}", c.label())
        }
        _ => c.label().to_string(),
    }
}

fn classify_sweep(spec: &PotentialSpec, cfg: &RunConfig, dir: &Path) -> Result<Status, ExperimentError> {
    let rows = cfg
        .experiment
        .alphas
        .par_iter()
        .map(|&alpha| exp::classify_alpha(spec, alpha, &cfg.solver))
        .collect::<Result<Vec<_>, _>>()?;
    exp::write_sweep(dir, &rows)?;
    for row in &rows {
        println!("alpha {:<10} {}", row.alpha, describe(&row.classification));
    }
    let undecided = rows.iter().any(|r| r.classification == Classification::Undecided);
    Ok(if undecided { Status::Inconclusive } else { Status::Ok })
}

fn portrait(spec: &PotentialSpec, cfg: &RunConfig, dir: &Path) -> Result<Status, ExperimentError> {
    let bundle = exp::portrait(spec, cfg)?;
    bundle.write(dir)?;
    for f in &bundle.fixed_points {
        println!("fixed point {:<9} P = ({:.6}, {:.6}) {:?}", f.label, f.info.p1, f.info.p2, f.info.stability);
    }
    for l in &bundle.levels {
        println!("level b = {:<12.6} {:?} ({} curves)", l.b, l.topology, l.curves.len());
    }
    Ok(Status::Ok)
}

fn barriers(spec: &PotentialSpec, cfg: &RunConfig, dir: &Path) -> Result<Status, ExperimentError> {
    let set = exp::build_barriers(spec, cfg)?;
    let report = exp::barrier_report(&set, (cfg.solver.r_min, cfg.solver.r_max));
    exp::write_barriers(dir, &set, &report)?;
    for b in &report.barriers {
        let m = &b.meta;
        println!(
            "{:<6} D = {}  L = {}  J = {:.6e}  glue radii {:?}  continuity {:.1e}  residual {:.1e}  {}",
            b.role,
            m.center_value.map_or("-".into(), |d| format!("{d:.6}")),
            m.tail_constant.map_or("-".into(), |l| format!("{l:.6}")),
            m.jump,
            m.glue_radii,
            b.report.continuity_error,
            b.report.residual_inner.max(b.report.residual_outer),
            if b.report.passes { "ok" } else { "FAILED" },
        );
    }
    if let Some(ordered) = report.ordered {
        println!("upper <= lower: {ordered}");
    }
    Ok(if report.passes { Status::Ok } else { Status::Failed })
}

fn fate_status(outcomes: &[JobOutcome], passed: bool) -> Status {
    if outcomes.iter().any(|o| !o.result.fate.is_decided()) {
        Status::Inconclusive
    } else if passed {
        Status::Ok
    } else {
        Status::Failed
    }
}

fn print_outcome(o: &JobOutcome) {
    let fate = match o.result.fate {
        Fate::Decayed { t } => format!("Decayed at t = {t:.6e}"),
        Fate::BlowUp { t_est } => format!("BlowUp near T = {t_est:.6e}"),
        Fate::Steady { t } => format!("Steady by t = {t:.6e}"),
        Fate::Undecided { t_end } => format!("Undecided at t = {t_end:.6e}"),
    };
    let verdict = match o.met() {
        Some(true) => "  (as expected)",
        Some(false) => "  (NOT as expected)",
        None => "",
    };
    println!("{:<14} {fate}  after {} steps{verdict}", o.label, o.result.accepted_steps);
}

fn run_jobs(jobs: &[EvolutionJob]) -> Result<Vec<JobOutcome>, ExperimentError> {
    jobs.par_iter().map(EvolutionJob::run).collect()
}

fn evolve(spec: &PotentialSpec, cfg: &RunConfig, dir: &Path) -> Result<Status, ExperimentError> {
    let outcome = exp::evolve_job(spec, cfg)?.run()?;
    outcome.write(dir, cfg.output.series_stride)?;
    print_outcome(&outcome);
    Ok(fate_status(std::slice::from_ref(&outcome), true))
}

fn dichotomy(spec: &PotentialSpec, cfg: &RunConfig, dir: &Path) -> Result<Status, ExperimentError> {
    let (set, jobs) = exp::dichotomy_jobs(spec, cfg)?;
    let outcomes = run_jobs(&jobs)?;
    let report = exp::dichotomy_report(cfg, &set, &outcomes);
    exp::write_barriers(dir, &set, &report.barriers)?;
    for o in &outcomes {
        o.write(&dir.join(&o.label), cfg.output.series_stride)?;
        print_outcome(o);
    }
    write_json(&dir.join("dichotomy.json"), &report)?;
    println!("dichotomy {}", if report.passed { "holds" } else { "FAILED" });
    Ok(fate_status(&outcomes, report.passed))
}

fn fujita(spec: &PotentialSpec, cfg: &RunConfig, dir: &Path) -> Result<Status, ExperimentError> {
    let outcome = exp::fujita_job(spec, cfg)?.run()?;
    let report = exp::fujita_report(spec, cfg, &outcome)?;
    outcome.write(dir, cfg.output.series_stride)?;
    write_json(&dir.join("fujita.json"), &report)?;
    println!("l = {}, P_F = {:.6}", report.l, report.fujita_plus_one);
    print_outcome(&outcome);
    Ok(fate_status(std::slice::from_ref(&outcome), report.passed))
}
