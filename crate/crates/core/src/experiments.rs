//! Experiment drivers shared by the command-line front end and the tests.
//!
//! Each driver returns a plain report; `write_*` functions turn reports into
//! CSV tables with JSON sidecars. Evolutions are split into independent
//! [`EvolutionJob`]s so a caller can run them on a worker pool.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barriers::{self, BarrierError, BarrierKind, BarrierMeta, BarrierProfile, BarrierReport};
use crate::config::{BarrierChoice, ConfigError, InitialData, RunConfig, SolverConfig};
use crate::export::{num, write_json, Table, SCHEMA_VERSION};
use crate::fowler::{self, FixedPointInfo, FowlerError, FowlerParams, LevelSet, SLimit, Topology};
use crate::parabolic::{
    discrete_barrier, evolve, EvolutionResult, EvolveControls, Fate, GridSpec, ParabolicError, RadialGrid,
};
use crate::potential::{
    check_a_sign, check_h_sign, critical_exponents, log_grid, ASign, CriticalExponents, HSign, PotentialConfig,
    PotentialError, PotentialSpec,
};
use crate::shooting::{self, Classification, ProfileSample, ShootError, StationaryProfile};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Shoot(#[from] ShootError),
    #[error(transparent)]
    Fowler(#[from] FowlerError),
    #[error(transparent)]
    Barrier(#[from] BarrierError),
    #[error(transparent)]
    Parabolic(#[from] ParabolicError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

// ---------------------------------------------------------------- exponents

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentsReport {
    pub schema_version: u32,
    pub potential: PotentialConfig,
    pub exponents: CriticalExponents,
    pub h_sign: HSign,
    pub a_sign: ASign,
}

pub fn exponents(spec: &PotentialSpec) -> Result<ExponentsReport, ExperimentError> {
    let s_grid: Vec<f64> = (-40..=40).map(|k| 0.5 * f64::from(k)).collect();
    Ok(ExponentsReport {
        schema_version: SCHEMA_VERSION,
        potential: spec.to_config(),
        exponents: critical_exponents(spec)?,
        h_sign: check_h_sign(spec, &log_grid(1e-4, 1e4, 8))?,
        a_sign: check_a_sign(spec, &s_grid, &log_grid(1e-3, 1e3, 4))?,
    })
}

impl ExponentsReport {
    /// Two-column human table.
    pub fn table(&self) -> String {
        let e = &self.exponents;
        let fmt = |v: f64| if v.is_finite() { format!("{v:.6}") } else { "inf".to_string() };
        let rows = [
            ("n", e.n.to_string()),
            ("P_F", fmt(e.fujita_plus_one)),
            ("2_*", fmt(e.serrin)),
            ("2^*", fmt(e.sobolev)),
            ("sigma_*", fmt(e.sigma_low)),
            ("sigma^*", fmt(e.sigma_high)),
            ("node l >=", fmt(e.stable_node_threshold)),
            ("l_u", fmt(e.l_u)),
            ("l_s", fmt(e.l_s)),
            ("m(l_u)", fmt(e.m_u)),
            ("m(l_s)", fmt(e.m_s)),
            ("H", format!("{:?}", self.h_sign)),
            ("A", format!("{:?}", self.a_sign)),
        ];
        rows.iter().map(|(k, v)| format!("{k:<11}{v}\n")).collect()
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        std::fs::write(dir.join("exponents.txt"), self.table())?;
        write_json(&dir.join("exponents.json"), self)
    }
}

// ------------------------------------------------------- shooting and sweeps

pub fn shoot(spec: &PotentialSpec, alpha: f64, solver: &SolverConfig) -> Result<StationaryProfile, ExperimentError> {
    Ok(shooting::regular_solution_with(spec, alpha, solver.r_max, &solver.shoot_options())?)
}

pub fn write_profile(dir: &Path, stem: &str, profile: &StationaryProfile) -> io::Result<()> {
    samples_table(&profile.samples).write(&dir.join(format!("{stem}.csv")))?;
    write_json(&dir.join(format!("{stem}.json")), &profile.meta())
}

fn samples_table(samples: &[ProfileSample]) -> Table {
    let mut table = Table::new(&["r", "u", "du"]);
    for s in samples {
        table.row([num(s.r), num(s.u), num(s.du)]);
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub classification: Classification,
    pub slow_decay_constant: Option<f64>,
    pub fast_decay_constant: Option<f64>,
}

pub fn classify_alpha(spec: &PotentialSpec, alpha: f64, solver: &SolverConfig) -> Result<SweepRow, ExperimentError> {
    let profile = shoot(spec, alpha, solver)?;
    Ok(SweepRow {
        alpha,
        classification: profile.classification,
        slow_decay_constant: profile.fits.slow_decay,
        fast_decay_constant: profile.fits.fast_decay,
    })
}

pub fn write_sweep(dir: &Path, rows: &[SweepRow]) -> io::Result<()> {
    let opt = |v: Option<f64>| v.map_or(String::new(), num);
    let mut table = Table::new(&["alpha", "class", "crossing_radius", "slow_decay_constant", "fast_decay_constant"]);
    for row in rows {
        let radius = match row.classification {
            Classification::Crossing { radius } => num(radius),
            _ => String::new(),
        };
        table.row([
            num(row.alpha),
            row.classification.label().to_string(),
            radius,
            opt(row.slow_decay_constant),
            opt(row.fast_decay_constant),
        ]);
    }
    table.write(&dir.join("classification.csv"))?;
    #[derive(Serialize)]
    struct Sidecar<'a> {
        schema_version: u32,
        rows: &'a [SweepRow],
    }
    write_json(&dir.join("classification.json"), &Sidecar { schema_version: SCHEMA_VERSION, rows })
}

// ------------------------------------------------------------------ portrait

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub label: String,
    /// `(s, y1, y2)` in the portrait frame.
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointRecord {
    pub label: String,
    pub tau: Option<f64>,
    pub info: FixedPointInfo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PortraitBundle {
    pub frame_l: f64,
    pub tau: f64,
    pub fixed_points: Vec<FixedPointRecord>,
    pub levels: Vec<LevelSet>,
    pub trajectories: Vec<Trajectory>,
}

/// Default Pohozaev levels: one below the minimum, one between it and zero,
/// zero itself and one above.
fn default_levels(h_min: f64) -> Vec<f64> {
    let unit = h_min.abs().max(1e-3);
    vec![h_min - 0.5 * unit, 0.5 * h_min, 0.0, unit]
}

/// Phase portrait in the frame `l = l_u`, frozen at `s = τ` for the level sets.
pub fn portrait(spec: &PotentialSpec, cfg: &RunConfig) -> Result<PortraitBundle, ExperimentError> {
    let ex = critical_exponents(spec)?;
    let tau = cfg.experiment.tau;
    let frame = FowlerParams::for_spec(spec, ex.l_u)?;
    let mut fixed_points = Vec::new();
    for (label, limit, t) in [
        ("origin", SLimit::MinusInfinity, None),
        ("infinity", SLimit::PlusInfinity, None),
        ("frozen", SLimit::Frozen(tau), Some(tau)),
    ] {
        let info = fowler::positive_fixed_point(spec, &frame, limit)?;
        fixed_points.push(FixedPointRecord { label: label.to_string(), tau: t, info });
    }
    let h_min = fowler::PlanarNonlinearity::new(spec, &frame, SLimit::Frozen(tau))?.pohozaev_min()?;
    let levels = if cfg.experiment.levels.is_empty() { default_levels(h_min) } else { cfg.experiment.levels.clone() };
    let levels = levels
        .iter()
        .map(|&b| fowler::pohozaev_level_set(spec, b, tau, &frame))
        .collect::<Result<Vec<_>, _>>()?;

    let solver = &cfg.solver;
    let opts = solver.shoot_options();
    let mut profiles: Vec<(String, StationaryProfile)> = Vec::new();
    for &alpha in &cfg.experiment.alphas {
        profiles.push((format!("regular_alpha_{alpha}"), shooting::regular_solution_with(spec, alpha, solver.r_max, &opts)?));
    }
    // Singular and slow-decay trajectories exist only above the Serrin exponent.
    if let Ok(p) = shooting::singular_solution_with(spec, tau, solver.r_max, &opts) {
        profiles.push(("singular".to_string(), p));
    }
    if let Ok(p) = shooting::slow_decay_solution_with(spec, tau, solver.r_min, &opts) {
        profiles.push(("slow_decay".to_string(), p));
    }
    if let Ok(p) = shooting::fast_decay_solution_with(spec, 1.0, solver.r_min, &opts) {
        profiles.push(("fast_decay_beta_1".to_string(), p));
    }
    let trajectories = profiles
        .into_iter()
        .map(|(label, p)| {
            let points = p
                .samples
                .iter()
                .filter_map(|smp| fowler::to_fowler(smp.u, smp.du, smp.r, &frame).ok())
                .map(|pt| (pt.s, pt.y1, pt.y2))
                .collect();
            Trajectory { label, points }
        })
        .collect();
    Ok(PortraitBundle { frame_l: ex.l_u, tau, fixed_points, levels, trajectories })
}

impl PortraitBundle {
    pub fn level(&self, b: f64) -> Option<&LevelSet> {
        self.levels.iter().find(|l| l.b == b)
    }

    pub fn has_topology(&self, topology: Topology) -> bool {
        self.levels.iter().any(|l| l.topology == topology)
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let mut traj = Table::new(&["trajectory", "s", "y1", "y2"]);
        for t in &self.trajectories {
            for &(s, y1, y2) in &t.points {
                traj.row([t.label.clone(), num(s), num(y1), num(y2)]);
            }
        }
        traj.write(&dir.join("trajectories.csv"))?;

        let mut fixed = Table::new(&["label", "tau", "p1", "p2", "stability", "discriminant", "b_star"]);
        for f in &self.fixed_points {
            fixed.row([
                f.label.clone(),
                f.tau.map_or(String::new(), num),
                num(f.info.p1),
                num(f.info.p2),
                format!("{:?}", f.info.stability),
                num(f.info.discriminant),
                num(f.info.b_star),
            ]);
        }
        fixed.write(&dir.join("fixed_points.csv"))?;

        let mut levels = Table::new(&["b", "topology", "curve", "closed", "y1", "y2"]);
        for l in &self.levels {
            if l.curves.is_empty() {
                levels.row([num(l.b), format!("{:?}", l.topology), String::new(), String::new(), String::new(), String::new()]);
            }
            for (k, c) in l.curves.iter().enumerate() {
                for &(y1, y2) in &c.points {
                    levels.row([num(l.b), format!("{:?}", l.topology), k.to_string(), c.closed.to_string(), num(y1), num(y2)]);
                }
            }
        }
        levels.write(&dir.join("level_sets.csv"))?;

        #[derive(Serialize)]
        struct LevelSummary {
            b: f64,
            topology: Topology,
            curves: usize,
            b_star: f64,
            h_min: f64,
        }
        #[derive(Serialize)]
        struct Sidecar<'a> {
            schema_version: u32,
            frame_l: f64,
            tau: f64,
            fixed_points: &'a [FixedPointRecord],
            levels: Vec<LevelSummary>,
            trajectories: Vec<&'a str>,
        }
        let sidecar = Sidecar {
            schema_version: SCHEMA_VERSION,
            frame_l: self.frame_l,
            tau: self.tau,
            fixed_points: &self.fixed_points,
            levels: self
                .levels
                .iter()
                .map(|l| LevelSummary { b: l.b, topology: l.topology, curves: l.curves.len(), b_star: l.b_star, h_min: l.h_min })
                .collect(),
            trajectories: self.trajectories.iter().map(|t| t.label.as_str()).collect(),
        };
        write_json(&dir.join("portrait.json"), &sidecar)
    }
}

// ------------------------------------------------------------------ barriers

/// The configured barrier family: an (upper, lower) pair or an upper singleton.
pub fn build_barriers(spec: &PotentialSpec, cfg: &RunConfig) -> Result<Vec<BarrierProfile>, ExperimentError> {
    let opts = cfg.solver.barrier_options();
    let x = &cfg.experiment;
    Ok(match x.barrier {
        BarrierChoice::GroundStatePair => {
            let (u, l) = barriers::build_gs_pair_with(spec, x.alpha_pair[0], x.alpha_pair[1], &opts)?;
            vec![u, l]
        }
        BarrierChoice::FastDecayPair => {
            let (u, l) = barriers::build_fast_decay_pair_with(spec, x.tau, &opts)?;
            vec![u, l]
        }
        BarrierChoice::SlowDecayUpper => vec![barriers::build_slow_decay_upper_with(spec, x.tau, &opts)?],
    })
}

fn role(kind: BarrierKind) -> &'static str {
    match kind {
        BarrierKind::Upper => "upper",
        BarrierKind::Lower => "lower",
        BarrierKind::Smooth => "smooth",
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierRecord {
    pub role: String,
    pub meta: BarrierMeta,
    pub report: BarrierReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierSetReport {
    pub schema_version: u32,
    pub barriers: Vec<BarrierRecord>,
    /// `upper ≤ lower` on the common samples (pairs only).
    pub ordered: Option<bool>,
    pub passes: bool,
}

pub fn barrier_report(set: &[BarrierProfile], opts_r: (f64, f64)) -> BarrierSetReport {
    let records: Vec<BarrierRecord> = set
        .iter()
        .map(|b| BarrierRecord { role: role(b.kind).to_string(), meta: b.meta(), report: barriers::verify_barrier(b) })
        .collect();
    let ordered = match set {
        [upper, lower] => Some(pair_ordered(upper, lower, opts_r)),
        _ => None,
    };
    let passes = records.iter().all(|r| r.report.passes) && ordered.unwrap_or(true);
    BarrierSetReport { schema_version: SCHEMA_VERSION, barriers: records, ordered, passes }
}

fn pair_ordered(upper: &BarrierProfile, lower: &BarrierProfile, (lo, hi): (f64, f64)) -> bool {
    log_grid(lo, hi, 50).iter().all(|&r| match (upper.u(r), lower.u(r)) {
        (Some(a), Some(b)) => a <= b + 1e-10 * b.abs(),
        _ => true,
    })
}

pub fn write_barriers(dir: &Path, set: &[BarrierProfile], report: &BarrierSetReport) -> io::Result<()> {
    for b in set {
        samples_table(&b.samples).write(&dir.join(format!("barrier_{}.csv", role(b.kind))))?;
    }
    write_json(&dir.join("barriers.json"), report)
}

// ---------------------------------------------------------------- evolution

/// One evolution ready to run.
#[derive(Debug, Clone)]
pub struct EvolutionJob {
    pub label: String,
    pub spec: PotentialSpec,
    pub grid: GridSpec,
    pub initial: Vec<f64>,
    pub controls: EvolveControls,
    /// Fate the experiment requires, if any.
    pub expected: Option<Expectation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Decayed, non-increasing in time.
    DecayMonotone,
    Decayed,
    BlowUp,
    Steady,
}

#[derive(Debug, Clone)]
pub struct JobOutcome {
    pub label: String,
    pub expected: Option<Expectation>,
    pub tracked_nu: Vec<f64>,
    pub result: EvolutionResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub r_max: f64,
    pub nodes: usize,
    pub fate: Fate,
    pub expected: Option<Expectation>,
    pub met: Option<bool>,
    pub final_t: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub outer_kappa: f64,
    pub initial_norm: f64,
    pub final_norm: f64,
    pub tracked_nu: Vec<f64>,
    pub initial_shifted: Vec<f64>,
    pub final_shifted: Vec<f64>,
    pub non_increasing_in_t: bool,
    pub non_decreasing_in_t: bool,
}

impl EvolutionJob {
    pub fn run(&self) -> Result<JobOutcome, ExperimentError> {
        let grid = RadialGrid::new(self.spec.n(), self.grid)?;
        let result = evolve(&self.spec, &grid, &self.initial, &self.controls)?;
        Ok(JobOutcome {
            label: self.label.clone(),
            expected: self.expected,
            tracked_nu: self.controls.tracked_nu.clone(),
            result,
        })
    }
}

impl Expectation {
    pub fn met_by(self, result: &EvolutionResult) -> bool {
        match (self, result.fate) {
            (Self::DecayMonotone, Fate::Decayed { .. }) => result.monotonicity.non_increasing_in_t(),
            (Self::Decayed, Fate::Decayed { .. }) | (Self::BlowUp, Fate::BlowUp { .. }) | (Self::Steady, Fate::Steady { .. }) => true,
            _ => false,
        }
    }
}

impl JobOutcome {
    pub fn met(&self) -> Option<bool> {
        self.expected.map(|e| e.met_by(&self.result))
    }

    pub fn summary(&self) -> RunSummary {
        let r = &self.result;
        let s = &r.series;
        let first = |c: &Vec<f64>| c.first().copied().unwrap_or(f64::NAN);
        let last = |c: &Vec<f64>| c.last().copied().unwrap_or(f64::NAN);
        RunSummary {
            label: self.label.clone(),
            r_max: r.radii.last().copied().unwrap_or(f64::NAN),
            nodes: r.radii.len(),
            fate: r.fate,
            expected: self.expected,
            met: self.met(),
            final_t: r.final_t,
            accepted_steps: r.accepted_steps,
            rejected_steps: r.rejected_steps,
            outer_kappa: r.outer_kappa,
            initial_norm: first(&s.weighted),
            final_norm: last(&s.weighted),
            tracked_nu: self.tracked_nu.clone(),
            initial_shifted: s.shifted.iter().map(first).collect(),
            final_shifted: s.shifted.iter().map(last).collect(),
            non_increasing_in_t: r.monotonicity.non_increasing_in_t(),
            non_decreasing_in_t: r.monotonicity.non_decreasing_in_t(),
        }
    }

    /// `series.csv`, `snapshots.csv` and `result.json` under `dir`.
    pub fn write(&self, dir: &Path, stride: usize) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let r = &self.result;
        let s = &r.series;
        let mut header = vec!["t".to_string(), "dt".to_string(), "weighted_norm".to_string()];
        header.extend((0..s.shifted.len()).map(|k| format!("shifted_norm_{k}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut series = Table::new(&header);
        let last = s.len().saturating_sub(1);
        for i in (0..s.len()).filter(|&i| i % stride.max(1) == 0 || i == last) {
            let mut row = vec![num(s.t[i]), num(s.dt[i]), num(s.weighted[i])];
            row.extend(s.shifted.iter().map(|c| num(c[i])));
            series.row(row);
        }
        series.write(&dir.join("series.csv"))?;

        let mut snaps = Table::new(&["snapshot", "t", "r", "u"]);
        for (k, snap) in r.snapshots.iter().enumerate() {
            for (rr, u) in r.radii.iter().zip(&snap.u) {
                snaps.row([k.to_string(), num(snap.t), num(*rr), num(*u)]);
            }
        }
        snaps.write(&dir.join("snapshots.csv"))?;

        #[derive(Serialize)]
        struct Sidecar<'a> {
            schema_version: u32,
            summary: RunSummary,
            monotonicity: &'a crate::parabolic::Monotonicity,
        }
        write_json(&dir.join("result.json"), &Sidecar { schema_version: SCHEMA_VERSION, summary: self.summary(), monotonicity: &r.monotonicity })
    }
}

fn gaussian(grid: &RadialGrid, amplitude: f64, width: f64) -> Vec<f64> {
    grid.sample(|r| amplitude * (-(r / width).powi(2)).exp())
}

/// Job for `evolve`: the configured initial data on the configured grid.
pub fn evolve_job(spec: &PotentialSpec, cfg: &RunConfig) -> Result<EvolutionJob, ExperimentError> {
    let x = &cfg.experiment;
    let grid = RadialGrid::new(spec.n(), cfg.grid)?;
    let mut controls = cfg.evolve.clone();
    controls.weight = cfg.weight;
    let initial = match x.initial {
        InitialData::Gaussian => gaussian(&grid, x.amplitude, x.width),
        InitialData::GroundState => {
            let profile = shoot(spec, x.alpha, &cfg.solver)?;
            grid.sample(|r| x.scale * profile.u(r).unwrap_or(0.0).max(0.0))
        }
        InitialData::UpperBarrier | InitialData::LowerBarrier => {
            let want = if x.initial == InitialData::UpperBarrier { BarrierKind::Upper } else { BarrierKind::Lower };
            let set = build_barriers(spec, cfg)?;
            let barrier = set
                .iter()
                .find(|b| b.kind == want)
                .ok_or_else(|| ConfigError::Value {
                    field: "experiment.initial",
                    reason: format!("the configured barrier family has no {} barrier", role(want)),
                })?;
            let discrete = discrete_barrier(barrier, &grid)?;
            controls.outer_kappa = discrete.kappa;
            discrete.values
        }
    };
    Ok(EvolutionJob { label: "evolve".to_string(), spec: spec.clone(), grid: cfg.grid, initial, controls, expected: None })
}

// ---------------------------------------------------------------- dichotomy

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub schema_version: u32,
    pub barrier: BarrierChoice,
    pub barriers: BarrierSetReport,
    pub runs: Vec<RunSummary>,
    pub undecided: bool,
    pub passed: bool,
}

/// Barriers of the configured family plus one evolution per barrier and
/// per grid (`r_max`, and `2 r_max` when requested).
pub fn dichotomy_jobs(
    spec: &PotentialSpec,
    cfg: &RunConfig,
) -> Result<(Vec<BarrierProfile>, Vec<EvolutionJob>), ExperimentError> {
    let set = build_barriers(spec, cfg)?;
    let mut grids = vec![cfg.grid];
    if cfg.experiment.double_r_max {
        grids.push(cfg.grid.with_r_max(2.0 * cfg.grid.r_max));
    }
    let mut tracked = cfg.evolve.tracked_nu.clone();
    if cfg.experiment.barrier == BarrierChoice::SlowDecayUpper && tracked.is_empty() {
        tracked.push(0.5 * critical_exponents(spec)?.m_s);
    }
    let mut jobs = Vec::new();
    for (g, grid_spec) in grids.iter().enumerate() {
        let grid = RadialGrid::new(spec.n(), *grid_spec)?;
        for b in &set {
            let discrete = discrete_barrier(b, &grid)?;
            let mut controls = cfg.evolve.clone();
            controls.weight = cfg.weight;
            controls.outer_kappa = discrete.kappa;
            controls.tracked_nu = tracked.clone();
            let expected = match b.kind {
                BarrierKind::Upper => Some(Expectation::DecayMonotone),
                BarrierKind::Lower => Some(Expectation::BlowUp),
                BarrierKind::Smooth => None,
            };
            let suffix = if g == 0 { "" } else { "_doubled" };
            jobs.push(EvolutionJob {
                label: format!("{}{suffix}", role(b.kind)),
                spec: spec.clone(),
                grid: *grid_spec,
                initial: discrete.values,
                controls,
                expected,
            });
        }
    }
    Ok((set, jobs))
}

pub fn dichotomy_report(cfg: &RunConfig, set: &[BarrierProfile], outcomes: &[JobOutcome]) -> DichotomyReport {
    let barriers = barrier_report(set, (cfg.solver.r_min, cfg.solver.r_max));
    let runs: Vec<RunSummary> = outcomes.iter().map(JobOutcome::summary).collect();
    let undecided = outcomes.iter().any(|o| !o.result.fate.is_decided());
    let passed = barriers.passes && outcomes.iter().all(|o| o.met() != Some(false));
    DichotomyReport { schema_version: SCHEMA_VERSION, barrier: cfg.experiment.barrier, barriers, runs, undecided, passed }
}

/// Sequential convenience wrapper around [`dichotomy_jobs`].
pub fn run_dichotomy(spec: &PotentialSpec, cfg: &RunConfig) -> Result<(DichotomyReport, Vec<JobOutcome>), ExperimentError> {
    let (set, jobs) = dichotomy_jobs(spec, cfg)?;
    let outcomes = jobs.iter().map(EvolutionJob::run).collect::<Result<Vec<_>, _>>()?;
    Ok((dichotomy_report(cfg, &set, &outcomes), outcomes))
}

// ------------------------------------------------------------------- fujita

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FujitaReport {
    pub schema_version: u32,
    pub l: f64,
    pub fujita_plus_one: f64,
    pub amplitude: f64,
    pub run: RunSummary,
    pub passed: bool,
}

/// Small Gaussian data on a wide grid: blow-up expected for `l ≤ P_F`,
/// decay above, a steady state for zero data.
pub fn fujita_job(spec: &PotentialSpec, cfg: &RunConfig) -> Result<EvolutionJob, ExperimentError> {
    let x = &cfg.experiment;
    let ex = critical_exponents(spec)?;
    let grid_spec = cfg.grid.with_r_max(x.fujita_r_max);
    let grid = RadialGrid::new(spec.n(), grid_spec)?;
    let mut controls = cfg.evolve.clone();
    controls.weight = cfg.weight;
    controls.fate.decay_floor = x.fujita_decay_floor;
    let expected = if x.amplitude == 0.0 {
        Expectation::Steady
    } else if ex.l_s <= ex.fujita_plus_one {
        Expectation::BlowUp
    } else {
        Expectation::Decayed
    };
    Ok(EvolutionJob {
        label: "fujita".to_string(),
        spec: spec.clone(),
        grid: grid_spec,
        initial: gaussian(&grid, x.amplitude, x.width),
        controls,
        expected: Some(expected),
    })
}

pub fn fujita_report(spec: &PotentialSpec, cfg: &RunConfig, outcome: &JobOutcome) -> Result<FujitaReport, ExperimentError> {
    let ex = critical_exponents(spec)?;
    Ok(FujitaReport {
        schema_version: SCHEMA_VERSION,
        l: ex.l_s,
        fujita_plus_one: ex.fujita_plus_one,
        amplitude: cfg.experiment.amplitude,
        run: outcome.summary(),
        passed: outcome.met() == Some(true),
    })
}
