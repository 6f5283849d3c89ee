//! Radial stationary solutions `U'' + (n−1)U'/r + f(U, r) = 0` computed by
//! shooting in Fowler variables, with classification and intersection tools.
//!
//! Shots use the frame `l_u` for `r < 1` and `l_s` for `r ≥ 1`, converting
//! the state at `r = 1`. Every shot is continued a fixed distance in `s`
//! beyond the sampled range so the asymptotic regime can be classified.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fowler::{self, FixedPointInfo, FowlerError, FowlerParams, PhasePoint, SLimit};
use crate::integrate::{self, Crossing, Event, IntegrateError, Options, Termination, Tolerance, Trajectory};
use crate::potential::{critical_exponents, End, PotentialError, PotentialSpec};
use crate::roots;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShootError {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Fowler(#[from] FowlerError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("shooting parameter must be positive and finite, got {0}")]
    Parameter(f64),
    #[error("frame exponent {l} does not exceed the Serrin exponent {serrin}")]
    BelowSerrin { l: f64, serrin: f64 },
    #[error("integration stopped early ({termination:?}) at r = {radius}")]
    Incomplete { termination: Termination, radius: f64 },
    #[error("no asymptotic start radius found: the nonlinear term never becomes negligible")]
    NoAsymptoticStart,
    #[error("profiles are identical")]
    Identical,
    #[error("no sign change of the difference on [{lo}, {hi}]")]
    NotFound { lo: f64, hi: f64 },
    #[error("profiles do not share a radial interval")]
    NoOverlap,
    #[error(transparent)]
    Root(#[from] roots::RootError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    pub tol: Tolerance,
    /// Extra log-radius integrated past the sampled range for classification.
    pub extension: f64,
    pub samples_per_decade: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { tol: Tolerance::default(), extension: 150.0, samples_per_decade: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Regular { alpha: f64 },
    FastDecay { beta: f64 },
    Singular,
    SlowDecay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Classification {
    Crossing { radius: f64 },
    GroundStateFast { beta: f64 },
    GroundStateSlow,
    SingularFast { beta: f64 },
    SingularSlow,
    Undecided,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Crossing { .. } => "Crossing",
            Self::GroundStateFast { .. } => "GroundStateFast",
            Self::GroundStateSlow => "GroundStateSlow",
            Self::SingularFast { .. } => "SGSFast",
            Self::SingularSlow => "SGSSlow",
            Self::Undecided => "Undecided",
        }
    }
}

/// Limits of `U r^{m_u}` (r→0), `U r^{m_s}` and `U r^{n−2}` (r→∞) where the
/// classification supports them, plus `U(0)` for solutions regular at 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFits {
    pub singular: Option<f64>,
    pub slow_decay: Option<f64>,
    pub fast_decay: Option<f64>,
    pub regular_value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub r: f64,
    pub u: f64,
    pub du: f64,
}

/// Frames used on either side of `r = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePair {
    pub inner: FowlerParams,
    pub outer: FowlerParams,
}

impl FramePair {
    pub fn for_spec(spec: &PotentialSpec) -> Result<Self, ShootError> {
        let ex = critical_exponents(spec)?;
        Ok(Self { inner: FowlerParams::for_spec(spec, ex.l_u)?, outer: FowlerParams::for_spec(spec, ex.l_s)? })
    }

    pub fn at(&self, s: f64) -> &FowlerParams {
        if s < 0.0 {
            &self.inner
        } else {
            &self.outer
        }
    }
}

#[derive(Debug, Clone)]
struct Segment {
    params: FowlerParams,
    traj: Trajectory<2>,
}

/// A Fowler trajectory possibly split across the two frames.
#[derive(Debug, Clone)]
pub struct Shot {
    frames: FramePair,
    segments: Vec<Segment>,
    pub termination: Termination,
    /// Log-radius of the first zero of `U`, if the event fired.
    pub zero: Option<f64>,
}

impl Shot {
    pub fn frames(&self) -> &FramePair {
        &self.frames
    }

    pub fn s_start(&self) -> f64 {
        self.segments[0].traj.s_start()
    }

    pub fn s_end(&self) -> f64 {
        self.segments.last().map_or(self.s_start(), |seg| seg.traj.s_end())
    }

    pub fn forward(&self) -> bool {
        self.s_end() >= self.s_start()
    }

    pub fn contains(&self, s: f64) -> bool {
        let (a, b) = (self.s_start(), self.s_end());
        s >= a.min(b) && s <= a.max(b)
    }

    /// State at `s` in the requested frame.
    pub fn state_in(&self, s: f64, frame: &FowlerParams) -> Option<PhasePoint> {
        let seg = self.segments.iter().find(|seg| seg.traj.contains(s))?;
        let y = seg.traj.eval(s)?;
        Some(fowler::change_frame(&PhasePoint { y1: y[0], y2: y[1], s }, &seg.params, frame))
    }

    /// State at `s` in the frame native to that side of `r = 1`.
    pub fn state(&self, s: f64) -> Option<PhasePoint> {
        let frame = *self.frames.at(s);
        self.state_in(s, &frame)
    }

    /// `(U, U')` at radius `r`.
    pub fn value(&self, r: f64) -> Option<(f64, f64)> {
        let s = r.ln();
        let frame = *self.frames.at(s);
        let p = self.state_in(s, &frame)?;
        let (u, du, _) = fowler::from_fowler(&p, &frame);
        Some((u, du))
    }

    /// Accepted integrator nodes `(s, y)` in the native frame of each segment.
    pub fn nodes(&self) -> Vec<(f64, FowlerParams, [f64; 2])> {
        self.segments.iter().flat_map(|seg| seg.traj.nodes().map(move |(s, y)| (s, seg.params, y))).collect()
    }
}

fn integrate_frames(
    spec: &PotentialSpec,
    frames: FramePair,
    start: PhasePoint,
    s_target: f64,
    tol: Tolerance,
) -> Result<Shot, ShootError> {
    let opts = Options { overflow: 1e120, ..Options::with_tol(tol) };
    let forward = s_target > start.s;
    let mut segments = Vec::new();
    let mut s = start.s;
    let mut params = if forward || s > 0.0 { *frames.at(s) } else { frames.inner };
    let mut y = [start.y1, start.y2];
    let split = frames.inner != frames.outer;
    loop {
        let crosses = split && ((forward && s < 0.0 && s_target > 0.0) || (!forward && s > 0.0 && s_target < 0.0));
        let stop = if crosses { 0.0 } else { s_target };
        let field = |t: f64, y: &[f64; 2]| {
            let (a, b) = fowler::vector_field(spec, &PhasePoint { y1: y[0], y2: y[1], s: t }, &params);
            [a, b]
        };
        let events = [Event::terminal(Crossing::Either, |_, y: &[f64; 2]| y[0])];
        let traj = if s == stop {
            None
        } else {
            Some(integrate::integrate(field, y, s, stop, &events, &opts)?)
        };
        if let Some(traj) = traj {
            let termination = traj.termination;
            let end = traj.s_end();
            let y_end = traj.y_end();
            segments.push(Segment { params, traj });
            match termination {
                Termination::Endpoint => {}
                Termination::Event { s: at, .. } => {
                    return Ok(Shot { frames, segments, termination, zero: Some(at) });
                }
                _ => return Ok(Shot { frames, segments, termination, zero: None }),
            }
            s = end;
            y = y_end;
        }
        if !crosses {
            break;
        }
        let next = if forward { frames.outer } else { frames.inner };
        let p = fowler::change_frame(&PhasePoint { y1: y[0], y2: y[1], s }, &params, &next);
        y = [p.y1, p.y2];
        params = next;
    }
    if segments.is_empty() {
        return Err(IntegrateError::EmptySpan(s).into());
    }
    Ok(Shot { frames, segments, termination: Termination::Endpoint, zero: None })
}

/// A sampled stationary solution with its classification.
#[derive(Debug, Clone)]
pub struct StationaryProfile {
    pub kind: ProfileKind,
    pub classification: Classification,
    pub samples: Vec<ProfileSample>,
    pub fits: AsymptoticFits,
    /// Sampled radial range `(r_lo, r_hi)`.
    pub range: (f64, f64),
    shot: Shot,
    spec: PotentialSpec,
    /// Start radius of the shot and the local expansion used below it (regular kind).
    start_radius: f64,
}

/// Serializable metadata of a profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub schema_version: u32,
    pub profile: ProfileKind,
    pub classification: Classification,
    pub fits: AsymptoticFits,
    pub r_range: (f64, f64),
    pub l_u: f64,
    pub l_s: f64,
}

impl StationaryProfile {
    pub fn shot(&self) -> &Shot {
        &self.shot
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn meta(&self) -> ProfileMeta {
        ProfileMeta {
            schema_version: crate::export::SCHEMA_VERSION,
            profile: self.kind,
            classification: self.classification,
            fits: self.fits,
            r_range: self.range,
            l_u: self.shot.frames.inner.l,
            l_s: self.shot.frames.outer.l,
        }
    }

    /// Range on which `value` is defined: the integrated span, extended to
    /// `r = 0` for regular solutions and to `r = ∞` for fast-decay ones.
    pub fn domain(&self) -> (f64, f64) {
        let (a, b) = (self.shot.s_start().exp(), self.shot.s_end().exp());
        let (lo, hi) = (a.min(b), a.max(b));
        match self.kind {
            ProfileKind::Regular { .. } => (0.0, hi),
            ProfileKind::FastDecay { .. } => (lo, f64::INFINITY),
            _ => (lo, hi),
        }
    }

    /// `(U, U')` at `r`, using the start expansion outside the integrated span.
    pub fn value(&self, r: f64) -> Option<(f64, f64)> {
        match self.kind {
            ProfileKind::Regular { alpha } if r < self.start_radius => {
                Some(regular_expansion(&self.spec, alpha, r.max(0.0)))
            }
            ProfileKind::FastDecay { beta } if r > self.start_radius => {
                let n = self.spec.dim();
                Some((beta * r.powf(2.0 - n), (2.0 - n) * beta * r.powf(1.0 - n)))
            }
            _ => self.shot.value(r),
        }
    }

    pub fn u(&self, r: f64) -> Option<f64> {
        self.value(r).map(|v| v.0)
    }

    pub fn zero_radius(&self) -> Option<f64> {
        self.shot.zero.map(f64::exp)
    }

    /// Re-runs the classifier on the stored trajectory.
    pub fn classify(&self) -> Classification {
        classify_shot(&self.spec, self.kind, &self.shot).unwrap_or(Classification::Undecided)
    }
}

/// Two-term expansion `U ≈ α − f(α, r) r²/((2+δ)(n+δ))` near the origin.
fn regular_expansion(spec: &PotentialSpec, alpha: f64, r: f64) -> (f64, f64) {
    let n = spec.dim();
    let delta = leading_delta(spec);
    if r == 0.0 {
        return (alpha, 0.0);
    }
    let f = spec.f(alpha, r);
    let corr = f * r * r / ((2.0 + delta) * (n + delta));
    (alpha - corr, -f * r / (n + delta))
}

fn leading_delta(spec: &PotentialSpec) -> f64 {
    spec.asymptotes(End::Origin).iter().map(|(_, a)| a.exponent).fold(f64::INFINITY, f64::min)
}

fn check_param(v: f64) -> Result<(), ShootError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ShootError::Parameter(v))
    }
}

fn regular_start_radius(spec: &PotentialSpec, alpha: f64) -> f64 {
    let mut r0: f64 = 0.1;
    for _ in 0..2000 {
        let (u, _) = regular_expansion(spec, alpha, r0);
        if alpha - u < 1e-10 * alpha {
            return r0;
        }
        r0 *= 0.5;
    }
    r0
}

fn sample(shot: &Shot, lo: f64, hi: f64, per_decade: usize) -> Vec<ProfileSample> {
    let (a, b) = (shot.s_start(), shot.s_end());
    let (s_lo, s_hi) = (a.min(b).max(lo.ln()), a.max(b).min(hi.ln()));
    if s_hi <= s_lo {
        return Vec::new();
    }
    let count = (((s_hi - s_lo) / std::f64::consts::LN_10) * per_decade as f64).ceil().max(1.0) as usize;
    (0..=count)
        .filter_map(|i| {
            let s = s_lo + (s_hi - s_lo) * i as f64 / count as f64;
            let (u, du) = shot.value(s.exp())?;
            Some(ProfileSample { r: s.exp(), u, du })
        })
        .collect()
}

fn finish(
    spec: &PotentialSpec,
    kind: ProfileKind,
    shot: Shot,
    range: (f64, f64),
    start_radius: f64,
    per_decade: usize,
) -> Result<StationaryProfile, ShootError> {
    let samples = sample(&shot, range.0, range.1, per_decade);
    let classification = classify_shot(spec, kind, &shot)?;
    let fits = fits_for(spec, kind, &classification, &shot)?;
    Ok(StationaryProfile { kind, classification, samples, fits, range, shot, spec: spec.clone(), start_radius })
}

pub fn regular_solution(spec: &PotentialSpec, alpha: f64, r_max: f64) -> Result<StationaryProfile, ShootError> {
    regular_solution_with(spec, alpha, r_max, &ShootOptions::default())
}

pub fn regular_solution_with(
    spec: &PotentialSpec,
    alpha: f64,
    r_max: f64,
    opts: &ShootOptions,
) -> Result<StationaryProfile, ShootError> {
    check_param(alpha)?;
    check_param(r_max)?;
    let frames = FramePair::for_spec(spec)?;
    let r0 = regular_start_radius(spec, alpha).min(0.5 * r_max);
    let (u, du) = regular_expansion(spec, alpha, r0);
    let start = fowler::to_fowler(u, du, r0, frames.at(r0.ln()))?;
    let shot = integrate_frames(spec, frames, start, r_max.ln() + opts.extension, opts.tol)?;
    finish(spec, ProfileKind::Regular { alpha }, shot, (r0, r_max), r0, opts.samples_per_decade)
}

/// Start radius for a fast-decay shot: the first `R = 10·2^k` with
/// `R² f(V, R)/V < 10⁻¹¹` for `V = βR^{2−n}`.
fn fast_decay_start_radius(spec: &PotentialSpec, beta: f64) -> Result<f64, ShootError> {
    let n = spec.dim();
    let mut r: f64 = 10.0;
    while r < 1e40 {
        let v = beta * r.powf(2.0 - n);
        if r * r * spec.f(v, r) / v < 1e-11 {
            return Ok(r);
        }
        r *= 2.0;
    }
    Err(ShootError::NoAsymptoticStart)
}

pub fn fast_decay_solution(spec: &PotentialSpec, beta: f64, r_min: f64) -> Result<StationaryProfile, ShootError> {
    fast_decay_solution_with(spec, beta, r_min, &ShootOptions::default())
}

pub fn fast_decay_solution_with(
    spec: &PotentialSpec,
    beta: f64,
    r_min: f64,
    opts: &ShootOptions,
) -> Result<StationaryProfile, ShootError> {
    check_param(beta)?;
    check_param(r_min)?;
    let frames = FramePair::for_spec(spec)?;
    let n = spec.dim();
    let big_r = fast_decay_start_radius(spec, beta)?.max(2.0 * r_min);
    let v = beta * big_r.powf(2.0 - n);
    let dv = (2.0 - n) * beta * big_r.powf(1.0 - n);
    let start = fowler::to_fowler(v, dv, big_r, frames.at(big_r.ln()))?;
    let shot = integrate_frames(spec, frames, start, r_min.ln() - opts.extension, opts.tol)?;
    finish(spec, ProfileKind::FastDecay { beta }, shot, (r_min, big_r), big_r, opts.samples_per_decade)
}

fn require_above_serrin(spec: &PotentialSpec, end: End) -> Result<(), ShootError> {
    let l = spec.frame_exponent(end);
    let serrin = crate::potential::serrin(spec.n());
    if l <= serrin {
        return Err(ShootError::BelowSerrin { l, serrin });
    }
    Ok(())
}

/// Singular solution leaving the fixed point of the `r → 0` limit system at `s0`.
pub fn singular_solution(spec: &PotentialSpec, s0: f64) -> Result<StationaryProfile, ShootError> {
    singular_solution_with(spec, s0, 1e4, &ShootOptions::default())
}

pub fn singular_solution_with(
    spec: &PotentialSpec,
    s0: f64,
    r_max: f64,
    opts: &ShootOptions,
) -> Result<StationaryProfile, ShootError> {
    require_above_serrin(spec, End::Origin)?;
    let frames = FramePair::for_spec(spec)?;
    let fp = fowler::positive_fixed_point(spec, &frames.inner, SLimit::MinusInfinity)?;
    let start = fowler::change_frame(&PhasePoint { y1: fp.p1, y2: fp.p2, s: s0 }, &frames.inner, frames.at(s0));
    let shot = integrate_frames(spec, frames, start, r_max.ln() + opts.extension, opts.tol)?;
    finish(spec, ProfileKind::Singular, shot, (s0.exp(), r_max), 0.0, opts.samples_per_decade)
}

/// Slow-decay solution entering the fixed point of the `r → ∞` limit system, integrated inward from `s0`.
pub fn slow_decay_solution(spec: &PotentialSpec, s0: f64) -> Result<StationaryProfile, ShootError> {
    slow_decay_solution_with(spec, s0, 1e-4, &ShootOptions::default())
}

pub fn slow_decay_solution_with(
    spec: &PotentialSpec,
    s0: f64,
    r_min: f64,
    opts: &ShootOptions,
) -> Result<StationaryProfile, ShootError> {
    require_above_serrin(spec, End::Infinity)?;
    let frames = FramePair::for_spec(spec)?;
    let fp = fowler::positive_fixed_point(spec, &frames.outer, SLimit::PlusInfinity)?;
    let start = fowler::change_frame(&PhasePoint { y1: fp.p1, y2: fp.p2, s: s0 }, &frames.outer, frames.at(s0));
    let shot = integrate_frames(spec, frames, start, r_min.ln() - opts.extension, opts.tol)?;
    finish(spec, ProfileKind::SlowDecay, shot, (r_min, s0.exp()), 0.0, opts.samples_per_decade)
}

/// Fixed points of the limit systems at both ends.
pub fn limit_fixed_points(spec: &PotentialSpec) -> Result<(FixedPointInfo, FixedPointInfo), ShootError> {
    let frames = FramePair::for_spec(spec)?;
    Ok((
        fowler::positive_fixed_point(spec, &frames.inner, SLimit::MinusInfinity)?,
        fowler::positive_fixed_point(spec, &frames.outer, SLimit::PlusInfinity)?,
    ))
}

/// Dense samples of the last decade of `s` on the given side of the shot.
fn window(shot: &Shot, at_end: bool, frame: &FowlerParams) -> Vec<PhasePoint> {
    let (a, b) = (shot.s_start(), shot.s_end());
    let edge = if at_end { b } else { a };
    let inward = if at_end { a - b } else { b - a };
    let width = std::f64::consts::LN_10.min(inward.abs());
    if width <= 0.0 {
        return Vec::new();
    }
    let dir = inward.signum();
    (0..=64).filter_map(|i| shot.state_in(edge + dir * width * i as f64 / 64.0, frame)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EndBehaviour {
    FixedPoint,
    Power(f64),
    Unknown,
}

/// Tests the window against the fixed point `p` (relative radius 10⁻³) and
/// against convergence of `y1·e^{rate·s}` (1% spread).
fn end_behaviour(points: &[PhasePoint], p: Option<&FixedPointInfo>, rate: f64) -> EndBehaviour {
    if points.len() < 8 {
        return EndBehaviour::Unknown;
    }
    if let Some(fp) = p {
        let near = points.iter().all(|q| (q.y1 - fp.p1).hypot(q.y2 - fp.p2) <= 1e-3 * fp.p1);
        if near {
            return EndBehaviour::FixedPoint;
        }
    }
    let z: Vec<f64> = points.iter().map(|q| q.y1 * (rate * q.s).exp()).collect();
    let (lo, hi) = z.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, v| (acc.0.min(*v), acc.1.max(*v)));
    if lo > 0.0 && (hi - lo) <= 0.01 * lo {
        return EndBehaviour::Power(z[0]);
    }
    EndBehaviour::Unknown
}

fn classify_shot(spec: &PotentialSpec, kind: ProfileKind, shot: &Shot) -> Result<Classification, ShootError> {
    if let Some(z) = shot.zero {
        return Ok(Classification::Crossing { radius: z.exp() });
    }
    if shot.termination != Termination::Endpoint {
        return Ok(Classification::Undecided);
    }
    let frames = shot.frames;
    let n = spec.dim();
    let fixed = |end: End| {
        let (frame, lim) = match end {
            End::Origin => (frames.inner, SLimit::MinusInfinity),
            End::Infinity => (frames.outer, SLimit::PlusInfinity),
        };
        fowler::positive_fixed_point(spec, &frame, lim).ok()
    };
    let forward = shot.forward();
    // Outer end: the far edge of forward shots; known for backward shots.
    let outer = match kind {
        ProfileKind::FastDecay { beta } => EndBehaviour::Power(beta),
        ProfileKind::SlowDecay => EndBehaviour::FixedPoint,
        _ => {
            let pts = window(shot, forward, &frames.outer);
            end_behaviour(&pts, fixed(End::Infinity).as_ref(), n - 2.0 - frames.outer.m)
        }
    };
    // Inner end: regular is known for regular shots; singular starts are on the fixed point.
    let inner = match kind {
        ProfileKind::Regular { alpha } => EndBehaviour::Power(alpha),
        ProfileKind::Singular => EndBehaviour::FixedPoint,
        _ => {
            let pts = window(shot, !forward, &frames.inner);
            if pts.iter().any(|p| p.s >= 0.0) {
                EndBehaviour::Unknown
            } else {
                end_behaviour(&pts, fixed(End::Origin).as_ref(), -frames.inner.m)
            }
        }
    };
    Ok(match (inner, outer) {
        (EndBehaviour::Power(_), EndBehaviour::FixedPoint) => Classification::GroundStateSlow,
        (EndBehaviour::Power(_), EndBehaviour::Power(beta)) => Classification::GroundStateFast { beta },
        (EndBehaviour::FixedPoint, EndBehaviour::Power(beta)) => Classification::SingularFast { beta },
        (EndBehaviour::FixedPoint, EndBehaviour::FixedPoint) => Classification::SingularSlow,
        _ => Classification::Undecided,
    })
}

fn fits_for(
    spec: &PotentialSpec,
    kind: ProfileKind,
    class: &Classification,
    shot: &Shot,
) -> Result<AsymptoticFits, ShootError> {
    let frames = shot.frames;
    let forward = shot.forward();
    let (inner_s, outer_s) = if forward { (shot.s_start(), shot.s_end()) } else { (shot.s_end(), shot.s_start()) };
    let mut fits = AsymptoticFits::default();
    let inner_state = shot.state_in(inner_s, &frames.inner);
    let outer_state = shot.state_in(outer_s, &frames.outer);
    let singular_inside = matches!(class, Classification::SingularFast { .. } | Classification::SingularSlow);
    let regular_inside = matches!(class, Classification::GroundStateFast { .. } | Classification::GroundStateSlow);
    if singular_inside {
        fits.singular = inner_state.map(|p| p.y1);
    }
    if regular_inside || matches!(class, Classification::Crossing { .. }) {
        fits.regular_value = match kind {
            ProfileKind::Regular { alpha } => Some(alpha),
            _ => inner_state.map(|p| p.y1 * (-frames.inner.m * p.s).exp()),
        };
    }
    match class {
        Classification::GroundStateSlow | Classification::SingularSlow => {
            fits.slow_decay = outer_state.map(|p| p.y1);
        }
        Classification::GroundStateFast { .. } | Classification::SingularFast { .. } => {
            let rate = spec.dim() - 2.0 - frames.outer.m;
            fits.fast_decay = match kind {
                ProfileKind::FastDecay { beta } => Some(beta),
                _ => outer_state.map(|p| p.y1 * (rate * p.s).exp()),
            };
        }
        _ => {}
    }
    Ok(fits)
}

pub fn classify(profile: &StationaryProfile) -> Classification {
    profile.classify()
}

/// `(α, R(α))` with `None` standing for `R = ∞` (no zero found).
pub fn crossing_radius_curve(
    spec: &PotentialSpec,
    alphas: &[f64],
    r_max: f64,
) -> Result<Vec<(f64, Option<f64>)>, ShootError> {
    alphas
        .iter()
        .map(|&a| {
            let prof = regular_solution(spec, a, r_max)?;
            Ok((a, prof.zero_radius()))
        })
        .collect()
}

/// Section of the unstable (α-sweep) or stable (β-sweep) manifold at `s = τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSlice {
    pub tau: f64,
    pub l: f64,
    pub stable: bool,
    /// `(parameter, point)`; `None` when the shot crossed zero before `τ`.
    pub points: Vec<(f64, Option<PhasePoint>)>,
}

/// Regular solution `U(·, α)` as a point at `s = τ` in `frame`; `None` if it vanished before.
pub fn regular_point_at(
    spec: &PotentialSpec,
    alpha: f64,
    tau: f64,
    frame: &FowlerParams,
    tol: Tolerance,
) -> Result<Option<PhasePoint>, ShootError> {
    check_param(alpha)?;
    let frames = FramePair::for_spec(spec)?;
    let r0 = regular_start_radius(spec, alpha).min(0.5 * tau.exp());
    let (u, du) = regular_expansion(spec, alpha, r0);
    let start = fowler::to_fowler(u, du, r0, frames.at(r0.ln()))?;
    let shot = integrate_frames(spec, frames, start, tau, tol)?;
    point_at_end(&shot, tau, frame)
}

/// Fast-decay solution `V(·, β)` as a point at `s = τ`.
pub fn fast_decay_point_at(
    spec: &PotentialSpec,
    beta: f64,
    tau: f64,
    frame: &FowlerParams,
    tol: Tolerance,
) -> Result<Option<PhasePoint>, ShootError> {
    check_param(beta)?;
    let frames = FramePair::for_spec(spec)?;
    let n = spec.dim();
    let big_r = fast_decay_start_radius(spec, beta)?.max(2.0 * tau.exp());
    let start = fowler::to_fowler(beta * big_r.powf(2.0 - n), (2.0 - n) * beta * big_r.powf(1.0 - n), big_r, frames.at(big_r.ln()))?;
    let shot = integrate_frames(spec, frames, start, tau, tol)?;
    point_at_end(&shot, tau, frame)
}

fn point_at_end(shot: &Shot, tau: f64, frame: &FowlerParams) -> Result<Option<PhasePoint>, ShootError> {
    if shot.zero.is_some() {
        return Ok(None);
    }
    if shot.termination != Termination::Endpoint {
        return Err(ShootError::Incomplete { termination: shot.termination, radius: shot.s_end().exp() });
    }
    Ok(shot.state_in(tau, frame))
}

pub fn manifold_slice(
    spec: &PotentialSpec,
    tau: f64,
    frame: &FowlerParams,
    params: &[f64],
    stable: bool,
) -> Result<ManifoldSlice, ShootError> {
    let tol = Tolerance::default();
    let points = params
        .iter()
        .map(|&p| {
            let pt = if stable {
                fast_decay_point_at(spec, p, tau, frame, tol)?
            } else {
                regular_point_at(spec, p, tau, frame, tol)?
            };
            Ok((p, pt))
        })
        .collect::<Result<Vec<_>, ShootError>>()?;
    Ok(ManifoldSlice { tau, l: frame.l, stable, points })
}

/// First crossing of two profiles with the slopes of both at that radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub radius: f64,
    pub value: f64,
    pub slope_a: f64,
    pub slope_b: f64,
}

impl Intersection {
    /// `U_a'(Z) − U_b'(Z)`.
    pub fn slope_gap(&self) -> f64 {
        self.slope_a - self.slope_b
    }
}

fn common_interval(a: &StationaryProfile, b: &StationaryProfile) -> Option<(f64, f64)> {
    let (a0, a1) = a.domain();
    let (b0, b1) = b.domain();
    let lo = a0.max(b0).max(a.range.0.min(b.range.0));
    let hi = a1.min(b1).min(a.range.1.max(b.range.1));
    (hi > lo && lo > 0.0).then_some((lo, hi))
}

fn same_profile(a: &StationaryProfile, b: &StationaryProfile) -> bool {
    a.kind == b.kind && a.spec == b.spec
}

fn difference(a: &StationaryProfile, b: &StationaryProfile, r: f64) -> Option<f64> {
    Some(a.u(r)? - b.u(r)?)
}

fn scan_grid(lo: f64, hi: f64, inward: bool) -> Vec<f64> {
    let mut grid = crate::potential::log_grid(lo, hi, 200);
    if inward {
        grid.reverse();
    }
    grid
}

fn refine(a: &StationaryProfile, b: &StationaryProfile, r0: f64, r1: f64) -> Result<f64, ShootError> {
    let (lo, hi) = (r0.min(r1), r0.max(r1));
    let tol = 1e-12 * lo;
    Ok(roots::bisect(|r| difference(a, b, r).unwrap_or(f64::NAN), lo, hi, tol)?)
}

/// Differences below this fraction of `|U_a| + |U_b|` are treated as
/// unresolved: two orders of magnitude above the shooting tolerance.
const RESOLVED_GAP: f64 = 1e-8;

/// Locates all sign changes of `U_a − U_b` on `[lo, hi]` in scan order,
/// ignoring stretches where the difference is below [`RESOLVED_GAP`].
fn sign_changes(
    a: &StationaryProfile,
    b: &StationaryProfile,
    lo: f64,
    hi: f64,
    inward: bool,
    first_only: bool,
) -> Result<Vec<f64>, ShootError> {
    let mut found = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for r in scan_grid(lo, hi, inward) {
        let (Some(ua), Some(ub)) = (a.u(r), b.u(r)) else { continue };
        let d = ua - ub;
        if d.abs() <= RESOLVED_GAP * (ua.abs() + ub.abs()) {
            continue;
        }
        if let Some((r_prev, d_prev)) = prev {
            if d.signum() != d_prev.signum() {
                found.push(refine(a, b, r_prev, r)?);
                if first_only {
                    break;
                }
            }
        }
        prev = Some((r, d));
    }
    Ok(found)
}

/// First sign change of `U_a − U_b`, scanning outward (inward for two
/// fast-decay profiles), refined to 10⁻¹⁰ relative.
pub fn first_intersection(a: &StationaryProfile, b: &StationaryProfile) -> Result<Intersection, ShootError> {
    if same_profile(a, b) {
        return Err(ShootError::Identical);
    }
    let (lo, hi) = common_interval(a, b).ok_or(ShootError::NoOverlap)?;
    let inward = matches!((a.kind, b.kind), (ProfileKind::FastDecay { .. }, ProfileKind::FastDecay { .. }));
    let zs = sign_changes(a, b, lo, hi, inward, true)?;
    let radius = *zs.first().ok_or(ShootError::NotFound { lo, hi })?;
    let (ua, da) = a.value(radius).ok_or(ShootError::NoOverlap)?;
    let (_, db) = b.value(radius).ok_or(ShootError::NoOverlap)?;
    Ok(Intersection { radius, value: ua, slope_a: da, slope_b: db })
}

/// Radii where `U_a − U_b` changes sign inside `interval`.
pub fn sign_change_radii(
    a: &StationaryProfile,
    b: &StationaryProfile,
    interval: (f64, f64),
) -> Result<Vec<f64>, ShootError> {
    if same_profile(a, b) {
        return Ok(Vec::new());
    }
    let (lo, hi) = common_interval(a, b).ok_or(ShootError::NoOverlap)?;
    let (lo, hi) = (lo.max(interval.0), hi.min(interval.1));
    if hi <= lo {
        return Err(ShootError::NoOverlap);
    }
    sign_changes(a, b, lo, hi, false, false)
}

pub fn count_sign_changes(a: &StationaryProfile, b: &StationaryProfile, interval: (f64, f64)) -> Result<usize, ShootError> {
    Ok(sign_change_radii(a, b, interval)?.len())
}
