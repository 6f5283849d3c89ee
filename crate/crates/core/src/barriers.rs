//! Glued stationary profiles used as upper and lower barriers.
//!
//! Whatever a construction intends, the kind of a glued profile is read
//! off the slope jump `J = U_out'(R) − U_in'(R)` at the glue radius: a
//! concave kink (`J < 0`) gives an upper barrier, a convex one a lower barrier.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fowler::{self, FowlerParams, PhasePoint, SLimit};
use crate::integrate::Tolerance;
use crate::potential::{check_a_sign, critical_exponents, log_grid, sobolev, ASign, End, PotentialSpec};
use crate::roots;
use crate::shooting::{
    self, fast_decay_point_at, Classification, regular_point_at, ProfileKind, ProfileSample, ShootError, ShootOptions, StationaryProfile,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error(transparent)]
    Shoot(#[from] ShootError),
    #[error("need 0 < alpha1 < alpha2, got ({0}, {1})")]
    Parameters(f64, f64),
    #[error("parameter regime not covered: {0}")]
    Regime(String),
    #[error("root finding for {what} failed: {detail}")]
    Anchor { what: &'static str, detail: String },
    #[error("both glued candidates have kind {0:?}")]
    SameKind(BarrierKind),
    #[error("ordering violated: upper exceeds lower by {excess:e} at r = {radius}")]
    Ordering { radius: f64, excess: f64 },
    #[error("anchor section value must be positive, got {0}")]
    Section(f64),
}

impl From<roots::RootError> for BarrierError {
    fn from(e: roots::RootError) -> Self {
        Self::Anchor { what: "anchor", detail: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BarrierKind {
    Upper,
    Lower,
    Smooth,
}

/// Behaviour of the outer piece as `r → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tail", rename_all = "snake_case")]
pub enum Tail {
    /// `U r^{n−2} → beta`.
    Fast { beta: f64 },
    /// `U r^{m_s} → coef`.
    Slow { coef: f64 },
    Unknown,
}

impl Tail {
    /// The tail constant reported as `L`.
    pub fn constant(&self) -> Option<f64> {
        match self {
            Tail::Fast { beta } => Some(*beta),
            Tail::Slow { coef } => Some(*coef),
            Tail::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "construction", rename_all = "snake_case")]
pub enum Construction {
    GroundStatePair { alpha_inner: f64, alpha_outer: f64 },
    FastDecayPair { tau: f64, alpha: f64, beta: f64, section: f64 },
    SlowDecayUpper { tau: f64, alpha: f64 },
    Custom,
}

/// Stationary pieces glued at increasing radii; piece `i` covers
/// `[glue_radii[i−1], glue_radii[i]]`.
#[derive(Debug, Clone)]
pub struct BarrierProfile {
    pub glue_radii: Vec<f64>,
    pub pieces: Vec<StationaryProfile>,
    /// `U_{i+1}'(R_i) − U_i'(R_i)` at every glue radius.
    pub jumps: Vec<f64>,
    pub samples: Vec<ProfileSample>,
    pub kind: BarrierKind,
    pub center_value: Option<f64>,
    pub tail: Tail,
    pub construction: Construction,
}

/// Serializable summary of a barrier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierMeta {
    pub schema_version: u32,
    pub kind: BarrierKind,
    pub glue_radius: f64,
    pub jump: f64,
    pub glue_radii: Vec<f64>,
    pub jumps: Vec<f64>,
    pub center_value: Option<f64>,
    pub tail: Tail,
    pub tail_constant: Option<f64>,
    pub construction: Construction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierOptions {
    pub shoot: ShootOptions,
    /// Radial range of the merged samples and the ordering checks.
    pub r_min: f64,
    pub r_max: f64,
}

/// Pieces are integrated with a purely relative tolerance so that the
/// small `y2` near the origin is resolved as well as `y1`.
pub const BARRIER_TOLERANCE: Tolerance = Tolerance { rtol: 1e-12, atol: 1e-30 };

impl Default for BarrierOptions {
    fn default() -> Self {
        Self { shoot: ShootOptions { tol: BARRIER_TOLERANCE, ..ShootOptions::default() }, r_min: 1e-4, r_max: 1e4 }
    }
}

fn jump_kind(jump: f64, slope_scale: f64) -> BarrierKind {
    if jump.abs() <= 1e-9 * slope_scale {
        BarrierKind::Smooth
    } else if jump < 0.0 {
        BarrierKind::Upper
    } else {
        BarrierKind::Lower
    }
}

fn tail_of(profile: &StationaryProfile) -> Tail {
    match (profile.kind, profile.fits) {
        (ProfileKind::FastDecay { beta }, _) => Tail::Fast { beta },
        (_, fits) => match (fits.fast_decay, fits.slow_decay) {
            (Some(beta), _) => Tail::Fast { beta },
            (None, Some(coef)) => Tail::Slow { coef },
            _ => Tail::Unknown,
        },
    }
}

impl BarrierProfile {
    /// Glues two profiles at `radius`; the kind follows from the slope jump.
    pub fn glue(
        inner: StationaryProfile,
        outer: StationaryProfile,
        radius: f64,
        construction: Construction,
        opts: &BarrierOptions,
    ) -> Result<Self, BarrierError> {
        Self::glue_many(vec![inner, outer], vec![radius], construction, opts)
    }

    /// Glues `pieces[i]` to `pieces[i+1]` at `radii[i]`. All kinks must bend
    /// the same way, otherwise the kind is that of the first one and
    /// [`verify_barrier`] flags the mismatch.
    pub fn glue_many(
        pieces: Vec<StationaryProfile>,
        radii: Vec<f64>,
        construction: Construction,
        opts: &BarrierOptions,
    ) -> Result<Self, BarrierError> {
        assert_eq!(pieces.len(), radii.len() + 1, "one more piece than glue radii");
        let missing = || BarrierError::Shoot(ShootError::NoOverlap);
        let mut jumps = Vec::with_capacity(radii.len());
        let mut kind = BarrierKind::Smooth;
        for (i, &r) in radii.iter().enumerate() {
            let (_, d_in) = pieces[i].value(r).ok_or_else(missing)?;
            let (_, d_out) = pieces[i + 1].value(r).ok_or_else(missing)?;
            jumps.push(d_out - d_in);
            if kind == BarrierKind::Smooth {
                kind = jump_kind(d_out - d_in, d_in.abs() + d_out.abs());
            }
        }
        let center_value = match pieces[0].kind {
            ProfileKind::Regular { alpha } => Some(alpha),
            _ => pieces[0].fits.regular_value,
        };
        let tail = tail_of(pieces.last().expect("at least one piece"));
        let mut barrier =
            Self { glue_radii: radii, pieces, jumps, samples: Vec::new(), kind, center_value, tail, construction };
        let mut grid = log_grid(opts.r_min, opts.r_max, opts.shoot.samples_per_decade);
        grid.extend(barrier.glue_radii.iter().copied());
        grid.sort_by(f64::total_cmp);
        barrier.samples = grid
            .into_iter()
            .filter_map(|r| barrier.value(r).map(|(u, du)| ProfileSample { r, u, du }))
            .collect();
        Ok(barrier)
    }

    /// An unglued stationary solution seen as a (smooth) barrier.
    pub fn smooth(profile: StationaryProfile, radius: f64, opts: &BarrierOptions) -> Result<Self, BarrierError> {
        Self::glue(profile.clone(), profile, radius, Construction::Custom, opts)
    }

    /// First glue radius.
    pub fn glue_radius(&self) -> f64 {
        self.glue_radii[0]
    }

    /// Slope jump at the first glue radius.
    pub fn jump(&self) -> f64 {
        self.jumps[0]
    }

    pub fn inner(&self) -> &StationaryProfile {
        &self.pieces[0]
    }

    pub fn outer(&self) -> &StationaryProfile {
        self.pieces.last().expect("at least one piece")
    }

    fn piece_index(&self, r: f64) -> usize {
        self.glue_radii.partition_point(|&g| g < r)
    }

    /// `(U, U')`; at a glue radius the inner piece is used.
    pub fn value(&self, r: f64) -> Option<(f64, f64)> {
        self.pieces[self.piece_index(r)].value(r)
    }

    pub fn u(&self, r: f64) -> Option<f64> {
        self.value(r).map(|v| v.0)
    }

    pub fn meta(&self) -> BarrierMeta {
        BarrierMeta {
            schema_version: crate::export::SCHEMA_VERSION,
            kind: self.kind,
            glue_radius: self.glue_radius(),
            jump: self.jump(),
            glue_radii: self.glue_radii.clone(),
            jumps: self.jumps.clone(),
            center_value: self.center_value,
            tail: self.tail,
            tail_constant: self.tail.constant(),
            construction: self.construction,
        }
    }
}

/// Largest violation of `lower ≥ upper` on the union of their sample radii.
fn check_order(upper: &BarrierProfile, lower: &BarrierProfile) -> Result<(), BarrierError> {
    for s in upper.samples.iter().chain(&lower.samples) {
        let (Some(a), Some(b)) = (upper.u(s.r), lower.u(s.r)) else { continue };
        let excess = a - b;
        if excess > 1e-10 * a.abs().max(b.abs()) {
            return Err(BarrierError::Ordering { radius: s.r, excess });
        }
    }
    Ok(())
}

/// Pointwise minimum and maximum of two intersecting regular solutions,
/// glued at their first intersection.
pub fn build_gs_pair(spec: &PotentialSpec, alpha1: f64, alpha2: f64) -> Result<(BarrierProfile, BarrierProfile), BarrierError> {
    build_gs_pair_with(spec, alpha1, alpha2, &BarrierOptions::default())
}

pub fn build_gs_pair_with(
    spec: &PotentialSpec,
    alpha1: f64,
    alpha2: f64,
    opts: &BarrierOptions,
) -> Result<(BarrierProfile, BarrierProfile), BarrierError> {
    if !(alpha1 > 0.0 && alpha1 < alpha2) {
        return Err(BarrierError::Parameters(alpha1, alpha2));
    }
    let low = shooting::regular_solution_with(spec, alpha1, opts.r_max, &opts.shoot)?;
    let high = shooting::regular_solution_with(spec, alpha2, opts.r_max, &opts.shoot)?;
    for p in [&low, &high] {
        if let Classification::Crossing { radius } = p.classification {
            return Err(BarrierError::Regime(format!(
                "the regular solution {:?} vanishes at r = {radius}; ground-state pairs need positive solutions",
                p.kind
            )));
        }
    }
    let first = shooting::first_intersection(&high, &low)?;
    // Every later crossing within the sampled range flips which profile is
    // smaller, so the pointwise min and max switch pieces there as well.
    let mut radii = vec![first.radius];
    radii.extend(
        shooting::sign_change_radii(&high, &low, (first.radius * (1.0 + 1e-9), opts.r_max))?
            .into_iter()
            .filter(|&r| r > first.radius * (1.0 + 1e-9)),
    );
    let alternate = |start_low: bool| -> Vec<StationaryProfile> {
        (0..=radii.len()).map(|i| if (i % 2 == 0) == start_low { low.clone() } else { high.clone() }).collect()
    };
    let upper = BarrierProfile::glue_many(
        alternate(true),
        radii.clone(),
        Construction::GroundStatePair { alpha_inner: alpha1, alpha_outer: alpha2 },
        opts,
    )?;
    let lower = BarrierProfile::glue_many(
        alternate(false),
        radii.clone(),
        Construction::GroundStatePair { alpha_inner: alpha2, alpha_outer: alpha1 },
        opts,
    )?;
    let (upper, lower) = order_by_kind(upper, lower)?;
    check_order(&upper, &lower)?;
    Ok((upper, lower))
}

fn order_by_kind(a: BarrierProfile, b: BarrierProfile) -> Result<(BarrierProfile, BarrierProfile), BarrierError> {
    match (a.kind, b.kind) {
        (BarrierKind::Upper, BarrierKind::Lower) => Ok((a, b)),
        (BarrierKind::Lower, BarrierKind::Upper) => Ok((b, a)),
        (k, _) => Err(BarrierError::SameKind(k)),
    }
}

/// Which structural regime a spec falls in, as far as the barrier
/// constructions are concerned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub a_sign: ASign,
    pub l_u: f64,
    pub l_s: f64,
    pub serrin: f64,
    pub sobolev: f64,
    pub stable_node_threshold: f64,
}

pub fn regime(spec: &PotentialSpec) -> Result<Regime, BarrierError> {
    let ex = critical_exponents(spec).map_err(ShootError::from)?;
    let s_grid: Vec<f64> = (-40..=40).map(|k| 0.5 * f64::from(k)).collect();
    let y_grid = log_grid(1e-3, 1e3, 4);
    let a_sign = check_a_sign(spec, &s_grid, &y_grid).map_err(ShootError::from)?;
    Ok(Regime { a_sign, l_u: ex.l_u, l_s: ex.l_s, serrin: ex.serrin, sobolev: ex.sobolev, stable_node_threshold: ex.stable_node_threshold })
}

impl Regime {
    fn supercritical(&self) -> bool {
        self.a_sign == ASign::AMinus && self.l_u >= self.sobolev && self.l_s >= self.sobolev
    }

    fn subcritical(&self) -> bool {
        let inside = |l: f64| l > self.serrin && l <= self.sobolev;
        self.a_sign == ASign::APlus && inside(self.l_u) && inside(self.l_s)
    }

    fn describe(&self) -> String {
        format!(
            "A-condition {:?}, l_u = {:.6}, l_s = {:.6}, 2_* = {:.6}, 2^* = {:.6}, stable node from l = {}",
            self.a_sign, self.l_u, self.l_s, self.serrin, self.sobolev, self.stable_node_threshold
        )
    }
}

/// Frame and height of the horizontal section `y1 = const` through which
/// the fast-decay pair is anchored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub frame_l: f64,
    pub height: f64,
}

/// Minimum of `y1` of the singular solution over `s ≤ 0` in frame `l_u`
/// and over `s ≥ 0` in frame `l_s`.
fn singular_minima(spec: &PotentialSpec) -> Result<(f64, f64), BarrierError> {
    let prof = shooting::singular_solution(spec, -30.0)?;
    let shot = prof.shot();
    let frames = *shot.frames();
    if shot.zero.is_some() {
        return Err(BarrierError::Regime("the singular solution is not positive".into()));
    }
    let (s0, s1) = (shot.s_start(), shot.s_end());
    let min_over = |a: f64, b: f64, frame: &FowlerParams| {
        let count = 4000;
        (0..=count)
            .filter_map(|i| shot.state_in(a + (b - a) * f64::from(i) / f64::from(count), frame))
            .map(|p| p.y1)
            .fold(f64::INFINITY, f64::min)
    };
    Ok((min_over(s0, 0.0, &frames.inner), min_over(0.0, s1, &frames.outer)))
}

/// Section used by the fast-decay pair at log-radius `tau`.
pub fn anchor_section(spec: &PotentialSpec, tau: f64) -> Result<Section, BarrierError> {
    let ex = critical_exponents(spec).map_err(ShootError::from)?;
    let star = sobolev(spec.n());
    let frames = shooting::FramePair::for_spec(spec)?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b;
    if close(ex.l_u, star) && close(ex.l_s, star) {
        // Half the smallest fixed-point height of the frozen critical systems.
        let mut low = f64::INFINITY;
        for k in -160..=160 {
            let t = 0.25 * f64::from(k);
            let fp = fowler::positive_fixed_point(spec, &frames.inner, SLimit::Frozen(t)).map_err(ShootError::from)?;
            low = low.min(fp.p1);
        }
        return Ok(Section { frame_l: star, height: 0.5 * low });
    }
    let (bar_u, bar_s) = singular_minima(spec)?;
    let (m_u, m_s) = (ex.m_u, ex.m_s);
    let height = if m_s > m_u {
        // Frame l_u: the singular solution decays like e^{(m_u − m_s)s} there,
        // so the bound is taken over [0, max(τ, 0)] only.
        0.5 * bar_u.min(bar_s * ((m_u - m_s) * tau.max(0.0)).exp())
    } else {
        0.5 * bar_u.min(bar_s)
    };
    if !(height > 0.0) {
        return Err(BarrierError::Section(height));
    }
    let frame_l = if m_s > m_u { ex.l_u } else { ex.l_s };
    Ok(Section { frame_l, height })
}

/// Roots of `h` in increasing parameter order, found by a geometric sweep
/// from `start` with ratio `ratio` and refined by Brent's method.
fn sweep_roots(
    mut h: impl FnMut(f64) -> Result<f64, BarrierError>,
    start: f64,
    ratio: f64,
    stop: f64,
    wanted: usize,
) -> Result<Vec<f64>, BarrierError> {
    let mut roots_found = Vec::new();
    let mut p = start;
    let mut hp = h(p)?;
    while p < stop && roots_found.len() < wanted {
        let next = p * ratio;
        let hn = h(next)?;
        if hn.is_nan() {
            break;
        }
        if hp.signum() != hn.signum() && hp != 0.0 {
            let mut err = None;
            let root = roots::brent(
                |x| match h(x) {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        f64::NAN
                    }
                },
                p,
                next,
                1e-15 * next,
                200,
            );
            if let Some(e) = err {
                return Err(e);
            }
            roots_found.push(root?);
        }
        p = next;
        hp = hn;
    }
    Ok(roots_found)
}

/// Same regular inner piece, two fast-decay tails whose heights match at `e^τ`.
pub fn build_fast_decay_pair(spec: &PotentialSpec, tau: f64) -> Result<(BarrierProfile, BarrierProfile), BarrierError> {
    build_fast_decay_pair_with(spec, tau, &BarrierOptions::default())
}

pub fn build_fast_decay_pair_with(
    spec: &PotentialSpec,
    tau: f64,
    opts: &BarrierOptions,
) -> Result<(BarrierProfile, BarrierProfile), BarrierError> {
    let reg = regime(spec)?;
    if !(reg.supercritical() || reg.subcritical()) {
        return Err(BarrierError::Regime(format!(
            "fast-decay pair needs A- with l_u, l_s >= 2^* or A+ with l_u, l_s in (2_*, 2^*]; {}",
            reg.describe()
        )));
    }
    let section = anchor_section(spec, tau)?;
    let frame = FowlerParams::for_spec(spec, section.frame_l).map_err(ShootError::from)?;
    let tol = opts.shoot.tol;
    let height = section.height;
    let y1 = |p: Option<PhasePoint>| p.map_or(0.0, |p| p.y1);

    let alpha_start = 1e-3 * height * (-frame.m * tau).exp();
    let alphas = sweep_roots(
        |a| Ok(y1(regular_point_at(spec, a, tau, &frame, tol)?) - height),
        alpha_start,
        1.2,
        alpha_start * 1e14,
        1,
    )?;
    let alpha = *alphas.first().ok_or(BarrierError::Anchor {
        what: "alpha*",
        detail: format!("no regular solution reaches y1 = {height:e} at s = {tau}"),
    })?;

    let n = spec.dim();
    let beta_start = 1e-3 * height * ((n - 2.0 - frame.m) * tau).exp();
    // Past some β no start radius exists in double precision; the sweep ends there.
    let betas = sweep_roots(
        |b| match fast_decay_point_at(spec, b, tau, &frame, tol) {
            Ok(p) => Ok(y1(p) - height),
            Err(ShootError::NoAsymptoticStart) => Ok(f64::NAN),
            Err(e) => Err(e.into()),
        },
        beta_start,
        1.1,
        beta_start * 1e14,
        2,
    )?;
    if betas.len() < 2 {
        return Err(BarrierError::Anchor {
            what: "beta1 < beta2",
            detail: format!("found {} crossing(s) of y1 = {height:e} at s = {tau}: {betas:?}", betas.len()),
        });
    }
    let radius = tau.exp();
    let shoot_opts = opts.shoot;
    let inner = shooting::regular_solution_with(spec, alpha, opts.r_max.max(2.0 * radius), &shoot_opts)?;
    let mut candidates = Vec::new();
    for &beta in &betas[..2] {
        let outer = shooting::fast_decay_solution_with(spec, beta, opts.r_min.min(0.5 * radius), &shoot_opts)?;
        candidates.push(BarrierProfile::glue(
            inner.clone(),
            outer,
            radius,
            Construction::FastDecayPair { tau, alpha, beta, section: height },
            opts,
        )?);
    }
    let second = candidates.pop().expect("two candidates");
    let first = candidates.pop().expect("two candidates");
    let (upper, lower) = order_by_kind(first, second)?;
    check_order(&upper, &lower)?;
    Ok((upper, lower))
}

/// Regular inner piece glued to the slow-decay singular solution at `e^τ`.
pub fn build_slow_decay_upper(spec: &PotentialSpec, tau: f64) -> Result<BarrierProfile, BarrierError> {
    build_slow_decay_upper_with(spec, tau, &BarrierOptions::default())
}

pub fn build_slow_decay_upper_with(spec: &PotentialSpec, tau: f64, opts: &BarrierOptions) -> Result<BarrierProfile, BarrierError> {
    let reg = regime(spec)?;
    let supercritical_ok = reg.a_sign == ASign::AMinus
        && reg.l_u >= reg.sobolev
        && reg.l_s >= reg.sobolev
        && reg.l_s < reg.stable_node_threshold;
    if !(reg.subcritical() || supercritical_ok) {
        return Err(BarrierError::Regime(format!(
            "slow-decay upper barrier needs A+ with l_u, l_s in (2_*, 2^*] or A- with l_u >= 2^*, l_s in [2^*, stable node threshold); {}",
            reg.describe()
        )));
    }
    let radius = tau.exp();
    let tol = opts.shoot.tol;
    let shoot_opts = opts.shoot;
    let outer = if reg.subcritical() {
        shooting::slow_decay_solution_with(spec, (tau + 30.0).max(30.0), opts.r_min.min(0.5 * radius), &shoot_opts)?
    } else {
        shooting::singular_solution_with(spec, (tau - 30.0).min(-30.0), opts.r_max.max(2.0 * radius), &shoot_opts)?
    };
    let (target, target_slope) = outer.value(radius).ok_or(BarrierError::Shoot(ShootError::NoOverlap))?;
    let frames = *outer.shot().frames();
    let frame = *frames.at(tau);
    let target_y1 = target * (frame.m * tau).exp();
    let start = 1e-3 * target;
    let roots_found = sweep_roots(
        |a| Ok(regular_point_at(spec, a, tau, &frame, tol)?.map_or(0.0, |p| p.y1) - target_y1),
        start,
        1.1,
        start * 1e14,
        8,
    )?;
    // Keep the first matching solution whose kink is concave.
    for alpha in roots_found {
        let p = regular_point_at(spec, alpha, tau, &frame, tol)?.expect("root lies on a positive branch");
        let (_, slope, _) = fowler::from_fowler(&p, &frame);
        if target_slope - slope < 0.0 {
            let inner = shooting::regular_solution_with(spec, alpha, opts.r_max.max(2.0 * radius), &shoot_opts)?;
            return BarrierProfile::glue(inner, outer, radius, Construction::SlowDecayUpper { tau, alpha }, opts);
        }
    }
    Err(BarrierError::Anchor {
        what: "alpha",
        detail: format!("no regular solution meets the slow-decay profile at r = {radius} with a concave kink"),
    })
}

/// Outcome of re-checking a barrier from scratch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub continuity_error: f64,
    pub residual_inner: f64,
    pub residual_outer: f64,
    pub jump: f64,
    pub kind_from_jump: BarrierKind,
    pub recorded_kind: BarrierKind,
    pub kind_mismatch: bool,
    pub passes: bool,
}

/// Relative residual of the planar system along a piece, by a sixth-order
/// central difference of the dense output, on samples in `[lo, hi]`.
fn piece_residual(profile: &StationaryProfile, lo: f64, hi: f64, glues: &[f64]) -> f64 {
    let shot = profile.shot();
    let spec = profile.spec();
    let (a, b) = (shot.s_start().min(shot.s_end()), shot.s_start().max(shot.s_end()));
    let h = 1e-2;
    let margin = 3.0 * h + 1e-9;
    let (s_lo, s_hi) = (lo.ln().max(a + margin), hi.ln().min(b - margin));
    if s_hi <= s_lo {
        return 0.0;
    }
    let weights = [(1.0, 3.0 / 4.0), (2.0, -3.0 / 20.0), (3.0, 1.0 / 60.0)];
    let mut worst: f64 = 0.0;
    let count = 400;
    for i in 0..=count {
        let s = s_lo + (s_hi - s_lo) * f64::from(i) / f64::from(count);
        if glues.iter().any(|g| (s - g.ln()).abs() < 0.05) || s.abs() < margin {
            continue;
        }
        let frame = *shot.frames().at(s);
        let Some(p) = shot.state_in(s, &frame) else { continue };
        let mut d = [0.0; 2];
        let mut ok = true;
        for (k, w) in weights {
            let (Some(fw), Some(bw)) = (shot.state_in(s + k * h, &frame), shot.state_in(s - k * h, &frame)) else {
                ok = false;
                break;
            };
            d[0] += w * (fw.y1 - bw.y1) / h;
            d[1] += w * (fw.y2 - bw.y2) / h;
        }
        if !ok {
            continue;
        }
        let g = fowler::g_eval(spec, p.y1, s, &frame);
        let damping = (frame.nf_minus_two() - frame.m) * p.y2;
        let r1 = (d[0] - frame.m * p.y1 - p.y2).abs() / (d[0].abs() + (frame.m * p.y1).abs() + p.y2.abs());
        let r2 = (d[1] + damping + g).abs() / (d[1].abs() + damping.abs() + g.abs());
        worst = worst.max(r1).max(r2);
    }
    worst
}

/// Recomputes continuity, piecewise residuals and the jump signs.
pub fn verify_barrier(profile: &BarrierProfile) -> BarrierReport {
    let radii = &profile.glue_radii;
    let lo = profile.samples.first().map_or(radii[0], |s| s.r);
    let hi = profile.samples.last().map_or(radii[0], |s| s.r);
    let mut continuity_error: f64 = 0.0;
    let mut kinds = Vec::with_capacity(radii.len());
    let mut jump = f64::NAN;
    for (i, &r) in radii.iter().enumerate() {
        let (u_in, d_in) = profile.pieces[i].value(r).unwrap_or((f64::NAN, f64::NAN));
        let (u_out, d_out) = profile.pieces[i + 1].value(r).unwrap_or((f64::NAN, f64::NAN));
        let err = (u_in - u_out).abs() / u_in.abs().max(u_out.abs());
        continuity_error = if err.is_nan() { f64::NAN } else { continuity_error.max(err) };
        if i == 0 {
            jump = d_out - d_in;
        }
        kinds.push(jump_kind(d_out - d_in, d_in.abs() + d_out.abs()));
    }
    let kind_from_jump = kinds[0];
    let consistent = kinds.iter().all(|&k| k == kind_from_jump);
    let bounds: Vec<f64> = std::iter::once(lo).chain(radii.iter().copied()).chain(std::iter::once(hi)).collect();
    let residuals: Vec<f64> = profile
        .pieces
        .iter()
        .enumerate()
        .map(|(i, piece)| piece_residual(piece, bounds[i], bounds[i + 1], radii))
        .collect();
    let residual_inner = residuals[0];
    let residual_outer = residuals[1..].iter().copied().fold(0.0, f64::max);
    let kind_mismatch = !consistent || kind_from_jump != profile.kind;
    let passes = continuity_error <= 1e-10
        && residual_inner <= 1e-8
        && residual_outer <= 1e-8
        && !kind_mismatch
        && kind_from_jump != BarrierKind::Smooth;
    BarrierReport {
        continuity_error,
        residual_inner,
        residual_outer,
        jump,
        kind_from_jump,
        recorded_kind: profile.kind,
        kind_mismatch,
        passes,
    }
}

/// Whether `spec` is a pure power (no radial dependence at either end).
pub fn is_autonomous(spec: &PotentialSpec) -> bool {
    spec.is_pure_power() && spec.frame_exponent(End::Origin) == spec.frame_exponent(End::Infinity)
}
