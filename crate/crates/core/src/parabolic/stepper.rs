//! Backward-Euler method of lines with step-doubling error control.
//!
//! The implicit step keeps the discrete comparison principle: as long as
//! `dt·∂f/∂u < 1` the Newton matrix is an M-matrix, so ordered data stay
//! ordered and stationary super-solutions decrease monotonically in time.

use serde::{Deserialize, Serialize};

use super::fate::{detect_fate, Fate, FateControls, NormSeries};
use super::grid::RadialGrid;
use super::{shifted_norm, weighted_norm, ParabolicError, Reaction, WeightSpec};
use crate::export::extended_f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveControls {
    pub t_end: f64,
    pub rtol: f64,
    /// Absolute tolerance as a fraction of `rtol·‖φ‖∞`.
    pub atol_fraction: f64,
    pub dt_initial: f64,
    #[serde(with = "extended_f64")]
    pub dt_max: f64,
    pub max_steps: usize,
    /// Upper bound on `dt·max ∂f/∂u`.
    pub reaction_cfl: f64,
    /// Outer Robin condition `u' = −κ u / r` at `r_max`.
    pub outer_kappa: f64,
    /// Inner Robin condition `u' = −ν u / r` at `r_min` (grids off the origin).
    pub inner_nu: f64,
    pub weight: WeightSpec,
    /// Exponents `ν` of the extra norms `‖u(1+r^ν)‖∞`.
    pub tracked_nu: Vec<f64>,
    /// Times at which the whole profile is stored.
    pub output_times: Vec<f64>,
    /// Use the Richardson combination of the doubled step (second order in
    /// time, but no longer order preserving).
    pub extrapolate: bool,
    pub stop_on_fate: bool,
    pub fate_check_every: usize,
    pub fate: FateControls,
    /// Relative slack of the monotonicity flags.
    pub monotone_slack: f64,
}

impl Default for EvolveControls {
    fn default() -> Self {
        Self {
            t_end: 1e9,
            rtol: 1e-4,
            atol_fraction: 1e-6,
            dt_initial: 1e-6,
            dt_max: f64::INFINITY,
            max_steps: 1_000_000,
            reaction_cfl: 0.9,
            outer_kappa: 1.0,
            inner_nu: 0.0,
            weight: WeightSpec::default(),
            tracked_nu: Vec::new(),
            output_times: Vec::new(),
            extrapolate: false,
            stop_on_fate: true,
            fate_check_every: 25,
            fate: FateControls::default(),
            monotone_slack: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

/// Largest relative rise and drop of any node over any accepted step, and
/// the largest relative increase along the radius at any stored state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monotonicity {
    pub max_rise: f64,
    pub max_drop: f64,
    pub max_radial_rise: f64,
    pub slack: f64,
}

impl Monotonicity {
    pub fn non_increasing_in_t(&self) -> bool {
        self.max_rise <= self.slack
    }

    pub fn non_decreasing_in_t(&self) -> bool {
        self.max_drop <= self.slack
    }

    pub fn non_increasing_in_r(&self) -> bool {
        self.max_radial_rise <= self.slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub fate: Fate,
    pub series: NormSeries,
    pub monotonicity: Monotonicity,
    pub radii: Vec<f64>,
    pub final_t: f64,
    pub final_u: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub outer_kappa: f64,
    pub inner_nu: f64,
}

/// Relative change `(b − a)/|a|`, with tiny magnitudes floored.
fn relative(a: f64, b: f64, floor: f64) -> f64 {
    (b - a) / a.abs().max(floor)
}

struct Operator<'a, R: Reaction + ?Sized> {
    grid: &'a RadialGrid,
    reaction: &'a R,
    kappa: f64,
    nu: f64,
}

impl<R: Reaction + ?Sized> Operator<'_, R> {
    /// Diffusive coefficients `(lower, diag, upper)` of row `j`, already
    /// divided by the node volume.
    fn stencil(&self, j: usize) -> (f64, f64, f64) {
        let a = self.grid.conductance();
        let last = self.grid.len() - 1;
        let vol = self.grid.volumes()[j];
        let left = if j > 0 { a[j - 1] } else { 0.0 };
        let right = if j < last { a[j] } else { 0.0 };
        let mut diag = -(left + right);
        if j == last {
            diag -= self.kappa * self.grid.robin_factor(last);
        }
        if j == 0 && !self.grid.through_origin() {
            diag += self.nu * self.grid.robin_factor(0);
        }
        (left / vol, diag / vol, right / vol)
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let r = self.grid.nodes();
        let last = u.len() - 1;
        for j in 0..=last {
            let (lo, d, up) = self.stencil(j);
            let mut v = d * u[j] + self.reaction.value(u[j], r[j]);
            if j > 0 {
                v += lo * u[j - 1];
            }
            if j < last {
                v += up * u[j + 1];
            }
            out[j] = v;
        }
    }

    /// Solves `v − dt·L(v) = u` by Newton's method from `v = u`.
    fn implicit_step(&self, u: &[f64], dt: f64) -> Option<Vec<f64>> {
        let r = self.grid.nodes();
        let n = u.len();
        let mut v = u.to_vec();
        let mut lv = vec![0.0; n];
        let (mut lower, mut diag, mut upper, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for _ in 0..40 {
            self.apply(&v, &mut lv);
            for j in 0..n {
                let (lo, d, up) = self.stencil(j);
                lower[j] = -dt * lo;
                upper[j] = -dt * up;
                diag[j] = 1.0 - dt * (d + self.reaction.derivative(v[j], r[j]));
                rhs[j] = -(v[j] - u[j] - dt * lv[j]);
            }
            let delta = thomas(&lower, &diag, &upper, &mut rhs)?;
            let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let floor = 1e-12 * scale + f64::MIN_POSITIVE;
            let mut worst: f64 = 0.0;
            for j in 0..n {
                v[j] += delta[j];
                let step = delta[j].abs() / (v[j].abs() + floor);
                if !step.is_finite() {
                    return None;
                }
                worst = worst.max(step);
            }
            if worst <= 1e-13 {
                return Some(v);
            }
        }
        None
    }
}

/// Tridiagonal solve; `rhs` is overwritten with the solution.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return None;
    }
    c[0] = upper[0] / denom;
    rhs[0] /= denom;
    for j in 1..n {
        denom = diag[j] - lower[j] * c[j - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        c[j] = upper[j] / denom;
        rhs[j] = (rhs[j] - lower[j] * rhs[j - 1]) / denom;
    }
    for j in (0..n - 1).rev() {
        rhs[j] -= c[j] * rhs[j + 1];
    }
    Some(rhs.to_vec())
}

struct Recorder<'a> {
    radii: &'a [f64],
    controls: &'a EvolveControls,
    series: NormSeries,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, u: &[f64], dt: f64) {
        let shifted: Vec<f64> = self.controls.tracked_nu.iter().map(|&nu| shifted_norm(self.radii, u, nu)).collect();
        self.series.push(t, weighted_norm(self.radii, u, &self.controls.weight), &shifted, dt);
    }
}

fn radial_rise(u: &[f64], floor: f64) -> f64 {
    u.windows(2).map(|w| relative(w[0], w[1], floor)).fold(f64::NEG_INFINITY, f64::max)
}

/// Evolves `phi` (sampled at the grid nodes) until a fate is detected,
/// `t_end` is reached, or the step budget runs out.
pub fn evolve(
    reaction: &(impl Reaction + ?Sized),
    grid: &RadialGrid,
    phi: &[f64],
    controls: &EvolveControls,
) -> Result<EvolutionResult, ParabolicError> {
    if phi.len() != grid.len() {
        return Err(ParabolicError::Length { len: phi.len(), nodes: grid.len() });
    }
    let radii = grid.nodes();
    for (j, (&r, &v)) in radii.iter().zip(phi).enumerate() {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(ParabolicError::Sign { node: j, r, value: v });
        }
    }
    let op = Operator { grid, reaction, kappa: controls.outer_kappa, nu: controls.inner_nu };
    let sup0 = phi.iter().copied().fold(0.0, f64::max);
    let atol = (controls.rtol * controls.atol_fraction * sup0).max(f64::MIN_POSITIVE);
    let floor = 1e-300_f64.max(1e-14 * sup0);

    let mut outputs: Vec<f64> = controls.output_times.iter().copied().filter(|&t| t > 0.0).collect();
    outputs.sort_by(f64::total_cmp);
    outputs.dedup();
    let mut next_output = 0;

    let mut recorder = Recorder { radii, controls, series: NormSeries::new(controls.tracked_nu.len()) };
    recorder.record(0.0, phi, 0.0);
    let mut mono = Monotonicity {
        max_rise: f64::NEG_INFINITY,
        max_drop: f64::NEG_INFINITY,
        max_radial_rise: radial_rise(phi, floor),
        slack: controls.monotone_slack,
    };
    let mut snapshots = vec![Snapshot { t: 0.0, u: phi.to_vec() }];

    let mut u = phi.to_vec();
    let mut t = 0.0;
    let mut dt = controls.dt_initial;
    let (mut accepted, mut rejected, mut consecutive_rejects) = (0usize, 0usize, 0usize);
    let mut fate = None;
    while t < controls.t_end && accepted < controls.max_steps {
        let stiff = radii.iter().zip(&u).map(|(&r, &v)| reaction.derivative(v, r)).fold(0.0, f64::max);
        let mut h = dt.min(controls.dt_max);
        if stiff > 0.0 {
            h = h.min(controls.reaction_cfl / stiff);
        }
        let target = outputs.get(next_output).copied().unwrap_or(controls.t_end).min(controls.t_end);
        let landing = h >= target - t;
        if landing {
            h = target - t;
        }
        let attempt = op.implicit_step(&u, h).and_then(|full| {
            let mid = op.implicit_step(&u, 0.5 * h)?;
            let fine = op.implicit_step(&mid, 0.5 * h)?;
            Some((full, fine))
        });
        let Some((full, fine)) = attempt else {
            rejected += 1;
            consecutive_rejects += 1;
            dt = 0.25 * h;
            if consecutive_rejects > 200 || dt < 1e-300 {
                break;
            }
            continue;
        };
        let err = full
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).abs() / (controls.rtol * b.abs() + atol))
            .fold(0.0, f64::max);
        if err > 1.0 || !err.is_finite() {
            rejected += 1;
            consecutive_rejects += 1;
            dt = h * (0.9 / err.sqrt()).clamp(0.1, 0.5);
            if consecutive_rejects > 200 || dt < 1e-300 {
                break;
            }
            continue;
        }
        consecutive_rejects = 0;
        let new: Vec<f64> = if controls.extrapolate {
            fine.iter().zip(&full).map(|(f, c)| 2.0 * f - c).collect()
        } else {
            fine
        };
        if let Some(j) = new.iter().position(|v| !v.is_finite()) {
            return Err(ParabolicError::NonFinite { t: t + h, node: j, r: radii[j], steps: accepted });
        }
        for (a, b) in u.iter().zip(&new) {
            let change = relative(*a, *b, floor);
            mono.max_rise = mono.max_rise.max(change);
            mono.max_drop = mono.max_drop.max(-change);
        }
        mono.max_radial_rise = mono.max_radial_rise.max(radial_rise(&new, floor));
        t = if landing { target } else { t + h };
        u = new;
        accepted += 1;
        recorder.record(t, &u, h);
        if landing && next_output < outputs.len() && t >= outputs[next_output] {
            snapshots.push(Snapshot { t, u: u.clone() });
            next_output += 1;
        }
        // Step-doubling of a first-order method: the error scales like dt².
        let grow = if err == 0.0 { 4.0 } else { (0.9 / err.sqrt()).clamp(0.2, 4.0) };
        dt = if landing { dt.max(h) } else { h * grow };

        let over = recorder.series.weighted.last().copied().unwrap_or(0.0) > controls.fate.blowup_threshold;
        if controls.stop_on_fate && (over || accepted % controls.fate_check_every.max(1) == 0) {
            let found = detect_fate(&recorder.series, &controls.fate);
            if found.is_decided() {
                fate = Some(found);
                break;
            }
        }
    }
    let fate = fate.unwrap_or_else(|| detect_fate(&recorder.series, &controls.fate));
    Ok(EvolutionResult {
        fate,
        series: recorder.series,
        monotonicity: mono,
        radii: radii.to_vec(),
        final_t: t,
        final_u: u,
        snapshots,
        accepted_steps: accepted,
        rejected_steps: rejected,
        outer_kappa: controls.outer_kappa,
        inner_nu: controls.inner_nu,
    })
}

/// Whether `low ≤ high` holds at every node of every snapshot time the two
/// runs share, within the relative slack `1e-8`.
pub fn comparison_check(low: &EvolutionResult, high: &EvolutionResult) -> bool {
    if low.radii.len() != high.radii.len() {
        return false;
    }
    let common = low.snapshots.len().min(high.snapshots.len());
    if common == 0 {
        return false;
    }
    low.snapshots[..common].iter().zip(&high.snapshots[..common]).all(|(a, b)| {
        (a.t - b.t).abs() <= 1e-12 * a.t.abs().max(1.0)
            && a.u.iter().zip(&b.u).all(|(&x, &y)| x - y <= 1e-8 * x.abs().max(y.abs()))
    })
}
