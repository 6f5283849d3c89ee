//! Dormand–Prince 5(4) with continuous output and event location.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roots;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("empty integration span: s0 = s1 = {0}")]
    EmptySpan(f64),
    #[error("non-finite initial data at s = {0}")]
    NonFiniteStart(f64),
}

/// Relative/absolute error tolerances of the embedded pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub tol: Tolerance,
    pub max_step: f64,
    pub max_steps: usize,
    /// Integration stops once any state component exceeds this magnitude.
    pub overflow: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self { tol: Tolerance::default(), max_step: f64::INFINITY, max_steps: 2_000_000, overflow: 1e150 }
    }
}

impl Options {
    pub fn with_tol(tol: Tolerance) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Either,
}

type EventFn<'a, const D: usize> = Box<dyn Fn(f64, &[f64; D]) -> f64 + Send + Sync + 'a>;

/// Scalar event function; a sign change in the requested direction is
/// located to `1e-12` in the independent variable.
pub struct Event<'a, const D: usize> {
    pub func: EventFn<'a, D>,
    pub crossing: Crossing,
    pub terminal: bool,
}

impl<'a, const D: usize> Event<'a, D> {
    pub fn terminal(crossing: Crossing, func: impl Fn(f64, &[f64; D]) -> f64 + Send + Sync + 'a) -> Self {
        Self { func: Box::new(func), crossing, terminal: true }
    }

    pub fn recording(crossing: Crossing, func: impl Fn(f64, &[f64; D]) -> f64 + Send + Sync + 'a) -> Self {
        Self { func: Box::new(func), crossing, terminal: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const D: usize> {
    pub index: usize,
    pub s: f64,
    pub y: [f64; D],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Endpoint,
    Event { index: usize, s: f64 },
    StepUnderflow { s: f64 },
    Overflow { s: f64 },
    StepLimit { s: f64 },
}

impl Termination {
    pub fn is_failure(&self) -> bool {
        matches!(self, Self::StepUnderflow { .. } | Self::Overflow { .. } | Self::StepLimit { .. })
    }
}

#[derive(Debug, Clone)]
struct Step<const D: usize> {
    s: f64,
    h: f64,
    /// End of the valid span; shorter than `s + h` when an event cut the step.
    end: f64,
    cont: [[f64; D]; 5],
    y_end: [f64; D],
}

impl<const D: usize> Step<D> {
    fn eval(&self, s: f64) -> [f64; D] {
        let theta = (s - self.s) / self.h;
        let theta1 = 1.0 - theta;
        std::array::from_fn(|i| {
            let c = &self.cont;
            c[0][i] + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i])))
        })
    }
}

/// Accepted steps with their dense-output coefficients.
#[derive(Debug, Clone)]
pub struct Trajectory<const D: usize> {
    s_start: f64,
    y_start: [f64; D],
    steps: Vec<Step<D>>,
    pub hits: Vec<EventHit<D>>,
    pub termination: Termination,
}

impl<const D: usize> Trajectory<D> {
    pub fn s_start(&self) -> f64 {
        self.s_start
    }

    pub fn s_end(&self) -> f64 {
        self.steps.last().map_or(self.s_start, |st| st.end)
    }

    pub fn y_end(&self) -> [f64; D] {
        self.steps.last().map_or(self.y_start, |st| st.y_end)
    }

    pub fn forward(&self) -> bool {
        self.steps.first().is_none_or(|st| st.h > 0.0)
    }

    pub fn len(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Node values `(s, y)` at the accepted step boundaries.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, [f64; D])> + '_ {
        std::iter::once((self.s_start, self.y_start)).chain(self.steps.iter().map(|st| (st.end, st.y_end)))
    }

    pub fn contains(&self, s: f64) -> bool {
        let (a, b) = (self.s_start, self.s_end());
        s >= a.min(b) && s <= a.max(b)
    }

    /// Dense output; `None` outside the integrated span.
    pub fn eval(&self, s: f64) -> Option<[f64; D]> {
        if !self.contains(s) {
            return None;
        }
        if self.steps.is_empty() {
            return Some(self.y_start);
        }
        let fwd = self.forward();
        let idx = self.steps.partition_point(|st| {
            if fwd {
                st.end < s
            } else {
                st.end > s
            }
        });
        let step = &self.steps[idx.min(self.steps.len() - 1)];
        Some(step.eval(s))
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn lin<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn error_norm<const D: usize>(y0: &[f64; D], y1: &[f64; D], err: &[f64; D], tol: &Tolerance) -> f64 {
    let sum: f64 = (0..D)
        .map(|i| {
            let sc = tol.atol + tol.rtol * y0[i].abs().max(y1[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (sum / D as f64).sqrt()
}

fn initial_step<const D: usize, F: Fn(f64, &[f64; D]) -> [f64; D]>(
    field: &F,
    s0: f64,
    y0: &[f64; D],
    f0: &[f64; D],
    dir: f64,
    tol: &Tolerance,
) -> f64 {
    let sc: [f64; D] = std::array::from_fn(|i| tol.atol + tol.rtol * y0[i].abs());
    let norm = |v: &[f64; D]| ((0..D).map(|i| (v[i] / sc[i]).powi(2)).sum::<f64>() / D as f64).sqrt();
    let d0 = norm(y0);
    let d1 = norm(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    // A probe far beyond the scale on which the field varies says nothing
    // about the local step; shrink it until the estimate is consistent.
    for _ in 0..20 {
        let y1 = lin(y0, dir * h0, &[(1.0, f0)]);
        let f1 = field(s0 + dir * h0, &y1);
        let diff: [f64; D] = std::array::from_fn(|i| f1[i] - f0[i]);
        let d2 = norm(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        if h1.is_finite() && h1 >= 1e-3 * h0 {
            return (100.0 * h0).min(h1);
        }
        h0 *= 1e-2;
    }
    h0
}

/// Integrates `ẏ = field(s, y)` from `s0` toward `s1` (either direction).
///
/// Failures that leave a usable partial trajectory (step underflow, overflow,
/// step limit) are reported through [`Trajectory::termination`].
pub fn integrate<const D: usize, F>(
    field: F,
    y0: [f64; D],
    s0: f64,
    s1: f64,
    events: &[Event<'_, D>],
    opts: &Options,
) -> Result<Trajectory<D>, IntegrateError>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    if s0 == s1 {
        return Err(IntegrateError::EmptySpan(s0));
    }
    if y0.iter().any(|v| !v.is_finite()) || !s0.is_finite() || !s1.is_finite() {
        return Err(IntegrateError::NonFiniteStart(s0));
    }
    let dir = (s1 - s0).signum();
    let tol = opts.tol;
    let mut traj = Trajectory { s_start: s0, y_start: y0, steps: Vec::new(), hits: Vec::new(), termination: Termination::Endpoint };

    let mut s = s0;
    let mut y = y0;
    let mut k1 = field(s, &y);
    let span = (s1 - s0).abs();
    let mut h = initial_step(&field, s0, &y0, &k1, dir, &tol).min(span).min(opts.max_step);
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.func)(s, &y)).collect();
    let mut err_prev = 1e-4_f64;
    let mut rejected_last = false;

    for _ in 0..opts.max_steps {
        let remaining = (s1 - s).abs();
        if remaining <= 4.0 * f64::EPSILON * s.abs().max(1.0) {
            traj.termination = Termination::Endpoint;
            return Ok(traj);
        }
        let h_min = 16.0 * f64::EPSILON * s.abs().max(1e-3);
        if h < h_min {
            traj.termination = Termination::StepUnderflow { s };
            return Ok(traj);
        }
        let hs = dir * h.min(remaining);
        let k2 = field(s + C2 * hs, &lin(&y, hs, &[(A21, &k1)]));
        let k3 = field(s + C3 * hs, &lin(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = field(s + C4 * hs, &lin(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = field(s + C5 * hs, &lin(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let y6 = lin(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let s_new = if h >= remaining { s1 } else { s + hs };
        let k6 = field(s + hs, &y6);
        let y_new = lin(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = field(s_new, &y_new);
        let err: [f64; D] =
            std::array::from_fn(|i| hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]));
        let en = error_norm(&y, &y_new, &err, &tol);
        if !en.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.2;
            rejected_last = true;
            continue;
        }
        if en > 1.0 {
            h *= (0.9 * en.powf(-0.2)).clamp(0.2, 1.0);
            rejected_last = true;
            continue;
        }

        let ydiff: [f64; D] = std::array::from_fn(|i| y_new[i] - y[i]);
        let bspl: [f64; D] = std::array::from_fn(|i| hs * k1[i] - ydiff[i]);
        let cont = [
            y,
            ydiff,
            bspl,
            std::array::from_fn(|i| ydiff[i] - hs * k7[i] - bspl[i]),
            std::array::from_fn(|i| {
                hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            }),
        ];
        let step = Step { s, h: s_new - s, end: s_new, cont, y_end: y_new };

        let mut stop: Option<(usize, f64)> = None;
        let mut found: Vec<EventHit<D>> = Vec::new();
        for (idx, ev) in events.iter().enumerate() {
            let g_new = (ev.func)(s_new, &y_new);
            let g_old = g_prev[idx];
            let rising = g_old < 0.0 && g_new >= 0.0;
            let falling = g_old > 0.0 && g_new <= 0.0;
            let fires = match ev.crossing {
                Crossing::Rising => rising,
                Crossing::Falling => falling,
                Crossing::Either => rising || falling,
            };
            if fires {
                let sr = roots::bisect(|t| (ev.func)(t, &step.eval(t)), s, s_new, 1e-12).unwrap_or(s_new);
                found.push(EventHit { index: idx, s: sr, y: step.eval(sr) });
                if ev.terminal && stop.is_none_or(|(_, st)| (sr - s).abs() < (st - s).abs()) {
                    stop = Some((idx, sr));
                }
            }
            if g_new != 0.0 {
                g_prev[idx] = g_new;
            }
        }
        found.sort_by(|a, b| ((a.s - s).abs()).total_cmp(&(b.s - s).abs()));

        if let Some((index, s_stop)) = stop {
            let y_stop = step.eval(s_stop);
            traj.steps.push(Step { end: s_stop, y_end: y_stop, ..step });
            traj.hits.extend(found.into_iter().filter(|hit| (hit.s - s).abs() <= (s_stop - s).abs()));
            traj.termination = Termination::Event { index, s: s_stop };
            return Ok(traj);
        }
        traj.hits.extend(found);
        traj.steps.push(step);
        s = s_new;
        y = y_new;
        k1 = k7;

        if y.iter().any(|v| v.abs() > opts.overflow) {
            traj.termination = Termination::Overflow { s };
            return Ok(traj);
        }

        // PI step-size controller.
        let beta = 0.04;
        let mut fac = 0.9 * en.max(1e-10).powf(-0.2 + 0.75 * beta) * err_prev.powf(beta);
        fac = fac.clamp(0.2, 5.0);
        if rejected_last {
            fac = fac.min(1.0);
        }
        err_prev = en.max(1e-4);
        rejected_last = false;
        h = (h * fac).min(opts.max_step);
    }
    traj.termination = Termination::StepLimit { s };
    Ok(traj)
}
