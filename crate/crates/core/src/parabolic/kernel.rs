//! Exact radial heat kernel in three dimensions and the Picard iteration
//! of the mild formulation built on it.

use serde::{Deserialize, Serialize};

use super::{ParabolicError, Reaction};
use crate::quadrature::integrate_pieces;

/// Half-width of the Gaussian window, in units of `√t`; the neglected
/// mass is below `e^{−49}`.
const WINDOW: f64 = 14.0;

/// Natural cubic spline through `(r_j, u_j)`, zero beyond the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    r: Vec<f64>,
    u: Vec<f64>,
    second: Vec<f64>,
}

impl RadialProfile {
    pub fn new(r: Vec<f64>, u: Vec<f64>) -> Result<Self, ParabolicError> {
        if r.len() != u.len() || r.len() < 2 {
            return Err(ParabolicError::Grid("profile needs at least two matching samples".into()));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) || r[0] < 0.0 {
            return Err(ParabolicError::Grid("profile radii must be non-negative and increasing".into()));
        }
        let second = natural_second_derivatives(&r, &u);
        Ok(Self { r, u, second })
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn r_max(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    /// Spline value; the first value is held below the first node.
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.r.len() - 1;
        if x > self.r[last] {
            return 0.0;
        }
        if x <= self.r[0] {
            return self.u[0];
        }
        let k = self.r.partition_point(|&v| v <= x).clamp(1, last);
        let (a, b) = (self.r[k - 1], self.r[k]);
        let h = b - a;
        let t = (x - a) / h;
        let s = 1.0 - t;
        s * self.u[k - 1]
            + t * self.u[k]
            + h * h / 6.0 * ((s * s * s - s) * self.second[k - 1] + (t * t * t - t) * self.second[k])
    }

    /// The same radii with new values.
    pub fn with_values(&self, u: Vec<f64>) -> Self {
        let second = natural_second_derivatives(&self.r, &u);
        Self { r: self.r.clone(), u, second }
    }
}

fn natural_second_derivatives(r: &[f64], u: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Tridiagonal system for the interior second derivatives.
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = r[i] - r[i - 1];
        let h1 = r[i + 1] - r[i];
        let diag = 2.0 * (h0 + h1);
        let rhs = 6.0 * ((u[i + 1] - u[i]) / h1 - (u[i] - u[i - 1]) / h0);
        let denom = diag - h0 * c_prime[i - 1];
        c_prime[i] = h1 / denom;
        d_prime[i] = (rhs - h0 * d_prime[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}

/// `(e^{tΔ}φ)(r)` for a radial `φ` in three dimensions:
/// `(r√(4πt))⁻¹ ∫₀^∞ s φ(s) [e^{−(r−s)²/4t} − e^{−(r+s)²/4t}] ds`.
pub fn heat_semigroup_3d_at(phi: &impl Fn(f64) -> f64, r: f64, t: f64, support: f64) -> f64 {
    if t == 0.0 {
        return phi(r);
    }
    let width = WINDOW * t.sqrt();
    let norm = (4.0 * std::f64::consts::PI * t).sqrt();
    if r <= 1e-12 * t.sqrt() {
        let hi = width.min(support);
        let q = integrate_pieces(
            |s| s * s * phi(s) * (-s * s / (4.0 * t)).exp(),
            &[0.0, (2.0 * t.sqrt()).min(hi), hi],
            1e-12,
            1e-300,
        );
        return 4.0 * std::f64::consts::PI * q.value / (norm * norm * norm);
    }
    let lo = (r - width).max(0.0);
    let hi = (r + width).min(support);
    if hi <= lo {
        return 0.0;
    }
    let kernel = |s: f64| s * phi(s) * (-(r - s) * (r - s) / (4.0 * t)).exp() * -(-r * s / t).exp_m1();
    let mut breaks = vec![lo];
    if r > lo && r < hi {
        breaks.push(r);
    }
    breaks.push(hi);
    integrate_pieces(kernel, &breaks, 1e-12, 1e-300).value / (r * norm)
}

/// `e^{tΔ}φ` at every radius in `radii`.
pub fn heat_semigroup_3d_fn(phi: impl Fn(f64) -> f64, radii: &[f64], t: f64) -> Vec<f64> {
    radii.iter().map(|&r| heat_semigroup_3d_at(&phi, r, t, f64::INFINITY)).collect()
}

/// `e^{tΔ}φ` at the profile's own radii, with `φ` extended by zero.
pub fn heat_semigroup_3d(phi: &RadialProfile, t: f64) -> Vec<f64> {
    let support = phi.r_max();
    phi.radii().iter().map(|&r| heat_semigroup_3d_at(&|s| phi.eval(s), r, t, support)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Number of Duhamel time panels; at least 32 are used.
    pub time_nodes: usize,
    pub iterations: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { time_nodes: 32, iterations: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardResult {
    pub t: f64,
    pub radii: Vec<f64>,
    /// Last iterate at time `t`.
    pub u: Vec<f64>,
    /// Sup-norm change of the whole space-time iterate, one per iteration.
    pub residuals: Vec<f64>,
}

impl PicardResult {
    pub fn residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

/// Second derivatives of the natural spline as a linear map of the values.
fn spline_moment_matrix(r: &[f64]) -> Vec<Vec<f64>> {
    let n = r.len();
    let mut columns = Vec::with_capacity(n);
    let mut unit = vec![0.0; n];
    for i in 0..n {
        unit[i] = 1.0;
        columns.push(natural_second_derivatives(r, &unit));
        unit[i] = 0.0;
    }
    // Row k holds the coefficients of M_k.
    (0..n).map(|k| columns.iter().map(|c| c[k]).collect()).collect()
}

/// `e^{τΔ}` restricted to splines on fixed knots, as a dense matrix acting
/// on the knot values; the spline is extended by zero past the last knot.
fn heat_matrix(r: &[f64], moments: &[Vec<f64>], tau: f64) -> Vec<Vec<f64>> {
    let n = r.len();
    let width = WINDOW * tau.sqrt();
    let norm = (4.0 * std::f64::consts::PI * tau).sqrt();
    let mut matrix = vec![vec![0.0; n]; n];
    for (j, row) in matrix.iter_mut().enumerate() {
        let x = r[j];
        let at_origin = x <= 1e-12 * tau.sqrt();
        let kernel = |s: f64| {
            if at_origin {
                4.0 * std::f64::consts::PI * s * s * (-s * s / (4.0 * tau)).exp() / (norm * norm * norm)
            } else {
                s * (-(x - s) * (x - s) / (4.0 * tau)).exp() * -(-x * s / tau).exp_m1() / (x * norm)
            }
        };
        for k in 1..n {
            let (a, b) = (r[k - 1], r[k]);
            if b < x - width || a > x + width {
                continue;
            }
            let h = b - a;
            let (mut wa, mut wb, mut wma, mut wmb) = (0.0, 0.0, 0.0, 0.0);
            for (s, w) in crate::quadrature::kronrod_rule(a, b) {
                let kw = w * kernel(s);
                let t = (s - a) / h;
                let u = 1.0 - t;
                wa += kw * u;
                wb += kw * t;
                wma += kw * h * h / 6.0 * (u * u * u - u);
                wmb += kw * h * h / 6.0 * (t * t * t - t);
            }
            row[k - 1] += wa;
            row[k] += wb;
            for (i, v) in row.iter_mut().enumerate() {
                *v += wma * moments[k - 1][i] + wmb * moments[k][i];
            }
        }
    }
    matrix
}

fn apply(matrix: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    matrix.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Iterates `u ↦ e^{tΔ}φ + ∫₀^t e^{(t−s)Δ} f(u(s)) ds` on the radii of
/// `phi`, with the trapezoidal rule in time and the exact kernel in space.
/// Every time slice is represented by the natural cubic spline through its
/// node values, so the kernel reduces to one matrix per time lag.
pub fn picard_mild(
    reaction: &(impl Reaction + ?Sized),
    phi: &RadialProfile,
    t: f64,
    opts: &PicardOptions,
) -> Result<PicardResult, ParabolicError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(ParabolicError::Time(t));
    }
    if reaction.dim() != 3 {
        return Err(ParabolicError::Dimension(reaction.dim()));
    }
    let panels = opts.time_nodes.max(32);
    let dt = t / panels as f64;
    let radii = phi.radii().to_vec();
    let moments = spline_moment_matrix(&radii);
    let kernels: Vec<Vec<Vec<f64>>> =
        (1..=panels).map(|lag| heat_matrix(&radii, &moments, lag as f64 * dt)).collect();
    let mut free = vec![phi.values().to_vec()];
    free.extend(kernels.iter().map(|k| apply(k, phi.values())));

    let mut iterate = free.clone();
    let mut residuals = Vec::with_capacity(opts.iterations);
    for _ in 0..opts.iterations {
        let sources: Vec<Vec<f64>> =
            iterate.iter().map(|u| radii.iter().zip(u).map(|(&r, &v)| reaction.value(v, r)).collect()).collect();
        let mut next = free.clone();
        for k in 1..=panels {
            for (i, source) in sources.iter().enumerate().take(k + 1) {
                let weight = if i == 0 || i == k { 0.5 * dt } else { dt };
                let flowed = if i == k { source.clone() } else { apply(&kernels[k - i - 1], source) };
                for (acc, v) in next[k].iter_mut().zip(flowed) {
                    *acc += weight * v;
                }
            }
        }
        let change = next
            .iter()
            .zip(&iterate)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        if !change.is_finite() {
            return Err(ParabolicError::Contraction { residuals });
        }
        residuals.push(change);
        iterate = next;
        if change == 0.0 {
            break;
        }
    }
    // Growth at round-off level is not a failure of the contraction.
    let scale = free.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
    let grows = residuals.windows(2).any(|w| w[1] > w[0] && w[1] > 1e-12 * scale);
    if grows {
        return Err(ParabolicError::Contraction { residuals });
    }
    Ok(PicardResult { t, radii, u: iterate.pop().expect("at least one time node"), residuals })
}
