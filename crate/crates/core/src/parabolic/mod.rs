//! Radial Cauchy problem `u_t = Δu + f(u, |x|)`: method of lines with an
//! implicit, error-controlled time stepper, fate detection, comparison
//! checks and a mild-solution oracle.

mod discrete;
mod fate;
mod grid;
mod kernel;
mod stepper;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::{critical_exponents, PotentialError, PotentialSpec};
use crate::roots;

pub use discrete::{discrete_barrier, march_inward, march_outward, DiscreteBarrier};
pub use fate::{detect_fate, Fate, FateControls, NormSeries};
pub use grid::{GridSpec, RadialGrid};
pub use kernel::{
    heat_semigroup_3d, heat_semigroup_3d_at, heat_semigroup_3d_fn, picard_mild, PicardOptions, PicardResult,
    RadialProfile,
};
pub use stepper::{comparison_check, evolve, EvolutionResult, EvolveControls, Monotonicity, Snapshot};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParabolicError {
    #[error("grid: {0}")]
    Grid(String),
    #[error("the exact kernel is three-dimensional, got n = {0}")]
    Dimension(u32),
    #[error("time must be positive and finite, got {0}")]
    Time(f64),
    #[error("initial data must be non-negative; node {node} (r = {r}) holds {value}")]
    Sign { node: usize, r: f64, value: f64 },
    #[error("initial data has {len} values for a grid of {nodes} nodes")]
    Length { len: usize, nodes: usize },
    #[error("non-finite state at t = {t} (node {node}, r = {r}) after {steps} steps")]
    NonFinite { t: f64, node: usize, r: f64, steps: usize },
    #[error("weight exponent nu = {nu} must lie in [0, m(l_u)) = [0, {limit})")]
    Weight { nu: f64, limit: f64 },
    #[error("Picard residuals grow: {residuals:?}")]
    Contraction { residuals: Vec<f64> },
    #[error("barrier cannot be discretised: {0}")]
    Barrier(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Source term of the evolution; `value` must be odd-compatible with
/// negative states only as far as the stepper may visit them.
pub trait Reaction: Sync {
    fn dim(&self) -> u32;
    fn value(&self, u: f64, r: f64) -> f64;
    fn derivative(&self, u: f64, r: f64) -> f64;
}

impl Reaction for PotentialSpec {
    fn dim(&self) -> u32 {
        self.n()
    }

    fn value(&self, u: f64, r: f64) -> f64 {
        self.f(u, r)
    }

    fn derivative(&self, u: f64, r: f64) -> f64 {
        self.df_du(u, r)
    }
}

/// Pure heat flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoReaction(pub u32);

impl Reaction for NoReaction {
    fn dim(&self) -> u32 {
        self.0
    }

    fn value(&self, _: f64, _: f64) -> f64 {
        0.0
    }

    fn derivative(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// `f = λu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearReaction {
    pub n: u32,
    pub lambda: f64,
}

impl Reaction for LinearReaction {
    fn dim(&self) -> u32 {
        self.n
    }

    fn value(&self, u: f64, _: f64) -> f64 {
        self.lambda * u
    }

    fn derivative(&self, _: f64, _: f64) -> f64 {
        self.lambda
    }
}

/// `w(r) = r^ν` for `r ≤ 1` and `r^{outer}` for `r ≥ 1`, where `outer`
/// plays the role of `ℓ/δ` (zero for coefficients without growth).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub nu: f64,
    #[serde(default)]
    pub outer: f64,
}

impl WeightSpec {
    pub fn new(nu: f64, outer: f64) -> Self {
        Self { nu, outer }
    }

    /// Checks `0 ≤ ν < m(l_u)` and `outer ≥ 0` for `spec`.
    pub fn validated(self, spec: &PotentialSpec) -> Result<Self, ParabolicError> {
        let limit = critical_exponents(spec)?.m_u;
        if !(self.nu >= 0.0 && self.nu < limit) || !(self.outer >= 0.0) {
            return Err(ParabolicError::Weight { nu: self.nu, limit });
        }
        Ok(self)
    }

    pub fn at(&self, r: f64) -> f64 {
        if r <= 1.0 {
            if self.nu == 0.0 {
                1.0
            } else {
                r.powf(self.nu)
            }
        } else if self.outer == 0.0 {
            1.0
        } else {
            r.powf(self.outer)
        }
    }
}

/// `sup_j |u_j| w(r_j)`.
pub fn weighted_norm(radii: &[f64], u: &[f64], weight: &WeightSpec) -> f64 {
    radii.iter().zip(u).map(|(&r, &v)| v.abs() * weight.at(r)).fold(0.0, f64::max)
}

/// `sup_j |u_j| (1 + r_j^ν)`.
pub fn shifted_norm(radii: &[f64], u: &[f64], nu: f64) -> f64 {
    radii.iter().zip(u).map(|(&r, &v)| v.abs() * (1.0 + r.powf(nu))).fold(0.0, f64::max)
}

/// Ball radius and an existence horizon for the contraction argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionEstimate {
    pub rho: f64,
    pub d1: f64,
    /// Largest `T ≤ 1` with contraction factor at most one half; advisory.
    pub t0: f64,
}

/// `D_1 = e^{−ν/2}(16ν)^{ν/2}`, equal to one at `ν = 0`.
pub fn d1(nu: f64) -> f64 {
    if nu == 0.0 {
        1.0
    } else {
        (-nu / 2.0).exp() * (16.0 * nu).powf(nu / 2.0)
    }
}

/// `ρ = 2(2D_1 + 2^{ν+1} + 2^{outer})‖φ‖_X`, together with a horizon `T0`
/// found by bisection on the contraction factor
/// `Θ(T) = 2D_1 k⁻ T^γ/γ + (1 + 2^{outer}) k⁺ T`, `γ = δ(m(l_u) − ν)/2`.
/// Here `k⁻` and `k⁺` bound `∂f/∂u` on the ball inside and outside the
/// unit sphere and `δ = l_u − 2`.
pub fn suggested_rho_t(spec: &PotentialSpec, norm_x: f64, weight: &WeightSpec) -> Result<ContractionEstimate, ParabolicError> {
    let weight = weight.validated(spec)?;
    let ex = critical_exponents(spec)?;
    let d1 = d1(weight.nu);
    let rho = 2.0 * (2.0 * d1 + 2f64.powf(weight.nu + 1.0) + 2f64.powf(weight.outer)) * norm_x;
    let delta = ex.l_u - 2.0;
    let gamma = (delta * (ex.m_u - weight.nu) / 2.0).min(1.0);
    let inner_scale = 2.0 - delta * (ex.m_u - weight.nu);
    let k_minus = crate::potential::log_grid(1e-8, 1.0, 20)
        .into_iter()
        .map(|r| spec.df_du(rho / weight.at(r), r) * r.powf(inner_scale))
        .fold(0.0, f64::max);
    let k_plus = crate::potential::log_grid(1.0, 1e8, 20)
        .into_iter()
        .map(|r| spec.df_du(rho / weight.at(r), r))
        .fold(0.0, f64::max);
    let theta = |t: f64| 2.0 * d1 * k_minus * t.powf(gamma) / gamma + (1.0 + 2f64.powf(weight.outer)) * k_plus * t - 0.5;
    let t0 = if theta(1.0) <= 0.0 {
        1.0
    } else if !(k_minus + k_plus).is_finite() || gamma <= 0.0 {
        0.0
    } else {
        roots::bisect(theta, 0.0, 1.0, 1e-14).unwrap_or(0.0)
    };
    Ok(ContractionEstimate { rho, d1, t0 })
}
