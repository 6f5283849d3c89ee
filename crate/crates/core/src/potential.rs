//! Nonlinearities `f(u, r)`, their asymptotic exponents and the structural
//! sign conditions used to classify sub- and supercritical behaviour.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{quadrature, roots};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("dimension must be an integer > 2, got {0}")]
    Dimension(u32),
    #[error("exponent q = {0} must exceed 2")]
    Exponent(f64),
    #[error("family `{family}` expects {expected} exponent(s) and {coefficients} coefficient(s), got {got_q} and {got_k}")]
    Arity { family: &'static str, expected: usize, coefficients: usize, got_q: usize, got_k: usize },
    #[error("min-type family needs q1 < q2, got ({0}, {1})")]
    MinOrder(f64, f64),
    #[error("invalid coefficient: {0}")]
    Coefficient(String),
    #[error("derived exponent l = {0} is not above 2")]
    DegenerateL(f64),
    #[error("u = {0} must be non-negative")]
    NegativeU(f64),
    #[error("r = {0} must be positive")]
    NonPositiveR(f64),
    #[error("integrand behaves like s^{0} near 0, which is not integrable")]
    NonIntegrable(f64),
    #[error("grid must be non-empty, finite and increasing")]
    Grid,
    #[error("root finding failed: {0}")]
    Root(#[from] roots::RootError),
}

/// Coefficient `k(r) = c · r^δ · (1 + b·r^a)^p`.
///
/// Covers constants, pure powers `K0 r^δ`, `1 + r^a` and the Matukuma
/// weight `1/(1 + r^a)` while keeping both end asymptotics symbolic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub c: f64,
    pub delta: f64,
    pub b: f64,
    pub a: f64,
    pub p: f64,
}

/// Closed-form coefficient descriptors accepted in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "snake_case")]
pub enum CoefficientForm {
    Constant { c: f64 },
    Power { c: f64, delta: f64 },
    OnePlusPower { a: f64 },
    Matukuma { a: f64 },
    AffinePower { c: f64, delta: f64, b: f64, a: f64, p: f64 },
}

impl From<CoefficientForm> for Coefficient {
    fn from(form: CoefficientForm) -> Self {
        match form {
            CoefficientForm::Constant { c } => Coefficient::constant(c),
            CoefficientForm::Power { c, delta } => Coefficient { c, delta, b: 0.0, a: 1.0, p: 0.0 },
            CoefficientForm::OnePlusPower { a } => Coefficient { c: 1.0, delta: 0.0, b: 1.0, a, p: 1.0 },
            CoefficientForm::Matukuma { a } => Coefficient { c: 1.0, delta: 0.0, b: 1.0, a, p: -1.0 },
            CoefficientForm::AffinePower { c, delta, b, a, p } => Coefficient { c, delta, b, a, p },
        }
    }
}

/// Power-law behaviour `k(r) ~ coef · r^exponent` at one end of `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptote {
    pub coef: f64,
    pub exponent: f64,
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Self { c, delta: 0.0, b: 0.0, a: 1.0, p: 0.0 }
    }

    fn has_bracket(&self) -> bool {
        self.b > 0.0 && self.p != 0.0
    }

    fn validate(&self) -> Result<(), PotentialError> {
        let bad = |msg: &str| Err(PotentialError::Coefficient(format!("{msg}: {self:?}")));
        if ![self.c, self.delta, self.b, self.a, self.p].iter().all(|v| v.is_finite()) {
            return bad("non-finite parameter");
        }
        if self.c <= 0.0 {
            return bad("scale c must be positive");
        }
        if self.b < 0.0 {
            return bad("b must be non-negative");
        }
        if self.has_bracket() && self.a <= 0.0 {
            return bad("a must be positive");
        }
        if self.delta <= -2.0 {
            return bad("r^2 k(r) must stay bounded at 0, need delta > -2");
        }
        if self.at_infinity().exponent <= -2.0 {
            return bad("decay at infinity must be slower than r^-2");
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        let base = self.c * r.powf(self.delta);
        if self.has_bracket() {
            base * (1.0 + self.b * r.powf(self.a)).powf(self.p)
        } else {
            base
        }
    }

    /// `r·k'(r)/k(r)`, the local power exponent.
    pub fn log_slope(&self, r: f64) -> f64 {
        if self.has_bracket() {
            let t = self.b * r.powf(self.a);
            self.delta + self.p * self.a * t / (1.0 + t)
        } else {
            self.delta
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.eval(r) * self.log_slope(r) / r
    }

    pub fn at_zero(&self) -> Asymptote {
        Asymptote { coef: self.c, exponent: self.delta }
    }

    pub fn at_infinity(&self) -> Asymptote {
        if self.has_bracket() {
            Asymptote { coef: self.c * self.b.powf(self.p), exponent: self.delta + self.a * self.p }
        } else {
            Asymptote { coef: self.c, exponent: self.delta }
        }
    }

    /// Rate at which `k(r)/(coef·r^exponent) → 1` in `s = ln r`, at either end.
    fn correction_rate(&self) -> Option<f64> {
        self.has_bracket().then_some(self.a)
    }

    fn is_constant(&self) -> bool {
        self.delta == 0.0 && !self.has_bracket()
    }
}

/// One `k(r) u^{q−1}` summand (or branch, for the min-type family).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub q: f64,
    pub k: Coefficient,
}

impl Term {
    /// `l = 2(q + δ)/(2 + δ)` for a power exponent δ of the coefficient.
    pub fn l_for(&self, exponent: f64) -> f64 {
        2.0 * (self.q + exponent) / (2.0 + exponent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    PurePower { q: f64 },
    SingleK { term: Term },
    SumK { terms: [Term; 2] },
    MinK { q_low: f64, q_high: f64, k: Coefficient },
}

/// Validated nonlinearity together with its dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    n: u32,
    family: Family,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    PurePower,
    SingleK,
    SumK,
    MinK,
}

/// Serialized form of a [`PotentialSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub n: u32,
    pub family: FamilyName,
    pub q: Vec<f64>,
    #[serde(default)]
    pub k: Vec<CoefficientForm>,
}

impl TryFrom<PotentialConfig> for PotentialSpec {
    type Error = PotentialError;

    fn try_from(cfg: PotentialConfig) -> Result<Self, Self::Error> {
        let arity = |family: &'static str, expected: usize, coefficients: usize| {
            if cfg.q.len() == expected && cfg.k.len() == coefficients {
                Ok(())
            } else {
                Err(PotentialError::Arity { family, expected, coefficients, got_q: cfg.q.len(), got_k: cfg.k.len() })
            }
        };
        let family = match cfg.family {
            FamilyName::PurePower => {
                arity("pure_power", 1, 0)?;
                Family::PurePower { q: cfg.q[0] }
            }
            FamilyName::SingleK => {
                arity("single_k", 1, 1)?;
                Family::SingleK { term: Term { q: cfg.q[0], k: cfg.k[0].into() } }
            }
            FamilyName::SumK => {
                arity("sum_k", 2, 2)?;
                Family::SumK {
                    terms: [Term { q: cfg.q[0], k: cfg.k[0].into() }, Term { q: cfg.q[1], k: cfg.k[1].into() }],
                }
            }
            FamilyName::MinK => {
                arity("min_k", 2, 1)?;
                Family::MinK { q_low: cfg.q[0], q_high: cfg.q[1], k: cfg.k[0].into() }
            }
        };
        PotentialSpec::new(cfg.n, family)
    }
}

/// Structural sign verdict of the H± or A± test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HSign {
    HPlus,
    HMinus,
    Boundary,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ASign {
    APlus,
    AMinus,
    Neither,
}

/// End of the radial axis (`s → −∞` or `s → +∞`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum End {
    Origin,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    pub n: u32,
    pub serrin: f64,
    pub sobolev: f64,
    pub fujita_plus_one: f64,
    pub sigma_low: f64,
    /// `+∞` (serialized as `null`) when the stable node regime is absent.
    #[serde(with = "crate::export::extended_f64")]
    pub sigma_high: f64,
    /// Larger root of the node/focus discriminant, where the stable node
    /// regime begins. The tabulated `sigma_high` sits exactly one below it.
    #[serde(with = "crate::export::extended_f64")]
    pub stable_node_threshold: f64,
    pub l_u: f64,
    pub l_s: f64,
    pub m_u: f64,
    pub m_s: f64,
}

pub fn m_of(l: f64) -> f64 {
    2.0 / (l - 2.0)
}

pub fn serrin(n: u32) -> f64 {
    let n = f64::from(n);
    2.0 * (n - 1.0) / (n - 2.0)
}

pub fn sobolev(n: u32) -> f64 {
    let n = f64::from(n);
    2.0 * n / (n - 2.0)
}

pub fn fujita_plus_one(n: u32) -> f64 {
    let n = f64::from(n);
    2.0 * (n + 1.0) / n
}

/// Node/focus threshold below the Sobolev exponent.
pub fn sigma_low_closed(n: u32) -> f64 {
    let n = f64::from(n);
    let w = (n - 1.0).sqrt();
    2.0 * (n - 2.0 + 2.0 * w) / (n + 2.0 * w - 4.0)
}

/// Tabulated upper exponent, infinite for n ≤ 10. This is the
/// Joseph–Lundgren value for `f = u^p`; with `f = u^{q−1}` the focus/node
/// transition in `q` is one larger (see [`sigma_by_root_finding`]).
pub fn sigma_high_closed(n: u32) -> f64 {
    if n <= 10 {
        return f64::INFINITY;
    }
    let n = f64::from(n);
    ((n - 2.0).powi(2) - 4.0 * n + 8.0 * (n - 1.0).sqrt()) / ((n - 2.0) * (n - 10.0))
}

/// Discriminant of the linearisation at the positive fixed point for a
/// homogeneous nonlinearity of degree `l − 1` in its own frame.
pub fn node_focus_discriminant(n: u32, l: f64) -> f64 {
    let nf = f64::from(n);
    let m = m_of(l);
    let a = nf - 2.0 - 2.0 * m;
    let c = m * (nf - 2.0 - m);
    a * a - 4.0 * (l - 2.0) * c
}

/// Roots of [`node_focus_discriminant`] in `l > 2_*` by bracketing.
pub fn sigma_by_root_finding(n: u32) -> Result<(f64, f64), PotentialError> {
    let nf = f64::from(n);
    let disc = |l: f64| node_focus_discriminant(n, l);
    let l_of_m = |m: f64| 2.0 + 2.0 / m;
    let lower_edge = serrin(n) * (1.0 + 1e-14);
    // The discriminant is convex in m = 2/(l−2) with its minimum at m = (n−4)/2.
    let m_mid = (nf - 4.0) / 2.0;
    let far = if m_mid > 0.0 { l_of_m(m_mid) } else { 1e12 };
    let low = roots::brent(disc, lower_edge, far, 1e-14, 200)?;
    let high = if n > 10 {
        roots::brent(disc, far, 1e15, 1e-13, 400)?
    } else {
        f64::INFINITY
    };
    Ok((low, high))
}

impl PotentialSpec {
    pub fn new(n: u32, family: Family) -> Result<Self, PotentialError> {
        if n < 3 {
            return Err(PotentialError::Dimension(n));
        }
        let spec = Self { n, family };
        for term in spec.terms() {
            if !(term.q.is_finite() && term.q > 2.0) {
                return Err(PotentialError::Exponent(term.q));
            }
            term.k.validate()?;
        }
        if let Family::MinK { q_low, q_high, .. } = spec.family {
            if q_low >= q_high {
                return Err(PotentialError::MinOrder(q_low, q_high));
            }
        }
        Ok(spec)
    }

    pub fn pure_power(n: u32, q: f64) -> Result<Self, PotentialError> {
        Self::new(n, Family::PurePower { q })
    }

    pub fn single_k(n: u32, q: f64, k: impl Into<Coefficient>) -> Result<Self, PotentialError> {
        Self::new(n, Family::SingleK { term: Term { q, k: k.into() } })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> f64 {
        f64::from(self.n)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_pure_power(&self) -> bool {
        match &self.family {
            Family::PurePower { .. } => true,
            Family::SingleK { term } => term.k.is_constant() && term.k.c == 1.0,
            _ => false,
        }
    }

    pub fn to_config(&self) -> PotentialConfig {
        let form = |k: &Coefficient| CoefficientForm::AffinePower { c: k.c, delta: k.delta, b: k.b, a: k.a, p: k.p };
        let (family, q, k) = match &self.family {
            Family::PurePower { q } => (FamilyName::PurePower, vec![*q], vec![]),
            Family::SingleK { term } => (FamilyName::SingleK, vec![term.q], vec![form(&term.k)]),
            Family::SumK { terms } => {
                (FamilyName::SumK, vec![terms[0].q, terms[1].q], vec![form(&terms[0].k), form(&terms[1].k)])
            }
            Family::MinK { q_low, q_high, k } => (FamilyName::MinK, vec![*q_low, *q_high], vec![form(k)]),
        };
        PotentialConfig { n: self.n, family, q, k }
    }

    /// Summands (or branches) `k_i(r) u^{q_i − 1}`.
    pub fn terms(&self) -> Vec<Term> {
        match &self.family {
            Family::PurePower { q } => vec![Term { q: *q, k: Coefficient::constant(1.0) }],
            Family::SingleK { term } => vec![*term],
            Family::SumK { terms } => terms.to_vec(),
            Family::MinK { q_low, q_high, k } => vec![Term { q: *q_low, k: *k }, Term { q: *q_high, k: *k }],
        }
    }

    /// `f(u, r)` without argument checks; negative `u` uses the odd extension.
    pub fn f(&self, u: f64, r: f64) -> f64 {
        if u < 0.0 {
            return -self.f(-u, r);
        }
        match &self.family {
            Family::PurePower { q } => u.powf(q - 1.0),
            Family::SingleK { term } => term.k.eval(r) * u.powf(term.q - 1.0),
            Family::SumK { terms } => terms.iter().map(|t| t.k.eval(r) * u.powf(t.q - 1.0)).sum(),
            Family::MinK { q_low, q_high, k } => {
                let q = if u <= 1.0 { *q_high } else { *q_low };
                k.eval(r) * u.powf(q - 1.0)
            }
        }
    }

    /// `∂f/∂u`, even in `u`.
    pub fn df_du(&self, u: f64, r: f64) -> f64 {
        let u = u.abs();
        let pow = |q: f64| if q == 2.0 { 1.0 } else { (q - 1.0) * u.powf(q - 2.0) };
        match &self.family {
            Family::PurePower { q } => pow(*q),
            Family::SingleK { term } => term.k.eval(r) * pow(term.q),
            Family::SumK { terms } => terms.iter().map(|t| t.k.eval(r) * pow(t.q)).sum(),
            Family::MinK { q_low, q_high, k } => k.eval(r) * pow(if u <= 1.0 { *q_high } else { *q_low }),
        }
    }

    /// `F(u, r) = ∫₀^u f(a, r) da` in closed form, even in `u`.
    pub fn primitive(&self, u: f64, r: f64) -> f64 {
        let u = u.abs();
        match &self.family {
            Family::PurePower { q } => u.powf(*q) / q,
            Family::SingleK { term } => term.k.eval(r) * u.powf(term.q) / term.q,
            Family::SumK { terms } => terms.iter().map(|t| t.k.eval(r) * u.powf(t.q) / t.q).sum(),
            Family::MinK { q_low, q_high, k } => k.eval(r) * min_branch_primitive(u, *q_low, *q_high),
        }
    }

    /// `∂F/∂r`.
    pub fn primitive_dr(&self, u: f64, r: f64) -> f64 {
        let u = u.abs();
        match &self.family {
            Family::PurePower { .. } => 0.0,
            Family::SingleK { term } => term.k.derivative(r) * u.powf(term.q) / term.q,
            Family::SumK { terms } => terms.iter().map(|t| t.k.derivative(r) * u.powf(t.q) / t.q).sum(),
            Family::MinK { q_low, q_high, k } => k.derivative(r) * min_branch_primitive(u, *q_low, *q_high),
        }
    }

    /// Smallest exponent present near `u = 0`, which fixes the leading behaviour of `f`.
    fn small_u_exponent(&self) -> f64 {
        match &self.family {
            Family::MinK { q_high, .. } => *q_high,
            _ => self.terms().iter().map(|t| t.q).fold(f64::INFINITY, f64::min),
        }
    }

    /// `F(u, r)` by adaptive quadrature; the leading power `u^{q−1}` is
    /// absorbed by the substitution `a = u·t^{1/q}`.
    pub fn primitive_by_quadrature(&self, u: f64, r: f64) -> f64 {
        let u = u.abs();
        if u == 0.0 {
            return 0.0;
        }
        let q = self.small_u_exponent();
        let integrand = |t: f64| {
            if t == 0.0 {
                return 0.0;
            }
            let a = u * t.powf(1.0 / q);
            self.f(a, r) * u * t.powf(1.0 / q - 1.0) / q
        };
        // MinK switches branch at a = 1, i.e. t = u^{−q}.
        let mut breaks = vec![0.0, 1.0];
        if matches!(self.family, Family::MinK { .. }) && u > 1.0 {
            breaks.insert(1, u.powf(-q));
        }
        quadrature::integrate_pieces(integrand, &breaks, 1e-13, 0.0).value
    }

    pub fn asymptotes(&self, end: End) -> Vec<(Term, Asymptote)> {
        self.terms()
            .into_iter()
            .map(|t| {
                let asym = match end {
                    End::Origin => t.k.at_zero(),
                    End::Infinity => t.k.at_infinity(),
                };
                (t, asym)
            })
            .collect()
    }

    /// Frame exponent dictated by one end of the radial axis.
    ///
    /// For the min-type family the branch that actually dominates is used:
    /// `u^{q1−1}` for large `u` (near the origin) and `u^{q2−1}` for small `u`
    /// (near infinity).
    pub fn frame_exponent(&self, end: End) -> f64 {
        let asym = self.asymptotes(end);
        match (&self.family, end) {
            (Family::MinK { .. }, End::Origin) => asym[0].0.l_for(asym[0].1.exponent),
            (Family::MinK { .. }, End::Infinity) => asym[1].0.l_for(asym[1].1.exponent),
            (_, End::Origin) => asym.iter().map(|(t, a)| t.l_for(a.exponent)).fold(f64::NEG_INFINITY, f64::max),
            (_, End::Infinity) => asym.iter().map(|(t, a)| t.l_for(a.exponent)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Homogeneous limit `g(y) = Σ coef·y^{q−1}` of the Fowler nonlinearity
    /// in the frame `frame_exponent(end)`.
    pub fn limit_monomials(&self, end: End) -> Vec<(f64, f64)> {
        let l_end = self.frame_exponent(end);
        let asym = self.asymptotes(end);
        match &self.family {
            Family::MinK { .. } => {
                let (t, a) = if end == End::Origin { asym[0] } else { asym[1] };
                vec![(a.coef, t.q)]
            }
            _ => asym
                .iter()
                .filter(|(t, a)| (t.l_for(a.exponent) - l_end).abs() <= 1e-12 * l_end)
                .map(|(t, a)| (a.coef, t.q))
                .collect(),
        }
    }

    /// Default augmentation rate: half the slowest rate at which the
    /// Fowler nonlinearity approaches its limit at either end.
    pub fn default_varpi(&self) -> f64 {
        let mut rates: Vec<f64> = self.terms().iter().filter_map(|t| t.k.correction_rate()).collect();
        if !matches!(self.family, Family::MinK { .. }) {
            for end in [End::Origin, End::Infinity] {
                let m = m_of(self.frame_exponent(end));
                for (t, a) in self.asymptotes(end) {
                    let rate = ((2.0 + a.exponent) - m * (t.q - 2.0)).abs();
                    if rate > 1e-12 {
                        rates.push(rate);
                    }
                }
            }
        }
        rates.into_iter().fold(f64::INFINITY, f64::min).min(2.0) * 0.5
    }
}

fn min_branch_primitive(u: f64, q_low: f64, q_high: f64) -> f64 {
    if u <= 1.0 {
        u.powf(q_high) / q_high
    } else {
        1.0 / q_high + (u.powf(q_low) - 1.0) / q_low
    }
}

pub fn critical_exponents(spec: &PotentialSpec) -> Result<CriticalExponents, PotentialError> {
    let n = spec.n();
    let l_u = spec.frame_exponent(End::Origin);
    let l_s = spec.frame_exponent(End::Infinity);
    for l in [l_u, l_s] {
        if !(l > 2.0) {
            return Err(PotentialError::DegenerateL(l));
        }
    }
    let (sigma_low, stable_node_threshold) = if spec.is_pure_power() {
        (sigma_low_closed(n), sigma_high_closed(n) + 1.0)
    } else {
        sigma_by_root_finding(n)?
    };
    Ok(CriticalExponents {
        n,
        serrin: serrin(n),
        sobolev: sobolev(n),
        fujita_plus_one: fujita_plus_one(n),
        sigma_low,
        sigma_high: sigma_high_closed(n),
        stable_node_threshold,
        l_u,
        l_s,
        m_u: m_of(l_u),
        m_s: m_of(l_s),
    })
}

pub fn eval_f(spec: &PotentialSpec, u: f64, r: f64) -> Result<f64, PotentialError> {
    check_args(u, r)?;
    Ok(spec.f(u, r))
}

pub fn eval_primitive(spec: &PotentialSpec, u: f64, r: f64) -> Result<f64, PotentialError> {
    check_args(u, r)?;
    Ok(spec.primitive(u, r))
}

fn check_args(u: f64, r: f64) -> Result<(), PotentialError> {
    if !(u >= 0.0) {
        return Err(PotentialError::NegativeU(u));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(PotentialError::NonPositiveR(r));
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<(), PotentialError> {
    let ok = !grid.is_empty() && grid.iter().all(|v| v.is_finite()) && grid.windows(2).all(|w| w[1] > w[0]);
    if ok {
        Ok(())
    } else {
        Err(PotentialError::Grid)
    }
}

/// Log-spaced grid with `per_decade` points per factor of ten.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let count = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=count).map(|i| lo * (hi / lo).powf(i as f64 / count as f64)).collect()
}

/// Evaluates, for every term, the running integral
/// `∫₀^r s^{(n−2)q/2} d/ds[k(s) s^{(n−2)(2^*−q)/2}] ds`
/// on the grid and classifies the signs.
pub fn check_h_sign(spec: &PotentialSpec, r_grid: &[f64]) -> Result<HSign, PotentialError> {
    check_grid(r_grid)?;
    if r_grid[0] <= 0.0 {
        return Err(PotentialError::NonPositiveR(r_grid[0]));
    }
    let n = spec.dim();
    let mut values = Vec::new();
    let mut scale = 0.0_f64;
    for term in spec.terms() {
        // Expanding the derivative gives s^{n−1} k(s) [slope(s) + e] with e = n − (n−2)q/2.
        let e = n - (n - 2.0) * term.q / 2.0;
        let leading = n - 1.0 + term.k.delta;
        if leading <= -1.0 {
            return Err(PotentialError::NonIntegrable(leading));
        }
        let integrand = |s: f64| s.powf(n - 1.0) * term.k.eval(s) * (term.k.log_slope(s) + e);
        let magnitude = |s: f64| s.powf(n - 1.0) * term.k.eval(s) * (term.k.log_slope(s).abs() + e.abs() + 1.0);
        // First panel: s = r0·t^{1/(leading+1)} absorbs the leading power.
        let r0 = r_grid[0];
        let head = |h: &dyn Fn(f64) -> f64| {
            let g = leading + 1.0;
            let sub = |t: f64| {
                if t == 0.0 {
                    return 0.0;
                }
                let s = r0 * t.powf(1.0 / g);
                h(s) * s.powf(-leading) * r0.powf(g) / g
            };
            quadrature::integrate(sub, 0.0, 1.0, 1e-12, 0.0, 400).value
        };
        let mut acc = head(&integrand);
        let mut acc_mag = head(&magnitude);
        values.push(acc);
        for w in r_grid.windows(2) {
            acc += quadrature::integrate(integrand, w[0], w[1], 1e-12, 0.0, 400).value;
            acc_mag += quadrature::integrate(magnitude, w[0], w[1], 1e-12, 0.0, 400).value;
            values.push(acc);
        }
        scale = scale.max(acc_mag);
    }
    Ok(classify_signs(&values, scale, 1e-12, 1e-9))
}

fn classify_signs(values: &[f64], scale: f64, zero_tol: f64, strict_tol: f64) -> HSign {
    if scale == 0.0 || values.iter().all(|v| v.abs() <= zero_tol * scale) {
        return HSign::Boundary;
    }
    let noise = strict_tol * scale;
    let any_pos = values.iter().any(|&v| v > noise);
    let any_neg = values.iter().any(|&v| v < -noise);
    match (any_pos, any_neg) {
        (true, false) => HSign::HPlus,
        (false, true) => HSign::HMinus,
        (false, false) => HSign::Boundary,
        (true, true) => HSign::Indeterminate,
    }
}

/// `G(y1, s; 2^*) = e^{ns} F(y1 e^{−(n−2)s/2}, e^s)`.
pub fn sobolev_frame_primitive(spec: &PotentialSpec, y1: f64, s: f64) -> f64 {
    let n = spec.dim();
    let m = (n - 2.0) / 2.0;
    (n * s).exp() * spec.primitive(y1 * (-m * s).exp(), s.exp())
}

/// Samples `∂G/∂s` in the Sobolev frame on the product grid and classifies its sign.
pub fn check_a_sign(spec: &PotentialSpec, s_grid: &[f64], y1_grid: &[f64]) -> Result<ASign, PotentialError> {
    if s_grid.is_empty() || y1_grid.is_empty() || s_grid.iter().chain(y1_grid).any(|v| !v.is_finite()) {
        return Err(PotentialError::Grid);
    }
    let h = 1e-5;
    let (mut any_pos, mut any_neg) = (false, false);
    for &s in s_grid {
        for &y in y1_grid {
            let g = sobolev_frame_primitive(spec, y, s);
            let dg = (sobolev_frame_primitive(spec, y, s + h) - sobolev_frame_primitive(spec, y, s - h)) / (2.0 * h);
            let noise = 1e-9 * g.abs();
            any_pos |= dg > noise;
            any_neg |= dg < -noise;
        }
    }
    Ok(match (any_pos, any_neg) {
        (true, false) => ASign::APlus,
        (false, true) => ASign::AMinus,
        _ => ASign::Neither,
    })
}

impl Coefficient {
    /// `ln k(e^s)`, stable for large `|s|`.
    pub fn ln_at_log_radius(&self, s: f64) -> f64 {
        let mut v = self.c.ln() + self.delta * s;
        if self.has_bracket() {
            let x = self.a * s;
            let bracket = if x > 0.0 { x + (self.b + (-x).exp()).ln() } else { (self.b * x.exp()).ln_1p() };
            v += self.p * bracket;
        }
        v
    }

    /// `r k'(r)/k(r)` at `r = e^s`, stable for large `|s|`.
    pub fn log_slope_at_log_radius(&self, s: f64) -> f64 {
        if !self.has_bracket() {
            return self.delta;
        }
        let x = self.a * s;
        let frac = if x > 0.0 { 1.0 / (1.0 + (-x).exp() / self.b) } else { let t = self.b * x.exp(); t / (1.0 + t) };
        self.delta + self.p * self.a * frac
    }
}
