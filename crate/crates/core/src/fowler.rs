//! Fowler variables `y1 = U r^m`, `y2 = U' r^{m+1}`, `s = ln r`, the planar
//! system they satisfy, its positive fixed point and the Pohozaev function.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::{m_of, sobolev, End, Family, PotentialSpec};
use crate::roots;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FowlerError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("frame exponent l = {0} must exceed 2")]
    BadFrame(f64),
    #[error("frame l = {frame} has no autonomous limit at {end:?}; expected l = {expected}")]
    FrameMismatch { frame: f64, end: End, expected: f64 },
    #[error("no positive fixed point: g(y)/y never reaches C(l) = {c} (l ≤ 2_* or degenerate g)")]
    NoPositiveRoot { c: f64 },
    #[error("root finding failed: {0}")]
    Root(#[from] roots::RootError),
}

/// Constants of the Fowler frame with exponent `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FowlerParams {
    pub n: u32,
    pub l: f64,
    pub m: f64,
    /// `A(l) = n − 2 − 2m`; minus the trace of the linearisation.
    pub a: f64,
    /// `C(l) = m (n − 2 − m)`.
    pub c: f64,
    pub varpi: f64,
}

impl FowlerParams {
    pub fn new(n: u32, l: f64, varpi: f64) -> Result<Self, FowlerError> {
        if !(l > 2.0) || !l.is_finite() {
            return Err(FowlerError::BadFrame(l));
        }
        let nf = f64::from(n);
        let m = m_of(l);
        Ok(Self { n, l, m, a: nf - 2.0 - 2.0 * m, c: m * (nf - 2.0 - m), varpi })
    }

    /// Frame with `l = 2^*`, where `m = (n−2)/2` and `A = 0` exactly.
    pub fn sobolev(n: u32, varpi: f64) -> Self {
        let nf = f64::from(n);
        let m = (nf - 2.0) / 2.0;
        Self { n, l: sobolev(n), m, a: 0.0, c: m * m, varpi }
    }

    pub fn for_spec(spec: &PotentialSpec, l: f64) -> Result<Self, FowlerError> {
        if (l - sobolev(spec.n())).abs() <= 1e-15 * l {
            return Ok(Self::sobolev(spec.n(), spec.default_varpi()));
        }
        Self::new(spec.n(), l, spec.default_varpi())
    }

    fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    /// `n − 2`.
    pub fn nf_minus_two(&self) -> f64 {
        self.nf() - 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub y1: f64,
    pub y2: f64,
    pub s: f64,
}

pub fn to_fowler(u: f64, du: f64, r: f64, params: &FowlerParams) -> Result<PhasePoint, FowlerError> {
    if !(r > 0.0) {
        return Err(FowlerError::NonPositiveRadius(r));
    }
    let s = r.ln();
    let rm = (params.m * s).exp();
    Ok(PhasePoint { y1: u * rm, y2: du * rm * r, s })
}

/// Returns `(U, U', r)`.
pub fn from_fowler(p: &PhasePoint, params: &FowlerParams) -> (f64, f64, f64) {
    let r = p.s.exp();
    let inv = (-params.m * p.s).exp();
    (p.y1 * inv, p.y2 * inv / r, r)
}

/// Same solution expressed in another frame: `y(to) = y(from)·e^{(m_to − m_from)s}`.
pub fn change_frame(p: &PhasePoint, from: &FowlerParams, to: &FowlerParams) -> PhasePoint {
    let k = ((to.m - from.m) * p.s).exp();
    PhasePoint { y1: p.y1 * k, y2: p.y2 * k, s: p.s }
}

/// `g(y1, s; l) = f(y1 e^{−ms}, e^s) e^{(m+2)s}`, evaluated in log space
/// and extended oddly to `y1 < 0`.
pub fn g_eval(spec: &PotentialSpec, y1: f64, s: f64, params: &FowlerParams) -> f64 {
    let m = params.m;
    let y = y1.abs();
    if y == 0.0 {
        return 0.0;
    }
    let ly = y.ln();
    let mono = |ln_k: f64, q: f64| (ln_k + (q - 1.0) * ly + ((m + 2.0) - m * (q - 1.0)) * s).exp();
    let v = match spec.family() {
        Family::PurePower { q } => mono(0.0, *q),
        Family::SingleK { term } => mono(term.k.ln_at_log_radius(s), term.q),
        Family::SumK { terms } => terms.iter().map(|t| mono(t.k.ln_at_log_radius(s), t.q)).sum(),
        Family::MinK { q_low, q_high, k } => {
            let q = if ly - m * s <= 0.0 { *q_high } else { *q_low };
            mono(k.ln_at_log_radius(s), q)
        }
    };
    v.copysign(y1)
}

/// `∂g/∂y1`, even in `y1`.
pub fn dg_dy(spec: &PotentialSpec, y1: f64, s: f64, params: &FowlerParams) -> f64 {
    let m = params.m;
    let y = y1.abs();
    let mono = |ln_k: f64, q: f64| {
        if q == 2.0 {
            return (ln_k + (m + 2.0 - m) * s).exp();
        }
        if y == 0.0 {
            return 0.0;
        }
        (q - 1.0) * (ln_k + (q - 2.0) * y.ln() + ((m + 2.0) - m * (q - 1.0)) * s).exp()
    };
    match spec.family() {
        Family::PurePower { q } => mono(0.0, *q),
        Family::SingleK { term } => mono(term.k.ln_at_log_radius(s), term.q),
        Family::SumK { terms } => terms.iter().map(|t| mono(t.k.ln_at_log_radius(s), t.q)).sum(),
        Family::MinK { q_low, q_high, k } => {
            let q = if y == 0.0 || y.ln() - m * s <= 0.0 { *q_high } else { *q_low };
            mono(k.ln_at_log_radius(s), q)
        }
    }
}

/// `G(y1, s; l) = ∫₀^{y1} g(a, s; l) da`, even in `y1`, together with `∂G/∂s`.
pub fn primitive_and_ds(spec: &PotentialSpec, y1: f64, s: f64, params: &FowlerParams) -> (f64, f64) {
    let m = params.m;
    let y = y1.abs();
    let base = 2.0 * m + 2.0;
    // Each piece is coef(s)·exp(rate·s)·y^q/q; returns (value, d/ds).
    let piece = |ln_k: f64, slope: f64, q: f64| {
        if y == 0.0 {
            return (0.0, 0.0);
        }
        let rate = base - m * q;
        let v = (ln_k + q * y.ln() + rate * s).exp() / q;
        (v, v * (slope + rate))
    };
    match spec.family() {
        Family::PurePower { q } => piece(0.0, 0.0, *q),
        Family::SingleK { term } => {
            piece(term.k.ln_at_log_radius(s), term.k.log_slope_at_log_radius(s), term.q)
        }
        Family::SumK { terms } => terms.iter().fold((0.0, 0.0), |acc, t| {
            let (v, d) = piece(t.k.ln_at_log_radius(s), t.k.log_slope_at_log_radius(s), t.q);
            (acc.0 + v, acc.1 + d)
        }),
        Family::MinK { q_low, q_high, k } => {
            let ln_k = k.ln_at_log_radius(s);
            let slope = k.log_slope_at_log_radius(s);
            if y == 0.0 || y.ln() - m * s <= 0.0 {
                piece(ln_k, slope, *q_high)
            } else {
                // F = k [1/q2 − 1/q1 + u^{q1}/q1] for u > 1.
                let (v1, d1) = piece(ln_k, slope, *q_low);
                let c = 1.0 / q_high - 1.0 / q_low;
                let v0 = c * (ln_k + base * s).exp();
                (v1 + v0, d1 + v0 * (slope + base))
            }
        }
    }
}

/// Right-hand side of the planar system in frame `params`.
pub fn vector_field(spec: &PotentialSpec, p: &PhasePoint, params: &FowlerParams) -> (f64, f64) {
    let g = g_eval(spec, p.y1, p.s, params);
    (params.m * p.y1 + p.y2, -(params.nf() - 2.0 - params.m) * p.y2 - g)
}

/// Pohozaev function in the frame of `params` (no rescaling).
pub fn pohozaev_in_frame(spec: &PotentialSpec, p: &PhasePoint, params: &FowlerParams) -> f64 {
    let (big_g, _) = primitive_and_ds(spec, p.y1, p.s, params);
    0.5 * (params.nf() - 2.0) * p.y1 * p.y2 + 0.5 * p.y2 * p.y2 + big_g
}

/// Pohozaev function in the `2^*` frame; points given in another frame are
/// converted first.
pub fn pohozaev(spec: &PotentialSpec, p: &PhasePoint, params: &FowlerParams) -> f64 {
    let star = FowlerParams::sobolev(params.n, params.varpi);
    let q = change_frame(p, params, &star);
    pohozaev_in_frame(spec, &q, &star)
}

/// `∂G/∂s` in the `2^*` frame at a point given in frame `params`; equals
/// `dH/ds` along trajectories.
pub fn pohozaev_rate(spec: &PotentialSpec, p: &PhasePoint, params: &FowlerParams) -> f64 {
    let star = FowlerParams::sobolev(params.n, params.varpi);
    let q = change_frame(p, params, &star);
    primitive_and_ds(spec, q.y1, q.s, &star).1
}

/// Where to take the nonlinearity when locating the positive fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SLimit {
    MinusInfinity,
    PlusInfinity,
    Frozen(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    UnstableNode,
    UnstableFocus,
    Center,
    StableFocus,
    StableNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointInfo {
    pub p1: f64,
    pub p2: f64,
    pub stability: Stability,
    /// Eigenvalue discriminant `A(l)² − 4[∂g/∂y1(P1) − C(l)]`.
    pub discriminant: f64,
    pub eigenvalues: [(f64, f64); 2],
    /// Pohozaev function (frame `l`) at the fixed point.
    pub b_star: f64,
}

/// The limiting or frozen nonlinearity `y ↦ g(y)` used for fixed points.
#[derive(Debug, Clone)]
pub struct PlanarNonlinearity<'a> {
    spec: &'a PotentialSpec,
    params: FowlerParams,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Monomials(Vec<(f64, f64)>),
    Frozen(f64),
}

impl<'a> PlanarNonlinearity<'a> {
    pub fn new(spec: &'a PotentialSpec, params: &FowlerParams, limit: SLimit) -> Result<Self, FowlerError> {
        let kind = match limit {
            SLimit::Frozen(tau) => Kind::Frozen(tau),
            SLimit::MinusInfinity | SLimit::PlusInfinity => {
                let end = if limit == SLimit::MinusInfinity { End::Origin } else { End::Infinity };
                let expected = spec.frame_exponent(end);
                if (params.l - expected).abs() > 1e-9 * expected {
                    return Err(FowlerError::FrameMismatch { frame: params.l, end, expected });
                }
                Kind::Monomials(spec.limit_monomials(end))
            }
        };
        Ok(Self { spec, params: *params, kind })
    }

    pub fn g(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::Monomials(terms) => terms.iter().map(|(c, q)| c * y.abs().powf(q - 1.0)).sum::<f64>().copysign(y),
            Kind::Frozen(tau) => g_eval(self.spec, y, *tau, &self.params),
        }
    }

    pub fn dg(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::Monomials(terms) => terms.iter().map(|(c, q)| c * (q - 1.0) * y.abs().powf(q - 2.0)).sum(),
            Kind::Frozen(tau) => dg_dy(self.spec, y, *tau, &self.params),
        }
    }

    pub fn primitive(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::Monomials(terms) => terms.iter().map(|(c, q)| c * y.abs().powf(*q) / q).sum(),
            Kind::Frozen(tau) => primitive_and_ds(self.spec, y, *tau, &self.params).0,
        }
    }

    /// Pohozaev function of the frozen/limit planar system.
    pub fn pohozaev(&self, y1: f64, y2: f64) -> f64 {
        0.5 * (self.params.nf() - 2.0) * y1 * y2 + 0.5 * y2 * y2 + self.primitive(y1)
    }

    /// Unique `y > 0` with `g(y) = k·y`.
    pub fn solve_ratio(&self, k: f64) -> Result<f64, FowlerError> {
        if !(k > 0.0) {
            return Err(FowlerError::NoPositiveRoot { c: k });
        }
        let h = |y: f64| self.g(y) / y - k;
        let mut hi = 1.0;
        let mut grow = 0;
        while h(hi) <= 0.0 {
            hi *= 2.0;
            grow += 1;
            if grow > 2000 || !hi.is_finite() {
                return Err(FowlerError::NoPositiveRoot { c: k });
            }
        }
        let mut lo = hi;
        let mut shrink = 0;
        while h(lo) >= 0.0 {
            lo *= 0.5;
            shrink += 1;
            if shrink > 2000 || lo == 0.0 {
                return Err(FowlerError::NoPositiveRoot { c: k });
            }
        }
        Ok(roots::brent(h, lo, hi, 1e-16 * hi, 300)?)
    }

    /// Minimum of the Pohozaev function, attained on `y2 = −(n−2)y1/2`.
    pub fn pohozaev_min(&self) -> Result<f64, FowlerError> {
        let half = 0.5 * (self.params.nf() - 2.0);
        let y = self.solve_ratio(half * half)?;
        Ok(self.pohozaev(y, -half * y))
    }
}

pub fn positive_fixed_point(spec: &PotentialSpec, params: &FowlerParams, limit: SLimit) -> Result<FixedPointInfo, FowlerError> {
    let nl = PlanarNonlinearity::new(spec, params, limit)?;
    let p1 = nl.solve_ratio(params.c)?;
    let p2 = -params.m * p1;
    let det = nl.dg(p1) - params.c;
    let trace = -params.a;
    let discriminant = params.a * params.a - 4.0 * det;
    let eigenvalues = if discriminant >= 0.0 {
        let sq = discriminant.sqrt();
        [(0.5 * (trace - sq), 0.0), (0.5 * (trace + sq), 0.0)]
    } else {
        let sq = (-discriminant).sqrt();
        [(0.5 * trace, -0.5 * sq), (0.5 * trace, 0.5 * sq)]
    };
    let scale = params.a * params.a + 4.0 * det.abs();
    let stability = if discriminant >= -1e-12 * scale {
        if params.a > 0.0 {
            Stability::StableNode
        } else {
            Stability::UnstableNode
        }
    } else if params.a.abs() <= 1e-12 {
        Stability::Center
    } else if params.a > 0.0 {
        Stability::StableFocus
    } else {
        Stability::UnstableFocus
    };
    Ok(FixedPointInfo { p1, p2, stability, discriminant, eigenvalues, b_star: nl.pohozaev(p1, p2) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    Empty,
    TwoLobes,
    FigureEight,
    SingleClosed,
    Irregular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub b: f64,
    pub tau: f64,
    pub l: f64,
    pub b_star: f64,
    pub h_min: f64,
    pub topology: Topology,
    pub curves: Vec<Polyline>,
}

/// Contour `H(·, ·, τ; l) = b` of the frozen system by marching squares.
pub fn pohozaev_level_set(spec: &PotentialSpec, b: f64, tau: f64, params: &FowlerParams) -> Result<LevelSet, FowlerError> {
    let nl = PlanarNonlinearity::new(spec, params, SLimit::Frozen(tau))?;
    let fp = positive_fixed_point(spec, params, SLimit::Frozen(tau))?;
    let h_min = nl.pohozaev_min()?;
    let mut out = LevelSet { b, tau, l: params.l, b_star: fp.b_star, h_min, topology: Topology::Empty, curves: vec![] };
    if b < h_min {
        return Ok(out);
    }
    let h = |y1: f64, y2: f64| nl.pohozaev(y1, y2);
    // Grow a square box until H exceeds b all along its boundary.
    let mut half = 2.0 * fp.p1.max(1e-3);
    for _ in 0..80 {
        let side = 256;
        let above = (0..=side).all(|i| {
            let t = -half + 2.0 * half * i as f64 / side as f64;
            [h(t, half), h(t, -half), h(half, t), h(-half, t)].iter().all(|v| *v > b)
        });
        if above {
            break;
        }
        half *= 1.5;
    }
    let cells = 401;
    let curves = marching_squares(&h, b, half, cells);
    let spacing = 2.0 * half / cells as f64;
    out.topology = classify_topology(&curves, spacing, b);
    out.curves = curves;
    Ok(out)
}

fn marching_squares(h: &dyn Fn(f64, f64) -> f64, level: f64, half: f64, cells: usize) -> Vec<Polyline> {
    let nodes = cells + 1;
    let coord = |i: usize| -half + 2.0 * half * i as f64 / cells as f64;
    let vals: Vec<f64> = (0..nodes * nodes).map(|k| h(coord(k / nodes), coord(k % nodes)) - level).collect();
    let v = |i: usize, j: usize| vals[i * nodes + j];
    // Edge ids: 2·node for the edge toward +i, 2·node+1 toward +j.
    let edge_point = |id: usize| {
        let node = id / 2;
        let (i, j) = (node / nodes, node % nodes);
        let (i2, j2) = if id.is_multiple_of(2) { (i + 1, j) } else { (i, j + 1) };
        let (va, vb) = (v(i, j), v(i2, j2));
        let t = va / (va - vb);
        (coord(i) + t * (coord(i2) - coord(i)), coord(j) + t * (coord(j2) - coord(j)))
    };
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for i in 0..cells {
        for j in 0..cells {
            let corner = [v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)];
            let bottom = 2 * (i * nodes + j);
            let right = 2 * ((i + 1) * nodes + j) + 1;
            let top = 2 * (i * nodes + j + 1);
            let left = 2 * (i * nodes + j) + 1;
            let edges = [bottom, right, top, left];
            let inside: Vec<bool> = corner.iter().map(|c| *c > 0.0).collect();
            let crossing: Vec<usize> = (0..4).filter(|&e| inside[e] != inside[(e + 1) % 4]).collect();
            match crossing.len() {
                2 => segments.push((edges[crossing[0]], edges[crossing[1]])),
                4 => {
                    let centre = corner.iter().sum::<f64>() / 4.0 > 0.0;
                    // Pair edges around the corners whose sign differs from the centre.
                    if centre == inside[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }
    link_segments(&segments).into_iter().map(|(ids, closed)| Polyline { points: ids.into_iter().map(edge_point).collect(), closed }).collect()
}

fn link_segments(segments: &[(usize, usize)]) -> Vec<(Vec<usize>, bool)> {
    use std::collections::HashMap;
    let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(k);
        by_edge.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();
    let other = |k: usize, e: usize| if segments[k].0 == e { segments[k].1 } else { segments[k].0 };
    let mut order: Vec<usize> = (0..segments.len()).collect();
    // Start open chains at edges with a single segment so they are traced whole.
    order.sort_by_key(|&k| {
        let (a, b) = segments[k];
        usize::from(by_edge[&a].len() != 1 && by_edge[&b].len() != 1)
    });
    for start in order {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let (first, mut tail) = if by_edge[&b].len() == 1 { (b, a) } else { (a, b) };
        let mut chain = vec![first, tail];
        let mut closed = false;
        loop {
            let next = by_edge[&tail].iter().copied().find(|&k| !used[k]);
            match next {
                Some(k) => {
                    used[k] = true;
                    tail = other(k, tail);
                    if tail == first {
                        closed = true;
                        break;
                    }
                    chain.push(tail);
                }
                None => break,
            }
        }
        chains.push((chain, closed));
    }
    chains
}

fn winds_around_origin(points: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let n = points.len();
    for k in 0..n {
        let (x1, y1) = points[k];
        let (x2, y2) = points[(k + 1) % n];
        if (y1 > 0.0) != (y2 > 0.0) {
            let x = x1 + (0.0 - y1) * (x2 - x1) / (y2 - y1);
            if x > 0.0 {
                inside = !inside;
            }
        }
    }
    inside
}

fn classify_topology(curves: &[Polyline], spacing: f64, b: f64) -> Topology {
    if curves.is_empty() {
        return Topology::Empty;
    }
    let points = curves.iter().flat_map(|c| c.points.iter());
    let near_origin = points.clone().any(|(x, y)| x.hypot(*y) <= 2.0 * spacing);
    let left = points.clone().any(|(x, _)| *x < -4.0 * spacing);
    let right = points.clone().any(|(x, _)| *x > 4.0 * spacing);
    if b.abs() <= 1e-12 && near_origin && left && right {
        return Topology::FigureEight;
    }
    if !curves.iter().all(|c| c.closed) {
        return Topology::Irregular;
    }
    match curves.len() {
        1 if winds_around_origin(&curves[0].points) => Topology::SingleClosed,
        2 if curves.iter().all(|c| !winds_around_origin(&c.points)) => {
            let sides: Vec<bool> = curves.iter().map(|c| c.points.iter().map(|p| p.0).sum::<f64>() > 0.0).collect();
            if sides[0] != sides[1] {
                Topology::TwoLobes
            } else {
                Topology::Irregular
            }
        }
        _ => Topology::Irregular,
    }
}
