//! Classification of a norm history into decay, blow-up or a steady state.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fate", rename_all = "snake_case")]
pub enum Fate {
    Decayed { t: f64 },
    BlowUp { t_est: f64 },
    Steady { t: f64 },
    Undecided { t_end: f64 },
}

impl Fate {
    pub fn label(&self) -> &'static str {
        match self {
            Fate::Decayed { .. } => "Decayed",
            Fate::BlowUp { .. } => "BlowUp",
            Fate::Steady { .. } => "Steady",
            Fate::Undecided { .. } => "Undecided",
        }
    }

    pub fn is_decided(&self) -> bool {
        !matches!(self, Fate::Undecided { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FateControls {
    pub blowup_threshold: f64,
    /// Blow-up also needs `dt` below this fraction of the largest accepted step.
    pub dt_collapse: f64,
    /// Decay means every tracked norm fell below this fraction of its start.
    pub decay_floor: f64,
    pub steady_tol: f64,
    /// The judging window covers at least this much time, and at least the
    /// last `window_fraction` of the run.
    pub window_span: f64,
    pub window_fraction: f64,
}

impl Default for FateControls {
    fn default() -> Self {
        Self {
            blowup_threshold: 1e6,
            dt_collapse: 1e-3,
            decay_floor: 1e-3,
            steady_tol: 1e-8,
            window_span: 1.0,
            window_fraction: 0.1,
        }
    }
}

/// Norm history: the weighted norm, any `‖u(1+r^ν)‖∞` norms, and step sizes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub t: Vec<f64>,
    pub weighted: Vec<f64>,
    /// One column per tracked `ν`.
    pub shifted: Vec<Vec<f64>>,
    /// Step that produced each record (the first record has 0).
    pub dt: Vec<f64>,
}

impl NormSeries {
    pub fn new(tracked: usize) -> Self {
        Self { shifted: vec![Vec::new(); tracked], ..Self::default() }
    }

    pub fn push(&mut self, t: f64, weighted: f64, shifted: &[f64], dt: f64) {
        self.t.push(t);
        self.weighted.push(weighted);
        for (column, &v) in self.shifted.iter_mut().zip(shifted) {
            column.push(v);
        }
        self.dt.push(dt);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn columns(&self) -> impl Iterator<Item = &Vec<f64>> {
        std::iter::once(&self.weighted).chain(&self.shifted)
    }

    /// Index of the first record inside the judging window, if the history
    /// is long enough to have one.
    fn window_start(&self, controls: &FateControls) -> Option<usize> {
        let last = *self.t.last()?;
        let span = controls.window_span.max(controls.window_fraction * (last - self.t[0]));
        let begin = last - span;
        if self.t[0] > begin {
            return None;
        }
        Some(self.t.partition_point(|&t| t < begin).saturating_sub(1))
    }
}

fn blown_up(series: &NormSeries, controls: &FateControls) -> bool {
    let k = series.len();
    if k < 4 || series.weighted[k - 1] <= controls.blowup_threshold {
        return false;
    }
    let peak_dt = series.dt.iter().copied().fold(0.0, f64::max);
    if series.dt[k - 1] >= controls.dt_collapse * peak_dt {
        return false;
    }
    // Step sizes, not time differences: near blow-up `t + dt` rounds to `t`.
    let rate = |i: usize| (series.weighted[i] - series.weighted[i - 1]) / series.dt[i];
    rate(k - 1) > rate(k - 2) && rate(k - 2) > 0.0
}

/// Assigns a fate to a norm history. Blow-up is checked first, then decay,
/// then stationarity; anything else is undecided.
pub fn detect_fate(series: &NormSeries, controls: &FateControls) -> Fate {
    let Some(&t_last) = series.t.last() else {
        return Fate::Undecided { t_end: 0.0 };
    };
    if blown_up(series, controls) {
        return Fate::BlowUp { t_est: t_last };
    }
    let Some(start) = series.window_start(controls) else {
        return Fate::Undecided { t_end: t_last };
    };
    let decayed = series.columns().all(|c| {
        let initial = c[0];
        let tail = &c[start..];
        initial > 0.0
            && c[c.len() - 1] < controls.decay_floor * initial
            && tail.windows(2).all(|w| w[1] <= w[0])
    });
    if decayed {
        return Fate::Decayed { t: t_last };
    }
    let steady = series.columns().all(|c| {
        let tail = &c[start..];
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo <= controls.steady_tol * hi.abs().max(lo.abs())
    });
    if steady {
        return Fate::Steady { t: t_last };
    }
    Fate::Undecided { t_end: t_last }
}
