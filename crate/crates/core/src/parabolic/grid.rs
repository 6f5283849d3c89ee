//! Vertex-centred finite volumes on a radially graded grid.
//!
//! Node `j` owns the shell between the neighbouring face midpoints, so
//! `V_j du_j/dt = F_{j+1/2} − F_{j−1/2} + V_j f(u_j, r_j)` with the radial
//! flux `F = r^{n−1} u'` and the shell volume divided by the sphere area.

use serde::{Deserialize, Serialize};

use super::ParabolicError;

/// How the grid is laid out; `r_min = 0` gives a grid through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// First spacing for grids through the origin.
    pub h0: f64,
    /// Ratio of consecutive spacings (or of consecutive radii when `r_min > 0`).
    pub growth: f64,
    pub r_max: f64,
    pub r_min: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { h0: 0.01, growth: 1.01, r_max: 1e3, r_min: 0.0 }
    }
}

impl GridSpec {
    /// Half the spacing everywhere.
    pub fn refined(&self) -> Self {
        Self { h0: 0.5 * self.h0, growth: self.growth.sqrt(), ..*self }
    }

    pub fn with_r_max(&self, r_max: f64) -> Self {
        Self { r_max, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    n: u32,
    nodes: Vec<f64>,
    /// `r_{j+1/2}^{n−1} / (r_{j+1} − r_j)` for each interior face.
    conductance: Vec<f64>,
    volumes: Vec<f64>,
    spec: GridSpec,
}

impl RadialGrid {
    pub fn new(n: u32, spec: GridSpec) -> Result<Self, ParabolicError> {
        let bad = |why: &str| Err(ParabolicError::Grid(why.to_string()));
        if n < 1 {
            return bad("dimension must be positive");
        }
        if !(spec.growth >= 1.0 && spec.growth.is_finite()) {
            return bad("growth must be a finite ratio >= 1");
        }
        if !(spec.r_min >= 0.0 && spec.r_max > spec.r_min && spec.r_max.is_finite()) {
            return bad("need 0 <= r_min < r_max < inf");
        }
        let nodes = if spec.r_min == 0.0 {
            if !(spec.h0 > 0.0 && spec.h0 < spec.r_max) {
                return bad("need 0 < h0 < r_max");
            }
            let mut nodes = vec![0.0];
            let mut h = spec.h0;
            while nodes[nodes.len() - 1] + h < spec.r_max {
                nodes.push(nodes[nodes.len() - 1] + h);
                h *= spec.growth;
            }
            close_at(&mut nodes, spec.r_max);
            nodes
        } else {
            if spec.growth <= 1.0 {
                return bad("a grid away from the origin needs growth > 1");
            }
            let mut nodes = vec![spec.r_min];
            while nodes[nodes.len() - 1] * spec.growth < spec.r_max {
                nodes.push(nodes[nodes.len() - 1] * spec.growth);
            }
            close_at(&mut nodes, spec.r_max);
            nodes
        };
        if nodes.len() < 3 {
            return bad("fewer than three nodes");
        }
        let nf = f64::from(n);
        let faces: Vec<f64> = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let conductance = nodes.windows(2).zip(&faces).map(|(w, f)| f.powf(nf - 1.0) / (w[1] - w[0])).collect();
        let last = nodes.len() - 1;
        let volumes = (0..=last)
            .map(|j| {
                let lo = if j == 0 { nodes[0] } else { faces[j - 1] };
                let hi = if j == last { nodes[last] } else { faces[j] };
                (hi.powf(nf) - lo.powf(nf)) / nf
            })
            .collect();
        Ok(Self { n, nodes, conductance, volumes, spec })
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether the first node sits at the origin.
    pub fn through_origin(&self) -> bool {
        self.nodes[0] == 0.0
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn conductance(&self) -> &[f64] {
        &self.conductance
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// `r^{n−2}` at node `j`, the factor of the Robin fluxes.
    pub fn robin_factor(&self, j: usize) -> f64 {
        self.nodes[j].powf(f64::from(self.n) - 2.0)
    }

    /// Samples `phi` at the nodes.
    pub fn sample(&self, phi: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| phi(r)).collect()
    }
}

/// Ends the node list exactly at `r_max`, merging a last sliver into it.
fn close_at(nodes: &mut Vec<f64>, r_max: f64) {
    let k = nodes.len();
    if k >= 2 {
        let prev_gap = nodes[k - 1] - nodes[k - 2];
        if r_max - nodes[k - 1] < 0.5 * prev_gap {
            nodes.pop();
        }
    }
    nodes.push(r_max);
}
