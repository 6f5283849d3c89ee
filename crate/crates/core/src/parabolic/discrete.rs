//! Barriers carried over to the grid so that the discrete operator sees
//! them as exact super- or sub-solutions.
//!
//! Each stationary piece is replaced by the solution of the discrete
//! stationary equation: regular pieces are marched outward from `u_0 = α`,
//! tail pieces inward from their continuous values at the last two nodes.
//! Pieces are switched at the node where the discrete profiles cross, so
//! the composite is a nodewise min (upper) or max (lower) of discrete
//! solutions. The outer Robin coefficient is chosen to keep the last node
//! stationary.

use serde::{Deserialize, Serialize};

use super::grid::RadialGrid;
use super::{ParabolicError, Reaction};
use crate::barriers::{BarrierKind, BarrierProfile};
use crate::shooting::ProfileKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteBarrier {
    pub values: Vec<f64>,
    /// Outer Robin coefficient that keeps the last node stationary.
    pub kappa: f64,
    /// Last node of every piece but the outermost.
    pub glue_nodes: Vec<usize>,
    pub kind: BarrierKind,
}

/// Discrete stationary solution through the origin with `u_0 = alpha`.
pub fn march_outward(reaction: &(impl Reaction + ?Sized), grid: &RadialGrid, alpha: f64) -> Vec<f64> {
    let (r, a, vol) = (grid.nodes(), grid.conductance(), grid.volumes());
    let mut u = vec![f64::NAN; r.len()];
    u[0] = alpha;
    let mut flux = 0.0;
    for j in 0..r.len() - 1 {
        flux -= vol[j] * reaction.value(u[j], r[j]);
        u[j + 1] = u[j] + flux / a[j];
        if !u[j + 1].is_finite() {
            break;
        }
    }
    u
}

/// Discrete stationary solution through the given values at the last two
/// nodes, marched inward down to node `stop`; nodes below stay NaN.
pub fn march_inward(reaction: &(impl Reaction + ?Sized), grid: &RadialGrid, last: f64, before_last: f64, stop: usize) -> Vec<f64> {
    let (r, a, vol) = (grid.nodes(), grid.conductance(), grid.volumes());
    let n = r.len();
    let mut u = vec![f64::NAN; n];
    u[n - 1] = last;
    u[n - 2] = before_last;
    let mut flux = a[n - 2] * (last - before_last);
    for j in (stop.max(1)..n - 1).rev() {
        flux += vol[j] * reaction.value(u[j], r[j]);
        u[j - 1] = u[j] - flux / a[j - 1];
        if !u[j - 1].is_finite() {
            break;
        }
    }
    u
}

fn node_below(grid: &RadialGrid, radius: f64) -> usize {
    grid.nodes().partition_point(|&r| r < radius).saturating_sub(1)
}

/// Carries `barrier` over to `grid` (which must contain the origin).
pub fn discrete_barrier(barrier: &BarrierProfile, grid: &RadialGrid) -> Result<DiscreteBarrier, ParabolicError> {
    if !grid.through_origin() {
        return Err(ParabolicError::Barrier("the grid must contain the origin".into()));
    }
    let spec = barrier.inner().spec().clone();
    let r = grid.nodes();
    let n = r.len();
    // Glue points past the grid only concern pieces the grid never sees.
    let usable = barrier.glue_radii.partition_point(|&g| g < r[n - 2]);
    let radii = &barrier.glue_radii[..usable];
    let mut pieces = Vec::with_capacity(usable + 1);
    for (i, piece) in barrier.pieces[..=usable].iter().enumerate() {
        let values = match piece.kind {
            ProfileKind::Regular { alpha } => march_outward(&spec, grid, alpha),
            _ => {
                let (Some(last), Some(before)) = (piece.u(r[n - 1]), piece.u(r[n - 2])) else {
                    return Err(ParabolicError::Barrier(format!("piece {i} does not reach r_max = {}", r[n - 1])));
                };
                let reach = if i == 0 { 0.0 } else { 0.25 * radii[i - 1] };
                march_inward(&spec, grid, last, before, node_below(grid, reach))
            }
        };
        pieces.push(values);
    }
    let mut glue_nodes = Vec::with_capacity(radii.len());
    for (i, &glue) in radii.iter().enumerate() {
        let (inside, outside) = (&pieces[i], &pieces[i + 1]);
        let diff = |j: usize| inside[j] - outside[j];
        let centre = node_below(grid, glue);
        let crossing = (0..n - 1)
            .filter(|&j| {
                let (a, b) = (diff(j), diff(j + 1));
                a.is_finite() && b.is_finite() && (a == 0.0 || a.signum() != b.signum())
            })
            .min_by_key(|&j| j.abs_diff(centre))
            .ok_or_else(|| ParabolicError::Barrier(format!("discrete pieces {i} and {} never cross", i + 1)))?;
        glue_nodes.push(crossing);
    }
    if glue_nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ParabolicError::Barrier(format!("glue nodes {glue_nodes:?} are not increasing")));
    }
    let values: Vec<f64> = (0..n).map(|j| pieces[glue_nodes.partition_point(|&g| g < j)][j]).collect();
    if let Some(j) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(ParabolicError::Barrier(format!("discrete barrier is not positive at r = {}", r[j])));
    }
    let last = n - 1;
    let flux_in = grid.conductance()[last - 1] * (values[last] - values[last - 1]);
    let kappa = (grid.volumes()[last] * spec.f(values[last], r[last]) - flux_in) / (grid.robin_factor(last) * values[last]);
    Ok(DiscreteBarrier { values, kappa, glue_nodes, kind: barrier.kind })
}
