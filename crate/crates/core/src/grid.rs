//! Uniform grids in the isothermal coordinate ξ.

use crate::profile::Topology;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("grid extent must be positive and finite, got {0}")]
    BadExtent(f64),
}

/// Prescribed boundary values of the flux `u_ξ/u`: `left` at the left end and
/// `-right` at the right end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxBoundary {
    pub left: f64,
    pub right: f64,
}

impl FluxBoundary {
    /// The pair that keeps both poles smooth: `u_ξ/u → 2` on the left, `→ -2` on the right.
    pub const SMOOTH_POLES: FluxBoundary = FluxBoundary { left: 2.0, right: 2.0 };

    pub fn new(left: f64, right: f64) -> Self {
        Self { left, right }
    }

    pub fn is_smooth_poles(&self) -> bool {
        *self == Self::SMOOTH_POLES
    }

    /// Total rate at which `∫u dξ` is lost through the two ends.
    pub fn mass_loss_rate(&self) -> f64 {
        self.left + self.right
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Flux pinned at the outer faces `ξ_0 − Δξ/2` and `ξ_last + Δξ/2`.
    FluxAtInfinity(FluxBoundary),
    /// Periodic with period `Q`; nodes cover `[ξ_0, ξ_0 + Q − Δξ]`.
    Periodic { period: f64 },
}

/// Uniform ξ discretisation together with its boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct IsothermalGrid {
    nodes: Vec<f64>,
    spacing: f64,
    boundary: Boundary,
    basepoint: f64,
    topology: Topology,
}

pub const MIN_NODES: usize = 16;

impl IsothermalGrid {
    /// `n` nodes on `[-half_width, half_width]`, flux faces half a cell outside.
    pub fn truncated(
        half_width: f64,
        n: usize,
        flux: FluxBoundary,
        basepoint: f64,
        topology: Topology,
    ) -> Result<Self, GridError> {
        Self::interval(-half_width, half_width, n, flux, basepoint, topology)
    }

    /// `n` nodes on `[lo, hi]` with flux boundaries.
    pub fn interval(
        lo: f64,
        hi: f64,
        n: usize,
        flux: FluxBoundary,
        basepoint: f64,
        topology: Topology,
    ) -> Result<Self, GridError> {
        check_nodes(n)?;
        let extent = hi - lo;
        if !(extent.is_finite() && extent > 0.0) {
            return Err(GridError::BadExtent(extent));
        }
        let spacing = extent / (n - 1) as f64;
        let nodes = (0..n).map(|i| lo + spacing * i as f64).collect();
        Ok(Self {
            nodes,
            spacing,
            boundary: Boundary::FluxAtInfinity(flux),
            basepoint,
            topology,
        })
    }

    /// `n` nodes `ξ_i = i Q / n` covering one period.
    pub fn periodic(period: f64, n: usize, basepoint: f64, topology: Topology) -> Result<Self, GridError> {
        check_nodes(n)?;
        if !(period.is_finite() && period > 0.0) {
            return Err(GridError::BadExtent(period));
        }
        let spacing = period / n as f64;
        let nodes = (0..n).map(|i| spacing * i as f64).collect();
        Ok(Self {
            nodes,
            spacing,
            boundary: Boundary::Periodic { period },
            basepoint,
            topology,
        })
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

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.boundary, Boundary::Periodic { .. })
    }

    pub fn period(&self) -> Option<f64> {
        match self.boundary {
            Boundary::Periodic { period } => Some(period),
            Boundary::FluxAtInfinity(_) => None,
        }
    }

    pub fn flux(&self) -> Option<FluxBoundary> {
        match self.boundary {
            Boundary::FluxAtInfinity(f) => Some(f),
            Boundary::Periodic { .. } => None,
        }
    }

    /// Profile parameter value mapped to ξ = 0.
    pub fn basepoint(&self) -> f64 {
        self.basepoint
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }
}

fn check_nodes(n: usize) -> Result<(), GridError> {
    if n < MIN_NODES {
        Err(GridError::TooFewNodes { min: MIN_NODES, got: n })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_grid_is_uniform() {
        let g = IsothermalGrid::truncated(8.0, 801, FluxBoundary::SMOOTH_POLES, 0.0, Topology::SphereLike).unwrap();
        let h = g.spacing();
        assert!((h - 0.02).abs() < 1e-15);
        for w in g.nodes().windows(2) {
            assert!(((w[1] - w[0]) - h).abs() <= 1e-12 * h);
        }
        assert_eq!(g.nodes()[0], -8.0);
        assert!((g.nodes()[800] - 8.0).abs() < 1e-13);
    }

    #[test]
    fn periodic_grid_spans_one_period_minus_a_cell() {
        let q = 2.0 * std::f64::consts::PI / 3f64.sqrt();
        let g = IsothermalGrid::periodic(q, 801, 0.0, Topology::Toroidal).unwrap();
        let span = g.nodes()[800] - g.nodes()[0];
        assert!((span - (q - g.spacing())).abs() < 1e-13);
        assert_eq!(g.period(), Some(q));
    }

    #[test]
    fn rejects_tiny_grids() {
        assert_eq!(
            IsothermalGrid::periodic(1.0, 8, 0.0, Topology::Toroidal),
            Err(GridError::TooFewNodes { min: 16, got: 8 })
        );
        assert!(IsothermalGrid::truncated(0.0, 32, FluxBoundary::SMOOTH_POLES, 0.0, Topology::SphereLike).is_err());
    }
}
