//! Curvature, residuals and the analytic estimates checked on computed flows.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::embed::{self, EmbedError};
use crate::grid::{GridError, IsothermalGrid};
use crate::logdiff::{self, FlowState, Frame};
use crate::profile::{ProfileCurve, ProfileError, Topology};
use crate::quadrature::{adaptive_simpson, QuadratureError};
use crate::stencil;

/// Nodes used for the grid form of the limiting radius.
pub const LIMIT_GRID_NODES: usize = 801;
/// Allowed disagreement between the two limiting-radius formulas.
pub const LIMIT_CROSS_CHECK_TOL: f64 = 1e-8;
/// Aronson–Bénilan margins down to `−AB_SLACK / t` pass.
pub const AB_SLACK: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DiagError {
    #[error("needs a periodic curve or state, got {0:?}")]
    WrongTopology(Topology),
    #[error("limiting radius formulas disagree: grid {grid}, integral {integral}")]
    CrossCheckFailure { grid: f64, integral: f64 },
    #[error("needs t > 0, got {0}")]
    NonPositiveTime(f64),
    #[error("states are not consecutive: {0}")]
    BadPair(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Gaussian curvature `K = −(log u)_ξξ / (2u)` of `u(dξ² + dθ²)`.
pub fn gaussian_curvature(state: &FlowState) -> Vec<f64> {
    let d2 = stencil::second_derivative_4(&state.log_steps(), state.grid());
    d2.iter().zip(state.u()).map(|(d, u)| (0.0 - d) / (2.0 * u)).collect()
}

fn check_pair(before: &FlowState, after: &FlowState) -> Result<f64, DiagError> {
    if !Arc::ptr_eq(before.grid(), after.grid()) && before.grid() != after.grid() {
        return Err(DiagError::BadPair("different grids".into()));
    }
    let dt = after.t() - before.t();
    if !(dt > 0.0) {
        return Err(DiagError::BadPair(format!("dt = {dt}")));
    }
    Ok(dt)
}

/// `max |(u₁ − u₀)/dt − ½(D₂ log u₀ + D₂ log u₁)|`, the discrete defect of
/// `u_t = (log u)_ξξ = −2Ku` at the midpoint, with the solver's `D₂`.
pub fn ricci_residual(before: &FlowState, after: &FlowState) -> Result<f64, DiagError> {
    let dt = check_pair(before, after)?;
    let (a, b) = (before.d2_log_u(), after.d2_log_u());
    Ok((0..a.len())
        .map(|i| ((after.u()[i] - before.u()[i]) / dt - 0.5 * (a[i] + b[i])).abs())
        .fold(0.0, f64::max))
}

// Nodes away from the lower-order one-sided stencils.
fn interior(grid: &IsothermalGrid, margin: usize) -> std::ops::Range<usize> {
    if grid.is_periodic() {
        0..grid.len()
    } else {
        margin..grid.len() - margin
    }
}

/// Right-hand side `e^{−w}(φ_ξξ − 2φφ_ξ)` and `φ` for `φ = f_ξ/f`.
fn phi_rhs(state: &FlowState) -> (Vec<f64>, Vec<f64>) {
    let grid = state.grid();
    let phi = embed::phi(state);
    let steps = stencil::steps_of(&phi, grid.is_periodic());
    let d1 = stencil::first_derivative_4(&steps, grid);
    let d2 = stencil::second_derivative_4(&steps, grid);
    let rhs = (0..phi.len())
        .map(|i| (d2[i] - 2.0 * phi[i] * d1[i]) / state.u()[i])
        .collect();
    (phi, rhs)
}

/// Max-norm defect of `φ_t = e^{−w}(φ_ξξ − 2φφ_ξ)`, `φ = f_ξ/f = ½(log u)_ξ`,
/// with the right-hand side averaged over both levels. On flux grids the
/// four outermost nodes at each end are skipped.
pub fn phi_residual(before: &FlowState, after: &FlowState) -> Result<f64, DiagError> {
    let dt = check_pair(before, after)?;
    let (p0, r0) = phi_rhs(before);
    let (p1, r1) = phi_rhs(after);
    Ok(interior(before.grid(), 4)
        .map(|i| ((p1[i] - p0[i]) / dt - 0.5 * (r0[i] + r1[i])).abs())
        .fold(0.0, f64::max))
}

/// `sup |φ|`, for observing the maximum principle of the φ equation.
pub fn sup_phi(state: &FlowState) -> f64 {
    embed::phi(state).iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbReport {
    pub t: f64,
    /// `min_i [1/t − D₂(1/u)_i]`.
    pub margin: f64,
    pub passed: bool,
}

/// Margin in the estimate `(1/u)_ξξ < 1/t`. Flux grids use interior nodes only.
pub fn aronson_benilan_check(state: &FlowState) -> Result<AbReport, DiagError> {
    let t = state.t();
    if !(t > 0.0) {
        return Err(DiagError::NonPositiveTime(t));
    }
    let grid = state.grid();
    let n = grid.len();
    let h2 = grid.spacing() * grid.spacing();
    let inv: Vec<f64> = state.u().iter().map(|u| 1.0 / u).collect();
    let margin = interior(grid, 1)
        .map(|i| {
            let (l, r) = ((i + n - 1) % n, (i + 1) % n);
            1.0 / t - (inv[r] - 2.0 * inv[i] + inv[l]) / h2
        })
        .fold(f64::INFINITY, f64::min);
    Ok(AbReport {
        t,
        margin,
        passed: margin > -AB_SLACK / t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitingRadius {
    /// `R_∞²` as the grid mean of `u₀` over one period.
    pub r_inf_sq: f64,
    /// `∫ f0·s dv / ∫ s/f0 dv` with `s` the parametric speed.
    pub integral_form: f64,
    pub period_q: f64,
}

/// Squared radius of the cylinder a periodic flow converges to, computed two
/// independent ways and cross-checked.
pub fn limiting_radius(curve: &ProfileCurve) -> Result<LimitingRadius, DiagError> {
    if !curve.is_periodic_cell() {
        return Err(DiagError::WrongTopology(curve.topology()));
    }
    let q = curve.period_q()?;
    let grid = Arc::new(curve.default_grid(LIMIT_GRID_NODES, 0.0)?);
    let u0 = curve.sample_u0(&grid)?;
    let r_inf_sq = logdiff::mass(&u0) / q;
    let (lo, hi) = curve.domain();
    let tol = 1e-13;
    let top = adaptive_simpson(|v| curve.f0(v) * curve.speed(v), lo, hi, tol)?;
    let bottom = adaptive_simpson(|v| curve.xi_density(v), lo, hi, tol)?;
    let integral_form = top / bottom;
    if !((r_inf_sq - integral_form).abs() <= LIMIT_CROSS_CHECK_TOL) {
        return Err(DiagError::CrossCheckFailure {
            grid: r_inf_sq,
            integral: integral_form,
        });
    }
    Ok(LimitingRadius {
        r_inf_sq,
        integral_form,
        period_q: q,
    })
}

/// Constants of a periodic flow entering its convergence estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicLimits {
    pub period_q: f64,
    pub r_inf_sq: f64,
    /// `sup f0`.
    pub max_f0: f64,
}

impl PeriodicLimits {
    pub fn from_curve(curve: &ProfileCurve) -> Result<Self, DiagError> {
        let lr = limiting_radius(curve)?;
        let (lo, hi) = curve.domain();
        let samples = 1 << 14;
        let max_f0 = (0..=samples)
            .map(|k| curve.f0(lo + (hi - lo) * k as f64 / samples as f64))
            .fold(0.0, f64::max);
        Ok(Self {
            period_q: lr.period_q,
            r_inf_sq: lr.r_inf_sq,
            max_f0,
        })
    }

    /// `Q^{3/2} M³ / sqrt(3t)`.
    pub fn sup_bound(&self, t: f64) -> f64 {
        self.period_q.powf(1.5) * self.max_f0.powi(3) / (3.0 * t).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub t: f64,
    /// `sup |u − R_∞²|`.
    pub sup_error: f64,
    pub bound: f64,
    /// `∫ u_ξ² dξ` and `(1/3t) ∫ u³ dξ` over one period.
    pub energy: f64,
    pub energy_bound: f64,
    pub passed: bool,
}

/// `sup |u − R_∞²| ≤ Q^{3/2}M³/sqrt(3t)` together with `∫u_ξ² ≤ (1/3t)∫u³`.
pub fn convergence_bound_check(state: &FlowState, limits: &PeriodicLimits) -> Result<ConvergenceReport, DiagError> {
    let grid = state.grid();
    if !grid.is_periodic() {
        return Err(DiagError::WrongTopology(grid.topology()));
    }
    let t = state.t();
    if !(t > 0.0) {
        return Err(DiagError::NonPositiveTime(t));
    }
    let sup_error = sup_deviation(state, limits.r_inf_sq);
    let bound = limits.sup_bound(t);
    let dlog = stencil::first_derivative_4(&state.log_steps(), grid);
    let h = grid.spacing();
    let energy: f64 = state.u().iter().zip(&dlog).map(|(u, d)| (u * d).powi(2)).sum::<f64>() * h;
    let energy_bound = state.u().iter().map(|u| u.powi(3)).sum::<f64>() * h / (3.0 * t);
    Ok(ConvergenceReport {
        t,
        sup_error,
        bound,
        energy,
        energy_bound,
        passed: sup_error <= bound && energy <= energy_bound,
    })
}

/// `sup |u − c|`.
pub fn sup_deviation(state: &FlowState, c: f64) -> f64 {
    state.u().iter().fold(0.0, |m, u| m.max((u - c).abs()))
}

/// Per-frame scalar diagnostics. Entries that do not apply are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticReport {
    pub t: f64,
    pub area: f64,
    pub mass: f64,
    pub max_flux_ratio: f64,
    pub ab_margin: f64,
    pub r_inf_sq_error: f64,
    pub ricci_residual: f64,
    pub phi_residual: f64,
    pub z: f64,
}

impl DiagnosticReport {
    pub const CSV_HEADER: &'static str =
        "t,area,mass,max_flux_ratio,ab_margin,R_inf_sq_error,ricci_residual,phi_residual,Z";

    pub fn for_frame(frame: &Frame, limits: Option<&PeriodicLimits>) -> Self {
        let state = &frame.state;
        let mass = logdiff::mass(state);
        let pair = |f: fn(&FlowState, &FlowState) -> Result<f64, DiagError>| {
            frame
                .previous
                .as_ref()
                .and_then(|p| f(p, state).ok())
                .unwrap_or(f64::NAN)
        };
        Self {
            t: state.t(),
            area: 2.0 * std::f64::consts::PI * mass,
            mass,
            max_flux_ratio: embed::embeddability_check(state).max_ratio,
            ab_margin: aronson_benilan_check(state).map_or(f64::NAN, |r| r.margin),
            r_inf_sq_error: limits.map_or(f64::NAN, |l| sup_deviation(state, l.r_inf_sq)),
            ricci_residual: pair(ricci_residual),
            phi_residual: pair(phi_residual),
            z: embed::reconstruct(state)
                .ok()
                .and_then(|f| f.z_period)
                .unwrap_or(f64::NAN),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.t,
            self.area,
            self.mass,
            self.max_flux_ratio,
            self.ab_margin,
            self.r_inf_sq_error,
            self.ricci_residual,
            self.phi_residual,
            self.z
        )
    }
}

pub fn write_reports_csv(reports: &[DiagnosticReport], path: &Path) -> Result<(), DiagError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", DiagnosticReport::CSV_HEADER)?;
    for r in reports {
        writeln!(out, "{}", r.csv_row())?;
    }
    out.flush()?;
    Ok(())
}
