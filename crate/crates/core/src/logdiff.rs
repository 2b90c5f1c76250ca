//! Implicit time stepping of `u_t = (log u)_ξξ`.
//!
//! Each step solves the backward-Euler system
//! `u^{n+1} − dt·D₂(log u^{n+1}) = u^n` by Newton's method on `w = log u`,
//! which keeps every iterate positive. `D₂` is the conservative second
//! difference of [`stencil::conservative_second_difference`], so the discrete
//! mass changes only through the prescribed boundary fluxes.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::grid::{Boundary, IsothermalGrid};
use crate::linalg::{solve_cyclic_tridiagonal, solve_tridiagonal, LinalgError};
use crate::stencil;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("step lost positivity of u")]
    PositivityLoss,
    #[error("near extinction at t = {t}: max u = {max_u:e}")]
    NearExtinction { t: f64, max_u: f64 },
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("time step underflow at t = {t} (dt = {dt:e}): {source}")]
    StepUnderflow {
        t: f64,
        dt: f64,
        #[source]
        source: Box<FlowError>,
    },
    #[error("invalid output times: {0}")]
    BadOutputTimes(String),
    #[error("state has {got} samples on a grid of {expected} nodes")]
    Dimension { expected: usize, got: usize },
    #[error("u must be positive and finite at node {0}")]
    NonPositive(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Metadata of the step that produced a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub dt: f64,
    pub newton_iterations: usize,
    pub residual: f64,
}

/// Samples of the conformal factor on a grid at one time.
#[derive(Debug, Clone)]
pub struct FlowState {
    grid: Arc<IsothermalGrid>,
    t: f64,
    u: Vec<f64>,
    stats: Option<StepStats>,
}

impl FlowState {
    /// State at `t = 0`. Positivity is the caller's responsibility; use
    /// [`FlowState::new`] for checked construction.
    pub(crate) fn initial(grid: Arc<IsothermalGrid>, u: Vec<f64>) -> Self {
        Self {
            grid,
            t: 0.0,
            u,
            stats: None,
        }
    }

    pub fn new(grid: Arc<IsothermalGrid>, t: f64, u: Vec<f64>) -> Result<Self, FlowError> {
        if u.len() != grid.len() {
            return Err(FlowError::Dimension {
                expected: grid.len(),
                got: u.len(),
            });
        }
        if let Some(i) = u.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(FlowError::NonPositive(i));
        }
        Ok(Self {
            grid,
            t,
            u,
            stats: None,
        })
    }

    /// Samples `u(ξ_i) = g(ξ_i)` of a closed-form profile.
    pub fn from_fn(grid: Arc<IsothermalGrid>, t: f64, g: impl Fn(f64) -> f64) -> Result<Self, FlowError> {
        let u = grid.nodes().iter().map(|&x| g(x)).collect();
        Self::new(grid, t, u)
    }

    pub fn grid(&self) -> &Arc<IsothermalGrid> {
        &self.grid
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn stats(&self) -> Option<StepStats> {
        self.stats
    }

    pub fn max_u(&self) -> f64 {
        self.u.iter().fold(0.0, |m, &x| m.max(x))
    }

    pub fn min_u(&self) -> f64 {
        self.u.iter().fold(f64::INFINITY, |m, &x| m.min(x))
    }

    /// `log u` at the nodes.
    pub fn log_u(&self) -> Vec<f64> {
        self.u.iter().map(|x| x.ln()).collect()
    }

    /// Log-ratios `ln(u_{i+1}/u_i)`, wrapping on periodic grids.
    pub fn log_steps(&self) -> Vec<f64> {
        stencil::log_steps(&self.u, self.grid.is_periodic())
    }

    /// The solver's conservative `D₂ log u`.
    pub fn d2_log_u(&self) -> Vec<f64> {
        stencil::conservative_second_difference(&self.log_steps(), &self.grid)
    }
}

/// `∫ u dξ`: trapezoid rule on flux grids, rectangle rule over one period on
/// periodic grids. `2π·mass` is the surface area (per period if periodic).
pub fn mass(state: &FlowState) -> f64 {
    let h = state.grid.spacing();
    let u = state.u();
    let sum: f64 = u.iter().sum();
    if state.grid.is_periodic() {
        sum * h
    } else {
        (sum - 0.5 * (u[0] + u[u.len() - 1])) * h
    }
}

/// Surface area `2π·mass`.
pub fn area(state: &FlowState) -> f64 {
    2.0 * std::f64::consts::PI * mass(state)
}

/// `u_ξ/u` by centred differences of `log u`, one-sided at the ends of a
/// non-periodic grid.
pub fn flux_profile(state: &FlowState) -> Vec<f64> {
    stencil::first_derivative_2(&state.log_steps(), &state.grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    /// Newton stops when `max |R| ≤ newton_tol · max u`.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// `max u` below which the flow is treated as extinct.
    pub extinction_floor: f64,
    /// Largest Newton update allowed in `log u` per iteration.
    pub max_update: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-12,
            max_newton: 50,
            extinction_floor: 1e-6,
            max_update: 2.0,
        }
    }
}

/// Backward-Euler stepper. Holds no state between steps.
#[derive(Debug, Clone, Default)]
pub struct Stepper {
    pub config: StepperConfig,
}

impl Stepper {
    pub fn new(config: StepperConfig) -> Self {
        Self { config }
    }

    /// Advance `state` by `dt`.
    pub fn step(&self, state: &FlowState, dt: f64) -> Result<FlowState, FlowError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(FlowError::BadTimeStep(dt));
        }
        let max_prev = state.max_u();
        if max_prev < self.config.extinction_floor {
            return Err(FlowError::NearExtinction {
                t: state.t,
                max_u: max_prev,
            });
        }
        let grid = &state.grid;
        let n = grid.len();
        let h = grid.spacing();
        let c = dt / (h * h);
        let periodic = grid.is_periodic();
        let mut w = state.log_u();
        let mut residual = f64::INFINITY;
        for iteration in 0..=self.config.max_newton {
            let u: Vec<f64> = w.iter().map(|x| x.exp()).collect();
            if u.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(FlowError::PositivityLoss);
            }
            let d2 = stencil::conservative_second_difference(&stencil::steps_of(&w, periodic), grid);
            let r: Vec<f64> = (0..n).map(|i| u[i] - dt * d2[i] - state.u[i]).collect();
            residual = r.iter().fold(0.0, |m, x| m.max(x.abs()));
            let max_u = u.iter().fold(0.0f64, |m, &x| m.max(x));
            let max_w = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            // Differences of w near |w| carry rounding of order ε|w|.
            let floor = 8.0 * f64::EPSILON * c * max_w.max(1.0);
            if residual <= (self.config.newton_tol * max_u).max(floor) {
                let stats = StepStats {
                    dt,
                    newton_iterations: iteration,
                    residual,
                };
                return Ok(FlowState {
                    grid: Arc::clone(grid),
                    t: state.t + dt,
                    u,
                    stats: Some(stats),
                });
            }
            if iteration == self.config.max_newton {
                break;
            }
            // J = diag(u) − dt·D₂, with D₂ the tridiagonal operator on w.
            let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
            let mut diag: Vec<f64> = u.iter().map(|x| x + 2.0 * c).collect();
            let delta = match grid.boundary() {
                Boundary::Periodic { .. } => {
                    let off = vec![-c; n];
                    solve_cyclic_tridiagonal(&off, &diag, &off, &rhs)?
                }
                Boundary::FluxAtInfinity(_) => {
                    diag[0] -= c;
                    diag[n - 1] -= c;
                    let off = vec![-c; n - 1];
                    solve_tridiagonal(&off, &diag, &off, &rhs)?
                }
            };
            let biggest = delta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if !biggest.is_finite() {
                return Err(FlowError::PositivityLoss);
            }
            let scale = if biggest > self.config.max_update {
                self.config.max_update / biggest
            } else {
                1.0
            };
            let mut stalled = true;
            for (wi, di) in w.iter_mut().zip(&delta) {
                let step = scale * di;
                if step.abs() > 4.0 * f64::EPSILON * wi.abs().max(1.0) {
                    stalled = false;
                }
                *wi += step;
            }
            if stalled {
                let u: Vec<f64> = w.iter().map(|x| x.exp()).collect();
                let stats = StepStats {
                    dt,
                    newton_iterations: iteration + 1,
                    residual,
                };
                return Ok(FlowState {
                    grid: Arc::clone(grid),
                    t: state.t + dt,
                    u,
                    stats: Some(stats),
                });
            }
        }
        Err(FlowError::NewtonDivergence {
            iterations: self.config.max_newton,
            residual,
        })
    }
}

/// Adaptive step-size policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepController {
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub growth: f64,
    /// Steps converging in at most this many Newton iterations grow `dt`.
    pub fast_newton: usize,
}

impl Default for StepController {
    fn default() -> Self {
        Self {
            dt0: 1e-4,
            dt_min: 1e-9,
            dt_max: 1e-2,
            growth: 1.2,
            fast_newton: 4,
        }
    }
}

impl StepController {
    /// Fixed step `dt` throughout.
    pub fn fixed(dt: f64) -> Self {
        Self {
            dt0: dt,
            dt_min: dt,
            dt_max: dt,
            growth: 1.0,
            fast_newton: 0,
        }
    }
}

/// One recorded output time.
#[derive(Debug, Clone)]
pub struct Frame {
    pub state: FlowState,
    /// State before the last step that led here, for two-level residuals.
    pub previous: Option<FlowState>,
    pub near_extinction: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// The run stopped before `t_end` because `max u` fell below the floor.
    pub extinct: bool,
}

impl Trajectory {
    pub fn last(&self) -> &Frame {
        self.frames.last().expect("a trajectory always holds its initial frame")
    }

    pub fn states(&self) -> impl Iterator<Item = &FlowState> {
        self.frames.iter().map(|f| &f.state)
    }
}

/// Integrate from `state` to `t_end`, recording the initial state, every time
/// in `output_times` inside `(state.t, t_end)` and `t_end` itself.
pub fn solve_to(
    state: &FlowState,
    t_end: f64,
    output_times: &[f64],
    stepper: &Stepper,
    controller: &StepController,
) -> Result<Trajectory, FlowError> {
    solve_to_with(state, t_end, output_times, stepper, controller, |_| {})
}

/// As [`solve_to`], calling `on_step` with every accepted state.
pub fn solve_to_with(
    state: &FlowState,
    t_end: f64,
    output_times: &[f64],
    stepper: &Stepper,
    controller: &StepController,
    mut on_step: impl FnMut(&FlowState),
) -> Result<Trajectory, FlowError> {
    let t0 = state.t;
    if !(t_end.is_finite() && t_end >= t0) {
        return Err(FlowError::BadOutputTimes(format!("t_end = {t_end} precedes t = {t0}")));
    }
    if output_times.windows(2).any(|w| !(w[1] > w[0])) || output_times.iter().any(|t| !t.is_finite()) {
        return Err(FlowError::BadOutputTimes(
            "output times must be finite and strictly increasing".into(),
        ));
    }
    let mut targets: Vec<f64> = output_times.iter().copied().filter(|&t| t > t0 && t < t_end).collect();
    if t_end > t0 {
        targets.push(t_end);
    }
    let mut traj = Trajectory {
        frames: vec![Frame {
            state: state.clone(),
            previous: None,
            near_extinction: false,
        }],
        accepted_steps: 0,
        rejected_steps: 0,
        extinct: false,
    };
    let mut current = state.clone();
    let mut dt = controller.dt0.min(controller.dt_max);
    for target in targets {
        while current.t < target {
            let remaining = target - current.t;
            // Land exactly on the target without leaving a sliver step.
            let (dt_try, lands) = if remaining <= dt * (1.0 + 1e-9) {
                (remaining, true)
            } else if remaining < 2.0 * dt {
                (0.5 * remaining, false)
            } else {
                (dt, false)
            };
            match stepper.step(&current, dt_try) {
                Ok(mut next) => {
                    if lands {
                        next.t = target;
                    }
                    traj.accepted_steps += 1;
                    on_step(&next);
                    let iterations = next.stats.map_or(0, |s| s.newton_iterations);
                    if iterations <= controller.fast_newton {
                        dt = (dt * controller.growth).min(controller.dt_max);
                    }
                    let previous = std::mem::replace(&mut current, next);
                    if current.max_u() < stepper.config.extinction_floor {
                        traj.frames.push(Frame {
                            state: current.clone(),
                            previous: Some(previous),
                            near_extinction: true,
                        });
                        traj.extinct = true;
                        return Ok(traj);
                    }
                    if lands {
                        traj.frames.push(Frame {
                            state: current.clone(),
                            previous: Some(previous),
                            near_extinction: false,
                        });
                    }
                }
                Err(err @ (FlowError::NewtonDivergence { .. } | FlowError::PositivityLoss | FlowError::Linalg(_))) => {
                    traj.rejected_steps += 1;
                    dt = 0.5 * dt_try;
                    if dt < controller.dt_min {
                        return Err(FlowError::StepUnderflow {
                            t: current.t,
                            dt,
                            source: Box::new(err),
                        });
                    }
                }
                Err(err) => return Err(err),
            }
        }
    }
    Ok(traj)
}

/// File name used for a frame dump: `u_t<time to 6 decimals>.csv`.
pub fn frame_file_name(t: f64) -> String {
    format!("u_t{t:.6}.csv")
}

/// Write `xi,u` for `state` into `dir`, returning the file path.
pub fn write_frame_csv(state: &FlowState, dir: &Path) -> Result<PathBuf, FlowError> {
    let path = dir.join(frame_file_name(state.t));
    let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(out, "xi,u")?;
    for (x, u) in state.grid.nodes().iter().zip(&state.u) {
        writeln!(out, "{x},{u}")?;
    }
    out.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FluxBoundary;
    use crate::profile::Topology;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sphere_grid(n: usize) -> Arc<IsothermalGrid> {
        Arc::new(IsothermalGrid::truncated(8.0, n, FluxBoundary::SMOOTH_POLES, 0.0, Topology::SphereLike).unwrap())
    }

    fn periodic_grid(q: f64, n: usize) -> Arc<IsothermalGrid> {
        Arc::new(IsothermalGrid::periodic(q, n, 0.0, Topology::Toroidal).unwrap())
    }

    fn sech2(x: f64) -> f64 {
        let s = 1.0 / x.cosh();
        s * s
    }

    #[test]
    fn constant_periodic_state_is_stationary() {
        let s = FlowState::from_fn(periodic_grid(3.0, 64), 0.0, |_| 2.5).unwrap();
        let next = Stepper::default().step(&s, 0.01).unwrap();
        assert!(next.u().iter().all(|&u| u == 2.5));
        assert_eq!(next.t(), 0.01);
    }

    #[test]
    fn rejects_bad_input() {
        let g = periodic_grid(3.0, 32);
        assert!(matches!(
            FlowState::new(Arc::clone(&g), 0.0, vec![1.0; 31]),
            Err(FlowError::Dimension { .. })
        ));
        let mut u = vec![1.0; 32];
        u[5] = 0.0;
        assert!(matches!(
            FlowState::new(Arc::clone(&g), 0.0, u),
            Err(FlowError::NonPositive(5))
        ));
        let s = FlowState::from_fn(g, 0.0, |_| 1.0).unwrap();
        assert!(matches!(
            Stepper::default().step(&s, 0.0),
            Err(FlowError::BadTimeStep(_))
        ));
        assert!(matches!(
            Stepper::default().step(&s, -1.0),
            Err(FlowError::BadTimeStep(_))
        ));
    }

    #[test]
    fn mass_rules() {
        let s = FlowState::from_fn(periodic_grid(3.0, 60), 0.0, |_| 2.0).unwrap();
        assert_abs_diff_eq!(mass(&s), 6.0, epsilon = 1e-13);
        assert_abs_diff_eq!(area(&s), 12.0 * std::f64::consts::PI, epsilon = 1e-12);
        let s = FlowState::from_fn(sphere_grid(801), 0.0, sech2).unwrap();
        assert!((mass(&s) - 2.0).abs() <= 5e-7);
    }

    #[test]
    fn flux_profile_of_sech_squared() {
        let s = FlowState::from_fn(sphere_grid(801), 0.0, sech2).unwrap();
        let flux = flux_profile(&s);
        assert_abs_diff_eq!(flux[400], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(flux[0], 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(flux[800], -2.0, epsilon = 1e-6);
        let c = FlowState::from_fn(sphere_grid(64), 0.0, |_| 3.0).unwrap();
        assert!(flux_profile(&c).iter().all(|&f| f == 0.0));
    }

    #[test]
    fn flux_mass_law_is_exact_per_step() {
        let g = sphere_grid(401);
        let s = FlowState::from_fn(Arc::clone(&g), 0.0, sech2).unwrap();
        let next = Stepper::default().step(&s, 1e-3).unwrap();
        let rect = |st: &FlowState| st.u().iter().sum::<f64>() * g.spacing();
        assert_abs_diff_eq!(rect(&next) - rect(&s), -4e-3, epsilon = 1e-12);
    }

    #[test]
    fn sphere_centre_shrinks_linearly() {
        let s = FlowState::from_fn(sphere_grid(801), 0.0, sech2).unwrap();
        let traj = solve_to(&s, 0.2, &[0.1], &Stepper::default(), &StepController::default()).unwrap();
        assert_eq!(traj.frames.len(), 3);
        assert_eq!(traj.frames[1].state.t(), 0.1);
        assert_eq!(traj.last().state.t(), 0.2);
        assert_abs_diff_eq!(traj.last().state.u()[400], 0.6, epsilon = 1e-3);
        assert!(traj.frames[2].previous.is_some());
    }

    #[test]
    fn empty_interval_returns_input() {
        let s = FlowState::from_fn(sphere_grid(101), 0.0, sech2).unwrap();
        let traj = solve_to(&s, 0.0, &[], &Stepper::default(), &StepController::default()).unwrap();
        assert_eq!(traj.frames.len(), 1);
        assert_eq!(traj.accepted_steps, 0);
        assert!(solve_to(&s, -1.0, &[], &Stepper::default(), &StepController::default()).is_err());
        assert!(solve_to(&s, 1.0, &[0.5, 0.2], &Stepper::default(), &StepController::default()).is_err());
    }

    #[test]
    fn sphere_run_stops_near_extinction() {
        let s = FlowState::from_fn(sphere_grid(201), 0.0, sech2).unwrap();
        let traj = solve_to(&s, 0.6, &[], &Stepper::default(), &StepController::default()).unwrap();
        assert!(traj.extinct);
        let last = traj.last();
        assert!(last.near_extinction);
        assert!(last.state.t() < 0.5 + 1e-3 && last.state.t() > 0.49);
    }

    #[test]
    fn frame_dump_layout() {
        let dir = tempfile::tempdir().unwrap();
        let s = FlowState::from_fn(periodic_grid(1.0, 16), 0.25, |x| 1.0 + x).unwrap();
        let path = write_frame_csv(&s, dir.path()).unwrap();
        assert_eq!(path.file_name().unwrap(), "u_t0.250000.csv");
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("xi,u"));
        assert_eq!(lines.next(), Some("0,1"));
        assert_eq!(text.lines().count(), 17);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn periodic_steps_conserve_mass_and_positivity(
            amps in proptest::collection::vec(-0.9f64..0.9, 3),
            dt in 1e-4f64..0.5,
        ) {
            let q = 2.5;
            let k = 2.0 * std::f64::consts::PI / q;
            let g = periodic_grid(q, 128);
            let s = FlowState::from_fn(g, 0.0, |x| {
                (1.0 + amps[0] * (k * x).cos() + 0.05 * amps[1] * (2.0 * k * x).sin()).powi(2) * (1.0 + amps[2]).exp()
            }).unwrap();
            let next = Stepper::default().step(&s, dt).unwrap();
            prop_assert!(next.u().iter().all(|&u| u > 0.0));
            let (m0, m1) = (mass(&s), mass(&next));
            prop_assert!((m1 - m0).abs() <= 1e-10 * m0);
            prop_assert!(next.t() > s.t());
        }
    }
}
