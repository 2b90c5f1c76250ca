//! profile → solve → reconstruct → diagnose → export.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use revflow_core::diagnostics::{self as dg, DiagnosticReport, PeriodicLimits};
use revflow_core::embed::{self as em, SurfaceFrame};
use revflow_core::logdiff::{self as ld, Trajectory};
use revflow_core::{
    build_profile, DiagError, EmbedError, FlowError, FlowState, ProfileCurve, ProfileError, Stepper, Topology,
};
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig, RESOLVED_CONFIG_FILE};

pub const MASS_DRIFT_TOL: f64 = 1e-8;
pub const ISOMETRY_TOL: f64 = 1e-6;
pub const CREASE_EXTENT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("surface: {0}")]
    Profile(#[from] ProfileError),
    #[error("solver: {0}")]
    Flow(#[from] FlowError),
    #[error("embedding: {0}")]
    Embed(EmbedError),
    #[error("diagnostics: {0}")]
    Diag(DiagError),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("output {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::NotEmbeddable { .. } => CliError::Invariant(e.to_string()),
            other => CliError::Embed(other),
        }
    }
}

impl From<DiagError> for CliError {
    fn from(e: DiagError) -> Self {
        match e {
            DiagError::CrossCheckFailure { .. } => CliError::Invariant(e.to_string()),
            other => CliError::Diag(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Profile(_) => 2,
            CliError::Flow(_) | CliError::Embed(_) | CliError::Diag(_) | CliError::Output { .. } => 3,
            CliError::Invariant(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Profile(_) => "surface",
            CliError::Flow(_) => "solver",
            CliError::Embed(_) => "embedding",
            CliError::Diag(_) => "diagnostics",
            CliError::Invariant(_) => "invariant",
            CliError::Output { .. } => "output",
        }
    }
}

fn output_dir(path: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Output {
        path: path.to_owned(),
        source,
    })?;
    Ok(path.to_owned())
}

fn io_at<T>(path: &Path, r: std::io::Result<T>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Output {
        path: path.to_owned(),
        source,
    })
}

/// Write the resolved config into the output directory.
pub fn echo_config(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let dir = output_dir(&cfg.outputs.dir)?;
    let path = dir.join(RESOLVED_CONFIG_FILE);
    io_at(&path, fs::write(&path, cfg.to_toml()))
}

/// A finished run: the curve, every recorded frame and per-step bookkeeping.
pub struct Run {
    pub curve: ProfileCurve,
    pub traj: Trajectory,
    /// Largest relative mass change over all accepted steps.
    pub step_mass_drift: f64,
    /// Largest `|f_ξ/f|` over all accepted steps.
    pub step_max_ratio: f64,
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<(ProfileCurve, FlowState), CliError> {
    let curve = build_profile(&cfg.surface_spec())?;
    let grid = Arc::new(curve.default_grid(cfg.grid.n, cfg.grid.l)?);
    let u0 = curve.sample_u0(&grid)?;
    Ok((curve, u0))
}

pub fn integrate(cfg: &ScenarioConfig) -> Result<Run, CliError> {
    let (curve, u0) = prepare(cfg)?;
    let m0 = ld::mass(&u0);
    let (mut drift, mut ratio) = (0.0f64, em::embeddability_check(&u0).max_ratio);
    let stepper = Stepper::new(cfg.stepper_config());
    let traj = ld::solve_to_with(
        &u0,
        cfg.outputs.t_end,
        &cfg.outputs.frames,
        &stepper,
        &cfg.controller(),
        |s| {
            drift = drift.max((ld::mass(s) - m0).abs() / m0);
            ratio = ratio.max(em::embeddability_check(s).max_ratio);
        },
    )?;
    Ok(Run {
        curve,
        traj,
        step_mass_drift: drift,
        step_max_ratio: ratio,
    })
}

fn periodic_limits(curve: &ProfileCurve) -> Result<Option<PeriodicLimits>, CliError> {
    if curve.is_periodic_cell() {
        Ok(Some(PeriodicLimits::from_curve(curve)?))
    } else {
        Ok(None)
    }
}

/// Least-squares line `y = slope·x + intercept`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn frame_stem(prefix: &str, t: f64) -> String {
    format!("{prefix}_t{t:.6}")
}

/// Dump every frame, its profile, mesh and the diagnostics table; then check
/// the run-level invariants.
pub fn evolve(cfg: &ScenarioConfig) -> Result<Run, CliError> {
    echo_config(cfg)?;
    let run = integrate(cfg)?;
    let root = &cfg.outputs.dir;
    let frames_dir = output_dir(&root.join("frames"))?;
    let profiles_dir = output_dir(&root.join("profiles"))?;
    let meshes_dir = output_dir(&root.join("meshes"))?;
    let limits = periodic_limits(&run.curve)?;

    let mut reports = Vec::with_capacity(run.traj.frames.len());
    let mut worst_isometry = 0.0f64;
    for frame in &run.traj.frames {
        let state = &frame.state;
        ld::write_frame_csv(state, &frames_dir).map_err(|e| match e {
            FlowError::Io(source) => CliError::Output {
                path: frames_dir.clone(),
                source,
            },
            other => other.into(),
        })?;
        let surface = em::reconstruct(state)?;
        worst_isometry = worst_isometry.max(surface.isometry_defect());
        em::write_profile_csv(&surface, &profiles_dir.join(frame_stem("profile", state.t()) + ".csv"))?;
        em::export_mesh(
            &surface,
            cfg.outputs.n_theta,
            &meshes_dir.join(frame_stem("surface", state.t()) + ".obj"),
        )?;
        reports.push(DiagnosticReport::for_frame(frame, limits.as_ref()));
    }
    dg::write_reports_csv(&reports, &root.join("diagnostics.csv"))?;

    println!(
        "surface {} ({:?}), N = {}",
        cfg.surface,
        run.curve.topology(),
        cfg.grid.n
    );
    println!(
        "{} steps accepted, {} rejected; reached t = {}",
        run.traj.accepted_steps,
        run.traj.rejected_steps,
        run.traj.last().state.t()
    );
    for r in &reports {
        println!("  t = {:<10.6} area = {:<22} mass = {}", r.t, r.area, r.mass);
    }
    if run.traj.extinct {
        println!("stopped near extinction at t = {}", run.traj.last().state.t());
    }
    if run.curve.topology() == Topology::SphereLike && reports.len() >= 3 {
        let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.t, r.area)).collect();
        let (slope, intercept) = linear_fit(&pts);
        println!(
            "area slope {slope:.6}, extrapolated extinction time {:.6}",
            -intercept / slope
        );
    }

    if worst_isometry > ISOMETRY_TOL {
        return Err(CliError::Invariant(format!(
            "reconstruction isometry defect {worst_isometry:e} > {ISOMETRY_TOL:e}"
        )));
    }
    if run.curve.is_periodic_cell() && run.step_mass_drift > MASS_DRIFT_TOL {
        return Err(CliError::Invariant(format!(
            "periodic mass drift {:e} > {MASS_DRIFT_TOL:e}",
            run.step_mass_drift
        )));
    }
    Ok(run)
}

/// Initial height of the fold: the configured `z0`, or `ĥ` where the
/// initial profile is flattest.
pub fn crease_height(cfg: &ScenarioConfig, run: &Run) -> Result<f64, CliError> {
    if let Some(z0) = cfg.outputs.z0 {
        return Ok(z0);
    }
    let first = em::reconstruct(&run.traj.frames[0].state)?;
    Ok(first.h_hat[first.flattest_node()])
}

/// Run `evolve`, then fold every frame into the creased torus.
pub fn crease(cfg: &ScenarioConfig) -> Result<Run, CliError> {
    let curve = build_profile(&cfg.surface_spec())?;
    if !(curve.topology() == Topology::Toroidal && curve.is_periodic_cell()) {
        return Err(ConfigError::Invalid(format!(
            "crease needs a closed toroidal profile, '{}' is {:?}",
            cfg.surface,
            curve.topology()
        ))
        .into());
    }
    let run = evolve(cfg)?;
    let z0 = crease_height(cfg, &run)?;
    let dir = output_dir(&cfg.outputs.dir.join("crease"))?;
    let mut summary = String::from("t,z0,z_period,crease0,crease1,height_extent\n");
    let mut worst = 0.0f64;
    for state in run.traj.states() {
        let frame = em::reconstruct(state)?;
        let folded = em::crease_fold(&frame, z0)?;
        let z = folded.z_period.expect("periodic frames carry a z-period");
        let (c0, c1) = folded.creases.expect("folded frames carry creases");
        let extent = folded.height_extent();
        worst = worst.max((extent - 0.5 * z).abs() / z.max(1.0));
        summary.push_str(&format!("{},{z0},{z},{c0},{c1},{extent}\n", state.t()));
        em::write_profile_csv(&folded, &dir.join(frame_stem("creased", state.t()) + ".csv"))?;
        em::export_mesh(
            &folded,
            cfg.outputs.n_theta,
            &dir.join(frame_stem("creased", state.t()) + ".obj"),
        )?;
        println!("  t = {:<10.6} Z = {z:<20} height extent = {extent}", state.t());
    }
    let path = dir.join("summary.csv");
    io_at(&path, fs::write(&path, summary))?;
    if worst > CREASE_EXTENT_TOL {
        return Err(CliError::Invariant(format!(
            "creased height extent misses Z/2 by {worst:e}"
        )));
    }
    Ok(run)
}

/// Evolve and write only the meshes of the requested frames.
pub fn export_meshes(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>, CliError> {
    echo_config(cfg)?;
    let run = integrate(cfg)?;
    let dir = output_dir(&cfg.outputs.dir.join("meshes"))?;
    let mut written = Vec::new();
    for state in run.traj.states() {
        let frame: SurfaceFrame = em::reconstruct(state)?;
        let path = dir.join(frame_stem("surface", state.t()) + ".obj");
        em::export_mesh(&frame, cfg.outputs.n_theta, &path)?;
        println!("{}", path.display());
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 3.0 - 2.0 * k as f64)).collect();
        let (m, c) = linear_fit(&pts);
        assert!((m + 2.0).abs() < 1e-14 && (c - 3.0).abs() < 1e-14);
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::from(ConfigError::Invalid("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(FlowError::PositivityLoss).exit_code(), 3);
        assert_eq!(CliError::Invariant("x".into()).exit_code(), 4);
        assert_eq!(
            CliError::from(EmbedError::NotEmbeddable { xi: 0.0, ratio: 2.0 }).exit_code(),
            4
        );
    }
}
