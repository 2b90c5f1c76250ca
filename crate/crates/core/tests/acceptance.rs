//! Acceptance criteria, one test per criterion. Each prints a single
//! `[PASS]`/`[FAIL]` line before asserting.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use revflow_core::diagnostics::{self as dg, PeriodicLimits};
use revflow_core::embed::{self as em, SurfaceFrame};
use revflow_core::logdiff::{self as ld, Trajectory};
use revflow_core::{build_profile, FlowState, ProfileCurve, StepController, Stepper, SurfaceSpec};

const SPHERE_TIMES: [f64; 8] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40];
const TORUS_TIMES: [f64; 9] = [0.01, 0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0];

fn report(id: &str, name: &str, pass: bool, detail: String) {
    println!("[{}] {id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn sech2(x: f64) -> f64 {
    let s = 1.0 / x.cosh();
    s * s
}

struct SphereRun {
    traj: Trajectory,
}

fn sphere_run(n: usize) -> SphereRun {
    let curve = build_profile(&SurfaceSpec::Sphere).unwrap();
    let grid = Arc::new(curve.default_grid(n, 8.0).unwrap());
    let u0 = curve.sample_u0(&grid).unwrap();
    let traj = ld::solve_to(&u0, 0.4, &SPHERE_TIMES, &Stepper::default(), &StepController::default()).unwrap();
    assert!(!traj.extinct);
    SphereRun { traj }
}

fn sphere() -> &'static SphereRun {
    static RUN: OnceLock<SphereRun> = OnceLock::new();
    RUN.get_or_init(|| sphere_run(801))
}

fn sphere_fine() -> &'static SphereRun {
    static RUN: OnceLock<SphereRun> = OnceLock::new();
    RUN.get_or_init(|| sphere_run(1601))
}

struct TorusRun {
    curve: ProfileCurve,
    traj: Trajectory,
    limits: PeriodicLimits,
    // Worst relative mass drift and largest |f_ξ/f| over every accepted step.
    step_mass_drift: f64,
    step_max_ratio: f64,
}

fn torus() -> &'static TorusRun {
    static RUN: OnceLock<TorusRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let curve = build_profile(&SurfaceSpec::Torus { a: 2.0, b: 1.0 }).unwrap();
        let grid = Arc::new(curve.default_grid(801, 8.0).unwrap());
        let u0 = curve.sample_u0(&grid).unwrap();
        let m0 = ld::mass(&u0);
        let mut drift: f64 = 0.0;
        let mut ratio: f64 = 0.0;
        let traj = ld::solve_to_with(
            &u0,
            10.0,
            &TORUS_TIMES,
            &Stepper::default(),
            &StepController::default(),
            |s| {
                drift = drift.max((ld::mass(s) - m0).abs() / m0);
                ratio = ratio.max(em::embeddability_check(s).max_ratio);
            },
        )
        .unwrap();
        let limits = PeriodicLimits::from_curve(&curve).unwrap();
        TorusRun {
            curve,
            traj,
            limits,
            step_mass_drift: drift,
            step_max_ratio: ratio,
        }
    })
}

fn sphere_error(run: &SphereRun) -> f64 {
    let mut worst: f64 = 0.0;
    for state in run.traj.states() {
        let scale = 1.0 - 2.0 * state.t();
        for (x, u) in state.grid().nodes().iter().zip(state.u()) {
            worst = worst.max((u - scale * sech2(*x)).abs() / scale);
        }
    }
    worst
}

#[test]
fn c01_shrinking_sphere_regression() {
    let coarse = sphere_error(sphere());
    let fine = sphere_error(sphere_fine());
    let ratio = coarse / fine;
    report(
        "C1",
        "shrinking sphere",
        coarse <= 5e-3 && (3.0..=5.0).contains(&ratio),
        format!("max rel error {coarse:.3e} (<= 5e-3) at N=801, {fine:.3e} at N=1601, ratio {ratio:.2} (~4)"),
    );
}

#[test]
fn c02_extinction_law() {
    let pts: Vec<(f64, f64)> = sphere().traj.states().map(|s| (s.t(), ld::area(s))).collect();
    let n = pts.len() as f64;
    let (mt, ma) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxy: f64 = pts.iter().map(|(t, a)| (t - mt) * (a - ma)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = ma - slope * mt;
    let extinction = -intercept / slope;
    let slope_err = (slope / (-8.0 * PI) - 1.0).abs();
    let t_err = (extinction / 0.5 - 1.0).abs();
    report(
        "C2",
        "extinction law",
        slope_err <= 0.01 && t_err <= 0.01,
        format!("area slope {slope:.6} vs -8π (rel {slope_err:.2e}), extrapolated T {extinction:.6} (rel {t_err:.2e})"),
    );
}

#[test]
fn c03_torus_mass_conservation() {
    let run = torus();
    let m0 = ld::mass(&run.traj.frames[0].state);
    let frame_drift = run
        .traj
        .states()
        .map(|s| (ld::mass(s) - m0).abs() / m0)
        .fold(0.0, f64::max);
    let worst = frame_drift.max(run.step_mass_drift);
    report(
        "C3",
        "torus mass conservation",
        worst <= 1e-8 && run.traj.last().state.t() == 10.0,
        format!(
            "max |Δmass|/mass {worst:.3e} over {} steps to t=10 (<= 1e-8)",
            run.traj.accepted_steps
        ),
    );
}

#[test]
fn c04_limiting_radius() {
    let run = torus();
    let lr = dg::limiting_radius(&run.curve).unwrap();
    let exact = 2.0 * 3f64.sqrt();
    let dev = dg::sup_deviation(&run.traj.last().state, exact);
    let two_way = (lr.r_inf_sq - lr.integral_form).abs();
    let closed = (lr.r_inf_sq - exact).abs();
    report(
        "C4",
        "limiting radius",
        dev <= 0.02 * exact && two_way <= 1e-8 && closed <= 1e-8,
        format!(
            "sup|u(10) - R²| = {dev:.3e} (<= {:.3e}); formulas {:.12} / {:.12} differ by {two_way:.1e}; vs 2√3 {closed:.1e}",
            0.02 * exact,
            lr.r_inf_sq,
            lr.integral_form
        ),
    );
}

#[test]
fn c05_convergence_bound() {
    let run = torus();
    let mut pass = true;
    let mut tightest = f64::INFINITY;
    for state in run.traj.states().filter(|s| s.t() > 0.0) {
        let rep = dg::convergence_bound_check(state, &run.limits).unwrap();
        pass &= rep.sup_error <= rep.bound;
        tightest = tightest.min(rep.bound - rep.sup_error);
    }
    report(
        "C5",
        "convergence bound",
        pass,
        format!(
            "sup|u - R²| <= Q^1.5 M³/√(3t) at all {} frames, smallest gap {tightest:.3e}",
            TORUS_TIMES.len()
        ),
    );
}

fn ab_scaled_min(traj: &Trajectory) -> (f64, bool) {
    let mut worst = f64::INFINITY;
    let mut pass = true;
    for state in traj.states().filter(|s| s.t() > 0.0) {
        let rep = dg::aronson_benilan_check(state).unwrap();
        pass &= rep.passed;
        worst = worst.min(rep.margin * rep.t);
    }
    (worst, pass)
}

#[test]
fn c06_aronson_benilan() {
    let (torus_min, torus_pass) = ab_scaled_min(&torus().traj);
    let (sphere_min, sphere_pass) = ab_scaled_min(&sphere().traj);
    report(
        "C6",
        "Aronson-Bénilan",
        torus_pass && sphere_pass,
        format!(
            "min t·margin: torus {torus_min:.3e} ({}), sphere {sphere_min:.3e} ({}); threshold -1e-6",
            if torus_pass { "pass" } else { "fail" },
            if sphere_pass { "pass" } else { "fail" }
        ),
    );
}

#[test]
fn c07_embeddability_preserved() {
    let run = torus();
    let initial = em::embeddability_check(&run.traj.frames[0].state).max_ratio;
    let frames = run
        .traj
        .states()
        .map(|s| em::embeddability_check(s).max_ratio)
        .fold(0.0, f64::max);
    let worst = frames.max(run.step_max_ratio);
    report(
        "C7",
        "embeddability preserved",
        worst <= initial + 1e-6,
        format!("max |f_ξ/f| over run {worst:.12} vs initial {initial:.12} (+1e-6)"),
    );
}

fn all_frames() -> Vec<SurfaceFrame> {
    sphere()
        .traj
        .states()
        .chain(torus().traj.states())
        .map(|s| em::reconstruct(s).unwrap())
        .collect()
}

#[test]
fn c08_reconstruction_isometry() {
    let frames = all_frames();
    let worst = frames.iter().map(SurfaceFrame::isometry_defect).fold(0.0, f64::max);
    report(
        "C8",
        "reconstruction isometry",
        worst <= 1e-6,
        format!(
            "max |f_ξ² + ĥ_ξ² - f²|/f² = {worst:.3e} over {} frames (<= 1e-6)",
            frames.len()
        ),
    );
}

#[test]
fn c09_pole_smoothness() {
    let mut pass = true;
    let (mut flux, mut slope): (f64, f64) = (0.0, 0.0);
    for state in sphere().traj.states() {
        let rep = em::pole_smoothness_check(&em::reconstruct(state).unwrap()).unwrap();
        pass &= rep.passed;
        flux = flux.max(rep.left_flux_deviation).max(rep.right_flux_deviation);
        slope = slope.max(rep.left_slope).max(rep.right_slope);
    }
    report(
        "C9",
        "pole smoothness",
        pass,
        format!("max boundary |f_ξ/f ∓ 1| {flux:.3e} (<= 1e-2), max |dz/dx| {slope:.3e} (<= 0.15)"),
    );
}

#[test]
fn c10_crease_construction() {
    let run = torus();
    let first = em::reconstruct(&run.traj.frames[0].state).unwrap();
    let z0 = first.h_hat[first.flattest_node()];
    let (mut extent_err, mut slope_err): (f64, f64) = (0.0, 0.0);
    let mut z_final = f64::NAN;
    for state in run.traj.states() {
        let frame = em::reconstruct(state).unwrap();
        let z = frame.z_period.unwrap();
        let folded = em::crease_fold(&frame, z0).unwrap();
        extent_err = extent_err.max((folded.height_extent() - 0.5 * z).abs());
        let (c0, c1) = folded.creases.unwrap();
        let n = frame.len();
        let h = frame.xi[1] - frame.xi[0];
        for (xi, hx) in folded.xi.iter().zip(&folded.h_xi) {
            if *xi == c0 || *xi == c1 || *xi == c0 + frame.period.unwrap() {
                continue;
            }
            let i = ((xi - frame.xi[0]) / h).round() as i64;
            let orig = frame.h_xi[i.rem_euclid(n as i64) as usize];
            slope_err = slope_err.max((hx * hx - orig * orig).abs());
        }
        z_final = z;
    }
    let target = 2.0 * PI * (2.0 / 3f64.sqrt()).sqrt();
    let z_rel = (z_final / target - 1.0).abs();
    report(
        "C10",
        "crease construction",
        extent_err <= 1e-12 && slope_err <= 1e-12 && z_rel <= 0.02,
        format!(
            "|extent - Z/2| <= {extent_err:.1e}, slope² mismatch {slope_err:.1e}, Z(10) = {z_final:.6} vs R∞Q {target:.6} (rel {z_rel:.2e})"
        ),
    );
}

#[test]
fn c11_curvature_oracle() {
    let curve = build_profile(&SurfaceSpec::Sphere).unwrap();
    let grid = Arc::new(curve.default_grid(801, 8.0).unwrap());
    let exact = FlowState::from_fn(Arc::clone(&grid), 0.0, sech2).unwrap();
    let k = dg::gaussian_curvature(&exact);
    let (worst_i, worst) = k
        .iter()
        .map(|v| (v - 1.0).abs())
        .enumerate()
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let flat = FlowState::from_fn(grid, 0.0, |_| 2.0).unwrap();
    let flat_ok = dg::gaussian_curvature(&flat).iter().all(|&v| v == 0.0);
    report(
        "C11",
        "curvature oracle",
        worst <= 1e-6 && flat_ok,
        format!(
            "sphere max |K - 1| = {worst:.3e} at ξ = {:.2} (<= 1e-6); flat K == 0: {flat_ok}",
            exact.grid().nodes()[worst_i]
        ),
    );
}
