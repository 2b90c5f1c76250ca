//! Finite-difference operators on `w = log u`, shared by the solver, the
//! reconstruction and the diagnostics.
//!
//! Every operator is written in terms of the log-ratios
//! `d_i = ln(u_{i+1} / u_i)` rather than differences of `ln u_i`. The two are
//! equal in exact arithmetic, but the ratio form keeps the rounding error
//! relative to `u` instead of relative to `|ln u|`, which matters in the
//! exponentially small tails of a truncated sphere-like profile.

use crate::grid::{Boundary, IsothermalGrid};

/// Log-ratios between consecutive nodes. Periodic grids get a final entry
/// wrapping from the last node back to the first.
pub fn log_steps(u: &[f64], periodic: bool) -> Vec<f64> {
    let n = u.len();
    let mut d: Vec<f64> = u.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    if periodic {
        d.push((u[0] / u[n - 1]).ln());
    }
    d
}

/// Differences `w_{i+1} - w_i` computed directly from `w`.
pub fn steps_of(w: &[f64], periodic: bool) -> Vec<f64> {
    let n = w.len();
    let mut d: Vec<f64> = w.windows(2).map(|p| p[1] - p[0]).collect();
    if periodic {
        d.push(w[0] - w[n - 1]);
    }
    d
}

/// Conservative second difference used by the time stepper.
///
/// Interior: `(d_i - d_{i-1}) / Δξ²`. Periodic grids wrap. With flux
/// boundaries the outer face fluxes are pinned to `a` (left) and `-b`
/// (right), so `Δξ Σ_i D₂w_i = -(a + b)` exactly.
pub fn conservative_second_difference(steps: &[f64], grid: &IsothermalGrid) -> Vec<f64> {
    let n = grid.len();
    let h = grid.spacing();
    let h2 = h * h;
    let mut out = vec![0.0; n];
    match grid.boundary() {
        Boundary::Periodic { .. } => {
            for i in 0..n {
                let back = steps[(i + n - 1) % n];
                out[i] = (steps[i] - back) / h2;
            }
        }
        Boundary::FluxAtInfinity(flux) => {
            out[0] = (steps[0] / h - flux.left) / h;
            for i in 1..n - 1 {
                out[i] = (steps[i] - steps[i - 1]) / h2;
            }
            out[n - 1] = (-flux.right - steps[n - 2] / h) / h;
        }
    }
    out
}

/// Second-order first derivative of `w`: centred in the interior, one-sided at
/// the ends of a non-periodic grid.
pub fn first_derivative_2(steps: &[f64], grid: &IsothermalGrid) -> Vec<f64> {
    let n = grid.len();
    let h = grid.spacing();
    let mut out = vec![0.0; n];
    if grid.is_periodic() {
        for i in 0..n {
            out[i] = (steps[i] + steps[(i + n - 1) % n]) / (2.0 * h);
        }
    } else {
        for i in 1..n - 1 {
            out[i] = (steps[i] + steps[i - 1]) / (2.0 * h);
        }
        out[0] = (3.0 * steps[0] - steps[1]) / (2.0 * h);
        out[n - 1] = (3.0 * steps[n - 2] - steps[n - 3]) / (2.0 * h);
    }
    out
}

/// Fourth-order centred first derivative of `w`. On non-periodic grids the
/// two nodes next to each end fall back to second order.
pub fn first_derivative_4(steps: &[f64], grid: &IsothermalGrid) -> Vec<f64> {
    let n = grid.len();
    let h = grid.spacing();
    let at = |k: isize| steps[k.rem_euclid(steps.len() as isize) as usize];
    let centred = |i: usize| {
        let i = i as isize;
        (7.0 * (at(i) + at(i - 1)) - (at(i + 1) + at(i - 2))) / (12.0 * h)
    };
    if grid.is_periodic() {
        return (0..n).map(centred).collect();
    }
    let mut out = first_derivative_2(steps, grid);
    for (i, o) in out.iter_mut().enumerate().take(n - 2).skip(2) {
        *o = centred(i);
    }
    out
}

// One-sided and off-centre fourth-order second-derivative weights on w,
// times 12 h².
const D2_EDGE: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
const D2_NEAR_EDGE: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];

/// Fourth-order second derivative of `w`, one-sided of the same order at the
/// ends of a non-periodic grid.
pub fn second_derivative_4(steps: &[f64], grid: &IsothermalGrid) -> Vec<f64> {
    let n = grid.len();
    let h2 = grid.spacing() * grid.spacing();
    let at = |k: isize| steps[k.rem_euclid(steps.len() as isize) as usize];
    let centred = |i: usize| {
        let i = i as isize;
        (15.0 * (at(i) - at(i - 1)) - (at(i + 1) - at(i - 2))) / (12.0 * h2)
    };
    if grid.is_periodic() {
        return (0..n).map(centred).collect();
    }
    let mut out: Vec<f64> = (0..n)
        .map(|i| if (2..n - 2).contains(&i) { centred(i) } else { 0.0 })
        .collect();
    // Weights on w become weights on the steps via tail sums.
    let on_steps = |w: &[f64; 6], d: &[f64]| -> f64 {
        let mut tail = 0.0;
        let mut acc = 0.0;
        for j in (0..5).rev() {
            tail += w[j + 1];
            acc += tail * d[j];
        }
        acc / (12.0 * h2)
    };
    out[0] = on_steps(&D2_EDGE, &steps[0..5]);
    out[1] = on_steps(&D2_NEAR_EDGE, &steps[0..5]);
    // Mirror image at the right end: reversed order negates every step.
    let tail: Vec<f64> = steps[n - 6..n - 1].iter().rev().map(|d| -d).collect();
    out[n - 1] = on_steps(&D2_EDGE, &tail);
    out[n - 2] = on_steps(&D2_NEAR_EDGE, &tail);
    out
}
