//! Reconstruction of embedded surfaces of revolution from the conformal
//! factor, the creased compact torus, and mesh/profile export.
//!
//! Given `u` on a ξ grid, the radius is `f = sqrt(u)` and the height is
//! `ĥ = ∫ sqrt(f² − f_ξ²) dξ`, which exists exactly when `|f_ξ/f| ≤ 1`.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::logdiff::FlowState;
use crate::profile::Topology;
use crate::stencil;

/// Radicand values above `−RADICAND_TOL·f²` are treated as rounding and clamped.
pub const RADICAND_TOL: f64 = 1e-9;
/// Pole smoothness thresholds: boundary flux deviation and profile slope.
pub const POLE_FLUX_TOL: f64 = 1e-2;
pub const POLE_SLOPE_TOL: f64 = 0.15;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("metric is not embeddable at ξ = {xi}: |f_ξ/f| = {ratio}")]
    NotEmbeddable { xi: f64, ratio: f64 },
    #[error("operation not available for {0:?} frames")]
    WrongTopology(Topology),
    #[error("frame has no positive z-period")]
    NoPeriod,
    #[error("mesh needs n_theta >= 3, got {0}")]
    BadResolution(usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddabilityReport {
    pub max_ratio: f64,
    pub ok: bool,
}

/// `f_ξ/f = (log u)_ξ / 2` at the nodes, fourth order in the interior.
pub fn phi(state: &FlowState) -> Vec<f64> {
    stencil::first_derivative_4(&state.log_steps(), state.grid())
        .into_iter()
        .map(|d| 0.5 * d)
        .collect()
}

/// `max |f_ξ/f|` over the grid; embeddable when it is at most `1 + 1e-9`.
pub fn embeddability_check(state: &FlowState) -> EmbeddabilityReport {
    let max_ratio = phi(state).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    EmbeddabilityReport {
        max_ratio,
        ok: max_ratio <= 1.0 + 1e-9,
    }
}

/// Profile of a surface of revolution at one time.
#[derive(Debug, Clone)]
pub struct SurfaceFrame {
    pub t: f64,
    pub topology: Topology,
    pub xi: Vec<f64>,
    pub f: Vec<f64>,
    pub f_xi: Vec<f64>,
    /// Height, anchored at 0 on the first node.
    pub h_hat: Vec<f64>,
    pub h_xi: Vec<f64>,
    /// Height gain over one ξ-period (periodic frames only).
    pub z_period: Option<f64>,
    /// ξ-period of a periodic frame.
    pub period: Option<f64>,
    /// Crease locations `(ξ0, ξ1)` of a folded frame.
    pub creases: Option<(f64, f64)>,
    /// The last node coincides with the first (folded frames).
    pub closed: bool,
}

impl SurfaceFrame {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// `max h − min h`.
    pub fn height_extent(&self) -> f64 {
        let max = self.h_hat.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let min = self.h_hat.iter().fold(f64::INFINITY, |m, &x| m.min(x));
        max - min
    }

    /// Worst node-wise `|f_ξ² + ĥ_ξ² − f²| / f²`.
    pub fn isometry_defect(&self) -> f64 {
        self.f
            .iter()
            .zip(&self.f_xi)
            .zip(&self.h_xi)
            .map(|((f, fx), hx)| ((fx * fx + hx * hx - f * f) / (f * f)).abs())
            .fold(0.0, f64::max)
    }

    /// Node index of the smallest `ĥ_ξ` (first one on ties): an extremum of
    /// the original height for toroidal profiles.
    pub fn flattest_node(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.h_xi.iter().enumerate() {
            if v < self.h_xi[best] {
                best = i;
            }
        }
        best
    }
}

/// Rebuild `(f, ĥ)` from `state`.
pub fn reconstruct(state: &FlowState) -> Result<SurfaceFrame, EmbedError> {
    let grid = state.grid();
    let h = grid.spacing();
    let phi = phi(state);
    let mut f = Vec::with_capacity(phi.len());
    let mut f_xi = Vec::with_capacity(phi.len());
    let mut h_xi = Vec::with_capacity(phi.len());
    for ((&u, &p), &xi) in state.u().iter().zip(&phi).zip(grid.nodes()) {
        let radius = u.sqrt();
        let radicand = u * (1.0 - p * p);
        if radicand < -RADICAND_TOL * u {
            return Err(EmbedError::NotEmbeddable { xi, ratio: p.abs() });
        }
        f.push(radius);
        f_xi.push(radius * p);
        h_xi.push(radicand.max(0.0).sqrt());
    }
    let mut h_hat = Vec::with_capacity(h_xi.len());
    let mut acc = 0.0;
    h_hat.push(0.0);
    for w in h_xi.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        h_hat.push(acc);
    }
    let z_period = grid.period().map(|_| h_xi.iter().sum::<f64>() * h);
    Ok(SurfaceFrame {
        t: state.t(),
        topology: grid.topology(),
        xi: grid.nodes().to_vec(),
        f,
        f_xi,
        h_hat,
        h_xi,
        z_period,
        period: grid.period(),
        creases: None,
        closed: false,
    })
}

// Periodic extension of a periodic frame's nodes: ĥ(ξ + kQ) = ĥ(ξ) + kZ.
struct Extension<'a> {
    frame: &'a SurfaceFrame,
    q: f64,
    z: f64,
}

impl Extension<'_> {
    fn n(&self) -> i64 {
        self.frame.len() as i64
    }

    fn split(&self, j: i64) -> (usize, f64) {
        let k = j.div_euclid(self.n());
        (j.rem_euclid(self.n()) as usize, k as f64)
    }

    fn xi(&self, j: i64) -> f64 {
        let (i, k) = self.split(j);
        self.frame.xi[i] + k * self.q
    }

    fn h(&self, j: i64) -> f64 {
        let (i, k) = self.split(j);
        self.frame.h_hat[i] + k * self.z
    }

    /// Smallest ξ where the piecewise-linear extension reaches `level`, as
    /// `(ξ, j)` with `ξ ∈ (ξ_{j−1}, ξ_j]`.
    fn first_crossing(&self, level: f64, from: i64) -> (f64, i64) {
        let mut j = from + ((level - self.h(from)) / self.z).floor() as i64 * self.n();
        while self.h(j) >= level {
            j -= self.n();
        }
        while self.h(j) < level {
            j += 1;
        }
        let (h0, h1) = (self.h(j - 1), self.h(j));
        let (x0, x1) = (self.xi(j - 1), self.xi(j));
        let s = if h1 > h0 { (level - h0) / (h1 - h0) } else { 1.0 };
        (x0 + s * (x1 - x0), j)
    }

    fn lerp(&self, values: &[f64], j: i64, xi: f64) -> f64 {
        let (x0, x1) = (self.xi(j - 1), self.xi(j));
        let s = (xi - x0) / (x1 - x0);
        let (a, _) = self.split(j - 1);
        let (b, _) = self.split(j);
        values[a] + s * (values[b] - values[a])
    }
}

/// Fold a periodic frame into the creased compact torus starting at height `z0`.
///
/// The result runs over `[ξ0, ξ0 + Q]` with both crease points inserted as
/// nodes; its height equals `ĥ` up to `ξ1` and `2z0 + Z − ĥ` after, so its
/// height range is `[z0, z0 + Z/2]`.
pub fn crease_fold(frame: &SurfaceFrame, z0: f64) -> Result<SurfaceFrame, EmbedError> {
    let (q, z) = match (frame.period, frame.z_period) {
        (Some(q), Some(z)) if frame.creases.is_none() => (q, z),
        _ => return Err(EmbedError::WrongTopology(frame.topology)),
    };
    if !(z > 0.0) {
        return Err(EmbedError::NoPeriod);
    }
    let ext = Extension { frame, q, z };
    let top = z0 + 0.5 * z;
    let (xi0, j0) = ext.first_crossing(z0, 0);
    let (xi1, j1) = ext.first_crossing(top, j0);
    let end = xi0 + q;

    let mut out = SurfaceFrame {
        t: frame.t,
        topology: frame.topology,
        xi: Vec::new(),
        f: Vec::new(),
        f_xi: Vec::new(),
        h_hat: Vec::new(),
        h_xi: Vec::new(),
        z_period: Some(z),
        period: Some(q),
        creases: Some((xi0, xi1)),
        closed: true,
    };
    let push_point = |out: &mut SurfaceFrame, xi: f64, j: i64, h: f64, sign: f64| {
        out.xi.push(xi);
        out.f.push(ext.lerp(&frame.f, j, xi));
        out.f_xi.push(ext.lerp(&frame.f_xi, j, xi));
        out.h_xi.push(sign * ext.lerp(&frame.h_xi, j, xi));
        out.h_hat.push(h);
    };
    let push_node = |out: &mut SurfaceFrame, j: i64, h: f64, sign: f64| {
        let (i, _) = ext.split(j);
        out.xi.push(ext.xi(j));
        out.f.push(frame.f[i]);
        out.f_xi.push(frame.f_xi[i]);
        out.h_xi.push(sign * frame.h_xi[i]);
        out.h_hat.push(h);
    };

    push_point(&mut out, xi0, j0, z0, 1.0);
    let mut j = j0;
    while ext.xi(j) < xi1 {
        if ext.xi(j) > xi0 {
            push_node(&mut out, j, ext.h(j).clamp(z0, top), 1.0);
        }
        j += 1;
    }
    debug_assert!(j >= j1);
    push_point(&mut out, xi1, j1, top, 1.0);
    while ext.xi(j) < end {
        if ext.xi(j) > xi1 {
            let h = (2.0 * z0 + z - ext.h(j)).clamp(z0, top);
            push_node(&mut out, j, h, -1.0);
        }
        j += 1;
    }
    // Closing point: same position as the start.
    push_point(&mut out, end, j0 + ext.n(), z0, -1.0);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleReport {
    /// `|f_ξ/f − 1|` at the first node.
    pub left_flux_deviation: f64,
    /// `|f_ξ/f + 1|` at the last node.
    pub right_flux_deviation: f64,
    /// `|dz/dx| = |ĥ_ξ / f_ξ|` at the first and last node.
    pub left_slope: f64,
    pub right_slope: f64,
    pub passed: bool,
}

/// Check that the outermost nodes of a sphere-like frame approach smooth poles.
pub fn pole_smoothness_check(frame: &SurfaceFrame) -> Result<PoleReport, EmbedError> {
    if frame.topology != Topology::SphereLike || frame.is_empty() {
        return Err(EmbedError::WrongTopology(frame.topology));
    }
    let n = frame.len() - 1;
    let ratio = |i: usize| frame.f_xi[i] / frame.f[i];
    let slope = |i: usize| (frame.h_xi[i] / frame.f_xi[i]).abs();
    let left_flux_deviation = (ratio(0) - 1.0).abs();
    let right_flux_deviation = (ratio(n) + 1.0).abs();
    let (left_slope, right_slope) = (slope(0), slope(n));
    let passed = left_flux_deviation <= POLE_FLUX_TOL
        && right_flux_deviation <= POLE_FLUX_TOL
        && left_slope <= POLE_SLOPE_TOL
        && right_slope <= POLE_SLOPE_TOL;
    Ok(PoleReport {
        left_flux_deviation,
        right_flux_deviation,
        left_slope,
        right_slope,
        passed,
    })
}

/// Write the frame as a triangulated surface of revolution in Wavefront OBJ.
///
/// Vertices run ξ-major, θ-minor with `θ_j = 2πj/n_theta`. Closed frames
/// drop their repeated last node and wrap around in ξ.
pub fn export_mesh(frame: &SurfaceFrame, n_theta: usize, path: &Path) -> Result<(), EmbedError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_mesh(frame, n_theta, &mut out)?;
    out.flush()?;
    Ok(())
}

/// [`export_mesh`] into any writer.
pub fn write_mesh(frame: &SurfaceFrame, n_theta: usize, out: &mut impl Write) -> Result<(), EmbedError> {
    if n_theta < 3 {
        return Err(EmbedError::BadResolution(n_theta));
    }
    let rows = if frame.closed { frame.len() - 1 } else { frame.len() };
    let trig: Vec<(f64, f64)> = (0..n_theta)
        .map(|j| (2.0 * std::f64::consts::PI * j as f64 / n_theta as f64).sin_cos())
        .collect();
    writeln!(out, "# surface of revolution, t = {}", frame.t)?;
    for r in 0..rows {
        for &(s, c) in &trig {
            writeln!(out, "v {} {} {}", frame.f[r] * c, frame.f[r] * s, frame.h_hat[r])?;
        }
    }
    let bands = if frame.closed { rows } else { rows - 1 };
    let index = |r: usize, j: usize| (r % rows) * n_theta + (j % n_theta) + 1;
    for r in 0..bands {
        for j in 0..n_theta {
            let (a, b, c, d) = (index(r, j), index(r, j + 1), index(r + 1, j + 1), index(r + 1, j));
            writeln!(out, "f {a} {b} {c}")?;
            writeln!(out, "f {a} {c} {d}")?;
        }
    }
    Ok(())
}

/// Write `xi,f,h` rows for the frame.
pub fn write_profile_csv(frame: &SurfaceFrame, path: &Path) -> Result<(), EmbedError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "xi,f,h")?;
    for ((x, f), h) in frame.xi.iter().zip(&frame.f).zip(&frame.h_hat) {
        writeln!(out, "{x},{f},{h}")?;
    }
    out.flush()?;
    Ok(())
}
