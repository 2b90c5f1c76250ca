//! Generating curves of surfaces of revolution and their time-independent
//! isothermal coordinate.
//!
//! A profile `(f0(v), h0(v))` is mapped to the coordinate
//! `ξ(v) = ∫_q^v sqrt(f0'² + h0'²) / f0 ds`, in which the surface metric is
//! `f0² (dξ² + dθ²)`. Poles (`f0 = 0`) sit at `ξ = ±∞`, so sphere-like
//! curves are sampled on a truncated window `[-L, L]`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::grid::{FluxBoundary, GridError, IsothermalGrid};
use crate::interp::Pchip;
use crate::logdiff::FlowState;
use crate::quadrature::{adaptive_simpson, bisect_increasing, QuadratureError};

/// Absolute tolerance handed to adaptive Simpson for every ξ integral.
pub const XI_QUAD_TOL: f64 = 1e-12;
/// Bracket width of the bisection that inverts ξ(v).
pub const INVERSION_VTOL: f64 = 1e-13;
/// Default half-width of the truncated window for sphere-like curves.
pub const DEFAULT_HALF_WIDTH: f64 = 8.0;
/// Smallest admissible `u0 / max u0` on a truncated grid.
pub const DEFAULT_U_FLOOR: f64 = 1e-14;

const ANCHORS: usize = 64;
const POLE_ANCHORS: i32 = 40;
const VALIDATION_SAMPLES: usize = 2048;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("curve is not immersed at v = {v}: f0'² + h0'² vanishes")]
    NonImmersed { v: f64 },
    #[error("negative radius f0({v}) = {f}")]
    NegativeRadius { v: f64, f: f64 },
    #[error("curve meets the axis at interior parameter v = {v}")]
    InteriorPole { v: f64 },
    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),
    #[error("pole at v = {v} has f0'(p) = 0")]
    DegeneratePole { v: f64 },
    #[error("operation needs a periodic curve, got {0:?}")]
    WrongTopology(Topology),
    #[error("v = {v} is a pole of the curve")]
    PoleEvaluation { v: f64 },
    #[error("v = {v} lies outside the curve domain [{lo}, {hi}]")]
    OutOfDomain { v: f64, lo: f64, hi: f64 },
    #[error("quadrature failure: {0}")]
    Quadrature(#[from] QuadratureError),
    #[error("cannot invert ξ(v) at ξ = {xi}")]
    InversionFailure { xi: f64 },
    #[error("truncation too wide: u0({xi}) = {u:e} is below the floor")]
    TruncationTooWide { xi: f64, u: f64 },
    #[error("grid does not match the curve: {0}")]
    GridMismatch(String),
    #[error("invalid surface spec `{0}`")]
    BadSpec(String),
    #[error("invalid profile table: {0}")]
    BadTable(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    /// Two poles, at the ends of the parameter interval.
    SphereLike,
    /// Closed periodic curve with `f0 > 0`.
    Toroidal,
    /// No poles, not closed.
    Bounded,
}

/// Textual surface description: `sphere`, `torus:a=2,b=1`,
/// `cylinder:r=1,len=2` or `csv:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceSpec {
    Sphere,
    Torus { a: f64, b: f64 },
    Cylinder { radius: f64, length: f64 },
    Csv(PathBuf),
}

impl FromStr for SurfaceSpec {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ProfileError::BadSpec(s.to_string());
        let (kind, args) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), a.trim()),
            None => (s.trim(), ""),
        };
        let param = |name: &str| -> Result<f64, ProfileError> {
            args.split(',')
                .filter_map(|kv| kv.split_once('='))
                .find(|(k, _)| k.trim() == name)
                .and_then(|(_, v)| v.trim().parse::<f64>().ok())
                .ok_or_else(bad)
        };
        match kind {
            "sphere" if args.is_empty() => Ok(SurfaceSpec::Sphere),
            "torus" => Ok(SurfaceSpec::Torus {
                a: param("a")?,
                b: param("b")?,
            }),
            "cylinder" => Ok(SurfaceSpec::Cylinder {
                radius: param("r")?,
                length: param("len")?,
            }),
            "csv" if !args.is_empty() => Ok(SurfaceSpec::Csv(PathBuf::from(args))),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for SurfaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceSpec::Sphere => write!(f, "sphere"),
            SurfaceSpec::Torus { a, b } => write!(f, "torus:a={a},b={b}"),
            SurfaceSpec::Cylinder { radius, length } => write!(f, "cylinder:r={radius},len={length}"),
            SurfaceSpec::Csv(p) => write!(f, "csv:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Sphere,
    Torus { a: f64, b: f64 },
    Cylinder { radius: f64 },
    Table { f0: Pchip, h0: Pchip },
}

impl Shape {
    /// `(f0, f0', h0, h0')` at `v`.
    fn eval(&self, v: f64) -> (f64, f64, f64, f64) {
        match self {
            Shape::Sphere => {
                let (s, c) = v.sin_cos();
                (c, -s, s, c)
            }
            Shape::Torus { a, b } => {
                let (s, c) = v.sin_cos();
                (a + b * c, -b * s, b * s, b * c)
            }
            Shape::Cylinder { radius } => (*radius, 0.0, v, 1.0),
            Shape::Table { f0, h0 } => {
                let (f, df) = f0.eval(v);
                let (h, dh) = h0.eval(v);
                (f, df, h, dh)
            }
        }
    }
}

/// A validated generating curve together with its cached ξ(v) anchor table.
#[derive(Debug, Clone)]
pub struct ProfileCurve {
    shape: Shape,
    domain: (f64, f64),
    topology: Topology,
    poles: Vec<f64>,
    basepoint: f64,
    // Sorted parameter values with their ξ, all strictly inside the domain
    // for sphere-like curves.
    anchor_v: Vec<f64>,
    anchor_xi: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct TableRow {
    v: f64,
    f0: f64,
    h0: f64,
}

/// Build and validate the curve named by `spec`.
pub fn build_profile(spec: &SurfaceSpec) -> Result<ProfileCurve, ProfileError> {
    match spec {
        SurfaceSpec::Sphere => ProfileCurve::from_shape(Shape::Sphere, (-FRAC_PI_2, FRAC_PI_2)),
        SurfaceSpec::Torus { a, b } => {
            if !(a.is_finite() && b.is_finite()) {
                return Err(ProfileError::BadSpec(spec.to_string()));
            }
            ProfileCurve::from_shape(Shape::Torus { a: *a, b: *b }, (0.0, 2.0 * PI))
        }
        SurfaceSpec::Cylinder { radius, length } => {
            if !(length.is_finite() && *length > 0.0 && radius.is_finite()) {
                return Err(ProfileError::BadSpec(spec.to_string()));
            }
            ProfileCurve::from_shape(Shape::Cylinder { radius: *radius }, (0.0, *length))
        }
        SurfaceSpec::Csv(path) => ProfileCurve::from_csv(path),
    }
}

impl ProfileCurve {
    /// Curve from a sample table, interpolated by monotone cubics.
    ///
    /// A table whose first and last rows coincide in `(f0, h0)` is treated as
    /// one period of a closed curve.
    pub fn from_samples(v: &[f64], f0: &[f64], h0: &[f64]) -> Result<Self, ProfileError> {
        if v.len() != f0.len() || v.len() != h0.len() {
            return Err(ProfileError::BadTable("column lengths differ".into()));
        }
        if v.len() < 4 {
            return Err(ProfileError::BadTable("need at least 4 rows".into()));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) || v.iter().chain(f0).chain(h0).any(|x| !x.is_finite()) {
            return Err(ProfileError::BadTable(
                "v must be strictly increasing and all values finite".into(),
            ));
        }
        let n = v.len();
        let scale = f0
            .iter()
            .chain(h0)
            .fold(0.0f64, |m, x| m.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        let closed = (f0[0] - f0[n - 1]).abs() <= 1e-12 * scale && (h0[0] - h0[n - 1]).abs() <= 1e-12 * scale;
        let shape = Shape::Table {
            f0: Pchip::new(v, f0, closed),
            h0: Pchip::new(v, h0, closed),
        };
        Self::from_shape(shape, (v[0], v[n - 1]))
    }

    /// Read a `v,f0,h0` CSV table.
    pub fn from_csv(path: &Path) -> Result<Self, ProfileError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["v", "f0", "h0"] {
            return Err(ProfileError::BadTable(format!(
                "expected header v,f0,h0, got {:?}",
                headers
            )));
        }
        let (mut v, mut f, mut h) = (Vec::new(), Vec::new(), Vec::new());
        for row in reader.deserialize() {
            let row: TableRow = row?;
            v.push(row.v);
            f.push(row.f0);
            h.push(row.h0);
        }
        Self::from_samples(&v, &f, &h)
    }

    fn from_shape(shape: Shape, domain: (f64, f64)) -> Result<Self, ProfileError> {
        let (lo, hi) = domain;
        let (topology, poles) = classify(&shape, domain)?;
        validate_interior(&shape, domain, topology)?;
        let basepoint = match topology {
            Topology::SphereLike => 0.5 * (lo + hi),
            Topology::Toroidal | Topology::Bounded => lo,
        };
        let mut curve = Self {
            shape,
            domain,
            topology,
            poles,
            basepoint,
            anchor_v: Vec::new(),
            anchor_xi: Vec::new(),
        };
        curve.build_anchors()?;
        Ok(curve)
    }

    fn build_anchors(&mut self) -> Result<(), ProfileError> {
        let (lo, hi) = self.domain;
        let q = self.basepoint;
        let step = (hi - lo) / ANCHORS as f64;
        let sphere = self.topology == Topology::SphereLike;
        let inside = |v: f64| {
            if sphere {
                v > lo && v < hi
            } else {
                v >= lo - 1e-12 * step && v <= hi + 1e-12 * step
            }
        };
        let mut k_min = 0i64;
        while inside(q + (k_min - 1) as f64 * step) {
            k_min -= 1;
        }
        let mut k_max = 0i64;
        while inside(q + (k_max + 1) as f64 * step) {
            k_max += 1;
        }
        let mut v: Vec<f64> = (k_min..=k_max).map(|k| q + k as f64 * step).collect();
        if sphere {
            // Geometric refinement towards each pole keeps the quadratures
            // behind ξ(v) short where the integrand blows up.
            let (first, last) = (v[0], v[v.len() - 1]);
            let mut left: Vec<f64> = (1..=POLE_ANCHORS).map(|j| lo + (first - lo) * 0.5f64.powi(j)).collect();
            left.reverse();
            let right = (1..=POLE_ANCHORS).map(|j| hi - (hi - last) * 0.5f64.powi(j));
            v = left.into_iter().chain(v).chain(right).collect();
            v.dedup();
            v.retain(|&x| x > lo && x < hi);
        }
        let density = |s: f64| self.xi_density(s);
        let zero = v.iter().position(|&x| x == q).expect("basepoint is an anchor");
        let mut xi = vec![0.0; v.len()];
        for i in zero + 1..v.len() {
            xi[i] = xi[i - 1] + adaptive_simpson(density, v[i - 1], v[i], XI_QUAD_TOL)?;
        }
        for i in (0..zero).rev() {
            xi[i] = xi[i + 1] - adaptive_simpson(density, v[i], v[i + 1], XI_QUAD_TOL)?;
        }
        self.anchor_v = v;
        self.anchor_xi = xi;
        Ok(())
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    /// Parameter value mapped to `ξ = 0`.
    pub fn basepoint(&self) -> f64 {
        self.basepoint
    }

    /// Common period in `v` of a toroidal curve.
    pub fn period(&self) -> Option<f64> {
        match self.topology {
            Topology::Toroidal => Some(self.domain.1 - self.domain.0),
            _ => None,
        }
    }

    /// Toroidal curves, and bounded curves whose radius repeats over the
    /// parameter cell (a cylinder cell, say), can be flowed on a periodic ξ grid.
    pub fn is_periodic_cell(&self) -> bool {
        match self.topology {
            Topology::Toroidal => true,
            Topology::SphereLike => false,
            Topology::Bounded => {
                let (lo, hi) = self.domain;
                let (fa, dfa, _, dha) = self.shape.eval(lo);
                let (fb, dfb, _, dhb) = self.shape.eval(hi);
                let tol = 1e-12 * fa.abs().max(1.0);
                (fa - fb).abs() <= tol && (dfa - dfb).abs() <= tol && (dha - dhb).abs() <= tol
            }
        }
    }

    pub fn f0(&self, v: f64) -> f64 {
        self.shape.eval(self.reduce(v)).0
    }

    pub fn h0(&self, v: f64) -> f64 {
        self.shape.eval(self.reduce(v)).2
    }

    /// `(f0, f0', h0, h0')` at `v`.
    pub fn derivatives(&self, v: f64) -> (f64, f64, f64, f64) {
        self.shape.eval(self.reduce(v))
    }

    /// Parametric speed `sqrt(f0'² + h0'²)`.
    pub fn speed(&self, v: f64) -> f64 {
        let (_, df, _, dh) = self.derivatives(v);
        df.hypot(dh)
    }

    /// `dξ/dv = speed / f0`.
    pub fn xi_density(&self, v: f64) -> f64 {
        let (f, df, _, dh) = self.shape.eval(v);
        df.hypot(dh) / f
    }

    fn reduce(&self, v: f64) -> f64 {
        match self.topology {
            Topology::Toroidal => {
                let (lo, hi) = self.domain;
                let p = hi - lo;
                if v < lo || v > hi {
                    lo + (v - lo).rem_euclid(p)
                } else {
                    v
                }
            }
            _ => v,
        }
    }

    /// Nearest anchor at or below `v` (the first one if `v` lies below all).
    fn anchor_index(&self, v: f64) -> usize {
        self.anchor_v.partition_point(|&a| a <= v).saturating_sub(1)
    }

    fn anchor(&self, k: usize) -> (f64, f64) {
        (self.anchor_v[k], self.anchor_xi[k])
    }

    /// `ξ(v)` by adaptive quadrature from the nearest anchor.
    ///
    /// Toroidal curves accept any real `v` and satisfy `ξ(v + P) = ξ(v) + Q`.
    pub fn xi_of_v(&self, v: f64) -> Result<f64, ProfileError> {
        let (lo, hi) = self.domain;
        if self.poles.contains(&v) {
            return Err(ProfileError::PoleEvaluation { v });
        }
        if self.topology == Topology::Toroidal && (v < lo || v > hi) {
            let p = hi - lo;
            let turns = ((v - lo) / p).floor();
            let q = self.period_q_unchecked()?;
            return Ok(self.xi_of_v(v - turns * p)? + turns * q);
        }
        if !(v >= lo && v <= hi) {
            return Err(ProfileError::OutOfDomain { v, lo, hi });
        }
        let (a, xi_a) = self.anchor(self.anchor_index(v));
        let density = |s: f64| self.xi_density(s);
        Ok(xi_a + adaptive_simpson(density, a, v, XI_QUAD_TOL)?)
    }

    fn period_q_unchecked(&self) -> Result<f64, ProfileError> {
        let (lo, hi) = self.domain;
        let (a, xi_a) = self.anchor(self.anchor_index(hi));
        let tail = adaptive_simpson(|s| self.xi_density(s), a, hi, XI_QUAD_TOL)?;
        let (b, xi_b) = self.anchor(self.anchor_index(lo));
        let head = adaptive_simpson(|s| self.xi_density(s), b, lo, XI_QUAD_TOL)?;
        Ok((xi_a + tail) - (xi_b + head))
    }

    /// Period of the curve in ξ: `Q = ∫_0^P sqrt(f0'² + h0'²)/f0 dv`.
    pub fn period_q(&self) -> Result<f64, ProfileError> {
        if !self.is_periodic_cell() {
            return Err(ProfileError::WrongTopology(self.topology));
        }
        self.period_q_unchecked()
    }

    /// Range of ξ over the parameter domain (infinite at poles).
    pub fn xi_range(&self) -> Result<(f64, f64), ProfileError> {
        let (lo, hi) = self.domain;
        match self.topology {
            Topology::SphereLike => Ok((f64::NEG_INFINITY, f64::INFINITY)),
            _ => Ok((self.xi_of_v(lo)?, self.xi_of_v(hi)?)),
        }
    }

    /// Invert ξ(v): bisection to [`INVERSION_VTOL`] inside the anchor cell,
    /// then one Newton polish with the known derivative `dξ/dv`.
    pub fn v_of_xi(&self, xi: f64) -> Result<f64, ProfileError> {
        let fail = || ProfileError::InversionFailure { xi };
        if !xi.is_finite() {
            return Err(fail());
        }
        let (lo, hi) = self.domain;
        if self.topology == Topology::Toroidal {
            let q = self.period_q_unchecked()?;
            let (xlo, _) = (self.xi_of_v(lo)?, ());
            let turns = ((xi - xlo) / q).floor();
            if turns != 0.0 {
                return Ok(self.v_of_xi(xi - turns * q)? + turns * (hi - lo));
            }
        }
        // Bracket from the anchor table; the outermost cells of a sphere-like
        // curve run to the poles, where ξ is infinite.
        let n = self.anchor_xi.len();
        let pos = self.anchor_xi.partition_point(|&a| a <= xi);
        let (vl, vr) = if pos == 0 {
            let v0 = self.anchor(0).0;
            match self.topology {
                Topology::SphereLike => (lo, v0),
                _ if xi >= self.xi_of_v(lo)? => (lo, v0),
                _ => return Err(fail()),
            }
        } else if pos == n {
            let vn = self.anchor(n - 1).0;
            match self.topology {
                Topology::SphereLike => (vn, hi),
                _ if xi <= self.xi_of_v(hi)? => (vn, hi),
                _ => return Err(fail()),
            }
        } else {
            (self.anchor(pos - 1).0, self.anchor(pos).0)
        };
        let v = bisect_increasing(|s| self.xi_of_v(s).map(|x| x - xi), vl, vr, INVERSION_VTOL)?;
        let residual = self.xi_of_v(v)? - xi;
        let polished = v - residual / self.xi_density(v);
        let v = if polished > vl && polished < vr { polished } else { v };
        if !v.is_finite() || self.poles.contains(&v) {
            return Err(fail());
        }
        Ok(v)
    }

    /// Sample `u0(ξ_i) = f0(v(ξ_i))²` on `grid`.
    pub fn sample_u0(&self, grid: &Arc<IsothermalGrid>) -> Result<FlowState, ProfileError> {
        self.sample_u0_with_floor(grid, DEFAULT_U_FLOOR)
    }

    /// As [`sample_u0`](Self::sample_u0) with an explicit floor on `u0 / max u0`.
    pub fn sample_u0_with_floor(&self, grid: &Arc<IsothermalGrid>, floor: f64) -> Result<FlowState, ProfileError> {
        match (self.topology, grid.is_periodic()) {
            (Topology::SphereLike, true) => {
                return Err(ProfileError::GridMismatch(
                    "sphere-like curves need flux boundaries".into(),
                ))
            }
            (Topology::Toroidal, false) => {
                return Err(ProfileError::GridMismatch(
                    "toroidal curves need a periodic grid".into(),
                ))
            }
            _ => {}
        }
        if grid.basepoint() != self.basepoint {
            return Err(ProfileError::GridMismatch(
                "grid basepoint differs from the curve".into(),
            ));
        }
        let u = grid
            .nodes()
            .iter()
            .map(|&xi| self.v_of_xi(xi).map(|v| self.f0(v).powi(2)))
            .collect::<Result<Vec<_>, _>>()?;
        let max = u.iter().fold(0.0f64, |m, &x| m.max(x));
        if let Some((i, &low)) = u.iter().enumerate().find(|(_, &x)| !(x > floor * max)) {
            return Err(ProfileError::TruncationTooWide {
                xi: grid.nodes()[i],
                u: low,
            });
        }
        Ok(FlowState::initial(Arc::clone(grid), u))
    }

    /// The default grid for this curve.
    ///
    /// Sphere-like: `[-L, L]` with smooth-pole flux. Periodic cells: one ξ
    /// period. Other bounded curves: their full ξ range, with the boundary
    /// flux frozen at its initial value.
    pub fn default_grid(&self, n: usize, half_width: f64) -> Result<IsothermalGrid, ProfileError> {
        let q = self.basepoint;
        if self.is_periodic_cell() {
            return Ok(IsothermalGrid::periodic(self.period_q()?, n, q, self.topology)?);
        }
        match self.topology {
            Topology::SphereLike => Ok(IsothermalGrid::truncated(
                half_width,
                n,
                FluxBoundary::SMOOTH_POLES,
                q,
                self.topology,
            )?),
            _ => {
                let (lo, hi) = self.domain;
                let (xl, xr) = self.xi_range()?;
                // u_ξ/u = 2 f0' / speed.
                let flux = |v: f64| {
                    let (_, df, _, dh) = self.derivatives(v);
                    2.0 * df / df.hypot(dh)
                };
                let bc = FluxBoundary::new(flux(lo), -flux(hi));
                Ok(IsothermalGrid::interval(xl, xr, n, bc, q, self.topology)?)
            }
        }
    }
}

fn classify(shape: &Shape, (lo, hi): (f64, f64)) -> Result<(Topology, Vec<f64>), ProfileError> {
    let (fl, dfl, hl, _) = shape.eval(lo);
    let (fr, dfr, hr, _) = shape.eval(hi);
    let scale = fl.abs().max(fr.abs()).max(hl.abs()).max(hr.abs()).max(1.0);
    let at_axis = |f: f64| f.abs() <= 1e-12 * scale;
    match (at_axis(fl), at_axis(fr)) {
        (true, true) => {
            for (p, d) in [(lo, dfl), (hi, dfr)] {
                if d.abs() <= 1e-12 * scale {
                    return Err(ProfileError::DegeneratePole { v: p });
                }
            }
            Ok((Topology::SphereLike, vec![lo, hi]))
        }
        (true, false) | (false, true) => Err(ProfileError::UnsupportedTopology(
            "surfaces with exactly one pole are not supported".into(),
        )),
        (false, false) => {
            let closed = (fl - fr).abs() <= 1e-12 * scale && (hl - hr).abs() <= 1e-12 * scale;
            if closed {
                Ok((Topology::Toroidal, Vec::new()))
            } else {
                Ok((Topology::Bounded, Vec::new()))
            }
        }
    }
}

fn validate_interior(shape: &Shape, (lo, hi): (f64, f64), topology: Topology) -> Result<(), ProfileError> {
    let mut samples: Vec<f64> = (0..=VALIDATION_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / VALIDATION_SAMPLES as f64)
        .collect();
    if let Shape::Table { f0, .. } = shape {
        samples.extend_from_slice(f0.nodes());
    }
    for v in samples {
        let (f, df, _, dh) = shape.eval(v);
        let endpoint = v == lo || v == hi;
        if f < 0.0 && !(endpoint && topology == Topology::SphereLike) {
            return Err(ProfileError::NegativeRadius { v, f });
        }
        if f == 0.0 && !(endpoint && topology == Topology::SphereLike) {
            return Err(ProfileError::InteriorPole { v });
        }
        if !(df * df + dh * dh > 0.0) {
            return Err(ProfileError::NonImmersed { v });
        }
    }
    // Sign changes between samples catch poles that fall between them.
    if let Shape::Table { f0, .. } = shape {
        let vals = f0.values();
        for (i, w) in vals.windows(2).enumerate() {
            let inner = !(topology == Topology::SphereLike && (i == 0 || i + 2 == vals.len()));
            if inner && w[0] * w[1] <= 0.0 {
                return Err(ProfileError::InteriorPole { v: f0.nodes()[i + 1] });
            }
        }
    }
    Ok(())
}
