//! Adaptive Simpson quadrature and bracketed root finding.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("adaptive Simpson did not reach tolerance {tol:e} on [{a}, {b}]")]
    Tolerance { a: f64, b: f64, tol: f64 },
    #[error("integrand is not finite at {at}")]
    NonFinite { at: f64 },
}

const MAX_DEPTH: u32 = 60;

/// Integrate `f` over `[a, b]` with adaptive Simpson and Richardson correction.
///
/// `tol` is an absolute tolerance; it is split evenly between the two halves at
/// every subdivision. `a > b` is allowed and flips the sign.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return adaptive_simpson(f, b, a, tol).map(|v| -v);
    }
    let fa = eval(&f, a)?;
    let fb = eval(&f, b)?;
    let m = 0.5 * (a + b);
    let fm = eval(&f, m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(
        &f,
        Panel {
            a,
            b,
            fa,
            fm,
            fb,
            whole,
        },
        tol,
        MAX_DEPTH,
    )
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson_step<F>(f: &F, p: Panel, tol: f64, depth: u32) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = eval(f, lm)?;
    let frm = eval(f, rm)?;
    // Actual half widths: near rounding level the midpoint is not exact.
    let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    let delta = left + right - p.whole;
    // Rounding in the panel sums, including the effect of rounded abscissae.
    let noise = 16.0 * f64::EPSILON * (left.abs() + right.abs() + p.a.abs().max(p.b.abs()) * (p.fb - p.fa).abs());
    if delta.abs() <= 15.0 * tol || delta.abs() <= noise {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= p.a || m >= p.b {
        return Err(QuadratureError::Tolerance { a: p.a, b: p.b, tol });
    }
    let l = Panel {
        a: p.a,
        b: m,
        fa: p.fa,
        fm: flm,
        fb: p.fm,
        whole: left,
    };
    let r = Panel {
        a: m,
        b: p.b,
        fa: p.fm,
        fm: frm,
        fb: p.fb,
        whole: right,
    };
    Ok(simpson_step(f, l, 0.5 * tol, depth - 1)? + simpson_step(f, r, 0.5 * tol, depth - 1)?)
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64, QuadratureError> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(QuadratureError::NonFinite { at: x })
    }
}

/// Bisection for an increasing function: returns `x` in `[lo, hi]` with
/// `g(x) >= 0` and `g(x - width) < 0`, to bracket width `xtol`.
///
/// The endpoints themselves are never evaluated; the caller guarantees
/// `g(lo) < 0 <= g(hi)` (possibly in the limiting sense at a singular end).
pub fn bisect_increasing<G, E>(mut g: G, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64, E>
where
    G: FnMut(f64) -> Result<f64, E>,
{
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn secant_matches_inverse_gudermannian() {
        let v = 1.2;
        let got = adaptive_simpson(|s: f64| 1.0 / s.cos(), 0.0, v, 1e-12).unwrap();
        let exact = (1.0 / v.cos() + v.tan()).ln();
        assert_abs_diff_eq!(got, exact, epsilon = 1e-11);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let a = adaptive_simpson(f64::sin, 0.0, PI, 1e-12).unwrap();
        let b = adaptive_simpson(f64::sin, PI, 0.0, 1e-12).unwrap();
        assert_abs_diff_eq!(a, 2.0, epsilon = 1e-12);
        assert_eq!(a, -b);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let r = adaptive_simpson(|x: f64| 1.0 / x, 0.0, 1.0, 1e-12);
        assert!(matches!(r, Err(QuadratureError::NonFinite { .. })));
    }

    #[test]
    fn bisection_finds_root() {
        let x = bisect_increasing::<_, ()>(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14).unwrap();
        assert_abs_diff_eq!(x, 2f64.sqrt(), epsilon = 1e-13);
    }
}
