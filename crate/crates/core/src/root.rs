//! One-dimensional root finding for the clearing loops: Illinois-damped
//! regula falsi inside a bracket, with monotone bracket expansion.

use crate::error::{Result, SmeqError};

/// Finds `x` with `f(x) = 0` inside `[lo, hi]`, where `f(lo)` and `f(hi)` have
/// opposite signs. Function evaluations may fail; failures propagate.
pub fn illinois<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    mut f_hi: f64,
    tol_f: f64,
    tol_x: f64,
    max_iter: usize,
    name: &str,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if f_lo == 0.0 {
        return Ok((lo, 0.0));
    }
    if f_hi == 0.0 {
        return Ok((hi, 0.0));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(SmeqError::NonConvergence {
            loop_name: format!("{name}: root not bracketed"),
            iterations: 0,
            residual: f_lo.abs().min(f_hi.abs()),
            tolerance: tol_f,
        });
    }
    let mut last = f64::INFINITY;
    for it in 0..max_iter {
        let mut x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        // keep strictly interior; fall back to bisection on stagnation
        if !(x > lo && x < hi) || (x - last).abs() < 0.01 * (hi - lo) && (hi - lo) > tol_x {
            x = 0.5 * (lo + hi);
        }
        last = x;
        let fx = f(x)?;
        if fx.abs() < tol_f || (hi - lo) < tol_x {
            return Ok((x, fx));
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
            f_hi *= 0.5; // Illinois damping
        } else {
            hi = x;
            f_hi = fx;
            f_lo *= 0.5;
        }
        let _ = it;
    }
    Err(SmeqError::NonConvergence {
        loop_name: name.to_string(),
        iterations: max_iter,
        residual: last,
        tolerance: tol_f,
    })
}

/// Expands from a starting point until `f` changes sign, then calls `illinois`.
/// `step` is the initial probe distance; `lo_cap`/`hi_cap` clamp the search.
#[allow(clippy::too_many_arguments)]
pub fn bracket_and_solve<F>(
    mut f: F,
    x0: f64,
    step: f64,
    lo_cap: f64,
    hi_cap: f64,
    tol_f: f64,
    tol_x: f64,
    max_iter: usize,
    name: &str,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let x0 = x0.clamp(lo_cap, hi_cap);
    let f0 = f(x0)?;
    if f0.abs() < tol_f {
        return Ok((x0, f0));
    }
    // walk downhill in the sign of f: assume f is increasing — probe the side
    // that should flip the sign, expanding geometrically
    let mut a = x0;
    let mut fa = f0;
    let mut s = if f0 > 0.0 { -step } else { step };
    for _ in 0..60 {
        let b = (a + s).clamp(lo_cap, hi_cap);
        if b == a {
            break;
        }
        let fb = f(b)?;
        if fb.abs() < tol_f {
            return Ok((b, fb));
        }
        if fb.signum() != fa.signum() {
            let (lo, hi, f_lo, f_hi) = if a < b { (a, b, fa, fb) } else { (b, a, fb, fa) };
            return illinois(f, lo, hi, f_lo, f_hi, tol_f, tol_x, max_iter, name);
        }
        a = b;
        fa = fb;
        s *= 1.8;
    }
    Err(SmeqError::NonConvergence {
        loop_name: format!("{name}: failed to bracket"),
        iterations: 60,
        residual: fa,
        tolerance: tol_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_smooth_root() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let (x, _) = illinois(f, 0.0, 2.0, -2.0, 6.0, 1e-12, 1e-14, 200, "cube").unwrap();
        assert!((x - 2f64.powf(1.0 / 3.0)).abs() < 1e-10);
    }

    #[test]
    fn brackets_from_one_side() {
        let f = |x: f64| Ok((x - 0.42).exp() - 1.0);
        let (x, _) =
            bracket_and_solve(f, 0.0, 0.05, -5.0, 5.0, 1e-12, 1e-14, 200, "exp").unwrap();
        assert!((x - 0.42).abs() < 1e-9);
    }

    #[test]
    fn unbracketable_reports() {
        let f = |_x: f64| Ok(1.0);
        assert!(bracket_and_solve(f, 0.0, 0.1, -1.0, 1.0, 1e-12, 1e-14, 50, "one").is_err());
    }
}
