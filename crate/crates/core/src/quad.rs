//! Numerical integration: adaptive Simpson for the finite-limit angle
//! integrals and fixed Gauss-Legendre rules for per-sample averaging.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute
/// tolerance `tol`.
///
/// Uses the standard Richardson estimate |S2 - S1| / 15 and splits the
/// tolerance between halves. Errors out if the recursion depth limit is
/// reached before the local tolerance is met.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("quadrature tolerance must be > 0, got {tol}")));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let v = step(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)?;
    if !v.is_finite() {
        return Err(Error::NumericOverflow { last_stable_index: 0 });
    }
    Ok(v)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // second condition: the refinement is at the rounding floor of the
    // panel values, so further splitting cannot help
    if delta.abs() <= 15.0 * tol || delta.abs() <= 4.0 * f64::EPSILON * (left.abs() + right.abs()) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureNonConvergence { tol });
    }
    let half_tol = 0.5 * tol;
    Ok(step(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
        + step(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 2);
    let mut rule = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
        if 2 * (i + 1) <= n && x != 0.0 {
            rule.push((-x, w));
        }
    }
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

/// Legendre polynomial P_n and its derivative at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed-rule integral of `f` over `[a, b]` with a precomputed
/// Gauss-Legendre rule from [`gauss_legendre`].
pub fn fixed_gauss<F: Fn(f64) -> f64>(rule: &[(f64, f64)], f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (b - a);
    let d = 0.5 * (a + b);
    rule.iter().map(|&(x, w)| w * f(c * x + d)).sum::<f64>() * c
}
