//! Adaptive Simpson quadrature with Richardson correction.
//!
//! Each panel compares the one-panel Simpson value against the two
//! half-panel sum. Accepted panels contribute the Richardson-corrected value
//! `S₂ + (S₂ − S₁)/15`, which is exact for quintics. A single panel is
//! already exact for cubics, so those integrands never subdivide.

use crate::error::{LabError, Result};

/// Default recursion depth limit for [`adaptive_quad`].
pub const MAX_DEPTH: usize = 48;

/// Panels used for the initial coarse pass; protects against an integrand
/// that happens to vanish on the first five Simpson nodes.
const INITIAL_PANELS: usize = 8;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    depth: usize,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]` to `|Q − ∫f| ≤ tol·(1 + |Q|)`.
///
/// `a > b` is allowed and flips the sign. Fails with
/// [`LabError::Quadrature`] when a panel needs more than [`MAX_DEPTH`]
/// bisections, and with [`LabError::NonFinite`] if `f` returns NaN or ±∞.
pub fn adaptive_quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    adaptive_quad_depth(f, a, b, tol, MAX_DEPTH)
}

/// [`adaptive_quad`] with an explicit depth limit.
pub fn adaptive_quad_depth<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(LabError::InvalidParameter(format!("quadrature tolerance {tol}")));
    }
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return adaptive_quad_depth(f, b, a, tol, max_depth).map(|q| -q);
    }
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(LabError::NonFinite { context: "quadrature integrand" })
        }
    };

    let width = (b - a) / INITIAL_PANELS as f64;
    let mut stack = Vec::with_capacity(64);
    let mut coarse = 0.0;
    let mut coarse_abs = 0.0;
    let mut fl = eval(a)?;
    for k in 0..INITIAL_PANELS {
        let pa = a + width * k as f64;
        let pb = if k + 1 == INITIAL_PANELS { b } else { a + width * (k + 1) as f64 };
        let fm = eval(0.5 * (pa + pb))?;
        let fr = eval(pb)?;
        let whole = simpson(pa, pb, fl, fm, fr);
        coarse += whole;
        coarse_abs += simpson(pa, pb, fl.abs(), fm.abs(), fr.abs());
        stack.push(Panel { a: pa, b: pb, fa: fl, fm, fb: fr, whole, depth: 0 });
        fl = fr;
    }
    // The scale uses |∫f| rather than ∫|f| so the documented relative bound
    // holds; ∫|f| only feeds the roundoff floor below.
    let abs_tol = tol * (1.0 + coarse.abs());
    let span = b - a;

    let mut total = 0.0;
    let mut compensation = 0.0;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = eval(lm)?;
        let frm = eval(rm)?;
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let halves = left + right;
        let diff = halves - p.whole;
        let local_tol = abs_tol * (p.b - p.a) / span;
        let roundoff =
            64.0 * f64::EPSILON * (left.abs() + right.abs()) + 16.0 * f64::EPSILON * coarse_abs * (p.b - p.a) / span;
        if diff.abs() <= 15.0 * local_tol || diff.abs() <= roundoff || m <= p.a || m >= p.b {
            // Kahan summation keeps many tiny panel contributions exact.
            let y = halves + diff / 15.0 - compensation;
            let t = total + y;
            compensation = (t - total) - y;
            total = t;
            continue;
        }
        if p.depth + 1 > max_depth {
            return Err(LabError::Quadrature { lo: p.a, hi: p.b, depth: max_depth });
        }
        stack.push(Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right, depth: p.depth + 1 });
        stack.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left, depth: p.depth + 1 });
    }
    Ok(total)
}

/// Composite trapezoid rule on `n ≥ 2` equally spaced nodes.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2, "trapezoid rule needs at least two nodes");
    let h = (b - a) / (n - 1) as f64;
    let interior: f64 = (1..n - 1).map(|i| f(a + h * i as f64)).sum();
    h * (0.5 * (f(a) + f(b)) + interior)
}

/// Trapezoid rule on arbitrary (sorted) sample abscissae.
pub fn trapezoid_samples(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`,
/// by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// Composite Gauss–Legendre integration of a vector-valued integrand over
/// `[a, b]`, on panels of width `width` aligned to `b` (the first panel may
/// be partial). Panel edges do not move with `a`, so the result is smooth
/// in `a`.
pub fn composite_gauss<const K: usize, F: Fn(f64) -> [f64; K]>(
    f: F,
    a: f64,
    b: f64,
    width: f64,
    rule: &[(f64, f64)],
) -> [f64; K] {
    let mut acc = [0.0; K];
    if !(b > a) {
        return acc;
    }
    let panels = ((b - a) / width).ceil() as usize;
    for k in 0..panels {
        let hi = b - width * k as f64;
        let lo = (hi - width).max(a);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for &(x, w) in rule {
            let v = f(mid + half * x);
            for i in 0..K {
                acc[i] += w * half * v[i];
            }
        }
    }
    acc
}

/// Quintic Hermite interpolant on a cell of width `dx` at relative position
/// `u ∈ [0, 1]`, from `[y, y', y'']` at both ends.
pub fn quintic_hermite(u: f64, dx: f64, left: [f64; 3], right: [f64; 3]) -> f64 {
    let u2 = u * u;
    let u3 = u2 * u;
    let u4 = u3 * u;
    let u5 = u4 * u;
    let h00 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
    let h01 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
    let h10 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
    let h11 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
    let h20 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
    let h21 = 0.5 * (u3 - 2.0 * u4 + u5);
    left[0] * h00 + right[0] * h01 + dx * (left[1] * h10 + right[1] * h11) + dx * dx * (left[2] * h20 + right[2] * h21)
}
