//! The standard bump `exp(−1/(x(1−x)))`, the smoothstep obtained from its
//! normalised primitive, and the cutoff pair built from them.

use std::sync::OnceLock;

use super::quadrature::{adaptive_quad, quintic_hermite};

/// `exp(−1/(x(1−x)))` on `(0, 1)`, zero elsewhere.
pub fn smooth_bump(x: f64) -> f64 {
    bump_derivs(x)[0]
}

/// Bump value and its first three derivatives.
///
/// With `g = x(1−x)` and `φ = −1/g` the bump is `e^φ`, and
/// `φ' = g'/g²`, `φ'' = (g''g − 2g'²)/g³`, `φ''' = (12gg' + 6g'³)/g⁴`.
pub fn bump_derivs(x: f64) -> [f64; 4] {
    if x <= 0.0 || x >= 1.0 {
        return [0.0; 4];
    }
    let g = x * (1.0 - x);
    let b = (-1.0 / g).exp();
    if b == 0.0 {
        return [0.0; 4];
    }
    let g1 = 1.0 - 2.0 * x;
    let g2 = g * g;
    let p1 = g1 / g2;
    let p2 = (-2.0 * g - 2.0 * g1 * g1) / (g2 * g);
    let p3 = (12.0 * g * g1 + 6.0 * g1 * g1 * g1) / (g2 * g2);
    [b, p1 * b, (p2 + p1 * p1) * b, (p3 + 3.0 * p1 * p2 + p1 * p1 * p1) * b]
}

const TABLE_INTERVALS: usize = 2048;

/// Cumulative bump integral on `[0, 1/2]`, sampled on a uniform grid.
struct StepTable {
    values: Vec<f64>,
    half_mass: f64,
}

fn step_table() -> &'static StepTable {
    static TABLE: OnceLock<StepTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let dx = 0.5 / TABLE_INTERVALS as f64;
        let mut values = Vec::with_capacity(TABLE_INTERVALS + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for i in 0..TABLE_INTERVALS {
            let a = dx * i as f64;
            acc += adaptive_quad(smooth_bump, a, a + dx, 1e-16).expect("bump integral on a table cell");
            values.push(acc);
        }
        StepTable { half_mass: acc, values }
    })
}

/// `∫₀¹ exp(−1/(x(1−x))) dx`.
pub fn bump_mass() -> f64 {
    2.0 * step_table().half_mass
}

/// Quintic Hermite interpolation of the cumulative integral on `[0, 1/2]`.
fn half_primitive(x: f64) -> f64 {
    let table = step_table();
    let dx = 0.5 / TABLE_INTERVALS as f64;
    let pos = (x / dx).clamp(0.0, TABLE_INTERVALS as f64);
    let i = (pos.floor() as usize).min(TABLE_INTERVALS - 1);
    let u = pos - i as f64;
    let (x0, x1) = (dx * i as f64, dx * (i + 1) as f64);
    let d0 = bump_derivs(x0);
    let d1 = bump_derivs(x1);
    quintic_hermite(u, dx, [table.values[i], d0[0], d0[1]], [table.values[i + 1], d1[0], d1[1]])
}

/// Normalised primitive of the bump: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else if x <= 0.5 {
        half_primitive(x) / bump_mass()
    } else {
        1.0 - half_primitive(1.0 - x) / bump_mass()
    }
}

/// `smoothstep` with its first two derivatives.
pub fn smoothstep_derivs(x: f64) -> [f64; 3] {
    let d = bump_derivs(x);
    let z = bump_mass();
    [smoothstep(x), d[0] / z, d[1] / z]
}

/// The cutoff pair `χ` (1 on `[0,1]`, 0 on `[2,∞)`) and `ξ` (0 on
/// `[0,1/2]`, 1 on `[3/4,∞)`), both derived from [`smoothstep`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SmoothCutoffs;

impl SmoothCutoffs {
    pub fn chi(&self, s: f64) -> f64 {
        1.0 - smoothstep(s - 1.0)
    }

    /// `[χ, χ', χ'']` at `s`.
    pub fn chi_derivs(&self, s: f64) -> [f64; 3] {
        let [v, d1, d2] = smoothstep_derivs(s - 1.0);
        [1.0 - v, -d1, -d2]
    }

    pub fn xi(&self, s: f64) -> f64 {
        smoothstep(4.0 * s - 2.0)
    }

    /// `[ξ, ξ', ξ'']` at `s`.
    pub fn xi_derivs(&self, s: f64) -> [f64; 3] {
        let [v, d1, d2] = smoothstep_derivs(4.0 * s - 2.0);
        [v, 4.0 * d1, 16.0 * d2]
    }
}
