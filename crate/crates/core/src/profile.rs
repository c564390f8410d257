//! The quadratic form `G(θ)`, the lifespan constant `τ*`, and the
//! asymptotic profile along outgoing rays.
//!
//! The profile solves the Riccati equation `2 ∂_τ P = −G(θ) P²` with
//! `P(s, θ, 0) = F₊(s, θ)`, so
//!
//! ```text
//! P(s, θ, τ) = F₊(s, θ) / (1 + ½ G(θ) F₊(s, θ) τ),
//! p(s, θ, τ) = −∫ₛ^∞ P(s', θ, τ) ds',
//! ```
//!
//! and `τ* = 1 / sup{−½ G(θ) F₊(s, θ)}` is the first slow time at which a
//! denominator vanishes.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{LabError, Result};
use crate::radiation::{Direction, RadialProfile, RadiationField};
use crate::weights::quadrature::{composite_gauss, gauss_legendre};
use crate::weights::Grid1D;

/// Sups at or below this level are treated as zero (`τ* = +∞`).
pub const SUP_FLOOR: f64 = 1e-14;

/// Coarse scan density for `τ*` searches, points per unit of `s`.
const SCAN_DENSITY: f64 = 401.0;

/// Panel width and order of the Gauss–Legendre rule behind `p` and its
/// `τ`-derivatives.
const PANEL_WIDTH: f64 = 1.0 / 32.0;
const GAUSS_NODES: usize = 10;

fn rule() -> &'static [(f64, f64)] {
    static RULE: std::sync::OnceLock<Vec<(f64, f64)>> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GAUSS_NODES))
}

/// Symmetric coefficients `g^{a,b}` of `F(∂u) = Σ g^{a,b} ∂_a u ∂_b u`,
/// index 0 being time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlinCoeffs {
    g: [[f64; 4]; 4],
}

impl NonlinCoeffs {
    /// Symmetrises `g`; the quadratic form is unchanged.
    pub fn new(g: [[f64; 4]; 4]) -> Result<Self> {
        let mut sym = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                if !g[a][b].is_finite() {
                    return Err(LabError::NonFinite { context: "nonlinearity coefficients" });
                }
                sym[a][b] = 0.5 * (g[a][b] + g[b][a]);
            }
        }
        Ok(Self { g: sym })
    }

    /// `F = c (∂ₜu)²`.
    pub fn time_derivative_squared(c: f64) -> Self {
        let mut g = [[0.0; 4]; 4];
        g[0][0] = c;
        Self { g }
    }

    /// `F = (∂ₜu)² − |∇u|²`, which satisfies the null condition.
    pub fn null_form() -> Self {
        let mut g = [[0.0; 4]; 4];
        for (j, row) in g.iter_mut().enumerate() {
            row[j] = if j == 0 { 1.0 } else { -1.0 };
        }
        Self { g }
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.g
    }

    /// `G(θ)` for a pre-validated direction.
    pub fn eval(&self, theta: &Direction) -> f64 {
        let t = theta.components();
        let th = [-1.0, t[0], t[1], t[2]];
        let mut acc = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                acc += self.g[a][b] * th[a] * th[b];
            }
        }
        acc
    }

    /// `true` when `G` does not depend on `θ`, i.e. only `g^{0,0}` and an
    /// isotropic spatial block `g^{i,i} = const` are present.
    pub fn is_isotropic(&self) -> bool {
        let g = &self.g;
        (1..4).all(|j| g[0][j] == 0.0)
            && (1..4).all(|i| (1..4).all(|j| i == j || g[i][j] == 0.0))
            && g[1][1] == g[2][2]
            && g[2][2] == g[3][3]
    }

    /// `(min G, max G)` over the sphere.
    pub fn extrema(&self) -> (f64, f64) {
        if self.is_isotropic() {
            let v = self.eval(&Direction::E3);
            return (v, v);
        }
        let dirs = Direction::fibonacci_sphere(2048);
        let best_by = |sign: f64| {
            let start = dirs
                .iter()
                .copied()
                .max_by(|a, b| (sign * self.eval(a)).total_cmp(&(sign * self.eval(b))))
                .expect("non-empty direction set");
            self.ascend(start, sign)
        };
        (best_by(-1.0), best_by(1.0))
    }

    /// Projected gradient ascent of `sign · G` on the sphere.
    fn ascend(&self, start: Direction, sign: f64) -> f64 {
        let g = &self.g;
        let scale: f64 = g.iter().flatten().map(|v| v.abs()).sum::<f64>().max(1e-300);
        let step = 0.25 / scale;
        let mut th = start.components();
        for _ in 0..4000 {
            // ∇_θ G = 2 Σ_j g^{ij} θ_j − 2 g^{0i}
            let mut grad = [0.0; 3];
            for i in 0..3 {
                grad[i] = -2.0 * g[0][i + 1];
                for j in 0..3 {
                    grad[i] += 2.0 * g[i + 1][j + 1] * th[j];
                }
            }
            let next = [th[0] + sign * step * grad[0], th[1] + sign * step * grad[1], th[2] + sign * step * grad[2]];
            let Ok(d) = Direction::normalized(next) else { break };
            let moved: f64 = (0..3).map(|k| (d.components()[k] - th[k]).abs()).sum();
            th = d.components();
            if moved < 1e-15 {
                break;
            }
        }
        let mut best = Direction::normalized(th).unwrap_or(start);
        // Flat extrema stall the gradient step; polish by pattern search.
        let mut radius = 1e-2;
        while radius > 1e-12 {
            let (e1, e2) = best.orthonormal_frame();
            let t = best.components();
            let mut improved = false;
            for k in 0..8 {
                let (sa, ca) = (std::f64::consts::TAU * k as f64 / 8.0).sin_cos();
                let cand = [
                    t[0] + radius * (ca * e1[0] + sa * e2[0]),
                    t[1] + radius * (ca * e1[1] + sa * e2[1]),
                    t[2] + radius * (ca * e1[2] + sa * e2[2]),
                ];
                if let Ok(d) = Direction::normalized(cand) {
                    if sign * self.eval(&d) > sign * self.eval(&best) {
                        best = d;
                        improved = true;
                    }
                }
            }
            if !improved {
                radius *= 0.5;
            }
        }
        self.eval(&best)
    }
}

/// `G(θ) = Σ g^{a,b} θ_a θ_b` with `θ₀ = −1`; rejects non-unit `θ`.
pub fn g_of_theta(coeffs: &NonlinCoeffs, theta: [f64; 3]) -> Result<f64> {
    Ok(coeffs.eval(&Direction::new(theta)?))
}

/// The lifespan constant, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauStar {
    Finite(f64),
    /// `sup{−½ G F₊} ≤ 0`: no finite-time profile blow-up.
    Infinite,
}

impl TauStar {
    fn from_sup(sup: f64) -> Self {
        if sup > SUP_FLOOR {
            Self::Finite(1.0 / sup)
        } else {
            Self::Infinite
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(*v),
            Self::Infinite => None,
        }
    }

    /// `f64::INFINITY` for the infinite case.
    pub fn value(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// Relative difference `|a − b| / max(|a|, |b|)`; 0 if both infinite.
    pub fn relative_difference(&self, other: &TauStar) -> f64 {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => (a - b).abs() / a.abs().max(b.abs()),
            (Self::Infinite, Self::Infinite) => 0.0,
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for TauStar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v:.12}"),
            Self::Infinite => f.write_str("infinite (global existence predicted)"),
        }
    }
}

impl Serialize for TauStar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => serializer.serialize_f64(*v),
            Self::Infinite => serializer.serialize_str("infinite"),
        }
    }
}

/// Maximises `f` on `[lo, hi]` by golden-section search; returns `(x, f(x))`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > xtol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    [(x, fx), (x1, f1), (x2, f2)].into_iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("three candidates")
}

/// Coarse scan of `f` on `[lo, hi]` at [`SCAN_DENSITY`] points per unit,
/// then golden-section refinement around the best sample.
fn scan_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    let n = (((hi - lo) * SCAN_DENSITY).ceil() as usize).max(2);
    let grid = Grid1D::new(lo, hi, n + 1).expect("scan interval is non-degenerate");
    let (best_i, _) = grid.points().map(&f).enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty scan");
    let a = grid.point(best_i.saturating_sub(1));
    let b = grid.point((best_i + 1).min(n));
    golden_max(&f, a, b, 1e-10)
}

/// Location and value of `sup{−½ G(θ) F₊(s, θ)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupLocation {
    pub s: f64,
    pub theta: Direction,
    pub value: f64,
}

/// Locates `sup{−½ G(θ) F₊(s, θ)}` over `s` in the field's support and
/// `θ ∈ S²`.
pub fn locate_sup(fplus: &dyn RadiationField, coeffs: &NonlinCoeffs) -> SupLocation {
    let lo = fplus.support_lower();
    let hi = fplus.support_radius();
    if !(hi > lo) {
        return SupLocation { s: hi, theta: Direction::E3, value: 0.0 };
    }
    if fplus.is_radial() {
        let (gmin, gmax) = coeffs.extrema();
        let probe = Direction::E3;
        // For F₊ > 0 the smallest G wins, for F₊ < 0 the largest.
        let objective = |s: f64| {
            let f = fplus.eval(s, &probe);
            (-0.5 * gmin * f).max(-0.5 * gmax * f)
        };
        let (s, value) = scan_max(objective, lo, hi);
        return SupLocation { s, theta: probe, value };
    }

    let dirs = Direction::fibonacci_sphere(128);
    let n = (((hi - lo) * SCAN_DENSITY).ceil() as usize).max(2);
    let grid = Grid1D::new(lo, hi, n + 1).expect("scan interval is non-degenerate");
    let mut best = SupLocation { s: lo, theta: dirs[0], value: f64::NEG_INFINITY };
    for d in &dirs {
        let g = coeffs.eval(d);
        for s in grid.points() {
            let v = -0.5 * g * fplus.eval(s, d);
            if v > best.value {
                best = SupLocation { s, theta: *d, value: v };
            }
        }
    }
    // Alternate golden-section in s with a shrinking pattern search in θ.
    let ds = grid.step();
    let mut radius = 0.3;
    for _ in 0..40 {
        let theta = best.theta;
        let g = coeffs.eval(&theta);
        let (s, v) = golden_max(|s| -0.5 * g * fplus.eval(s, &theta), best.s - ds, best.s + ds, 1e-10);
        if v >= best.value {
            best.s = s;
            best.value = v;
        }
        let (e1, e2) = theta.orthonormal_frame();
        let t = theta.components();
        let mut improved = false;
        for k in 0..8 {
            let ang = std::f64::consts::TAU * k as f64 / 8.0;
            let (sa, ca) = ang.sin_cos();
            let cand = [
                t[0] + radius * (ca * e1[0] + sa * e2[0]),
                t[1] + radius * (ca * e1[1] + sa * e2[1]),
                t[2] + radius * (ca * e1[2] + sa * e2[2]),
            ];
            if let Ok(d) = Direction::normalized(cand) {
                let v = -0.5 * coeffs.eval(&d) * fplus.eval(best.s, &d);
                if v > best.value {
                    best.theta = d;
                    best.value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            radius *= 0.5;
        }
    }
    best
}

/// `τ*` from the general definition `1 / sup{−½ G(θ) F₊(s, θ)}`.
pub fn tau_star_general(fplus: &dyn RadiationField, coeffs: &NonlinCoeffs) -> TauStar {
    TauStar::from_sup(locate_sup(fplus, coeffs).value)
}

/// `τ*` for `F = c (∂ₜu)²`, `f₀ = 0` and radial `f₁`:
/// `(sup_{s ≥ 1} c s f₁*(s) / 4)⁻¹`. Only the product `c f₁` matters, so a
/// negative `c` is handled by the `u ↦ −u` symmetry.
pub fn tau_star_radial(c: f64, f1: &RadialProfile) -> TauStar {
    match maximize_radial_weight(c, f1) {
        Some((_, v)) => TauStar::from_sup(v / 4.0),
        None => TauStar::Infinite,
    }
}

/// Maximiser of `c s f₁*(s)` over the support of `f₁`.
pub fn maximize_radial_weight(c: f64, f1: &RadialProfile) -> Option<(f64, f64)> {
    let (a, b) = f1.support()?;
    if c == 0.0 {
        return None;
    }
    Some(scan_max(|s| c * s * f1.eval(s), a, b))
}

/// Profile evaluators bound to a radiation field and nonlinearity.
#[derive(Clone)]
pub struct ProfileContext {
    fplus: Arc<dyn RadiationField>,
    coeffs: NonlinCoeffs,
    tau_star: TauStar,
    s_grid: Grid1D,
}

impl fmt::Debug for ProfileContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProfileContext")
            .field("coeffs", &self.coeffs)
            .field("tau_star", &self.tau_star)
            .field("s_grid", &self.s_grid)
            .finish_non_exhaustive()
    }
}

impl ProfileContext {
    /// Computes `τ*` by [`tau_star_general`].
    pub fn new(fplus: Arc<dyn RadiationField>, coeffs: NonlinCoeffs) -> Self {
        let tau_star = tau_star_general(fplus.as_ref(), &coeffs);
        let lo = fplus.support_lower();
        let hi = fplus.support_radius().max(lo + 1.0);
        let n = (((hi - lo) * SCAN_DENSITY).ceil() as usize).max(2) + 1;
        let s_grid = Grid1D::new(lo, hi, n).expect("support interval is non-degenerate");
        Self { fplus, coeffs, tau_star, s_grid }
    }

    pub fn tau_star(&self) -> TauStar {
        self.tau_star
    }

    pub fn coeffs(&self) -> &NonlinCoeffs {
        &self.coeffs
    }

    pub fn field(&self) -> &dyn RadiationField {
        self.fplus.as_ref()
    }

    pub fn s_grid(&self) -> &Grid1D {
        &self.s_grid
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        let ts = self.tau_star.value();
        if !(tau >= 0.0) || tau >= ts {
            return Err(LabError::ProfileDomain { tau, tau_star: ts });
        }
        Ok(())
    }

    /// `P(s, θ, τ)`, the Riccati profile.
    pub fn amplitude(&self, s: f64, theta: &Direction, tau: f64) -> Result<f64> {
        self.check_tau(tau)?;
        Ok(self.amplitude_unchecked(s, theta, tau, self.coeffs.eval(theta)))
    }

    fn amplitude_unchecked(&self, s: f64, theta: &Direction, tau: f64, g: f64) -> f64 {
        let f = self.fplus.eval(s, theta);
        if f == 0.0 {
            return 0.0;
        }
        f / (1.0 + 0.5 * g * f * tau)
    }

    /// `[∫ₛ^R P, ∫ₛ^R P², ∫ₛ^R P³]`.
    fn moments(&self, s: f64, theta: &Direction, tau: f64, g: f64) -> Result<[f64; 3]> {
        let hi = self.fplus.support_radius();
        let lo = s.max(self.fplus.support_lower());
        let m = composite_gauss(
            |x| {
                let p = self.amplitude_unchecked(x, theta, tau, g);
                [p, p * p, p * p * p]
            },
            lo,
            hi,
            PANEL_WIDTH,
            rule(),
        );
        if m.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite { context: "profile moments" });
        }
        Ok(m)
    }

    /// `p(s, θ, τ) = −∫ₛ^R P(s', θ, τ) ds'`, zero for `s ≥ R`.
    pub fn primitive(&self, s: f64, theta: &Direction, tau: f64) -> Result<f64> {
        Ok(self.jet(s, theta, tau)?.p)
    }

    /// `∂_τ p = ½ G(θ) ∫ₛ^R P² ds'`.
    pub fn primitive_dtau(&self, s: f64, theta: &Direction, tau: f64) -> Result<f64> {
        Ok(self.jet(s, theta, tau)?.p_tau)
    }
}

/// `p` with its `s`- and `τ`-derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileJet {
    /// `p`
    pub p: f64,
    /// `∂ₛp = P`
    pub p_s: f64,
    /// `∂_τ p = ½ G ∫ₛ^R P²`
    pub p_tau: f64,
    /// `∂ₛ∂_τ p = ∂_τ P = −½ G P²`
    pub p_s_tau: f64,
    /// `∂_τ² p = −½ G² ∫ₛ^R P³`
    pub p_tau_tau: f64,
}

impl ProfileContext {
    /// All derivatives of `p` needed to apply the wave operator to
    /// `p(r − t, ε log t)` exactly.
    pub fn jet(&self, s: f64, theta: &Direction, tau: f64) -> Result<ProfileJet> {
        self.check_tau(tau)?;
        let g = self.coeffs.eval(theta);
        let big_p = self.amplitude_unchecked(s, theta, tau, g);
        let [i1, i2, i3] = self.moments(s, theta, tau, g)?;
        let (p, p_tau, p_tau_tau) = (-i1, 0.5 * g * i2, -0.5 * g * g * i3);
        Ok(ProfileJet { p, p_s: big_p, p_tau, p_s_tau: -0.5 * g * big_p * big_p, p_tau_tau })
    }
}

/// Convenience alias matching the operation list: the Riccati profile.
pub fn profile_amplitude(ctx: &ProfileContext, s: f64, theta: &Direction, tau: f64) -> Result<f64> {
    ctx.amplitude(s, theta, tau)
}

/// Convenience alias matching the operation list: the primitive profile.
pub fn profile_primitive(ctx: &ProfileContext, s: f64, theta: &Direction, tau: f64) -> Result<f64> {
    ctx.primitive(s, theta, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiation::{radiation_field_exterior_radial, FnField};

    fn canonical_context(c: f64) -> (ProfileContext, RadialProfile) {
        let f1 = RadialProfile::bump(2.0, 4.0, 1.0).unwrap();
        let field = radiation_field_exterior_radial(&RadialProfile::zero(), &f1);
        (ProfileContext::new(Arc::new(field), NonlinCoeffs::time_derivative_squared(c)), f1)
    }

    #[test]
    fn g_examples() {
        let c = NonlinCoeffs::time_derivative_squared(2.5);
        for d in Direction::fibonacci_sphere(10) {
            assert_eq!(g_of_theta(&c, d.components()).unwrap(), 2.5);
        }
        let null = NonlinCoeffs::null_form();
        for d in Direction::fibonacci_sphere(10) {
            assert!(g_of_theta(&null, d.components()).unwrap().abs() < 1e-15);
        }
        let mut g = [[0.0; 4]; 4];
        g[0][1] = 1.0;
        let mixed = NonlinCoeffs::new(g).unwrap();
        assert!((g_of_theta(&mixed, [1.0, 0.0, 0.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((g_of_theta(&mixed, [-1.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(g_of_theta(&mixed, [1.0, 1.0, 0.0]), Err(LabError::NonUnitDirection { .. })));
    }

    #[test]
    fn extrema_of_anisotropic_form() {
        let mut g = [[0.0; 4]; 4];
        g[0][1] = 1.0;
        g[3][3] = 0.5;
        let c = NonlinCoeffs::new(g).unwrap();
        // G = −θ₁ + θ₃²/2 : max at θ = (−1,0,0)? compare with a dense scan
        let dense = Direction::fibonacci_sphere(200_000);
        let (lo, hi) = dense.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            let v = c.eval(d);
            (lo.min(v), hi.max(v))
        });
        let (gmin, gmax) = c.extrema();
        assert!(gmin <= lo + 1e-9 && (gmin - lo).abs() < 1e-4);
        assert!(gmax >= hi - 1e-9 && (gmax - hi).abs() < 1e-4);
    }

    #[test]
    fn tau_star_degenerate_cases() {
        let zero = radiation_field_exterior_radial(&RadialProfile::zero(), &RadialProfile::zero());
        let c = NonlinCoeffs::time_derivative_squared(1.0);
        assert_eq!(tau_star_general(&zero, &c), TauStar::Infinite);
        let (ctx, f1) = canonical_context(1.0);
        assert_eq!(tau_star_general(ctx.field(), &NonlinCoeffs::null_form()), TauStar::Infinite);
        assert_eq!(tau_star_radial(1.0, &RadialProfile::zero()), TauStar::Infinite);
        assert_eq!(tau_star_radial(0.0, &f1), TauStar::Infinite);
    }

    #[test]
    fn tau_star_formula_inversion() {
        // c = 4 makes τ* = 1 / max s f(s)
        let f1 = RadialProfile::bump(2.0, 4.0, 1.0).unwrap();
        let m = maximize_radial_weight(1.0, &f1).unwrap().1;
        let tau = tau_star_radial(4.0, &f1).finite().unwrap();
        assert!((tau - 1.0 / m).abs() < 1e-12);
    }

    #[test]
    fn tau_star_radial_matches_dense_scan() {
        let f1 = RadialProfile::bump(2.0, 4.0, 1.0).unwrap();
        let n = 1_000_000;
        let (s_best, oracle) = (0..=n)
            .map(|i| {
                let s = 2.0 + 2.0 * i as f64 / n as f64;
                (s, s * f1.eval(s))
            })
            .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((s_best - 3.0).abs() < 0.2);
        let tau = tau_star_radial(1.0, &f1).finite().unwrap();
        assert!((tau - 4.0 / oracle).abs() / tau < 1e-9);
        // The sup sits strictly inside the support and is positive.
        let (s, v) = maximize_radial_weight(1.0, &f1).unwrap();
        assert!(s > 2.0 && s < 4.0 && v > 0.0);
    }

    #[test]
    fn general_and_radial_routes_agree() {
        for &c in &[1.0f64, 0.5, -2.0] {
            let f1 = RadialProfile::bump(2.0, 4.0, c.signum()).unwrap();
            let field = radiation_field_exterior_radial(&RadialProfile::zero(), &f1);
            let general = tau_star_general(&field, &NonlinCoeffs::time_derivative_squared(c));
            let radial = tau_star_radial(c, &f1);
            assert!(general.relative_difference(&radial) < 1e-6, "c={c}: {general} vs {radial}");
        }
    }

    #[test]
    fn non_radial_field_sup() {
        // F(s, θ) = −θ₃ · bump on [0, 1]; with G = 2 the sup is max bump at θ = e₃
        let field = FnField::new(-1.0, 2.0, false, |s, d| -d.components()[2] * crate::weights::smooth_bump(s));
        let t = tau_star_general(&field, &NonlinCoeffs::time_derivative_squared(2.0));
        let expected = 1.0 / (-4.0f64).exp();
        assert!(t.finite().unwrap() / expected - 1.0 < 1e-6, "{t}");
    }

    #[test]
    fn profile_initial_condition_and_zero_field() {
        let (ctx, _) = canonical_context(1.0);
        let d = Direction::E3;
        for &s in &[-1.5, 2.5, 3.0, 3.7] {
            assert_eq!(ctx.amplitude(s, &d, 0.0).unwrap(), ctx.field().eval(s, &d));
        }
        for &tau in &[0.0, 0.5] {
            assert_eq!(ctx.amplitude(1.0, &d, tau).unwrap(), 0.0);
        }
        let ts = ctx.tau_star().finite().unwrap();
        assert!(matches!(ctx.amplitude(3.0, &d, ts), Err(LabError::ProfileDomain { .. })));
        assert!(matches!(ctx.primitive(3.0, &d, -0.1), Err(LabError::ProfileDomain { .. })));
    }

    #[test]
    fn profile_solves_riccati_equation() {
        let (ctx, _) = canonical_context(1.0);
        let d = Direction::E3;
        let ts = ctx.tau_star().finite().unwrap();
        let g = ctx.coeffs().eval(&d);
        let h = 1e-4;
        let mut worst = 0.0_f64;
        for i in 0..100 {
            let s = -2.0 + 6.0 * i as f64 / 99.0;
            for j in 0..100 {
                let tau = h + (0.9 * ts - 2.0 * h) * j as f64 / 99.0;
                let dp = (ctx.amplitude(s, &d, tau + h).unwrap() - ctx.amplitude(s, &d, tau - h).unwrap()) / (2.0 * h);
                let p = ctx.amplitude(s, &d, tau).unwrap();
                worst = worst.max((2.0 * dp + g * p * p).abs());
            }
        }
        assert!(worst < 1e-6, "Riccati residual {worst}");
    }

    #[test]
    fn primitive_properties() {
        let (ctx, _) = canonical_context(1.0);
        let d = Direction::E3;
        let ts = ctx.tau_star().finite().unwrap();
        assert_eq!(ctx.primitive(4.0, &d, 0.3 * ts).unwrap(), 0.0);
        assert_eq!(ctx.primitive(5.0, &d, 0.3 * ts).unwrap(), 0.0);
        let field =
            radiation_field_exterior_radial(&RadialProfile::zero(), &RadialProfile::bump(2.0, 4.0, 1.0).unwrap());
        for &s in &[-1.0, 0.5, 2.5, 3.3] {
            let p0 = ctx.primitive(s, &d, 0.0).unwrap();
            assert!((p0 - field.primitive(s).unwrap()).abs() < 1e-8, "s={s}");
        }
        let h = 1e-3;
        for &s in &[-1.2, 2.2, 3.0, 3.6] {
            let tau = 0.8 * ts;
            let fd = (ctx.primitive(s + h, &d, tau).unwrap() - ctx.primitive(s - h, &d, tau).unwrap()) / (2.0 * h);
            assert!((fd - ctx.amplitude(s, &d, tau).unwrap()).abs() < 1e-6, "s={s}");
        }
        let tau = 0.5 * ts;
        let ht = 1e-4;
        let fd = (ctx.primitive(3.0, &d, tau + ht).unwrap() - ctx.primitive(3.0, &d, tau - ht).unwrap()) / (2.0 * ht);
        assert!((fd - ctx.primitive_dtau(3.0, &d, tau).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn jet_matches_finite_differences() {
        let (ctx, _) = canonical_context(1.0);
        let d = Direction::E3;
        let ts = ctx.tau_star().finite().unwrap();
        let h = 1e-4;
        for &(s, frac) in &[(2.5, 0.3), (3.1, 0.6), (-0.4, 0.8)] {
            let tau = frac * ts;
            let j = ctx.jet(s, &d, tau).unwrap();
            let pt = |tau| ctx.primitive_dtau(s, &d, tau).unwrap();
            assert!((j.p - ctx.primitive(s, &d, tau).unwrap()).abs() < 1e-14);
            assert!(((pt(tau + h) - pt(tau - h)) / (2.0 * h) - j.p_tau_tau).abs() < 1e-6);
            let big = |tau| ctx.amplitude(s, &d, tau).unwrap();
            assert!(((big(tau + h) - big(tau - h)) / (2.0 * h) - j.p_s_tau).abs() < 1e-6);
        }
    }

    #[test]
    fn moments_match_adaptive_quadrature() {
        let (ctx, _) = canonical_context(1.0);
        let d = Direction::E3;
        let ts = ctx.tau_star().finite().unwrap();
        let g = ctx.coeffs().eval(&d);
        for &s in &[-2.5f64, -1.3, 0.7, 2.01, 2.6, 3.33, 3.99] {
            for &frac in &[0.0, 0.5, 0.95] {
                let tau = frac * ts;
                let amp = |x: f64| ctx.amplitude(x, &d, tau).unwrap();
                let lo = s.max(-2.0);
                let oracle = |k: i32| crate::weights::adaptive_quad(|x| amp(x).powi(k), lo, 4.0, 1e-15).unwrap();
                let j = ctx.jet(s, &d, tau).unwrap();
                assert!((j.p + oracle(1)).abs() < 1e-12, "s={s} tau={tau}");
                assert!((j.p_tau - 0.5 * g * oracle(2)).abs() < 1e-12);
                assert!((j.p_tau_tau + 0.5 * g * g * oracle(3)).abs() < 1e-11);
            }
        }
    }
}
