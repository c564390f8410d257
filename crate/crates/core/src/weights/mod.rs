//! Grids, quadrature, smooth cutoffs and the weight functions used to
//! normalise pointwise decay diagnostics.
//!
//! All weights are written in terms of the Japanese bracket
//! `⟨z⟩ = √(1 + z²)`.

pub mod cutoff;
pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub use cutoff::{smooth_bump, smoothstep, SmoothCutoffs};
pub use quadrature::adaptive_quad;

/// `⟨z⟩ = √(1 + z²)`.
#[inline]
pub fn jb(z: f64) -> f64 {
    z.hypot(1.0)
}

/// A point `(t, r)` of the radial exterior space-time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub t: f64,
    pub r: f64,
}

impl SpacetimePoint {
    /// Checked constructor: `t ≥ 0`, `r ≥ 1`.
    pub fn new(t: f64, r: f64) -> Result<Self> {
        if !(t >= 0.0) || !(r >= 1.0) {
            return Err(LabError::InvalidParameter(format!("space-time point (t={t}, r={r}) outside t ≥ 0, r ≥ 1")));
        }
        Ok(Self { t, r })
    }

    /// Unchecked constructor, for weights evaluated at `r < 1` (e.g. the
    /// origin of the whole-space formulas).
    pub const fn extended(t: f64, r: f64) -> Self {
        Self { t, r }
    }
}

/// Exponents of the weight families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub nu: f64,
    pub kappa: f64,
    pub rho: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl WeightParams {
    pub fn new(nu: f64, kappa: f64, rho: f64, mu: f64, lambda: f64) -> Result<Self> {
        let p = Self { nu, kappa, rho, mu, lambda };
        p.validate()?;
        Ok(p)
    }

    /// `ρ ≥ 0`, `0 ≤ λ ≤ 1/2`, `0 ≤ μ ≤ 1/4`.
    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) {
            return Err(LabError::InvalidParameter(format!("rho = {} must be ≥ 0", self.rho)));
        }
        if !(0.0..=0.5).contains(&self.lambda) {
            return Err(LabError::InvalidParameter(format!("lambda = {} not in [0, 1/2]", self.lambda)));
        }
        if !(0.0..=0.25).contains(&self.mu) {
            return Err(LabError::InvalidParameter(format!("mu = {} not in [0, 1/4]", self.mu)));
        }
        Ok(())
    }

    /// Error-functional exponents need `μ > 0` strictly.
    pub fn validate_for_error_bounds(&self) -> Result<()> {
        self.validate()?;
        if self.mu <= 0.0 {
            return Err(LabError::InvalidParameter("mu must be > 0 for error bounds".into()));
        }
        Ok(())
    }
}

/// Uniform grid of `n` points on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo < hi) || n < 2 {
            return Err(LabError::InvalidParameter(format!("grid [{lo}, {hi}] with {n} points")));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + self.step() * i as f64
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }
}

/// `Ψ_ν(t)`: `log(2 + t)` when `ν = 0`, otherwise 1.
pub fn psi_nu(nu: f64, t: f64) -> f64 {
    if nu == 0.0 {
        (2.0 + t).ln()
    } else {
        1.0
    }
}

/// `W_{ν,κ}(t, r) = ⟨t + r⟩^ν · min{⟨r⟩, ⟨t − r⟩}^κ`.
pub fn w_nu_kappa(nu: f64, kappa: f64, p: SpacetimePoint) -> f64 {
    jb(p.t + p.r).powf(nu) * jb(p.r).min(jb(p.t - p.r)).powf(kappa)
}

/// `Φ_ν(t, r)`: `⟨t+r⟩^ν` for `ν < 0`, `1/log(2 + ⟨t+r⟩/⟨t−r⟩)` for
/// `ν = 0`, and `⟨t−r⟩^ν` for `ν > 0`.
pub fn phi_nu(nu: f64, p: SpacetimePoint) -> f64 {
    if nu < 0.0 {
        jb(p.t + p.r).powf(nu)
    } else if nu == 0.0 {
        1.0 / (2.0 + jb(p.t + p.r) / jb(p.t - p.r)).ln()
    } else {
        jb(p.t - p.r).powf(nu)
    }
}

/// Discrete surrogate of the weighted sup norm `‖h : N₀(𝒲)‖`:
/// `max ⟨r⟩·𝒲(s, r)·|h(s, r)|` over the supplied samples.
///
/// An empty sample set gives 0.
pub fn weighted_sup<I, W>(samples: I, weight: W) -> Result<f64>
where
    I: IntoIterator<Item = (SpacetimePoint, f64)>,
    W: Fn(SpacetimePoint) -> f64,
{
    let mut best = 0.0_f64;
    for (p, value) in samples {
        if !value.is_finite() {
            return Err(LabError::NonFinite { context: "weighted_sup field sample" });
        }
        best = best.max(jb(p.r) * weight(p) * value.abs());
    }
    Ok(best)
}

/// Radial surrogate of the data weight `𝒜_{ρ,k}[f]`:
/// `sup ⟨r⟩^ρ Σ_{m ≤ k} (|f₀⁽ᵐ⁾| + |f₀⁽ᵐ⁺¹⁾| + |f₁⁽ᵐ⁾|)` over `grid`.
///
/// Only radial derivatives enter (rotations annihilate radial data), and the
/// derivative closures return `[f, f', f'', f''']`, so `k ≤ 2`.
pub fn data_weight<F0, F1>(f0: F0, f1: F1, rho: f64, k: usize, grid: &Grid1D) -> Result<f64>
where
    F0: Fn(f64) -> [f64; 4],
    F1: Fn(f64) -> [f64; 4],
{
    if k > 2 {
        return Err(LabError::InvalidParameter(format!("data weight order k = {k} > 2")));
    }
    let mut best = 0.0_f64;
    for r in grid.points() {
        let d0 = f0(r);
        let d1 = f1(r);
        let sum: f64 = (0..=k).map(|m| d0[m].abs() + d0[m + 1].abs() + d1[m].abs()).sum();
        if !sum.is_finite() {
            return Err(LabError::NonFinite { context: "data weight" });
        }
        best = best.max(jb(r).powf(rho) * sum);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn psi_examples() {
        assert!((psi_nu(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(psi_nu(0.25, 100.0), 1.0);
        assert!((psi_nu(0.0, E * E - 2.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn w_examples() {
        assert!((w_nu_kappa(1.0, 1.0, SpacetimePoint::extended(0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((w_nu_kappa(0.0, 2.0, SpacetimePoint::extended(5.0, 5.0)) - 1.0).abs() < 1e-15);
        assert!((w_nu_kappa(1.0, 1.0, SpacetimePoint::extended(3.0, 4.0)) - 10.0).abs() < 1e-13);
    }

    #[test]
    fn phi_examples() {
        assert!((phi_nu(1.0, SpacetimePoint::extended(3.0, 2.0)) - 2f64.sqrt()).abs() < 1e-15);
        assert!((phi_nu(-1.0, SpacetimePoint::extended(1.0, 1.0)) - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((phi_nu(0.0, SpacetimePoint::extended(0.0, 0.0)) - 1.0 / 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn weighted_sup_examples() {
        let grid = Grid1D::new(1.0, 2.0, 11).unwrap();
        let pts: Vec<_> = grid.points().map(|r| SpacetimePoint::extended(0.0, r)).collect();
        assert_eq!(weighted_sup(pts.iter().map(|&p| (p, 0.0)), |_| 1.0).unwrap(), 0.0);
        let s = weighted_sup(pts.iter().map(|&p| (p, 1.0)), |_| 1.0).unwrap();
        assert!((s - 5f64.sqrt()).abs() < 1e-15);
        let s = weighted_sup(pts.iter().map(|&p| (p, 1.0 / jb(p.r))), |_| 1.0).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        let err = weighted_sup([(pts[0], f64::NAN)], |_| 1.0);
        assert!(matches!(err, Err(LabError::NonFinite { .. })));
    }

    #[test]
    fn weight_params_validation() {
        assert!(WeightParams::new(0.0, 0.0, 1.0, 0.25, 0.3).is_ok());
        assert!(WeightParams::new(0.0, 0.0, -1.0, 0.25, 0.3).is_err());
        assert!(WeightParams::new(0.0, 0.0, 1.0, 0.3, 0.3).is_err());
        assert!(WeightParams::new(0.0, 0.0, 1.0, 0.1, 0.6).is_err());
        assert!(WeightParams::new(0.0, 0.0, 1.0, 0.0, 0.2).unwrap().validate_for_error_bounds().is_err());
    }

    #[test]
    fn grid_rejects_degenerate() {
        assert!(Grid1D::new(1.0, 1.0, 5).is_err());
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
        let g = Grid1D::new(0.0, 1.0, 5).unwrap();
        assert_eq!(g.point(4), 1.0);
        assert!((g.step() - 0.25).abs() < 1e-16);
    }

    /// Near the boundary (r ≤ 2) the weights `⟨r⟩⟨t−r⟩^ρ` and `⟨t⟩^ρ` are
    /// equivalent uniformly in t.
    #[test]
    fn near_boundary_weight_equivalence() {
        let ratio_range = |nt: usize, nr: usize| {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
            let rho = 1.5;
            for t in Grid1D::new(0.0, 1e3, nt).unwrap().points() {
                for r in Grid1D::new(1.0, 2.0, nr).unwrap().points() {
                    let q = jb(r) * jb(t - r).powf(rho) / jb(t).powf(rho);
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
            }
            (lo, hi)
        };
        let (lo1, hi1) = ratio_range(2001, 11);
        let (lo2, hi2) = ratio_range(4001, 21);
        assert!(lo1 > 0.0 && hi1.is_finite());
        assert!((hi1 / lo1 - hi2 / lo2).abs() / (hi2 / lo2) < 0.05);
    }
}
