//! Radon transforms of rapidly decaying data on ℝ³ and the free-space
//! Friedlander radiation field
//! `F₀[φ](s, θ) = (R[φ₁](s, θ) − ∂ₛR[φ₀](s, θ)) / 4π`.

use std::cell::Cell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::weights::quadrature::adaptive_quad;

const UNIT_TOL: f64 = 1e-12;
const INNER_TOL: f64 = 1e-12;
const OUTER_TOL: f64 = 1e-11;
const RADIAL_TOL: f64 = 1e-13;

/// A unit vector in ℝ³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction([f64; 3]);

impl Direction {
    /// Accepts `v` when `||v| − 1| ≤ 1e−12`.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let norm = norm3(v);
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(LabError::NonUnitDirection { norm });
        }
        Ok(Self(v))
    }

    /// Normalises a non-zero vector.
    pub fn normalized(v: [f64; 3]) -> Result<Self> {
        let norm = norm3(v);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(LabError::NonUnitDirection { norm });
        }
        Ok(Self([v[0] / norm, v[1] / norm, v[2] / norm]))
    }

    /// Spherical angles: polar `theta ∈ [0, π]`, azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self([st * cp, st * sp, ct])
    }

    pub const E1: Self = Self([1.0, 0.0, 0.0]);
    pub const E3: Self = Self([0.0, 0.0, 1.0]);

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    /// Two unit vectors completing `self` to an orthonormal frame.
    pub fn orthonormal_frame(&self) -> ([f64; 3], [f64; 3]) {
        let t = self.0;
        let helper = if t[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let e1 = normalize(cross(t, helper));
        let e2 = cross(t, e1);
        (e1, e2)
    }

    /// `n` nearly uniform directions on the sphere (Fibonacci lattice).
    pub fn fibonacci_sphere(n: usize) -> Vec<Self> {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let rad = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * i as f64;
                Self([rad * phi.cos(), rad * phi.sin(), z])
            })
            .collect()
    }
}

impl From<Direction> for [f64; 3] {
    fn from(d: Direction) -> Self {
        d.0
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// One component of free-space data.
#[derive(Clone)]
pub enum FreeSpaceComponent {
    Zero,
    /// `ψ(y) = ψ*(|y|)`.
    Radial(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    General(Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>),
}

impl fmt::Debug for FreeSpaceComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zero => "Zero",
            Self::Radial(_) => "Radial(..)",
            Self::General(_) => "General(..)",
        })
    }
}

impl FreeSpaceComponent {
    pub fn radial<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self::Radial(Arc::new(f))
    }

    pub fn general<F: Fn([f64; 3]) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self::General(Arc::new(f))
    }

    pub fn eval(&self, y: [f64; 3]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Radial(f) => f(norm3(y)),
            Self::General(f) => f(y),
        }
    }
}

/// Rapidly decaying data `(φ₀, φ₁)` on ℝ³, negligible (below 1e−14)
/// outside the ball of radius `effective_support`.
#[derive(Debug, Clone)]
pub struct FreeSpaceData {
    pub phi0: FreeSpaceComponent,
    pub phi1: FreeSpaceComponent,
    pub effective_support: f64,
    /// Step for the `∂ₛ` finite difference of `R[φ₀]`.
    pub fd_step: f64,
}

impl FreeSpaceData {
    pub fn new(phi0: FreeSpaceComponent, phi1: FreeSpaceComponent, effective_support: f64) -> Result<Self> {
        if !(effective_support > 0.0 && effective_support.is_finite()) {
            return Err(LabError::InvalidParameter(format!("effective_support = {effective_support}")));
        }
        Ok(Self { phi0, phi1, effective_support, fd_step: 2e-2 })
    }
}

/// `R[ψ](s, θ) = ∫_{y·θ = s} ψ(y) dS_y`, by nested adaptive quadrature in
/// polar coordinates on the plane, truncated at `support`.
pub fn radon_plane(psi: &FreeSpaceComponent, s: f64, theta: &Direction, support: f64) -> Result<f64> {
    if matches!(psi, FreeSpaceComponent::Zero) || s.abs() >= support {
        return Ok(0.0);
    }
    let rho_max = (support * support - s * s).sqrt();
    let t = theta.components();
    let (e1, e2) = theta.orthonormal_frame();
    let base = [s * t[0], s * t[1], s * t[2]];
    let inner_err = Cell::new(None);
    let outer = adaptive_quad(
        |phi| {
            let (sp, cp) = phi.sin_cos();
            let dir = [cp * e1[0] + sp * e2[0], cp * e1[1] + sp * e2[1], cp * e1[2] + sp * e2[2]];
            let ray = |rho: f64| {
                let y = [base[0] + rho * dir[0], base[1] + rho * dir[1], base[2] + rho * dir[2]];
                rho * psi.eval(y)
            };
            match adaptive_quad(ray, 0.0, rho_max, INNER_TOL) {
                Ok(v) => v,
                Err(e) => {
                    inner_err.set(Some(e));
                    0.0
                }
            }
        },
        0.0,
        2.0 * PI,
        OUTER_TOL,
    )?;
    match inner_err.into_inner() {
        Some(e) => Err(e),
        None => Ok(outer),
    }
}

/// Radon transform of a radial function, `2π ∫_{|s|}^{support} ρ ψ*(ρ) dρ`.
pub fn radon_radial<F: Fn(f64) -> f64>(psi_star: F, s: f64, support: f64) -> Result<f64> {
    let lo = s.abs();
    if lo >= support {
        return Ok(0.0);
    }
    Ok(2.0 * PI * adaptive_quad(|rho| rho * psi_star(rho), lo, support, RADIAL_TOL)?)
}

fn radon(psi: &FreeSpaceComponent, s: f64, theta: &Direction, support: f64) -> Result<f64> {
    match psi {
        FreeSpaceComponent::Zero => Ok(0.0),
        FreeSpaceComponent::Radial(f) => radon_radial(|r| f(r), s, support),
        FreeSpaceComponent::General(_) => radon_plane(psi, s, theta, support),
    }
}

/// Fourth-order central difference of `g` at `s` with step `h`.
fn d4<G: Fn(f64) -> Result<f64>>(g: &G, s: f64, h: f64) -> Result<f64> {
    Ok((g(s - 2.0 * h)? - 8.0 * g(s - h)? + 8.0 * g(s + h)? - g(s + 2.0 * h)?) / (12.0 * h))
}

/// `∂ₛR[ψ](s, θ)` from fourth-order differences at steps `h` and `h/2`,
/// returning the Richardson-extrapolated value and the ratio
/// `|D(h) − D(h/2)| / |D(h/2) − D(h/4)|` (≈ 16 in the asymptotic regime).
pub fn radon_ds(psi: &FreeSpaceComponent, s: f64, theta: &Direction, support: f64, h: f64) -> Result<(f64, f64)> {
    let g = |x: f64| radon(psi, x, theta, support);
    let d1 = d4(&g, s, h)?;
    let d2 = d4(&g, s, 0.5 * h)?;
    let d3 = d4(&g, s, 0.25 * h)?;
    let ratio = (d1 - d2).abs() / (d2 - d3).abs();
    Ok(((16.0 * d2 - d1) / 15.0, ratio))
}

/// Friedlander radiation field `F₀[φ](s, θ)`.
pub fn radiation_field_free(data: &FreeSpaceData, s: f64, theta: &Direction) -> Result<f64> {
    let r1 = radon(&data.phi1, s, theta, data.effective_support)?;
    let ds0 = if matches!(data.phi0, FreeSpaceComponent::Zero) {
        0.0
    } else {
        let g = |x: f64| radon(&data.phi0, x, theta, data.effective_support);
        let h = data.fd_step;
        (16.0 * d4(&g, s, 0.5 * h)? - d4(&g, s, h)?) / 15.0
    };
    Ok((r1 - ds0) / (4.0 * PI))
}
