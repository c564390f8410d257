//! Radiation fields.
//!
//! For the exterior of the unit ball with radial data the radiation field of
//! the linear Dirichlet problem is explicit:
//! `F₊(s) = ½ (f̌₀'(s) − f̌₁(s))`, where `f̌` is the odd reflection of
//! `r f*(r)` about `r = 1` ([`CheckExtension`]). It vanishes for `s ≥ b`,
//! the upper end of the data support, and for `s ≤ 2 − b`.
//!
//! The free-space Friedlander field is available for general rapidly
//! decaying data through Radon transforms ([`radon`]).

mod profile_data;
pub mod radon;

use std::sync::Arc;

use crate::error::Result;
use crate::weights::{jb, Grid1D};

pub use profile_data::{check_extend, CheckExtension, RadialProfile};
pub use radon::{radiation_field_free, radon_plane, radon_radial, Direction, FreeSpaceComponent, FreeSpaceData};

/// A radiation field `F(s, θ)` with `F ≡ 0` for `s ≥ support_radius`.
pub trait RadiationField: Send + Sync {
    fn eval(&self, s: f64, theta: &Direction) -> f64;

    /// `F(s, θ) = 0` for `s ≥ support_radius()`.
    fn support_radius(&self) -> f64;

    /// Lower end of the interval where the field is non-negligible; sup scans
    /// run over `[support_lower, support_radius]`.
    fn support_lower(&self) -> f64;

    /// `true` when `F` does not depend on `θ`.
    fn is_radial(&self) -> bool;

    /// Decay order `N` used by the `⟨s⟩^N |F|` diagnostics.
    fn decay_order(&self) -> u32 {
        6
    }
}

/// `F₊(s) = ½ (f̌₀'(s) − f̌₁(s))` for radial exterior data.
#[derive(Debug, Clone)]
pub struct ExteriorRadialField {
    f0: CheckExtension,
    f1: CheckExtension,
    support_radius: f64,
}

/// Builds the radial exterior radiation field of the data `(f0, f1)`.
pub fn radiation_field_exterior_radial(f0: &RadialProfile, f1: &RadialProfile) -> ExteriorRadialField {
    let support_radius = f0.support_upper().max(f1.support_upper());
    ExteriorRadialField { f0: check_extend(f0), f1: check_extend(f1), support_radius }
}

impl ExteriorRadialField {
    pub fn value(&self, s: f64) -> f64 {
        if s >= self.support_radius || s <= 2.0 - self.support_radius {
            return 0.0;
        }
        0.5 * (self.f0.deriv(s) - self.f1.eval(s))
    }

    /// `F₀[f₊](s) = −∫ₛ^∞ F₊ = ½ (f̌₀(s) + ∫ₛ^∞ f̌₁)`.
    pub fn primitive(&self, s: f64) -> Result<f64> {
        let lo = s.max(2.0 - self.support_radius);
        let hi = self.support_radius;
        if lo >= hi {
            return Ok(0.0);
        }
        Ok(0.5 * (self.f0.eval(s) + self.f1.integral(lo, hi)?))
    }

    pub fn f0(&self) -> &CheckExtension {
        &self.f0
    }

    pub fn f1(&self) -> &CheckExtension {
        &self.f1
    }

    pub fn is_zero(&self) -> bool {
        self.f0.source().is_zero() && self.f1.source().is_zero()
    }
}

impl RadiationField for ExteriorRadialField {
    fn eval(&self, s: f64, _theta: &Direction) -> f64 {
        self.value(s)
    }

    fn support_radius(&self) -> f64 {
        self.support_radius
    }

    fn support_lower(&self) -> f64 {
        2.0 - self.support_radius
    }

    fn is_radial(&self) -> bool {
        true
    }
}

type FieldFn = Arc<dyn Fn(f64, &Direction) -> f64 + Send + Sync>;

/// A field given by a closure, for direction-dependent test data.
#[derive(Clone)]
pub struct FnField {
    f: FieldFn,
    lower: f64,
    upper: f64,
    radial: bool,
}

impl FnField {
    /// `f` must vanish for `s ≥ upper`; sup scans cover `[lower, upper]`.
    pub fn new<F>(lower: f64, upper: f64, radial: bool, f: F) -> Self
    where
        F: Fn(f64, &Direction) -> f64 + Send + Sync + 'static,
    {
        Self { f: Arc::new(f), lower, upper, radial }
    }
}

impl RadiationField for FnField {
    fn eval(&self, s: f64, theta: &Direction) -> f64 {
        if s >= self.upper {
            0.0
        } else {
            (self.f)(s, theta)
        }
    }

    fn support_radius(&self) -> f64 {
        self.upper
    }

    fn support_lower(&self) -> f64 {
        self.lower
    }

    fn is_radial(&self) -> bool {
        self.radial
    }
}

/// `sup ⟨s⟩^N |F(s, θ)|` over `grid` and the supplied directions.
pub fn decay_sup(field: &dyn RadiationField, n: u32, grid: &Grid1D, directions: &[Direction]) -> f64 {
    let dirs: &[Direction] = if field.is_radial() { &directions[..1.min(directions.len())] } else { directions };
    let mut best = 0.0_f64;
    for s in grid.points() {
        for d in dirs {
            best = best.max(jb(s).powi(n as i32) * field.eval(s, d).abs());
        }
    }
    best
}
