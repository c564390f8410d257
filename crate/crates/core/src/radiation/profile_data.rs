//! Radial data profiles on `[1, ∞)` and their odd reflection about `r = 1`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{LabError, Result};
use crate::weights::cutoff::bump_derivs;
use crate::weights::quadrature::{adaptive_quad, quintic_hermite};

/// Tolerance for the primitive `∫ ρ f(ρ) dρ` behind every check-extension
/// integral.
const PRIMITIVE_TOL: f64 = 1e-14;

/// Cells of the tabulated primitive over the support.
const TABLE_CELLS: usize = 4096;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Zero,
    /// `amplitude · bump((r − lo)/(hi − lo))`.
    Bump {
        amplitude: f64,
    },
    /// User closure; derivatives by central differences with step `fd_step`.
    Custom {
        f: ScalarFn,
        fd_step: f64,
    },
}

/// A smooth radial function `f*(r)` on `[1, ∞)` with compact support
/// `[a, b] ⊂ (1, ∞)`.
///
/// Values outside the declared support are exactly zero, which makes the
/// compatibility condition `f*(1) = 0` automatic.
#[derive(Clone)]
pub struct RadialProfile {
    shape: Shape,
    support: (f64, f64),
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.shape {
            Shape::Zero => "zero".to_string(),
            Shape::Bump { amplitude } => format!("bump(amplitude={amplitude})"),
            Shape::Custom { fd_step, .. } => format!("custom(fd_step={fd_step})"),
        };
        f.debug_struct("RadialProfile").field("shape", &kind).field("support", &self.support).finish()
    }
}

fn check_support(a: f64, b: f64) -> Result<()> {
    if !(a > 1.0 && b > a && b.is_finite()) {
        return Err(LabError::InvalidParameter(format!("profile support [{a}, {b}] must satisfy 1 < a < b < ∞")));
    }
    Ok(())
}

impl RadialProfile {
    pub fn zero() -> Self {
        Self { shape: Shape::Zero, support: (2.0, 2.0) }
    }

    /// `amplitude · smooth_bump((r − a)/(b − a))`.
    pub fn bump(a: f64, b: f64, amplitude: f64) -> Result<Self> {
        check_support(a, b)?;
        if !amplitude.is_finite() {
            return Err(LabError::NonFinite { context: "bump amplitude" });
        }
        if amplitude == 0.0 {
            return Ok(Self::zero());
        }
        Ok(Self { shape: Shape::Bump { amplitude }, support: (a, b) })
    }

    /// Arbitrary smooth profile. `f` is only sampled inside `[a, b]`;
    /// derivatives use central differences with step `fd_step`.
    pub fn custom<F>(a: f64, b: f64, fd_step: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_support(a, b)?;
        if !(fd_step > 0.0) {
            return Err(LabError::InvalidParameter(format!("fd_step = {fd_step}")));
        }
        Ok(Self { shape: Shape::Custom { f: Arc::new(f), fd_step }, support: (a, b) })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, Shape::Zero)
    }

    /// `Some((a, b))`, or `None` for the zero profile.
    pub fn support(&self) -> Option<(f64, f64)> {
        (!self.is_zero()).then_some(self.support)
    }

    /// Upper support bound, 1 for the zero profile.
    pub fn support_upper(&self) -> f64 {
        self.support().map_or(1.0, |(_, b)| b)
    }

    /// Same shape multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        if k == 0.0 {
            return Self::zero();
        }
        let shape = match &self.shape {
            Shape::Zero => Shape::Zero,
            Shape::Bump { amplitude } => Shape::Bump { amplitude: amplitude * k },
            Shape::Custom { f, fd_step } => {
                let f = Arc::clone(f);
                Shape::Custom { f: Arc::new(move |r| k * f(r)), fd_step: *fd_step }
            }
        };
        Self { shape, support: self.support }
    }

    fn inside(&self, r: f64) -> bool {
        r > self.support.0 && r < self.support.1
    }

    pub fn eval(&self, r: f64) -> f64 {
        if !self.inside(r) {
            return 0.0;
        }
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::Bump { amplitude } => {
                let (a, b) = self.support;
                amplitude * bump_derivs((r - a) / (b - a))[0]
            }
            Shape::Custom { f, .. } => f(r),
        }
    }

    /// `[f, f', f'', f''']` at `r`.
    pub fn derivs(&self, r: f64) -> [f64; 4] {
        match &self.shape {
            Shape::Zero => [0.0; 4],
            Shape::Bump { amplitude } => {
                if !self.inside(r) {
                    return [0.0; 4];
                }
                let (a, b) = self.support;
                let w = b - a;
                let d = bump_derivs((r - a) / w);
                [amplitude * d[0], amplitude * d[1] / w, amplitude * d[2] / (w * w), amplitude * d[3] / (w * w * w)]
            }
            Shape::Custom { fd_step, .. } => {
                let h = *fd_step;
                let f = |x: f64| self.eval(x);
                let (fm2, fm1, f0, fp1, fp2) = (f(r - 2.0 * h), f(r - h), f(r), f(r + h), f(r + 2.0 * h));
                [
                    f0,
                    (fp1 - fm1) / (2.0 * h),
                    (fp1 - 2.0 * f0 + fm1) / (h * h),
                    (fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) / (2.0 * h * h * h),
                ]
            }
        }
    }

    /// `max |r f(r)|` on a 4001-point grid over the support.
    pub fn max_abs_weighted(&self) -> f64 {
        let Some((a, b)) = self.support() else { return 0.0 };
        let n = 4000;
        (0..=n)
            .map(|i| {
                let r = a + (b - a) * i as f64 / n as f64;
                (r * self.eval(r)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// The odd reflection of `ρ f*(ρ)` about `ρ = 1`:
/// `f̌(ρ) = ρ f*(ρ)` for `ρ > 1` and `−(2−ρ) f*(2−ρ)` for `ρ ≤ 1`.
///
/// The primitive `J(x) = ∫₁^x ρ f*(ρ) dρ` is tabulated once on the support
/// (cumulative adaptive quadrature per cell, quintic Hermite interpolation
/// using the analytic `J'`, `J''`).
#[derive(Debug, Clone)]
pub struct CheckExtension {
    source: RadialProfile,
    table: Arc<OnceLock<Vec<f64>>>,
}

/// Builds the check extension of `f`.
pub fn check_extend(f: &RadialProfile) -> CheckExtension {
    CheckExtension { source: f.clone(), table: Arc::new(OnceLock::new()) }
}

impl CheckExtension {
    pub fn source(&self) -> &RadialProfile {
        &self.source
    }

    pub fn eval(&self, rho: f64) -> f64 {
        if rho > 1.0 {
            rho * self.source.eval(rho)
        } else {
            let m = 2.0 - rho;
            -m * self.source.eval(m)
        }
    }

    /// `d f̌ / dρ`. Both branches give `f(m) + m f'(m)` with `m = ρ` or
    /// `m = 2 − ρ`, so the derivative is even about `ρ = 1`.
    pub fn deriv(&self, rho: f64) -> f64 {
        let m = if rho > 1.0 { rho } else { 2.0 - rho };
        let d = self.source.derivs(m);
        d[0] + m * d[1]
    }

    /// `d² f̌ / dρ²` (odd about `ρ = 1`).
    pub fn deriv2(&self, rho: f64) -> f64 {
        let (m, sign) = if rho > 1.0 { (rho, 1.0) } else { (2.0 - rho, -1.0) };
        let d = self.source.derivs(m);
        sign * (2.0 * d[1] + m * d[2])
    }

    /// `J(x) = ∫₁^x ρ f*(ρ) dρ` for `x ≥ 1`.
    pub fn weighted_primitive(&self, x: f64) -> Result<f64> {
        let Some((a, b)) = self.source.support() else { return Ok(0.0) };
        if x <= a {
            return Ok(0.0);
        }
        let table = self.primitive_table()?;
        if x >= b {
            return Ok(table[TABLE_CELLS]);
        }
        let dx = (b - a) / TABLE_CELLS as f64;
        let pos = (x - a) / dx;
        let i = (pos.floor() as usize).min(TABLE_CELLS - 1);
        let node = |k: usize| {
            let rho = if k == TABLE_CELLS { b } else { a + dx * k as f64 };
            let d = self.source.derivs(rho);
            [table[k], rho * d[0], d[0] + rho * d[1]]
        };
        Ok(quintic_hermite(pos - i as f64, dx, node(i), node(i + 1)))
    }

    /// Direct adaptive quadrature of `J(x)`, bypassing the table.
    pub fn weighted_primitive_direct(&self, x: f64) -> Result<f64> {
        let Some((a, b)) = self.source.support() else { return Ok(0.0) };
        let hi = x.min(b);
        if hi <= a {
            return Ok(0.0);
        }
        adaptive_quad(|rho| rho * self.source.eval(rho), a, hi, PRIMITIVE_TOL)
    }

    fn primitive_table(&self) -> Result<&[f64]> {
        if let Some(t) = self.table.get() {
            return Ok(t);
        }
        let (a, b) = self.source.support().expect("tables are built for non-zero profiles only");
        let dx = (b - a) / TABLE_CELLS as f64;
        let mut values = Vec::with_capacity(TABLE_CELLS + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for k in 0..TABLE_CELLS {
            let lo = a + dx * k as f64;
            let hi = if k + 1 == TABLE_CELLS { b } else { lo + dx };
            acc += adaptive_quad(|rho| rho * self.source.eval(rho), lo, hi, 1e-15)?;
            values.push(acc);
        }
        Ok(self.table.get_or_init(|| values))
    }

    /// `∫_lo^hi f̌(ρ) dρ`, evaluated by folding the reflected part back onto
    /// `[1, ∞)`. Symmetric intervals about 1 cancel exactly, not just to
    /// quadrature tolerance.
    pub fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        if hi < lo {
            return self.integral(hi, lo).map(|v| -v);
        }
        let j = |x: f64| self.weighted_primitive(x);
        let upper = j(hi.max(1.0))? - j(lo.max(1.0))?;
        let lower = j(2.0 - lo.min(1.0))? - j(2.0 - hi.min(1.0))?;
        Ok(upper - lower)
    }
}
