//! The glued approximate solution
//!
//! ```text
//! u₁ = χ_ε(t) ε u₀ + (1 − χ_ε(t)) η(t, r) w(t, r),
//! w  = ε r⁻¹ p(r − t, ε log t),
//! ```
//!
//! with `χ_ε(t) = χ(εt)` and `η = ξ(r/t)`, and its error
//! `E(u₁) = □u₁ − c (∂ₜu₁)²`.
//!
//! `□` is applied exactly: `□u₀ = 0`, so the linear block contributes only
//! the cutoff commutator `ε(χ_ε'' u₀ + 2 χ_ε' ∂ₜu₀)`, and the far-field
//! block uses the profile jet, since for `q = p(r − t, τ(t))`
//! `(∂ₜ² − ∂ᵣ²) q = −2τ' ∂ₛ∂_τ p + τ'' ∂_τ p + τ'² ∂_τ² p`.
//! A finite-difference evaluation is kept as an independent check.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::profile::{NonlinCoeffs, ProfileContext, TauStar};
use crate::radiation::{radiation_field_exterior_radial, Direction};
use crate::solver::{solve_with, RadialIvp, SolverConfig};
use crate::weights::quadrature::trapezoid_samples;
use crate::weights::{jb, SmoothCutoffs, WeightParams};

/// `χ(εt)`: 1 for `t ≤ 1/ε`, 0 for `t ≥ 2/ε`.
pub fn chi_eps(eps: f64, t: f64) -> f64 {
    SmoothCutoffs.chi(eps * t)
}

/// `ξ(r/t)`: 0 for `r ≤ t/2`, 1 for `r ≥ 3t/4`; 0 at `t = 0`.
pub fn eta(t: f64, r: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        SmoothCutoffs.xi(r / t)
    }
}

#[derive(Debug, Clone)]
pub struct ApproxConfig {
    pub eps: f64,
    pub tau0: f64,
    pub cutoffs: SmoothCutoffs,
    /// Step of the finite-difference cross-check of `□u₁`.
    pub fd_step: f64,
    ivp: RadialIvp,
    profile: ProfileContext,
}

impl ApproxConfig {
    /// `τ₀ = 0.7 τ*` (1 when `τ*` is infinite).
    pub fn new(ivp: &RadialIvp) -> Result<Self> {
        let field = radiation_field_exterior_radial(ivp.f0(), ivp.f1());
        let profile = ProfileContext::new(Arc::new(field), NonlinCoeffs::time_derivative_squared(ivp.c()));
        let tau0 = match profile.tau_star() {
            TauStar::Finite(t) => 0.7 * t,
            TauStar::Infinite => 1.0,
        };
        let cfg = Self { eps: ivp.eps(), tau0, cutoffs: SmoothCutoffs, fd_step: 0.05, ivp: ivp.clone(), profile };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tau0(mut self, tau0: f64) -> Result<Self> {
        self.tau0 = tau0;
        self.validate()?;
        Ok(self)
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> Result<Self> {
        self.fd_step = fd_step;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 0.5) {
            return Err(LabError::InvalidParameter(format!("eps = {} not in (0, 1/2]", self.eps)));
        }
        if !(self.tau0 > 0.0 && self.tau0 < self.profile.tau_star().value()) {
            return Err(LabError::InvalidParameter(format!(
                "tau0 = {} not in (0, tau* = {})",
                self.tau0,
                self.profile.tau_star()
            )));
        }
        if !(self.fd_step > 0.0) {
            return Err(LabError::InvalidParameter(format!("fd_step = {} must be positive", self.fd_step)));
        }
        Ok(())
    }

    /// `exp(τ₀/ε)`, the end of the admissible time range.
    pub fn t_end(&self) -> f64 {
        (self.tau0 / self.eps).exp()
    }

    pub fn ivp(&self) -> &RadialIvp {
        &self.ivp
    }

    pub fn profile(&self) -> &ProfileContext {
        &self.profile
    }
}

/// `r u₁` and the derivatives needed for `u₁`, `∂u₁` and `□u₁`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Jet {
    y: f64,
    y_t: f64,
    y_r: f64,
    /// `(∂ₜ² − ∂ᵣ²)(r u₁)`
    box_y: f64,
}

/// Evaluators of `u₁`, `∂u₁` and `E(u₁)`.
#[derive(Debug, Clone)]
pub struct ApproxField {
    cfg: ApproxConfig,
}

impl ApproxField {
    pub fn new(cfg: ApproxConfig) -> Self {
        Self { cfg }
    }

    pub fn config(&self) -> &ApproxConfig {
        &self.cfg
    }

    fn check(&self, t: f64, r: f64) -> Result<()> {
        let t_end = self.cfg.t_end();
        if !(t >= 0.0 && t <= t_end) {
            return Err(LabError::TimeDomain { t, t_max: t_end });
        }
        if !(r >= 1.0) {
            return Err(LabError::InvalidParameter(format!("r = {r} < 1")));
        }
        Ok(())
    }

    /// `w(t, r) = ε r⁻¹ p(r − t, ε log t)`.
    pub fn w_field(&self, t: f64, r: f64) -> Result<f64> {
        if !(t >= 1.0) || !(r > 0.0) {
            return Err(LabError::InvalidParameter(format!("w needs t ≥ 1, r > 0 (t={t}, r={r})")));
        }
        let tau = self.cfg.eps * t.ln();
        Ok(self.cfg.eps * self.cfg.profile.primitive(r - t, &Direction::E3, tau)? / r)
    }

    /// `[Q, Q_t, Q_r, (∂ₜ² − ∂ᵣ²)Q]` for `Q = r w`.
    fn far_jet(&self, t: f64, r: f64) -> Result<[f64; 4]> {
        let eps = self.cfg.eps;
        let s = r - t;
        if s >= self.cfg.ivp.support_radius() {
            return Ok([0.0; 4]);
        }
        let tau = eps * t.ln();
        let j = self.cfg.profile.jet(s, &Direction::E3, tau)?;
        let d1 = eps / t;
        let d2 = -eps / (t * t);
        Ok([
            eps * j.p,
            eps * (-j.p_s + d1 * j.p_tau),
            eps * j.p_s,
            eps * (-2.0 * d1 * j.p_s_tau + d2 * j.p_tau + d1 * d1 * j.p_tau_tau),
        ])
    }

    fn jet(&self, t: f64, r: f64) -> Result<Jet> {
        self.check(t, r)?;
        let eps = self.cfg.eps;
        let [a, a1, a2] = self.cfg.cutoffs.chi_derivs(eps * t);
        let (a1, a2) = (eps * a1, eps * eps * a2);
        let mut out = Jet::default();

        if a != 0.0 || a1 != 0.0 || a2 != 0.0 {
            let ivp = &self.cfg.ivp;
            let v = ivp.linear_rv(t, r)?;
            let v_t = ivp.linear_rv_t(t, r);
            let v_r = ivp.linear_rv_r(t, r);
            out.y += eps * a * v;
            out.y_t += eps * (a1 * v + a * v_t);
            out.y_r += eps * a * v_r;
            out.box_y += eps * (a2 * v + 2.0 * a1 * v_t);
        }

        let b = 1.0 - a;
        if b != 0.0 && t > 0.0 {
            let x = r / t;
            let [xi, xi1, xi2] = self.cfg.cutoffs.xi_derivs(x);
            if xi != 0.0 || xi1 != 0.0 || xi2 != 0.0 {
                let eta = xi;
                let eta_t = -x / t * xi1;
                let eta_r = xi1 / t;
                let eta_tt = 2.0 * x / (t * t) * xi1 + x * x / (t * t) * xi2;
                let eta_rr = xi2 / (t * t);
                let [q, q_t, q_r, box_q] = self.far_jet(t, r)?;
                let m = eta * q;
                let m_t = eta_t * q + eta * q_t;
                let m_r = eta_r * q + eta * q_r;
                let box_m = (eta_tt - eta_rr) * q + 2.0 * (eta_t * q_t - eta_r * q_r) + eta * box_q;
                out.y += b * m;
                out.y_t += -a1 * m + b * m_t;
                out.y_r += b * m_r;
                out.box_y += -a2 * m - 2.0 * a1 * m_t + b * box_m;
            }
        }
        Ok(out)
    }

    pub fn u1(&self, t: f64, r: f64) -> Result<f64> {
        Ok(self.jet(t, r)?.y / r)
    }

    /// `[∂ₜu₁, ∂ᵣu₁]`.
    pub fn du1(&self, t: f64, r: f64) -> Result<[f64; 2]> {
        let j = self.jet(t, r)?;
        Ok([j.y_t / r, j.y_r / r - j.y / (r * r)])
    }

    /// `E(u₁) = □u₁ − c (∂ₜu₁)²`.
    pub fn error_e(&self, t: f64, r: f64) -> Result<f64> {
        let j = self.jet(t, r)?;
        let ut = j.y_t / r;
        Ok(j.box_y / r - self.cfg.ivp.c() * ut * ut)
    }

    /// `E(u₁)` with `□` replaced by fourth-order central differences of
    /// `r u₁` at steps `δ` and `δ/2`, Richardson-combined. Fails when the
    /// two estimates disagree by more than 5%.
    pub fn error_e_fd(&self, t: f64, r: f64) -> Result<f64> {
        let d = self.cfg.fd_step;
        if t - 2.0 * d < 0.0 || t + 2.0 * d > self.cfg.t_end() || r - 2.0 * d < 1.0 {
            return Err(LabError::Stencil { t, r });
        }
        let y = |tt: f64, rr: f64| self.jet(tt, rr).map(|j| j.y);
        let box_at = |d: f64| -> Result<f64> {
            let c0 = y(t, r)?;
            let dtt = -y(t + 2.0 * d, r)? + 16.0 * y(t + d, r)? - 30.0 * c0 + 16.0 * y(t - d, r)? - y(t - 2.0 * d, r)?;
            let drr = -y(t, r + 2.0 * d)? + 16.0 * y(t, r + d)? - 30.0 * c0 + 16.0 * y(t, r - d)? - y(t, r - 2.0 * d)?;
            Ok((dtt - drr) / (12.0 * d * d))
        };
        let coarse = box_at(d)?;
        let fine = box_at(0.5 * d)?;
        let extrapolated = (16.0 * fine - coarse) / 15.0;
        if (coarse - fine).abs() > 0.05 * extrapolated.abs() + 1e-10 * self.cfg.eps {
            return Err(LabError::FiniteDifference { t, r });
        }
        let ut = self.jet(t, r)?.y_t / r;
        Ok(extrapolated / r - self.cfg.ivp.c() * ut * ut)
    }
}

/// Sample times and radii for the decay diagnostics.
///
/// Times are uniform on `[0, 2.5/ε]` (the gluing region) and geometric up to
/// `t_end`. Radii at time `t` are uniform with step `cone_step` on
/// `[t − cone_width, t + R]` and geometric on the interior `[1, t − cone_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticGrid {
    pub t_end: f64,
    pub near_times: usize,
    pub far_times: usize,
    pub cone_width: f64,
    pub cone_step: f64,
    pub interior_points: usize,
}

impl DiagnosticGrid {
    pub fn for_config(cfg: &ApproxConfig) -> Self {
        Self {
            t_end: cfg.t_end(),
            near_times: 60,
            far_times: 60,
            cone_width: 8.0,
            cone_step: 0.02,
            interior_points: 60,
        }
    }

    pub fn times(&self, eps: f64) -> Vec<f64> {
        let split = (2.5 / eps).min(self.t_end);
        let mut ts: Vec<f64> =
            (0..self.near_times).map(|i| split * i as f64 / (self.near_times - 1).max(1) as f64).collect();
        if self.t_end > split && self.far_times > 0 {
            let ratio = (self.t_end / split).ln();
            ts.extend((1..=self.far_times).map(|i| split * (ratio * i as f64 / self.far_times as f64).exp()));
            if let Some(last) = ts.last_mut() {
                *last = last.min(self.t_end);
            }
        }
        ts
    }

    pub fn radii(&self, t: f64, support_radius: f64) -> Vec<f64> {
        let cone_lo = (t - self.cone_width).max(1.0);
        let mut rs = Vec::new();
        if cone_lo > 1.0 && self.interior_points > 1 {
            let ratio = cone_lo.ln();
            rs.extend(
                (0..self.interior_points - 1).map(|i| (ratio * i as f64 / (self.interior_points - 1) as f64).exp()),
            );
        }
        let hi = t + support_radius;
        let n = ((hi - cone_lo) / self.cone_step).ceil().max(1.0) as usize;
        rs.extend((0..=n).map(|i| cone_lo + (hi - cone_lo) * i as f64 / n as f64));
        rs
    }
}

/// Normalised sups of `u₁`, `∂u₁` and `E(u₁)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DecayReport {
    /// `sup ⟨t+r⟩ |u₁| / ε`
    pub s1: f64,
    /// `sup ⟨t+r⟩ ⟨t−r⟩ |∂u₁| / ε`
    pub s2: f64,
    /// `sup |E| ⟨t+r⟩^{2−λ+μ} ⟨t−r⟩^{1−μ} / ε^{1+λ}`
    pub s3: f64,
    /// `sup_t (1+t)^{3/2−λ} ‖E(t)‖_{L²} / ε^{1+λ}`
    pub s4: f64,
    /// `sup ⟨t+r⟩² |w − ε u₀| / (ε log(2/ε))` over `t/2 ≤ r ≤ t + R`,
    /// `2 ≤ t ≤ 2/ε`.
    pub matching_sup: f64,
    pub samples: usize,
}

impl DecayReport {
    fn merge(self, o: Self) -> Self {
        Self {
            s1: self.s1.max(o.s1),
            s2: self.s2.max(o.s2),
            s3: self.s3.max(o.s3),
            s4: self.s4.max(o.s4),
            matching_sup: self.matching_sup.max(o.matching_sup),
            samples: self.samples + o.samples,
        }
    }
}

/// Evaluates the four normalised sups and the matching sup on `grid`.
pub fn decay_diagnostics(field: &ApproxField, params: &WeightParams, grid: &DiagnosticGrid) -> Result<DecayReport> {
    params.validate_for_error_bounds()?;
    let cfg = field.config();
    if grid.t_end > cfg.t_end() * (1.0 + 1e-12) {
        return Err(LabError::TimeDomain { t: grid.t_end, t_max: cfg.t_end() });
    }
    let eps = cfg.eps;
    let (lambda, mu) = (params.lambda, params.mu);
    let big_r = cfg.ivp().support_radius();
    let norm_e = eps.powf(1.0 + lambda);
    let times = grid.times(eps);

    let per_time = |&t: &f64| -> Result<DecayReport> {
        let rs = grid.radii(t, big_r);
        let mut rep = DecayReport { samples: rs.len(), ..Default::default() };
        let mut e2r2 = Vec::with_capacity(rs.len());
        for &r in &rs {
            let j = field.jet(t, r)?;
            let u = j.y / r;
            let ut = j.y_t / r;
            let ur = j.y_r / r - j.y / (r * r);
            let e = j.box_y / r - cfg.ivp().c() * ut * ut;
            if !(u.is_finite() && ut.is_finite() && ur.is_finite() && e.is_finite()) {
                return Err(LabError::NonFinite { context: "approximate solution" });
            }
            let (jp, jm) = (jb(t + r), jb(t - r));
            rep.s1 = rep.s1.max(jp * u.abs() / eps);
            rep.s2 = rep.s2.max(jp * jm * ut.hypot(ur) / eps);
            rep.s3 = rep.s3.max(e.abs() * jp.powf(2.0 - lambda + mu) * jm.powf(1.0 - mu) / norm_e);
            e2r2.push(e * e * r * r);
            if t >= 2.0 && t <= 2.0 / eps && r >= 0.5 * t {
                let w = field.w_field(t, r)?;
                let lin = eps * cfg.ivp().linear_rv(t, r)? / r;
                rep.matching_sup = rep.matching_sup.max(jp * jp * (w - lin).abs() / (eps * (2.0 / eps).ln()));
            }
        }
        let l2 = (4.0 * std::f64::consts::PI * trapezoid_samples(&rs, &e2r2)).sqrt();
        rep.s4 = (1.0 + t).powf(1.5 - lambda) * l2 / norm_e;
        Ok(rep)
    };

    let reports: Vec<Result<DecayReport>> = times.par_iter().map(per_time).collect();
    reports.into_iter().try_fold(DecayReport::default(), |acc, r| Ok(acc.merge(r?)))
}

/// `sup ⟨r⟩ ⟨t−r⟩ |∂(u_num − u₁)|` over the stored band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchingError {
    pub sup: f64,
    pub samples: usize,
    /// `false` when the numerical solution blew up before `t_end`.
    pub covered: bool,
}

/// Solves the nonlinear problem up to `exp(τ₀/ε)` and compares its gradient
/// with `∂u₁` on the rows nearest to the diagnostic times, sampling about
/// `points_per_row` radii per row.
pub fn matching_error(
    field: &ApproxField,
    solver: &SolverConfig,
    grid: &DiagnosticGrid,
    points_per_row: usize,
) -> Result<MatchingError> {
    let cfg = field.config();
    let h = solver.h;
    let mut wanted: Vec<usize> = grid.times(cfg.eps).iter().map(|t| (t / h).floor() as usize).collect();
    wanted.dedup();
    let last_row = *wanted.last().unwrap_or(&0);
    let run_cfg = SolverConfig { t_max: (last_row as f64 + 2.0) * h, ..*solver };

    // (t, [(r, u_t, u_r)]) for each wanted row.
    type Samples = Vec<(f64, f64, f64)>;
    let mut picked: Vec<(f64, Samples)> = Vec::new();
    let mut next = 0;
    let report = solve_with(cfg.ivp(), &run_cfg, |row| {
        while next < wanted.len() && wanted[next] < row.n {
            next += 1;
        }
        if next >= wanted.len() || wanted[next] != row.n {
            return;
        }
        let len = row.v.len();
        let step = (len / points_per_row.max(1)).max(1);
        let mut pts = Vec::new();
        for k in (0..len).step_by(step) {
            let j = row.lo + k;
            let r = 1.0 + h * j as f64;
            let v_r = if k == 0 && j == 0 && len > 2 {
                (-3.0 * row.v[0] + 4.0 * row.v[1] - row.v[2]) / (2.0 * h)
            } else if k >= 1 && k + 1 < len {
                (row.v[k + 1] - row.v[k - 1]) / (2.0 * h)
            } else {
                continue;
            };
            let v = row.v[k];
            pts.push((r, row.v_t[k] / r, v_r / r - v / (r * r)));
        }
        picked.push((row.t, pts));
    })?;
    let covered = !report.blew_up() || report.t_num > last_row as f64 * h;

    let t_end = cfg.t_end();
    let per_row: Vec<Result<(f64, usize)>> = picked
        .par_iter()
        .map(|(t, pts)| {
            let t = t.min(t_end);
            let mut best = 0.0_f64;
            for &(r, ut, ur) in pts {
                let [at, ar] = field.du1(t, r)?;
                best = best.max(jb(r) * jb(t - r) * (ut - at).hypot(ur - ar));
            }
            Ok((best, pts.len()))
        })
        .collect();
    let mut out = MatchingError { sup: 0.0, samples: 0, covered };
    for r in per_row {
        let (s, n) = r?;
        out.sup = out.sup.max(s);
        out.samples += n;
    }
    Ok(out)
}
