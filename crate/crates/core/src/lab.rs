//! Experiment drivers shared by the command-line tool and the acceptance
//! suite: `τ*` comparison, lifespan sweeps with extrapolation fits, lower
//! bound checks, approximation-error scaling and radiation-field samples.
//!
//! Every driver is deterministic for a given configuration.

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approximator::{decay_diagnostics, matching_error, ApproxConfig, ApproxField, DecayReport, DiagnosticGrid};
use crate::error::{LabError, Result};
use crate::profile::{tau_star_general, tau_star_radial, NonlinCoeffs, ProfileContext, TauStar};
use crate::radiation::{radiation_field_exterior_radial, Direction, RadialProfile, RadiationField};
use crate::solver::{
    duhamel_residual, lower_bound_rhs, solve, BlowupReport, BlowupTrigger, DuhamelSummary, RadialIvp, RowStorage,
    SolverConfig,
};
use crate::weights::WeightParams;

/// Value of the unit bump at its midpoint, `e⁻⁴`.
const BUMP_PEAK: f64 = 0.018_315_638_888_734_18;

/// A radial data profile as written in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileSpec {
    Zero,
    /// `peak · bump((r − a)/(b − a)) / bump(1/2)`, so `peak` is the maximum.
    Bump {
        support: [f64; 2],
        peak: f64,
    },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<RadialProfile> {
        match self {
            Self::Zero => Ok(RadialProfile::zero()),
            Self::Bump { support: [a, b], peak } => {
                if !peak.is_finite() {
                    return Err(LabError::InvalidParameter(format!("bump peak {peak} must be finite")));
                }
                if *peak == 0.0 {
                    return Ok(RadialProfile::zero());
                }
                RadialProfile::bump(*a, *b, peak / BUMP_PEAK)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatumConfig {
    pub f0: ProfileSpec,
    pub f1: ProfileSpec,
}

impl Default for DatumConfig {
    /// `f₀ = 0`, `f₁` a bump on `[2, 4]` with maximum 1.
    fn default() -> Self {
        Self { f0: ProfileSpec::Zero, f1: ProfileSpec::Bump { support: [2.0, 4.0], peak: 1.0 } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nonlinearity {
    /// `c (∂ₜu)²`
    DtSquared,
    /// `(∂ₜu)² − |∇u|²`
    Null,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Starting grid step; halved until `T` changes by less than `tolerance`.
    pub h_initial: f64,
    pub max_halvings: usize,
    pub tolerance: f64,
    /// Horizon as a multiple of `R exp(τ*/ε)`.
    pub horizon_factor: f64,
    pub upper_bound_slack: f64,
    pub max_relative_gap: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            h_initial: 0.04,
            max_halvings: 4,
            tolerance: 0.01,
            horizon_factor: 2.0,
            upper_bound_slack: 1.05,
            max_relative_gap: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundCheckConfig {
    pub eps: f64,
    pub h: f64,
    pub t_samples: usize,
    pub s_samples: usize,
    pub relative_slack: f64,
    /// Absolute slack in units of `h ·` data scale.
    pub h_slack: f64,
}

impl Default for BoundCheckConfig {
    fn default() -> Self {
        Self { eps: 0.3, h: 0.02, t_samples: 50, s_samples: 50, relative_slack: 0.05, h_slack: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproxErrorConfig {
    pub eps_list: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub h: f64,
    /// `τ₀` as a fraction of `τ*`.
    pub tau0_fraction: f64,
    pub points_per_row: usize,
    pub min_order: f64,
    pub max_growth: f64,
}

impl Default for ApproxErrorConfig {
    fn default() -> Self {
        Self {
            eps_list: vec![0.4, 0.2, 0.1],
            lambda: 0.3,
            mu: 0.25,
            h: 0.02,
            tau0_fraction: 0.7,
            points_per_row: 400,
            min_order: 1.2,
            max_growth: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiationSampleConfig {
    pub tau_fractions: Vec<f64>,
    pub s_points: usize,
}

impl Default for RadiationSampleConfig {
    fn default() -> Self {
        Self { tau_fractions: vec![0.0, 0.25, 0.5, 0.75, 0.9], s_points: 601 }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datum: DatumConfig,
    pub c: f64,
    pub nonlinearity: Nonlinearity,
    /// Strictly decreasing, each in `(0, 1/2]`.
    pub eps_list: Vec<f64>,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    pub sweep: SweepConfig,
    pub bound_check: BoundCheckConfig,
    pub approx: ApproxErrorConfig,
    pub radiation: RadiationSampleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datum: DatumConfig::default(),
            c: 1.0,
            nonlinearity: Nonlinearity::DtSquared,
            eps_list: vec![0.5, 0.42, 0.35, 0.29, 0.24, 0.20],
            solver: SolverConfig::default(),
            output_dir: PathBuf::from("out"),
            sweep: SweepConfig::default(),
            bound_check: BoundCheckConfig::default(),
            approx: ApproxErrorConfig::default(),
            radiation: RadiationSampleConfig::default(),
        }
    }
}

fn check_eps_list(list: &[f64], what: &str) -> Result<()> {
    if list.is_empty() {
        return Err(LabError::InvalidParameter(format!("{what} is empty")));
    }
    if let Some(bad) = list.iter().find(|e| !(**e > 0.0 && **e <= 0.5)) {
        return Err(LabError::InvalidParameter(format!("{what} entry {bad} not in (0, 1/2]")));
    }
    if list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::InvalidParameter(format!("{what} must be strictly decreasing")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.c.is_finite() {
            return Err(LabError::InvalidParameter(format!("c = {} must be finite", self.c)));
        }
        check_eps_list(&self.eps_list, "eps_list")?;
        check_eps_list(&self.approx.eps_list, "approx.eps_list")?;
        self.datum.f0.build()?;
        self.datum.f1.build()?;
        let ivp = self.ivp(self.eps_list[0])?;
        self.solver.validate(&ivp)?;
        let sw = &self.sweep;
        if !(sw.h_initial > 0.0 && sw.tolerance > 0.0 && sw.horizon_factor >= 1.0 && sw.upper_bound_slack >= 1.0) {
            return Err(LabError::InvalidParameter("invalid [sweep] settings".into()));
        }
        let bc = &self.bound_check;
        if !(bc.eps > 0.0 && bc.eps <= 0.5 && bc.h > 0.0 && bc.t_samples >= 2 && bc.s_samples >= 2) {
            return Err(LabError::InvalidParameter("invalid [bound_check] settings".into()));
        }
        WeightParams::new(0.0, 0.0, 1.0, self.approx.mu, self.approx.lambda)?.validate_for_error_bounds()?;
        if !(self.approx.tau0_fraction > 0.0 && self.approx.tau0_fraction < 1.0 && self.approx.h > 0.0) {
            return Err(LabError::InvalidParameter("invalid [approx] settings".into()));
        }
        if self.radiation.tau_fractions.iter().any(|f| !(0.0..1.0).contains(f)) || self.radiation.s_points < 2 {
            return Err(LabError::InvalidParameter("invalid [radiation] settings".into()));
        }
        Ok(())
    }

    pub fn f0(&self) -> Result<RadialProfile> {
        self.datum.f0.build()
    }

    pub fn f1(&self) -> Result<RadialProfile> {
        self.datum.f1.build()
    }

    pub fn coeffs(&self) -> NonlinCoeffs {
        match self.nonlinearity {
            Nonlinearity::DtSquared => NonlinCoeffs::time_derivative_squared(self.c),
            Nonlinearity::Null => NonlinCoeffs::null_form(),
        }
    }

    /// The problem at `eps`, with `u ↦ −u` applied when `c < 0`.
    pub fn ivp(&self, eps: f64) -> Result<RadialIvp> {
        Ok(RadialIvp::new(self.c, eps, &self.f0()?, &self.f1()?)?.normalized())
    }

    /// `f₀ = 0` and `c f₁ ≥ 0`: the regime where `ε log T_ε → τ*`.
    pub fn exact_law_applies(&self) -> Result<bool> {
        let f0 = self.f0()?;
        let f1 = self.f1()?;
        if !f0.is_zero() || f1.is_zero() || self.nonlinearity != Nonlinearity::DtSquared {
            return Ok(false);
        }
        let (a, b) = f1.support().expect("non-zero profile has a support");
        Ok((0..=2000).all(|i| self.c * f1.eval(a + (b - a) * i as f64 / 2000.0) >= 0.0))
    }

    /// `τ*` of the (sign-normalised) datum from the general definition.
    pub fn tau_star(&self) -> Result<TauStar> {
        let field = radiation_field_exterior_radial(&self.f0()?, &self.f1()?);
        Ok(tau_star_general(&field, &self.coeffs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauStarReport {
    pub general: TauStar,
    /// `None` when the closed form does not apply (null form).
    pub radial: Option<TauStar>,
    pub relative_difference: Option<f64>,
    pub pass: bool,
}

/// `τ*` by the general scan and by the radial closed form.
pub fn cmd_tau_star(cfg: &ExperimentConfig) -> Result<TauStarReport> {
    cfg.validate()?;
    let general = cfg.tau_star()?;
    let radial = match cfg.nonlinearity {
        Nonlinearity::DtSquared if cfg.f0()?.is_zero() => Some(tau_star_radial(cfg.c, &cfg.f1()?)),
        _ => None,
    };
    let relative_difference = radial.map(|r| r.relative_difference(&general));
    let pass = relative_difference.is_none_or(|d| d <= 1e-6);
    Ok(TauStarReport { general, radial, relative_difference, pass })
}

/// One row of `lifespan.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifespanRecord {
    pub eps: f64,
    pub h: f64,
    #[serde(rename = "T_num")]
    pub t_num: f64,
    #[serde(rename = "eps_log_T")]
    pub eps_log_t: f64,
    pub grid_converged: bool,
    pub threshold_robust: bool,
}

/// A [`LifespanRecord`] with the diagnostics behind its flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifespanPoint {
    pub record: LifespanRecord,
    pub report: BlowupReport,
    /// `R exp(τ*/ε)`.
    pub upper_bound: f64,
    pub within_upper_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub tau_hat: f64,
    pub slope: f64,
    pub residual_rms: f64,
    pub tau_star_reference: f64,
    pub relative_gap: f64,
    pub points_used: usize,
    pub exact_law_applicable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub points: Vec<LifespanPoint>,
    pub fit: Option<FitReport>,
    pub tau_star: TauStar,
    pub pass: bool,
}

/// Least-squares line `y = a + b x`; returns `(a, b, rms residual)`.
pub fn affine_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum::<f64>() / nf).sqrt();
    Some((a, b, rms))
}

/// Converged blow-up time at one `ε` by repeated grid halving.
pub fn converged_lifespan(cfg: &ExperimentConfig, eps: f64, tau_star: TauStar) -> Result<LifespanPoint> {
    let ivp = cfg.ivp(eps)?;
    let upper_bound = ivp.support_radius() * (tau_star.value() / eps).exp();
    let t_max = if upper_bound.is_finite() { upper_bound * cfg.sweep.horizon_factor } else { cfg.solver.t_max };
    let run = |h: f64| -> Result<BlowupReport> {
        let solver = SolverConfig { h, t_max, storage: RowStorage::None, ..cfg.solver };
        Ok(solve(&ivp, &solver)?.1)
    };
    let mut h = cfg.sweep.h_initial;
    let mut coarse = run(h)?;
    let mut fine = coarse;
    let mut change = f64::INFINITY;
    for _ in 0..cfg.sweep.max_halvings {
        fine = run(0.5 * h)?;
        h *= 0.5;
        change = (coarse.t_num - fine.t_num).abs() / coarse.t_num;
        if change < cfg.sweep.tolerance {
            break;
        }
        coarse = fine;
    }
    let blew_up = fine.trigger != BlowupTrigger::None;
    let report = BlowupReport { grid_convergence: Some(change), ..fine };
    let record = LifespanRecord {
        eps,
        h,
        t_num: fine.t_num,
        eps_log_t: eps * fine.t_num.ln(),
        grid_converged: blew_up && change < cfg.sweep.tolerance,
        threshold_robust: blew_up && fine.threshold_sensitivity < cfg.sweep.tolerance,
    };
    Ok(LifespanPoint {
        record,
        report,
        upper_bound,
        within_upper_bound: fine.t_num <= upper_bound * cfg.sweep.upper_bound_slack,
    })
}

/// Lifespan sweep over `cfg.eps_list` with the affine extrapolation of
/// `ε log T_ε` to `ε = 0`.
pub fn cmd_lifespan_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let tau_star = cfg.tau_star()?;
    let points: Vec<LifespanPoint> =
        cfg.eps_list.par_iter().map(|&eps| converged_lifespan(cfg, eps, tau_star)).collect::<Result<_>>()?;

    let exact = cfg.exact_law_applies()?;
    let used: Vec<&LifespanRecord> =
        points.iter().map(|p| &p.record).filter(|r| r.grid_converged && r.threshold_robust).collect();
    let xs: Vec<f64> = used.iter().map(|r| r.eps).collect();
    let ys: Vec<f64> = used.iter().map(|r| r.eps_log_t).collect();
    let fit = affine_fit(&xs, &ys).map(|(a, b, rms)| {
        let reference = tau_star.value();
        FitReport {
            tau_hat: a,
            slope: b,
            residual_rms: rms,
            tau_star_reference: reference,
            relative_gap: (a - reference).abs() / reference,
            points_used: used.len(),
            exact_law_applicable: exact,
        }
    });
    let bounds_ok = points.iter().all(|p| p.within_upper_bound);
    let law_ok = !exact || fit.as_ref().is_some_and(|f| f.relative_gap <= cfg.sweep.max_relative_gap);
    Ok(SweepReport { pass: bounds_ok && law_ok, points, fit, tau_star })
}

/// A single solve at `eps` with `cfg.solver`.
pub fn cmd_solve(cfg: &ExperimentConfig, eps: f64) -> Result<(crate::solver::SolutionField, BlowupReport)> {
    cfg.validate()?;
    solve(&cfg.ivp(eps)?, &cfg.solver)
}

/// One `(t, s)` sample of the domination check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominationSample {
    pub t: f64,
    pub s: f64,
    pub u_num: f64,
    pub rhs: f64,
    /// `max(0, rhs − slack − U) / data scale`.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub eps: f64,
    pub h: f64,
    pub t_num: f64,
    pub samples: Vec<DominationSample>,
    pub violations: usize,
    pub max_violation: f64,
    pub duhamel: DuhamelSummary,
    pub pass: bool,
}

/// `U_num(t, s) ≥ rhs(t, s) − κ|rhs| − C h · scale` on a `(t, s)` grid of
/// pre-blow-up rows, plus the Duhamel residual at the same points.
pub fn cmd_bound_check(cfg: &ExperimentConfig) -> Result<BoundCheckReport> {
    cfg.validate()?;
    let bc = &cfg.bound_check;
    let ivp = cfg.ivp(bc.eps)?;
    let tau_star = cfg.tau_star()?;
    let horizon = ivp.support_radius() * (tau_star.value() / bc.eps).exp() * cfg.sweep.horizon_factor;
    let t_max = if horizon.is_finite() { horizon } else { cfg.solver.t_max };
    // Every row: the Duhamel trapezoid crosses the blow-up ridge and needs the full time resolution.
    let solver = SolverConfig { h: bc.h, t_max, storage: RowStorage::Stride(1), ..cfg.solver };
    let (sol, report) = solve(&ivp, &solver)?;
    let h = bc.h;
    let scale = ivp.data_scale();
    let slack_abs = bc.h_slack * h * scale;

    let rows = sol.rows();
    let t_stop = if report.blew_up() { report.last_stable_t() } else { rows.last().map_or(0.0, |r| r.t) };
    let pre: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].t < t_stop).collect();
    let mut picks: Vec<usize> = (0..bc.t_samples)
        .map(|i| pre[((pre.len() - 1) as f64 * i as f64 / (bc.t_samples - 1) as f64).round() as usize])
        .collect();
    picks.dedup();
    let big_r = ivp.support_radius();
    let s_values: Vec<f64> = (0..bc.s_samples)
        .map(|i| {
            let s = 1.0 + (big_r - 1.0) * i as f64 / (bc.s_samples - 1) as f64;
            1.0 + ((s - 1.0) / h).round() * h
        })
        .collect();

    let mut samples = Vec::with_capacity(picks.len() * s_values.len());
    let mut points = Vec::with_capacity(samples.capacity());
    for &k in &picks {
        let t = rows[k].t;
        for &s in &s_values {
            let Some((_, u_num)) = sol.sample(k, t + s) else { continue };
            let rhs = lower_bound_rhs(&ivp, t, s);
            let violation = if rhs.is_finite() {
                ((rhs - bc.relative_slack * rhs.abs() - slack_abs) - u_num).max(0.0) / scale.max(f64::MIN_POSITIVE)
            } else {
                f64::INFINITY
            };
            samples.push(DominationSample { t, s, u_num, rhs, violation });
            points.push((t, t + s));
        }
    }
    let duhamel = duhamel_residual(&ivp, &sol, &points)?;
    let violations = samples.iter().filter(|s| s.violation > 0.0).count();
    let max_violation = samples.iter().fold(0.0_f64, |m, s| m.max(s.violation));
    Ok(BoundCheckReport {
        eps: bc.eps,
        h,
        t_num: report.t_num,
        pass: violations == 0 && !samples.is_empty(),
        samples,
        violations,
        max_violation,
        duhamel,
    })
}

/// One row of `approx.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxRecord {
    pub eps: f64,
    pub lambda: f64,
    pub mu: f64,
    #[serde(rename = "S1")]
    pub s1: f64,
    #[serde(rename = "S2")]
    pub s2: f64,
    #[serde(rename = "S3")]
    pub s3: f64,
    #[serde(rename = "S4")]
    pub s4: f64,
    pub weighted_err: f64,
    /// Least-squares slope of `log weighted_err` against `log ε` over the
    /// whole list.
    pub order_est: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxReport {
    pub records: Vec<ApproxRecord>,
    pub diagnostics: Vec<DecayReport>,
    pub order: f64,
    /// `S(ε_{k+1}) ≤ max_growth · S(ε_k)` for all four sups.
    pub scaling_ok: bool,
    pub pass: bool,
}

/// Normalised sups of `u₁` and `E(u₁)`, and the weighted distance between
/// the numerical solution and `u₁`, across `cfg.approx.eps_list`.
pub fn cmd_approx_error(cfg: &ExperimentConfig) -> Result<ApproxReport> {
    cfg.validate()?;
    let ac = &cfg.approx;
    let params = WeightParams::new(0.0, 0.0, 1.0, ac.mu, ac.lambda)?;
    let rows: Vec<(DecayReport, f64)> = ac
        .eps_list
        .iter()
        .map(|&eps| -> Result<(DecayReport, f64)> {
            let ivp = cfg.ivp(eps)?;
            let base = ApproxConfig::new(&ivp)?;
            let tau0 = match base.profile().tau_star() {
                TauStar::Finite(t) => ac.tau0_fraction * t,
                TauStar::Infinite => base.tau0,
            };
            let field = ApproxField::new(base.with_tau0(tau0)?);
            let grid = DiagnosticGrid::for_config(field.config());
            let diag = decay_diagnostics(&field, &params, &grid)?;
            let solver = SolverConfig { h: ac.h, storage: RowStorage::None, ..cfg.solver };
            let err = matching_error(&field, &solver, &grid, ac.points_per_row)?;
            Ok((diag, err.sup))
        })
        .collect::<Result<_>>()?;

    let positive: Vec<(f64, f64)> =
        ac.eps_list.iter().zip(&rows).filter(|(_, r)| r.1 > 0.0).map(|(e, r)| (e.ln(), r.1.ln())).collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
    let order = affine_fit(&lx, &ly).map_or(f64::NAN, |(_, b, _)| b);

    let records: Vec<ApproxRecord> = ac
        .eps_list
        .iter()
        .zip(&rows)
        .map(|(&eps, (d, err))| ApproxRecord {
            eps,
            lambda: ac.lambda,
            mu: ac.mu,
            s1: d.s1,
            s2: d.s2,
            s3: d.s3,
            s4: d.s4,
            weighted_err: *err,
            order_est: order,
        })
        .collect();
    let grows = |a: f64, b: f64| b <= ac.max_growth * a;
    let scaling_ok = records.windows(2).all(|w| {
        grows(w[0].s1, w[1].s1) && grows(w[0].s2, w[1].s2) && grows(w[0].s3, w[1].s3) && grows(w[0].s4, w[1].s4)
    });
    let pass = scaling_ok && order >= ac.min_order;
    Ok(ApproxReport { records, diagnostics: rows.iter().map(|r| r.0).collect(), order, scaling_ok, pass })
}

/// One row of the radiation/profile sample table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiationSample {
    pub tau: f64,
    pub s: f64,
    #[serde(rename = "F_plus")]
    pub f_plus: f64,
    #[serde(rename = "P")]
    pub big_p: f64,
    pub p: f64,
}

/// `(s, F₊, P, p)` on `[2 − R − 1, R + 1]` for each configured `τ` slice
/// (given as fractions of `τ*`; absolute values when `τ*` is infinite).
pub fn cmd_radiation_sample(cfg: &ExperimentConfig) -> Result<Vec<RadiationSample>> {
    cfg.validate()?;
    let field = Arc::new(radiation_field_exterior_radial(&cfg.f0()?, &cfg.f1()?));
    let ctx = ProfileContext::new(field.clone(), cfg.coeffs());
    let big_r = field.support_radius();
    let (lo, hi) = (1.0 - big_r, big_r + 1.0);
    let theta = Direction::E3;
    let mut out = Vec::new();
    for &frac in &cfg.radiation.tau_fractions {
        let tau = match ctx.tau_star() {
            TauStar::Finite(t) => frac * t,
            TauStar::Infinite => frac,
        };
        for i in 0..cfg.radiation.s_points {
            let s = lo + (hi - lo) * i as f64 / (cfg.radiation.s_points - 1) as f64;
            out.push(RadiationSample {
                tau,
                s,
                f_plus: field.value(s),
                big_p: ctx.amplitude(s, &theta, tau)?,
                p: ctx.primitive(s, &theta, tau)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_datum_has_unit_peak() {
        let f1 = ExperimentConfig::default().f1().unwrap();
        assert!((f1.eval(3.0) - 1.0).abs() < 1e-14);
        assert!(BUMP_PEAK == crate::weights::smooth_bump(0.5));
    }

    #[test]
    fn eps_list_validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.eps_list = vec![0.3, 0.3];
        assert!(cfg.validate().is_err());
        cfg.eps_list = vec![0.6, 0.3];
        assert!(cfg.validate().is_err());
        cfg.eps_list = vec![];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn affine_fit_recovers_line() {
        let xs = [0.1, 0.2, 0.3, 0.5];
        let ys: Vec<f64> = xs.iter().map(|x| 1.25 + 0.5 * x).collect();
        let (a, b, rms) = affine_fit(&xs, &ys).unwrap();
        assert!((a - 1.25).abs() < 1e-14 && (b - 0.5).abs() < 1e-14 && rms < 1e-14);
        assert!(affine_fit(&[1.0], &[2.0]).is_none());
    }

    #[test]
    fn tau_star_reports() {
        let cfg = ExperimentConfig::default();
        let r = cmd_tau_star(&cfg).unwrap();
        assert!(r.pass && r.relative_difference.unwrap() <= 1e-6);
        let null = ExperimentConfig { nonlinearity: Nonlinearity::Null, ..cfg.clone() };
        let r = cmd_tau_star(&null).unwrap();
        assert_eq!(r.general, TauStar::Infinite);
        assert!(r.radial.is_none());
        let zero = ExperimentConfig { datum: DatumConfig { f0: ProfileSpec::Zero, f1: ProfileSpec::Zero }, ..cfg };
        assert_eq!(cmd_tau_star(&zero).unwrap().general, TauStar::Infinite);
    }

    #[test]
    fn single_eps_smoke_sweep() {
        let cfg = ExperimentConfig { eps_list: vec![0.5], ..Default::default() };
        let rep = cmd_lifespan_sweep(&cfg).unwrap();
        let p = &rep.points[0];
        assert!(p.record.t_num > 0.0 && p.within_upper_bound);
        assert!(p.record.grid_converged && p.record.threshold_robust);
        assert!(rep.fit.is_none());
    }

    #[test]
    fn sign_symmetry_gives_identical_records() {
        let cfg = ExperimentConfig { eps_list: vec![0.5, 0.45], ..Default::default() };
        let flipped = ExperimentConfig {
            c: -1.0,
            datum: DatumConfig { f0: ProfileSpec::Zero, f1: ProfileSpec::Bump { support: [2.0, 4.0], peak: -1.0 } },
            ..cfg.clone()
        };
        let a = cmd_lifespan_sweep(&cfg).unwrap();
        let b = cmd_lifespan_sweep(&flipped).unwrap();
        let recs = |r: &SweepReport| r.points.iter().map(|p| p.record).collect::<Vec<_>>();
        assert_eq!(recs(&a), recs(&b));
    }

    #[test]
    fn radiation_samples_start_from_field() {
        let cfg = ExperimentConfig {
            radiation: RadiationSampleConfig { tau_fractions: vec![0.0, 0.5], s_points: 41 },
            ..Default::default()
        };
        let rows = cmd_radiation_sample(&cfg).unwrap();
        assert_eq!(rows.len(), 82);
        for r in &rows[..41] {
            assert_eq!(r.big_p, r.f_plus);
        }
        assert!(rows.iter().all(|r| r.s < 4.0 || (r.p == 0.0 && r.big_p == 0.0)));
    }
}
