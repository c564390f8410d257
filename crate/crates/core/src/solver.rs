//! Exact linear representation and a characteristic-grid solver for the
//! radial mixed problem
//!
//! ```text
//! ∂ₜ²v − ∂ᵣ²v = c (∂ₜv)² / r,   v(t, 1) = 0,
//! v(0, r) = ε r f₀*(r),   ∂ₜv(0, r) = ε r f₁*(r),
//! ```
//!
//! for `v = r u*`, exterior to the unit ball.
//!
//! The grid has `dt = dr = h`, `r_j = 1 + j h`, `t_n = n h`. Over one grid
//! diamond the homogeneous part is exact:
//! `v(N) = v(E) + v(W) − v(S) + h² S(center)`, with the source evaluated at
//! the diamond center using `∂ₜv ≈ (v(N) − v(S)) / 2h` closed by Picard
//! iteration.
//!
//! Rows may be truncated to a band `r ∈ [max(1, t − W), t + R]`. The left
//! edge moves outward at unit speed, so the backward light cone of every
//! band point stays in the band and the truncation never feeds back.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LabError, Result};
use crate::radiation::{check_extend, CheckExtension, RadialProfile};

/// The radial initial-boundary value problem.
#[derive(Debug, Clone)]
pub struct RadialIvp {
    c: f64,
    eps: f64,
    f0: CheckExtension,
    f1: CheckExtension,
    support_radius: f64,
}

impl RadialIvp {
    pub fn new(c: f64, eps: f64, f0: &RadialProfile, f1: &RadialProfile) -> Result<Self> {
        if !c.is_finite() {
            return Err(LabError::InvalidParameter(format!("c = {c} must be finite")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(LabError::InvalidParameter(format!("eps = {eps} must be positive")));
        }
        let support_radius = f0.support_upper().max(f1.support_upper());
        Ok(Self { c, eps, f0: check_extend(f0), f1: check_extend(f1), support_radius })
    }

    /// The same problem for `−u`: `(c, f₀, f₁) ↦ (−c, −f₀, −f₁)`.
    pub fn negated(&self) -> Self {
        Self {
            c: -self.c,
            eps: self.eps,
            f0: check_extend(&self.f0.source().scaled(-1.0)),
            f1: check_extend(&self.f1.source().scaled(-1.0)),
            support_radius: self.support_radius,
        }
    }

    /// `self` if `c ≥ 0`, otherwise [`negated`](Self::negated).
    pub fn normalized(&self) -> Self {
        if self.c < 0.0 {
            self.negated()
        } else {
            self.clone()
        }
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.c, eps, self.f0.source(), self.f1.source())
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn f0(&self) -> &RadialProfile {
        self.f0.source()
    }

    pub fn f1(&self) -> &RadialProfile {
        self.f1.source()
    }

    pub fn check_f0(&self) -> &CheckExtension {
        &self.f0
    }

    pub fn check_f1(&self) -> &CheckExtension {
        &self.f1
    }

    /// `R`, the upper end of the data support (1 for zero data).
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// `ε · max(max |r f₀*|, max |r f₁*|)`.
    pub fn data_scale(&self) -> f64 {
        self.eps * self.f0.source().max_abs_weighted().max(self.f1.source().max_abs_weighted())
    }

    /// `r u₀*(t, r)` for the unscaled data, `u₀` the linear solution.
    pub fn linear_rv(&self, t: f64, r: f64) -> Result<f64> {
        let f0 = 0.5 * (self.f0.eval(r - t) + self.f0.eval(r + t));
        Ok(f0 + 0.5 * self.f1.integral(r - t, r + t)?)
    }

    /// `∂ₜ(r u₀*)`.
    pub fn linear_rv_t(&self, t: f64, r: f64) -> f64 {
        0.5 * (self.f0.deriv(r + t) - self.f0.deriv(r - t)) + 0.5 * (self.f1.eval(r + t) + self.f1.eval(r - t))
    }

    /// `∂ᵣ(r u₀*)`.
    pub fn linear_rv_r(&self, t: f64, r: f64) -> f64 {
        0.5 * (self.f0.deriv(r + t) + self.f0.deriv(r - t)) + 0.5 * (self.f1.eval(r + t) - self.f1.eval(r - t))
    }

    /// `∂ₜ²(r u₀*)`.
    pub fn linear_rv_tt(&self, t: f64, r: f64) -> f64 {
        0.5 * (self.f0.deriv2(r + t) + self.f0.deriv2(r - t)) + 0.5 * (self.f1.deriv(r + t) - self.f1.deriv(r - t))
    }
}

fn check_point(t: f64, r: f64) -> Result<()> {
    if !(t >= 0.0) || !(r >= 1.0) {
        return Err(LabError::InvalidParameter(format!("(t={t}, r={r}) outside t ≥ 0, r ≥ 1")));
    }
    Ok(())
}

/// The unscaled linear solution `u₀*(t, r)` (data `f₀`, `f₁`, no `ε`).
pub fn linear_exact(ivp: &RadialIvp, t: f64, r: f64) -> Result<f64> {
    check_point(t, r)?;
    Ok(ivp.linear_rv(t, r)? / r)
}

/// `[u₀*, ∂ₜu₀*, ∂ᵣu₀*]` at `(t, r)`.
pub fn linear_exact_derivs(ivp: &RadialIvp, t: f64, r: f64) -> Result<[f64; 3]> {
    check_point(t, r)?;
    let v = ivp.linear_rv(t, r)?;
    let vr = ivp.linear_rv_r(t, r);
    Ok([v / r, ivp.linear_rv_t(t, r) / r, (vr - v / r) / r])
}

/// Truncation of the computed rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandWindow {
    /// Every row covers `[1, t + R]`.
    Full,
    /// `W = 2R`.
    Auto,
    Width(f64),
}

impl Serialize for BandWindow {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Full => s.serialize_str("full"),
            Self::Auto => s.serialize_str("auto"),
            Self::Width(w) => s.serialize_f64(*w),
        }
    }
}

impl<'de> Deserialize<'de> for BandWindow {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Width(f64),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Width(w) => Ok(Self::Width(w)),
            Repr::Name(n) => match n.as_str() {
                "full" => Ok(Self::Full),
                "auto" => Ok(Self::Auto),
                other => Err(serde::de::Error::custom(format!(
                    "band_window `{other}`: expected a width, \"full\" or \"auto\""
                ))),
            },
        }
    }
}

/// Which rows [`solve`] keeps in the [`SolutionField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStorage {
    None,
    /// Every `k`-th row.
    Stride(usize),
    /// A stride keeping at most [`AUTO_STORED_VALUES`] grid values.
    Auto,
}

pub const AUTO_STORED_VALUES: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub h: f64,
    pub band_window: BandWindow,
    /// Bound on `|∂ₜv|`; `None` selects `10⁴ · ε · max |r f₁*|`.
    pub blowup_threshold: Option<f64>,
    pub picard_iters: usize,
    pub picard_tol: f64,
    pub t_max: f64,
    pub storage: RowStorage,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h: 0.02,
            band_window: BandWindow::Auto,
            blowup_threshold: None,
            picard_iters: 3,
            picard_tol: 1e-12,
            t_max: 100.0,
            storage: RowStorage::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, ivp: &RadialIvp) -> Result<()> {
        let bad = |m: String| Err(LabError::InvalidParameter(m));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h = {} must be positive", self.h));
        }
        if let Some(b) = self.blowup_threshold {
            if !(b > 0.0) {
                return bad(format!("blowup_threshold = {b} must be positive"));
            }
        }
        if let BandWindow::Width(w) = self.band_window {
            if !(w >= 2.0 * ivp.support_radius()) {
                return bad(format!("band_window = {w} must be ≥ 2R = {}", 2.0 * ivp.support_radius()));
            }
        }
        if self.picard_iters == 0 {
            return bad("picard_iters must be ≥ 1".into());
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad(format!("t_max = {} must be positive and finite", self.t_max));
        }
        if self.storage == RowStorage::Stride(0) {
            return bad("storage stride must be ≥ 1".into());
        }
        Ok(())
    }

    /// The threshold actually used for `ivp`.
    pub fn threshold_for(&self, ivp: &RadialIvp) -> f64 {
        self.blowup_threshold
            .unwrap_or_else(|| 1e4 * ivp.eps() * ivp.f1().max_abs_weighted().max(ivp.f0().max_abs_weighted()))
    }

    fn band_cells(&self, ivp: &RadialIvp) -> Option<usize> {
        let w = match self.band_window {
            BandWindow::Full => return None,
            BandWindow::Auto => 2.0 * ivp.support_radius(),
            BandWindow::Width(w) => w,
        };
        Some((w / self.h).round() as usize)
    }
}

/// One stored time row.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredRow {
    pub n: usize,
    pub t: f64,
    /// Grid index of the first entry.
    pub lo: usize,
    pub v: Vec<f64>,
    pub v_t: Vec<f64>,
}

impl StoredRow {
    pub fn hi(&self) -> usize {
        self.lo + self.v.len() - 1
    }
}

/// Rows of `v = r u*` and `∂ₜv` on the grid `r_j = 1 + j h`. Entries beyond
/// a row's last index are zero (finite propagation).
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    h: f64,
    stride: usize,
    rows: Vec<StoredRow>,
}

impl SolutionField {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn rows(&self) -> &[StoredRow] {
        &self.rows
    }

    pub fn r_of(&self, j: usize) -> f64 {
        1.0 + self.h * j as f64
    }

    /// Index of the stored row at time `t`, if `t` is a stored row time.
    pub fn row_index(&self, t: f64) -> Option<usize> {
        let n = (t / self.h).round() as usize;
        if (n as f64 * self.h - t).abs() > 1e-9 * self.h.max(t) {
            return None;
        }
        self.rows.binary_search_by_key(&n, |r| r.n).ok()
    }

    /// `(v, ∂ₜv)` on stored row `k` at radius `r`, linear in `r` between grid
    /// points. `None` when `r` lies left of the band.
    pub fn sample(&self, k: usize, r: f64) -> Option<(f64, f64)> {
        let row = &self.rows[k];
        let x = (r - 1.0) / self.h;
        if x < row.lo as f64 - 1e-9 || r < 1.0 {
            return None;
        }
        let j = (x.floor() as usize).max(row.lo);
        let u = (x - j as f64).clamp(0.0, 1.0);
        let get = |j: usize, vals: &[f64]| if j > row.hi() { 0.0 } else { vals[j - row.lo] };
        let lerp = |vals: &[f64]| (1.0 - u) * get(j, vals) + u * get(j + 1, vals);
        Some((lerp(&row.v), lerp(&row.v_t)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowupTrigger {
    Threshold,
    PicardDivergence,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupReport {
    /// Midpoint of the last stable row and the triggering row, or `t_max`.
    pub t_num: f64,
    pub trigger: BlowupTrigger,
    /// `|T(2B) − T(B)| / T(B)`, from the same run. Zero when the Picard
    /// closure diverges before either threshold is reached, since doubling
    /// `B` then leaves `T` unchanged.
    pub threshold_sensitivity: f64,
    /// `|T(h) − T(h/2)| / T(h)`; filled in by callers that run both grids.
    pub grid_convergence: Option<f64>,
    /// Detection uncertainty (`±h/2` around `t_num`).
    pub uncertainty: f64,
    pub threshold: f64,
    pub max_abs_vt: f64,
}

impl BlowupReport {
    pub fn blew_up(&self) -> bool {
        self.trigger != BlowupTrigger::None
    }

    /// The last row time before the trigger.
    pub fn last_stable_t(&self) -> f64 {
        self.t_num - self.uncertainty
    }
}

/// A completed row handed to [`solve_with`] observers.
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    pub n: usize,
    pub t: f64,
    pub lo: usize,
    pub v: &'a [f64],
    pub v_t: &'a [f64],
}

/// Outcome of the Picard closure in one cell.
enum Cell {
    Ok(f64),
    Diverged,
}

#[inline]
fn picard(a: f64, beta: f64, iters: usize, tol: f64) -> Cell {
    // q = a + β q²
    let mut q = a;
    let mut last_step = f64::INFINITY;
    for _ in 0..iters {
        if 2.0 * beta.abs() * q.abs() >= 1.0 {
            return Cell::Diverged;
        }
        let next = a + beta * q * q;
        let step = (next - q).abs();
        if !next.is_finite() || step > last_step {
            return Cell::Diverged;
        }
        q = next;
        if step <= tol * (1.0 + q.abs()) {
            break;
        }
        last_step = step;
    }
    Cell::Ok(q)
}

/// Solves on the characteristic grid, storing rows per `cfg.storage`.
pub fn solve(ivp: &RadialIvp, cfg: &SolverConfig) -> Result<(SolutionField, BlowupReport)> {
    cfg.validate(ivp)?;
    let width =
        cfg.band_cells(ivp).unwrap_or((cfg.t_max / cfg.h) as usize) + ((ivp.support_radius() - 1.0) / cfg.h) as usize;
    let total_rows = (cfg.t_max / cfg.h).ceil() as usize + 1;
    let stride = match cfg.storage {
        RowStorage::None => 0,
        RowStorage::Stride(k) => k,
        RowStorage::Auto => (total_rows.saturating_mul(width.max(1)) / AUTO_STORED_VALUES).max(1),
    };
    let mut rows = Vec::new();
    let report = solve_with(ivp, cfg, |row| {
        if stride > 0 && row.n % stride == 0 {
            rows.push(StoredRow { n: row.n, t: row.t, lo: row.lo, v: row.v.to_vec(), v_t: row.v_t.to_vec() });
        }
    })?;
    Ok((SolutionField { h: cfg.h, stride: stride.max(1), rows }, report))
}

/// Solves on the characteristic grid, handing every completed row (with its
/// `∂ₜv`) to `observer`.
pub fn solve_with<F: FnMut(RowView<'_>)>(ivp: &RadialIvp, cfg: &SolverConfig, mut observer: F) -> Result<BlowupReport> {
    cfg.validate(ivp)?;
    let h = cfg.h;
    let c = ivp.c();
    let eps = ivp.eps();
    let threshold = cfg.threshold_for(ivp);
    let band = cfg.band_cells(ivp);
    // v(t_n, r_j) = 0 for j > n + reach.
    let reach = ((ivp.support_radius() - 1.0) / h).ceil() as usize + 1;
    let lo_of = |n: usize| band.map_or(0, |w| n.saturating_sub(w));
    let hi_of = |n: usize| n + reach;
    let r_of = |j: usize| 1.0 + h * j as f64;
    let n_max = (cfg.t_max / h).ceil() as usize;

    let f0 = ivp.f0();
    let f1 = ivp.f1();
    let row0: Vec<f64> = (0..=hi_of(0)).map(|j| if j == 0 { 0.0 } else { eps * r_of(j) * f0.eval(r_of(j)) }).collect();
    let vt0: Vec<f64> = (0..=hi_of(0)).map(|j| if j == 0 { 0.0 } else { eps * r_of(j) * f1.eval(r_of(j)) }).collect();
    let at = |row: &[f64], lo: usize, j: usize| -> f64 {
        if j < lo || j - lo >= row.len() {
            0.0
        } else {
            row[j - lo]
        }
    };

    // First step from the Taylor expansion with v_tt = v_rr + S.
    let lo1 = lo_of(1);
    let row1: Vec<f64> = (lo1..=hi_of(1))
        .map(|j| {
            if j == 0 {
                return 0.0;
            }
            let r = r_of(j);
            let q = at(&vt0, 0, j);
            0.5 * (at(&row0, 0, j + 1) + at(&row0, 0, j - 1)) + h * q + 0.5 * h * h * c * q * q / r
        })
        .collect();

    let mut prev = row0;
    let mut prev_lo = 0usize;
    let mut cur = row1;
    let mut cur_lo = lo1;
    let mut cur_vt = vec![0.0; cur.len()];
    let mut next: Vec<f64> = Vec::new();

    let mut max_abs_vt = vt0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    observer(RowView { n: 0, t: 0.0, lo: 0, v: &prev, v_t: &vt0 });

    let mut first_cross: Option<usize> = None;
    let mut second_cross: Option<usize> = None;
    let mut diverged_at: Option<usize> = None;

    let mut n = 1;
    while n < n_max {
        let next_lo = lo_of(n + 1);
        let next_hi = hi_of(n + 1);
        next.clear();
        cur_vt.clear();
        cur_vt.resize(cur.len(), 0.0);
        let mut row_diverged = false;
        let mut row_max = 0.0_f64;
        for j in next_lo..=next_hi {
            if j == 0 {
                next.push(0.0);
                continue;
            }
            let south = at(&prev, prev_lo, j);
            let base = at(&cur, cur_lo, j + 1) + at(&cur, cur_lo, j - 1) - south;
            let a = (base - south) / (2.0 * h);
            let beta = h * c / (2.0 * r_of(j));
            let q = match picard(a, beta, cfg.picard_iters, cfg.picard_tol) {
                Cell::Ok(q) => q,
                Cell::Diverged => {
                    row_diverged = true;
                    a
                }
            };
            next.push(south + 2.0 * h * q);
            if j >= cur_lo && j - cur_lo < cur_vt.len() {
                cur_vt[j - cur_lo] = q;
            }
            row_max = row_max.max(q.abs());
        }
        // ∂ₜv on row n is complete now.
        max_abs_vt = max_abs_vt.max(row_max);
        if row_diverged {
            diverged_at = Some(n);
            break;
        }
        observer(RowView { n, t: n as f64 * h, lo: cur_lo, v: &cur, v_t: &cur_vt });
        if first_cross.is_none() && row_max >= threshold {
            first_cross = Some(n);
        }
        if second_cross.is_none() && row_max >= 2.0 * threshold {
            second_cross = Some(n);
            break;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        prev_lo = cur_lo;
        cur_lo = next_lo;
        n += 1;
    }

    let mid = |n: usize| (n as f64 - 0.5) * h;
    let report = match (first_cross, diverged_at) {
        (Some(nb), _) => {
            let t_b = mid(nb);
            let t_2b = second_cross.or(diverged_at).map_or(n_max as f64 * h, mid);
            BlowupReport {
                t_num: t_b,
                trigger: BlowupTrigger::Threshold,
                threshold_sensitivity: (t_2b - t_b).abs() / t_b,
                grid_convergence: None,
                uncertainty: 0.5 * h,
                threshold,
                max_abs_vt,
            }
        }
        (None, Some(nd)) => BlowupReport {
            t_num: mid(nd),
            trigger: BlowupTrigger::PicardDivergence,
            threshold_sensitivity: 0.0,
            grid_convergence: None,
            uncertainty: 0.5 * h,
            threshold,
            max_abs_vt,
        },
        (None, None) => BlowupReport {
            t_num: cfg.t_max,
            trigger: BlowupTrigger::None,
            threshold_sensitivity: 0.0,
            grid_convergence: None,
            uncertainty: 0.0,
            threshold,
            max_abs_vt,
        },
    };
    Ok(report)
}

/// `U(t, s) = (t + s) ∂ₜu*(t, t + s) = ∂ₜv(t, t + s)` on every stored row
/// whose band covers `r = t + s`.
pub fn u_along_characteristic(sol: &SolutionField, s: f64) -> Result<Vec<(f64, f64)>> {
    if !(s >= 1.0) {
        return Err(LabError::OutOfBand { s });
    }
    let out: Vec<(f64, f64)> = (0..sol.rows().len())
        .filter_map(|k| {
            let t = sol.rows()[k].t;
            sol.sample(k, t + s).map(|(_, vt)| (t, vt))
        })
        .collect();
    if out.is_empty() {
        return Err(LabError::OutOfBand { s });
    }
    Ok(out)
}

/// `2ε s f₁*(s) / (4 − ε c s f₁*(s) log((t + s)/s))`; `+∞` once the
/// denominator is no longer positive.
pub fn lower_bound_rhs(ivp: &RadialIvp, t: f64, s: f64) -> f64 {
    let k = s * ivp.f1().eval(s);
    if k == 0.0 {
        return 0.0;
    }
    let denom = 4.0 - ivp.eps() * ivp.c() * k * ((t + s) / s).ln();
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    2.0 * ivp.eps() * k / denom
}

/// Time at which [`lower_bound_rhs`] blows up along `s`:
/// `s exp(4 / (c s f₁*(s) ε)) − s`.
pub fn lower_bound_blowup_time(ivp: &RadialIvp, s: f64) -> f64 {
    let k = ivp.c() * s * ivp.f1().eval(s) * ivp.eps();
    if k <= 0.0 {
        return f64::INFINITY;
    }
    s * (4.0 / k).exp() - s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DuhamelSummary {
    pub max_residual: f64,
    /// Residual divided by `|∂ₜv| +` data scale at the same sample.
    pub max_relative_residual: f64,
    pub samples_used: usize,
    /// Samples whose characteristic history left the stored band.
    pub samples_skipped: usize,
}

/// Residual of the integral identity
///
/// ```text
/// ∂ₜv(t, r) = ½ [a₀(r + t) + b₀(r − t)]
///           + (c/2) ∫₀ᵗ ∂ₜv²/ρ (σ, r + t − σ) dσ + (c/2) ∫₀ᵗ ∂ₜv²/ρ (σ, r − t + σ) dσ,
/// ```
///
/// `a₀ = ε(r f₁ + (r f₀)')`, `b₀ = ε(r f₁ − (r f₀)')`, with the outgoing
/// characteristic reflected at `r = 1` when `r − t < 1`. Integrals use the
/// trapezoid rule over stored rows; each sample `(t, r)` must sit on a
/// stored row.
pub fn duhamel_residual(ivp: &RadialIvp, sol: &SolutionField, samples: &[(f64, f64)]) -> Result<DuhamelSummary> {
    let eps = ivp.eps();
    let c = ivp.c();
    let f0 = ivp.check_f0();
    let f1 = ivp.check_f1();
    let a0 = |x: f64| eps * (f1.eval(x) + f0.deriv(x));
    let b0 = |x: f64| eps * (f1.eval(x) - f0.deriv(x));
    let source = |k: usize, rho: f64| -> Option<f64> { sol.sample(k, rho).map(|(_, vt)| c * vt * vt / rho) };
    // ∫ from row k0 to row k1 of S(σ, ρ(σ)) by trapezoid over stored rows.
    let integrate = |k0: usize, k1: usize, rho: &dyn Fn(f64) -> f64| -> Option<f64> {
        if c == 0.0 || k1 <= k0 {
            return Some(0.0);
        }
        let mut acc = 0.0;
        let mut last = source(k0, rho(sol.rows()[k0].t))?;
        for k in k0 + 1..=k1 {
            let t = sol.rows()[k].t;
            let val = source(k, rho(t))?;
            acc += 0.5 * (t - sol.rows()[k - 1].t) * (last + val);
            last = val;
        }
        Some(acc)
    };

    let scale = ivp.data_scale();
    let mut summary =
        DuhamelSummary { max_residual: 0.0, max_relative_residual: 0.0, samples_used: 0, samples_skipped: 0 };
    for &(t, r) in samples {
        let k = sol.row_index(t).ok_or(LabError::TimeDomain { t, t_max: sol.rows().last().map_or(0.0, |r| r.t) })?;
        let Some((_, vt)) = sol.sample(k, r) else {
            summary.samples_skipped += 1;
            continue;
        };
        let incoming = integrate(0, k, &|sigma| r + t - sigma);
        let outgoing = if r - t >= 1.0 {
            integrate(0, k, &|sigma| r - t + sigma).map(|i| 0.5 * b0(r - t) + 0.5 * i)
        } else {
            // Reflection at r = 1 at time σ₀ = t − r + 1: b = −a there.
            let sigma0 = t - r + 1.0;
            match sol.row_index(sigma0) {
                Some(k0) => {
                    let a_at_wall = integrate(0, k0, &|sigma| 1.0 + sigma0 - sigma).map(|i| a0(1.0 + sigma0) + i);
                    let tail = integrate(k0, k, &|sigma| r - t + sigma);
                    a_at_wall.zip(tail).map(|(aw, tail)| -0.5 * aw + 0.5 * tail)
                }
                None => None,
            }
        };
        match (incoming, outgoing) {
            (Some(inc), Some(out)) => {
                let predicted = 0.5 * a0(r + t) + 0.5 * inc + out;
                let res = (vt - predicted).abs();
                summary.max_residual = summary.max_residual.max(res);
                summary.max_relative_residual = summary.max_relative_residual.max(res / (vt.abs() + scale));
                summary.samples_used += 1;
            }
            _ => summary.samples_skipped += 1,
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical(c: f64, eps: f64) -> RadialIvp {
        let f1 = RadialProfile::bump(2.0, 4.0, 4f64.exp()).unwrap();
        RadialIvp::new(c, eps, &RadialProfile::zero(), &f1).unwrap()
    }

    fn with_f0(c: f64, eps: f64) -> RadialIvp {
        let f0 = RadialProfile::bump(2.0, 3.5, 30.0).unwrap();
        let f1 = RadialProfile::bump(2.5, 4.0, 40.0).unwrap();
        RadialIvp::new(c, eps, &f0, &f1).unwrap()
    }

    #[test]
    fn linear_initial_and_boundary_values() {
        let ivp = with_f0(1.0, 0.3);
        for &r in &[1.0, 2.2, 3.0, 3.4, 5.0] {
            assert_eq!(linear_exact(&ivp, 0.0, r).unwrap(), ivp.f0().eval(r));
        }
        for &t in &[0.0, 0.7, 1.5, 2.9, 10.0] {
            assert!(linear_exact(&ivp, t, 1.0).unwrap().abs() <= 1e-12);
        }
        assert!(linear_exact(&ivp, -1.0, 2.0).is_err());
    }

    #[test]
    fn linear_derivatives_match_finite_differences() {
        let ivp = with_f0(1.0, 0.3);
        let d = 1e-5;
        for &(t, r) in &[(0.5, 2.5), (1.3, 1.8), (2.0, 4.2), (3.1, 2.0)] {
            let ft = (ivp.linear_rv(t + d, r).unwrap() - ivp.linear_rv(t - d, r).unwrap()) / (2.0 * d);
            let fr = (ivp.linear_rv(t, r + d).unwrap() - ivp.linear_rv(t, r - d).unwrap()) / (2.0 * d);
            let ftt = (ivp.linear_rv_t(t + d, r) - ivp.linear_rv_t(t - d, r)) / (2.0 * d);
            assert!((ft - ivp.linear_rv_t(t, r)).abs() < 1e-6);
            assert!((fr - ivp.linear_rv_r(t, r)).abs() < 1e-6);
            assert!((ftt - ivp.linear_rv_tt(t, r)).abs() < 1e-5);
        }
    }

    #[test]
    fn huygens_region_vanishes() {
        let ivp = with_f0(1.0, 0.3);
        let rr = ivp.support_radius();
        for i in 0..40 {
            for j in 0..40 {
                let t = rr + 10.0 * i as f64 / 39.0;
                let r = 1.0 + (t + 2.0 - rr - 1.0) * j as f64 / 39.0;
                if r - t <= 2.0 - rr && r + t >= rr {
                    assert!(linear_exact(&ivp, t, r).unwrap().abs() <= 1e-12, "t={t} r={r}");
                }
            }
        }
    }

    fn linf_error(h: f64, ivp: &RadialIvp, t_end: f64) -> f64 {
        let cfg = SolverConfig { h, t_max: t_end, storage: RowStorage::None, ..Default::default() };
        let every = (0.25 / h).round() as usize;
        let mut worst = 0.0_f64;
        solve_with(ivp, &cfg, |row| {
            if row.n % every != 0 {
                return;
            }
            for (k, &v) in row.v.iter().enumerate() {
                let r = 1.0 + h * (row.lo + k) as f64;
                let exact = ivp.eps() * ivp.linear_rv(row.t, r).unwrap();
                worst = worst.max((v - exact).abs());
            }
        })
        .unwrap();
        worst
    }

    #[test]
    fn linear_solver_is_second_order() {
        let ivp = with_f0(0.0, 0.3);
        let e1 = linf_error(0.04, &ivp, 12.0);
        let e2 = linf_error(0.02, &ivp, 12.0);
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio} ({e1}, {e2})");
    }

    #[test]
    fn zero_data_stays_zero() {
        let ivp = RadialIvp::new(1.0, 0.3, &RadialProfile::zero(), &RadialProfile::zero()).unwrap();
        let cfg = SolverConfig { h: 0.05, t_max: 5.0, blowup_threshold: Some(1.0), ..Default::default() };
        let (sol, report) = solve(&ivp, &cfg).unwrap();
        assert_eq!(report.trigger, BlowupTrigger::None);
        assert!(sol.rows().iter().all(|r| r.v.iter().chain(&r.v_t).all(|&x| x == 0.0)));
        let d = duhamel_residual(&ivp, &sol, &[(2.0, 2.5)]).unwrap();
        assert_eq!(d.max_residual, 0.0);
    }

    #[test]
    fn dirichlet_and_finite_propagation() {
        let ivp = canonical(1.0, 0.4);
        let cfg = SolverConfig {
            h: 0.02,
            t_max: 30.0,
            band_window: BandWindow::Full,
            storage: RowStorage::Stride(10),
            ..Default::default()
        };
        let (sol, _) = solve(&ivp, &cfg).unwrap();
        for row in sol.rows() {
            assert_eq!(row.lo, 0);
            assert_eq!(row.v[0], 0.0);
            let reach = row.t + ivp.support_radius();
            for (k, &v) in row.v.iter().enumerate() {
                let r = sol.r_of(row.lo + k);
                if r >= reach + 1e-9 {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn band_truncation_does_not_feed_back() {
        let ivp = canonical(1.0, 0.45);
        let run = |w| {
            let cfg =
                SolverConfig { h: 0.02, t_max: 200.0, band_window: w, storage: RowStorage::None, ..Default::default() };
            solve(&ivp, &cfg).unwrap().1
        };
        let full = run(BandWindow::Full);
        let banded = run(BandWindow::Auto);
        let wide = run(BandWindow::Width(16.0));
        assert!(full.blew_up());
        assert_eq!(banded.t_num, wide.t_num);
        assert!((full.t_num - banded.t_num).abs() / full.t_num < 5e-3);
    }

    #[test]
    fn nonlinear_run_blows_up_below_upper_bound() {
        let ivp = canonical(1.0, 0.45);
        let cfg = SolverConfig { h: 0.02, t_max: 1e4, storage: RowStorage::None, ..Default::default() };
        let (_, report) = solve(&ivp, &cfg).unwrap();
        assert!(report.blew_up());
        let tau = crate::profile::tau_star_radial(1.0, ivp.f1()).finite().unwrap();
        assert!(report.t_num <= ivp.support_radius() * (tau / 0.45).exp() * 1.05);
        assert!(report.threshold_sensitivity < 0.01);
    }

    #[test]
    fn sign_symmetry() {
        let ivp = canonical(1.0, 0.45);
        let neg = ivp.negated();
        let cfg = SolverConfig { h: 0.02, t_max: 1e3, storage: RowStorage::None, ..Default::default() };
        let a = solve(&ivp, &cfg).unwrap().1;
        let b = solve(&neg, &cfg).unwrap().1;
        assert_eq!(a.t_num, b.t_num);
        let c = solve(&neg.normalized(), &cfg).unwrap().1;
        assert_eq!(a, c);
    }

    #[test]
    fn characteristic_samples() {
        let ivp = canonical(0.0, 0.3);
        let cfg = SolverConfig { h: 0.01, t_max: 10.0, storage: RowStorage::Stride(1), ..Default::default() };
        let (sol, _) = solve(&ivp, &cfg).unwrap();
        let u = u_along_characteristic(&sol, 3.0).unwrap();
        assert_eq!(u[0].0, 0.0);
        assert!((u[0].1 - 0.3 * 3.0 * ivp.f1().eval(3.0)).abs() < 1e-12);
        for &(t, val) in u.iter().step_by(50) {
            assert!((val - 0.3 * ivp.linear_rv_t(t, t + 3.0)).abs() < 1e-3, "t={t}");
        }
        assert!(u_along_characteristic(&sol, 5.0).unwrap().iter().all(|&(_, v)| v == 0.0));
        assert!(u_along_characteristic(&sol, 0.5).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        let ivp = canonical(1.0, 0.3);
        let s = 3.0;
        let u0 = 0.3 * s * ivp.f1().eval(s);
        assert!((lower_bound_rhs(&ivp, 0.0, s) - u0 / 2.0).abs() < 1e-15);
        assert_eq!(lower_bound_rhs(&ivp, 10.0, 4.5), 0.0);
        let tb = lower_bound_blowup_time(&ivp, s);
        assert!(lower_bound_rhs(&ivp, tb * 0.999, s).is_finite());
        assert_eq!(lower_bound_rhs(&ivp, tb * 1.001, s), f64::INFINITY);
    }

    #[test]
    fn duhamel_residual_converges() {
        let ivp = with_f0(1.0, 0.3);
        let residual = |h: f64| {
            let cfg = SolverConfig { h, t_max: 8.0, storage: RowStorage::Stride(1), ..Default::default() };
            let (sol, _) = solve(&ivp, &cfg).unwrap();
            let samples: Vec<_> = [(2.0, 4.0), (4.0, 6.5), (6.0, 3.0), (6.0, 1.6), (7.0, 9.0)].into_iter().collect();
            duhamel_residual(&ivp, &sol, &samples).unwrap()
        };
        let a = residual(0.04);
        let b = residual(0.02);
        assert_eq!(a.samples_used, 5);
        let ratio = a.max_residual / b.max_residual;
        assert!(ratio > 3.0, "ratio {ratio}: {} {}", a.max_residual, b.max_residual);
    }
}
