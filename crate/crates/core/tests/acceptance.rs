//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use lifespan_core::lab::{self, converged_lifespan, ExperimentConfig};
use lifespan_core::profile::ProfileContext;
use lifespan_core::radiation::{
    radiation_field_exterior_radial, radon_plane, radon_radial, Direction, FreeSpaceComponent, RadialProfile,
};
use lifespan_core::solver::{linear_exact, solve, BandWindow, RadialIvp, RowStorage, SolverConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn canonical() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn tau_star_consistency() -> Outcome {
    let start = Instant::now();
    let rep = lab::cmd_tau_star(&canonical()).expect("tau-star");
    let elapsed = start.elapsed();
    let diff = rep.relative_difference.expect("radial route applies");
    outcome(
        diff <= 1e-6 && elapsed < Duration::from_secs(1),
        format!("general={} radial={} rel_diff={diff:.2e} time={elapsed:.2?}", rep.general, rep.radial.unwrap()),
    )
}

/// L∞ distance to the exact linear solution over `t ∈ [0, 50]`.
fn linear_error(ivp: &RadialIvp, h: f64) -> f64 {
    let cfg = SolverConfig {
        h,
        t_max: 50.0,
        band_window: BandWindow::Full,
        storage: RowStorage::Stride(1),
        ..SolverConfig::default()
    };
    let (sol, _) = solve(ivp, &cfg).expect("linear solve");
    let mut err = 0.0_f64;
    for row in sol.rows().iter().filter(|r| r.t <= 50.0 + 1e-9) {
        for (i, v) in row.v.iter().enumerate() {
            let r = sol.r_of(row.lo + i);
            let exact = ivp.eps() * linear_exact(ivp, row.t, r).unwrap();
            err = err.max((v / r - exact).abs());
        }
    }
    err
}

fn linear_oracle() -> Outcome {
    let start = Instant::now();
    let ivp = canonical().ivp(0.5).unwrap();
    let ivp = RadialIvp::new(0.0, ivp.eps(), ivp.f0(), ivp.f1()).unwrap();
    let coarse = linear_error(&ivp, 0.04);
    let fine = linear_error(&ivp, 0.02);
    let ratio = coarse / fine;
    let elapsed = start.elapsed();
    outcome(
        (3.5..=4.5).contains(&ratio) && elapsed < Duration::from_secs(10),
        format!("err(h=0.04)={coarse:.3e} err(h=0.02)={fine:.3e} ratio={ratio:.3} time={elapsed:.2?}"),
    )
}

fn huygens_identities() -> Outcome {
    let f0 = RadialProfile::bump(2.0, 3.5, 30.0).unwrap();
    let data =
        [canonical().ivp(0.5).unwrap(), RadialIvp::new(0.0, 0.5, &f0, canonical().f1().as_ref().unwrap()).unwrap()];
    let mut worst_wall = 0.0_f64;
    let mut worst_region = 0.0_f64;
    let mut samples = 0;
    for ivp in &data {
        let big_r = ivp.support_radius();
        let scale = ivp.data_scale() / ivp.eps();
        for i in 0..100 {
            let t_wall = 60.0 * i as f64 / 99.0;
            worst_wall = worst_wall.max(linear_exact(ivp, t_wall, 1.0).unwrap().abs());
            // The region is non-empty from t = R − 1 on.
            let t = (big_r - 1.0) + (60.0 - big_r + 1.0) * i as f64 / 99.0;
            let lo = (big_r - t).max(1.0);
            let hi = t + 2.0 - big_r;
            for j in 0..50 {
                let r = lo + (hi - lo) * j as f64 / 49.0;
                worst_region = worst_region.max(linear_exact(ivp, t, r).unwrap().abs() / scale);
                samples += 1;
            }
        }
    }
    outcome(
        worst_wall <= 1e-12 && worst_region <= 1e-12 && samples >= 10_000,
        format!("samples={samples} max|u0(t,1)|={worst_wall:.2e} max|u0|/scale in region={worst_region:.2e}"),
    )
}

fn upper_bound() -> Outcome {
    let start = Instant::now();
    let cfg = canonical();
    let tau_star = cfg.tau_star().unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for eps in [0.5, 0.35, 0.25] {
        let p = converged_lifespan(&cfg, eps, tau_star).unwrap();
        ok &= p.within_upper_bound && p.record.grid_converged;
        detail.push(format!("eps={eps}: T={:.3} bound*1.05={:.3}", p.record.t_num, 1.05 * p.upper_bound));
    }
    outcome(ok, format!("{} time={:.2?}", detail.join("; "), start.elapsed()))
}

fn lifespan_law() -> Outcome {
    let start = Instant::now();
    let rep = lab::cmd_lifespan_sweep(&canonical()).unwrap();
    let flagged = rep.points.iter().all(|p| p.record.grid_converged && p.record.threshold_robust);
    match rep.fit {
        Some(fit) => outcome(
            flagged && fit.points_used == 6 && fit.relative_gap <= 0.10,
            format!(
                "tau_hat={:.5} tau*={:.5} gap={:.4} points={} time={:.2?}",
                fit.tau_hat,
                fit.tau_star_reference,
                fit.relative_gap,
                fit.points_used,
                start.elapsed()
            ),
        ),
        None => outcome(false, "no fit".into()),
    }
}

fn lower_bound_domination() -> Outcome {
    let rep = lab::cmd_bound_check(&canonical()).unwrap();
    outcome(
        rep.violations == 0 && rep.samples.len() == 2500,
        format!(
            "eps={} samples={} violations={} max_violation={:.2e} T_num={:.3}",
            rep.eps,
            rep.samples.len(),
            rep.violations,
            rep.max_violation,
            rep.t_num
        ),
    )
}

/// Five-point central difference.
fn d5<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

fn profile_closed_form() -> Outcome {
    let cfg = canonical();
    let field = Arc::new(radiation_field_exterior_radial(&cfg.f0().unwrap(), &cfg.f1().unwrap()));
    let ctx = ProfileContext::new(field, cfg.coeffs());
    let tau_star = ctx.tau_star().value();
    let g = cfg.c;
    let theta = Direction::E3;
    let step = 1e-4;
    let mut ode = 0.0_f64;
    let mut prim = 0.0_f64;
    for i in 0..100 {
        let s = -2.5 + 7.0 * i as f64 / 99.0;
        for k in 0..100 {
            let tau = 0.9 * tau_star * k as f64 / 99.0;
            let p = ctx.amplitude(s, &theta, tau).unwrap();
            let tau_c = tau.max(2.0 * step);
            let pc = ctx.amplitude(s, &theta, tau_c).unwrap();
            let dtau = d5(|x| ctx.amplitude(s, &theta, x).unwrap(), tau_c, step);
            ode = ode.max((2.0 * dtau + g * pc * pc).abs());
            let ds = d5(|x| ctx.primitive(x, &theta, tau).unwrap(), s, step);
            prim = prim.max((ds - p).abs());
        }
    }
    outcome(ode <= 1e-6 && prim <= 1e-6, format!("ode_residual={ode:.2e} |d_s p - P|={prim:.2e}"))
}

fn approximation_scaling() -> Outcome {
    let start = Instant::now();
    let rep = lab::cmd_approx_error(&canonical()).unwrap();
    let errs: Vec<String> = rep.records.iter().map(|r| format!("{:.3e}", r.weighted_err)).collect();
    outcome(
        rep.pass,
        format!(
            "scaling_ok={} weighted_err=[{}] order={:.3} time={:.2?}",
            rep.scaling_ok,
            errs.join(", "),
            rep.order,
            start.elapsed()
        ),
    )
}

fn radon_oracles() -> Outcome {
    let bump = |rho: f64| if rho < 1.0 { (-1.0 / (1.0 - rho * rho)).exp() } else { 0.0 };
    let plane_bump = FreeSpaceComponent::radial(bump);
    let mut radial_vs_plane = 0.0_f64;
    for i in 0..20 {
        let s = -1.2 + 2.4 * i as f64 / 19.0;
        let a = radon_radial(bump, s, 1.0).unwrap();
        let b = radon_plane(&plane_bump, s, &Direction::E3, 1.0).unwrap();
        radial_vs_plane = radial_vs_plane.max((a - b).abs());
    }
    let gauss = FreeSpaceComponent::general(|y: [f64; 3]| (-(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])).exp());
    let theta = Direction::normalized([0.3, -0.4, 0.8]).unwrap();
    let mut gauss_err = 0.0_f64;
    for s in [0.0, 1.0, 2.0] {
        let v = radon_plane(&gauss, s, &theta, 6.5).unwrap();
        gauss_err = gauss_err.max((v - PI * (-s * s).exp()).abs());
    }
    outcome(
        radial_vs_plane <= 1e-7 && gauss_err <= 1e-8,
        format!("radial_vs_plane={radial_vs_plane:.2e} gaussian={gauss_err:.2e}"),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("tau* cross-consistency", tau_star_consistency),
        ("linear oracle convergence", linear_oracle),
        ("exact Huygens and boundary identities", huygens_identities),
        ("blow-up upper bound", upper_bound),
        ("lifespan law extrapolation", lifespan_law),
        ("lower-bound domination", lower_bound_domination),
        ("profile ODE closed form", profile_closed_form),
        ("approximation-error scaling", approximation_scaling),
        ("radiation-field oracles", radon_oracles),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("criterion {}: {} - {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
