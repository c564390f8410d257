use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lifespan_core::lab::{self, ExperimentConfig};
use lifespan_core::LabError;
use serde::Serialize;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "lifespan-lab", version, about = "Lifespan experiments for the exterior quadratic wave equation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set solver.h=0.01`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Coefficient of (∂ₜu)².
    #[arg(long, global = true, allow_negative_numbers = true)]
    c: Option<f64>,
    /// Comma-separated, strictly decreasing.
    #[arg(long, value_delimiter = ',', global = true)]
    eps_list: Option<Vec<f64>>,
    /// Grid step of the solver.
    #[arg(long, global = true)]
    h: Option<f64>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// τ* from the general definition and from the radial closed form.
    TauStar,
    /// One nonlinear solve; writes the blow-up report and optional snapshots.
    Solve {
        #[arg(long)]
        eps: f64,
        /// Write every n-th stored row to snapshots.csv.
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Converged lifespans over eps_list and the extrapolation fit.
    LifespanSweep,
    /// Lower-bound domination and Duhamel residual at one ε.
    BoundCheck {
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Decay sups of the approximate solution and its distance to the solver.
    ApproxError,
    /// Samples of F₊, P and p on τ slices.
    RadiationSample,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::InvalidParameter(_) => Self::Config(e.to_string()),
            other => Self::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), Failure> {
    let (key, raw) =
        spec.split_once('=').ok_or_else(|| Failure::Config(format!("override `{spec}` is not KEY=VALUE")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut node = table;
    for p in path {
        node = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Failure::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    node.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut table = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            toml::from_str::<toml::Table>(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    for spec in &common.overrides {
        apply_override(&mut table, spec)?;
    }
    let mut cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| Failure::Config(e.to_string()))?;
    if let Some(c) = common.c {
        cfg.c = c;
    }
    if let Some(list) = &common.eps_list {
        cfg.eps_list = list.clone();
    }
    if let Some(h) = common.h {
        cfg.solver.h = h;
        cfg.sweep.h_initial = h;
        cfg.bound_check.h = h;
        cfg.approx.h = h;
    }
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn verdict(pass: bool) -> Result<bool, Failure> {
    println!("acceptance: {}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

#[derive(Serialize)]
struct Snapshot {
    t: f64,
    r: f64,
    /// `v = r u`
    v: f64,
    dv_dt: f64,
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let cfg = load_config(&cli.common)?;
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;

    match &cli.command {
        Command::TauStar => {
            let rep = lab::cmd_tau_star(&cfg)?;
            println!("tau* (general scan): {}", rep.general);
            match rep.radial {
                Some(r) => println!("tau* (radial formula): {r}"),
                None => println!("tau* (radial formula): not applicable"),
            }
            if let Some(d) = rep.relative_difference {
                println!("relative difference: {d:.3e}");
            }
            write_json(&out.join("tau_star.json"), &rep)?;
            verdict(rep.pass)
        }
        Command::Solve { eps, snapshot_every } => {
            let (sol, rep) = lab::cmd_solve(&cfg, *eps)?;
            println!("T_num = {} ({:?})", rep.t_num, rep.trigger);
            write_json(&out.join("solve.json"), &rep)?;
            if let Some(every) = snapshot_every {
                let every = (*every).max(1);
                let mut rows = Vec::new();
                for row in sol.rows().iter().step_by(every) {
                    for (i, (v, vt)) in row.v.iter().zip(&row.v_t).enumerate() {
                        let r = sol.r_of(row.lo + i);
                        rows.push(Snapshot { t: row.t, r, v: *v, dv_dt: *vt });
                    }
                }
                write_csv(&out.join("snapshots.csv"), &rows)?;
            }
            Ok(true)
        }
        Command::LifespanSweep => {
            let rep = lab::cmd_lifespan_sweep(&cfg)?;
            let records: Vec<_> = rep.points.iter().map(|p| p.record).collect();
            for p in &rep.points {
                let r = &p.record;
                println!(
                    "eps={:<5} h={:<8} T={:<12.6} eps*logT={:.6} converged={} robust={} bound={:.4e}",
                    r.eps, r.h, r.t_num, r.eps_log_t, r.grid_converged, r.threshold_robust, p.upper_bound
                );
            }
            write_csv(&out.join("lifespan.csv"), &records)?;
            match &rep.fit {
                Some(fit) => {
                    println!(
                        "fit: tau_hat={:.6} slope={:.6} rms={:.3e} tau*={:.6} gap={:.4}{}",
                        fit.tau_hat,
                        fit.slope,
                        fit.residual_rms,
                        fit.tau_star_reference,
                        fit.relative_gap,
                        if fit.exact_law_applicable { "" } else { " (exact law not applicable)" }
                    );
                    write_json(&out.join("fit.json"), fit)?;
                }
                None => println!("fit: fewer than two usable records"),
            }
            verdict(rep.pass)
        }
        Command::BoundCheck { eps } => {
            let mut cfg = cfg;
            if let Some(e) = eps {
                cfg.bound_check.eps = *e;
            }
            let rep = lab::cmd_bound_check(&cfg)?;
            println!(
                "eps={} h={} T_num={:.6} samples={} violations={} max_violation={:.3e}",
                rep.eps,
                rep.h,
                rep.t_num,
                rep.samples.len(),
                rep.violations,
                rep.max_violation
            );
            println!(
                "duhamel: max_residual={:.3e} relative={:.3e} used={} skipped={}",
                rep.duhamel.max_residual,
                rep.duhamel.max_relative_residual,
                rep.duhamel.samples_used,
                rep.duhamel.samples_skipped
            );
            write_csv(&out.join("bound_check.csv"), &rep.samples)?;
            write_json(&out.join("bound_check.json"), &rep)?;
            verdict(rep.pass)
        }
        Command::ApproxError => {
            let rep = lab::cmd_approx_error(&cfg)?;
            for r in &rep.records {
                println!(
                    "eps={:<5} S1={:.4} S2={:.4} S3={:.4} S4={:.4} weighted_err={:.4e} ratio_to_eps^1.2={:.4}",
                    r.eps,
                    r.s1,
                    r.s2,
                    r.s3,
                    r.s4,
                    r.weighted_err,
                    r.weighted_err / r.eps.powf(1.2)
                );
            }
            println!("order={:.4} scaling_ok={}", rep.order, rep.scaling_ok);
            write_csv(&out.join("approx.csv"), &rep.records)?;
            write_json(&out.join("approx.json"), &rep)?;
            verdict(rep.pass)
        }
        Command::RadiationSample => {
            let rows = lab::cmd_radiation_sample(&cfg)?;
            println!("{} samples", rows.len());
            write_csv(&out.join("radiation.csv"), &rows)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_ACCEPTANCE),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
