//! Command-line driver.
//!
//! Exit status: 0 success, 1 failed `verify` checks, 2 configuration error,
//! 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use cpns_core::config::{build_problem, Problem, RunConfig};
use cpns_core::correlation::{
    check_stationary, emission_spectrum, two_time_correlation, CorrelationSeries,
};
use cpns_core::cpns::convergence_study;
use cpns_core::io::Table;
use cpns_core::mollow::{
    compare_spectra, emission_correlation, mollow_spectrum_analytic, omega_grid,
};
use cpns_core::propagator::{propagate, solver_order_study, PropagatorConfig, StateHistory};
use cpns_core::verify::verify_problem;
use cpns_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Propagate,
    Correlate,
    Spectrum,
    Converge,
    Verify,
}

#[derive(Debug, Parser)]
#[command(name = "cpns", version, about = "Non-Markovian master equation solver")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Schema(String),
    Numeric(String),
    Checks(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Checks(_) => 1,
            Failure::Schema(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Schema(m) | Failure::Numeric(m) | Failure::Checks(m) => m,
        }
    }
}

fn numeric(stage: &'static str) -> impl Fn(Error) -> Failure {
    move |e| Failure::Numeric(format!("{stage}: {e}"))
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::Numeric(format!("output: {e}"))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    std::fs::write(dir.join(name), text).map_err(io_err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Failure::Schema(format!("{}: {e}", cli.config.display())))?;
    let base = cli
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let cfg = RunConfig::parse(&text).map_err(|e| Failure::Schema(e.to_string()))?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let entries = cfg
        .expand_sweep()
        .map_err(|e| Failure::Schema(e.to_string()))?;
    let mut prepared = Vec::with_capacity(entries.len());
    for (sub, c) in entries {
        let c = c.normalized().map_err(|e| Failure::Schema(e.to_string()))?;
        c.validate(&base)
            .map_err(|e| Failure::Schema(e.to_string()))?;
        let dir = if sub.is_empty() {
            out.clone()
        } else {
            out.join(sub)
        };
        prepared.push((dir, c));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Schema(format!("--threads: {e}")))?;
    let results: Vec<Result<(), Failure>> = pool.install(|| {
        prepared
            .par_iter()
            .map(|(dir, c)| run_entry(cli.command, c, &base, dir))
            .collect()
    });
    let mut worst: Option<Failure> = None;
    for (r, (dir, _)) in results.into_iter().zip(&prepared) {
        if let Err(f) = r {
            eprintln!("{}: {}", dir.display(), f.message());
            if worst.as_ref().is_none_or(|w| f.code() > w.code()) {
                worst = Some(f);
            }
        }
    }
    worst.map_or(Ok(()), Err)
}

fn run_entry(cmd: Command, cfg: &RunConfig, base: &Path, dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(io_err)?;
    write(dir, "config.normalized.toml", &cfg.to_toml())?;
    let p = build_problem(cfg, base).map_err(|e| Failure::Schema(format!("model: {e}")))?;
    match cmd {
        Command::Propagate => {
            let h = propagate(&p.rho0, &p.gen, &p.kernel, &p.solver)
                .map_err(numeric("memory-propagator"))?;
            let mut buf = Vec::new();
            h.write_table(&mut buf).map_err(io_err)?;
            write(dir, "history.txt", &String::from_utf8_lossy(&buf))?;
            let d = h.diagnostics(true);
            let t = Table::new(&[
                "max_trace_error",
                "max_herm_error",
                "min_eigenvalue",
                "min_eigenvalue_time",
            ]);
            let mut t = t.meta("checksum", format!("{:016x}", h.checksum()));
            t.push(vec![
                d.max_trace_error,
                d.max_herm_error,
                d.min_eigenvalue,
                d.min_eigenvalue_time,
            ]);
            write(dir, "diagnostics.txt", &t.render())
        }
        Command::Correlate => {
            let (_, corr) = correlation(&p)?;
            write(dir, "correlation.txt", &corr.to_table().render())
        }
        Command::Spectrum => {
            let sp = cfg
                .spectrum
                .as_ref()
                .ok_or_else(|| Failure::Schema("spectrum: section required".into()))?;
            let grid = omega_grid(sp.omega_min, sp.omega_max, sp.points);
            let (_, corr) = correlation(&p)?;
            write(dir, "correlation.txt", &corr.to_table().render())?;
            let numeric_s =
                emission_spectrum(&corr, &grid).map_err(numeric("correlation-engine"))?;
            match &p.tls {
                Some(params) => {
                    let analytic =
                        mollow_spectrum_analytic(params, &grid).map_err(numeric("mollow-app"))?;
                    let mut t = Table::new(&["omega", "numeric", "analytic"])
                        .meta_f64("offset", numeric_s.offset)
                        .meta_f64("t_anchor", corr.t_anchor);
                    if let Some(b) = numeric_s.baseline {
                        t = t.meta_f64("baseline", b);
                    }
                    for ((w, a), b) in grid.iter().zip(&numeric_s.values).zip(&analytic.values) {
                        t.push(vec![*w, *a, *b]);
                    }
                    write(dir, "spectrum.txt", &t.render())?;
                    let rep =
                        compare_spectra(&numeric_s, &analytic).map_err(numeric("mollow-app"))?;
                    write(dir, "comparison.txt", &rep.to_table().render())
                }
                None => write(dir, "spectrum.txt", &numeric_s.to_table().render()),
            }
        }
        Command::Converge => {
            let (dts, t_final) = cfg
                .converge
                .as_ref()
                .map(|c| (c.dt_list.clone(), c.t_final))
                .unwrap_or_else(|| (vec![4e-3, 2e-3, 1e-3], 1.0));
            let table = convergence_study(&p.gen, &p.kernel, &p.rho0, t_final, &dts)
                .map_err(numeric("discrete-cpns"))?;
            write(dir, "cpns_convergence.txt", &table.to_table().render())?;
            let (rows, order) = solver_order_study(&[4e-3, 2e-3, 1e-3], 1.0)
                .map_err(numeric("memory-propagator"))?;
            let mut t = Table::new(&["dt", "abs_error"]).meta_f64("order", order);
            for (d, e) in rows {
                t.push(vec![d, e]);
            }
            write(dir, "solver_order.txt", &t.render())
        }
        Command::Verify => {
            let rep = verify_problem(&p, 0).map_err(numeric("verify"))?;
            write(dir, "verify.txt", &rep.render())?;
            if rep.passed() {
                Ok(())
            } else {
                let failed: Vec<&str> = rep
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.as_str())
                    .collect();
                Err(Failure::Checks(format!(
                    "failed checks: {}",
                    failed.join(", ")
                )))
            }
        }
    }
}

fn correlation(p: &Problem) -> Result<(StateHistory, CorrelationSeries), Failure> {
    let m = p
        .measurement
        .as_ref()
        .ok_or_else(|| Failure::Schema("measurement: section required".into()))?;
    let cfg = PropagatorConfig {
        t_final: m.t_star,
        ..p.solver
    };
    let h = propagate(&p.rho0, &p.gen, &p.kernel, &cfg).map_err(numeric("memory-propagator"))?;
    if let Some(params) = &p.tls {
        let gt = cpns_core::mollow::big_gamma_t(params).map_err(numeric("mollow-app"))?;
        if gt > 0.0 {
            let lag = ((1.0 / gt) / p.solver.dt).round() * p.solver.dt;
            check_stationary(&h, m.t_star, lag.min(m.t_star), m.stationarity_tol)
                .map_err(numeric("correlation-engine"))?;
        }
    }
    let corr = if m.emission {
        emission_correlation(
            &h,
            &p.gen,
            &p.kernel,
            m.t_star,
            m.tau_max,
            p.solver.memory_window,
        )
    } else {
        two_time_correlation(
            &h,
            &p.gen,
            &p.kernel,
            &m.spec,
            m.t_star,
            m.tau_max,
            p.solver.memory_window,
        )
    }
    .map_err(numeric("correlation-engine"))?;
    Ok((h, corr))
}
