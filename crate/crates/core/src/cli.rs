//! Command-line driver.
//!
//! Exit codes: 0 on success, 1 for numerical or I/O failures, 2 for usage
//! and configuration errors.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;

use crate::constitutive::validate_smallness;
use crate::error::{Error, Result};
use crate::experiments::{
    convergence_study, practical_problem, ConvergenceRow, ErrorReport, PracticalResult,
};
use crate::io::{
    export_vtu, load_config, parse_config, write_error_csv, write_rates_csv, write_strain_csv, ProblemKind,
    RunConfig, StrainTable,
};
use crate::manufactured::{ErrorAccumulator, ManufacturedCase, Theta};
use crate::solver::{time_loop, RunOptions, ViscousForm};

#[derive(Debug, Parser)]
#[command(name = "poroflow", version, about = "Flow through a deformable porous solid with a nonlinear strain-stress law")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Manufactured-solution convergence study.
    Converge {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_theta)]
        theta: Option<Theta>,
        /// Comma-separated `m:N` pairs, e.g. `4:10,5:40,6:160`.
        #[arg(long, value_parser = parse_rows)]
        rows: Option<RowList>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compression problem over a list of lambda1 = lambda2 values.
    Practical {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated values, e.g. `0,1,2,3,4,5`.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long, value_parser = parse_viscous)]
        viscous_form: Option<ViscousForm>,
        /// Write the final fields of every run as VTU.
        #[arg(long)]
        vtu: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the coefficient bounds and admissibility of a parameter set.
    ValidateParams {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn parse_theta(s: &str) -> std::result::Result<Theta, String> {
    match s {
        "exp" => Ok(Theta::Exp),
        "sin" => Ok(Theta::Sin),
        _ => Err(format!("expected `exp` or `sin`, got `{s}`")),
    }
}

fn parse_viscous(s: &str) -> std::result::Result<ViscousForm, String> {
    match s {
        "grad_grad" => Ok(ViscousForm::GradGrad),
        "sym_grad" => Ok(ViscousForm::SymGrad),
        _ => Err(format!("expected `grad_grad` or `sym_grad`, got `{s}`")),
    }
}

#[derive(Debug, Clone)]
struct RowList(Vec<(u32, usize)>);

fn parse_rows(s: &str) -> std::result::Result<RowList, String> {
    s.split(',')
        .map(|pair| {
            let (m, n) = pair.split_once(':').ok_or_else(|| format!("`{pair}` is not of the form m:N"))?;
            let m: u32 = m.trim().parse().map_err(|_| format!("bad level `{m}`"))?;
            let n: usize = n.trim().parse().map_err(|_| format!("bad step count `{n}`"))?;
            if m == 0 || n == 0 {
                return Err(format!("`{pair}`: m and N must be positive"));
            }
            Ok((m, n))
        })
        .collect::<std::result::Result<_, _>>()
        .map(RowList)
}

fn config_or_default(path: Option<&Path>, default_json: &str) -> Result<RunConfig> {
    match path {
        Some(p) => load_config(p),
        None => parse_config(default_json),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn print_rows(rows: &[ConvergenceRow]) {
    println!("{:>3} {:>5} {:>12} {:>12} {:>12} {:>12} {:>12}", "m", "N", "err_u_h01", "err_u_l2", "err_v_h01", "err_v_l2", "err_p_l2");
    for r in rows {
        match &r.outcome {
            Ok(e) => {
                let a = e.as_array();
                println!(
                    "{:>3} {:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
                    r.m, r.n_steps, a[0], a[1], a[2], a[3], a[4]
                );
            }
            Err(msg) => println!("{:>3} {:>5} failed: {msg}", r.m, r.n_steps),
        }
    }
}

fn write_report(report: &ErrorReport, dir: &Path) -> Result<()> {
    let name = report.theta.name();
    write_error_csv(&report.rows, create(dir, &format!("errors_{name}.csv"))?)?;
    write_rates_csv(&report.rates, create(dir, &format!("rates_{name}.csv"))?)?;
    print_rows(&report.rows);
    for r in &report.rates {
        let fmt = |x: Option<f64>| x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "rates {}->{}: u_h01 {} v_h01 {} p_l2 {}",
            r.m_coarse,
            r.m_fine,
            fmt(r.rates[0]),
            fmt(r.rates[2]),
            fmt(r.rates[4])
        );
    }
    Ok(())
}

fn converge(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let report = convergence_study(&cfg.convergence())?;
    write_report(&report, dir)?;
    if let Some(r) = report.rows.iter().find(|r| r.outcome.is_err()) {
        return Err(Error::Parameter(format!("row m = {}, N = {} failed", r.m, r.n_steps)));
    }
    Ok(())
}

fn practical(cfg: &RunConfig, dir: &Path, vtu: bool) -> Result<Vec<PracticalResult>> {
    let mut results = Vec::new();
    for &lambda in &cfg.lambdas {
        let pc = cfg.practical(Some(lambda));
        let (setup, r) = practical_problem(&pc, false)?;
        println!(
            "lambda = {lambda}: final strain {:.5}, pressure range [{:.4}, {:.4}]",
            r.strain_series.last().copied().unwrap_or(0.0),
            r.pressure_range.0,
            r.pressure_range.1
        );
        if vtu || cfg.vtu_every > 0 {
            std::fs::create_dir_all(dir)?;
            export_vtu(&r.final_state, &setup, &dir.join(format!("practical_lambda{lambda}.vtu")))?;
        }
        results.push(r);
    }
    let runs: Vec<_> = results
        .iter()
        .map(|r| (r.lambda, r.times.clone(), r.strain_series.clone()))
        .collect();
    write_strain_csv(&StrainTable::from_series(&runs)?, create(dir, "strain_linf.csv")?)?;
    Ok(results)
}

fn run_single(cfg: &RunConfig, dir: &Path) -> Result<()> {
    match cfg.problem {
        ProblemKind::Practical => {
            practical(cfg, dir, false)?;
        }
        ProblemKind::Manufactured if !cfg.rows.is_empty() => converge(cfg, dir)?,
        ProblemKind::Manufactured => {
            let case = ManufacturedCase::new(cfg.theta, cfg.params);
            let mut setup = case.setup(cfg.m, cfg.n_steps)?;
            setup.viscous_form = cfg.viscous_form;
            let initial = case.initial_state(&setup);
            let mut acc = ErrorAccumulator::new(case);
            if cfg.vtu_every > 0 {
                std::fs::create_dir_all(dir)?;
            }
            let out = time_loop(&setup, &cfg.params, initial, RunOptions::default(), |state, _| {
                acc.add(state, &setup);
                if cfg.vtu_every > 0 && (state.step % cfg.vtu_every == 0 || state.step == setup.n_steps) {
                    export_vtu(state, &setup, &dir.join(format!("step{:05}.vtu", state.step)))?;
                }
                Ok(())
            })?;
            let row = ConvergenceRow {
                m: cfg.m,
                n_steps: cfg.n_steps,
                outcome: Ok(acc.finish()),
                max_abs_div_u: out.diagnostics.iter().map(|d| d.max_abs_div_prev).fold(0.0, f64::max),
                max_residual: out.diagnostics.iter().map(|d| d.residual).fold(0.0, f64::max),
            };
            write_error_csv(std::slice::from_ref(&row), create(dir, &format!("errors_{}.csv", cfg.theta.name()))?)?;
            print_rows(&[row]);
        }
    }
    Ok(())
}

fn validate_params(cfg: &RunConfig) {
    let g = validate_smallness(&cfg.params);
    let p = &cfg.params;
    println!(
        "alpha={} nu={} rho={} e1={} e2={} lambda1={} lambda2={} delta={}",
        p.alpha, p.nu, p.rho, p.e1, p.e2, p.lambda1, p.lambda2, p.delta
    );
    for (i, v) in g.as_array().iter().enumerate() {
        println!("gamma{}={v}", i + 1);
    }
    println!("admissible={}", g.admissible);
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, output } => {
            let cfg = load_config(&config)?;
            let dir = output.unwrap_or_else(|| cfg.output_dir.clone());
            run_single(&cfg, &dir)
        }
        Command::Converge { config, theta, rows, output } => {
            let mut cfg = config_or_default(config.as_deref(), r#"{"problem": "manufactured"}"#)?;
            if cfg.problem != ProblemKind::Manufactured {
                return Err(Error::Config {
                    path: "problem".into(),
                    message: "converge needs a manufactured configuration".into(),
                });
            }
            if let Some(t) = theta {
                cfg.theta = t;
            }
            if let Some(r) = rows {
                cfg.rows = r.0;
            }
            if cfg.rows.is_empty() {
                return Err(Error::Config {
                    path: "rows".into(),
                    message: "no (m, N) rows given".into(),
                });
            }
            let dir = output.unwrap_or_else(|| cfg.output_dir.clone());
            info!("writing convergence tables to {}", dir.display());
            converge(&cfg, &dir)
        }
        Command::Practical {
            config,
            lambdas,
            viscous_form,
            vtu,
            output,
        } => {
            let mut cfg = config_or_default(config.as_deref(), r#"{"problem": "practical", "lambdas": [0, 1, 2, 3, 4, 5]}"#)?;
            if cfg.problem != ProblemKind::Practical {
                return Err(Error::Config {
                    path: "problem".into(),
                    message: "practical needs a practical configuration".into(),
                });
            }
            if let Some(l) = lambdas {
                cfg.lambdas = l;
            }
            if let Some(v) = viscous_form {
                cfg.viscous_form = v;
            }
            let dir = output.unwrap_or_else(|| cfg.output_dir.clone());
            practical(&cfg, &dir, vtu).map(|_| ())
        }
        Command::ValidateParams { config } => {
            let cfg = config_or_default(config.as_deref(), "{}")?;
            validate_params(&cfg);
            Ok(())
        }
    }
}

/// Entry point; `args[0]` is the program name.
pub fn cli_main(args: &[String]) -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } => 2,
                _ => 1,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(a: &[&str]) -> Vec<String> {
        std::iter::once("poroflow").chain(a.iter().copied()).map(String::from).collect()
    }

    #[test]
    fn missing_subcommand_is_usage_error() {
        assert_eq!(cli_main(&args(&[])), 2);
        assert_eq!(cli_main(&args(&["frobnicate"])), 2);
        assert_eq!(cli_main(&args(&["converge", "--rows", "4-10"])), 2);
    }

    #[test]
    fn row_parsing() {
        assert_eq!(parse_rows("4:10,5:40,6:160").unwrap().0, vec![(4, 10), (5, 40), (6, 160)]);
        assert!(parse_rows("4:0").is_err());
        assert!(parse_rows("x:1").is_err());
    }

    #[test]
    fn validate_params_succeeds() {
        assert_eq!(cli_main(&args(&["validate-params"])), 0);
    }

    #[test]
    fn bad_config_file_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"nz": 1}"#).unwrap();
        assert_eq!(cli_main(&args(&["run", path.to_str().unwrap()])), 2);
        assert_eq!(cli_main(&args(&["run", "/nonexistent/config.json"])), 1);
    }

    #[test]
    fn small_convergence_run_writes_tables() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(cli_main(&args(&["converge", "--theta", "sin", "--rows", "1:2,2:2", "--output", out])), 0);
        let text = std::fs::read_to_string(dir.path().join("errors_sin.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(dir.path().join("rates_sin.csv").exists());
    }

    #[test]
    fn run_with_rows_is_a_convergence_study() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("rows.json");
        std::fs::write(&cfg, r#"{"theta": "exp", "rows": [[1, 2], [2, 2]]}"#).unwrap();
        let out = dir.path().join("out");
        assert_eq!(cli_main(&args(&["run", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()])), 0);
        let text = std::fs::read_to_string(out.join("errors_exp.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(out.join("rates_exp.csv").exists());
    }
}
