//! Command-line front end: argument parsing and experiment dispatch.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::chain::{coupling_profile, spectral_decomposition, ChainSpec, MIN_CHAIN_LENGTH};
use crate::correlations::{default_curve_families, discord_curves, SenderState};
use crate::error::Result;
use crate::io::{emit_csv, emit_json, Table, Value};
use crate::optimizer::{
    default_n_grid, default_phi_grid, find_first_maximum_default, fit_exponential, phi_sweep,
    scaling_exponent, FitResult,
};
use crate::sweep::{
    run_map_experiment_with, sweep, CoverageReport, MapOptions, SubDomain, SweepPoint,
    DEFAULT_CELL_SIZE, DEFAULT_COVERAGE_STEP, DEFAULT_STEP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Command {
    Profile,
    Curves,
    Optimize,
    PhiSweep,
    Scaling,
    Fit,
    Sweep,
    Map,
}

/// Validated settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub phi: f64,
    pub step: f64,
    pub t: Option<f64>,
    pub domain: SubDomain,
    /// `None` writes to stdout.
    pub output_path: Option<PathBuf>,
    pub samples: usize,
    pub phi_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub cell_size: f64,
    pub coverage_step: f64,
    pub report_path: Option<PathBuf>,
}

impl RunConfig {
    fn new(command: Command) -> Self {
        RunConfig {
            command,
            n: 20,
            phi: 0.5,
            step: DEFAULT_STEP,
            t: None,
            domain: SubDomain::Full,
            output_path: None,
            samples: 101,
            phi_grid: default_phi_grid(),
            n_grid: default_n_grid(),
            cell_size: DEFAULT_CELL_SIZE,
            coverage_step: DEFAULT_COVERAGE_STEP,
            report_path: None,
        }
    }
}

/// A command line that could not be turned into a [`RunConfig`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError {
    pub message: String,
    /// `--help` / `--version`: print the message and exit successfully.
    pub informational: bool,
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> UsageError {
    UsageError {
        message: message.into(),
        informational: false,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "chaincorr",
    version,
    about = "Remote creation of receiver correlations over XY spin chains"
)]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Args)]
struct Output {
    /// Output file (default: stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Chain {
    /// Chain length N (at least 5).
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Inhomogeneity parameter in [0, 0.5].
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    phi: f64,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Coupling constants D_i of the chain.
    Profile {
        #[command(flatten)]
        chain: Chain,
        #[command(flatten)]
        output: Output,
    },
    /// Q_ext and Q_R as functions of R^2 for R_{N-1}^2 = 0, 0.1, ..., 1.
    Curves {
        /// Points per curve.
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[command(flatten)]
        output: Output,
    },
    /// First maximum of the transfer probability for the sender |1>.
    Optimize {
        #[command(flatten)]
        chain: Chain,
        #[command(flatten)]
        output: Output,
    },
    /// Optimum (t0, R^2_max) for each phi on a grid.
    PhiSweep {
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Comma-separated phi values (default 0, 1/16, ..., 1/2).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        phi_grid: Option<Vec<f64>>,
        #[command(flatten)]
        output: Output,
    },
    /// Exponent gamma in t0 ~ N^gamma.
    Scaling {
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        phi: f64,
        /// Comma-separated chain lengths (default 50, 100, ..., 300).
        #[arg(long, value_delimiter = ',')]
        n_grid: Option<Vec<usize>>,
        #[command(flatten)]
        output: Output,
    },
    /// Fit R^2_max(phi) by c - exp(-a phi pi - b).
    Fit {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        phi_grid: Option<Vec<f64>>,
        #[command(flatten)]
        output: Output,
    },
    /// Discords over one control sub-domain at a fixed time.
    Sweep {
        #[command(flatten)]
        chain: Chain,
        /// Evaluation time (default: optimised t0).
        #[arg(long, allow_negative_numbers = true)]
        t: Option<f64>,
        /// D1, D2, D3, D4 or FULL.
        #[arg(long, default_value = "FULL")]
        domain: String,
        #[arg(long, default_value_t = DEFAULT_STEP, allow_negative_numbers = true)]
        step: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Full pipeline: optimise t0, sweep the sub-domains, account coverage.
    Map {
        #[command(flatten)]
        chain: Chain,
        #[arg(long, default_value_t = DEFAULT_STEP, allow_negative_numbers = true)]
        step: f64,
        /// Sub-domain written to --out.
        #[arg(long, default_value = "FULL")]
        domain: String,
        #[arg(long, default_value_t = DEFAULT_CELL_SIZE, allow_negative_numbers = true)]
        cell_size: f64,
        #[arg(long, default_value_t = DEFAULT_COVERAGE_STEP, allow_negative_numbers = true)]
        coverage_step: f64,
        /// JSON report with the optimum and coverage.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
}

fn check_n(flag: &str, n: usize) -> std::result::Result<(), UsageError> {
    if n < MIN_CHAIN_LENGTH {
        return Err(usage(format!(
            "{flag} {n} is below the minimum chain length {MIN_CHAIN_LENGTH}"
        )));
    }
    Ok(())
}

fn check_phi(flag: &str, phi: f64) -> std::result::Result<(), UsageError> {
    if !(phi.is_finite() && (0.0..=0.5).contains(&phi)) {
        return Err(usage(format!("{flag} {phi} is outside [0, 0.5]")));
    }
    Ok(())
}

fn check_open_unit(flag: &str, v: f64) -> std::result::Result<(), UsageError> {
    if !(v > 0.0 && v < 1.0) {
        return Err(usage(format!("{flag} {v} is outside (0, 1)")));
    }
    Ok(())
}

fn check_divides_half(flag: &str, step: f64) -> std::result::Result<(), UsageError> {
    check_open_unit(flag, step)?;
    let ratio = 0.5 / step;
    if (ratio - ratio.round()).abs() > 1e-9 {
        return Err(usage(format!(
            "{flag} {step} does not divide the sub-domain edge 0.5"
        )));
    }
    Ok(())
}

fn parse_domain(raw: &str) -> std::result::Result<SubDomain, UsageError> {
    raw.parse().map_err(|_| {
        usage(format!(
            "--domain '{raw}' is not one of D1, D2, D3, D4, FULL"
        ))
    })
}

/// Parse `argv` (without the program name) into a validated [`RunConfig`].
pub fn parse_args<I, S>(argv: I) -> std::result::Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = std::iter::once(std::ffi::OsString::from("chaincorr"))
        .chain(argv.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
        UsageError {
            message: e.render().to_string(),
            informational,
        }
    })?;

    let config = match cli.command {
        CommandArgs::Profile { chain, output } => chain_config(Command::Profile, chain, output)?,
        CommandArgs::Optimize { chain, output } => chain_config(Command::Optimize, chain, output)?,
        CommandArgs::Curves { samples, output } => {
            if samples < 2 {
                return Err(usage(format!("--samples {samples} must be at least 2")));
            }
            RunConfig {
                samples,
                output_path: output.out,
                ..RunConfig::new(Command::Curves)
            }
        }
        CommandArgs::PhiSweep {
            n,
            phi_grid,
            output,
        } => grid_config(Command::PhiSweep, n, phi_grid, output)?,
        CommandArgs::Fit {
            n,
            phi_grid,
            output,
        } => grid_config(Command::Fit, n, phi_grid, output)?,
        CommandArgs::Scaling {
            phi,
            n_grid,
            output,
        } => {
            check_phi("--phi", phi)?;
            let n_grid = n_grid.unwrap_or_else(default_n_grid);
            if n_grid.len() < 4 {
                return Err(usage("--n-grid needs at least 4 chain lengths"));
            }
            for &n in &n_grid {
                check_n("--n-grid", n)?;
            }
            RunConfig {
                phi,
                n_grid,
                output_path: output.out,
                ..RunConfig::new(Command::Scaling)
            }
        }
        CommandArgs::Sweep {
            chain,
            t,
            domain,
            step,
            output,
        } => {
            if let Some(t) = t {
                if !t.is_finite() {
                    return Err(usage(format!("--t {t} is not finite")));
                }
            }
            check_divides_half("--step", step)?;
            RunConfig {
                t,
                domain: parse_domain(&domain)?,
                step,
                ..chain_config(Command::Sweep, chain, output)?
            }
        }
        CommandArgs::Map {
            chain,
            step,
            domain,
            cell_size,
            coverage_step,
            report,
            output,
        } => {
            check_divides_half("--step", step)?;
            check_divides_half("--coverage-step", coverage_step)?;
            check_open_unit("--cell-size", cell_size)?;
            RunConfig {
                step,
                domain: parse_domain(&domain)?,
                cell_size,
                coverage_step,
                report_path: report,
                ..chain_config(Command::Map, chain, output)?
            }
        }
    };
    Ok(config)
}

fn chain_config(
    command: Command,
    chain: Chain,
    output: Output,
) -> std::result::Result<RunConfig, UsageError> {
    check_n("--n", chain.n)?;
    check_phi("--phi", chain.phi)?;
    Ok(RunConfig {
        n: chain.n,
        phi: chain.phi,
        output_path: output.out,
        ..RunConfig::new(command)
    })
}

fn grid_config(
    command: Command,
    n: usize,
    phi_grid: Option<Vec<f64>>,
    output: Output,
) -> std::result::Result<RunConfig, UsageError> {
    check_n("--n", n)?;
    let phi_grid = phi_grid.unwrap_or_else(default_phi_grid);
    if phi_grid.is_empty() {
        return Err(usage("--phi-grid is empty"));
    }
    for &phi in &phi_grid {
        check_phi("--phi-grid", phi)?;
    }
    if command == Command::Fit && phi_grid.len() < 4 {
        return Err(usage(
            "--phi-grid needs at least 4 values to fit 3 coefficients",
        ));
    }
    Ok(RunConfig {
        n,
        phi_grid,
        output_path: output.out,
        ..RunConfig::new(command)
    })
}

pub fn sweep_table(points: &[SweepPoint]) -> Table {
    let mut table = Table::new(["alpha1", "alpha2", "q_r", "q_ext", "rsq", "rsq_nm1"]);
    for p in points {
        table.rows.push(
            [p.alpha1, p.alpha2, p.q_r, p.q_ext, p.rsq, p.rsq_nm1]
                .into_iter()
                .map(Value::Real)
                .collect(),
        );
    }
    table
}

#[derive(Serialize)]
struct FitReport<'a> {
    n: usize,
    phi_grid: &'a [f64],
    r2max: Vec<f64>,
    fit: FitResult,
}

#[derive(Serialize)]
struct MapReport<'a> {
    n: usize,
    phi: f64,
    t0: f64,
    r2max: f64,
    step: f64,
    coverage_step: f64,
    coverage: &'a CoverageReport,
}

/// Execute a validated configuration, writing its table or report.
pub fn run(config: &RunConfig) -> Result<()> {
    let out = config.output_path.as_deref();
    let ground = SenderState::ground_site();
    match config.command {
        Command::Profile => {
            let profile = coupling_profile(ChainSpec::new(config.n, config.phi)?)?;
            let mut table = Table::new(["i", "d"]);
            for (i, &d) in profile.d.iter().enumerate() {
                table.push(vec![Value::from(i + 1), Value::Real(d)])?;
            }
            emit_csv(&table, out)
        }
        Command::Curves => {
            let rows = discord_curves(&default_curve_families(), config.samples)?;
            let mut table = Table::new(["r_sq", "r_nm1_sq", "q_ext", "q_r"]);
            for r in rows {
                table.push(
                    [r.r_sq, r.r_nm1_sq, r.q_ext, r.q_r]
                        .into_iter()
                        .map(Value::Real)
                        .collect(),
                )?;
            }
            emit_csv(&table, out)
        }
        Command::Optimize => {
            let decomp =
                spectral_decomposition(&coupling_profile(ChainSpec::new(config.n, config.phi)?)?)?;
            let opt = find_first_maximum_default(&decomp, &ground)?;
            let mut table = Table::new(["n", "phi", "t0", "r2max"]);
            table.push(vec![
                Value::from(config.n),
                Value::Real(config.phi),
                Value::Real(opt.t0),
                Value::Real(opt.r2max),
            ])?;
            emit_csv(&table, out)
        }
        Command::PhiSweep => {
            let optima = phi_sweep(config.n, &config.phi_grid, &ground)?;
            let mut table = Table::new(["phi", "t0", "r2max"]);
            for o in optima {
                table.push(vec![
                    Value::Real(o.spec.phi),
                    Value::Real(o.t0),
                    Value::Real(o.r2max),
                ])?;
            }
            emit_csv(&table, out)
        }
        Command::Scaling => {
            let result = scaling_exponent(config.phi, &config.n_grid, &ground)?;
            emit_json(&result, out)
        }
        Command::Fit => {
            let optima = phi_sweep(config.n, &config.phi_grid, &ground)?;
            let r2max: Vec<f64> = optima.iter().map(|o| o.r2max).collect();
            let fit = fit_exponential(&config.phi_grid, &r2max)?;
            emit_json(
                &FitReport {
                    n: config.n,
                    phi_grid: &config.phi_grid,
                    r2max,
                    fit,
                },
                out,
            )
        }
        Command::Sweep => {
            let decomp =
                spectral_decomposition(&coupling_profile(ChainSpec::new(config.n, config.phi)?)?)?;
            let t = match config.t {
                Some(t) => t,
                None => find_first_maximum_default(&decomp, &ground)?.t0,
            };
            let points = sweep(&decomp, t, config.domain, config.step)?;
            emit_csv(&sweep_table(&points), out)
        }
        Command::Map => {
            let options = MapOptions {
                step: config.step,
                cell_size: config.cell_size,
                coverage_step: config.coverage_step,
                ..MapOptions::default()
            };
            let experiment = run_map_experiment_with(config.n, config.phi, &options)?;
            emit_csv(&sweep_table(&experiment.sweeps[&config.domain]), out)?;
            if let Some(path) = config.report_path.as_deref() {
                write_map_report(config, &experiment, path)?;
            }
            Ok(())
        }
    }
}

fn write_map_report(
    config: &RunConfig,
    experiment: &crate::sweep::MapExperiment,
    path: &Path,
) -> Result<()> {
    emit_json(
        &MapReport {
            n: config.n,
            phi: config.phi,
            t0: experiment.optimum.t0,
            r2max: experiment.optimum.r2max,
            step: config.step,
            coverage_step: config.coverage_step,
            coverage: &experiment.coverage,
        },
        Some(path),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_defaults() {
        let c = parse_args(["map", "--n", "20", "--phi", "0.5"]).unwrap();
        assert_eq!(c.command, Command::Map);
        assert_eq!((c.n, c.phi, c.step), (20, 0.5, 0.05));
        assert_eq!(c.domain, SubDomain::Full);
        assert_eq!(c.output_path, None);
    }

    #[test]
    fn optimize_homogeneous_long_chain() {
        let c = parse_args(["optimize", "--n", "200", "--phi", "0"]).unwrap();
        assert_eq!(c.command, Command::Optimize);
        assert_eq!((c.n, c.phi), (200, 0.0));
    }

    #[test]
    fn phi_out_of_range_names_flag() {
        let err = parse_args(["profile", "--phi", "0.7"]).unwrap_err();
        assert!(err.message.contains("--phi"), "{}", err.message);
        assert!(err.message.contains("[0, 0.5]"));
        assert!(!err.informational);
    }

    #[test]
    fn unknown_flag_and_missing_value() {
        let err = parse_args(["profile", "--bogus", "1"]).unwrap_err();
        assert!(err.message.contains("--bogus"), "{}", err.message);
        let err = parse_args(["optimize", "--n"]).unwrap_err();
        assert!(err.message.contains("--n"), "{}", err.message);
    }

    #[test]
    fn grids_and_domains() {
        let c = parse_args(["phi-sweep", "--n", "30", "--phi-grid", "0,0.25,0.5"]).unwrap();
        assert_eq!(c.phi_grid, vec![0.0, 0.25, 0.5]);
        let c = parse_args(["scaling", "--phi", "0", "--n-grid", "10,20,30,40"]).unwrap();
        assert_eq!(c.n_grid, vec![10, 20, 30, 40]);
        assert!(parse_args(["scaling", "--n-grid", "10,20,30"]).is_err());
        assert!(parse_args(["fit", "--phi-grid", "0,0.1,0.2"]).is_err());
        let c = parse_args(["sweep", "--domain", "d3", "--t", "4.5", "--out", "x.csv"]).unwrap();
        assert_eq!(c.domain, SubDomain::D3);
        assert_eq!(c.t, Some(4.5));
        assert_eq!(c.output_path.as_deref(), Some(Path::new("x.csv")));
        assert!(parse_args(["sweep", "--domain", "D7"]).is_err());
        assert!(parse_args(["sweep", "--step", "0.3"]).is_err());
        assert!(parse_args(["map", "--n", "4"]).is_err());
    }

    #[test]
    fn help_is_informational() {
        let err = parse_args(["--help"]).unwrap_err();
        assert!(err.informational);
    }
}
