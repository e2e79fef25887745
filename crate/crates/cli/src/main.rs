use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tipbeam::spectral::{eigen_residual, exceptional_set, find_modes, Operator};
use tipbeam_cli::config::RunConfig;
use tipbeam_cli::run::{analyze, resolve_params, run, sweep, validate};
use tipbeam_cli::suite::{run_suite, Suite};
use tipbeam_cli::{CliError, EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_OK};

#[derive(Parser)]
#[command(name = "tipbeam", version, about = "Clamped beam with tip payload under nonlinear boundary feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Spectral,
    Energy,
    Dichotomy,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Check parameter and feedback-law admissibility.
    Validate { config: PathBuf },
    /// Eigen-wavenumbers and tip data: `n,p,mu_abs,uL,duL,residual`.
    Spectrum {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "a")]
        operator: OperatorArg,
        #[arg(long, default_value_t = 6)]
        count: usize,
    },
    /// Exceptional inertias for the configured beam: `ell,J_ell`.
    Jset {
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        lmax: u32,
    },
    /// Simulate, analyze and write the run directory; prints the manifest.
    Simulate { config: PathBuf },
    /// Re-classify a finished run from its manifest.
    Analyze { manifest: PathBuf },
    /// Run the acceptance suite and print a JSON report.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        /// Also write the report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run several configurations in parallel, each into its own directory.
    Sweep {
        configs: Vec<PathBuf>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn execute(command: Command) -> Result<i32, CliError> {
    let mut out = std::io::stdout().lock();
    match command {
        Command::Validate { config } => {
            let (cfg, _) = RunConfig::load(&config)?;
            let outcome = validate(&cfg)?;
            writeln!(out, "{}", json(&outcome)?)?;
            Ok(if outcome.passed() { EXIT_OK } else { EXIT_CONFIG })
        }
        Command::Spectrum { config, operator, count } => {
            let (cfg, _) = RunConfig::load(&config)?;
            let params = resolve_params(&cfg)?;
            let op = match operator {
                OperatorArg::A => Operator::A,
                OperatorArg::B => Operator::B,
            };
            writeln!(out, "n,p,mu_abs,uL,duL,residual")?;
            for mode in find_modes(op, &params, count)? {
                writeln!(
                    out,
                    "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.3e}",
                    mode.index,
                    mode.p,
                    mode.mu_abs,
                    mode.u_l,
                    mode.du_l,
                    eigen_residual(&mode, &params)
                )?;
            }
            Ok(EXIT_OK)
        }
        Command::Jset { config, lmax } => {
            let (cfg, _) = RunConfig::load(&config)?;
            let params = resolve_params(&cfg)?;
            writeln!(out, "ell,J_ell")?;
            for (ell, j) in exceptional_set(&params, lmax)?.entries {
                writeln!(out, "{ell},{j:.17e}")?;
            }
            Ok(EXIT_OK)
        }
        Command::Simulate { config } => {
            let (cfg, _) = RunConfig::load(&config)?;
            writeln!(out, "{}", json(&run(&cfg)?)?)?;
            Ok(EXIT_OK)
        }
        Command::Analyze { manifest } => {
            writeln!(out, "{}", json(&analyze(&manifest)?)?)?;
            Ok(EXIT_OK)
        }
        Command::Verify { suite, report } => {
            let suite = match suite {
                SuiteArg::Spectral => Suite::Spectral,
                SuiteArg::Energy => Suite::Energy,
                SuiteArg::Dichotomy => Suite::Dichotomy,
                SuiteArg::All => Suite::All,
            };
            let result = run_suite(suite, |r| eprintln!("{r}"));
            let text = json(&result)?;
            if let Some(path) = report {
                std::fs::write(path, &text)?;
            }
            writeln!(out, "{text}")?;
            Ok(if result.passed { EXIT_OK } else { EXIT_ACCEPTANCE })
        }
        Command::Sweep { configs, workers } => {
            let entries = sweep(&configs, workers)?;
            writeln!(out, "{}", json(&entries)?)?;
            Ok(if entries.iter().all(|e| e.error.is_none()) { EXIT_OK } else { tipbeam_cli::EXIT_NUMERICAL })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("tipbeam: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
