//! `qnd`: coefficients, correlation reports, sweeps, gain optimization,
//! contours and Fock-oracle spot checks for the hybrid interferometer.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{RunConfig, ValidationError};

#[derive(Parser, Debug)]
#[command(name = "qnd", version, about = "Photon-number QND readout with an atom-light hybrid interferometer")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Parameter flags; unset flags fall back to the config file, then to the
/// reference operating point.
#[derive(Args, Debug)]
struct CommonArgs {
    /// Config file: flat `key = value` lines or JSON (a previous `--json`
    /// report works too)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Emit JSON instead of text
    #[arg(long, global = true)]
    json: bool,
    /// Use the lossy model (photon loss and dephasing)
    #[arg(long, global = true)]
    lossy: bool,
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,

    #[arg(long, global = true, allow_hyphen_values = true)]
    g1: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    g2: Option<String>,
    /// Preparation pump phase, radians (`pi`, `pi/2`, `3pi/4` accepted)
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta1: Option<String>,
    /// Readout pump phase, radians
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta2: Option<String>,
    /// Phase offset without signal, radians
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi0: Option<String>,
    /// Phase per signal photon
    #[arg(long, global = true, allow_hyphen_values = true)]
    kappa: Option<String>,
    /// Mean photon number of the write field
    #[arg(long, global = true, allow_hyphen_values = true)]
    n_alpha: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta_alpha: Option<String>,
    /// Internal photon transmission
    #[arg(long, global = true, allow_hyphen_values = true)]
    eta1: Option<String>,
    /// External photon transmission
    #[arg(long, global = true, allow_hyphen_values = true)]
    eta2: Option<String>,
    /// Internal dephasing factor
    #[arg(long, global = true, allow_hyphen_values = true)]
    d1: Option<String>,
    /// External dephasing factor
    #[arg(long, global = true, allow_hyphen_values = true)]
    d2: Option<String>,
    /// Mean photon number of a coherent signal
    #[arg(long, global = true, allow_hyphen_values = true)]
    n_beta: Option<String>,
    /// Photon number of a Fock signal
    #[arg(long, global = true, allow_hyphen_values = true)]
    n_b: Option<String>,
    /// Explicit interferometer phase, radians
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Grid points per transmission axis
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Contour level of C
    #[arg(long, global = true, allow_hyphen_values = true)]
    level: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    g2_lo: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    g2_hi: Option<String>,
    /// Starting Fock cutoff (levels per mode)
    #[arg(long, global = true, allow_hyphen_values = true)]
    cutoff: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    max_cutoff: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Linearized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    /// C at the configured readout gain
    C,
    /// C after optimizing the readout gain
    COpt,
    /// Optimized g2 / g1
    Ratio,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form output coefficients at one phase
    Coeffs,
    /// Moments and QND correlation for a coherent signal
    Qnd,
    /// Signal-to-noise ratio for a Fock signal with `--n-b` photons
    Snr,
    /// C over the (eta1, eta2) grid as CSV
    Sweep {
        /// Also optimize the readout gain at every point
        #[arg(long)]
        optimize: bool,
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Readout gain maximizing C at one operating point
    Optimize,
    /// Level-set polylines of a sweep as JSON
    Contour {
        /// Sweep CSV to read instead of computing a fresh sweep
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "c")]
        field: FieldArg,
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Truncated Fock-space check of the probe moments (small parameters)
    Oracle,
}

impl CommonArgs {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("g1", &self.g1),
            ("g2", &self.g2),
            ("theta1", &self.theta1),
            ("theta2", &self.theta2),
            ("phi0", &self.phi0),
            ("kappa", &self.kappa),
            ("n_alpha", &self.n_alpha),
            ("theta_alpha", &self.theta_alpha),
            ("eta1", &self.eta1),
            ("eta2", &self.eta2),
            ("d1", &self.d1),
            ("d2", &self.d2),
            ("n_beta", &self.n_beta),
            ("n_b", &self.n_b),
            ("phi", &self.phi),
            ("grid", &self.grid),
            ("level", &self.level),
            ("g2_lo", &self.g2_lo),
            ("g2_hi", &self.g2_hi),
            ("cutoff", &self.cutoff),
            ("max_cutoff", &self.max_cutoff),
        ]
    }

    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        for (key, value) in self.overrides() {
            if let Some(value) = value {
                config.set(key, value)?;
            }
        }
        if self.lossy {
            config.lossy = true;
        }
        if let Some(method) = self.method {
            config.method = match method {
                MethodArg::Exact => qnd_core::Method::Exact,
                MethodArg::Linearized => qnd_core::Method::Linearized,
            };
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = cli.common.resolve()?;
    let json = cli.common.json;
    match cli.command {
        Command::Coeffs => commands::coeffs(&config, json),
        Command::Qnd => commands::qnd(&config, json),
        Command::Snr => commands::snr(&config, json),
        Command::Sweep { optimize, output } => commands::sweep(&config, optimize, output.as_deref()),
        Command::Optimize => commands::optimize(&config, json),
        Command::Contour { input, field, output } => {
            commands::contour(&config, input.as_deref(), field, output.as_deref())
        }
        Command::Oracle => commands::oracle(&config, json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<ValidationError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
