//! `ipgrover`: command-line runner for searches, figure data, the validation
//! suite and the physics checks.
//!
//! Exit status: 0 on success, 1 when a validation or physics check fails or
//! a run aborts, 2 on a usage error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ionpair_grover::engine::Scheme;
use ionpair_grover::harness::{
    cmd_figures, cmd_physics, cmd_search, cmd_validate, ConfigLayer, ExperimentConfig, Format, Mode,
};
use ionpair_grover::Error;

#[derive(Parser, Debug)]
#[command(name = "ipgrover", version, about = "Ion-pair Grover search simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Number of qubits (ion pairs).
    #[arg(long, global = true)]
    q: Option<u32>,

    /// Marked state as a bitstring, first pair first.
    #[arg(long, global = true, value_name = "BITS")]
    marked: Option<String>,

    /// Marked state as a 1-based index: 1 is all ones, 2^q is all zeros.
    #[arg(long, global = true, value_name = "INDEX", conflicts_with = "marked")]
    marked_index: Option<usize>,

    #[arg(long, global = true)]
    iters: Option<usize>,

    #[arg(long, global = true, value_parser = parse_scheme)]
    scheme: Option<Scheme>,

    /// Output file (search, validate, physics) or directory (figures).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,

    /// Integrator tolerance for physics runs.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    fock_cutoff: Option<usize>,

    /// Carrier Rabi frequency, in units of the trap frequency.
    #[arg(long, global = true, allow_hyphen_values = true)]
    omega: Option<f64>,

    /// Lamb-Dicke parameter.
    #[arg(long, global = true, allow_hyphen_values = true)]
    eta: Option<f64>,

    /// Detuning, in units of the trap frequency.
    #[arg(long, global = true, allow_hyphen_values = true)]
    delta: Option<f64>,

    /// Run physics outside the perturbative regime, reporting warnings.
    #[arg(long, global = true)]
    force: bool,

    #[arg(long, global = true)]
    q_min: Option<u32>,

    #[arg(long, global = true)]
    q_max: Option<u32>,

    /// Corrupt the inversion operator so `validate` must fail.
    #[arg(long, global = true, hide = true)]
    inject_fault: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run one search and report peak, co-maximal states and recurrence.
    Search,
    /// Write the all-ones trajectories for 3, 4 and 5 qubits.
    Figures,
    /// Run the self-consistency checks.
    Validate,
    /// Compare the effective pair model with the full bichromatic dynamics.
    Physics,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Cli {
    fn flags(&self) -> ConfigLayer {
        let mode = match self.command {
            Command::Search => Mode::Search,
            Command::Figures => Mode::Figures,
            Command::Validate => Mode::Validate,
            Command::Physics => Mode::Physics,
        };
        ConfigLayer {
            mode: Some(mode),
            q: self.q,
            marked: self.marked.clone(),
            marked_index: self.marked_index,
            iters: self.iters,
            scheme: self.scheme,
            tol: self.tol,
            seed: self.seed,
            fock_cutoff: self.fock_cutoff,
            omega: self.omega,
            eta: self.eta,
            delta: self.delta,
            force: self.force.then_some(true),
            q_min: self.q_min,
            q_max: self.q_max,
            inject_fault: self.inject_fault.then_some(true),
            out: self.out.clone(),
            format: self.format,
        }
    }
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Parse(_) | Error::ResourceLimit(_) | Error::RegimeViolation(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Run(other.to_string()),
        }
    }
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Run(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let file = match &cli.config {
        Some(path) => ConfigLayer::load(path)?,
        None => ConfigLayer::default(),
    };
    // the subcommand always decides the mode
    let mut layer = file.merge(cli.flags());
    layer.mode = cli.flags().mode;
    let cfg = ExperimentConfig::from_layer(layer)?;
    match cfg.mode {
        Mode::Search => {
            let outcome = cmd_search(&cfg)?;
            print!("{outcome}");
            if let Some(path) = &cfg.out {
                println!("trajectory written to {}", path.display());
            }
            Ok(true)
        }
        Mode::Figures => {
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
            for path in cmd_figures(&dir, cfg.format)? {
                println!("{}", path.display());
            }
            Ok(true)
        }
        Mode::Validate => {
            let report = cmd_validate(&cfg)?;
            let text = match cfg.format {
                Format::Csv => report.to_string(),
                Format::Json => serde_json::to_string_pretty(&report).expect("report serialises") + "\n",
            };
            write_or_print(cfg.out.as_ref(), &text)?;
            Ok(report.passed())
        }
        Mode::Physics => {
            let report = cmd_physics(&cfg)?;
            let text = match cfg.format {
                Format::Csv => report.to_string(),
                Format::Json => serde_json::to_string_pretty(&report).expect("report serialises") + "\n",
            };
            write_or_print(cfg.out.as_ref(), &text)?;
            Ok(report.passed() || (cfg.force && !cfg.pulse.regime_warnings().is_empty()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = run(&cli);
    let _ = std::io::stdout().flush();
    match status {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
