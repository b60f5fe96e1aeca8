mod commands;
mod config;
mod figures;
mod table;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pnes::protocols::SettingsStrategy;
use pnes::PnesError;

use config::{Overrides, ScenarioConfig};
use figures::Figure;
use table::{Format, Table};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameters (exit 2).
    Validation(String),
    /// A reproduced figure missed its tolerance (exit 3).
    Tolerance(Vec<String>),
    /// Numerical or I/O failure (exit 1).
    Run(String),
}

impl CliError {
    /// Library errors raised while building circuits from user input.
    pub fn from_config(e: PnesError) -> Self {
        CliError::Validation(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Tolerance(_) => 3,
            CliError::Run(_) => 1,
        }
    }
}

impl From<PnesError> for CliError {
    fn from(e: PnesError) -> Self {
        match e {
            PnesError::InvalidParameter(_) | PnesError::InvalidCutoffs(_) => CliError::Validation(e.to_string()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Tolerance(v) => write!(f, "tolerance check failed: {}", v.join("; ")),
            CliError::Run(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "pnes", version, about = "Photon-number entangled states: measures, protocols and heralded circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Detector efficiency.
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Fock cutoff of the signal modes.
    #[arg(long, global = true)]
    cutoff_signal: Option<usize>,
    /// Fock cutoff of the ancilla modes.
    #[arg(long, global = true)]
    cutoff_ancilla: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "PNES_THREADS")]
    threads: Option<usize>,
    /// Write records here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Entanglement entropy and EPR correlation of a resource.
    Measures(ResourceArgs),
    /// Coherent-state teleportation fidelity of a resource.
    Teleport(ResourceArgs),
    /// Bell-Wigner value maximized over displacement settings.
    Bell(BellArgs),
    /// Run a scenario file or preset.
    Scheme(ScenarioArgs),
    /// Beam-splitter error sweep over a scenario.
    Sweep(SweepArgs),
    /// Regenerate a figure's data and check its tolerances.
    Reproduce {
        #[arg(long, value_enum)]
        figure: Figure,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ResourceKind {
    Pnes,
    Tmss,
}

#[derive(Args)]
struct ResourceArgs {
    #[arg(long, value_enum, default_value_t = ResourceKind::Pnes)]
    resource: ResourceKind,
    /// Real PNES amplitudes C_0,C_1,... (normalized on input).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coeffs: Vec<f64>,
    /// TMSS squeezing.
    #[arg(long)]
    s: Option<f64>,
    /// Optimize an N-photon PNES for this protocol instead.
    #[arg(long, value_name = "N")]
    optimize: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Real,
    Complex,
}

#[derive(Args)]
struct BellArgs {
    #[command(flatten)]
    resource: ResourceArgs,
    #[arg(long, value_enum, default_value_t = Strategy::Real)]
    strategy: Strategy,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Shipped scenario, e.g. scheme1-teleport.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Transmission shifts, overriding the scenario's.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    deltas: Vec<f64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig, CliError> {
        match (&self.config, &self.preset) {
            (Some(p), _) => ScenarioConfig::load(p),
            (None, Some(name)) => config::preset(name),
            (None, None) => unreachable!("clap requires one"),
        }
    }
}

fn resource_of(a: &ResourceArgs, objective: &str) -> Result<commands::Resource, CliError> {
    if let Some(n) = a.optimize {
        if n == 0 {
            return Err(CliError::Validation("--optimize needs N >= 1".into()));
        }
        if !a.coeffs.is_empty() || a.s.is_some() {
            return Err(CliError::Validation("--optimize excludes --coeffs and --s".into()));
        }
        return commands::optimized(n, objective);
    }
    match a.resource {
        ResourceKind::Pnes if a.coeffs.is_empty() => Err(CliError::Validation("--resource pnes needs --coeffs".into())),
        ResourceKind::Pnes => commands::resource(Some(&a.coeffs), None),
        ResourceKind::Tmss => {
            let s = a.s.ok_or_else(|| CliError::Validation("--resource tmss needs --s".into()))?;
            commands::resource(None, Some(s))
        }
    }
}

fn run(cli: &Cli) -> Result<(Table, Option<PathBuf>, Vec<String>), CliError> {
    let o = Overrides { eta: cli.eta, cutoff_signal: cli.cutoff_signal, cutoff_ancilla: cli.cutoff_ancilla };
    if let Some(eta) = o.eta {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(CliError::Validation(format!("--eta {eta} outside (0, 1]")));
        }
    }
    let none = Vec::new();
    Ok(match &cli.command {
        Command::Measures(a) => (commands::measures(&resource_of(a, "epr")?)?, None, none),
        Command::Teleport(a) => (commands::teleport(&resource_of(a, "teleport")?)?, None, none),
        Command::Bell(b) => {
            let strategy = match b.strategy {
                Strategy::Real => SettingsStrategy::RealLine,
                Strategy::Complex => SettingsStrategy::Complex,
            };
            match b.resource.optimize {
                Some(n) if n >= 1 => (commands::bell(None, Some(n), strategy)?, None, none),
                Some(_) => return Err(CliError::Validation("--optimize needs N >= 1".into())),
                None => (commands::bell(Some(&resource_of(&b.resource, "bell")?), None, strategy)?, None, none),
            }
        }
        Command::Scheme(a) => {
            let cfg = a.load()?;
            (commands::scheme(&cfg, &o)?, cfg.output_path.clone(), none)
        }
        Command::Sweep(a) => {
            let cfg = a.scenario.load()?;
            let deltas = (!a.deltas.is_empty()).then_some(a.deltas.as_slice());
            (commands::sweep(&cfg, &o, deltas)?, cfg.output_path.clone(), none)
        }
        Command::Reproduce { figure } => {
            let d = figures::reproduce(*figure, &o)?;
            (d.table, None, d.failed)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("pnes: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = run(&cli).and_then(|(table, cfg_path, failed)| {
        let text = table.render(cli.format);
        match cli.out.clone().or(cfg_path) {
            Some(p) => std::fs::write(&p, text).map_err(|e| CliError::Run(format!("{}: {e}", p.display())))?,
            None => print!("{text}"),
        }
        if failed.is_empty() {
            Ok(())
        } else {
            Err(CliError::Tolerance(failed))
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pnes: {e}");
            ExitCode::from(e.code())
        }
    }
}
