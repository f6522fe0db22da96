//! Command-line runner for the cloning simulator.

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use uqcm_core::metrics::Layer;

use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(
    name = "uqcm",
    version,
    about = "Simulate a resonator-mediated universal quantum cloning machine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; every field defaults to the reference device.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    layer: Option<LayerArg>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Shots per tomography setting.
    #[arg(long, global = true)]
    shots: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Clone fidelities, concurrences and output density matrices.
    Clone,
    /// Process matrices of the input-to-output channels.
    Process {
        /// Switch both interactions off; the original qubit's channel is then the identity.
        #[arg(long)]
        identity: bool,
    },
    /// Sampled two-qubit tomography of the copy pair.
    Tomo,
    /// Copy-pair protection against frequency noise over a noise grid.
    Decoupling,
    /// Gate-level scan of the interaction times.
    Sweep,
    /// Print the effective configuration as TOML.
    ShowConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    Ideal,
    Pulse,
    Noisy,
}

impl From<LayerArg> for Layer {
    fn from(l: LayerArg) -> Self {
        match l {
            LayerArg::Ideal => Layer::Ideal,
            LayerArg::Pulse => Layer::Pulse,
            LayerArg::Noisy => Layer::Noisy,
        }
    }
}

fn load(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("reading {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.run.seed = Some(s);
    }
    if let Some(l) = cli.layer {
        cfg.run.layer = l.into();
    }
    if let Some(o) = &cli.out {
        cfg.run.out = o.clone();
    }
    if let Some(n) = cli.shots {
        cfg.tomography.shots = n;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = load(cli)?;
    let out = match cli.command {
        Command::Clone => commands::clone(&cfg)?,
        Command::Process { identity } => commands::process(&cfg, identity)?,
        Command::Tomo => commands::tomo(&cfg)?,
        Command::Decoupling => commands::decoupling(&cfg)?,
        Command::Sweep => commands::sweep(&cfg)?,
        Command::ShowConfig => {
            say!("{}", cfg.to_toml()?.trim_end());
            return Ok(());
        }
    };
    log::info!(
        "wrote {} files to {}",
        out.written().len(),
        cfg.run.out.display()
    );
    Ok(())
}

/// 2 for configuration problems, 3 for numerical failures, 1 otherwise.
fn exit_code(e: &anyhow::Error) -> u8 {
    use uqcm_core::Error as E;
    for cause in e.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::InvalidParameter(_)
                | E::ScheduleInvalid(_)
                | E::NotNormalized(_)
                | E::ZeroDetuning
                | E::SingularConfusion(_) => 2,
                _ => 3,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
