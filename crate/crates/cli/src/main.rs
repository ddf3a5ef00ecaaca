use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use aeroroi_cli::{cmd_beamform, cmd_evaluate, cmd_identify, cmd_synth, serve, CliError, ConfigArgs, Session};
use clap::{Parser, Subcommand};

/// Source identification on sparse beamforming maps.
#[derive(Parser)]
#[command(name = "aeroroi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize CSMs and ground truth for a scenario.
    Synth(ConfigArgs),
    /// CLEAN-SC the stored CSMs and extract source-parts.
    Beamform(ConfigArgs),
    /// Identify sources in the stored source-parts.
    Identify(ConfigArgs),
    /// Score stored results against the ground truth.
    Evaluate(ConfigArgs),
    /// Serve a session over HTTP.
    Serve {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        #[arg(short, long, default_value_t = 8080)]
        port: u16,
        /// Directory of static UI assets.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a.resolve()?).map(drop),
        Command::Beamform(a) => cmd_beamform(&a.resolve()?).map(drop),
        Command::Identify(a) => cmd_identify(&a.resolve()?).map(drop),
        Command::Evaluate(a) => cmd_evaluate(&a.resolve()?).map(drop),
        Command::Serve { config, bind, port, static_dir } => {
            let session = Session::load(&config.resolve()?)?;
            let rt = tokio::runtime::Runtime::new().map_err(aeroroi::Error::from)?;
            rt.block_on(serve(session, SocketAddr::new(bind, port), static_dir))
                .map_err(|e| CliError::Config(format!("cannot serve on {bind}:{port}: {e}")))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
