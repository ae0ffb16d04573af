use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use nous_core::config::DEFAULT_CONFIG_FILE;
use nous_core::views::render;
use nous_core::{Engine, EngineConfig, Error, PathRequest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nous", version, about = "Dynamic knowledge-graph engine")]
pub struct Cli {
    /// Engine configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a curated knowledge base (TSV).
    LoadKb { tsv: PathBuf },
    /// Ingest a JSON-lines stream of raw triples.
    Ingest { jsonl: PathBuf },
    /// Learn new predicate phrases from raw triples by distant supervision.
    Expand { jsonl: PathBuf },
    /// Retrain fact-scoring models, and topics when a document file is configured.
    Retrain,
    /// Mine closed frequent patterns of the current window from scratch.
    Mine,
    /// Explain how two entities are related.
    Ask {
        from: String,
        to: String,
        /// Only paths using this predicate.
        #[arg(long)]
        rel: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "max-hops")]
        max_hops: Option<usize>,
    },
    /// Print the latest pattern emission.
    Trending,
    /// Start the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
    /// Print store counts.
    Stats,
}

/// Explicit `--config` must exist; the default file may be absent, in
/// which case defaults apply.
pub fn load_config(explicit: Option<&Path>) -> Result<EngineConfig, Error> {
    match explicit {
        Some(p) => EngineConfig::load(p),
        None => {
            let p = Path::new(DEFAULT_CONFIG_FILE);
            if p.exists() {
                EngineConfig::load(p)
            } else {
                Ok(EngineConfig::default())
            }
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Error> {
    let config = load_config(cli.config.as_deref())?;
    if let Command::Serve { port } = cli.command {
        return serve(config, port);
    }
    let mut engine = Engine::open(config)?;
    let text = match cli.command {
        Command::LoadKb { tsv } => save(&engine.load_kb(&tsv)?, &engine)?,
        Command::Ingest { jsonl } => save(&engine.ingest_file(&jsonl)?, &engine)?,
        Command::Expand { jsonl } => save(&engine.expand_file(&jsonl)?, &engine)?,
        Command::Retrain => save(&engine.retrain()?, &engine)?,
        Command::Mine => render(&engine.mine()),
        Command::Ask {
            from,
            to,
            rel,
            k,
            max_hops,
        } => render(&engine.view().paths(&PathRequest {
            from,
            to,
            rel,
            k,
            max_hops,
        })?),
        Command::Trending => render(&engine.view().trending()),
        Command::Stats => render(&engine.view().stats()),
        Command::Serve { .. } => unreachable!("handled above"),
    };
    writeln!(out, "{text}")?;
    Ok(())
}

fn save<T: serde::Serialize>(report: &T, engine: &Engine) -> Result<String, Error> {
    engine.save()?;
    Ok(render(report))
}

fn serve(config: EngineConfig, port: Option<u16>) -> Result<(), Error> {
    let host: IpAddr = config
        .service
        .host
        .parse()
        .map_err(|_| Error::InvalidConfig {
            key: "service.host".into(),
            reason: format!("not an IP address: {:?}", config.service.host),
        })?;
    let addr = SocketAddr::new(host, port.unwrap_or(config.service.port));
    let engine = Engine::open(config)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crate::server::serve(engine, addr))?;
    Ok(())
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            EXIT_DATA
        }
    }
}
