use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use typesim_cli::validate::validate_traces;
use typesim_cli::{corpus_file_name, read_trace, read_traces, replay, CliError, Setup};
use typesim_core::analyzer::{load_logs, report, write_sessions_csv};
use typesim_core::runtime::Preset;
use typesim_gateway::{serve, Gateway, GatewayConfig};

#[derive(Parser)]
#[command(name = "typesim", version, about = "Human-like typing traces for chat agents")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Gateway configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = parse_preset)]
    preset: Option<Preset>,
    /// Output file, or directory in corpus mode.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the chat gateway.
    Serve {
        /// Overrides the configured listen address.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Generate trace files.
    Trace {
        /// Reply text to simulate.
        #[arg(required_unless_present = "corpus", conflicts_with = "corpus")]
        text: Option<String>,
        /// File with one reply per line; writes numbered traces into --out.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Reconstruct a trace's text and summarize its timing.
    Replay { trace: PathBuf },
    /// Check traces against a configuration.
    Validate {
        /// Trace files or directories of them.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Summarize conversation logs.
    Analyze {
        /// Log file or directory of logs.
        logs: PathBuf,
        /// Also write one CSV row per session.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse()
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Data(format!("stdout: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let c = &cli.common;
    match cli.command {
        Command::Serve { listen } => {
            let mut config = GatewayConfig::load(c.config.as_deref())?;
            if let Some(l) = listen {
                config.listen = l;
            }
            if let Some(p) = c.preset {
                config.default_preset = p;
            }
            if c.seed.is_some() {
                config.seed = c.seed;
            }
            config.validate()?;
            tracing_subscriber::fmt()
                .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
                .init();
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Data(e.to_string()))?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&config.listen)
                    .await
                    .map_err(|e| CliError::Data(format!("{}: {e}", config.listen)))?;
                eprintln!("listening on {}", config.listen);
                let gateway = Gateway::from_config(config)?;
                serve(gateway, listener).await.map_err(|e| CliError::Data(e.to_string()))
            })?;
            Ok(true)
        }
        Command::Trace { text, corpus } => {
            let setup = Setup::load(c.config.as_deref(), c.preset)?;
            let seed = setup.seed(c.seed);
            match (text, corpus) {
                (Some(text), _) => emit(c.out.as_deref(), &setup.trace(&text, seed)?.to_jsonl())?,
                (None, Some(path)) => {
                    let dir = c
                        .out
                        .as_deref()
                        .ok_or_else(|| CliError::Config("corpus mode needs --out <dir>".into()))?;
                    let corpus = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
                    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                    let traces = setup.trace_corpus(&corpus, seed)?;
                    for (line, trace) in &traces {
                        let file = dir.join(corpus_file_name(*line));
                        std::fs::write(&file, trace.to_jsonl()).map_err(|e| io_err(&file, e))?;
                    }
                    eprintln!("wrote {} traces to {}", traces.len(), dir.display());
                }
                (None, None) => unreachable!("clap requires text or --corpus"),
            }
            Ok(true)
        }
        Command::Replay { trace } => {
            let summary = replay(&read_trace(&trace)?)?;
            emit(c.out.as_deref(), &format!("{summary}\n"))?;
            Ok(true)
        }
        Command::Validate { paths } => {
            let traces = read_traces(&paths)?;
            let explicit = c.config.is_some() || c.preset.is_some();
            let setup = Setup::load(c.config.as_deref(), c.preset)?;
            let (temporal, editing) = if explicit {
                (setup.agent.temporal, setup.agent.editing)
            } else {
                let first = traces
                    .first()
                    .map(|(_, t)| (t.temporal, t.editing))
                    .ok_or_else(|| CliError::Data("no traces found".into()))?;
                if traces.iter().any(|(_, t)| (t.temporal, t.editing) != first) {
                    return Err(CliError::Config(
                        "traces carry different parameters; pass --config or --preset".into(),
                    ));
                }
                first
            };
            let report = validate_traces(&traces, &temporal, &editing, &setup.lexicon);
            emit(c.out.as_deref(), &format!("{report}\n"))?;
            Ok(report.passed())
        }
        Command::Analyze { logs, csv } => {
            let sessions = load_logs(&logs).map_err(|e| CliError::Data(e.to_string()))?;
            if let Some(path) = csv {
                let file = std::fs::File::create(&path).map_err(|e| io_err(&path, e))?;
                write_sessions_csv(&sessions, file).map_err(|e| CliError::Data(e.to_string()))?;
            }
            let json = serde_json::to_string_pretty(&report(&sessions)).expect("report serializes");
            emit(c.out.as_deref(), &format!("{json}\n"))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("typesim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
