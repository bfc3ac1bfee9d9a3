mod artifacts;
mod jobs;

use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use artifacts::{toolkit, write_atomic, Artifact};
use jobs::{Failure, RunOptions};

/// Homogenised anchoring coefficients and rugose-slab convergence studies.
#[derive(Debug, Parser)]
#[command(name = "rugose", version, about)]
struct Cli {
    /// JSON payload for the command (`-` reads standard input).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory receiving the artifacts.
    #[arg(long, global = true, env = "RUGOSE_OUTPUT_DIR", default_value = "rugose-out", value_name = "DIR")]
    output: PathBuf,

    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Treat degenerate results as failures (exit code 4).
    #[arg(long, global = true)]
    strict: bool,

    /// Seed for randomly drawn evaluation states.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write zero for every wall-clock field so artifacts are reproducible byte for byte.
    #[arg(long, global = true)]
    no_timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Homogenised coefficients of a 1D slab profile or a 2D surface.
    Effective,
    /// Homogenised energy of an anchoring density at chosen states.
    Homogenize,
    /// Mapped triangulation of the rugose slab.
    Mesh,
    /// Finite element solution of the rugose Robin problem.
    Solve,
    /// Closed-form solution of the homogenised slab problem.
    Limit,
    /// Convergence study over a list of ε.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Effective => "effective",
            Command::Homogenize => "homogenize",
            Command::Mesh => "mesh",
            Command::Solve => "solve",
            Command::Limit => "limit",
            Command::Sweep => "sweep",
        }
    }
}

fn read_payload(path: Option<&PathBuf>) -> Result<Value, Failure> {
    let path = path.ok_or_else(|| Failure::Validation {
        kind: "missing_config",
        message: "a JSON payload is required: pass --config <path> (or - for stdin)".into(),
    })?;
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(Failure::Io)?;
        s
    } else {
        fs::read_to_string(path).map_err(Failure::Io)?
    };
    serde_json::from_str(&text).map_err(|e| Failure::Validation {
        kind: "malformed_payload",
        message: format!("payload is not valid JSON: {e}"),
    })
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Validation {
                kind: "invalid_input",
                message: "--threads must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Validation {
                kind: "invalid_input",
                message: format!("cannot configure thread pool: {e}"),
            })?;
    }
    let payload = read_payload(cli.config.as_ref())?;
    let opts = RunOptions {
        seed: cli.seed,
        timings: !cli.no_timings,
    };
    let outcome = match cli.command {
        Command::Effective => jobs::effective(payload, &opts),
        Command::Homogenize => jobs::homogenize(payload, &opts),
        Command::Mesh => jobs::mesh(payload, &opts),
        Command::Solve => jobs::solve(payload, &opts),
        Command::Limit => jobs::limit(payload, &opts),
        Command::Sweep => jobs::sweep(payload, &opts),
    }?;
    let mut written = Vec::new();
    for artifact in &outcome.artifacts {
        written.push(write_atomic(&cli.output, artifact).map_err(Failure::Io)?);
    }
    if let Some(text) = &outcome.stdout {
        println!("{text}");
    }
    if cli.strict {
        if let Some(reason) = outcome.degenerate {
            return Err(Failure::Degenerate(reason));
        }
    }
    Ok(written)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("rugose {}: {failure}", cli.command.name());
            let body = json!({
                "toolkit": toolkit(),
                "command": cli.command.name(),
                "error": failure.kind(),
                "message": failure.to_string(),
                "exit_code": failure.exit_code(),
            });
            if let Ok(artifact) = Artifact::json("error.json", &body) {
                if let Err(e) = write_atomic(&cli.output, &artifact) {
                    eprintln!("could not write error.json: {e}");
                }
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
