use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pflow::{parse_config, CliError, CliResult, SimulationConfig, Status};

#[derive(Parser)]
#[command(name = "pflow", version, about = "Particle scheme for 1-D viscous compressible flow between walls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one particle count and write particles, fields and diagnostics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the admissibility report; exit status 2 when inadmissible.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// Also write check.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement study over several particle counts.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated particle counts; defaults to `n_list` from the config.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weak-form residuals and decay checks.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(flag: Option<PathBuf>, cfg: &SimulationConfig) -> CliResult<PathBuf> {
    flag.or_else(|| cfg.output.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set \"output\" in the config".into()))
}

fn load(path: &Path) -> CliResult<SimulationConfig> {
    parse_config(path)
}

fn run(command: Command) -> CliResult<Status> {
    match command {
        Command::Simulate { config, out } => {
            let cfg = load(&config)?;
            pflow::simulate(&cfg, &out_dir(out, &cfg)?)
        }
        Command::Check { config, out } => {
            let cfg = load(&config)?;
            let (status, report) = pflow::check(&cfg, out.as_deref())?;
            println!("{report}");
            Ok(status)
        }
        Command::Converge { config, n, out } => {
            let cfg = load(&config)?;
            let ns = n
                .or_else(|| cfg.n_list.clone())
                .ok_or_else(|| CliError::Usage("no particle counts: pass --n or set \"n_list\" in the config".into()))?;
            pflow::converge(&cfg, &ns, &out_dir(out, &cfg)?)
        }
        Command::Validate { config, out } => {
            let cfg = load(&config)?;
            pflow::validate(&cfg, &out_dir(out, &cfg)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim_end().replace('\n', " "));
            eprintln!("{}", err.to_json_line());
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code())
        }
    }
}
