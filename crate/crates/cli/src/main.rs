use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flagstab::Basis;
use flagstab_cli::classify::{flag_report, implied_levels};
use flagstab_cli::runner::{default_out_dir, run_battery, run_scenario, verdict_of};
use flagstab_cli::{builtin, report, CliError, DensityInput, Overrides, Result, Scenario};

#[derive(Parser)]
#[command(name = "flagstab", version, about = "Lyapunov feedback stabilization of N-level quantum states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long = "T", value_name = "T")]
    t_final: Option<f64>,
    /// Output directory; defaults to $FLAGSTAB_OUT_DIR or ./flagstab-out.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    stride: Option<usize>,
    /// Seed for orbit inputs that do not fix their own.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides { dt: self.dt, t_final: self.t_final, stride: self.stride, seed: self.seed }
    }
    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(default_out_dir)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Verdict plus closed-loop simulation; writes the verdict JSON and trajectory CSV.
    Simulate {
        /// Scenario file or builtin name.
        scenario: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Prints the verdict JSON without simulating.
    Verdict {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Runs the builtin battery.
    Battery {
        /// Glob over scenario names.
        #[arg(long)]
        filter: Option<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
    Flag {
        #[command(subcommand)]
        command: FlagCommand,
    },
    Scenarios {
        #[command(subcommand)]
        command: ScenariosCommand,
    },
    Basis {
        #[command(subcommand)]
        command: BasisCommand,
    },
}

#[derive(Subcommand)]
enum FlagCommand {
    /// Eigenvalue multiplicities, orbit dimension, Euler characteristic and antipodal states.
    Classify {
        /// Comma-separated diagonal, e.g. 0.6,0.3,0.1.
        #[arg(long, value_delimiter = ',', conflicts_with = "input", required_unless_present = "input")]
        diagonal: Option<Vec<f64>>,
        /// JSON density input, e.g. '{"coherence": [...]}'.
        #[arg(long)]
        input: Option<String>,
        #[arg(long, default_value_t = 1e-8)]
        degeneracy_tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum ScenariosCommand {
    /// Builtin scenario names.
    List,
    /// Writes builtin scenarios as JSON files.
    Export {
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        #[arg(long)]
        filter: Option<String>,
    },
}

#[derive(Subcommand)]
enum BasisCommand {
    /// Labels and matrices of the generalized Gell-Mann basis.
    Dump {
        #[arg(long)]
        levels: usize,
    },
}

fn load(spec: &str) -> Result<Scenario> {
    let path = Path::new(spec);
    if path.exists() {
        return Scenario::load(path);
    }
    builtin::by_name(spec)
        .ok_or_else(|| CliError::Config(format!("{spec}: neither a scenario file nor a builtin scenario name")))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { scenario, flags } => {
            let s = load(&scenario)?;
            let out = run_scenario(&s, &flags.overrides(), &flags.out_dir())?;
            for w in &out.report.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", out.summary_line());
            println!("wrote {} and {}", out.verdict_path.display(), out.traj_path.display());
            Ok(out.passed())
        }
        Command::Verdict { scenario, seed } => {
            let s = load(&scenario)?;
            let prepared = s.validate(&Overrides { seed, ..Overrides::default() })?;
            let verdict = verdict_of(&prepared)?;
            print!("{}", report::to_json(&report::VerdictJson::from(&verdict)));
            Ok(prepared.expected.is_none_or(|(o, _)| o == verdict.outcome))
        }
        Command::Battery { filter, flags } => {
            let b = run_battery(filter.as_deref(), &flags.overrides(), &flags.out_dir())?;
            print!("{}", b.table());
            Ok(b.passed())
        }
        Command::Flag { command: FlagCommand::Classify { diagonal, input, degeneracy_tol, seed } } => {
            let input = match (diagonal, input) {
                (Some(d), _) => DensityInput::Diagonal(d),
                (None, Some(text)) => {
                    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("--input: {e}")))?
                }
                (None, None) => unreachable!("clap requires one of --diagonal, --input"),
            };
            let levels = implied_levels(&input)
                .ok_or_else(|| CliError::Config("--input: cannot infer the number of levels".into()))?;
            print!("{}", flag_report(&input, levels, degeneracy_tol, seed)?.to_json());
            Ok(true)
        }
        Command::Scenarios { command: ScenariosCommand::List } => {
            for s in builtin::all() {
                println!("{}\t{}", s.name, s.description.as_deref().unwrap_or(""));
            }
            Ok(true)
        }
        Command::Scenarios { command: ScenariosCommand::Export { dir, filter } } => {
            for s in flagstab_cli::runner::select_builtin(filter.as_deref())? {
                let path = dir.join(format!("{}.json", s.name));
                report::write_atomic(&path, &s.to_json())?;
                println!("{}", path.display());
            }
            Ok(true)
        }
        Command::Basis { command: BasisCommand::Dump { levels } } => {
            let basis = Basis::new(levels)?;
            for (label, m) in basis.labels().iter().zip(basis.matrices()) {
                println!("{} {}", label.position, label.kind);
                for i in 0..levels {
                    let row: Vec<String> =
                        (0..levels).map(|j| format!("{:+.6}{:+.6}i", m[(i, j)].re, m[(i, j)].im)).collect();
                    println!("  {}", row.join("  "));
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
