//! `linrm`: batch front end for the removal toolkit. Every command reads one
//! JSON file (or `-` for stdin) and writes one JSON report.

mod commands;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use linrm::Budget;

#[derive(Parser, Debug)]
#[command(
    name = "linrm",
    version,
    about = "Exact removal computations for linear systems over finite abelian groups"
)]
struct Cli {
    /// Maximum number of candidate vectors any enumeration may visit.
    #[arg(long, global = true, env = "LINRM_BUDGET", default_value_t = Budget::DEFAULT.limit())]
    budget: u64,

    /// Pretty-print the report.
    #[arg(long, global = true)]
    human: bool,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Input {
    /// JSON input file, or `-` for stdin.
    input: PathBuf,
}

#[derive(Args, Debug)]
struct Modulus {
    /// The modulus `n`.
    #[arg(long, short = 'n')]
    modulus: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smith normal form `U A V = S` of a matrix.
    Snf(Input),
    /// Determinantal divisors `d_k` (all `k` unless one is given).
    Dk {
        #[command(flatten)]
        input: Input,
        #[arg(long, short)]
        k: Option<usize>,
    },
    /// Square completion of a full-rank `k × m` matrix with `det = d_k`.
    Complete(Input),
    /// `n`-good padding of a square matrix.
    Ngood {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        modulus: Modulus,
    },
    /// Circularity test and standard form modulo `n`.
    Circular {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        modulus: Modulus,
    },
    /// The C-matrix of an `n`-circular matrix.
    Cmatrix {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        modulus: Modulus,
    },
    /// Solutions of a restricted system.
    Solve(Input),
    /// Reduction to a standard circular system, with every stage verified.
    Pipeline {
        #[command(flatten)]
        input: Input,
        /// Include intermediate matrices.
        #[arg(long)]
        trace: bool,
    },
    /// Copies of the template hypergraph in the host.
    Copies {
        #[command(flatten)]
        input: Input,
        /// List every copy with its labels.
        #[arg(long)]
        full: bool,
    },
    /// Check the copy/solution correspondence on the host hypergraph.
    Verify(Input),
    /// Minimum removal sets, in the coordinates of the input system.
    Remove {
        #[command(flatten)]
        input: Input,
        #[arg(long, conflicts_with = "greedy")]
        exact: bool,
        #[arg(long)]
        greedy: bool,
        /// One-based coordinates whose sets must stay intact.
        #[arg(long, value_delimiter = ',')]
        protect: Vec<usize>,
    },
}

fn read_input(input: &Input) -> Result<String, commands::CliError> {
    let mut text = String::new();
    if input.input.as_os_str() == "-" {
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| commands::CliError::Io(format!("stdin: {e}")))?;
    } else {
        text = fs::read_to_string(&input.input)
            .map_err(|e| commands::CliError::Io(format!("{}: {e}", input.input.display())))?;
    }
    Ok(text)
}

fn run(cli: &Cli) -> Result<commands::Report, commands::CliError> {
    use commands::*;
    let budget = Budget::new(cli.budget)?;
    match &cli.command {
        Command::Snf(input) => snf(&parse(&read_input(input)?)?),
        Command::Dk { input, k } => dk(&parse(&read_input(input)?)?, *k),
        Command::Complete(input) => complete(&parse(&read_input(input)?)?),
        Command::Ngood { input, modulus } => ngood(&parse(&read_input(input)?)?, modulus.modulus),
        Command::Circular { input, modulus } => {
            circular(&parse(&read_input(input)?)?, modulus.modulus)
        }
        Command::Cmatrix { input, modulus } => {
            cmatrix(&parse(&read_input(input)?)?, modulus.modulus)
        }
        Command::Solve(input) => solve(&parse(&read_input(input)?)?, budget),
        Command::Pipeline { input, trace } => {
            pipeline(&parse(&read_input(input)?)?, budget, *trace)
        }
        Command::Copies { input, full } => copies(&parse(&read_input(input)?)?, budget, *full),
        Command::Verify(input) => verify(&parse(&read_input(input)?)?, budget),
        Command::Remove {
            input,
            exact: _,
            greedy,
            protect,
        } => remove(&parse(&read_input(input)?)?, budget, !greedy, protect),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let text = if cli.human {
                serde_json::to_string_pretty(&report.body)
            } else {
                serde_json::to_string(&report.body)
            }
            .expect("reports serialize");
            let written = match &cli.output {
                Some(path) => fs::write(path, format!("{text}\n")),
                None => writeln!(io::stdout().lock(), "{text}"),
            };
            if let Err(e) = written {
                eprintln!("error: cannot write report: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(report.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
