use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mimo_diag::{cmd_cr, cmd_design, cmd_ic, cmd_verify, load_scenario, Method, RunReport};

#[derive(Parser)]
#[command(name = "mimo-diag", version, about = "Capacity-achieving diagonalizing MIMO transceiver designs")]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    output: Output,
    /// Print nothing; the exit code carries the verdict.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum MethodArg {
    Theorem1,
    SvdWaterfill,
    EvdZf,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Theorem1 => Method::Theorem1,
            MethodArg::SvdWaterfill => Method::SvdWaterfill,
            MethodArg::EvdZf => Method::EvdZf,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Design a point-to-point transceiver and check it.
    Design {
        #[arg(long, value_enum, default_value_t = MethodArg::Theorem1)]
        method: MethodArg,
        /// Condition tolerance (default 1e-8).
        #[arg(long)]
        tol: Option<f64>,
        /// Scenario file or bundled scenario name.
        scenario: String,
    },
    /// Two-user interference channel: WMMSE, then per-user designs.
    Ic {
        /// Seed for random WMMSE initialization; omitted means identity start.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iters: Option<usize>,
        scenario: String,
    },
    /// Cognitive radio covariance under an interference cap.
    Cr {
        /// KKT tolerance of the covariance solver (default 1e-7).
        #[arg(long)]
        tol: Option<f64>,
        scenario: String,
    },
    /// Random ensemble check of the diagonalizing design.
    Verify {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        max_dim: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn run(command: Command) -> Result<RunReport, Box<dyn std::error::Error>> {
    Ok(match command {
        Command::Design { method, tol, scenario } => {
            let (name, file) = load_scenario(&scenario)?;
            cmd_design(&name, &file, method.into(), tol)?
        }
        Command::Ic { seed, max_iters, scenario } => {
            let (name, file) = load_scenario(&scenario)?;
            cmd_ic(&name, &file, seed, max_iters)?
        }
        Command::Cr { tol, scenario } => {
            let (name, file) = load_scenario(&scenario)?;
            cmd_cr(&name, &file, tol)?
        }
        Command::Verify { n, max_dim, seed } => cmd_verify(n, max_dim, seed)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(report) => {
            if !cli.quiet {
                match cli.output {
                    Output::Text => print!("{}", report.render_text()),
                    Output::Json => println!("{}", report.to_json()),
                }
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
