use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lmmf::families::RandomParams;
use lmmf_cli::{
    cmd_allocate, cmd_audit, cmd_generate, cmd_manipulate, parse_grid, parse_rational, AuditOptions,
    CliError, Family, GenerateOptions, ManipulateOptions, MechanismChoice, Property, EXIT_FAILURE,
    EXIT_OK,
};

/// Frugal leximin allocation of divisible objects with bounded demands.
///
/// Exit codes: 0 success, 1 property failure or counterexample, 2 input or
/// argument error, 3 internal consistency failure.
#[derive(Parser)]
#[command(name = "lmmf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the allocation, utilities and breakpoints for an instance file.
    Allocate {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        output: Output,
    },
    /// Run property checks on the mechanism's allocation.
    Audit {
        path: PathBuf,
        /// Properties to check (comma separated).
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = Property::ALL.to_vec())]
        properties: Vec<Property>,
        /// Random frugal allocations for the Lorenz check; 0 skips it.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Random agent subsets for the substructure check; 0 skips it.
        #[arg(long, default_value_t = 5)]
        subsets: usize,
        #[arg(long, env = "LMMF_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "table")]
        output: Output,
    },
    /// Search coalition demand misreports for a profitable manipulation.
    Manipulate {
        path: PathBuf,
        /// Coalition size.
        #[arg(long, default_value_t = 1)]
        coalition: usize,
        /// Multipliers applied to each true demand (0 and the supply are always tried).
        #[arg(long, default_value = "0,1/2,1,2")]
        grid: String,
        /// Maximum number of mechanism runs.
        #[arg(long, default_value_t = lmmf::harness::DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, value_enum, default_value = "lmmf")]
        mechanism: MechanismChoice,
        /// Grid step of the mmf-si reference mechanism.
        #[arg(long, default_value = "1/4")]
        resolution: String,
        #[arg(long, env = "LMMF_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Write an instance file for a named family or a seeded random instance.
    Generate {
        #[arg(value_enum)]
        family: Family,
        /// Agent count for lemma5 and intro.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        agents: usize,
        #[arg(long, default_value_t = 3)]
        objects: usize,
        /// Probability that a demand entry is nonzero.
        #[arg(long, default_value_t = 0.7)]
        density: f64,
        #[arg(long, default_value_t = 8)]
        max_denominator: u32,
        #[arg(long, default_value_t = 6)]
        max_value: u32,
        #[arg(long, env = "LMMF_SEED", default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Allocate { path, output } => {
            let report = cmd_allocate(&path)?;
            match output {
                Output::Table => print!("{}", report.to_table()),
                Output::Json => print!("{}", report.to_json()),
            }
            Ok(EXIT_OK)
        }
        Command::Audit {
            path,
            properties,
            samples,
            subsets,
            seed,
            output,
        } => {
            let options = AuditOptions {
                properties,
                samples,
                subsets,
                seed,
            };
            let report = cmd_audit(&path, &options)?;
            match output {
                Output::Table => print!("{}", report.to_text()),
                Output::Json => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
            }
            Ok(if report.passed() { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Manipulate {
            path,
            coalition,
            grid,
            budget,
            mechanism,
            resolution,
            seed,
        } => {
            let options = ManipulateOptions {
                coalition,
                grid: parse_grid(&grid)?,
                budget,
                mechanism,
                resolution: parse_rational(&resolution)
                    .map_err(|m| CliError::Argument(format!("--resolution: {m}")))?,
                seed,
            };
            let report = cmd_manipulate(&path, &options)?;
            print!("{}", report.to_text());
            Ok(if report.found() { EXIT_FAILURE } else { EXIT_OK })
        }
        Command::Generate {
            family,
            n,
            agents,
            objects,
            density,
            max_denominator,
            max_value,
            seed,
            out,
        } => {
            let options = GenerateOptions {
                family,
                n,
                random: RandomParams {
                    agents,
                    objects,
                    density,
                    max_denominator,
                    max_value,
                },
                seed,
            };
            let text = cmd_generate(&options)?;
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                })?,
                None => print!("{text}"),
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
