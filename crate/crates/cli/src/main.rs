mod mine;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use diskmine_core::txdb::IoContext;
use diskmine_core::{generate, BlockConfig, DbFormat, DbLocator, GenParams};

/// Out-of-core frequent itemset mining.
///
/// Exit codes: 0 success, 1 verify found differences, 2 bad configuration
/// or malformed input, 3 I/O failure, 4 internal error.
#[derive(Parser)]
#[command(name = "diskmine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Mine(mine::MineArgs),
    Gen(GenArgs),
    Verify(verify::VerifyArgs),
    Report(report::ReportArgs),
}

/// Generate a synthetic transaction database.
#[derive(clap::Args)]
struct GenArgs {
    /// Database file to write; the parameters go to <OUTPUT>.params.json.
    #[arg(short, long)]
    output: PathBuf,
    /// text or binary; by default guessed from the extension.
    #[arg(long)]
    format: Option<DbFormat>,
    #[arg(long, default_value_t = 10_000)]
    n_transactions: u64,
    #[arg(long, default_value_t = 1000)]
    n_items: u32,
    /// Mean transaction length.
    #[arg(long, default_value_t = 10.0)]
    avg_tx_len: f64,
    /// Mean pattern length.
    #[arg(long, default_value_t = 4.0)]
    avg_pattern_len: f64,
    #[arg(long, default_value_t = 2000)]
    n_patterns: u32,
    #[arg(long, default_value_t = 0.5)]
    correlation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<ExitCode> {
    let params = GenParams {
        n_transactions: args.n_transactions,
        n_items: args.n_items,
        avg_tx_len: args.avg_tx_len,
        avg_pattern_len: args.avg_pattern_len,
        n_patterns: args.n_patterns,
        correlation: args.correlation,
        seed: args.seed,
    };
    let format = args.format.unwrap_or_else(|| DbFormat::from_path(&args.output));
    let out = DbLocator::new(&args.output, format);
    generate(&params, &out, &IoContext::new(BlockConfig::default()))
        .with_context(|| format!("generating {}", args.output.display()))?;
    Ok(ExitCode::SUCCESS)
}

/// Maps a failure to its exit code by the first recognizable cause.
fn exit_code(err: &anyhow::Error) -> u8 {
    use diskmine_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::FileNotFound(_) | E::DiskFull(_) | E::Io { .. } => 3,
                E::Config(_) | E::BudgetTooSmall { .. } | E::Format { .. } | E::TooLarge { .. } => 2,
                _ => 4,
            };
        }
        if cause.is::<std::io::Error>() {
            return 3;
        }
        if cause.is::<serde_json::Error>() || cause.is::<toml::de::Error>() {
            return 2;
        }
    }
    4
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mine(a) => mine::cmd_mine(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Verify(a) => verify::cmd_verify(a),
        Command::Report(a) => report::cmd_report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
