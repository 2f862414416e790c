use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use legalex_cli::commands::{self, ExtractMethod};
use legalex_cli::LoadedConfig;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(
    name = "legalex",
    version,
    about = "Extract disability and compensation data from court rulings"
)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(short, long, global = true, default_value = "legalex.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, clean and scope-filter the corpus.
    Ingest,
    /// Split documents into token blocks and `%` windows.
    Segment,
    /// Embed blocks and persist the vector index.
    Index,
    /// Build one retrieval query per entity kind.
    QueryGen,
    /// Render the prompt for every document and kind without calling a model.
    PlanPrompts,
    /// Extract entities.
    Extract {
        #[arg(long, value_enum)]
        method: ExtractMethod,
    },
    /// Emit model extractions in gold format for manual correction.
    LabelAssist,
    /// Score extractions against the gold dataset.
    Eval {
        #[arg(long, value_enum, default_value = "llm")]
        method: ExtractMethod,
    },
    /// Measure invented answers on segments without the entity.
    BenchHallucination,
    /// Point values, monthly aggregates, CPI comparison and histogram.
    Stats {
        #[arg(long, value_enum, default_value = "llm")]
        method: ExtractMethod,
    },
    /// Run every stage in order.
    Run,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("LEGALEX_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = LoadedConfig::load(&cli.config).and_then(|l| match cli.command {
        Command::Ingest => commands::ingest(&l),
        Command::Segment => commands::segment(&l),
        Command::Index => commands::index(&l),
        Command::QueryGen => commands::query_gen(&l),
        Command::PlanPrompts => commands::plan_prompts(&l),
        Command::Extract { method } => commands::extract(&l, method),
        Command::LabelAssist => commands::label_assist(&l),
        Command::Eval { method } => commands::eval(&l, method),
        Command::BenchHallucination => commands::bench_hallucination(&l),
        Command::Stats { method } => commands::stats(&l, method),
        Command::Run => commands::run_all(&l),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
