//! Command-line front end. Exit codes: 0 success, 1 usage/configuration
//! errors, 2 missing or malformed data, 3 numeric failures during training.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fedtraffic::config::RunConfig;
use fedtraffic::error::Result;
use fedtraffic::pipeline::{
    cmd_evaluate, cmd_gen_data, cmd_preprocess, cmd_rank_links, cmd_report, cmd_train, TrainMode,
};

#[derive(Parser)]
#[command(
    name = "fedtraffic",
    version,
    about = "Federated node-traffic forecasting and link-utilization ranking"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// TOML config file; command-line flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Artifact directory (overrides FEDTRAFFIC_OUTPUT_DIR and the config)
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Root random seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Input window length; for evaluate, selects a single (h, p) cell
    #[arg(long, global = true)]
    h: Option<usize>,
    /// Forecast horizon; for evaluate, selects a single (h, p) cell
    #[arg(long, global = true)]
    p: Option<usize>,
    /// Federation rounds (epochs for centralized training)
    #[arg(long, global = true)]
    rounds: Option<usize>,
    /// Mini-batch size
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    /// Adam learning rate
    #[arg(long, global = true)]
    learning_rate: Option<f64>,
    /// LSTM hidden units per layer
    #[arg(long, global = true)]
    hidden_size: Option<usize>,
    /// Series-length multiplier for gen-data
    #[arg(long, global = true)]
    scale: Option<f64>,
    /// How many top-ranked links to report
    #[arg(long, global = true)]
    top_q: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic raw traffic corpus
    GenData,
    /// Resample, repair outliers, and smooth the raw corpus
    Preprocess,
    /// Train the configured (h, p) model and dump weights plus forecasts
    Train {
        #[arg(long, value_enum, default_value_t = ModeArg::Fed)]
        mode: ModeArg,
    },
    /// Score stored models on held-out windows (full sweep by default)
    Evaluate {
        #[arg(long, value_enum, default_value_t = ModeArg::Fed)]
        mode: ModeArg,
    },
    /// Rank links by forecast utilization over min-hop routes
    RankLinks {
        #[arg(long, value_enum, default_value_t = ModeArg::Fed)]
        mode: ModeArg,
    },
    /// Summarize the artifacts in the output directory
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Federated averaging across per-node clients
    #[value(alias = "federated")]
    Fed,
    /// Single model over the pooled data
    #[value(alias = "centralized")]
    Central,
}

impl From<ModeArg> for TrainMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fed => TrainMode::Federated,
            ModeArg::Central => TrainMode::Centralized,
        }
    }
}

fn build_config(o: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Ok(dir) = std::env::var("FEDTRAFFIC_OUTPUT_DIR") {
        if !dir.is_empty() {
            cfg.output_dir = PathBuf::from(dir);
        }
    }
    if let Some(v) = &o.output_dir {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.h {
        cfg.h = v;
    }
    if let Some(v) = o.p {
        cfg.p = v;
    }
    if let Some(v) = o.rounds {
        cfg.rounds = v;
    }
    if let Some(v) = o.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = o.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = o.hidden_size {
        cfg.hidden_size = v;
    }
    if let Some(v) = o.scale {
        cfg.scale = v;
    }
    if let Some(v) = o.top_q {
        cfg.top_q = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = build_config(&cli.overrides)?;
    match &cli.command {
        Command::GenData => cmd_gen_data(&cfg),
        Command::Preprocess => cmd_preprocess(&cfg),
        Command::Train { mode } => cmd_train(&cfg, (*mode).into()).map(|_| ()),
        Command::Evaluate { mode } => {
            let single = cli.overrides.h.is_some() || cli.overrides.p.is_some();
            cmd_evaluate(&cfg, (*mode).into(), single).map(|_| ())
        }
        Command::RankLinks { mode } => cmd_rank_links(&cfg, (*mode).into()).map(|_| ()),
        Command::Report => cmd_report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
