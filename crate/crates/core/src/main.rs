use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use flowsentry::ensemble::VotingMode;
use flowsentry::pipeline::{self, review, ExplainTarget, PipelineConfig};
use flowsentry::refinement::PseudoMode;
use flowsentry::synth::{write_synthetic_kdd, SynthKddConfig};

#[derive(Parser)]
#[command(name = "flowsentry", version, about = "Zero-day flow intrusion detection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML config file. Takes precedence over --preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset: nsl-kdd, cicids2017 or smoke.
    #[arg(long, default_value = "nsl-kdd")]
    preset: String,
    /// Dataset directory for presets.
    #[arg(long, default_value = "data/nsl-kdd")]
    data_dir: PathBuf,
    /// Output directory for presets.
    #[arg(long, default_value = "runs/default")]
    out: PathBuf,
    /// Override the voting rule.
    #[arg(long, value_enum)]
    voting: Option<Voting>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Voting {
    Mv,
    Wmv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pseudo {
    Oracle,
    Reviewed,
    Raw,
}

#[derive(Subcommand)]
enum Command {
    /// Print the resolved configuration as TOML.
    Config(ConfigArgs),
    /// Load, clean, encode, scale and split the data.
    Prepare(ConfigArgs),
    /// Train the detector ensemble on benign training flows.
    TrainEnsemble(ConfigArgs),
    /// Evaluate majority and weighted voting on the test split.
    Evaluate(ConfigArgs),
    /// Pseudo-label the validation split and train the random forest.
    Refine {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum)]
        pseudo_mode: Option<Pseudo>,
    },
    /// Evaluate the ensemble plus forest on the test split.
    EvaluateFinal(ConfigArgs),
    /// Local explanations of test rows.
    Explain {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated test row indices.
        #[arg(long, value_delimiter = ',', conflicts_with = "errors")]
        ids: Vec<usize>,
        /// Explain up to this many misclassified rows.
        #[arg(long)]
        errors: Option<usize>,
    },
    /// Fit the global surrogate tree and extract rules.
    Surrogate(ConfigArgs),
    /// Serve the analyst review API (address from FLOWSENTRY_REVIEW_ADDR).
    ServeReview(ConfigArgs),
    /// Write synthetic NSL-KDD style files.
    SynthKdd {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6000)]
        train_rows: usize,
        #[arg(long, default_value_t = 3000)]
        test_rows: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// prepare through surrogate in one go.
    RunAll(ConfigArgs),
}

fn resolve(a: &ConfigArgs) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &a.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::preset(&a.preset, &a.data_dir, &a.out)?,
    };
    if let Some(v) = a.voting {
        cfg.voting = match v {
            Voting::Mv => VotingMode::Majority,
            Voting::Wmv => VotingMode::Weighted,
        };
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let out = match cli.command {
        Command::Config(a) => resolve(&a)?.to_toml()?,
        Command::Prepare(a) => pipeline::cmd_prepare(&resolve(&a)?)?,
        Command::TrainEnsemble(a) => pipeline::cmd_train_ensemble(&resolve(&a)?)?,
        Command::Evaluate(a) => pipeline::cmd_evaluate(&resolve(&a)?)?,
        Command::Refine { cfg, pseudo_mode } => {
            let mut c = resolve(&cfg)?;
            if let Some(m) = pseudo_mode {
                c.pseudo_mode = match m {
                    Pseudo::Oracle => PseudoMode::Oracle,
                    Pseudo::Reviewed => PseudoMode::Reviewed,
                    Pseudo::Raw => PseudoMode::Raw,
                };
            }
            pipeline::cmd_refine(&c)?
        }
        Command::EvaluateFinal(a) => pipeline::cmd_evaluate_final(&resolve(&a)?)?,
        Command::Explain { cfg, ids, errors } => {
            let target = match (ids.is_empty(), errors) {
                (false, _) => ExplainTarget::Ids(ids),
                (true, Some(n)) => ExplainTarget::Errors(n),
                (true, None) => bail!("pass --ids or --errors"),
            };
            pipeline::cmd_explain(&resolve(&cfg)?, &target)?.2
        }
        Command::Surrogate(a) => pipeline::cmd_surrogate(&resolve(&a)?)?,
        Command::ServeReview(a) => {
            let cfg = resolve(&a)?;
            let run = pipeline::RunArtifact::load(&pipeline::Layout::new(&cfg.output_dir).run())?;
            let validation = pipeline::load_split(&cfg, "validation")?;
            let session = review::ReviewSession::open(&cfg, &run, &validation)?;
            let addr = review::bind_address()?;
            let rt = tokio::runtime::Runtime::new().context("starting async runtime")?;
            rt.block_on(review::serve(review::ReviewState::new(session), addr))?;
            String::new()
        }
        Command::SynthKdd {
            out,
            train_rows,
            test_rows,
            seed,
        } => {
            write_synthetic_kdd(
                &out,
                &SynthKddConfig {
                    train_rows,
                    test_rows,
                    seed,
                },
            )?;
            format!("wrote KDDTrain+.txt and KDDTest+.txt to {}\n", out.display())
        }
        Command::RunAll(a) => pipeline::cmd_run_all(&resolve(&a)?)?,
    };
    print!("{out}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
