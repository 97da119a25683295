use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coldrec::pipeline::{self, Method, MfScope, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "coldrec",
    version,
    about = "Item cold-start rating pipeline: SVD++ factors, a convolutional description regressor, random baselines and an RMSE report"
)]
struct Cli {
    /// Pipeline configuration file (plain-text key = value)
    #[arg(long, global = true, default_value = "coldrec.conf")]
    config: PathBuf,

    /// Override every stage seed with one value
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Fail on the first malformed review line (default)
    #[arg(long, global = true, conflicts_with = "lenient")]
    strict: bool,

    /// Skip malformed review lines and count them
    #[arg(long, global = true)]
    lenient: bool,

    /// Work directory (overrides the config and COLDREC_WORK_DIR)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit review-count histograms per user and per business
    Stats,
    /// Build the cold-start train/test1/test2 split manifests
    Split,
    /// Train the SVD++ latent-factor model on the train split
    TrainMf {
        /// Factorize the whole corpus instead (the upper-bound model)
        #[arg(long)]
        full: bool,
    },
    /// Select, tokenize and pad one description per business
    Prep,
    /// Train the description-to-factors network
    TrainCnn,
    /// Score methods on the test sets and write the report
    Evaluate {
        /// Comma-separated subset of cnn,random1,random2,oracle
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Number of random-baseline trials
        #[arg(long)]
        runs: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run() -> coldrec::Result<()> {
    let cli = Cli::parse();
    let mut cfg = PipelineConfig::from_file(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.override_all_seeds(seed);
    }
    if cli.strict {
        cfg.lenient = false;
    }
    if cli.lenient {
        cfg.lenient = true;
    }
    if let Some(out) = cli.out {
        cfg.work_dir = out;
    } else if let Ok(dir) = std::env::var("COLDREC_WORK_DIR") {
        if !dir.is_empty() {
            cfg.work_dir = PathBuf::from(dir);
        }
    }

    match cli.command {
        Command::Stats => {
            let out = pipeline::cmd_stats(&cfg)?;
            println!(
                "wrote {} ({} users) and {} ({} businesses)",
                out.users_csv.display(),
                out.distinct_users,
                out.businesses_csv.display(),
                out.distinct_businesses
            );
        }
        Command::Split => {
            let out = pipeline::cmd_split(&cfg)?;
            println!(
                "split: train {} / test1 {} / test2 {} reviews",
                out.sizes.0, out.sizes.1, out.sizes.2
            );
            for file in &out.files {
                println!("wrote {}", file.display());
            }
        }
        Command::TrainMf { full } => {
            let scope = if full { MfScope::Full } else { MfScope::Train };
            let out = pipeline::cmd_train_mf(&cfg, scope)?;
            println!(
                "wrote {} (train RMSE {:.4} over {} epochs)",
                out.checkpoint.display(),
                out.train_rmse,
                out.epochs_recorded
            );
        }
        Command::Prep => {
            let out = pipeline::cmd_prep(&cfg)?;
            println!(
                "wrote {}: {} documents padded to {} tokens ({} aliases, {} random rows)",
                out.docs_file.display(),
                out.num_docs,
                out.padded_len,
                out.aliases,
                out.random_rows
            );
        }
        Command::TrainCnn => {
            let out = pipeline::cmd_train_cnn(&cfg)?;
            println!(
                "wrote {} (best epoch {} with validation RMSE {:.4}); history in {}",
                out.checkpoint.display(),
                out.best_epoch,
                out.best_val_rmse,
                out.history_csv.display()
            );
        }
        Command::Evaluate { methods, runs } => {
            if let Some(runs) = runs {
                cfg.eval_runs = runs;
            }
            let methods: Vec<Method> = if methods.is_empty() {
                cfg.eval_methods.clone()
            } else {
                methods
                    .iter()
                    .map(|m| Method::parse(m))
                    .collect::<coldrec::Result<_>>()?
            };
            let report = pipeline::cmd_evaluate(&cfg, &methods)?;
            print!("{}", report.render_table());
            println!(
                "wrote {} and {}",
                cfg.work_dir.join("report.csv").display(),
                cfg.work_dir.join("report.json").display()
            );
        }
    }
    Ok(())
}
