use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybrid_ids::config::{Mode, ModelFamily, PipelineConfig};
use hybrid_ids::error::{Error, Result};
use hybrid_ids::pipeline::{run_learning_curve, PreprocessArtifact};
use hybrid_ids::{audit, ingest, io, persist, predict, run_pipeline};

#[derive(Parser)]
#[command(name = "hybrid-ids", version, about = "Hybrid-sampling intrusion-detection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage and write the report, models and tables.
    Pipeline(ConfigArgs),
    /// Load and encode a dataset, then print its shape and class counts.
    IngestCheck {
        #[command(flatten)]
        config: ConfigArgs,
        /// Exit with a data error unless the counts match the published RT-IoT2022 distribution.
        #[arg(long)]
        expect_reference: bool,
    },
    /// Learning curve of one family's first grid entry.
    LearningCurve {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_name = "FAMILY")]
        model: String,
        /// Output CSV (default: <output_dir>/curve_<family>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the test metrics of a finished run from its artifacts.
    Audit {
        #[arg(long, value_name = "DIR")]
        dir: PathBuf,
    },
    /// Score a CSV with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// preprocess.json of the run, to score raw (unencoded) rows.
        #[arg(long)]
        preprocess: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["paper-order", "leak-free"])]
    mode: Option<String>,
    /// Comma-separated families, e.g. rf,knn.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Comma-separated learning-curve fractions.
    #[arg(long, value_delimiter = ',')]
    curve_fractions: Option<Vec<f64>>,
    #[arg(long)]
    no_curves: bool,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::from_file(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(d) = &self.data {
            cfg.data_path = d.clone();
        }
        if let Some(o) = &self.output_dir {
            cfg.output_dir = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = &self.mode {
            cfg.mode = if m == "leak-free" { Mode::LeakFree } else { Mode::PaperOrder };
        }
        if let Some(ms) = &self.models {
            cfg.models = ms.iter().map(|m| ModelFamily::parse(m)).collect::<Result<_>>()?;
        }
        if let Some(f) = &self.curve_fractions {
            cfg.curve_fractions = f.clone();
        }
        if self.no_curves {
            cfg.curve_fractions.clear();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pipeline(args) => {
            let cfg = args.load()?;
            let report = run_pipeline(&cfg)?;
            for m in &report.models {
                println!(
                    "{:<7} test_acc={:.4} kappa={:.4} auc={:.4} cv={:.4} fit={:.2}s",
                    m.name, m.test.accuracy, m.test.kappa, m.test.auc_ovr_macro, m.cv_score, m.training_time_s
                );
            }
            println!("report: {}", cfg.output_dir.join(hybrid_ids::pipeline::REPORT_FILE).display());
        }
        Command::IngestCheck { config, expect_reference } => {
            let cfg = config.load()?;
            let summary = ingest::ingest_check(&cfg, &cfg.resolved_data_path())?;
            print_json(&summary);
            if expect_reference && !summary.matches_reference {
                return Err(Error::Core(hybrid_ids_core::Error::InvalidParameter(
                    "class counts differ from the published distribution".into(),
                )));
            }
        }
        Command::LearningCurve { config, model, out } => {
            let cfg = config.load()?;
            let family = ModelFamily::parse(&model)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.join(format!("curve_{}.csv", family.name())));
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            for p in run_learning_curve(&cfg, family, &out)? {
                println!("{:.2} n={} train={:.4} cv={:.4}", p.fraction, p.n_rows, p.train_accuracy, p.cv_accuracy);
            }
        }
        Command::Audit { dir } => {
            let outcome = audit::audit(&dir)?;
            for c in outcome.checks.iter().filter(|c| !c.ok) {
                eprintln!("MISMATCH {} {}: reported {} recomputed {}", c.model, c.field, c.reported, c.recomputed);
            }
            println!("audit: {} checks, {} mismatches", outcome.checks.len(), outcome.failures);
            if outcome.failures > 0 {
                return Err(Error::AuditMismatch(outcome.failures));
            }
        }
        Command::Predict { model, input, output, preprocess } => {
            let m = persist::load_model(&model)?;
            let pre: Option<PreprocessArtifact> = preprocess.as_deref().map(io::read_json).transpose()?;
            let n = predict::predict_csv(&m, &input, pre.as_ref(), &output)?;
            println!("scored {n} rows -> {}", output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
