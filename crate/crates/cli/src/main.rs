use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use psgeval::ingest::{
    comparison_csv, read_ground_truth, read_predictions, save_ground_truth, save_predictions,
    write_report,
};
use psgeval::kernels::selftest;
use psgeval::synth::{
    adversarial_predictor, generate_ground_truth, honest_predictor, PredictorConfig, SynthConfig,
};
use psgeval::{
    convert_graph_to_multi_mpo, evaluate_dataset, normalize_single_mpo, Aggregation, Error,
    EvalConfig, Protocol,
};

/// Panoptic scene graph evaluation under the SingleMPO and MultiMPO protocols.
#[derive(Debug, Parser)]
#[command(name = "psgeval", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a prediction file against ground truth.
    Evaluate(EvaluateArgs),
    /// Explode SingleMPO predictions into one relation per (pair, predicate).
    Convert(ConvertArgs),
    /// Merge duplicate masks and relations so a file satisfies SingleMPO.
    Normalize(ConvertArgs),
    /// Generate a synthetic dataset with honest and adversarial predictions.
    Synth(SynthArgs),
    /// Tabulate both protocols side by side for several prediction files.
    Compare(CompareArgs),
    /// Numeric checks of the model kernels.
    Kernels {
        #[command(subcommand)]
        command: KernelCommand,
    },
}

#[derive(Debug, Subcommand)]
enum KernelCommand {
    /// Run gradient, identity and worked-example checks.
    Selftest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProtocolChoice {
    Single,
    Multi,
    Both,
}

impl ProtocolChoice {
    fn protocols(self) -> Vec<Protocol> {
        match self {
            ProtocolChoice::Single => vec![Protocol::SingleMpo],
            ProtocolChoice::Multi => vec![Protocol::MultiMpo],
            ProtocolChoice::Both => vec![Protocol::SingleMpo, Protocol::MultiMpo],
        }
    }
}

#[derive(Debug, Args)]
struct MetricArgs {
    #[arg(long, value_delimiter = ',', default_value = "20,50")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    iou_threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    merge_threshold: f64,
    #[arg(long, default_value = "per-image")]
    aggregation: Aggregation,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "PSGEVAL_THREADS", default_value_t = 0)]
    threads: usize,
}

impl MetricArgs {
    fn config(&self, protocols: Vec<Protocol>) -> EvalConfig {
        EvalConfig {
            protocols,
            ks: self.k.clone(),
            iou_threshold: self.iou_threshold,
            merge_threshold: self.merge_threshold,
            aggregation: self.aggregation,
            threads: self.threads,
        }
    }
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    protocol: ProtocolChoice,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Directory for report.json and report.csv; the CSV goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// Ground truth, read for the dataset header.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    merge_threshold: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    images: usize,
    #[arg(long, default_value_t = 64)]
    size: u32,
    #[arg(long, default_value_t = 8)]
    classes: usize,
    #[arg(long, default_value_t = 6)]
    predicates: usize,
    #[arg(long, default_value_t = 2)]
    nodes_min: usize,
    #[arg(long, default_value_t = 6)]
    nodes_max: usize,
    #[arg(long, default_value_t = 1)]
    triplets_min: usize,
    #[arg(long, default_value_t = 6)]
    triplets_max: usize,
    #[arg(long, default_value_t = 2)]
    mask_dup: usize,
    #[arg(long, default_value_t = 3)]
    rel_dup: usize,
    #[arg(long, default_value_t = 1)]
    jitter: u32,
    #[arg(long, default_value_t = 0.4)]
    label_noise: f64,
    /// Directory receiving gt.json, honest.ndjson and adversarial.ndjson.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    gt: PathBuf,
    /// Prediction files; repeat the flag for several sets.
    #[arg(long, required = true)]
    pred: Vec<PathBuf>,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, data: &str) -> psgeval::Result<()> {
    match out {
        Some(path) => fs::write(path, data)?,
        None => std::io::stdout().lock().write_all(data.as_bytes())?,
    }
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> psgeval::Result<()> {
    let cfg = args.metrics.config(args.protocol.protocols());
    cfg.validate()?;
    let gt = read_ground_truth(&args.gt)?;
    let preds = read_predictions(&args.pred, &gt.header)?;
    let report = evaluate_dataset(&gt, &preds, &cfg)?;
    if report.no_images {
        eprintln!("warning: no image has ground-truth triplets; no scores reported");
    }
    let docs = write_report(&report)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("report.json"), docs.json)?;
            fs::write(dir.join("report.csv"), docs.csv)?;
        }
        None => emit(None, &docs.csv)?,
    }
    Ok(())
}

fn check_merge_threshold(t: f64) -> psgeval::Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "merge threshold {t} must lie in (0, 1)"
        )))
    }
}

fn convert(args: &ConvertArgs) -> psgeval::Result<()> {
    let gt = read_ground_truth(&args.gt)?;
    let preds = read_predictions(&args.pred, &gt.header)?;
    let p = gt.header.num_predicates();
    let converted = preds
        .iter()
        .map(|g| convert_graph_to_multi_mpo(g, p))
        .collect::<psgeval::Result<Vec<_>>>()?;
    write_predictions(args.out.as_deref(), &converted)
}

fn normalize(args: &ConvertArgs) -> psgeval::Result<()> {
    check_merge_threshold(args.merge_threshold)?;
    let gt = read_ground_truth(&args.gt)?;
    let preds = read_predictions(&args.pred, &gt.header)?;
    let normalized = preds
        .iter()
        .map(|g| normalize_single_mpo(g, args.merge_threshold).map(|n| n.graph))
        .collect::<psgeval::Result<Vec<_>>>()?;
    write_predictions(args.out.as_deref(), &normalized)
}

fn write_predictions(
    out: Option<&Path>,
    preds: &[psgeval::PredictionGraph],
) -> psgeval::Result<()> {
    match out {
        Some(path) => save_predictions(path, preds),
        None => emit(None, &psgeval::ingest::dump_predictions(preds)),
    }
}

fn synth(args: &SynthArgs) -> psgeval::Result<()> {
    let cfg = SynthConfig {
        seed: args.seed,
        images: args.images,
        size: args.size,
        classes: args.classes,
        predicates: args.predicates,
        nodes_min: args.nodes_min,
        nodes_max: args.nodes_max,
        triplets_min: args.triplets_min,
        triplets_max: args.triplets_max,
        mask_duplication: args.mask_dup,
        relation_duplication: args.rel_dup,
        jitter: args.jitter,
        label_noise: args.label_noise,
    };
    let gt = generate_ground_truth(&cfg)?;
    let honest = honest_predictor(&gt, cfg.seed, cfg.jitter, cfg.label_noise)?;
    let adversarial = adversarial_predictor(&gt, &PredictorConfig::from_synth(&cfg))?;
    fs::create_dir_all(&args.out)?;
    save_ground_truth(&args.out.join("gt.json"), &gt)?;
    save_predictions(&args.out.join("honest.ndjson"), &honest)?;
    save_predictions(&args.out.join("adversarial.ndjson"), &adversarial)
}

fn compare(args: &CompareArgs) -> psgeval::Result<()> {
    let cfg = args.metrics.config(ProtocolChoice::Both.protocols());
    cfg.validate()?;
    let gt = read_ground_truth(&args.gt)?;
    let mut reports = Vec::with_capacity(args.pred.len());
    for path in &args.pred {
        let preds = read_predictions(path, &gt.header)?;
        reports.push((
            path.display().to_string(),
            evaluate_dataset(&gt, &preds, &cfg)?,
        ));
    }
    emit(args.out.as_deref(), &comparison_csv(&reports)?)
}

fn kernels_selftest() -> psgeval::Result<bool> {
    let checks = selftest();
    let mut out = std::io::stdout().lock();
    for c in &checks {
        writeln!(
            out,
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        )?;
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Evaluate(a) => evaluate(a).map(|_| true),
        Command::Convert(a) => convert(a).map(|_| true),
        Command::Normalize(a) => normalize(a).map(|_| true),
        Command::Synth(a) => synth(a).map(|_| true),
        Command::Compare(a) => compare(a).map(|_| true),
        Command::Kernels {
            command: KernelCommand::Selftest,
        } => kernels_selftest(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
