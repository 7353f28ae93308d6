use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stereo_knn::clustering::{StopCriterion, StopRule, DEFAULT_MAX_ITERATIONS};
use stereo_knn::experiments::{
    self, AlgorithmKind, ExperimentChannel, ExperimentGrid, ReportFormat, DEFAULT_POOL_SIZE,
    DEFAULT_SHOTS,
};
use stereo_knn::qamdata::{self, build_alphabet64, CentroidSpace, ChannelConfig, QamDataset};
use stereo_knn::quantum::ShotConfig;
use stereo_knn::{Error, Result};

#[derive(Parser)]
#[command(
    name = "stereo-knn",
    version,
    about = "Stereographic k-NN decoding of 64-QAM signals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic noisy 64-QAM dataset.
    Generate(GenerateArgs),
    /// Cluster a dataset starting from the alphabet and write the decoded labels.
    Cluster(ClusterArgs),
    /// Run a parameter sweep and write a long-format report.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 64)]
    symbols: usize,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phase: f64,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the alphabet as `index,re,im,bits`.
    #[arg(long)]
    alphabet_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    #[value(name = "2dec")]
    Dec2,
    #[value(name = "3dsc")]
    Sc3,
    #[value(name = "2dsc")]
    Sc2,
    SqExact,
    SqShots,
}

#[derive(Clone, Copy, ValueEnum)]
enum StopArg {
    Natural,
    Max,
    DissimIncrease,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    algo: AlgoArg,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    shots: u64,
    /// Seed of the shot sampler.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = StopArg::Natural)]
    stop: StopArg,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Overfit,
    Stopping,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentArg,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 3.0, 5.0])]
    radii: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [640, 2560, 10240])]
    points: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = ["2dec".to_string(), "3dsc".to_string(), "2dsc".to_string(), "sq-exact".to_string()])]
    algos: Vec<String>,
    /// Per-axis noise deviation of the synthetic channel (about 17 dB SNR by default).
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phase: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    shots: u64,
    #[arg(long, default_value_t = DEFAULT_POOL_SIZE)]
    pool: usize,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl AlgoArg {
    fn kind(self) -> AlgorithmKind {
        match self {
            AlgoArg::Dec2 => AlgorithmKind::Dec2,
            AlgoArg::Sc3 => AlgorithmKind::Sc3,
            AlgoArg::Sc2 => AlgorithmKind::Sc2,
            AlgoArg::SqExact => AlgorithmKind::SqExact,
            AlgoArg::SqShots => AlgorithmKind::SqShots,
        }
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    if args.symbols != 64 {
        return Err(Error::InvalidInput(format!(
            "only 64-QAM is supported, got --symbols {}",
            args.symbols
        )));
    }
    let alphabet = build_alphabet64();
    let cfg = ChannelConfig::new(args.sigma, args.phase, args.seed, args.count)?;
    let data = qamdata::generate_dataset(&alphabet, &cfg)?;
    qamdata::save_dataset(&data, &args.out)?;
    if let Some(path) = args.alphabet_out {
        qamdata::save_alphabet(&alphabet, &path)?;
    }
    match data.snr_db {
        Some(snr) => println!("wrote {} samples, SNR {snr:.2} dB", data.len()),
        None => println!("wrote {} samples, noiseless", data.len()),
    }
    Ok(())
}

fn cluster(args: ClusterArgs) -> Result<()> {
    let kind = args.algo.kind();
    let radius = match (kind.uses_radius(), args.radius) {
        (true, None) => {
            return Err(Error::InvalidInput(format!(
                "--radius is required for {kind}"
            )))
        }
        (true, r) => r,
        (false, _) => None,
    };
    let algorithm = kind.build(radius, Some(ShotConfig::new(args.shots, args.seed)?))?;
    let criterion = match args.stop {
        StopArg::Natural => StopCriterion::NaturalEndpoint,
        StopArg::Max => StopCriterion::MaxIterations,
        StopArg::DissimIncrease => StopCriterion::DissimilarityIncrease,
    };
    let stop = StopRule::new(criterion, args.max_iter)?;

    let data = qamdata::load_dataset(&args.data)?;
    if data.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "dataset has no samples".into(),
        });
    }
    let run = algorithm.run(&data.rx, data.alphabet.symbols(), stop, None)?;
    let predicted = qamdata::demap(
        &run.assignment.labels,
        run.state.centroids(),
        CentroidSpace::of(&algorithm),
        &data.alphabet,
    )?;
    let m = qamdata::metrics(&predicted, &data.labels)?;
    let decoded = QamDataset::new(data.rx.clone(), predicted, data.alphabet.clone())?;
    qamdata::save_dataset(&decoded, &args.out)?;

    let summary = serde_json::json!({
        "algorithm": algorithm.name(),
        "radius": radius,
        "iterations": run.iterations(),
        "natural_endpoint": run.natural_endpoint,
        "symbol_accuracy": m.symbol_accuracy,
        "symbol_error_rate": m.symbol_error_rate,
        "bit_error_rate": m.bit_error_rate,
    });
    println!("{summary}");
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let algorithms = args
        .algos
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<AlgorithmKind>>>()?;
    let grid = ExperimentGrid {
        algorithms,
        radii: args.radii,
        n_points: args.points,
        repetitions: args.reps,
        max_iterations: args.max_iter,
        base_seed: args.seed,
        shots: args.shots,
        workers: args.workers,
        ..ExperimentGrid::default()
    };
    grid.validate()?;
    let channel = ExperimentChannel {
        pool_size: args.pool,
        ..ExperimentChannel::new(args.sigma, args.phase)
    };
    let outcome = match args.kind {
        ExperimentArg::Overfit => experiments::run_overfitting_experiment(&grid, &channel)?,
        ExperimentArg::Stopping => experiments::run_stopping_experiment(&grid, &channel)?,
    };
    let format = match args.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    };
    let rows = outcome.rows();
    experiments::emit_report(&rows, &args.out, format)?;
    println!("wrote {} rows from {} runs", rows.len(), outcome.runs.len());
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::InvalidInput(_) => 2,
        Error::DegenerateCluster { .. } => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Cluster(a) => cluster(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
