use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wnmcmc::error::{Error, Result};
use wnmcmc::experiments::{
    ingest_mnist_idx, pca_project, run_experiment, Config, ExperimentConfig, ExperimentId,
    LabelledFeatures,
};

#[derive(Parser)]
#[command(name = "wnmcmc", version, about = "White-noise MCMC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Acceptance against step size across truncation levels.
    #[command(name = "fig1_sweep")]
    Fig1Sweep(RunArgs),
    /// Autocorrelation of the field norm under a convolution observation.
    #[command(name = "convolution_acf")]
    ConvolutionAcf(RunArgs),
    /// Level-set Darcy inversion with a hierarchical length scale.
    #[command(name = "darcy_hier")]
    DarcyHier(RunArgs),
    /// Graph-based semi-supervised classification.
    #[command(name = "graph_ssl")]
    GraphSsl(RunArgs),
    /// Active learning rounds on top of graph classification.
    #[command(name = "active_learning")]
    ActiveLearning(RunArgs),
    /// Runs the experiment named by --experiment or the config file.
    Run(RunArgs),
    /// Converts MNIST IDX files into a features CSV.
    #[command(name = "ingest-mnist")]
    IngestMnist {
        images: PathBuf,
        labels: PathBuf,
        /// Project onto this many principal components.
        #[arg(long)]
        pca: Option<usize>,
        /// Output CSV path.
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<ExperimentId>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Chain length for the experiment's samplers.
    #[arg(long)]
    steps: Option<usize>,
    /// Step size (fixes the whole beta grid for sweeps and pilot tuning).
    #[arg(long)]
    beta: Option<f64>,
    /// Darcy grid nodes per side.
    #[arg(long)]
    grid: Option<usize>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn prefix(id: ExperimentId) -> &'static str {
    match id {
        ExperimentId::Fig1Sweep => "fig1",
        ExperimentId::ConvolutionAcf => "conv",
        ExperimentId::DarcyHier => "darcy",
        ExperimentId::GraphSsl | ExperimentId::ActiveLearning => "graph",
    }
}

fn beta_key(id: ExperimentId) -> &'static str {
    match id {
        ExperimentId::Fig1Sweep => "fig1.betas",
        ExperimentId::ConvolutionAcf => "conv.pilot_betas",
        ExperimentId::DarcyHier => "darcy.beta",
        ExperimentId::GraphSsl | ExperimentId::ActiveLearning => "graph.beta",
    }
}

fn build_config(fixed: Option<ExperimentId>, args: RunArgs) -> Result<ExperimentConfig> {
    let mut values = match &args.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(id) = fixed.or(args.experiment) {
        if let (Some(fixed), Some(flag)) = (fixed, args.experiment) {
            if fixed != flag {
                return Err(Error::Config(format!("subcommand {fixed} conflicts with --experiment {flag}")));
            }
        }
        values.set("experiment", id);
    }
    if let Some(seed) = args.seed {
        values.set("seed", seed);
    }
    if let Some(out) = &args.out {
        values.set("out", out.display());
    }
    let id: ExperimentId = values
        .raw("experiment")
        .ok_or_else(|| Error::Config("no experiment given (use a subcommand, --experiment or the config)".into()))?
        .parse()?;
    if let Some(steps) = args.steps {
        values.set(&format!("{}.steps", prefix(id)), steps);
    }
    if let Some(beta) = args.beta {
        values.set(beta_key(id), beta);
    }
    if let Some(grid) = args.grid {
        values.set("grid", grid);
    }
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{kv}' is not KEY=VALUE")))?;
        values.set(k.trim(), v.trim());
    }
    ExperimentConfig::from_config(values)
}

fn run(fixed: Option<ExperimentId>, args: RunArgs) -> Result<()> {
    let cfg = build_config(fixed, args)?;
    let summary = run_experiment(&cfg)?;
    for (name, value) in &summary.metrics {
        println!("{name} = {value}");
    }
    for f in &summary.files {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}

fn ingest(images: PathBuf, labels: PathBuf, pca: Option<usize>, output: PathBuf) -> Result<()> {
    let mut data = ingest_mnist_idx(&images, &labels)?;
    if let Some(d) = pca {
        data = LabelledFeatures { features: pca_project(&data.features, d)?, labels: data.labels };
    }
    std::fs::write(&output, data.to_csv())?;
    println!("{} rows, {} columns -> {}", data.len(), data.features.first().map_or(0, Vec::len), output.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fig1Sweep(a) => run(Some(ExperimentId::Fig1Sweep), a),
        Command::ConvolutionAcf(a) => run(Some(ExperimentId::ConvolutionAcf), a),
        Command::DarcyHier(a) => run(Some(ExperimentId::DarcyHier), a),
        Command::GraphSsl(a) => run(Some(ExperimentId::GraphSsl), a),
        Command::ActiveLearning(a) => run(Some(ExperimentId::ActiveLearning), a),
        Command::Run(a) => run(None, a),
        Command::IngestMnist { images, labels, pca, output } => ingest(images, labels, pca, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
