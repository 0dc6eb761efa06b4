use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use gaelab_core::alignment::{misalignment, AlignmentError};
use gaelab_core::experiment::{
    self, alignment_csv, failures, format_summary, load_dataset, run_once, run_real, run_synth_sweep, summarize,
    with_overlap, write_records, Config, ConfigError, ExperimentError, MetricsRecord, RealConfig, RunSpec, SweepConfig,
    VerifyConfig,
};
use gaelab_core::graph::{io as gio, Graph, GraphError, Task};
use gaelab_core::model::{TrainConfig, Variant};
use gaelab_core::synth::{generate, SynthConfig};
use gaelab_core::theory::Verdict;

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "gaelab", version, about = "Graph auto-encoder experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// `key = value` config file with [train], [synth], [sweep], [real], [verify] sections
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output file or directory, depending on the subcommand
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
struct ModelArgs {
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    features: Option<OnOff>,
    /// embedding dimension
    #[arg(long)]
    dim: Option<usize>,
    /// hidden layer width
    #[arg(long)]
    hidden: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic sphere graph as edges.txt and features.csv
    Synth {
        #[command(flatten)]
        common: Common,
        /// replace features by their perturbation with this overlap dimension
        #[arg(long)]
        overlap: Option<usize>,
    },
    /// Train one model and write metrics.csv, loss.csv, w0.csv, w1.csv
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// dataset directory; a synthetic graph is generated when omitted
        dataset: Option<PathBuf>,
        #[arg(long)]
        overlap: Option<usize>,
    },
    /// Synthetic misalignment sweep, one CSV row per run
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// number of independent graphs
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Seeds x variants x feature settings on a dataset directory
    Real {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        dataset: PathBuf,
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Check the linear-algebra statements on generated instances
    Verify {
        #[command(flatten)]
        common: Common,
        /// instances per statement
        #[arg(long)]
        instances: Option<usize>,
        /// swap the first linearization instance for a singular adjacency
        #[arg(long)]
        inject_rank_deficient: bool,
    },
    /// Print the misalignment of a dataset (or a synthetic graph) as CSV
    ReportAlignment {
        #[command(flatten)]
        common: Common,
        dataset: Option<PathBuf>,
        #[arg(long)]
        overlap: Option<usize>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum TaskArg {
    Link,
    Node,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Link => Task::LinkPrediction,
            TaskArg::Node => Task::NodePrediction,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum VariantArg {
    Linear,
    Relu,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Linear => Variant::Linear,
            VariantArg::Relu => Variant::Relu,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn enabled(self) -> bool {
        matches!(self, OnOff::On)
    }
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

type Outcome = Result<(), Failure>;

fn usage(err: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        err: err.into(),
    }
}

fn data(err: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_DATA,
        err: err.into(),
    }
}

fn classify_graph(e: &GraphError) -> u8 {
    match e {
        GraphError::Parse { .. }
        | GraphError::Io { .. }
        | GraphError::FeatureRows { .. }
        | GraphError::NodeOutOfRange { .. } => EXIT_DATA,
        _ => EXIT_USAGE,
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let code = match &e {
            ExperimentError::Config(_) => EXIT_USAGE,
            ExperimentError::Dataset(_) | ExperimentError::Csv(_) => EXIT_DATA,
            ExperimentError::Graph(g) => classify_graph(g),
            ExperimentError::Alignment(AlignmentError::Featureless) => EXIT_DATA,
            _ => EXIT_USAGE,
        };
        Failure { code, err: e.into() }
    }
}

fn load_config(common: &Common) -> Result<Config, Failure> {
    let Some(path) = &common.config else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(usage)?;
    Config::parse(&text).map_err(|e: ConfigError| usage(anyhow::anyhow!("{}: {e}", path.display())))
}

fn apply_model_args(m: &ModelArgs, t: &mut TrainConfig) -> Result<(), Failure> {
    if let Some(d) = m.dim {
        t.embedding_dim = d;
    }
    if let Some(h) = m.hidden {
        t.hidden_dim = Some(h);
    }
    t.validate().map_err(usage)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        None => Ok(Box::new(io::stdout().lock())),
        Some(p) => {
            let f = fs::File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .map_err(data)?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
    }
}

fn synth_graph(config: &Config, seed: u64, overlap: Option<usize>) -> Result<Graph, Failure> {
    let sweep = SweepConfig::from_config(config)?;
    let g = generate(&SynthConfig { seed, ..sweep.synth }).map_err(|e| usage(ExperimentError::from(e)))?;
    match overlap {
        Some(ov) => Ok(with_overlap(&g, ov)?.0),
        None => Ok(g),
    }
}

fn dataset_name(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn cmd_synth(common: &Common, overlap: Option<usize>) -> Outcome {
    let config = load_config(common)?;
    let g = synth_graph(&config, common.seed.unwrap_or(0), overlap)?;
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("synthetic"));
    fs::create_dir_all(&dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(data)?;
    gio::write_edge_list(&dir.join("edges.txt"), &g).map_err(data)?;
    gio::write_features(
        &dir.join("features.csv"),
        g.features().expect("synthetic graphs carry features"),
    )
    .map_err(data)?;
    println!("{} nodes, {} edges -> {}", g.n(), g.edge_count(), dir.display());
    Ok(())
}

fn cmd_train(common: &Common, model: &ModelArgs, dataset: Option<&Path>, overlap: Option<usize>) -> Outcome {
    let config = load_config(common)?;
    let seed = common.seed.unwrap_or(0);
    let task = model.task.map(Task::from).unwrap_or(Task::LinkPrediction);
    let (name, g, mut train) = match dataset {
        Some(dir) => {
            let g = load_dataset(dir)?;
            (dataset_name(dir), g, RealConfig::from_config(&config, task)?.train)
        }
        None => (
            "synthetic".to_string(),
            synth_graph(&config, seed, overlap)?,
            SweepConfig::from_config(&config)?.train,
        ),
    };
    apply_model_args(model, &mut train)?;
    let use_features = model.features.is_none_or(OnOff::enabled);
    let spec = RunSpec {
        task,
        variant: model.variant.map(Variant::from).unwrap_or(Variant::Relu),
        use_features,
        seed,
        train,
        node_scoring: SweepConfig::from_config(&config)?.node_scoring,
    };
    if train_needs_warning(&g, &spec) {
        warn!("feature dimension does not exceed the hidden width");
    }
    let r = run_once(&g, &spec)?;
    let align = if use_features && !g.is_featureless() {
        let mut rep = misalignment(&g).map_err(|e| Failure::from(ExperimentError::from(e)))?;
        rep.overlap_dim = overlap.filter(|_| dataset.is_none());
        Some(rep)
    } else {
        None
    };
    let row = MetricsRecord {
        dataset: name,
        task,
        variant: spec.variant,
        features: use_features.into(),
        overlap_dim: align.as_ref().and_then(|a| a.overlap_dim),
        misalignment: align.as_ref().map(|a| a.subspace_angle_sum),
        d_algn: align.as_ref().map(|a| a.d_algn),
        seed,
        train_auc: r.scores.train_auc,
        test_auc: r.scores.test_auc,
        final_loss: r.outcome.final_loss(),
        wall_time_s: r.wall_time_s,
    };

    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(data)?;
    let f = fs::File::create(dir.join("metrics.csv")).map_err(data)?;
    write_records(f, std::slice::from_ref(&row))?;
    let mut loss = String::from("epoch,loss\n");
    for (k, l) in r.outcome.loss_history.iter().enumerate() {
        loss.push_str(&format!("{k},{l}\n"));
    }
    fs::write(dir.join("loss.csv"), loss).map_err(data)?;
    gio::write_features(&dir.join("w0.csv"), &r.outcome.params.w0).map_err(data)?;
    gio::write_features(&dir.join("w1.csv"), &r.outcome.params.w1).map_err(data)?;
    println!(
        "train AUC {:.4}  test AUC {:.4}  final loss {:.6}",
        row.train_auc, row.test_auc, row.final_loss
    );
    Ok(())
}

fn train_needs_warning(g: &Graph, spec: &RunSpec) -> bool {
    spec.use_features && g.features().is_some_and(|x| x.cols() <= spec.train.hidden())
}

fn cmd_sweep(common: &Common, model: &ModelArgs, seeds: Option<usize>) -> Outcome {
    let config = load_config(common)?;
    let mut cfg = SweepConfig::from_config(&config)?;
    if let Some(s) = common.seed {
        cfg.base_seed = s;
    }
    if let Some(n) = seeds {
        cfg.seeds = n;
    }
    if let Some(t) = model.task {
        cfg.tasks = vec![t.into()];
    }
    if let Some(v) = model.variant {
        cfg.variants = vec![v.into()];
    }
    match model.features {
        Some(OnOff::Off) => cfg.overlaps.clear(),
        Some(OnOff::On) => cfg.featureless = false,
        None => {}
    }
    apply_model_args(model, &mut cfg.train)?;
    info!("sweep: {} runs", cfg.run_count());
    let rows = run_synth_sweep(&cfg, |_| {})?;
    write_records(output(common.out.as_deref())?, &rows)?;
    Ok(())
}

fn cmd_real(common: &Common, model: &ModelArgs, dataset: &Path, seeds: Option<usize>) -> Outcome {
    let config = load_config(common)?;
    let task = model.task.map(Task::from).unwrap_or(Task::LinkPrediction);
    let mut cfg = RealConfig::from_config(&config, task)?;
    if let Some(s) = common.seed {
        cfg.base_seed = s;
    }
    if let Some(n) = seeds {
        cfg.seeds = n;
    }
    if let Some(v) = model.variant {
        cfg.variants = vec![v.into()];
    }
    if let Some(f) = model.features {
        cfg.features = vec![f.enabled()];
    }
    apply_model_args(model, &mut cfg.train)?;
    let g = load_dataset(dataset)?;
    let rows = run_real(&g, &dataset_name(dataset), task, &cfg, |_| {})?;
    match &common.out {
        Some(p) => {
            write_records(output(Some(p))?, &rows)?;
            print!("{}", format_summary(&summarize(&rows)));
        }
        None => {
            write_records(io::stdout().lock(), &rows)?;
            eprint!("{}", format_summary(&summarize(&rows)));
        }
    }
    Ok(())
}

fn cmd_verify(common: &Common, instances: Option<usize>, inject: bool) -> Outcome {
    let config = load_config(common)?;
    let mut cfg = VerifyConfig::from_config(&config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(n) = instances {
        cfg.instances = n;
    }
    cfg.inject_rank_deficient = inject;
    let reports = experiment::verify(&cfg)?;
    let mut out = output(common.out.as_deref())?;
    for r in &reports {
        writeln!(out, "{r}").map_err(data)?;
    }
    out.flush().map_err(data)?;
    let failed = failures(&reports);
    let skipped = reports
        .iter()
        .filter(|r| r.verdict() == Verdict::OutOfHypothesis)
        .count();
    eprintln!(
        "{} checks, {failed} failed, {skipped} outside hypotheses",
        reports.len()
    );
    if failed > 0 {
        return Err(Failure {
            code: EXIT_VERIFY,
            err: anyhow::anyhow!("{failed} verification failures"),
        });
    }
    Ok(())
}

fn cmd_report_alignment(common: &Common, dataset: Option<&Path>, overlap: Option<usize>) -> Outcome {
    let config = load_config(common)?;
    let (name, g) = match dataset {
        Some(dir) => {
            let edges = dir.join("edges.txt");
            let features = dir.join("features.csv");
            let g = gio::load_graph(&edges, features.is_file().then_some(features.as_path()), None)
                .map_err(|e| Failure::from(ExperimentError::from(e)))?;
            (dataset_name(dir), g)
        }
        None => (
            "synthetic".to_string(),
            synth_graph(&config, common.seed.unwrap_or(0), None)?,
        ),
    };
    let rep = match (dataset, overlap) {
        (None, Some(ov)) => with_overlap(&g, ov)?.1,
        _ => misalignment(&g).map_err(|e| Failure::from(ExperimentError::from(e)))?,
    };
    let mut out = output(common.out.as_deref())?;
    out.write_all(alignment_csv(&name, &rep).as_bytes()).map_err(data)?;
    out.flush().map_err(data)?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Synth { common, overlap } => cmd_synth(common, *overlap),
        Command::Train {
            common,
            model,
            dataset,
            overlap,
        } => cmd_train(common, model, dataset.as_deref(), *overlap),
        Command::Sweep { common, model, seeds } => cmd_sweep(common, model, *seeds),
        Command::Real {
            common,
            model,
            dataset,
            seeds,
        } => cmd_real(common, model, dataset, *seeds),
        Command::Verify {
            common,
            instances,
            inject_rank_deficient,
        } => cmd_verify(common, *instances, *inject_rank_deficient),
        Command::ReportAlignment {
            common,
            dataset,
            overlap,
        } => cmd_report_alignment(common, dataset.as_deref(), *overlap),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, err }) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
