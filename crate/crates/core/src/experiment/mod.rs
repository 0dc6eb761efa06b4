//! Experiment protocol: single runs, the synthetic misalignment sweep, the
//! real-dataset table, the theory verification batch and CSV records.

mod config;

pub use config::{Config, ConfigError, Switch};

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::info;
use serde::Serialize;
use thiserror::Error;

use crate::alignment::{misalignment, perturb_features, AlignmentError, MisalignmentReport};
use crate::eval::{link_task_eval, node_task_eval, EvalError, NodeScoring, TaskScores};
use crate::graph::{io, split_edges, split_nodes, Graph, GraphError, Task};
use crate::linalg::DenseMatrix;
use crate::model::{train, ModelError, TrainConfig, TrainOutcome, Variant};
use crate::synth::{generate, SynthConfig, SynthError};
use crate::theory::{self, CheckReport, TheoryError, Verdict};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset: {0}")]
    Dataset(String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// SplitMix64 of `base` mixed with a stream id; used so split, training and
/// evaluation randomness never share a stream.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SPLIT_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;
const EVAL_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFlag {
    Off,
    On,
}

impl From<bool> for FeatureFlag {
    fn from(b: bool) -> Self {
        if b {
            FeatureFlag::On
        } else {
            FeatureFlag::Off
        }
    }
}

/// One row of results. Columns are written in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub dataset: String,
    pub task: Task,
    pub variant: Variant,
    pub features: FeatureFlag,
    pub overlap_dim: Option<usize>,
    /// principal-angle sum between `span(ÃX)` and `span(X)`
    pub misalignment: Option<f64>,
    pub d_algn: Option<f64>,
    pub seed: u64,
    pub train_auc: f64,
    pub test_auc: f64,
    pub final_loss: f64,
    pub wall_time_s: f64,
}

pub const CSV_COLUMNS: [&str; 12] = [
    "dataset",
    "task",
    "variant",
    "features",
    "overlap_dim",
    "misalignment",
    "d_algn",
    "seed",
    "train_auc",
    "test_auc",
    "final_loss",
    "wall_time_s",
];

pub fn write_records<W: Write>(w: W, records: &[MetricsRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if records.is_empty() {
        out.write_record(CSV_COLUMNS)?;
    }
    for r in records {
        out.serialize(r)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Everything that identifies a single train/evaluate run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub task: Task,
    pub variant: Variant,
    pub use_features: bool,
    pub seed: u64,
    pub train: TrainConfig,
    pub node_scoring: NodeScoring,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub scores: TaskScores,
    pub outcome: TrainOutcome,
    pub wall_time_s: f64,
}

/// Splits `g` for the task, trains on the training part and evaluates.
pub fn run_once(g: &Graph, spec: &RunSpec) -> Result<RunResult> {
    let start = Instant::now();
    let split_seed = derive_seed(spec.seed, SPLIT_STREAM);
    let eval_seed = derive_seed(spec.seed, EVAL_STREAM);
    let cfg = TrainConfig {
        seed: derive_seed(spec.seed, TRAIN_STREAM),
        ..spec.train.clone()
    };
    let (outcome, scores) = match spec.task {
        Task::LinkPrediction => {
            let (tg, plan) = split_edges(g, split_seed)?;
            let out = train(&tg, &cfg, spec.variant, spec.use_features)?;
            let s = link_task_eval(g, &out, &plan, eval_seed)?;
            (out, s)
        }
        Task::NodePrediction => {
            let (tg, plan) = split_nodes(g, split_seed)?;
            let out = train(&tg, &cfg, spec.variant, spec.use_features)?;
            let s = node_task_eval(g, &tg, &out, &plan, spec.node_scoring, eval_seed)?;
            (out, s)
        }
    };
    Ok(RunResult {
        scores,
        outcome,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn record(dataset: &str, spec: &RunSpec, r: &RunResult, align: Option<&MisalignmentReport>) -> MetricsRecord {
    MetricsRecord {
        dataset: dataset.to_string(),
        task: spec.task,
        variant: spec.variant,
        features: spec.use_features.into(),
        overlap_dim: align.and_then(|a| a.overlap_dim),
        misalignment: align.map(|a| a.subspace_angle_sum),
        d_algn: align.map(|a| a.d_algn),
        seed: spec.seed,
        train_auc: r.scores.train_auc,
        test_auc: r.scores.test_auc,
        final_loss: r.outcome.final_loss(),
        wall_time_s: r.wall_time_s,
    }
}

/// Canonical output order, independent of execution order.
pub fn sort_records(records: &mut [MetricsRecord]) {
    records.sort_by(|a, b| {
        (
            &a.dataset,
            a.task,
            a.variant,
            a.features,
            std::cmp::Reverse(a.overlap_dim),
            a.seed,
        )
            .cmp(&(
                &b.dataset,
                b.task,
                b.variant,
                b.features,
                std::cmp::Reverse(b.overlap_dim),
                b.seed,
            ))
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base_seed: u64,
    pub seeds: usize,
    pub overlaps: Vec<usize>,
    pub featureless: bool,
    pub variants: Vec<Variant>,
    pub tasks: Vec<Task>,
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub node_scoring: NodeScoring,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base_seed: 0,
            seeds: 10,
            overlaps: vec![64, 32, 16, 8, 4, 2, 0],
            featureless: true,
            variants: vec![Variant::Linear, Variant::Relu],
            tasks: vec![Task::LinkPrediction, Task::NodePrediction],
            synth: SynthConfig::default(),
            train: TrainConfig {
                embedding_dim: 8,
                ..TrainConfig::default()
            },
            node_scoring: NodeScoring::default(),
        }
    }
}

fn apply_train(c: &Config, t: &mut TrainConfig) -> Result<()> {
    if let Some(v) = c.get("train", "epochs")? {
        t.epochs = v;
    }
    if let Some(v) = c.get("train", "learning_rate")? {
        t.learning_rate = v;
    }
    if let Some(v) = c.get("train", "beta1")? {
        t.beta1 = v;
    }
    if let Some(v) = c.get("train", "beta2")? {
        t.beta2 = v;
    }
    if let Some(v) = c.get("train", "epsilon")? {
        t.epsilon = v;
    }
    if let Some(v) = c.get("train", "lambda")? {
        t.lambda = v;
    }
    if let Some(v) = c.get("train", "embedding_dim")? {
        t.embedding_dim = v;
    }
    if let Some(v) = c.get("train", "hidden_dim")? {
        t.hidden_dim = Some(v);
    }
    t.validate().map_err(|e| ConfigError {
        line: c.line_of("train", "epochs"),
        message: e.to_string(),
    })?;
    Ok(())
}

impl SweepConfig {
    pub fn from_config(c: &Config) -> Result<Self> {
        let mut s = Self::default();
        apply_train(c, &mut s.train)?;
        if let Some(v) = c.get("synth", "n")? {
            s.synth.n = v;
        }
        if let Some(v) = c.get("synth", "g")? {
            s.synth.g = v;
        }
        if let Some(v) = c.get("synth", "density_low")? {
            s.synth.density_low = v;
        }
        if let Some(v) = c.get("synth", "density_high")? {
            s.synth.density_high = v;
        }
        s.synth.validate().map_err(|e| ConfigError {
            line: c.line_of("synth", "n"),
            message: e.to_string(),
        })?;
        if let Some(v) = c.get("sweep", "seed")? {
            s.base_seed = v;
        }
        if let Some(v) = c.get("sweep", "seeds")? {
            s.seeds = v;
        }
        if let Some(v) = c.get_list::<usize>("sweep", "overlaps")? {
            if let Some(&bad) = v.iter().find(|&&d| d > s.synth.g) {
                return Err(ConfigError {
                    line: c.line_of("sweep", "overlaps"),
                    message: format!("overlap {bad} exceeds feature dimension {}", s.synth.g),
                }
                .into());
            }
            s.overlaps = v;
        }
        if let Some(Switch(b)) = c.get("sweep", "featureless")? {
            s.featureless = b;
        }
        if let Some(v) = c.get_list("sweep", "variants")? {
            s.variants = v;
        }
        if let Some(v) = c.get_list("sweep", "tasks")? {
            s.tasks = v;
        }
        if let Some(v) = c.get("sweep", "node_scoring")? {
            s.node_scoring = v;
        }
        Ok(s)
    }

    /// Rows the sweep produces.
    pub fn run_count(&self) -> usize {
        (self.overlaps.len() + usize::from(self.featureless)) * self.seeds * self.variants.len() * self.tasks.len()
    }
}

/// Synthetic graph for sweep seed index `k`, plus its unperturbed features.
pub fn sweep_graph(cfg: &SweepConfig, k: usize) -> Result<(u64, Graph)> {
    let seed = cfg.base_seed.wrapping_add(k as u64);
    let g = generate(&SynthConfig {
        seed,
        ..cfg.synth.clone()
    })?;
    Ok((seed, g))
}

/// The synthetic graph with features replaced by their `overlap`
/// perturbation, and its misalignment report.
pub fn with_overlap(g: &Graph, overlap: usize) -> Result<(Graph, MisalignmentReport)> {
    let x = g
        .features()
        .ok_or_else(|| ExperimentError::Dataset("synthetic graph without features".into()))?;
    let h = g.clone().with_features(Some(perturb_features(x, overlap)?))?;
    let mut report = misalignment(&h)?;
    report.overlap_dim = Some(overlap);
    Ok((h, report))
}

/// Every overlap (plus the featureless model) on `seeds` independent graphs,
/// for each requested task and variant. `progress` sees each row as it is
/// produced; the returned rows are in canonical order.
pub fn run_synth_sweep(cfg: &SweepConfig, mut progress: impl FnMut(&MetricsRecord)) -> Result<Vec<MetricsRecord>> {
    let mut rows = Vec::with_capacity(cfg.run_count());
    for k in 0..cfg.seeds {
        let (seed, g) = sweep_graph(cfg, k)?;
        let mut inputs: Vec<(Graph, Option<MisalignmentReport>, bool)> = Vec::new();
        for &ov in &cfg.overlaps {
            let (h, rep) = with_overlap(&g, ov)?;
            inputs.push((h, Some(rep), true));
        }
        if cfg.featureless {
            inputs.push((g.clone(), None, false));
        }
        for (h, rep, use_features) in &inputs {
            for &task in &cfg.tasks {
                for &variant in &cfg.variants {
                    let spec = RunSpec {
                        task,
                        variant,
                        use_features: *use_features,
                        seed,
                        train: cfg.train.clone(),
                        node_scoring: cfg.node_scoring,
                    };
                    let r = run_once(h, &spec)?;
                    let row = record("synthetic", &spec, &r, rep.as_ref());
                    info!(
                        "synthetic seed={seed} {} {} features={:?} overlap={:?}: test auc {:.4}",
                        task.as_str(),
                        variant.as_str(),
                        row.features,
                        row.overlap_dim,
                        row.test_auc
                    );
                    progress(&row);
                    rows.push(row);
                }
            }
        }
    }
    sort_records(&mut rows);
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealConfig {
    pub base_seed: u64,
    pub seeds: usize,
    pub variants: Vec<Variant>,
    pub features: Vec<bool>,
    pub train: TrainConfig,
    pub node_scoring: NodeScoring,
}

impl RealConfig {
    /// Defaults for a task: 16-dimensional embeddings for links, 4 for nodes.
    pub fn for_task(task: Task) -> Self {
        let dim = match task {
            Task::LinkPrediction => 16,
            Task::NodePrediction => 4,
        };
        Self {
            base_seed: 0,
            seeds: 10,
            variants: vec![Variant::Linear, Variant::Relu],
            features: vec![true, false],
            train: TrainConfig {
                embedding_dim: dim,
                ..TrainConfig::default()
            },
            node_scoring: NodeScoring::default(),
        }
    }

    pub fn from_config(c: &Config, task: Task) -> Result<Self> {
        let mut s = Self::for_task(task);
        apply_train(c, &mut s.train)?;
        if let Some(v) = c.get("real", "seed")? {
            s.base_seed = v;
        }
        if let Some(v) = c.get("real", "seeds")? {
            s.seeds = v;
        }
        if let Some(v) = c.get_list("real", "variants")? {
            s.variants = v;
        }
        if let Some(v) = c.get_list::<Switch>("real", "features")? {
            s.features = v.into_iter().map(|Switch(b)| b).collect();
        }
        if let Some(v) = c.get("real", "node_scoring")? {
            s.node_scoring = v;
        }
        Ok(s)
    }
}

/// Reads `edges.txt` and `features.csv` from a dataset directory.
pub fn load_dataset(dir: &Path) -> Result<Graph> {
    let edges = dir.join("edges.txt");
    let features = dir.join("features.csv");
    for p in [&edges, &features] {
        if !p.is_file() {
            return Err(ExperimentError::Dataset(format!("missing {}", p.display())));
        }
    }
    Ok(io::load_graph(&edges, Some(&features), None)?)
}

/// `seeds × variants × feature settings` runs on one dataset.
pub fn run_real(
    g: &Graph,
    dataset: &str,
    task: Task,
    cfg: &RealConfig,
    mut progress: impl FnMut(&MetricsRecord),
) -> Result<Vec<MetricsRecord>> {
    let mut rows = Vec::new();
    for &variant in &cfg.variants {
        for &use_features in &cfg.features {
            for k in 0..cfg.seeds {
                let spec = RunSpec {
                    task,
                    variant,
                    use_features,
                    seed: cfg.base_seed.wrapping_add(k as u64),
                    train: cfg.train.clone(),
                    node_scoring: cfg.node_scoring,
                };
                let r = run_once(g, &spec)?;
                let row = record(dataset, &spec, &r, None);
                info!(
                    "{dataset} {} {} features={:?} seed={}: test auc {:.4}",
                    task.as_str(),
                    variant.as_str(),
                    row.features,
                    row.seed,
                    row.test_auc
                );
                progress(&row);
                rows.push(row);
            }
        }
    }
    sort_records(&mut rows);
    Ok(rows)
}

/// Mean and population standard deviation of the test AUC for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub task: Task,
    pub variant: Variant,
    pub features: FeatureFlag,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
}

pub fn summarize(records: &[MetricsRecord]) -> Vec<SummaryRow> {
    let mut cells: Vec<SummaryRow> = Vec::new();
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    for chunk in sorted.chunk_by(|a, b| {
        (&a.dataset, a.task, a.variant, a.features, a.overlap_dim)
            == (&b.dataset, b.task, b.variant, b.features, b.overlap_dim)
    }) {
        let vals: Vec<f64> = chunk.iter().map(|r| r.test_auc).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        cells.push(SummaryRow {
            dataset: chunk[0].dataset.clone(),
            task: chunk[0].task,
            variant: chunk[0].variant,
            features: chunk[0].features,
            runs: vals.len(),
            mean,
            std: var.sqrt(),
        });
    }
    cells
}

/// Plain-text table in the `mean ± std` layout.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut s = String::from("dataset\ttask\tvariant\tfeatures\ttest AUC\n");
    for r in rows {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.2} ± {:.4}\n",
            r.dataset,
            r.task.as_str(),
            r.variant.as_str(),
            if r.features == FeatureFlag::On { "on" } else { "off" },
            r.mean,
            r.std
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub instances: usize,
    pub tolerance: f64,
    /// replace the first linearization instance with a singular adjacency
    pub inject_rank_deficient: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 20,
            tolerance: theory::DEFAULT_TOL,
            inject_rank_deficient: false,
        }
    }
}

impl VerifyConfig {
    pub fn from_config(c: &Config) -> Result<Self> {
        let mut v = Self::default();
        if let Some(s) = c.get("verify", "seed")? {
            v.seed = s;
        }
        if let Some(n) = c.get("verify", "instances")? {
            v.instances = n;
        }
        Ok(v)
    }
}

/// Tolerance for the containment fit of trained relu embeddings.
pub const CONTAINMENT_TOL: f64 = 1e-6;

/// Runs every statement's suite with `instances` instances each.
pub fn verify(cfg: &VerifyConfig) -> Result<Vec<CheckReport>> {
    let n = cfg.instances;
    let mut reports = theory::linearization_suite(cfg.seed, n)?;
    if cfg.inject_rank_deficient && !reports.is_empty() {
        reports[0] = singular_linearization_report()?;
    }
    reports.extend(theory::containment_suite(cfg.seed, n, CONTAINMENT_TOL)?);
    reports.extend(theory::reparameterization_suite(cfg.seed, n, cfg.tolerance)?);
    reports.extend(theory::recoverability_suite(cfg.seed, n, cfg.tolerance)?);
    reports.extend(theory::obstruction_suite(cfg.seed, n, cfg.tolerance)?);
    Ok(reports)
}

fn singular_linearization_report() -> Result<CheckReport> {
    // two nodes with identical closed neighbourhoods
    let g = Graph::from_edge_list(&[(0, 1), (0, 2), (1, 2), (2, 3)], 5, None)?;
    let probe = DenseMatrix::from_fn(5, 2, |i, j| ((i + 2 * j) as f64).sin());
    match theory::linearize(&g, &probe) {
        Err(TheoryError::HypothesisViolated(why)) => Ok(CheckReport {
            statement: theory::Statement::Linearization,
            instance: "#0 n=5 injected singular adjacency".into(),
            residual: f64::NAN,
            tolerance: theory::DEFAULT_TOL,
            holds: false,
            expected: true,
            hypothesis_violation: Some(why),
        }),
        Err(e) => Err(e.into()),
        Ok((_, r)) => Ok(r),
    }
}

pub fn failures(reports: &[CheckReport]) -> usize {
    reports.iter().filter(|r| r.verdict() == Verdict::Fail).count()
}

pub const ALIGNMENT_COLUMNS: [&str; 5] = ["dataset", "overlap_dim", "d_algn", "misalignment", "clamped_entries"];

/// One CSV row (with header) describing a misalignment report.
pub fn alignment_csv(dataset: &str, r: &MisalignmentReport) -> String {
    format!(
        "{}\n{},{},{},{},{}\n",
        ALIGNMENT_COLUMNS.join(","),
        dataset,
        r.overlap_dim.map(|d| d.to_string()).unwrap_or_default(),
        r.d_algn,
        r.subspace_angle_sum,
        r.clamped_entries
    )
}
