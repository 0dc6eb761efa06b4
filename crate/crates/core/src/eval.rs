//! Negative sampling, edge scoring, AUC and the two evaluation protocols.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{diffusion, Graph, SplitItems, SplitPlan, Task};
use crate::linalg::{dense_dot, DenseMatrix};
use crate::model::{encode, expand_identity_rows, Embedding, EncoderParams, FeatureInput, ModelError, TrainOutcome};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need {needed} non-edges, only {available} exist")]
    InsufficientNonEdges { needed: usize, available: usize },
    #[error("node {node} out of range for an embedding of {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("AUC needs nonempty positive and negative score lists")]
    EmptyScores,
    #[error("no test positives: {0}")]
    NoTestPositives(&'static str),
    #[error("expected a {expected} split plan")]
    WrongTask { expected: &'static str },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Balanced positive/negative pair sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSet {
    pub positives: Vec<(usize, usize)>,
    pub negatives: Vec<(usize, usize)>,
    pub seed: u64,
}

/// As many negatives as `positives`, drawn uniformly without replacement
/// from the non-edges of `g`.
pub fn sample_negatives(g: &Graph, positives: &[(usize, usize)], seed: u64) -> Result<EvalSet> {
    let negatives = sample_non_edges(g, positives.len(), seed, |_, _| true)?;
    Ok(EvalSet {
        positives: positives.to_vec(),
        negatives,
        seed,
    })
}

/// `count` distinct non-edges `(i, j)`, `i < j`, accepted by `keep`, uniform
/// without replacement. Rejection sampling first; if that stalls the
/// admissible pool is enumerated.
pub fn sample_non_edges(
    g: &Graph,
    count: usize,
    seed: u64,
    keep: impl Fn(usize, usize) -> bool,
) -> Result<Vec<(usize, usize)>> {
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let admissible = |i: usize, j: usize| i != j && !g.has_edge(i, j) && keep(i.min(j), i.max(j));
    if count == 0 {
        return Ok(Vec::new());
    }
    if n >= 2 {
        let budget = 64 * count + 4096;
        let mut seen = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        for _ in 0..budget {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            if admissible(i, j) && seen.insert((i.min(j), i.max(j))) {
                out.push((i.min(j), i.max(j)));
                if out.len() == count {
                    return Ok(out);
                }
            }
        }
    }
    let mut pool: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| admissible(i, j))
        .collect();
    if pool.len() < count {
        return Err(EvalError::InsufficientNonEdges {
            needed: count,
            available: pool.len(),
        });
    }
    // partial Fisher-Yates
    for k in 0..count {
        let r = rng.random_range(k..pool.len());
        pool.swap(k, r);
    }
    pool.truncate(count);
    Ok(pool)
}

fn check_ids(z: &Embedding, edges: &[(usize, usize)]) -> Result<()> {
    let n = z.n();
    match edges.iter().flat_map(|&(i, j)| [i, j]).find(|&v| v >= n) {
        Some(node) => Err(EvalError::NodeOutOfRange { node, n }),
        None => Ok(()),
    }
}

/// Decoder logits `z_i · z_j`.
pub fn edge_logits(z: &Embedding, edges: &[(usize, usize)]) -> Result<Vec<f64>> {
    check_ids(z, edges)?;
    let m = z.matrix();
    Ok(edges.iter().map(|&(i, j)| dense_dot(m.row(i), m.row(j))).collect())
}

/// Decoder probabilities `σ(z_i · z_j)`.
pub fn score_edges(z: &Embedding, edges: &[(usize, usize)]) -> Result<Vec<f64>> {
    Ok(edge_logits(z, edges)?.into_iter().map(sigmoid).collect())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mann-Whitney AUC with midranks: `P(pos > neg) + ½ P(pos = neg)`.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < all.len() {
        let mut end = k + 1;
        while end < all.len() && all[end].0 == all[k].0 {
            end += 1;
        }
        // ranks k+1..=end share their mean
        let midrank = (k + 1 + end) as f64 / 2.0;
        rank_sum += midrank * all[k..end].iter().filter(|e| e.1).count() as f64;
        k = end;
    }
    let (p, q) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl BinaryMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// Reconstructed adjacency: `1` where `σ(logit) ≥ 0.5`, i.e. `logit ≥ 0`.
pub fn binarize(logits: &DenseMatrix) -> BinaryMatrix {
    BinaryMatrix {
        rows: logits.rows(),
        cols: logits.cols(),
        bits: logits.as_slice().iter().map(|&v| v >= 0.0).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskScores {
    pub train_auc: f64,
    pub test_auc: f64,
    pub test_positives: usize,
}

// AUC is computed on logits: it only depends on their order, and logits do
// not saturate the way σ does in floating point.
fn auc_of(z: &Embedding, set: &EvalSet) -> Result<f64> {
    auc(&edge_logits(z, &set.positives)?, &edge_logits(z, &set.negatives)?)
}

fn mix(seed: u64, stream: u64) -> u64 {
    seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Held-out edge evaluation. Both AUCs use the embedding of the training
/// graph; negatives are non-edges of the full graph.
pub fn link_task_eval(full: &Graph, outcome: &TrainOutcome, plan: &SplitPlan, seed: u64) -> Result<TaskScores> {
    let SplitItems::Edges { train, test, .. } = &plan.items else {
        return Err(EvalError::WrongTask {
            expected: Task::LinkPrediction.as_str(),
        });
    };
    if test.is_empty() {
        return Err(EvalError::NoTestPositives("edge split has no test edges"));
    }
    let z = &outcome.embedding;
    let train_set = sample_negatives(full, train, mix(seed, 1))?;
    let test_set = sample_negatives(full, test, mix(seed, 2))?;
    Ok(TaskScores {
        train_auc: auc_of(z, &train_set)?,
        test_auc: auc_of(z, &test_set)?,
        test_positives: test.len(),
    })
}

/// Which pairs of the full graph are scored after a node split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeScoring {
    /// every pair whose endpoints are both outside the validation nodes
    #[default]
    NonValidation,
    /// only pairs touching at least one test node
    HeldOutIncident,
}

impl NodeScoring {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeScoring::NonValidation => "non-validation",
            NodeScoring::HeldOutIncident => "held-out-incident",
        }
    }
}

impl std::str::FromStr for NodeScoring {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "non-validation" => Ok(NodeScoring::NonValidation),
            "held-out-incident" => Ok(NodeScoring::HeldOutIncident),
            other => Err(format!(
                "unknown node scoring '{other}' (expected non-validation or held-out-incident)"
            )),
        }
    }
}

/// Encodes the full graph with weights trained on the induced subgraph of
/// `train_nodes`. Identity-input weights are re-indexed to full node ids.
pub fn encode_full_graph(
    full: &Graph,
    params: &EncoderParams,
    input: &FeatureInput,
    train_nodes: &[usize],
) -> Result<Embedding> {
    let diff = diffusion(full);
    if input.is_identity() {
        let mut p = params.clone();
        p.w0 = expand_identity_rows(&params.w0, train_nodes, full.n());
        Ok(encode(&p, &diff, &FeatureInput::Identity(full.n()))?)
    } else {
        Ok(encode(params, &diff, &FeatureInput::for_graph(full, true))?)
    }
}

/// Test positives of a node split under `scoring`, as `(i, j)` with `i < j`.
pub fn node_test_positives(full: &Graph, plan: &SplitPlan, scoring: NodeScoring) -> Result<Vec<(usize, usize)>> {
    let mask = node_mask(full.n(), plan, scoring)?;
    Ok(full
        .edges()
        .into_iter()
        .filter(|&(i, j)| scoring_admits(scoring, &mask, i, j))
        .collect())
}

fn node_mask(n: usize, plan: &SplitPlan, scoring: NodeScoring) -> Result<Vec<bool>> {
    let SplitItems::Nodes { val, test, .. } = &plan.items else {
        return Err(EvalError::WrongTask {
            expected: Task::NodePrediction.as_str(),
        });
    };
    let (marked, value) = match scoring {
        NodeScoring::NonValidation => (val, false),
        NodeScoring::HeldOutIncident => (test, true),
    };
    let mut mask = vec![!value; n];
    for &v in marked {
        mask[v] = value;
    }
    Ok(mask)
}

fn scoring_admits(scoring: NodeScoring, mask: &[bool], i: usize, j: usize) -> bool {
    match scoring {
        NodeScoring::NonValidation => mask[i] && mask[j],
        NodeScoring::HeldOutIncident => mask[i] || mask[j],
    }
}

/// Held-out node evaluation. Train AUC scores the induced training graph
/// with its own embedding; test AUC scores the full graph encoded with the
/// trained weights on the pairs selected by `scoring`.
pub fn node_task_eval(
    full: &Graph,
    train_graph: &Graph,
    outcome: &TrainOutcome,
    plan: &SplitPlan,
    scoring: NodeScoring,
    seed: u64,
) -> Result<TaskScores> {
    let SplitItems::Nodes { train: train_nodes, .. } = &plan.items else {
        return Err(EvalError::WrongTask {
            expected: Task::NodePrediction.as_str(),
        });
    };
    let positives = node_test_positives(full, plan, scoring)?;
    if positives.is_empty() {
        return Err(EvalError::NoTestPositives("no full-graph edge is selected for scoring"));
    }
    let mask = node_mask(full.n(), plan, scoring)?;
    let negatives = sample_non_edges(full, positives.len(), mix(seed, 2), |i, j| {
        scoring_admits(scoring, &mask, i, j)
    })?;
    let z_full = encode_full_graph(full, &outcome.params, &outcome.input, train_nodes)?;
    let test_set = EvalSet {
        positives,
        negatives,
        seed: mix(seed, 2),
    };
    let train_set = sample_negatives(train_graph, &train_graph.edges(), mix(seed, 1))?;
    Ok(TaskScores {
        train_auc: auc_of(&outcome.embedding, &train_set)?,
        test_auc: auc_of(&z_full, &test_set)?,
        test_positives: test_set.positives.len(),
    })
}
