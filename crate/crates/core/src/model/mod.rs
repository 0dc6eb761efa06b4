//! Two-layer graph auto-encoders (linear and relu), the dot-product decoder,
//! the weighted reconstruction objective and a full-batch Adam trainer.

mod objective;
mod optim;
mod train;

pub use objective::{gradients, loss, loss_and_embedding_grad, Gradients};
pub use optim::{adam_step, AdamState};
pub use train::{train, TrainConfig, TrainOutcome};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DiffusionMatrix, Graph};
use crate::linalg::{DenseMatrix, LinalgError, SparseMatrix};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("loss became non-finite at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Linear,
    Relu,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Linear => "linear",
            Variant::Relu => "relu",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Variant::Linear),
            "relu" => Ok(Variant::Relu),
            other => Err(format!("unknown variant '{other}' (expected linear or relu)")),
        }
    }
}

/// Encoder input. The identity is never materialized and sparse features
/// (bag-of-words style) avoid the dense `n × g` product.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureInput {
    Identity(usize),
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

/// Feature matrices at or below this fill ratio are stored sparse.
const SPARSE_FILL: f64 = 0.1;

impl FeatureInput {
    /// The graph's features, or the identity when `use_features` is false or
    /// the graph has none.
    pub fn for_graph(g: &Graph, use_features: bool) -> Self {
        match g.features() {
            Some(x) if use_features => Self::from_dense(x.clone()),
            _ => Self::Identity(g.n()),
        }
    }

    pub fn from_dense(x: DenseMatrix) -> Self {
        let nonzero = x.as_slice().iter().filter(|v| **v != 0.0).count();
        if !x.is_empty() && (nonzero as f64) <= SPARSE_FILL * x.as_slice().len() as f64 {
            Self::Sparse(SparseMatrix::from_dense(&x))
        } else {
            Self::Dense(x)
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Self::Identity(n) => *n,
            Self::Dense(x) => x.rows(),
            Self::Sparse(x) => x.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Self::Identity(n) => *n,
            Self::Dense(x) => x.cols(),
            Self::Sparse(x) => x.cols(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity(_))
    }

    /// `X * w`.
    pub fn mul(&self, w: &DenseMatrix) -> std::result::Result<DenseMatrix, LinalgError> {
        match self {
            Self::Identity(n) => {
                if w.rows() != *n {
                    return Err(LinalgError::DimensionMismatch {
                        op: "feature product",
                        left: (*n, *n),
                        right: w.shape(),
                    });
                }
                Ok(w.clone())
            }
            Self::Dense(x) => x.matmul(w),
            Self::Sparse(x) => x.spmm(w),
        }
    }

    /// `Xᵀ * g`.
    pub fn t_mul(&self, g: &DenseMatrix) -> std::result::Result<DenseMatrix, LinalgError> {
        match self {
            Self::Identity(_) => self.mul(g),
            Self::Dense(x) => x.t_matmul(g),
            Self::Sparse(x) => x.t_spmm(g),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Self::Identity(n) => DenseMatrix::identity(*n),
            Self::Dense(x) => x.clone(),
            Self::Sparse(x) => x.to_dense(),
        }
    }
}

/// `W⁰ (g × h)` and `W¹ (h × d)`. Both variants use the same factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub variant: Variant,
    pub w0: DenseMatrix,
    pub w1: DenseMatrix,
}

impl EncoderParams {
    pub fn new(variant: Variant, w0: DenseMatrix, w1: DenseMatrix) -> Result<Self> {
        if w0.cols() != w1.rows() {
            return Err(LinalgError::DimensionMismatch {
                op: "encoder weights",
                left: w0.shape(),
                right: w1.shape(),
            }
            .into());
        }
        Ok(Self { variant, w0, w1 })
    }

    /// Glorot-initialized weights for a `g → h → d` chain.
    pub fn init(variant: Variant, g: usize, h: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w0 = glorot_with(&mut rng, g, h);
        let w1 = glorot_with(&mut rng, h, d);
        Self { variant, w0, w1 }
    }

    pub fn input_dim(&self) -> usize {
        self.w0.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w0.cols()
    }

    pub fn embedding_dim(&self) -> usize {
        self.w1.cols()
    }
}

/// Node embeddings `Z`, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(DenseMatrix);

impl Embedding {
    pub fn new(z: DenseMatrix) -> Result<Self> {
        if let Some(p) = z.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: p / z.cols().max(1),
                col: p % z.cols().max(1),
            }
            .into());
        }
        Ok(Self(z))
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }
}

fn glorot_with(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

/// Uniform `±√(6 / (rows + cols))` initialization.
pub fn glorot_init(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    glorot_with(&mut ChaCha8Rng::seed_from_u64(seed), rows, cols)
}

pub(crate) struct Forward {
    /// `Ã X W⁰`
    pub pre: DenseMatrix,
    /// input to the last weight: `Ã X W⁰` (linear) or `Ã relu(Ã X W⁰)` (relu)
    pub last_in: DenseMatrix,
    pub z: DenseMatrix,
}

pub(crate) fn forward(
    params: &EncoderParams,
    diff: &DiffusionMatrix,
    x: &FeatureInput,
) -> std::result::Result<Forward, LinalgError> {
    let a = diff.matrix();
    let pre = a.spmm(&x.mul(&params.w0)?)?;
    let last_in = match params.variant {
        Variant::Linear => pre.clone(),
        Variant::Relu => a.spmm(&pre.map(|v| v.max(0.0)))?,
    };
    let z = last_in.matmul(&params.w1)?;
    Ok(Forward { pre, last_in, z })
}

/// `Z = Ã X W⁰ W¹` (linear) or `Z = Ã relu(Ã X W⁰) W¹` (relu).
pub fn encode(params: &EncoderParams, diff: &DiffusionMatrix, x: &FeatureInput) -> Result<Embedding> {
    if x.rows() != diff.n() {
        return Err(LinalgError::DimensionMismatch {
            op: "encode",
            left: (diff.n(), diff.n()),
            right: (x.rows(), x.cols()),
        }
        .into());
    }
    Embedding::new(forward(params, diff, x)?.z)
}

/// `Z Zᵀ`, the decoder logits; exactly symmetric.
pub fn decode_logits(z: &Embedding) -> DenseMatrix {
    let m = z.matrix();
    let n = m.rows();
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = crate::linalg::dense_dot(m.row(i), m.row(j));
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Places the rows of a weight trained on identity features of a subgraph at
/// the subgraph's node ids in an `n`-row matrix. Rows of unseen nodes are
/// zero, which is what an `n × n` identity input with untrained rows gives.
pub fn expand_identity_rows(w0: &DenseMatrix, nodes: &[usize], n: usize) -> DenseMatrix {
    assert_eq!(w0.rows(), nodes.len(), "one weight row per subgraph node");
    let mut out = DenseMatrix::zeros(n, w0.cols());
    for (k, &v) in nodes.iter().enumerate() {
        out.row_mut(v).copy_from_slice(w0.row(k));
    }
    out
}
