//! Undirected graphs with enforced self-loops, the symmetric diffusion
//! matrix, and the seeded train/val/test splits for both tasks.

pub mod io;
mod split;

pub use split::{split_counts, split_edges, split_nodes, SplitItems, SplitPlan, Task};

use std::collections::BTreeSet;

use thiserror::Error;

use crate::linalg::{DenseMatrix, LinalgError, SparseMatrix};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node id {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("feature matrix has {found} rows, graph has {expected} nodes")]
    FeatureRows { expected: usize, found: usize },
    #[error("edge split needs at least {required} non-loop edges, graph has {found}")]
    TooFewEdges { required: usize, found: usize },
    #[error("node split needs at least {required} nodes, graph has {found}")]
    TooFewNodes { required: usize, found: usize },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// Binary symmetric adjacency with `a_ii = 1`, plus optional node features.
/// `features == None` is the featureless case.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: SparseMatrix,
    features: Option<DenseMatrix>,
}

impl Graph {
    /// Symmetrizes `pairs`, drops duplicates and adds every self-loop.
    pub fn from_edge_list(pairs: &[(usize, usize)], n: usize, features: Option<DenseMatrix>) -> Result<Self> {
        if let Some(x) = &features {
            if x.rows() != n {
                return Err(GraphError::FeatureRows {
                    expected: n,
                    found: x.rows(),
                });
            }
        }
        let mut rows: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
        for &(i, j) in pairs {
            for node in [i, j] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            rows[i].insert(j);
            rows[j].insert(i);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for r in rows {
            indices.extend(r);
            offsets.push(indices.len());
        }
        let values = vec![1.0; indices.len()];
        let adjacency = SparseMatrix::from_csr(n, n, offsets, indices, values)?;
        Ok(Self { adjacency, features })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn features(&self) -> Option<&DenseMatrix> {
        self.features.as_ref()
    }

    pub fn is_featureless(&self) -> bool {
        self.features.is_none()
    }

    pub fn with_features(mut self, features: Option<DenseMatrix>) -> Result<Self> {
        if let Some(x) = &features {
            if x.rows() != self.n() {
                return Err(GraphError::FeatureRows {
                    expected: self.n(),
                    found: x.rows(),
                });
            }
        }
        self.features = features;
        Ok(self)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.contains(i, j)
    }

    /// Degree including the self-loop.
    pub fn degree(&self, i: usize) -> usize {
        self.adjacency.row(i).0.len()
    }

    /// Undirected non-loop edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity((self.adjacency.nnz() - self.n()) / 2);
        for i in 0..self.n() {
            out.extend(self.adjacency.row(i).0.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        (self.adjacency.nnz() - self.n()) / 2
    }

    /// Fraction of nonzero adjacency entries, self-loops included.
    pub fn density(&self) -> f64 {
        self.adjacency.nnz() as f64 / (self.n() as f64 * self.n() as f64)
    }

    /// Subgraph induced on `nodes`, relabelled `0..nodes.len()` in the given
    /// order. Feature rows follow the nodes.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let n = self.n();
        let mut new_id = vec![usize::MAX; n];
        for (k, &v) in nodes.iter().enumerate() {
            if v >= n {
                return Err(GraphError::NodeOutOfRange { node: v, n });
            }
            new_id[v] = k;
        }
        let mut pairs = Vec::new();
        for (k, &v) in nodes.iter().enumerate() {
            for &u in self.adjacency.row(v).0 {
                let m = new_id[u];
                if m != usize::MAX && m > k {
                    pairs.push((k, m));
                }
            }
        }
        let features = self.features.as_ref().map(|x| x.select_rows(nodes));
        Graph::from_edge_list(&pairs, nodes.len(), features)
    }
}

/// The `n × n` identity used in place of features for featureless models.
pub fn identity_features(g: &Graph) -> DenseMatrix {
    DenseMatrix::identity(g.n())
}

/// `D^{-1/2} A D^{-1/2}` of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix(SparseMatrix);

impl DiffusionMatrix {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.0.to_dense()
    }
}

pub fn diffusion(g: &Graph) -> DiffusionMatrix {
    let a = g.adjacency();
    let deg: Vec<f64> = (0..g.n()).map(|i| g.degree(i) as f64).collect();
    let mut values = Vec::with_capacity(a.nnz());
    for i in 0..g.n() {
        for &j in a.row(i).0 {
            values.push(1.0 / (deg[i] * deg[j]).sqrt());
        }
    }
    let m = SparseMatrix::from_csr(g.n(), g.n(), a.offsets().to_vec(), a.indices().to_vec(), values)
        .expect("same structure as a valid adjacency");
    DiffusionMatrix(m)
}

/// Scales each column to unit l1 norm; all-zero columns stay zero.
pub fn l1_normalize_columns(x: &DenseMatrix) -> DenseMatrix {
    let mut norms = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for (s, v) in norms.iter_mut().zip(x.row(i)) {
            *s += v.abs();
        }
    }
    let mut out = x.clone();
    for i in 0..out.rows() {
        for (v, s) in out.row_mut(i).iter_mut().zip(&norms) {
            if *s > 0.0 {
                *v /= s;
            }
        }
    }
    out
}
