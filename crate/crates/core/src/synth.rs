//! Random geometric graphs on the unit sphere: Gaussian features normalized
//! per row, edges where the cosine similarity clears a density-matched
//! threshold.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::graph::{Graph, GraphError};
use crate::linalg::{dense_dot, DenseMatrix};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("no threshold gives an off-diagonal density in [{low}, {high}]")]
    Unreachable { low: f64, high: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, SynthError>;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub g: usize,
    pub density_low: f64,
    pub density_high: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            g: 64,
            density_low: 0.01,
            density_high: 0.02,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.density_low && self.density_low < self.density_high && self.density_high < 1.0) {
            return Err(SynthError::InvalidConfig(format!(
                "need 0 < density_low < density_high < 1, got {} and {}",
                self.density_low, self.density_high
            )));
        }
        if self.g == 0 || self.n <= self.g {
            return Err(SynthError::InvalidConfig(format!(
                "need n > g >= 1, got n = {} and g = {}",
                self.n, self.g
            )));
        }
        Ok(())
    }
}

/// `n × g` standard normal rows scaled to unit length.
pub fn sphere_features(n: usize, g: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DenseMatrix::from_fn(n, g, |_, _| StandardNormal.sample(&mut rng));
    for i in 0..n {
        let row = x.row_mut(i);
        let norm = dense_dot(row, row).sqrt();
        row.iter_mut().for_each(|v| *v /= norm);
    }
    x
}

pub fn generate(config: &SynthConfig) -> Result<Graph> {
    config.validate()?;
    let x = sphere_features(config.n, config.g, config.seed);
    let gram = x.matmul_t(&x).expect("square gram");
    let tau = threshold_for_density(&gram, config.density_low, config.density_high)?;
    let mut pairs = Vec::new();
    for i in 0..config.n {
        let row = gram.row(i);
        pairs.extend((i + 1..config.n).filter(|&j| row[j] > tau).map(|j| (i, j)));
    }
    Ok(Graph::from_edge_list(&pairs, config.n, Some(x))?)
}

/// Threshold `τ` such that the fraction of off-diagonal entries of the
/// symmetric `gram` strictly above `τ` lies in `[low, high]`. Among the
/// admissible cut points of the sorted upper triangle the one closest to the
/// middle of the band is returned.
pub fn threshold_for_density(gram: &DenseMatrix, low: f64, high: f64) -> Result<f64> {
    if low.is_nan() || high.is_nan() || low >= high {
        return Err(SynthError::InvalidConfig(format!(
            "need low < high, got {low} and {high}"
        )));
    }
    let n = gram.rows();
    let mut v: Vec<f64> = (0..n).flat_map(|i| gram.row(i)[i + 1..].iter().copied()).collect();
    let total = v.len();
    if total == 0 {
        return Err(SynthError::Unreachable { low, high });
    }
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    let lo = (low * total as f64).ceil().max(0.0) as usize;
    let hi = ((high * total as f64).floor() as usize).min(total);
    let mid = 0.5 * (low + high) * total as f64;
    // cut c keeps exactly the c largest values; it exists unless it would
    // split a run of ties
    let valid = |c: usize| c == 0 || c == total || v[c] < v[c - 1];
    let best = (lo..=hi)
        .filter(|&c| valid(c))
        .min_by(|&a, &b| (a as f64 - mid).abs().total_cmp(&(b as f64 - mid).abs()))
        .ok_or(SynthError::Unreachable { low, high })?;
    Ok(if best == total {
        v[total - 1].next_down()
    } else {
        v[best]
    })
}

/// Fraction of off-diagonal entries strictly above `tau`.
pub fn off_diagonal_density(gram: &DenseMatrix, tau: f64) -> f64 {
    let n = gram.rows();
    if n < 2 {
        return 0.0;
    }
    let mut above = 0usize;
    for i in 0..n {
        for (j, &v) in gram.row(i).iter().enumerate() {
            if i != j && v > tau {
                above += 1;
            }
        }
    }
    above as f64 / (n * (n - 1)) as f64
}
