//! Executable forms of the solution-space results: every "there exists a
//! weight matrix" claim becomes a least-squares fit whose residual is
//! checked against a tolerance, on instances built so the hypotheses hold
//! (or deliberately fail).

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::alignment::{image_conditions, span_equal, AlignmentError};
use crate::graph::{diffusion, DiffusionMatrix, Graph, GraphError};
use crate::linalg::{
    least_squares, numeric_rank, symmetric_eigen, DenseMatrix, LeastSquares, LinalgError, SparseMatrix,
    DEFAULT_RANK_TOL,
};
use crate::model::{encode, loss, train, Embedding, EncoderParams, FeatureInput, ModelError, TrainConfig, Variant};
use crate::synth::{generate, SynthConfig, SynthError};

/// Residual threshold for the existence claims.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

pub type Result<T> = std::result::Result<T, TheoryError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statement {
    /// full-rank adjacency linearizes any node-wise map
    Linearization,
    /// relu embeddings lie in the featureless linear solution space
    Containment,
    /// features with equal span give equal solution spaces
    Reparameterization,
    /// aligned features are recoverable through one diffusion step
    Recoverability,
    /// misaligned features block recovery of features and of `Y`
    Obstruction,
}

impl Statement {
    pub fn as_str(self) -> &'static str {
        match self {
            Statement::Linearization => "linearization",
            Statement::Containment => "containment",
            Statement::Reparameterization => "reparameterization",
            Statement::Recoverability => "recoverability",
            Statement::Obstruction => "obstruction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// the instance does not satisfy the statement's hypothesis
    OutOfHypothesis,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::OutOfHypothesis => "out-of-hypothesis",
        })
    }
}

/// One checked instance. `holds` is `residual < tolerance` (plus any side
/// condition); `expected` is what the instance was built to show.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub statement: Statement,
    pub instance: String,
    pub residual: f64,
    pub tolerance: f64,
    pub holds: bool,
    pub expected: bool,
    /// reason the hypothesis fails on this instance, if it does
    pub hypothesis_violation: Option<String>,
}

impl CheckReport {
    fn new(statement: Statement, instance: String, residual: f64, tolerance: f64) -> Self {
        Self {
            statement,
            instance,
            residual,
            tolerance,
            holds: residual < tolerance,
            expected: true,
            hypothesis_violation: None,
        }
    }

    pub fn verdict(&self) -> Verdict {
        if self.hypothesis_violation.is_some() {
            Verdict::OutOfHypothesis
        } else if self.holds == self.expected {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} residual={:.3e} tol={:.1e} holds={} expected={} -> {}",
            self.statement.as_str(),
            self.instance,
            self.residual,
            self.tolerance,
            self.holds,
            self.expected,
            self.verdict()
        )?;
        if let Some(why) = &self.hypothesis_violation {
            write!(f, " ({why})")?;
        }
        Ok(())
    }
}

/// Least squares followed by one step of iterative refinement.
fn refined_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<LeastSquares> {
    let first = least_squares(a, b)?;
    let r = b.sub(&a.matmul(&first.solution)?)?;
    let corr = least_squares(a, &r)?;
    let solution = first.solution.add(&corr.solution)?;
    let residual_norm = a.matmul(&solution)?.sub(b)?.frobenius_norm();
    if residual_norm <= first.residual_norm {
        Ok(LeastSquares {
            solution,
            residual_norm,
            rank: first.rank,
        })
    } else {
        Ok(first)
    }
}

fn relative(residual: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        residual / scale
    } else {
        residual
    }
}

/// Solves `A · W_A = F` for a full-rank adjacency (self-loops included).
/// The residual is `‖A W_A − F‖_∞`.
pub fn linearize(g: &Graph, probe: &DenseMatrix) -> Result<(DenseMatrix, CheckReport)> {
    let a = g.adjacency().to_dense();
    let rank = numeric_rank(&a, DEFAULT_RANK_TOL)?;
    if rank < g.n() {
        return Err(TheoryError::HypothesisViolated(format!(
            "adjacency has rank {rank} < n = {}",
            g.n()
        )));
    }
    let ls = refined_solve(&a, probe)?;
    let residual = ls.residual_max(&a, probe);
    let report = CheckReport::new(
        Statement::Linearization,
        format!("n={} d={}", g.n(), probe.cols()),
        residual,
        DEFAULT_TOL,
    );
    Ok((ls.solution, report))
}

/// Fits `Ã W = Z` and compares the objective at the fitted embedding with the
/// objective at `Z`. Holds when the max-abs residual is below `tol` and the
/// fitted loss is at most the original plus `tol`. A singular `Ã` is flagged
/// as outside the hypothesis.
pub fn containment(
    adjacency: &SparseMatrix,
    diff: &DiffusionMatrix,
    z: &Embedding,
    lambda: f64,
    tol: f64,
) -> Result<CheckReport> {
    let a = diff.to_dense();
    let ls = refined_solve(&a, z.matrix())?;
    let fitted = a.matmul(&ls.solution)?;
    let residual = fitted.max_abs_diff(z.matrix());
    let l_fit = loss(adjacency, &fitted, lambda)?;
    let l_orig = loss(adjacency, z.matrix(), lambda)?;
    let mut report = CheckReport::new(
        Statement::Containment,
        format!("n={} d={}", z.n(), z.dim()),
        residual,
        tol,
    );
    report.holds = residual < tol && l_fit <= l_orig + tol;
    let rank = numeric_rank(&a, DEFAULT_RANK_TOL)?;
    if rank < a.rows() {
        report.hypothesis_violation = Some(format!("diffusion matrix has rank {rank} < n = {}", a.rows()));
    }
    Ok(report)
}

/// Fits `targets` once with the basis `ÃU` and once with `ÃF`; the residual
/// is the gap between the two fit errors relative to `max(1, ‖targets‖_F)`.
pub fn reparameterization(
    diff: &DiffusionMatrix,
    u: &DenseMatrix,
    f: &DenseMatrix,
    targets: &DenseMatrix,
    tol: f64,
) -> Result<CheckReport> {
    if !span_equal(u, f, tol)? {
        return Err(TheoryError::Precondition("span(U) differs from span(F)".into()));
    }
    let a = diff.matrix();
    let ru = least_squares(&a.spmm(u)?, targets)?.residual_norm;
    let rf = least_squares(&a.spmm(f)?, targets)?.residual_norm;
    let gap = (ru - rf).abs() / targets.frobenius_norm().max(1.0);
    Ok(CheckReport::new(
        Statement::Reparameterization,
        format!("n={} g={}", u.rows(), u.cols()),
        gap,
        tol,
    ))
}

/// Fits `Ã X W = X`; the residual is relative to `‖X‖_F`.
pub fn recoverability(diff: &DiffusionMatrix, x: &DenseMatrix, tol: f64) -> Result<CheckReport> {
    let ax = diff.matrix().spmm(x)?;
    let ls = refined_solve(&ax, x)?;
    Ok(CheckReport::new(
        Statement::Recoverability,
        format!("n={} g={}", x.rows(), x.cols()),
        relative(ls.residual_norm, x.frobenius_norm()),
        tol,
    ))
}

/// Both parts of the misalignment obstruction on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionReport {
    /// `ÃX` leaves `span(X)`
    pub obstruction: bool,
    /// relative residual of `Ã X W = X`
    pub feature_fit_residual: f64,
    /// relative residual of `Ã X W = Y`; `None` when `Ã` is not PSD of rank `g`
    pub y_fit_residual: Option<f64>,
    /// numerical rank of the `g × g` matrix `Yᵀ X`
    pub yt_x_rank: Option<usize>,
    pub hypothesis_violation: Option<String>,
    pub tolerance: f64,
}

impl ObstructionReport {
    /// An obstruction rules out recovering the features.
    pub fn feature_claim_consistent(&self) -> bool {
        !self.obstruction || self.feature_fit_residual >= self.tolerance
    }

    /// `Y` is recoverable exactly when `Yᵀ X` is invertible.
    pub fn y_claim_consistent(&self, g: usize) -> Option<bool> {
        let (res, rank) = (self.y_fit_residual?, self.yt_x_rank?);
        Some((rank == g) == (res < self.tolerance))
    }
}

/// `Y` with `Ã = Y Yᵀ` from the eigenvectors of the positive eigenvalues, or
/// the reason none exists with `rank(Y) = g`.
pub fn psd_factor(diff: &DiffusionMatrix, g: usize, tol: f64) -> Result<std::result::Result<DenseMatrix, String>> {
    let a = diff.to_dense();
    let eig = symmetric_eigen(&a)?;
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lowest = eig.values.last().copied().unwrap_or(0.0);
    if lowest < -tol * scale.max(1.0) {
        return Ok(Err(format!("diffusion matrix is indefinite (eigenvalue {lowest:.3e})")));
    }
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&k| eig.values[k] > tol * scale.max(1.0))
        .collect();
    if keep.len() != g {
        return Ok(Err(format!(
            "rank of the diffusion matrix is {} not g = {g}",
            keep.len()
        )));
    }
    let mut y = eig.vectors.select_columns(&keep);
    for i in 0..y.rows() {
        for (v, &k) in y.row_mut(i).iter_mut().zip(&keep) {
            *v *= eig.values[k].sqrt();
        }
    }
    Ok(Ok(y))
}

pub fn obstruction(diff: &DiffusionMatrix, x: &DenseMatrix, tol: f64) -> Result<ObstructionReport> {
    let conditions = image_conditions(diff, x, tol)?;
    let feature_fit_residual = recoverability(diff, x, tol)?.residual;
    let mut report = ObstructionReport {
        obstruction: conditions.obstruction,
        feature_fit_residual,
        y_fit_residual: None,
        yt_x_rank: None,
        hypothesis_violation: None,
        tolerance: tol,
    };
    match psd_factor(diff, x.cols(), tol)? {
        Ok(y) => {
            let ax = diff.matrix().spmm(x)?;
            let ls = refined_solve(&ax, &y)?;
            report.y_fit_residual = Some(relative(ls.residual_norm, y.frobenius_norm()));
            report.yt_x_rank = Some(numeric_rank(&y.t_matmul(x)?, tol)?);
        }
        Err(why) => report.hypothesis_violation = Some(why),
    }
    Ok(report)
}

// ---- instance generators -------------------------------------------------

/// Erdős–Rényi graph with self-loops whose adjacency has full rank; `p` is
/// the edge probability. Resamples until the rank condition holds.
pub fn random_full_rank_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Result<Graph> {
    loop {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    pairs.push((i, j));
                }
            }
        }
        let g = Graph::from_edge_list(&pairs, n, None)?;
        if numeric_rank(&g.adjacency().to_dense(), DEFAULT_RANK_TOL)? == n {
            return Ok(g);
        }
    }
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Well-conditioned random invertible matrix: random plus a shifted identity.
fn random_invertible(k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    random_matrix(k, k, rng)
        .add(&DenseMatrix::identity(k).scale(k as f64))
        .expect("square")
}

/// Disjoint cliques with the given sizes. `Ã` is block diagonal with blocks
/// `1/s · 1 1ᵀ`, so it is PSD with rank equal to the clique count and
/// `Y` is the block indicator matrix scaled by `1/√s`.
pub fn clique_union(sizes: &[usize]) -> Result<(Graph, Vec<std::ops::Range<usize>>)> {
    let n: usize = sizes.iter().sum();
    let mut pairs = Vec::new();
    let mut blocks = Vec::new();
    let mut start = 0;
    for &s in sizes {
        for i in start..start + s {
            pairs.extend((i + 1..start + s).map(|j| (i, j)));
        }
        blocks.push(start..start + s);
        start += s;
    }
    Ok((Graph::from_edge_list(&pairs, n, None)?, blocks))
}

fn block_indicator(n: usize, blocks: &[std::ops::Range<usize>]) -> DenseMatrix {
    let mut y = DenseMatrix::zeros(n, blocks.len());
    for (k, b) in blocks.iter().enumerate() {
        let v = 1.0 / (b.len() as f64).sqrt();
        for i in b.clone() {
            y[(i, k)] = v;
        }
    }
    y
}

/// Unit vector supported on `block`, orthogonal to the block's constant
/// vector, so it lies in the kernel of the clique-union `Ã`.
fn kernel_vector(n: usize, block: &std::ops::Range<usize>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v = vec![0.0; n];
    let vals: Vec<f64> = block.clone().map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let norm = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>().sqrt();
    for (i, x) in block.clone().zip(&vals) {
        v[i] = (x - mean) / norm;
    }
    v
}

// ---- suites ---------------------------------------------------------------

fn probe_for(kind: usize, g: &Graph, d: usize, rng: &mut ChaCha8Rng) -> Result<(String, DenseMatrix)> {
    let n = g.n();
    let a = g.adjacency().to_dense();
    Ok(match kind % 4 {
        0 => {
            let m = random_matrix(n, d, rng);
            ("sin(A M)".into(), a.matmul(&m)?.map(f64::sin))
        }
        1 => {
            let x = random_matrix(n, 3, rng);
            let p = EncoderParams::init(Variant::Relu, 3, 8, d, rng.random());
            let z = encode(
                &p,
                &diffusion(&g.clone().with_features(Some(x.clone()))?),
                &FeatureInput::Dense(x),
            )?;
            ("untrained relu encoder".into(), z.into_matrix())
        }
        2 => {
            let m = random_matrix(n, d, rng);
            let probe = DenseMatrix::from_fn(n, d, |i, j| {
                (m[(i, j)] * 3.0).tanh() + (g.degree(i) as f64).sqrt() * m[(i, j)].powi(2)
            });
            ("tanh/degree map".into(), probe)
        }
        _ => {
            let x = random_matrix(n, 6, rng);
            let featured = g.clone().with_features(Some(x))?;
            let cfg = TrainConfig {
                epochs: 60,
                embedding_dim: d,
                hidden_dim: Some(8),
                seed: rng.random(),
                ..TrainConfig::default()
            };
            let out = train(&featured, &cfg, Variant::Relu, true)?;
            ("trained relu encoder".into(), out.embedding.into_matrix())
        }
    })
}

/// Random full-rank graphs with `n ∈ [5, 30]` and rotating nonlinear probes,
/// every fourth one a trained relu auto-encoder.
pub fn linearization_suite(seed: u64, count: usize) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let n = rng.random_range(5..=30);
        let p = rng.random_range(0.1..0.5);
        let g = random_full_rank_graph(n, p, &mut rng)?;
        let d = rng.random_range(1..=4);
        let (what, probe) = probe_for(k, &g, d, &mut rng)?;
        let (_, mut report) = linearize(&g, &probe)?;
        report.instance = format!("#{k} n={n} d={d} probe={what}");
        out.push(report);
    }
    Ok(out)
}

/// Graph for the containment check: a 50-node synthetic graph with 32
/// features whose diffusion matrix has full rank.
pub fn containment_instance(seed: u64) -> Result<Graph> {
    for attempt in 0..1000u64 {
        let cfg = SynthConfig {
            n: 50,
            g: 32,
            density_low: 0.08,
            density_high: 0.12,
            seed: seed.wrapping_mul(1000).wrapping_add(attempt),
        };
        let g = generate(&cfg)?;
        if numeric_rank(&diffusion(&g).to_dense(), DEFAULT_RANK_TOL)? == g.n() {
            return Ok(g);
        }
    }
    Err(TheoryError::Precondition("no full-rank 50-node instance found".into()))
}

/// Trains a relu auto-encoder (`d = 8`, `h = 16`, 200 epochs) per seed and
/// checks that its embedding lies in the featureless linear solution space.
pub fn containment_suite(seed: u64, count: usize, tol: f64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::with_capacity(count);
    for k in 0..count as u64 {
        let s = seed.wrapping_add(k);
        let g = containment_instance(s)?;
        let cfg = TrainConfig {
            embedding_dim: 8,
            hidden_dim: Some(16),
            seed: s,
            ..TrainConfig::default()
        };
        let trained = train(&g, &cfg, Variant::Relu, true)?;
        let mut r = containment(g.adjacency(), &diffusion(&g), &trained.embedding, cfg.lambda, tol)?;
        r.instance = format!("#{k} n=50 seed={s}");
        out.push(r);
    }
    Ok(out)
}

/// Random reparameterizations `F = U R` (and `F = 2U`) with random and
/// in-span targets.
pub fn reparameterization_suite(seed: u64, count: usize, tol: f64) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let n = rng.random_range(10..=30);
        let gdim = rng.random_range(2..=6);
        let g = random_full_rank_graph(n, 0.2, &mut rng)?;
        let diff = diffusion(&g);
        let u = random_matrix(n, gdim, &mut rng);
        let (f, how) = if k % 5 == 0 {
            (u.scale(2.0), "F=2U")
        } else {
            (u.matmul(&random_invertible(gdim, &mut rng))?, "F=UR")
        };
        let (targets, what) = if k % 3 == 0 {
            let w = random_matrix(gdim, 2, &mut rng);
            (diff.matrix().spmm(&u)?.matmul(&w)?, "in-span")
        } else {
            (random_matrix(n, 2, &mut rng), "random")
        };
        let mut r = reparameterization(&diff, &u, &f, &targets, tol)?;
        r.instance = format!("#{k} n={n} g={gdim} {how} targets={what}");
        out.push(r);
    }
    Ok(out)
}

/// Alternates aligned eigenvector features on random graphs (recoverable)
/// with clique-union features carrying a kernel component (not recoverable).
/// Each report also checks agreement with [`image_conditions`].
pub fn recoverability_suite(seed: u64, count: usize, tol: f64) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let (diff, x, expected, what) = if k % 2 == 0 {
            let n = rng.random_range(6..=20);
            let g = random_full_rank_graph(n, 0.3, &mut rng)?;
            let diff = diffusion(&g);
            let eig = symmetric_eigen(&diff.to_dense())?;
            let mut nonzero: Vec<usize> = (0..n).filter(|&i| eig.values[i].abs() > 1e-6).collect();
            let take = rng.random_range(1..=nonzero.len().min(4));
            for i in 0..take {
                let j = rng.random_range(i..nonzero.len());
                nonzero.swap(i, j);
            }
            let x = eig.vectors.select_columns(&nonzero[..take]);
            let x = x.matmul(&random_invertible(take, &mut rng))?;
            (diff, x, true, "eigenvectors")
        } else {
            let m = rng.random_range(2..=4);
            let sizes: Vec<usize> = (0..m).map(|_| rng.random_range(2..=5)).collect();
            let (g, blocks) = clique_union(&sizes)?;
            let n = g.n();
            let mut x = block_indicator(n, &blocks);
            let target = rng.random_range(0..m);
            let v = kernel_vector(n, &blocks[target], &mut rng);
            let col: Vec<f64> = x.column(target).iter().zip(&v).map(|(a, b)| a + b).collect();
            x.set_column(target, &col);
            (diffusion(&g), x, false, "kernel component")
        };
        let mut r = recoverability(&diff, &x, tol)?;
        r.expected = expected;
        let cond = image_conditions(&diff, &x, tol)?;
        if cond.aligned != r.holds {
            r.holds = !r.expected;
        }
        r.instance = format!("#{k} n={} g={} {what}", x.rows(), x.cols());
        out.push(r);
    }
    Ok(out)
}

/// Instance kinds for the obstruction suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ObstructionKind {
    Aligned,
    Misaligned,
    EqualsY,
}

/// Clique-union instances (PSD `Ã` of rank `g`): aligned `X = Y R`,
/// misaligned `X = [y_1 + v_1, …, y_(g−1) + v_(g−1), v_g]` with kernel
/// vectors `v`, and `X = Y`. A report holds when both parts of the
/// obstruction behave as the construction predicts.
pub fn obstruction_suite(seed: u64, count: usize, tol: f64) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let kind = [
            ObstructionKind::Misaligned,
            ObstructionKind::Aligned,
            ObstructionKind::EqualsY,
        ][k % 3];
        let m = rng.random_range(2..=5);
        let sizes: Vec<usize> = (0..m).map(|_| rng.random_range(2..=6)).collect();
        let (g, blocks) = clique_union(&sizes)?;
        let n = g.n();
        let y = block_indicator(n, &blocks);
        let x = match kind {
            ObstructionKind::Aligned => y.matmul(&random_invertible(m, &mut rng))?,
            ObstructionKind::EqualsY => y.clone(),
            ObstructionKind::Misaligned => {
                let mut x = DenseMatrix::zeros(n, m);
                for (c, b) in blocks.iter().enumerate() {
                    let v = kernel_vector(n, b, &mut rng);
                    let col: Vec<f64> = if c + 1 < m {
                        y.column(c).iter().zip(&v).map(|(a, b)| a + b).collect()
                    } else {
                        v
                    };
                    x.set_column(c, &col);
                }
                x
            }
        };
        let diff = diffusion(&g);
        let rep = obstruction(&diff, &x, tol)?;
        let misaligned = kind == ObstructionKind::Misaligned;
        let y_res = rep.y_fit_residual.unwrap_or(f64::NAN);
        let holds = rep.hypothesis_violation.is_none()
            && rep.obstruction == misaligned
            && rep.feature_claim_consistent()
            && rep.y_claim_consistent(m) == Some(true)
            && (y_res >= tol) == misaligned;
        out.push(CheckReport {
            statement: Statement::Obstruction,
            instance: format!("#{k} n={n} g={m} {kind:?}"),
            residual: y_res,
            tolerance: tol,
            holds,
            expected: true,
            hypothesis_violation: rep.hypothesis_violation,
        });
    }
    Ok(out)
}
