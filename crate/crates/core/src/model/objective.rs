use super::{forward, EncoderParams, FeatureInput, Result, Variant};
use crate::graph::DiffusionMatrix;
use crate::linalg::{dense_dot, DenseMatrix, LinalgError, SparseMatrix};

/// Gradients of the objective with respect to both weights, and the loss at
/// the point where they were taken.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w0: DenseMatrix,
    pub w1: DenseMatrix,
    pub loss: f64,
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64, e: f64) -> f64 {
    x.max(0.0) + e.ln_1p()
}

/// Loss of one ordered pair and its derivative in the logit.
#[inline]
fn pair_term(x: f64, positive: bool, pos_weight: f64) -> (f64, f64) {
    let e = (-x.abs()).exp();
    let sigma = if x >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
    if positive {
        (pos_weight * softplus(-x, e), pos_weight * (sigma - 1.0))
    } else {
        (softplus(x, e), sigma)
    }
}

fn pass(
    adjacency: &SparseMatrix,
    z: &DenseMatrix,
    lambda: f64,
    mut grad: Option<&mut DenseMatrix>,
) -> std::result::Result<f64, LinalgError> {
    let n = z.rows();
    if adjacency.rows() != n || adjacency.cols() != n {
        return Err(LinalgError::DimensionMismatch {
            op: "loss",
            left: (adjacency.rows(), adjacency.cols()),
            right: z.shape(),
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let pairs = (n * n) as f64;
    let nnz = adjacency.nnz() as f64;
    let pos_weight = if nnz > 0.0 { (pairs - nnz) / nnz } else { 0.0 };
    let scale = 1.0 / pairs;
    let d = z.cols();
    let mut total = 0.0;
    let mut dzi = vec![0.0; d];
    for i in 0..n {
        let (nbrs, _) = adjacency.row(i);
        let mut cursor = nbrs.partition_point(|&j| j < i);
        let zi = z.row(i);
        dzi.iter_mut().for_each(|v| *v = 0.0);
        for j in i..n {
            let positive = cursor < nbrs.len() && nbrs[cursor] == j;
            if positive {
                cursor += 1;
            }
            let zj = z.row(j);
            let (l, c) = pair_term(dense_dot(zi, zj), positive, pos_weight);
            if i == j {
                total += l;
                if grad.is_some() {
                    for (acc, &a) in dzi.iter_mut().zip(zi) {
                        *acc += 2.0 * c * a;
                    }
                }
            } else {
                total += 2.0 * l;
                if let Some(g) = grad.as_deref_mut() {
                    for (acc, &b) in dzi.iter_mut().zip(zj) {
                        *acc += 2.0 * c * b;
                    }
                    for (o, &a) in g.row_mut(j).iter_mut().zip(zi) {
                        *o += 2.0 * c * a;
                    }
                }
            }
        }
        if let Some(g) = grad.as_deref_mut() {
            for (o, &v) in g.row_mut(i).iter_mut().zip(&dzi) {
                *o += v;
            }
        }
    }
    let mut reg = 0.0;
    for i in 0..n {
        reg += dense_dot(z.row(i), z.row(i));
    }
    if let Some(g) = grad {
        for v in g.as_mut_slice() {
            *v *= scale;
        }
        let c = 2.0 * lambda / n as f64;
        for i in 0..n {
            for (o, &a) in g.row_mut(i).iter_mut().zip(z.row(i)) {
                *o += c * a;
            }
        }
    }
    Ok(total * scale + lambda * reg / n as f64)
}

/// Mean over all `n²` ordered pairs of the weighted sigmoid cross-entropy
/// between `σ(z_i·z_j)` and `a_ij`, plus `λ` times the mean squared row norm
/// of `Z`. Positives are weighted by `(n² − nnz) / nnz`.
pub fn loss(adjacency: &SparseMatrix, z: &DenseMatrix, lambda: f64) -> Result<f64> {
    Ok(pass(adjacency, z, lambda, None)?)
}

/// The loss together with its gradient in `Z`.
pub fn loss_and_embedding_grad(adjacency: &SparseMatrix, z: &DenseMatrix, lambda: f64) -> Result<(f64, DenseMatrix)> {
    let mut g = DenseMatrix::zeros(z.rows(), z.cols());
    let l = pass(adjacency, z, lambda, Some(&mut g))?;
    Ok((l, g))
}

/// Backpropagates the objective through the encoder.
pub fn gradients(
    adjacency: &SparseMatrix,
    diff: &DiffusionMatrix,
    x: &FeatureInput,
    params: &EncoderParams,
    lambda: f64,
) -> Result<Gradients> {
    let fw = forward(params, diff, x)?;
    let (l, gz) = loss_and_embedding_grad(adjacency, &fw.z, lambda)?;
    let a = diff.matrix();
    let gw1 = fw.last_in.t_matmul(&gz)?;
    let upstream = gz.matmul_t(&params.w1)?;
    // Ã is symmetric, so Ãᵀ products are plain spmm
    let d_pre = match params.variant {
        Variant::Linear => upstream,
        Variant::Relu => {
            let mut dh = a.spmm(&upstream)?;
            for (g, &p) in dh.as_mut_slice().iter_mut().zip(fw.pre.as_slice()) {
                if p <= 0.0 {
                    *g = 0.0;
                }
            }
            dh
        }
    };
    let gw0 = x.t_mul(&a.spmm(&d_pre)?)?;
    Ok(Gradients {
        w0: gw0,
        w1: gw1,
        loss: l,
    })
}
