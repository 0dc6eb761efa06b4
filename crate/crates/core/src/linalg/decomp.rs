//! Jacobi-based decompositions. Sizes in this crate stay small on the
//! factored side (at most a few hundred columns), where one-sided Jacobi is
//! accurate, deterministic and simple.

use super::dense::dot;
use super::{DenseMatrix, LinalgError, Result};

const MAX_SWEEPS: usize = 80;

/// `m ≈ u · diag(singular_values) · vᵀ`, singular values nonincreasing.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl ThinSvd {
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (x, s) in us.row_mut(i).iter_mut().zip(&self.singular_values) {
                *x *= s;
            }
        }
        us.matmul_t(&self.v).expect("svd factors conform")
    }

    /// Number of singular values above `rel_tol` times the largest.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values.iter().filter(|&&s| s > rel_tol * top).count()
    }
}

/// Thin SVD by one-sided (Hestenes) Jacobi rotations.
pub fn thin_svd(m: &DenseMatrix) -> Result<ThinSvd> {
    if m.is_empty() {
        return Err(LinalgError::Empty("thin_svd"));
    }
    if m.rows() >= m.cols() {
        one_sided_jacobi(m)
    } else {
        let t = one_sided_jacobi(&m.transpose())?;
        Ok(ThinSvd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        })
    }
}

fn one_sided_jacobi(a: &DenseMatrix) -> Result<ThinSvd> {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut sq: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    let tol = 4.0 * f64::EPSILON * (m as f64).sqrt();
    // columns below this norm are numerically zero; rotating them against
    // each other never settles under the relative test
    let floor = sq.iter().sum::<f64>().sqrt() * (m.max(n) as f64) * f64::EPSILON;
    let floor_sq = floor * floor;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (sq[p], sq[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if alpha.min(beta) <= floor_sq || gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
                sq[p] = dot(&cols[p], &cols[p]);
                sq[q] = dot(&cols[q], &cols[q]);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NonConvergence {
            op: "thin_svd",
            iterations: MAX_SWEEPS,
        });
    }

    let sigma: Vec<f64> = sq.iter().map(|s| s.sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));

    let mut u_cols: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    for &j in &order {
        let s = sigma[j];
        if s > 0.0 && s > floor {
            u_cols.push(Some(cols[j].iter().map(|x| x / s).collect()));
        } else {
            u_cols.push(None);
        }
    }
    let u_cols = complete_orthonormal(m, u_cols);

    let mut u = DenseMatrix::zeros(m, n);
    let mut vm = DenseMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        u.set_column(k, &u_cols[k]);
        vm.set_column(k, &v[j]);
    }
    Ok(ThinSvd {
        u,
        singular_values: order.iter().map(|&j| sigma[j]).collect(),
        v: vm,
    })
}

fn rotate(vecs: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    debug_assert!(p < q);
    let (left, right) = vecs.split_at_mut(q);
    for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills `None` slots with unit vectors orthogonal to every accepted vector,
/// trying coordinate directions in order.
fn complete_orthonormal(m: usize, slots: Vec<Option<Vec<f64>>>) -> Vec<Vec<f64>> {
    let mut accepted: Vec<Vec<f64>> = slots.iter().flatten().cloned().collect();
    let mut out = Vec::with_capacity(slots.len());
    let mut next_coord = 0usize;
    for slot in slots {
        if let Some(col) = slot {
            out.push(col);
            continue;
        }
        let need = 0.5 * (m - accepted.len()).max(1) as f64 / m as f64;
        let mut found = None;
        while next_coord < m {
            let mut w = vec![0.0; m];
            w[next_coord] = 1.0;
            next_coord += 1;
            for _ in 0..2 {
                for b in &accepted {
                    let proj = dot(b, &w);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= proj * bi;
                    }
                }
            }
            let nrm2 = dot(&w, &w);
            if nrm2 > need {
                let nrm = nrm2.sqrt();
                w.iter_mut().for_each(|x| *x /= nrm);
                found = Some(w);
                break;
            }
        }
        let w = found.expect("a coordinate direction outside the accepted span exists");
        accepted.push(w.clone());
        out.push(w);
    }
    out
}

/// Count of singular values strictly above `rel_tol` times the largest.
pub fn numeric_rank(m: &DenseMatrix, rel_tol: f64) -> Result<usize> {
    Ok(thin_svd(m)?.rank(rel_tol))
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn orthonormal_basis(m: &DenseMatrix, rel_tol: f64) -> Result<DenseMatrix> {
    let svd = thin_svd(m)?;
    let r = svd.rank(rel_tol);
    Ok(svd.u.select_columns(&(0..r).collect::<Vec<_>>()))
}

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: DenseMatrix,
    /// Frobenius norm of `a · solution − b`.
    pub residual_norm: f64,
    /// Numerical rank used by the pseudo-inverse.
    pub rank: usize,
}

impl LeastSquares {
    /// Largest absolute entry of `a · solution − b`.
    pub fn residual_max(&self, a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.matmul(&self.solution)
            .expect("shapes checked at solve time")
            .max_abs_diff(b)
    }
}

/// Minimum-norm solution of `min ‖a·w − b‖_F` through the SVD of `a`.
/// Singular values below `max(rows, cols) · ε · σ_max` are treated as zero.
pub fn least_squares(a: &DenseMatrix, b: &DenseMatrix) -> Result<LeastSquares> {
    if a.rows() != b.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "least_squares",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let svd = thin_svd(a)?;
    let top = svd.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = top * (a.rows().max(a.cols()) as f64) * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff && s > 0.0).count();

    // w = V_r Σ_r⁻¹ U_rᵀ b
    let mut utb = svd.u.t_matmul(b)?;
    for k in 0..utb.rows() {
        let inv = if k < rank { 1.0 / svd.singular_values[k] } else { 0.0 };
        utb.row_mut(k).iter_mut().for_each(|x| *x *= inv);
    }
    let solution = svd.v.matmul(&utb)?;
    let residual_norm = a.matmul(&solution)?.sub(b)?.frobenius_norm();
    Ok(LeastSquares {
        solution,
        residual_norm,
        rank,
    })
}

/// Eigendecomposition of a symmetric matrix; eigenvalues nonincreasing and
/// eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// Cyclic Jacobi eigenvalue iteration. Only the upper triangle is trusted to
/// be symmetric with the lower one; callers pass symmetric input.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<SymmetricEigen> {
    let n = a.rows();
    if n == 0 {
        return Err(LinalgError::Empty("symmetric_eigen"));
    }
    if a.cols() != n {
        return Err(LinalgError::DimensionMismatch {
            op: "symmetric_eigen",
            left: a.shape(),
            right: a.shape(),
        });
    }
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::NonConvergence {
            op: "symmetric_eigen",
            iterations: MAX_SWEEPS,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]).then(i.cmp(&j)));
    Ok(SymmetricEigen {
        values: order.iter().map(|&i| m[(i, i)]).collect(),
        vectors: v.select_columns(&order),
    })
}

/// `count` orthonormal columns spanning part of the orthogonal complement of
/// `span(q)`, taken as the trailing columns of the full Householder `Q` of
/// `q`. Requires `q` to have full column rank and `count ≤ rows − cols`.
pub fn orthonormal_complement(q: &DenseMatrix, count: usize) -> Result<DenseMatrix> {
    let (n, k) = q.shape();
    if count + k > n {
        return Err(LinalgError::DimensionMismatch {
            op: "orthonormal_complement",
            left: q.shape(),
            right: (n, count),
        });
    }
    let mut work: Vec<Vec<f64>> = (0..k).map(|j| q.column(j)).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let x = &work[j][j..];
        let norm = dot(x, x).sqrt();
        let mut v = x.to_vec();
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm = dot(&v, &v).sqrt();
        if vnorm > 0.0 {
            v.iter_mut().for_each(|x| *x /= vnorm);
        }
        for col in work.iter_mut().skip(j) {
            let tail = &mut col[j..];
            let proj = 2.0 * dot(&v, tail);
            for (t, vi) in tail.iter_mut().zip(&v) {
                *t -= proj * vi;
            }
        }
        reflectors.push(v);
    }
    let mut out = DenseMatrix::zeros(n, count);
    for (c, target) in (n - count..n).enumerate() {
        let mut e = vec![0.0; n];
        e[target] = 1.0;
        for (j, v) in reflectors.iter().enumerate().rev() {
            let tail = &mut e[j..];
            let proj = 2.0 * dot(v, tail);
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= proj * vi;
            }
        }
        out.set_column(c, &e);
    }
    Ok(out)
}
