//! How well node features line up with the graph: the trace misalignment
//! score, the principal angles between `span(ÃX)` and `span(X)`, the SVD
//! feature perturbation used to dial misalignment, and span/image tests.

use thiserror::Error;

use crate::graph::{diffusion, l1_normalize_columns, DiffusionMatrix, Graph};
use crate::linalg::{
    least_squares, orthonormal_basis, orthonormal_complement, thin_svd, DenseMatrix, LinalgError, DEFAULT_RANK_TOL,
};

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("misalignment is undefined for a featureless graph")]
    Featureless,
    #[error("overlap {overlap} is invalid for {n}x{g} features (need overlap <= g and n >= 2g - overlap)")]
    BadOverlap { overlap: usize, n: usize, g: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, AlignmentError>;

#[derive(Debug, Clone, PartialEq)]
pub struct MisalignmentReport {
    /// `tr(arccos(Ã X̃ X̃ᵀ))` with `X̃` the l1 column-normalized features
    pub d_algn: f64,
    /// sum of the principal angles between `span(ÃX)` and `span(X)`
    pub subspace_angle_sum: f64,
    /// set by callers that built the features with [`perturb_features`]
    pub overlap_dim: Option<usize>,
    /// diagonal entries that fell outside `[-1, 1]` before `arccos`
    pub clamped_entries: usize,
}

/// Scores a featured graph. Only the diagonal of `Ã X̃ X̃ᵀ` is formed.
pub fn misalignment(g: &Graph) -> Result<MisalignmentReport> {
    let x = g.features().ok_or(AlignmentError::Featureless)?;
    let diff = diffusion(g);
    let (d_algn, clamped_entries) = trace_arccos(&diff, x);
    Ok(MisalignmentReport {
        d_algn,
        subspace_angle_sum: principal_angles(&diff.matrix().spmm(x)?, x)?.iter().sum(),
        overlap_dim: None,
        clamped_entries,
    })
}

fn trace_arccos(diff: &DiffusionMatrix, x: &DenseMatrix) -> (f64, usize) {
    let xt = l1_normalize_columns(x);
    let a = diff.matrix();
    let mut total = 0.0;
    let mut clamped = 0;
    for i in 0..a.rows() {
        let (idx, vals) = a.row(i);
        let xi = xt.row(i);
        let mut v = 0.0;
        for (&k, &w) in idx.iter().zip(vals) {
            v += w * crate::linalg::dense_dot(xt.row(k), xi);
        }
        if !(-1.0..=1.0).contains(&v) {
            clamped += 1;
        }
        total += v.clamp(-1.0, 1.0).acos();
    }
    (total, clamped)
}

/// Principal angles (radians, nondecreasing) between the column spaces of
/// `a` and `b`. The count is the smaller of the two numerical ranks.
pub fn principal_angles(a: &DenseMatrix, b: &DenseMatrix) -> Result<Vec<f64>> {
    let qa = orthonormal_basis(a, DEFAULT_RANK_TOL)?;
    let qb = orthonormal_basis(b, DEFAULT_RANK_TOL)?;
    if qa.cols() == 0 || qb.cols() == 0 {
        return Ok(Vec::new());
    }
    let cosines = thin_svd(&qa.t_matmul(&qb)?)?.singular_values;
    Ok(cosines.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect())
}

/// Features sharing exactly `overlap` leading left singular directions with
/// `x`: `[u_1 … u_overlap, c_1 … c_(g−overlap)]` where the `c` are
/// orthonormal and orthogonal to `span(x)`. Columns are orthonormal.
pub fn perturb_features(x: &DenseMatrix, overlap: usize) -> Result<DenseMatrix> {
    let (n, g) = x.shape();
    if overlap > g || n + overlap < 2 * g {
        return Err(AlignmentError::BadOverlap { overlap, n, g });
    }
    let u = thin_svd(x)?.u;
    let kept = u.select_columns(&(0..overlap).collect::<Vec<_>>());
    if overlap == g {
        return Ok(kept);
    }
    Ok(kept.hstack(&orthonormal_complement(&u, g - overlap)?)?)
}

fn fits(a: &DenseMatrix, b: &DenseMatrix, tol: f64) -> Result<bool> {
    let ls = least_squares(a, b)?;
    Ok(ls.residual_norm <= tol * b.frobenius_norm())
}

/// Whether `span(u) = span(f)`: each projects onto the other with relative
/// residual at most `tol`.
pub fn span_equal(u: &DenseMatrix, f: &DenseMatrix, tol: f64) -> Result<bool> {
    if u.rows() != f.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "span_equal",
            left: u.shape(),
            right: f.shape(),
        }
        .into());
    }
    Ok(fits(u, f, tol)? && fits(f, u, tol)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageConditions {
    /// `image(ÃX) = image(X)`
    pub aligned: bool,
    /// `ÃX` has a column leaving `image(X)`
    pub obstruction: bool,
}

/// Tests whether features are recoverable through one diffusion step and
/// whether diffusion pushes them out of their own span. Both use residuals
/// relative to `‖ÃX‖_F`.
pub fn image_conditions(diff: &DiffusionMatrix, x: &DenseMatrix, tol: f64) -> Result<ImageConditions> {
    let ax = diff.matrix().spmm(x)?;
    let aligned = span_equal(&ax, x, tol)?;
    let ls = least_squares(x, &ax)?;
    let resid = x.matmul(&ls.solution)?.sub(&ax)?;
    let scale = ax.frobenius_norm();
    let obstruction = resid.column_norms().iter().any(|&c| c > tol * scale);
    Ok(ImageConditions { aligned, obstruction })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::linalg::{numeric_rank, symmetric_eigen};

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn trace_examples() {
        let g = Graph::from_edge_list(&[], 4, Some(DenseMatrix::identity(4))).unwrap();
        let r = misalignment(&g).unwrap();
        assert_eq!(r.d_algn, 0.0);
        assert_eq!(r.clamped_entries, 0);
        let k2 = Graph::from_edge_list(&[(0, 1)], 2, Some(DenseMatrix::identity(2))).unwrap();
        assert!((misalignment(&k2).unwrap().d_algn - 2.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn featureless_is_an_error() {
        let g = Graph::from_edge_list(&[(0, 1)], 2, None).unwrap();
        assert!(matches!(misalignment(&g), Err(AlignmentError::Featureless)));
    }

    #[test]
    fn column_permutation_invariance() {
        let pairs: Vec<_> = (0..12).map(|i| (i, (i + 3) % 12)).collect();
        let x = random(12, 4, 3);
        let g = Graph::from_edge_list(&pairs, 12, Some(x.clone())).unwrap();
        let h = g.clone().with_features(Some(x.select_columns(&[2, 0, 3, 1]))).unwrap();
        let (a, b) = (misalignment(&g).unwrap(), misalignment(&h).unwrap());
        assert!((a.d_algn - b.d_algn).abs() < 1e-12);
        assert!((a.subspace_angle_sum - b.subspace_angle_sum).abs() < 1e-9);
    }

    #[test]
    fn principal_angles_of_known_planes() {
        let e = DenseMatrix::identity(3);
        let a = e.select_columns(&[0, 1]);
        let t = 0.3f64;
        let b = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, t.cos()], [0.0, t.sin()]]);
        let ang = principal_angles(&a, &b).unwrap();
        assert!(ang[0].abs() < 1e-7 && (ang[1] - t).abs() < 1e-12, "{ang:?}");
    }

    #[test]
    fn perturbation_full_and_zero_overlap() {
        let x = random(40, 6, 1);
        let full = perturb_features(&x, 6).unwrap();
        assert!(least_squares(&full, &x).unwrap().residual_norm < 1e-8);
        let none = perturb_features(&x, 0).unwrap();
        assert!(x.t_matmul(&none).unwrap().frobenius_norm() < 1e-8);
    }

    #[test]
    fn perturbation_rank_and_orthonormality() {
        let x = random(40, 6, 2);
        for d in 0..=6 {
            let p = perturb_features(&x, d).unwrap();
            assert_eq!(p.shape(), (40, 6));
            let gram = p.t_matmul(&p).unwrap();
            assert!(gram.max_abs_diff(&DenseMatrix::identity(6)) < 1e-8);
            assert_eq!(numeric_rank(&x.hstack(&p).unwrap(), 1e-10).unwrap(), 12 - d);
        }
        assert!(matches!(
            perturb_features(&random(10, 6, 1), 1),
            Err(AlignmentError::BadOverlap { .. })
        ));
        assert!(perturb_features(&x, 7).is_err());
    }

    #[test]
    fn span_equal_cases() {
        let u = random(20, 4, 5);
        assert!(span_equal(&u, &u, 1e-8).unwrap());
        let r = random(4, 4, 6).add(&DenseMatrix::identity(4).scale(3.0)).unwrap();
        assert!(span_equal(&u, &u.matmul(&r).unwrap(), 1e-8).unwrap());
        let mut f = u.clone();
        let c = orthonormal_complement(&orthonormal_basis(&u, 1e-10).unwrap(), 1).unwrap();
        f.set_column(2, &c.column(0));
        assert!(!span_equal(&u, &f, 1e-8).unwrap());
        // l1 column scaling is a diagonal reparameterization
        assert!(span_equal(&u, &l1_normalize_columns(&u), 1e-8).unwrap());
    }

    #[test]
    fn image_condition_cases() {
        let empty = Graph::from_edge_list(&[], 5, None).unwrap();
        let c = image_conditions(&diffusion(&empty), &random(5, 2, 1), 1e-8).unwrap();
        assert!(c.aligned && !c.obstruction);

        let ring = Graph::from_edge_list(&[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)], 6, None).unwrap();
        let diff = diffusion(&ring);
        let eig = symmetric_eigen(&diff.to_dense()).unwrap();
        let nonzero: Vec<usize> = (0..6).filter(|&k| eig.values[k].abs() > 1e-8).collect();
        let x = eig.vectors.select_columns(&nonzero[..2]);
        let c = image_conditions(&diff, &x, 1e-8).unwrap();
        assert!(c.aligned && !c.obstruction);

        let path = Graph::from_edge_list(&[(0, 1), (1, 2)], 3, None).unwrap();
        let e0 = DenseMatrix::from_rows(&[[1.0], [0.0], [0.0]]);
        let c = image_conditions(&diffusion(&path), &e0, 1e-8).unwrap();
        assert!(c.obstruction && !c.aligned);
    }
}
