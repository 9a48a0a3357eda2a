//! Tikhonov-regularized least squares, smoothing operators, and singular
//! value diagnostics.

use nalgebra::{DMatrix, DVector};

use crate::error::{DrtError, Result};

/// A difference operator used as the regularization seminorm weight.
///
/// Order 0 is the identity; orders 1 and 2 are the unscaled first and
/// second difference matrices with (n - order) rows. No grid-spacing
/// factor is applied; the regularization parameter absorbs scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingOperator {
    pub order: usize,
    pub matrix: DMatrix<f64>,
}

/// Builds the smoothing operator of the given order for n unknowns.
pub fn make_smoothing(order: usize, n: usize) -> Result<SmoothingOperator> {
    if order > 2 {
        return Err(DrtError::Config(format!(
            "smoothing order must be 0, 1, or 2, got {order}"
        )));
    }
    if n <= order {
        return Err(DrtError::Dimension(format!(
            "need more than {order} unknowns for order-{order} smoothing, got {n}"
        )));
    }
    let rows = n - order;
    let mut l = DMatrix::zeros(rows, n);
    match order {
        0 => l.fill_diagonal(1.0),
        1 => {
            for i in 0..rows {
                l[(i, i)] = -1.0;
                l[(i, i + 1)] = 1.0;
            }
        }
        2 => {
            for i in 0..rows {
                l[(i, i)] = 1.0;
                l[(i, i + 1)] = -2.0;
                l[(i, i + 2)] = 1.0;
            }
        }
        _ => unreachable!(),
    }
    Ok(SmoothingOperator { order, matrix: l })
}

/// Stacks [A; lambda L] over [b; 0] for the regularized normal problem.
pub(crate) fn stacked_system(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    lambda: f64,
    l: &SmoothingOperator,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(DrtError::Dimension(format!(
            "matrix has {m} rows but right-hand side has {} entries",
            b.len()
        )));
    }
    if l.matrix.ncols() != n {
        return Err(DrtError::Dimension(format!(
            "smoothing operator has {} columns for {n} unknowns",
            l.matrix.ncols()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(DrtError::Domain(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok((a.clone(), b.clone()));
    }
    let rows_l = l.matrix.nrows();
    let mut big = DMatrix::zeros(m + rows_l, n);
    big.view_mut((0, 0), (m, n)).copy_from(a);
    big.view_mut((m, 0), (rows_l, n)).copy_from(&(lambda * &l.matrix));
    let mut rhs = DVector::zeros(m + rows_l);
    rhs.rows_mut(0, m).copy_from(b);
    Ok((big, rhs))
}

/// Least-squares solution of an overdetermined or square system through a
/// QR factorization. Fails only when a diagonal entry of R collapses to
/// zero at machine level; extreme but finite ill-conditioning is allowed
/// through so callers can diagnose the amplification.
pub(crate) fn qr_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    if a.nrows() < n {
        return Err(DrtError::Dimension(format!(
            "least squares needs at least as many rows as columns, got {}x{n}",
            a.nrows()
        )));
    }
    let qr = a.clone().qr();
    let mut y = b.clone();
    qr.q_tr_mul(&mut y);
    let r = qr.r();
    for i in 0..n {
        if r[(i, i)].abs() <= f64::MIN_POSITIVE * n as f64 {
            return Err(DrtError::Singular(format!(
                "zero pivot at column {i} of the triangular factor"
            )));
        }
    }
    let head = DVector::from_iterator(n, y.iter().take(n).cloned());
    r.view((0, 0), (n, n))
        .solve_upper_triangular(&head)
        .ok_or_else(|| DrtError::Singular("triangular back substitution failed".into()))
}

/// Minimizer of ||Ax - b||^2 + lambda^2 ||Lx||^2, computed by orthogonal
/// factorization of the stacked system [A; lambda L] x = [b; 0].
pub fn tikhonov_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    lambda: f64,
    l: &SmoothingOperator,
) -> Result<DVector<f64>> {
    let (big, rhs) = stacked_system(a, b, lambda, l)?;
    qr_lstsq(&big, &rhs)
}

/// Thin singular value decomposition with columns ordered by
/// non-increasing singular value.
#[derive(Debug, Clone)]
pub struct SvdData {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// Computes the thin SVD of a dense matrix.
pub fn thin_svd(a: &DMatrix<f64>) -> Result<SvdData> {
    let svd = a.clone().svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| DrtError::Invariant("svd did not return U".into()))?;
    let vt = svd
        .v_t
        .ok_or_else(|| DrtError::Invariant("svd did not return V^T".into()))?;
    let sigma = svd.singular_values;

    // Order defensively; downstream code indexes by decay position.
    let mut idx: Vec<usize> = (0..sigma.len()).collect();
    idx.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let k = sigma.len();
    let mut u_s = DMatrix::zeros(u.nrows(), k);
    let mut v_s = DMatrix::zeros(vt.ncols(), k);
    let mut sig = DVector::zeros(k);
    for (col, &i) in idx.iter().enumerate() {
        u_s.set_column(col, &u.column(i));
        v_s.set_column(col, &vt.row(i).transpose());
        sig[col] = sigma[i];
    }
    Ok(SvdData {
        u: u_s,
        sigma: sig,
        v: v_s,
    })
}

/// One row of the Picard diagnostic: a singular value, the magnitude of
/// the corresponding data coefficient, and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardPoint {
    pub sigma: f64,
    pub coefficient: f64,
    pub ratio: f64,
}

/// Singular values sigma_i against data coefficients |u_i^T b| and the
/// solution coefficients |u_i^T b| / sigma_i, in singular-value order.
///
/// A solvable problem keeps the ratios bounded while the coefficients
/// track the singular values; sustained ratio growth marks the index
/// where noise takes over.
pub fn picard_data(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Vec<PicardPoint>> {
    if b.len() != a.nrows() {
        return Err(DrtError::Dimension(format!(
            "matrix has {} rows but right-hand side has {}",
            a.nrows(),
            b.len()
        )));
    }
    let svd = thin_svd(a)?;
    Ok((0..svd.sigma.len())
        .map(|i| {
            let coef = svd.u.column(i).dot(b).abs();
            PicardPoint {
                sigma: svd.sigma[i],
                coefficient: coef,
                ratio: coef / svd.sigma[i],
            }
        })
        .collect())
}

/// Closed-form Tikhonov solution for L = I from a precomputed SVD:
/// x = sum_i sigma_i/(sigma_i^2 + lambda^2) (u_i^T b) v_i.
pub fn filter_factor_solution(svd: &SvdData, b: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let mut x = DVector::zeros(svd.v.nrows());
    for i in 0..svd.sigma.len() {
        let s = svd.sigma[i];
        let coef = s / (s * s + lambda * lambda) * svd.u.column(i).dot(b);
        x.axpy(coef, &svd.v.column(i).clone_owned(), 1.0);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::SmallRng;
    use rand::{RngExt, SeedableRng};

    fn random_matrix(rng: &mut SmallRng, m: usize, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn smoothing_shapes() {
        let l0 = make_smoothing(0, 3).unwrap();
        assert_eq!(l0.matrix, DMatrix::identity(3, 3));

        let l1 = make_smoothing(1, 3).unwrap();
        let expect = DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        assert_eq!(l1.matrix, expect);

        let l2 = make_smoothing(2, 6).unwrap();
        let affine = DVector::from_fn(6, |i, _| 2.0 + 0.5 * i as f64);
        assert!((&l2.matrix * &affine).amax() < 1e-12);

        for order in [1, 2] {
            let l = make_smoothing(order, 9).unwrap();
            let ones = DVector::from_element(9, 1.0);
            assert!((&l.matrix * &ones).amax() < 1e-14);
        }

        assert!(make_smoothing(3, 10).is_err());
        assert!(make_smoothing(2, 2).is_err());
    }

    #[test]
    fn identity_shrinkage() {
        let a = DMatrix::identity(3, 3);
        let l = make_smoothing(0, 3).unwrap();
        let b = DVector::from_row_slice(&[1.0, 2.0, 3.0]);
        let x = tikhonov_solve(&a, &b, 1.0, &l).unwrap();
        assert_relative_eq!(x, b / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn unregularized_square_solve() {
        let mut rng = SmallRng::seed_from_u64(21);
        let a = random_matrix(&mut rng, 4, 4) + 4.0 * DMatrix::identity(4, 4);
        let b = DVector::from_fn(4, |i, _| (i as f64).sin());
        let l = make_smoothing(0, 4).unwrap();
        let x = tikhonov_solve(&a, &b, 0.0, &l).unwrap();
        assert!((&a * &x - &b).norm() < 1e-12);
    }

    #[test]
    fn large_lambda_shrinks_solution() {
        let mut rng = SmallRng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 8, 5);
        let b = DVector::from_fn(8, |i, _| (i as f64 + 0.3).cos());
        let l = make_smoothing(0, 5).unwrap();
        let lambda = 1e6;
        let x = tikhonov_solve(&a, &b, lambda, &l).unwrap();
        let bound = (a.transpose() * &b).norm() / (lambda * lambda);
        assert!(x.norm() <= bound * (1.0 + 1e-6), "{} > {bound}", x.norm());
    }

    #[test]
    fn stationarity_identity() {
        let mut rng = SmallRng::seed_from_u64(13);
        for order in [0usize, 1, 2] {
            let a = random_matrix(&mut rng, 12, 7);
            let b = DVector::from_fn(12, |i, _| rng.random_range(-1.0..1.0) + i as f64 * 0.01);
            let l = make_smoothing(order, 7).unwrap();
            let lambda = 0.3;
            let x = tikhonov_solve(&a, &b, lambda, &l).unwrap();
            let grad = a.transpose() * (&a * &x - &b)
                + lambda * lambda * l.matrix.transpose() * (&l.matrix * &x);
            assert!(
                grad.norm() < 1e-8 * a.norm() * b.norm(),
                "order {order}: gradient norm {}",
                grad.norm()
            );
        }
    }

    #[test]
    fn matches_filter_factors_for_identity_operator() {
        let mut rng = SmallRng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 10, 6);
        let b = DVector::from_fn(10, |i, _| (0.7 * i as f64).sin());
        let l = make_smoothing(0, 6).unwrap();
        let svd = thin_svd(&a).unwrap();
        for lambda in [1e-3, 0.1, 1.0, 30.0] {
            let direct = tikhonov_solve(&a, &b, lambda, &l).unwrap();
            let via_svd = filter_factor_solution(&svd, &b, lambda);
            assert_relative_eq!(direct, via_svd, max_relative = 1e-8);
        }
    }

    #[test]
    fn singular_unregularized_system_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let b = DVector::from_row_slice(&[1.0, 1.0]);
        let l = make_smoothing(0, 2).unwrap();
        match tikhonov_solve(&a, &b, 0.0, &l) {
            Err(DrtError::Singular(_)) => {}
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn svd_ordered_orthonormal_and_reconstructs() {
        let mut rng = SmallRng::seed_from_u64(17);
        let a = random_matrix(&mut rng, 9, 6);
        let svd = thin_svd(&a).unwrap();
        for i in 1..svd.sigma.len() {
            assert!(svd.sigma[i - 1] >= svd.sigma[i]);
        }
        let gram_u = svd.u.transpose() * &svd.u - DMatrix::identity(6, 6);
        let gram_v = svd.v.transpose() * &svd.v - DMatrix::identity(6, 6);
        assert!(gram_u.amax() < 1e-10);
        assert!(gram_v.amax() < 1e-10);
        let rebuilt = &svd.u * DMatrix::from_diagonal(&svd.sigma) * svd.v.transpose();
        assert!((rebuilt - &a).amax() < 1e-10 * svd.sigma[0]);
    }

    #[test]
    fn picard_isolates_single_direction() {
        let mut rng = SmallRng::seed_from_u64(40);
        let a = random_matrix(&mut rng, 8, 8);
        let svd = thin_svd(&a).unwrap();
        let b = 2.5 * svd.u.column(0).clone_owned();
        let triples = picard_data(&a, &b).unwrap();
        assert_eq!(triples.len(), 8);
        assert_relative_eq!(triples[0].coefficient, 2.5, max_relative = 1e-12);
        for p in &triples[1..] {
            assert!(p.coefficient < 1e-12);
        }
    }
}
