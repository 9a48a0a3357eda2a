//! Non-negative least squares by the active-set method of Lawson and
//! Hanson, plus its Tikhonov-regularized form on the stacked system.

use nalgebra::{DMatrix, DVector};

use crate::error::{DrtError, Result};
use crate::tikhonov::{qr_lstsq, stacked_system, SmoothingOperator};

/// Result of a non-negative least-squares solve.
#[derive(Debug, Clone)]
pub struct NnlsSolution {
    /// The minimizer, entrywise >= 0.
    pub x: DVector<f64>,
    /// Indices held at zero when the iteration stopped.
    pub active_set: Vec<usize>,
    /// Outer iterations used.
    pub iterations: usize,
    /// Worst violation of the stationarity conditions at the returned
    /// point: gradient entries must vanish on the support and be
    /// non-negative off it.
    pub kkt_residual: f64,
}

impl NnlsSolution {
    /// Indices with strictly positive entries.
    pub fn support(&self) -> Vec<usize> {
        (0..self.x.len()).filter(|&i| self.x[i] > 0.0).collect()
    }
}

fn kkt_residual(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let g = a.transpose() * (a * x - b);
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        let v = if x[i] == 0.0 { (-g[i]).max(0.0) } else { g[i].abs() };
        worst = worst.max(v);
    }
    worst
}

fn solution_from(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: DVector<f64>,
    iterations: usize,
) -> NnlsSolution {
    let kkt = kkt_residual(a, b, &x);
    let active_set = (0..x.len()).filter(|&i| x[i] == 0.0).collect();
    NnlsSolution {
        x,
        active_set,
        iterations,
        kkt_residual: kkt,
    }
}

/// Minimizes ||Ax - b|| subject to x >= 0.
///
/// Classic active-set iteration: move the most promising zero entry to
/// the passive set, re-solve the unconstrained problem on the passive
/// columns by a fresh QR factorization, and backtrack along the segment
/// to the old point whenever the candidate leaves the feasible cone.
/// An index dropped while backtracking is barred from re-entering until
/// the solution actually moves, which breaks the stall where a column
/// re-enters at step length zero indefinitely.
///
/// `tol` defaults to 1e-10 * max|A^T b|; `max_iter` to 10 * ncols.
pub fn nnls_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
) -> Result<NnlsSolution> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(DrtError::Dimension(format!(
            "matrix has {m} rows but right-hand side has {} entries",
            b.len()
        )));
    }
    if n == 0 {
        return Err(DrtError::Dimension("matrix has no columns".into()));
    }
    let atb = a.transpose() * b;
    let scale = atb.amax();
    let tol = tol.unwrap_or(1e-10 * scale);
    if !(tol >= 0.0) {
        return Err(DrtError::Config(format!("tolerance must be >= 0, got {tol}")));
    }
    let max_iter = max_iter.unwrap_or(10 * n);

    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let mut banned = vec![false; n];
    let mut iterations = 0usize;

    loop {
        let w = &atb - a.transpose() * (a * &x);
        let mut entering: Option<usize> = None;
        for i in 0..n {
            if passive[i] || banned[i] || w[i] <= tol {
                continue;
            }
            match entering {
                Some(t) if w[i] <= w[t] => {}
                _ => entering = Some(i),
            }
        }
        let Some(t) = entering else {
            return Ok(solution_from(a, b, x, iterations));
        };
        if iterations >= max_iter {
            let snapshot = solution_from(a, b, x, iterations);
            return Err(DrtError::IterationLimit {
                max_iter,
                kkt_residual: snapshot.kkt_residual,
                best: snapshot.x.iter().cloned().collect(),
            });
        }
        iterations += 1;
        passive[t] = true;
        let x_before = x.clone();

        loop {
            let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let sub = a.select_columns(cols.iter());
            let z_p = qr_lstsq(&sub, b)?;

            if z_p.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &i) in cols.iter().enumerate() {
                    x[i] = z_p[k];
                }
                break;
            }

            // Longest feasible step from x toward z along the passive
            // coordinates; every coordinate whose bound sets the step
            // lands exactly on zero and leaves the passive set.
            let ratios: Vec<f64> = cols
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    if z_p[k] > 0.0 {
                        f64::INFINITY
                    } else if x[i] - z_p[k] > 0.0 {
                        x[i] / (x[i] - z_p[k])
                    } else {
                        0.0
                    }
                })
                .collect();
            let alpha = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            for (k, &i) in cols.iter().enumerate() {
                x[i] += alpha * (z_p[k] - x[i]);
                if ratios[k] <= alpha * (1.0 + 1e-12) || x[i] <= 0.0 {
                    x[i] = 0.0;
                    passive[i] = false;
                    banned[i] = true;
                }
            }
        }

        if x != x_before {
            banned.fill(false);
        }
    }
}

/// Minimizes ||Ax - b||^2 + lambda^2 ||Lx||^2 subject to x >= 0 by
/// running the active-set iteration on the stacked system
/// [A; lambda L] x = [b; 0].
pub fn tikhonov_nnls(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    lambda: f64,
    l: &SmoothingOperator,
) -> Result<NnlsSolution> {
    let (big, rhs) = stacked_system(a, b, lambda, l)?;
    nnls_solve(&big, &rhs, None, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tikhonov::make_smoothing;
    use rand::rngs::SmallRng;
    use rand::{RngExt, SeedableRng};

    fn random_problem(rng: &mut SmallRng, m: usize, n: usize) -> (DMatrix<f64>, DVector<f64>) {
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        (a, b)
    }

    /// Reference answer by trying every support pattern.
    fn exhaustive_nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
        let n = a.ncols();
        let mut best_x = DVector::zeros(n);
        let mut best_obj = b.norm();
        for mask in 1u32..(1 << n) {
            let cols: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let sub = a.select_columns(cols.iter());
            let Ok(z) = qr_lstsq(&sub, b) else { continue };
            if z.iter().any(|&v| v < 0.0) {
                continue;
            }
            let mut x = DVector::zeros(n);
            for (k, &i) in cols.iter().enumerate() {
                x[i] = z[k];
            }
            let obj = (a * &x - b).norm();
            if obj < best_obj {
                best_obj = obj;
                best_x = x;
            }
        }
        (best_x, best_obj)
    }

    #[test]
    fn matches_exhaustive_search_on_small_problems() {
        let mut rng = SmallRng::seed_from_u64(7);
        for trial in 0..30 {
            let n = 4 + trial % 4;
            let (a, b) = random_problem(&mut rng, 10, n);
            let sol = nnls_solve(&a, &b, None, None).unwrap();
            let (_, best_obj) = exhaustive_nnls(&a, &b);
            let obj = (&a * &sol.x - &b).norm();
            assert!(sol.x.iter().all(|&v| v >= 0.0), "trial {trial}: negative entry");
            assert!(
                obj <= best_obj + 1e-9,
                "trial {trial}: got {obj}, exhaustive found {best_obj}"
            );
            assert!(sol.kkt_residual <= 1e-9, "trial {trial}: kkt {}", sol.kkt_residual);
        }
    }

    #[test]
    fn interior_optimum_matches_plain_least_squares() {
        let mut rng = SmallRng::seed_from_u64(31);
        let a = DMatrix::from_fn(12, 5, |_, _| rng.random_range(-1.0..1.0));
        let x_true = DVector::from_fn(5, |i, _| 1.0 + i as f64);
        let b = &a * &x_true;
        let sol = nnls_solve(&a, &b, None, None).unwrap();
        assert!((sol.x - x_true).amax() < 1e-9);
        assert!(sol.active_set.is_empty());
    }

    #[test]
    fn antiparallel_data_gives_zero() {
        let a = DMatrix::from_fn(6, 3, |i, j| ((i + j) as f64 * 0.37).sin().abs() + 0.1);
        let b = DVector::from_element(6, -1.0);
        let sol = nnls_solve(&a, &b, None, None).unwrap();
        assert_eq!(sol.x, DVector::zeros(3));
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.active_set, vec![0, 1, 2]);
    }

    #[test]
    fn kkt_certificate_on_larger_problem() {
        let mut rng = SmallRng::seed_from_u64(99);
        let (a, b) = random_problem(&mut rng, 40, 20);
        let sol = nnls_solve(&a, &b, None, None).unwrap();
        let g = a.transpose() * (&a * &sol.x - &b);
        let tol = 1e-10 * (a.transpose() * &b).amax();
        for i in 0..20 {
            if sol.x[i] == 0.0 {
                assert!(g[i] >= -tol, "active entry {i} has descent direction {}", g[i]);
            } else {
                assert!(g[i].abs() <= tol, "support entry {i} has gradient {}", g[i]);
            }
        }
    }

    #[test]
    fn duplicate_columns_terminate() {
        let col = DVector::from_row_slice(&[1.0, 2.0, 0.5, -0.3]);
        let mut a = DMatrix::zeros(4, 3);
        a.set_column(0, &col);
        a.set_column(1, &col);
        a.set_column(2, &DVector::from_row_slice(&[0.2, -1.0, 0.4, 1.1]));
        let b = 3.0 * &col;
        let sol = nnls_solve(&a, &b, None, None).unwrap();
        assert!((&a * &sol.x - &b).norm() < 1e-10);
        assert_eq!(sol.support(), vec![0]);
    }

    #[test]
    fn iteration_limit_surfaces_partial_answer() {
        let mut rng = SmallRng::seed_from_u64(3);
        let (a, b) = random_problem(&mut rng, 10, 6);
        match nnls_solve(&a, &b, None, Some(1)) {
            Err(DrtError::IterationLimit { max_iter, best, .. }) => {
                assert_eq!(max_iter, 1);
                assert_eq!(best.len(), 6);
            }
            Ok(sol) => assert!(sol.iterations <= 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn regularized_tradeoff_is_monotone_in_lambda() {
        let mut rng = SmallRng::seed_from_u64(55);
        let (a, b) = random_problem(&mut rng, 30, 12);
        let l = make_smoothing(1, 12).unwrap();
        let mut prev_resid = -1.0;
        let mut prev_semi = f64::INFINITY;
        for &lambda in &[1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let sol = tikhonov_nnls(&a, &b, lambda, &l).unwrap();
            let resid = (&a * &sol.x - &b).norm();
            let semi = (&l.matrix * &sol.x).norm();
            assert!(resid >= prev_resid - 1e-10, "residual fell at lambda {lambda}");
            assert!(semi <= prev_semi + 1e-10, "seminorm rose at lambda {lambda}");
            prev_resid = resid;
            prev_semi = semi;
        }
    }

    #[test]
    fn regularized_kkt_uses_stacked_gradient() {
        let mut rng = SmallRng::seed_from_u64(77);
        let (a, b) = random_problem(&mut rng, 24, 10);
        let l = make_smoothing(0, 10).unwrap();
        let lambda = 0.5;
        let sol = tikhonov_nnls(&a, &b, lambda, &l).unwrap();
        let g = a.transpose() * (&a * &sol.x - &b)
            + lambda * lambda * l.matrix.transpose() * (&l.matrix * &sol.x);
        let tol = 1e-9 * (a.transpose() * &b).amax();
        for i in 0..10 {
            if sol.x[i] == 0.0 {
                assert!(g[i] >= -tol);
            } else {
                assert!(g[i].abs() <= tol);
            }
        }
    }
}
