//! Runtime-selectable solver strategies for the regularized problem.
//!
//! Both strategies minimize ||Ax - b||^2 + lambda^2 ||Lx||^2; they differ
//! in the feasible set (unconstrained vs. x >= 0). Callers pick one by
//! name so configuration files and command lines can switch between them.

use nalgebra::{DMatrix, DVector};

use crate::error::{DrtError, Result};
use crate::nnls::tikhonov_nnls;
use crate::tikhonov::{tikhonov_solve, SmoothingOperator};

pub trait RegularizedSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(
        &self,
        a: &DMatrix<f64>,
        b: &DVector<f64>,
        lambda: f64,
        l: &SmoothingOperator,
    ) -> Result<DVector<f64>>;
}

/// Unconstrained linear least squares.
#[derive(Debug, Default, Clone, Copy)]
pub struct LlsSolver;

impl RegularizedSolver for LlsSolver {
    fn name(&self) -> &'static str {
        "lls"
    }

    fn solve(
        &self,
        a: &DMatrix<f64>,
        b: &DVector<f64>,
        lambda: f64,
        l: &SmoothingOperator,
    ) -> Result<DVector<f64>> {
        tikhonov_solve(a, b, lambda, l)
    }
}

/// Non-negative least squares.
#[derive(Debug, Default, Clone, Copy)]
pub struct NnlsSolver;

impl RegularizedSolver for NnlsSolver {
    fn name(&self) -> &'static str {
        "nnls"
    }

    fn solve(
        &self,
        a: &DMatrix<f64>,
        b: &DVector<f64>,
        lambda: f64,
        l: &SmoothingOperator,
    ) -> Result<DVector<f64>> {
        Ok(tikhonov_nnls(a, b, lambda, l)?.x)
    }
}

pub const SOLVER_NAMES: [&str; 2] = ["lls", "nnls"];

/// Looks up a solver strategy by its registered name.
pub fn solver_by_name(name: &str) -> Result<Box<dyn RegularizedSolver>> {
    match name {
        "lls" => Ok(Box::new(LlsSolver)),
        "nnls" => Ok(Box::new(NnlsSolver)),
        other => Err(DrtError::Config(format!(
            "unknown solver '{other}', expected one of {SOLVER_NAMES:?}"
        ))),
    }
}
