//! Solves one noisy realization, choosing the regularization parameter
//! as configured, and writes the solution plus a JSON report.

use anyhow::Result;
use drt_core::select::{choose_lambda_ncp, lcurve_corner, ncp, InverseProblem, LCurvePoint};
use drt_core::solver::solver_by_name;
use drt_core::tikhonov::make_smoothing;
use drt_core::DrtError;
use nalgebra::DVector;
use serde::Serialize;

use crate::config::{RunConfig, Selection};
use crate::export::{sci, write_csv, write_json};

use super::{assemble_problem, ensure_out_dir, Assembled};

#[derive(Debug, Serialize)]
pub struct InvertReport {
    pub dataset: String,
    pub model: String,
    pub matrix: String,
    pub rule: String,
    pub l_order: usize,
    pub solver: String,
    pub selection: String,
    pub seed: u64,
    pub noise: f64,
    pub p_level: f64,
    pub lambda: f64,
    pub resid_norm: f64,
    pub seminorm: f64,
    pub solution_norm: f64,
    pub ks_stat: f64,
    pub passes_whiteness: bool,
    pub s_error: f64,
    /// |x| / |b|; a crude gauge of noise blow-up in the solution.
    pub amplification_ratio: f64,
    /// Set when the ratio exceeds 1e3, as an unregularized solve on an
    /// ill-conditioned system will.
    pub amplification_flagged: bool,
    /// For NCP selection: no grid value passed and the KS minimizer was
    /// used instead. Null for other selections.
    pub ncp_no_pass: Option<bool>,
    /// Grid values skipped because the solver failed there.
    pub skipped_lambdas: Vec<f64>,
}

struct Solved {
    lambda: f64,
    x: DVector<f64>,
    ncp_no_pass: Option<bool>,
    skipped: Vec<f64>,
}

fn select_and_solve(
    cfg: &RunConfig,
    asm: &Assembled,
    data: &DVector<f64>,
) -> drt_core::Result<Solved> {
    let smoothing = make_smoothing(cfg.l_order, asm.km.matrix.ncols())?;
    let solver = solver_by_name(&cfg.solver)?;
    let problem = InverseProblem {
        matrix: &asm.km.matrix,
        data,
        smoothing: &smoothing,
    };
    let (lambda, ncp_no_pass, skipped) = match cfg.select {
        Selection::Fixed(lambda) => (lambda, None, Vec::new()),
        Selection::Ncp => {
            let choice = choose_lambda_ncp(&problem, &cfg.lambda_grid()?, cfg.p_level, solver.as_ref())?;
            (
                choice.lambda,
                Some(choice.no_pass),
                choice.skipped.into_iter().map(|(l, _)| l).collect(),
            )
        }
        Selection::LCurve => {
            let mut points = Vec::new();
            let mut skipped = Vec::new();
            for &lambda in cfg.lambda_grid()?.values() {
                match solver.solve(&asm.km.matrix, data, lambda, &smoothing) {
                    Ok(x) => points.push(LCurvePoint {
                        lambda,
                        residual_norm: (&asm.km.matrix * &x - data).norm(),
                        seminorm: (&smoothing.matrix * &x).norm(),
                    }),
                    Err(e) => {
                        if matches!(e, DrtError::Dimension(_) | DrtError::Config(_)) {
                            return Err(e);
                        }
                        skipped.push(lambda);
                    }
                }
            }
            (lcurve_corner(&points)?, None, skipped)
        }
    };
    let x = solver.solve(&asm.km.matrix, data, lambda, &smoothing)?;
    Ok(Solved {
        lambda,
        x,
        ncp_no_pass,
        skipped,
    })
}

pub fn run(cfg: &RunConfig) -> Result<i32> {
    ensure_out_dir(cfg)?;
    let asm = assemble_problem(cfg)?;
    let seed = cfg.seeds[0];
    let data = asm.noisy_data(cfg, seed)?;

    let solved = match select_and_solve(cfg, &asm, &data) {
        Ok(s) => s,
        Err(e) => {
            let diag = serde_json::json!({
                "error": e.to_string(),
                "stage": "invert",
                "dataset": cfg.dataset.to_string(),
                "model": cfg.model.to_string(),
                "matrix": cfg.matrix.name(),
                "solver": cfg.solver,
                "seed": seed,
            });
            println!("{}", serde_json::to_string_pretty(&diag)?);
            eprintln!("error: {e}");
            return Ok(1);
        }
    };

    let smoothing = make_smoothing(cfg.l_order, asm.km.matrix.ncols())?;
    let residual = &asm.km.matrix * &solved.x - &data;
    let curve = ncp(&residual)?;
    let delta_s = asm.km.sgrid.delta_s();
    let ratio = solved.x.norm() / data.norm();
    let report = InvertReport {
        dataset: cfg.dataset.to_string(),
        model: cfg.model.to_string(),
        matrix: cfg.matrix.name().into(),
        rule: asm.km.rule.to_string(),
        l_order: cfg.l_order,
        solver: cfg.solver.clone(),
        selection: cfg.select.label().into(),
        seed,
        noise: cfg.noise,
        p_level: cfg.p_level,
        lambda: solved.lambda,
        resid_norm: residual.norm(),
        seminorm: (&smoothing.matrix * &solved.x).norm(),
        solution_norm: solved.x.norm(),
        ks_stat: curve.ks_statistic,
        passes_whiteness: curve.passes(cfg.p_level),
        s_error: delta_s * (&solved.x - &asm.truth).abs().sum(),
        amplification_ratio: ratio,
        amplification_flagged: ratio > 1e3,
        ncp_no_pass: solved.ncp_no_pass,
        skipped_lambdas: solved.skipped,
    };

    let stem = format!("{}-seed{seed}", cfg.stem());
    let rows: Vec<Vec<String>> = asm
        .km
        .sgrid
        .s()
        .iter()
        .zip(solved.x.iter())
        .map(|(&s, &x)| vec![sci(s), sci(x)])
        .collect();
    write_csv(&cfg.out_dir.join(format!("{stem}-solution.csv")), &["s", "x"], rows)?;
    write_json(&cfg.out_dir.join(format!("{stem}-report.json")), &report)?;

    println!(
        "lambda {} resid {} error-vs-truth {}{}",
        sci(report.lambda),
        sci(report.resid_norm),
        sci(report.s_error),
        if report.amplification_flagged {
            " (amplification flagged)"
        } else {
            ""
        }
    );
    Ok(0)
}
