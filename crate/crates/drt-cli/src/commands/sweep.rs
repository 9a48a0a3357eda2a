//! Runs every seed against every grid value, in parallel over seeds,
//! and writes the records table, the per-lambda mean-error panel, and a
//! JSON summary with the selected-parameter markers.

use anyhow::{Context, Result};
use drt_core::select::{summarize_sweep, sweep_realization, InverseProblem, SweepRecord};
use drt_core::solver::solver_by_name;
use drt_core::tikhonov::make_smoothing;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::export::{sci, write_csv, write_json};

use super::{assemble_problem, ensure_out_dir};

#[derive(Debug, Serialize)]
struct Markers {
    /// Grid value minimizing the mean error over realizations.
    lambda_opt_min: f64,
    /// Geometric mean of the per-realization whiteness selections.
    lambda_ncp_geo: f64,
    /// Geometric mean of the per-realization corner selections.
    lambda_lc_geo: f64,
}

#[derive(Debug, Serialize)]
struct ChoiceReport {
    realization: usize,
    lambda_opt: Option<f64>,
    lambda_ncp: Option<f64>,
    ncp_no_pass: bool,
    lambda_lc: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    dataset: String,
    model: String,
    matrix: String,
    rule: String,
    l_order: usize,
    solver: String,
    noise: f64,
    p_level: f64,
    seeds: Vec<u64>,
    lambdas: Vec<f64>,
    mean_error_by_lambda: Vec<f64>,
    markers: Markers,
    choices: Vec<ChoiceReport>,
    cells_total: usize,
    cells_failed: usize,
}

pub fn run(cfg: &RunConfig) -> Result<i32> {
    ensure_out_dir(cfg)?;
    let asm = assemble_problem(cfg)?;
    let grid = cfg.lambda_grid()?;
    let smoothing = make_smoothing(cfg.l_order, asm.km.matrix.ncols())?;
    let solver = solver_by_name(&cfg.solver)?;
    let problem = InverseProblem {
        matrix: &asm.km.matrix,
        data: &asm.data,
        smoothing: &smoothing,
    };
    let delta_s = asm.km.sgrid.delta_s();

    let noises = cfg
        .seeds
        .iter()
        .map(|&seed| Ok((seed, asm.noise_only(cfg, seed)?)))
        .collect::<drt_core::Result<Vec<_>>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .context("building the worker pool")?;
    let per_seed: Vec<Vec<SweepRecord>> = pool.install(|| {
        noises
            .par_iter()
            .map(|(seed, noise)| {
                sweep_realization(
                    &problem,
                    &grid,
                    solver.as_ref(),
                    noise,
                    *seed as usize,
                    &asm.truth,
                    delta_s,
                    cfg.p_level,
                )
            })
            .collect::<drt_core::Result<_>>()
    })?;
    let records: Vec<SweepRecord> = per_seed.into_iter().flatten().collect();
    let cells_total = records.len();
    let cells_failed = records.iter().filter(|r| r.failure.is_some()).count();

    let enforce = cfg.solver == "lls" && cfg.l_order == 0;
    let summary = summarize_sweep(&grid, records, enforce)?;

    let stem = format!(
        "sweep-{}-{}-L{}-{}",
        cfg.stem(),
        cfg.matrix.name(),
        cfg.l_order,
        cfg.solver
    );
    let record_header = [
        "dataset",
        "model",
        "matrix",
        "L_order",
        "solver",
        "realization",
        "lambda",
        "resid_norm",
        "seminorm",
        "s_error",
        "ks_stat",
        "passes",
    ];
    let record_rows: Vec<Vec<String>> = summary
        .records
        .iter()
        .map(|r| {
            vec![
                cfg.dataset.to_string(),
                cfg.model.to_string(),
                cfg.matrix.name().into(),
                cfg.l_order.to_string(),
                cfg.solver.clone(),
                r.realization.to_string(),
                sci(r.lambda),
                sci(r.resid_norm),
                sci(r.seminorm),
                sci(r.s_error),
                sci(r.ks_stat),
                r.passes.to_string(),
            ]
        })
        .collect();
    write_csv(&cfg.out_dir.join(format!("{stem}-records.csv")), &record_header, record_rows)?;

    let panel_rows: Vec<Vec<String>> = summary
        .lambdas
        .iter()
        .zip(&summary.mean_error_by_lambda)
        .map(|(&l, &e)| vec![sci(l), sci(e)])
        .collect();
    write_csv(
        &cfg.out_dir.join(format!("{stem}-panel.csv")),
        &["lambda", "mean_s_error"],
        panel_rows,
    )?;

    let opt_min = summary
        .lambdas
        .iter()
        .zip(&summary.mean_error_by_lambda)
        .filter(|(_, e)| e.is_finite())
        .min_by(|(_, a), (_, b)| a.total_cmp(b))
        .map(|(&l, _)| l)
        .unwrap_or(f64::NAN);
    let report = SweepReport {
        dataset: cfg.dataset.to_string(),
        model: cfg.model.to_string(),
        matrix: cfg.matrix.name().into(),
        rule: asm.km.rule.to_string(),
        l_order: cfg.l_order,
        solver: cfg.solver.clone(),
        noise: cfg.noise,
        p_level: cfg.p_level,
        seeds: cfg.seeds.clone(),
        lambdas: summary.lambdas.clone(),
        mean_error_by_lambda: summary.mean_error_by_lambda.clone(),
        markers: Markers {
            lambda_opt_min: opt_min,
            lambda_ncp_geo: summary.geo_mean_ncp,
            lambda_lc_geo: summary.geo_mean_lc,
        },
        choices: summary
            .choices
            .iter()
            .map(|c| ChoiceReport {
                realization: c.realization,
                lambda_opt: c.lambda_opt,
                lambda_ncp: c.lambda_ncp,
                ncp_no_pass: c.ncp_no_pass,
                lambda_lc: c.lambda_lc,
            })
            .collect(),
        cells_total,
        cells_failed,
    };
    write_json(&cfg.out_dir.join(format!("{stem}-summary.json")), &report)?;

    let succeeded = cells_total - cells_failed;
    println!(
        "{succeeded}/{cells_total} cells solved; markers: opt {} ncp {} lc {}",
        sci(opt_min),
        sci(summary.geo_mean_ncp),
        sci(summary.geo_mean_lc)
    );
    if (succeeded as f64) < 0.9 * cells_total as f64 {
        eprintln!("error: more than 10% of sweep cells failed");
        return Ok(1);
    }
    Ok(0)
}
