//! Regularization-parameter selection: the lambda grid, the normalized
//! cumulative periodogram with its white-noise test, L-curve corner
//! detection, and the full sweep protocol that evaluates a solver across
//! noise realizations.

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{DrtError, Result};
use crate::solver::RegularizedSolver;
use crate::tikhonov::SmoothingOperator;

/// Strictly increasing grid of positive regularization parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(DrtError::Config("lambda grid is empty".into()));
        }
        if !values[0].is_finite() || values[0] <= 0.0 {
            return Err(DrtError::Config("lambda grid values must be positive".into()));
        }
        for pair in values.windows(2) {
            if !(pair[1] > pair[0]) || !pair[1].is_finite() {
                return Err(DrtError::Config(
                    "lambda grid must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { values })
    }

    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 || !(lo > 0.0) || !(hi > lo) {
            return Err(DrtError::Config(format!(
                "bad log-spaced grid: lo={lo}, hi={hi}, count={count}"
            )));
        }
        let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
        let mut values: Vec<f64> = (0..count)
            .map(|i| (ln_lo + (ln_hi - ln_lo) * i as f64 / (count - 1) as f64).exp())
            .collect();
        values[0] = lo;
        values[count - 1] = hi;
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// 50 values logarithmically spaced over [10^-3.5, 10^1.5].
pub fn lambda_grid_default() -> LambdaGrid {
    LambdaGrid::log_spaced(10f64.powf(-3.5), 10f64.powf(1.5), 50)
        .expect("constants form a valid grid")
}

/// Critical coefficient c(p) of the Kolmogorov-Smirnov test; the band
/// half-width at sample size q is c(p)/sqrt(q). Reproduces the usual
/// tabulated values c(0.20) = 1.073 and c(0.05) = 1.358.
pub fn ks_critical(p: f64) -> f64 {
    (-(p / 2.0).ln() / 2.0).sqrt()
}

/// Normalized cumulative periodogram of a residual vector and its
/// distance from the flat staircase of white noise.
#[derive(Debug, Clone)]
pub struct NcpCurve {
    /// c_1..c_q, non-decreasing with c_q = 1.
    pub cumulative: Vec<f64>,
    /// Largest deviation of the curve from the uniform staircase,
    /// measured against both the lower and the upper step edge.
    pub ks_statistic: f64,
    /// Number of retained periodogram ordinates, floor(len/2).
    pub q: usize,
}

impl NcpCurve {
    /// Whether the curve stays inside the white-noise band at level p.
    pub fn passes(&self, p: f64) -> bool {
        self.ks_statistic <= ks_critical(p) / (self.q as f64).sqrt()
    }
}

/// Periodogram-based whiteness summary of a residual vector.
///
/// Squared DFT magnitudes at bins 1..q (the zero-frequency term is
/// excluded, no detrending is applied) are accumulated and normalized.
/// An identically zero residual is treated as white.
pub fn ncp(residual: &DVector<f64>) -> Result<NcpCurve> {
    let m = residual.len();
    if m < 4 {
        return Err(DrtError::Dimension(format!(
            "periodogram needs at least 4 samples, got {m}"
        )));
    }
    let q = m / 2;
    let mut buf: Vec<Complex64> = residual.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);

    let power: Vec<f64> = (1..=q).map(|k| buf[k].norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    let cumulative: Vec<f64> = if total > 0.0 {
        let mut acc = 0.0;
        power
            .iter()
            .map(|p| {
                acc += p;
                acc / total
            })
            .collect()
    } else {
        (1..=q).map(|j| j as f64 / q as f64).collect()
    };

    let qf = q as f64;
    let mut ks = 0.0_f64;
    for (j, &c) in cumulative.iter().enumerate() {
        let hi = (c - (j + 1) as f64 / qf).abs();
        let lo = (c - j as f64 / qf).abs();
        ks = ks.max(hi).max(lo);
    }
    Ok(NcpCurve {
        cumulative,
        ks_statistic: ks,
        q,
    })
}

/// The whiteness test outcome at a single grid value.
#[derive(Debug, Clone, Copy)]
pub struct NcpEvaluation {
    pub lambda: f64,
    pub ks_statistic: f64,
    pub passes: bool,
}

/// Outcome of NCP-based parameter selection.
#[derive(Debug, Clone)]
pub struct NcpChoice {
    pub lambda: f64,
    /// Set when no grid value passed the whiteness test and the returned
    /// lambda is the KS-statistic minimizer instead.
    pub no_pass: bool,
    pub evaluated: Vec<NcpEvaluation>,
    /// Grid values whose solve failed, with the failure message.
    pub skipped: Vec<(f64, String)>,
}

/// The regularized problem a parameter is being chosen for.
#[derive(Debug, Clone, Copy)]
pub struct InverseProblem<'a> {
    pub matrix: &'a DMatrix<f64>,
    pub data: &'a DVector<f64>,
    pub smoothing: &'a SmoothingOperator,
}

impl InverseProblem<'_> {
    fn validate(&self) -> Result<()> {
        if self.data.len() != self.matrix.nrows() {
            return Err(DrtError::Dimension(format!(
                "matrix has {} rows but data has {} entries",
                self.matrix.nrows(),
                self.data.len()
            )));
        }
        if self.smoothing.matrix.ncols() != self.matrix.ncols() {
            return Err(DrtError::Dimension(format!(
                "smoothing operator has {} columns for {} unknowns",
                self.smoothing.matrix.ncols(),
                self.matrix.ncols()
            )));
        }
        Ok(())
    }
}

fn pick_ncp_lambda(evaluated: &[NcpEvaluation]) -> Option<(f64, bool)> {
    if let Some(e) = evaluated.iter().rev().find(|e| e.passes) {
        return Some((e.lambda, false));
    }
    evaluated
        .iter()
        .min_by(|a, b| a.ks_statistic.total_cmp(&b.ks_statistic))
        .map(|e| (e.lambda, true))
}

/// Selects the regularization parameter whose residual best matches
/// white noise.
///
/// Among grid values whose residual passes the periodogram test at level
/// p, the largest is returned: it applies the most smoothing that is
/// still consistent with a noise-only residual. (Below that edge the
/// residual is also white but under-smoothed; above it, signal leaks
/// into the residual.) When no value passes, the KS-statistic minimizer
/// is returned and flagged.
pub fn choose_lambda_ncp(
    problem: &InverseProblem,
    grid: &LambdaGrid,
    p: f64,
    solver: &dyn RegularizedSolver,
) -> Result<NcpChoice> {
    problem.validate()?;
    if !(p > 0.0 && p < 1.0) {
        return Err(DrtError::Config(format!("level p must be in (0,1), got {p}")));
    }
    let mut evaluated = Vec::new();
    let mut skipped = Vec::new();
    for &lambda in grid.values() {
        match solver.solve(problem.matrix, problem.data, lambda, problem.smoothing) {
            Ok(x) => {
                let r = problem.matrix * &x - problem.data;
                let curve = ncp(&r)?;
                evaluated.push(NcpEvaluation {
                    lambda,
                    ks_statistic: curve.ks_statistic,
                    passes: curve.passes(p),
                });
            }
            Err(e) => skipped.push((lambda, e.to_string())),
        }
    }
    let Some((lambda, no_pass)) = pick_ncp_lambda(&evaluated) else {
        return Err(DrtError::Selection(format!(
            "solver failed at every grid value; first failure: {}",
            skipped
                .first()
                .map(|(_, m)| m.as_str())
                .unwrap_or("none recorded")
        )));
    };
    Ok(NcpChoice {
        lambda,
        no_pass,
        evaluated,
        skipped,
    })
}

/// One point on the trade-off curve between data misfit and smoothness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LCurvePoint {
    pub lambda: f64,
    pub residual_norm: f64,
    pub seminorm: f64,
}

/// Finds the corner of the L-curve.
///
/// Points are sorted by lambda, pruned to the monotone branch (misfit
/// non-decreasing, seminorm non-increasing, both positive so logs
/// exist), and the corner is the surviving point with the largest
/// three-point circumscribed-circle curvature in log-log coordinates,
/// signed so that a bend toward the origin counts as positive.
pub fn lcurve_corner(points: &[LCurvePoint]) -> Result<f64> {
    let mut sorted: Vec<LCurvePoint> = points.to_vec();
    sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));

    let mut kept: Vec<LCurvePoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        if !(p.residual_norm > 0.0 && p.seminorm > 0.0) {
            continue;
        }
        match kept.last() {
            Some(prev) if p.residual_norm < prev.residual_norm || p.seminorm > prev.seminorm => {}
            _ => kept.push(p),
        }
    }
    if kept.len() < 3 {
        return Err(DrtError::Selection(format!(
            "need at least 3 monotone points for a corner, have {}",
            kept.len()
        )));
    }

    let xy: Vec<(f64, f64)> = kept
        .iter()
        .map(|p| (p.residual_norm.ln(), p.seminorm.ln()))
        .collect();
    let mut best = (1usize, f64::NEG_INFINITY);
    for i in 1..xy.len() - 1 {
        let (ax, ay) = xy[i - 1];
        let (bx, by) = xy[i];
        let (cx, cy) = xy[i + 1];
        let cross = (bx - ax) * (cy - by) - (by - ay) * (cx - bx);
        let denom = ((bx - ax).hypot(by - ay))
            * ((cx - bx).hypot(cy - by))
            * ((cx - ax).hypot(cy - ay));
        let curvature = if denom > 0.0 { 2.0 * cross / denom } else { 0.0 };
        if curvature > best.1 {
            best = (i, curvature);
        }
    }
    Ok(kept[best.0].lambda)
}

/// One (realization, lambda) cell of a sweep. When `failure` is set the
/// numeric fields are NaN.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub realization: usize,
    pub lambda: f64,
    pub resid_norm: f64,
    pub seminorm: f64,
    pub s_error: f64,
    pub ks_stat: f64,
    pub passes: bool,
    pub failure: Option<String>,
}

/// Per-realization parameter selections extracted from the sweep table.
#[derive(Debug, Clone, Copy)]
pub struct RealizationChoices {
    pub realization: usize,
    /// Grid value minimizing the s-space error (needs the truth).
    pub lambda_opt: Option<f64>,
    pub lambda_ncp: Option<f64>,
    pub ncp_no_pass: bool,
    pub lambda_lc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub lambdas: Vec<f64>,
    pub records: Vec<SweepRecord>,
    /// Mean s-space error over the realizations that solved, per lambda.
    pub mean_error_by_lambda: Vec<f64>,
    pub choices: Vec<RealizationChoices>,
    pub geo_mean_opt: f64,
    pub geo_mean_ncp: f64,
    pub geo_mean_lc: f64,
}

fn geometric_mean<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v.ln();
        count += 1;
    }
    if count == 0 {
        f64::NAN
    } else {
        (sum / count as f64).exp()
    }
}

/// Evaluates one noise realization over the whole grid.
///
/// `noise` is added to the problem's data vector; the truth is the DRT
/// sampled on the solution grid, used for the Δs-weighted absolute
/// error.
pub fn sweep_realization(
    problem: &InverseProblem,
    grid: &LambdaGrid,
    solver: &dyn RegularizedSolver,
    noise: &DVector<f64>,
    realization: usize,
    truth: &DVector<f64>,
    delta_s: f64,
    p: f64,
) -> Result<Vec<SweepRecord>> {
    problem.validate()?;
    if noise.len() != problem.data.len() {
        return Err(DrtError::Dimension(format!(
            "noise vector has {} entries, data has {}",
            noise.len(),
            problem.data.len()
        )));
    }
    if truth.len() != problem.matrix.ncols() {
        return Err(DrtError::Dimension(format!(
            "truth has {} samples for {} unknowns",
            truth.len(),
            problem.matrix.ncols()
        )));
    }
    let data = problem.data + noise;
    let mut records = Vec::with_capacity(grid.len());
    for &lambda in grid.values() {
        match solver.solve(problem.matrix, &data, lambda, problem.smoothing) {
            Ok(x) => {
                let r = problem.matrix * &x - &data;
                let curve = ncp(&r)?;
                let s_error = delta_s * (&x - truth).abs().sum();
                records.push(SweepRecord {
                    realization,
                    lambda,
                    resid_norm: r.norm(),
                    seminorm: (&problem.smoothing.matrix * &x).norm(),
                    s_error,
                    ks_stat: curve.ks_statistic,
                    passes: curve.passes(p),
                    failure: None,
                });
            }
            Err(e) => records.push(SweepRecord {
                realization,
                lambda,
                resid_norm: f64::NAN,
                seminorm: f64::NAN,
                s_error: f64::NAN,
                ks_stat: f64::NAN,
                passes: false,
                failure: Some(e.to_string()),
            }),
        }
    }
    Ok(records)
}

/// Aggregates sweep records into per-lambda mean errors, per-realization
/// selections, and geometric means of the selected parameters.
///
/// With `enforce_monotone` (unconstrained solver, identity smoothing)
/// each realization's residual norms must be non-decreasing and solution
/// norms non-increasing along the grid; a violation is an invariant
/// failure.
pub fn summarize_sweep(
    grid: &LambdaGrid,
    records: Vec<SweepRecord>,
    enforce_monotone: bool,
) -> Result<SweepSummary> {
    let nl = grid.len();
    let mut by_realization: Vec<(usize, Vec<&SweepRecord>)> = Vec::new();
    for rec in &records {
        match by_realization.iter_mut().find(|(r, _)| *r == rec.realization) {
            Some((_, v)) => v.push(rec),
            None => by_realization.push((rec.realization, vec![rec])),
        }
    }
    by_realization.sort_by_key(|(r, _)| *r);

    let mut sums = vec![0.0_f64; nl];
    let mut counts = vec![0usize; nl];
    let mut choices = Vec::with_capacity(by_realization.len());

    for (realization, recs) in &by_realization {
        if recs.len() != nl {
            return Err(DrtError::Invariant(format!(
                "realization {realization} has {} records for {nl} grid values",
                recs.len()
            )));
        }
        if enforce_monotone {
            let ok: Vec<&&SweepRecord> = recs.iter().filter(|r| r.failure.is_none()).collect();
            for w in ok.windows(2) {
                let slack = 1e-7 * (1.0 + w[0].resid_norm.abs());
                if w[1].resid_norm < w[0].resid_norm - slack
                    || w[1].seminorm > w[0].seminorm + 1e-7 * (1.0 + w[0].seminorm.abs())
                {
                    return Err(DrtError::Invariant(format!(
                        "realization {realization}: residual/seminorm not monotone between \
                         lambda {} and {}",
                        w[0].lambda, w[1].lambda
                    )));
                }
            }
        }

        let mut evaluated = Vec::new();
        let mut lc_points = Vec::new();
        let mut opt: Option<(f64, f64)> = None;
        for (k, rec) in recs.iter().enumerate() {
            if rec.failure.is_some() {
                continue;
            }
            sums[k] += rec.s_error;
            counts[k] += 1;
            evaluated.push(NcpEvaluation {
                lambda: rec.lambda,
                ks_statistic: rec.ks_stat,
                passes: rec.passes,
            });
            lc_points.push(LCurvePoint {
                lambda: rec.lambda,
                residual_norm: rec.resid_norm,
                seminorm: rec.seminorm,
            });
            if opt.is_none_or(|(_, best)| rec.s_error < best) {
                opt = Some((rec.lambda, rec.s_error));
            }
        }
        let (lambda_ncp, ncp_no_pass) = match pick_ncp_lambda(&evaluated) {
            Some((l, flag)) => (Some(l), flag),
            None => (None, false),
        };
        choices.push(RealizationChoices {
            realization: *realization,
            lambda_opt: opt.map(|(l, _)| l),
            lambda_ncp,
            ncp_no_pass,
            lambda_lc: lcurve_corner(&lc_points).ok(),
        });
    }

    let mean_error_by_lambda = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();
    let geo_mean_opt = geometric_mean(choices.iter().filter_map(|c| c.lambda_opt));
    let geo_mean_ncp = geometric_mean(choices.iter().filter_map(|c| c.lambda_ncp));
    let geo_mean_lc = geometric_mean(choices.iter().filter_map(|c| c.lambda_lc));
    Ok(SweepSummary {
        lambdas: grid.values().to_vec(),
        records,
        mean_error_by_lambda,
        choices,
        geo_mean_opt,
        geo_mean_ncp,
        geo_mean_lc,
    })
}

/// Runs the full sweep protocol: every noise realization against every
/// grid value, then aggregation.
pub fn sweep(
    problem: &InverseProblem,
    grid: &LambdaGrid,
    solver: &dyn RegularizedSolver,
    noises: &[DVector<f64>],
    truth: &DVector<f64>,
    delta_s: f64,
    p: f64,
) -> Result<SweepSummary> {
    if noises.is_empty() {
        return Err(DrtError::Config("no noise realizations supplied".into()));
    }
    if !(delta_s > 0.0) {
        return Err(DrtError::Domain(format!("delta_s must be positive, got {delta_s}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(DrtError::Config(format!("level p must be in (0,1), got {p}")));
    }
    let mut records = Vec::with_capacity(noises.len() * grid.len());
    for (i, noise) in noises.iter().enumerate() {
        records.extend(sweep_realization(
            problem, grid, solver, noise, i, truth, delta_s, p,
        )?);
    }
    let enforce = solver.name() == "lls" && problem.smoothing.order == 0;
    summarize_sweep(grid, records, enforce)
}
