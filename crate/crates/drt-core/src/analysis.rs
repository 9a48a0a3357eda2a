//! Model-error diagnostics: truncation bounds for the depressed-arc
//! distribution, tail estimates, combined quadrature/truncation error
//! bounds, per-frequency quadrature-error curves, condition-number
//! tables, and whiteness classification of singular basis vectors.

use nalgebra::{DMatrix, DVector};

use crate::error::{DrtError, Result};
use crate::integrate::integrate;
use crate::kernel::{
    assemble, kernel_imag, kernel_real, FrequencyGrid, KernelTag, QuadratureRule, SGrid,
};
use crate::select::ncp;
use crate::tikhonov::thin_svd;

/// How far below/above a cutoff the improper tail integrals are chased.
/// The densities handled here decay at least like exp(-beta |s|) with
/// beta >= 0.35, so the mass beyond this span is below roundoff.
const TAIL_SPAN: f64 = 120.0;

/// Truncation points guaranteeing each tail of a depressed-arc density
/// holds mass below delta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBound {
    pub delta: f64,
    /// Density value at the truncation points (equal on both sides; the
    /// density is symmetric about ln t0).
    pub epsilon: f64,
    pub s_low: f64,
    pub s_high: f64,
}

impl TruncationBound {
    /// Width of the required window; any grid spanning at least this
    /// range centered right keeps the total tail mass below 2 delta.
    pub fn total_range(&self) -> f64 {
        self.s_high - self.s_low
    }
}

/// Mass of a single depressed-arc process above s_n, in closed form.
pub fn rq_tail_mass_upper(t0: f64, beta: f64, s_n: f64) -> Result<f64> {
    if !(t0 > 0.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(DrtError::Domain(format!(
            "need t0 > 0 and beta in (0,1), got t0={t0}, beta={beta}"
        )));
    }
    let half = std::f64::consts::PI * beta / 2.0;
    Ok(0.5 - (half.tan() * (beta * (s_n - t0.ln()) / 2.0).tanh()).atan() / (2.0 * half))
}

/// Smallest symmetric truncation window around ln t0 keeping each tail
/// of the unit-weight depressed-arc density below delta.
pub fn rq_truncation(t0: f64, beta: f64, delta: f64) -> Result<TruncationBound> {
    if !(t0 > 0.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(DrtError::Domain(format!(
            "need t0 > 0 and beta in (0,1), got t0={t0}, beta={beta}"
        )));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(DrtError::Domain(format!(
            "delta must be in (0, 0.5), got {delta}"
        )));
    }
    let half = std::f64::consts::PI * beta / 2.0;
    let ratio = (half * (1.0 - 2.0 * delta)).tan() / half.tan();
    if !(ratio < 1.0) {
        return Err(DrtError::Domain(format!(
            "inverse tanh argument {ratio} out of range for beta={beta}, delta={delta}"
        )));
    }
    let offset = 2.0 / beta * ratio.atanh();
    let s_high = offset + t0.ln();
    let s_low = -offset + t0.ln();
    let process = crate::models::RqProcess::new(t0, beta, 1.0)?;
    Ok(TruncationBound {
        delta,
        epsilon: crate::models::f_rq(s_high, &process),
        s_low,
        s_high,
    })
}

/// Mass of a density below the cutoff, by adaptive quadrature over a
/// window wide enough that anything further out is negligible.
pub fn tail_mass<F: Fn(f64) -> f64>(f: F, below: f64, abs_tol: f64) -> Result<f64> {
    Ok(integrate(f, below - TAIL_SPAN, below, abs_tol)?.value)
}

/// Sup of a unimodal density over both tails outside [s1, sn]: with the
/// peak inside and monotone tails this is the larger endpoint value.
pub fn tail_sup<F: Fn(f64) -> f64>(f: F, s1: f64, sn: f64) -> Result<f64> {
    if !(sn > s1) {
        return Err(DrtError::Domain(format!("need sn > s1, got [{s1}, {sn}]")));
    }
    let ends = f(s1).max(f(sn));
    let interior = (1..400)
        .map(|i| f(s1 + (sn - s1) * i as f64 / 400.0))
        .fold(f64::NEG_INFINITY, f64::max);
    if interior < ends {
        return Err(DrtError::Domain(
            "density peak lies outside the interval; endpoint values do not bound the tails"
                .into(),
        ));
    }
    Ok(ends)
}

/// Upper bounds on the total model error of the tail-corrected
/// quadrature at one frequency, one bound per kernel.
#[derive(Debug, Clone, Copy)]
pub struct ErrorBoundReport {
    pub omega: f64,
    pub e1_bound: f64,
    pub e2_bound: f64,
    pub h1_second_sup: f64,
    pub h2_second_sup: f64,
    pub epsilon: f64,
    pub delta_f: f64,
    /// The mean-value point in the quadrature remainder is unknowable;
    /// the sampled sup of |H''| stands in for it, making these upper
    /// bounds up to the sampling resolution.
    pub zeta_note: &'static str,
}

fn second_derivative_sup<H: Fn(f64) -> f64>(h: H, lo: f64, hi: f64, step: f64) -> f64 {
    let count = ((hi - lo) / step).ceil() as usize;
    let mut sup = 0.0_f64;
    for i in 1..count {
        let s = lo + i as f64 * step;
        let dd = (h(s - step) - 2.0 * h(s) + h(s + step)) / (step * step);
        sup = sup.max(dd.abs());
    }
    sup
}

/// Evaluates the model-error bounds
///   E2 <= eps*pi + (sN-s1)^3 / (12 N^2) * sup|H2''|
///   E1 <= eps/2 (ds + ln 2) + delta_f + (sN-s1)^3 (N+1) / (12 N^3) * sup|H1''|
/// with sup|H''| sampled by central differences at spacing ds/10. The
/// H1 sup extends one spacing below the grid, where its mean-value
/// point may fall.
pub fn total_error_bounds<F: Fn(f64) -> f64>(
    f: &F,
    grid: &SGrid,
    omega: f64,
) -> Result<ErrorBoundReport> {
    if !(omega > 0.0) {
        return Err(DrtError::Domain(format!("omega must be positive, got {omega}")));
    }
    let (s1, sn) = (grid.s1(), grid.sn());
    let n = grid.n() as f64;
    let ds = grid.delta_s();
    let epsilon = tail_sup(f, s1, sn)?;
    let delta_f = tail_mass(f, s1 - ds, 1e-14)?;

    let h1 = |s: f64| kernel_real(omega, s.exp()) * f(s);
    let h2 = |s: f64| kernel_imag(omega, s.exp()) * f(s);
    let step = ds / 10.0;
    let h1_second_sup = second_derivative_sup(h1, s1 - ds, sn, step);
    let h2_second_sup = second_derivative_sup(h2, s1, sn, step);

    let width3 = (sn - s1).powi(3);
    let e2_bound = epsilon * std::f64::consts::PI + width3 / (12.0 * n * n) * h2_second_sup;
    let e1_bound = epsilon / 2.0 * (ds + 2f64.ln())
        + delta_f
        + width3 * (n + 1.0) / (12.0 * n * n * n) * h1_second_sup;
    Ok(ErrorBoundReport {
        omega,
        e1_bound,
        e2_bound,
        h1_second_sup,
        h2_second_sup,
        epsilon,
        delta_f,
        zeta_note: "sup|H''| sampled at ds/10 replaces the unknown mean-value point",
    })
}

/// Absolute quadrature error per frequency: the assembled matrix row
/// applied to density samples, against the adaptively integrated kernel
/// integral truncated to the grid range. (Truncation itself is assessed
/// separately; this isolates how well the weights integrate over
/// [s1, sN].)
pub fn quad_error_curve<F: Fn(f64) -> f64>(
    f: &F,
    freq: &FrequencyGrid,
    grid: &SGrid,
    rule: QuadratureRule,
    kernel: KernelTag,
) -> Result<Vec<f64>> {
    let km = assemble(freq, grid, kernel, rule)?;
    let x = match rule {
        QuadratureRule::TrapT => {
            DVector::from_iterator(grid.n(), grid.s().iter().map(|&s| f(s) / s.exp()))
        }
        _ => DVector::from_iterator(grid.n(), grid.s().iter().map(|&s| f(s))),
    };
    let h = match kernel {
        KernelTag::H1 => kernel_real,
        KernelTag::H2 => kernel_imag,
        KernelTag::Stacked => {
            return Err(DrtError::Config(
                "error curves are per kernel; pick the real or imaginary one".into(),
            ))
        }
    };
    let approx = &km.matrix * &x;
    freq.omegas()
        .iter()
        .enumerate()
        .map(|(j, &omega)| {
            let oracle = integrate(
                |s: f64| h(omega, s.exp()) * f(s),
                grid.s1(),
                grid.sn(),
                1e-12,
            )?;
            Ok((approx[j] - oracle.value).abs())
        })
        .collect()
}

/// Condition number sigma_max / sigma_min. A singular value at machine
/// zero yields infinity so rank-deficient cases are visible rather than
/// misleadingly huge.
pub fn condition_number(a: &DMatrix<f64>) -> Result<f64> {
    let svd = thin_svd(a)?;
    let max = svd.sigma[0];
    let min = svd.sigma[svd.sigma.len() - 1];
    if !(max > 0.0) {
        return Err(DrtError::Domain("condition of the zero matrix".into()));
    }
    if min <= max * f64::EPSILON * f64::EPSILON {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// One row of the conditioning table: a relaxation-time range and the
/// condition numbers of the four single-kernel matrices on it.
#[derive(Debug, Clone, Copy)]
pub struct ConditionRow {
    pub t_min: f64,
    pub t_max: f64,
    /// Real/imaginary kernels with quadrature in t.
    pub cond_a1: f64,
    pub cond_a2: f64,
    /// The same kernels after the change of variables to s.
    pub cond_a1s: f64,
    pub cond_a2s: f64,
}

/// The nine tabulated relaxation-time ranges.
pub fn default_t_ranges() -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(9);
    for t_min in [1e-6, 1e-5, 1e-4] {
        for t_max in [1e1, 1e2, 1e3] {
            out.push((t_min, t_max));
        }
    }
    out
}

/// Condition numbers of the four single-kernel matrices over a set of
/// relaxation-time ranges, with n nodes per grid.
pub fn condition_table(
    freq: &FrequencyGrid,
    t_ranges: &[(f64, f64)],
    n: usize,
) -> Result<Vec<ConditionRow>> {
    t_ranges
        .iter()
        .map(|&(t_min, t_max)| {
            if !(t_min > 0.0 && t_max > t_min) {
                return Err(DrtError::Domain(format!(
                    "bad relaxation-time range [{t_min}, {t_max}]"
                )));
            }
            let grid = SGrid::uniform(t_min.ln(), t_max.ln(), n)?;
            let cond = |kernel, rule| -> Result<f64> {
                condition_number(&assemble(freq, &grid, kernel, rule)?.matrix)
            };
            Ok(ConditionRow {
                t_min,
                t_max,
                cond_a1: cond(KernelTag::H1, QuadratureRule::TrapT)?,
                cond_a2: cond(KernelTag::H2, QuadratureRule::TrapT)?,
                cond_a1s: cond(KernelTag::H1, QuadratureRule::TrapS)?,
                cond_a2s: cond(KernelTag::H2, QuadratureRule::TrapS)?,
            })
        })
        .collect()
}

/// Condition numbers of the s-space matrices assembled with one rule:
/// each kernel alone, the two stacked, and the square system on a
/// doubled grid.
#[derive(Debug, Clone, Copy)]
pub struct ConditionSet {
    pub rule: QuadratureRule,
    pub cond_h1: f64,
    pub cond_h2: f64,
    pub cond_stacked: f64,
    pub cond_square: f64,
}

pub fn condition_set(
    freq: &FrequencyGrid,
    grid: &SGrid,
    rule: QuadratureRule,
) -> Result<ConditionSet> {
    let a1 = assemble(freq, grid, KernelTag::H1, rule)?;
    let a2 = assemble(freq, grid, KernelTag::H2, rule)?;
    let stacked = crate::kernel::stack(&a1, &a2)?;
    let square = crate::kernel::square_system(freq, rule)?;
    Ok(ConditionSet {
        rule,
        cond_h1: condition_number(&a1.matrix)?,
        cond_h2: condition_number(&a2.matrix)?,
        cond_stacked: condition_number(&stacked.matrix)?,
        cond_square: condition_number(&square.matrix)?,
    })
}

/// Whiteness classification of the singular basis vectors of a matrix.
#[derive(Debug, Clone)]
pub struct BasisNcp {
    /// Per-column verdicts, in singular-value order: true when the
    /// periodogram of the vector passes the white-noise test.
    pub u_noise_like: Vec<bool>,
    pub v_noise_like: Vec<bool>,
    /// First noise-like column index (0-based); None when every column
    /// carries structure.
    pub first_noise_u: Option<usize>,
    pub first_noise_v: Option<usize>,
}

/// Classifies each left/right singular vector as structured or
/// noise-like by the periodogram test at the 95% level. Ill-posed
/// kernels produce smooth leading vectors and oscillatory trailing
/// ones; the crossover index says how many basis directions carry
/// recoverable signal.
pub fn basis_ncp(a: &DMatrix<f64>) -> Result<BasisNcp> {
    const LEVEL: f64 = 0.05;
    let svd = thin_svd(a)?;
    let mut u_noise_like = Vec::with_capacity(svd.sigma.len());
    let mut v_noise_like = Vec::with_capacity(svd.sigma.len());
    for i in 0..svd.sigma.len() {
        u_noise_like.push(ncp(&svd.u.column(i).clone_owned())?.passes(LEVEL));
        v_noise_like.push(ncp(&svd.v.column(i).clone_owned())?.passes(LEVEL));
    }
    let first = |flags: &[bool]| flags.iter().position(|&b| b);
    Ok(BasisNcp {
        first_noise_u: first(&u_noise_like),
        first_noise_v: first(&v_noise_like),
        u_noise_like,
        v_noise_like,
    })
}

/// Indices of interior strict local maxima at least `rel_threshold`
/// times the global maximum. The threshold separates genuine modes from
/// the small spurious bumps non-negative solvers leave between peaks;
/// one third of the peak height keeps every tabulated mode while
/// rejecting the crumbs seen in practice.
pub fn peak_indices(x: &DVector<f64>, rel_threshold: f64) -> Vec<usize> {
    let floor = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) * rel_threshold;
    (1..x.len().saturating_sub(1))
        .filter(|&i| x[i] > x[i - 1] && x[i] > x[i + 1] && x[i] >= floor)
        .collect()
}

pub fn count_peaks(x: &DVector<f64>, rel_threshold: f64) -> usize {
    peak_indices(x, rel_threshold).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{f_ln, f_rq, LnProcess, RqProcess};
    use crate::sim::{dataset, frequency_grid_default, DatasetName, ModelKind};
    use approx::assert_relative_eq;
    use rand::rngs::SmallRng;
    use rand::{RngExt, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn truncation_window_is_symmetric_and_tight() {
        let b = rq_truncation(1.0, 0.5, 0.01).unwrap();
        assert_eq!(b.s_low, -b.s_high);
        assert!(b.s_high > 0.0);
        assert_relative_eq!(b.total_range(), 2.0 * b.s_high, max_relative = 1e-15);

        for beta in [0.3, 0.5, 0.8, 0.95] {
            let w = rq_truncation(0.3, beta, 0.25).unwrap();
            assert!(w.s_high.is_finite() && w.s_low.is_finite());
        }

        assert!(rq_truncation(1.0, 1.0, 0.1).is_err());
        assert!(rq_truncation(1.0, 0.5, 0.6).is_err());
        assert!(rq_truncation(-1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn closed_form_tail_matches_quadrature() {
        for (t0, beta) in [(1.0, 0.5), (0.01, 0.8), (3.0, 0.65)] {
            let p = RqProcess::new(t0, beta, 1.0).unwrap();
            for s_n in [t0.ln() + 2.0, t0.ln() + 5.0] {
                let closed = rq_tail_mass_upper(t0, beta, s_n).unwrap();
                let numeric = integrate(|s| f_rq(s, &p), s_n, s_n + TAIL_SPAN, 1e-13)
                    .unwrap()
                    .value;
                assert_relative_eq!(closed, numeric, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn truncation_points_hit_delta_exactly() {
        let (t0, beta, delta) = (0.05, 0.7, 0.02);
        let b = rq_truncation(t0, beta, delta).unwrap();
        let upper = rq_tail_mass_upper(t0, beta, b.s_high).unwrap();
        assert!((upper - delta).abs() < 1e-10, "upper tail {upper}");
        let p = RqProcess::new(t0, beta, 1.0).unwrap();
        let lower = integrate(|s| f_rq(s, &p), b.s_low - TAIL_SPAN, b.s_low, 1e-13)
            .unwrap()
            .value;
        assert!((lower - delta).abs() < 1e-9, "lower tail {lower}");
    }

    #[test]
    fn random_windows_respect_all_tail_bounds() {
        let mut rng = SmallRng::seed_from_u64(61);
        for trial in 0..50 {
            let t0 = 10f64.powf(rng.random_range(-3.0..1.0));
            let beta = rng.random_range(0.35..0.95);
            let delta = rng.random_range(0.005..0.3);
            let b = rq_truncation(t0, beta, delta).unwrap();
            let p = RqProcess::new(t0, beta, 1.0).unwrap();

            let upper = integrate(|s| f_rq(s, &p), b.s_high, b.s_high + TAIL_SPAN, 1e-12)
                .unwrap()
                .value;
            let lower = integrate(|s| f_rq(s, &p), b.s_low - TAIL_SPAN, b.s_low, 1e-12)
                .unwrap()
                .value;
            assert!(upper <= delta + 1e-9, "trial {trial}: upper {upper} > {delta}");
            assert!(lower <= delta + 1e-9, "trial {trial}: lower {lower} > {delta}");

            // Kernel-weighted tails obey the half-delta split.
            let omega = 10f64.powf(rng.random_range(-2.0..3.0));
            let above = integrate(
                |s| kernel_imag(omega, s.exp()) * f_rq(s, &p),
                b.s_high,
                b.s_high + TAIL_SPAN,
                1e-12,
            )
            .unwrap()
            .value;
            let below = integrate(
                |s| kernel_imag(omega, s.exp()) * f_rq(s, &p),
                b.s_low - TAIL_SPAN,
                b.s_low,
                1e-12,
            )
            .unwrap()
            .value;
            assert!(above <= delta / 2.0 + 1e-9);
            assert!(below <= delta / 2.0 + 1e-9);

            let real_outside = integrate(
                |s| kernel_real(omega, s.exp()) * f_rq(s, &p),
                b.s_low - TAIL_SPAN,
                b.s_low,
                1e-12,
            )
            .unwrap()
            .value
                + integrate(
                    |s| kernel_real(omega, s.exp()) * f_rq(s, &p),
                    b.s_high,
                    b.s_high + TAIL_SPAN,
                    1e-12,
                )
                .unwrap()
                .value;
            assert!(real_outside <= 2.0 * delta + 1e-9);
        }
    }

    #[test]
    fn tail_estimates() {
        let sigma = 2f64.ln();
        let ln = LnProcess::new(0.0, sigma, 1.0).unwrap();
        let mass = tail_mass(|s| f_ln(s, &ln), -10.0 * sigma, 1e-22).unwrap();
        assert!(mass < 1e-20, "ten-sigma tail mass {mass}");

        let p = RqProcess::new(1.0, 0.5, 1.0).unwrap();
        let eps = tail_sup(|s| f_rq(s, &p), -7.0, 7.0).unwrap();
        assert_relative_eq!(eps, 1.0 / (2.0 * PI * 3.5f64.cosh()), max_relative = 1e-12);
        assert_relative_eq!(eps, f_rq(-7.0, &p), max_relative = 1e-12);

        assert!(tail_sup(|s| f_rq(s, &p), 2.0, 9.0).is_err());
    }

    #[test]
    fn quadrature_term_scales_inverse_square_in_n() {
        let ln = LnProcess::new(0.0, 2f64.ln(), 1.0).unwrap();
        let f = |s: f64| f_ln(s, &ln);
        let coarse = SGrid::uniform(-10.0, 10.0, 65).unwrap();
        let fine = SGrid::uniform(-10.0, 10.0, 130).unwrap();
        let b65 = total_error_bounds(&f, &coarse, 1.0).unwrap();
        let b130 = total_error_bounds(&f, &fine, 1.0).unwrap();
        assert!(b65.epsilon < 1e-40);
        let ratio = b65.e2_bound / b130.e2_bound;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        assert!(b65.e1_bound > 0.0 && b65.e1_bound.is_finite());
    }

    #[test]
    fn bounds_dominate_measured_error_for_mixture() {
        let freq = frequency_grid_default();
        let grid = crate::kernel::reciprocal_grid(&freq, 65).unwrap();
        let (_, mix) = dataset(DatasetName::A, ModelKind::Rq);
        let f = |s: f64| mix.f(s);

        let a1 = assemble(&freq, &grid, KernelTag::H1, QuadratureRule::TailCorrectedS).unwrap();
        let a2 = assemble(&freq, &grid, KernelTag::H2, QuadratureRule::TailCorrectedS).unwrap();
        let x = DVector::from_iterator(grid.n(), grid.s().iter().map(|&s| f(s)));
        let approx1 = &a1.matrix * &x;
        let approx2 = &a2.matrix * &x;

        for (j, &omega) in freq.omegas().iter().enumerate() {
            let report = total_error_bounds(&f, &grid, omega).unwrap();
            let oracle1 = integrate(
                |s: f64| kernel_real(omega, s.exp()) * f(s),
                grid.s1() - 80.0,
                grid.sn() + 80.0,
                1e-12,
            )
            .unwrap()
            .value;
            let oracle2 = integrate(
                |s: f64| kernel_imag(omega, s.exp()) * f(s),
                grid.s1() - 80.0,
                grid.sn() + 80.0,
                1e-12,
            )
            .unwrap()
            .value;
            let measured1 = (approx1[j] - oracle1).abs();
            let measured2 = (approx2[j] - oracle2).abs();
            assert!(
                measured1 <= report.e1_bound + 1e-13,
                "omega {omega}: measured {measured1} > bound {}",
                report.e1_bound
            );
            assert!(
                measured2 <= report.e2_bound + 1e-13,
                "omega {omega}: measured {measured2} > bound {}",
                report.e2_bound
            );
        }
    }

    #[test]
    fn error_curves_favor_the_s_rule() {
        let freq = frequency_grid_default();
        let grid = crate::kernel::reciprocal_grid(&freq, 65).unwrap();

        for t0 in [0.01, 0.1] {
            let p = RqProcess::new(t0, 0.5, 1.0).unwrap();
            let f = |s: f64| f_rq(s, &p);
            for kernel in [KernelTag::H1, KernelTag::H2] {
                let s_err =
                    quad_error_curve(&f, &freq, &grid, QuadratureRule::TrapS, kernel).unwrap();
                let t_err =
                    quad_error_curve(&f, &freq, &grid, QuadratureRule::TrapT, kernel).unwrap();
                let s_max = s_err.iter().cloned().fold(0.0, f64::max);
                let t_max = t_err.iter().cloned().fold(0.0, f64::max);
                assert!(s_max < 1e-4, "t0={t0} {kernel:?}: s-rule max {s_max}");
                assert!(s_max < t_max, "t0={t0} {kernel:?}: s {s_max} vs t {t_max}");
            }
        }

        let ln = LnProcess::new(0.1f64.ln(), 3f64.ln(), 1.0).unwrap();
        let f = |s: f64| f_ln(s, &ln);
        for kernel in [KernelTag::H1, KernelTag::H2] {
            let s_err = quad_error_curve(&f, &freq, &grid, QuadratureRule::TrapS, kernel).unwrap();
            let s_max = s_err.iter().cloned().fold(0.0, f64::max);
            assert!(s_max < 1e-5, "{kernel:?}: log-normal s-rule max {s_max}");
        }
    }

    #[test]
    fn condition_basics() {
        let eye = DMatrix::<f64>::identity(65, 65);
        assert_relative_eq!(condition_number(&eye).unwrap(), 1.0, max_relative = 1e-12);

        let mut rank_deficient = DMatrix::<f64>::zeros(6, 3);
        rank_deficient.set_column(0, &DVector::from_element(6, 1.0));
        rank_deficient.set_column(1, &DVector::from_element(6, 2.0));
        rank_deficient.set_column(2, &DVector::from_fn(6, |i, _| i as f64));
        assert!(condition_number(&rank_deficient).unwrap().is_infinite());
    }

    #[test]
    fn condition_is_row_permutation_invariant() {
        let freq = FrequencyGrid::log_spaced(1e-2, 1e5, 33).unwrap();
        let grid = crate::kernel::reciprocal_grid(&freq, 33).unwrap();
        let a = assemble(&freq, &grid, KernelTag::H1, QuadratureRule::TrapS)
            .unwrap()
            .matrix;
        let mut permuted = a.clone();
        permuted.swap_rows(0, 17);
        permuted.swap_rows(5, 29);
        let c1 = condition_number(&a).unwrap();
        let c2 = condition_number(&permuted).unwrap();
        assert_relative_eq!(c1, c2, max_relative = 1e-6);
    }

    #[test]
    fn basis_ncp_handles_degenerate_and_structured_input() {
        let eye = DMatrix::<f64>::identity(16, 16);
        let report = basis_ncp(&eye).unwrap();
        assert_eq!(report.u_noise_like.len(), 16);
        assert_eq!(report.v_noise_like.len(), 16);

        let freq = FrequencyGrid::log_spaced(1e-2, 1e5, 33).unwrap();
        let grid = crate::kernel::reciprocal_grid(&freq, 33).unwrap();
        let a = assemble(&freq, &grid, KernelTag::H1, QuadratureRule::TrapS)
            .unwrap()
            .matrix;
        let r1 = basis_ncp(&a).unwrap();
        let r2 = basis_ncp(&a).unwrap();
        assert_eq!(r1.first_noise_u, r2.first_noise_u);
        // Leading vectors of the smoothing kernel are structured.
        assert!(!r1.u_noise_like[0]);
        assert!(!r1.v_noise_like[0]);
    }

    #[test]
    fn peak_counting_ignores_crumbs() {
        let mut x = DVector::zeros(40);
        x[8] = 1.0;
        x[7] = 0.4;
        x[9] = 0.4;
        x[25] = 0.8;
        x[24] = 0.3;
        x[26] = 0.3;
        x[16] = 0.02;
        assert_eq!(count_peaks(&x, 1.0 / 3.0), 2);
        assert_eq!(peak_indices(&x, 1.0 / 3.0), vec![8, 25]);
        assert_eq!(count_peaks(&x, 0.0), 3);

        let ramp = DVector::from_fn(10, |i, _| i as f64);
        assert_eq!(count_peaks(&ramp, 0.0), 0);
    }
}
