//! Kernel matrices discretizing the impedance integral.
//!
//! The forward map takes density samples to impedance components through
//! the kernels h1(w, t) = 1/(1 + w^2 t^2) and h2(w, t) = w t/(1 + w^2 t^2).
//! Four quadrature rules are supported: a trapezoid in plain time, a
//! trapezoid in log-time, an extended variant without endpoint halving,
//! and a tail-corrected variant that accounts for the integral outside the
//! grid. Matrices built in log-time act on f-samples; the plain-time rule
//! acts on g-samples.

use nalgebra::DMatrix;

use crate::error::{DrtError, Result};

/// Real kernel component h1 = 1 / (1 + (w t)^2), in [0, 1].
pub fn kernel_real(omega: f64, t: f64) -> f64 {
    debug_assert!(omega >= 0.0 && t > 0.0);
    let wt = omega * t;
    1.0 / (1.0 + wt * wt)
}

/// Imaginary kernel component h2 = w t / (1 + (w t)^2), in [0, 1/2].
pub fn kernel_imag(omega: f64, t: f64) -> f64 {
    debug_assert!(omega >= 0.0 && t > 0.0);
    let wt = omega * t;
    wt / (1.0 + wt * wt)
}

/// Strictly increasing positive angular frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    /// Validates and wraps an explicit frequency list.
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(DrtError::Domain("frequency grid is empty".into()));
        }
        for pair in omegas.windows(2) {
            if !(pair[0] < pair[1]) {
                return Err(DrtError::Domain(
                    "frequencies must be strictly increasing".into(),
                ));
            }
        }
        if !(omegas[0] > 0.0) {
            return Err(DrtError::Domain("frequencies must be positive".into()));
        }
        Ok(Self { omegas })
    }

    /// `m` frequencies logarithmically spaced on [lo, hi], inclusive.
    pub fn log_spaced(lo: f64, hi: f64, m: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || m < 2 {
            return Err(DrtError::Domain(format!(
                "invalid logarithmic grid [{lo}, {hi}] with {m} points"
            )));
        }
        let (llo, lhi) = (lo.log10(), hi.log10());
        let omegas = (0..m)
            .map(|i| 10f64.powf(llo + (lhi - llo) * i as f64 / (m - 1) as f64))
            .collect();
        Self::new(omegas)
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn m(&self) -> usize {
        self.omegas.len()
    }

    pub fn min(&self) -> f64 {
        self.omegas[0]
    }

    pub fn max(&self) -> f64 {
        *self.omegas.last().unwrap()
    }
}

/// Equally spaced log-time nodes s_1 .. s_N.
#[derive(Debug, Clone, PartialEq)]
pub struct SGrid {
    s: Vec<f64>,
    delta_s: f64,
}

impl SGrid {
    /// `n` equally spaced nodes from `s1` to `s_n` inclusive.
    pub fn uniform(s1: f64, sn: f64, n: usize) -> Result<Self> {
        if n < 2 || !(sn > s1) {
            return Err(DrtError::Domain(format!(
                "invalid log-time grid [{s1}, {sn}] with {n} points"
            )));
        }
        let delta_s = (sn - s1) / (n - 1) as f64;
        let s = (0..n).map(|i| s1 + delta_s * i as f64).collect();
        Ok(Self { s, delta_s })
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    pub fn s1(&self) -> f64 {
        self.s[0]
    }

    pub fn sn(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// The time nodes t_n = exp(s_n).
    pub fn times(&self) -> Vec<f64> {
        self.s.iter().map(|&s| s.exp()).collect()
    }
}

/// Log-time grid reciprocal to a frequency grid: s runs from ln(1/w_max)
/// to ln(1/w_min) with `n_points` nodes.
pub fn reciprocal_grid(freq: &FrequencyGrid, n_points: usize) -> Result<SGrid> {
    SGrid::uniform((1.0 / freq.max()).ln(), (1.0 / freq.min()).ln(), n_points)
}

/// Quadrature rule used when assembling a kernel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Trapezoid on the plain-time nodes; acts on g-samples.
    TrapT,
    /// Trapezoid on the log-time nodes with halved end weights.
    TrapS,
    /// Log-time trapezoid without endpoint halving.
    ExtendedS,
    /// Log-time trapezoid plus analytic corrections for both tails.
    TailCorrectedS,
}

impl QuadratureRule {
    pub const ALL: [QuadratureRule; 4] = [
        QuadratureRule::TrapT,
        QuadratureRule::TrapS,
        QuadratureRule::ExtendedS,
        QuadratureRule::TailCorrectedS,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            QuadratureRule::TrapT => "trap-t",
            QuadratureRule::TrapS => "trap-s",
            QuadratureRule::ExtendedS => "extended-s",
            QuadratureRule::TailCorrectedS => "tail-corrected",
        }
    }
}

impl std::str::FromStr for QuadratureRule {
    type Err = DrtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trap-t" => Ok(QuadratureRule::TrapT),
            "trap-s" => Ok(QuadratureRule::TrapS),
            "extended-s" => Ok(QuadratureRule::ExtendedS),
            "tail-corrected" => Ok(QuadratureRule::TailCorrectedS),
            other => Err(DrtError::Config(format!("unknown quadrature rule {other:?}"))),
        }
    }
}

impl std::fmt::Display for QuadratureRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which kernel a matrix discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelTag {
    H1,
    H2,
    /// Both kernels stacked vertically, h1 block on top.
    Stacked,
}

impl KernelTag {
    pub fn name(&self) -> &'static str {
        match self {
            KernelTag::H1 => "h1",
            KernelTag::H2 => "h2",
            KernelTag::Stacked => "stacked",
        }
    }
}

/// A dense kernel matrix together with the grids and rule that built it.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub matrix: DMatrix<f64>,
    pub kernel: KernelTag,
    pub rule: QuadratureRule,
    pub freq: FrequencyGrid,
    pub sgrid: SGrid,
}

fn kernel_fn(tag: KernelTag) -> fn(f64, f64) -> f64 {
    match tag {
        KernelTag::H1 => kernel_real,
        KernelTag::H2 => kernel_imag,
        KernelTag::Stacked => unreachable!(),
    }
}

/// Left tail correction for the given kernel: the contribution below s_1.
///
/// For h2 the tail integral is analytic, arctan(w e^{s1}). For h1 the
/// integral below s_1 diverges, so a single linearly extrapolated half
/// panel of width delta_s is used instead.
fn tail_low(tag: KernelTag, omega: f64, s1: f64, delta_s: f64) -> f64 {
    match tag {
        KernelTag::H1 => 0.5 * delta_s * kernel_real(omega, s1.exp()),
        KernelTag::H2 => (omega * s1.exp()).atan(),
        KernelTag::Stacked => unreachable!(),
    }
}

/// Right tail correction: the analytic integral of the kernel above s_N.
fn tail_high(tag: KernelTag, omega: f64, sn: f64) -> f64 {
    let wt = omega * sn.exp();
    match tag {
        KernelTag::H1 => 0.5 * (1.0 + 1.0 / (wt * wt)).ln(),
        KernelTag::H2 => std::f64::consts::FRAC_PI_2 - wt.atan(),
        KernelTag::Stacked => unreachable!(),
    }
}

/// Assembles the M x N kernel matrix for one kernel under the given rule.
pub fn assemble(
    freq: &FrequencyGrid,
    sgrid: &SGrid,
    kernel: KernelTag,
    rule: QuadratureRule,
) -> Result<KernelMatrix> {
    if kernel == KernelTag::Stacked {
        return Err(DrtError::Config(
            "assemble builds single-kernel matrices; use stack for the combined system".into(),
        ));
    }
    let h = kernel_fn(kernel);
    let m = freq.m();
    let n = sgrid.n();
    let ds = sgrid.delta_s();
    let times = sgrid.times();
    let mut a = DMatrix::zeros(m, n);

    match rule {
        QuadratureRule::TrapT => {
            let mut weights = vec![0.0; n];
            weights[0] = 0.5 * (times[1] - times[0]);
            weights[n - 1] = 0.5 * (times[n - 1] - times[n - 2]);
            for j in 1..n - 1 {
                weights[j] = 0.5 * (times[j + 1] - times[j - 1]);
            }
            for i in 0..m {
                let w = freq.omegas()[i];
                for j in 0..n {
                    a[(i, j)] = weights[j] * h(w, times[j]);
                }
            }
        }
        QuadratureRule::TrapS | QuadratureRule::ExtendedS | QuadratureRule::TailCorrectedS => {
            let halve_ends = rule != QuadratureRule::ExtendedS;
            for i in 0..m {
                let w = freq.omegas()[i];
                for j in 0..n {
                    let mut weight = ds;
                    if halve_ends && (j == 0 || j == n - 1) {
                        weight *= 0.5;
                    }
                    a[(i, j)] = weight * h(w, times[j]);
                }
                if rule == QuadratureRule::TailCorrectedS {
                    a[(i, 0)] += tail_low(kernel, w, sgrid.s1(), ds);
                    a[(i, n - 1)] += tail_high(kernel, w, sgrid.sn());
                }
            }
        }
    }

    Ok(KernelMatrix {
        matrix: a,
        kernel,
        rule,
        freq: freq.clone(),
        sgrid: sgrid.clone(),
    })
}

/// Stacks the h1 and h2 matrices vertically into the 2M x N system.
pub fn stack(a1: &KernelMatrix, a2: &KernelMatrix) -> Result<KernelMatrix> {
    if a1.kernel != KernelTag::H1 || a2.kernel != KernelTag::H2 {
        return Err(DrtError::Config(
            "stack expects the h1 matrix first and the h2 matrix second".into(),
        ));
    }
    if a1.rule != a2.rule || a1.freq != a2.freq || a1.sgrid != a2.sgrid {
        return Err(DrtError::Dimension(
            "stacked blocks must share rule and grids".into(),
        ));
    }
    let m = a1.matrix.nrows();
    let n = a1.matrix.ncols();
    let mut s = DMatrix::zeros(2 * m, n);
    s.view_mut((0, 0), (m, n)).copy_from(&a1.matrix);
    s.view_mut((m, 0), (m, n)).copy_from(&a2.matrix);
    Ok(KernelMatrix {
        matrix: s,
        kernel: KernelTag::Stacked,
        rule: a1.rule,
        freq: a1.freq.clone(),
        sgrid: a1.sgrid.clone(),
    })
}

/// Builds the square 2M x 2M stacked system: the log-time grid is refined
/// to 2M nodes over the same reciprocal range, so both impedance
/// components constrain a solution of doubled resolution.
pub fn square_system(freq: &FrequencyGrid, rule: QuadratureRule) -> Result<KernelMatrix> {
    let sgrid = reciprocal_grid(freq, 2 * freq.m())?;
    let a1 = assemble(freq, &sgrid, KernelTag::H1, rule)?;
    let a2 = assemble(freq, &sgrid, KernelTag::H2, rule)?;
    stack(&a1, &a2)
}
