//! Relaxation-time distribution models and their impedances.
//!
//! Two families are supported: the RQ distribution, which has an analytic
//! impedance, and the log-normal distribution, whose impedance must be
//! integrated numerically. Densities are available in plain time `g(t)`
//! and in log-time `f(s)` with `s = ln t`; the two are tied by
//! `f(s) = e^s * g(e^s)`.

use num_complex::Complex64;

use crate::error::{DrtError, Result};
use crate::integrate::integrate;

/// A single RQ relaxation process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RqProcess {
    /// Characteristic time in seconds, strictly positive.
    pub t0: f64,
    /// Shape parameter in (0, 1]; 1 collapses the density onto t0.
    pub beta: f64,
    /// Non-negative weight of this process in a mixture.
    pub alpha: f64,
}

impl RqProcess {
    /// Validates the parameter ranges and builds the process.
    pub fn new(t0: f64, beta: f64, alpha: f64) -> Result<Self> {
        if !(t0 > 0.0) {
            return Err(DrtError::Domain(format!("t0 must be positive, got {t0}")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(DrtError::Domain(format!(
                "beta must lie in (0, 1], got {beta}"
            )));
        }
        if !(alpha >= 0.0) {
            return Err(DrtError::Domain(format!(
                "alpha must be non-negative, got {alpha}"
            )));
        }
        Ok(Self { t0, beta, alpha })
    }
}

/// A single log-normal relaxation process, parameterized in log-time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnProcess {
    /// Center of the Gaussian in s = ln t.
    pub mu: f64,
    /// Spread of the Gaussian, strictly positive.
    pub sigma: f64,
    /// Non-negative weight of this process in a mixture.
    pub alpha: f64,
}

impl LnProcess {
    /// Validates the parameter ranges and builds the process.
    pub fn new(mu: f64, sigma: f64, alpha: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(DrtError::Domain(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !(alpha >= 0.0) {
            return Err(DrtError::Domain(format!(
                "alpha must be non-negative, got {alpha}"
            )));
        }
        Ok(Self { mu, sigma, alpha })
    }

    /// The mode of the time-domain density g(t), at t = exp(mu - sigma^2).
    pub fn mode_time(&self) -> f64 {
        (self.mu - self.sigma * self.sigma).exp()
    }

    /// Builds a process whose time-domain density peaks at `t0`
    /// (mu = ln t0 + sigma^2).
    pub fn with_mode(t0: f64, sigma: f64, alpha: f64) -> Result<Self> {
        if !(t0 > 0.0) {
            return Err(DrtError::Domain(format!("t0 must be positive, got {t0}")));
        }
        Self::new(t0.ln() + sigma * sigma, sigma, alpha)
    }
}

/// A relaxation process of either family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Process {
    Rq(RqProcess),
    Ln(LnProcess),
}

impl Process {
    /// Weight of the process.
    pub fn alpha(&self) -> f64 {
        match self {
            Process::Rq(p) => p.alpha,
            Process::Ln(p) => p.alpha,
        }
    }

    /// Log-time density f(s), weighted by alpha.
    pub fn f(&self, s: f64) -> f64 {
        match self {
            Process::Rq(p) => f_rq(s, p),
            Process::Ln(p) => f_ln(s, p),
        }
    }

    /// Center of the density in s (the location of the f-peak).
    pub fn center(&self) -> f64 {
        match self {
            Process::Rq(p) => p.t0.ln(),
            Process::Ln(p) => p.mu,
        }
    }
}

/// A weighted mixture of relaxation processes with the series and
/// polarization resistances of the impedance model
/// Z(w) = R0 + Rpol * integral of g(t) / (1 + i w t) dt.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMix {
    pub processes: Vec<Process>,
    /// Series resistance R0.
    pub r0: f64,
    /// Polarization resistance Rpol.
    pub rpol: f64,
}

impl ProcessMix {
    /// Builds a mixture; weights need not sum to one.
    pub fn new(processes: Vec<Process>, r0: f64, rpol: f64) -> Result<Self> {
        if processes.is_empty() {
            return Err(DrtError::Domain("mixture needs at least one process".into()));
        }
        Ok(Self { processes, r0, rpol })
    }

    /// Total weight of the mixture.
    pub fn total_alpha(&self) -> f64 {
        self.processes.iter().map(Process::alpha).sum()
    }

    /// Mixture log-time density f(s).
    pub fn f(&self, s: f64) -> f64 {
        self.processes.iter().map(|p| p.f(s)).sum()
    }

    /// Mixture time density g(t).
    pub fn g(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(DrtError::Domain(format!("t must be positive, got {t}")));
        }
        Ok(self.f(t.ln()) / t)
    }
}

/// RQ time-domain density
/// g(t) = alpha/(2 pi t) * sin(beta pi) / (cosh(beta ln(t/t0)) + cos(beta pi)).
pub fn g_rq(t: f64, p: &RqProcess) -> Result<f64> {
    if !(t > 0.0) {
        return Err(DrtError::Domain(format!("t must be positive, got {t}")));
    }
    Ok(f_rq(t.ln(), p) / t)
}

/// RQ log-time density
/// f(s) = alpha/(2 pi) * sin(beta pi) / (cosh(beta (s - ln t0)) + cos(beta pi)).
pub fn f_rq(s: f64, p: &RqProcess) -> f64 {
    let bp = p.beta * std::f64::consts::PI;
    let d = p.beta * (s - p.t0.ln());
    p.alpha / (2.0 * std::f64::consts::PI) * bp.sin() / (d.cosh() + bp.cos())
}

/// Log-normal time-domain density g(t) = f(ln t) / t.
pub fn g_ln(t: f64, p: &LnProcess) -> Result<f64> {
    if !(t > 0.0) {
        return Err(DrtError::Domain(format!("t must be positive, got {t}")));
    }
    Ok(f_ln(t.ln(), p) / t)
}

/// Log-normal log-time density, a Gaussian in s:
/// f(s) = alpha / (sigma sqrt(2 pi)) * exp(-(s - mu)^2 / (2 sigma^2)).
pub fn f_ln(s: f64, p: &LnProcess) -> f64 {
    let z = (s - p.mu) / p.sigma;
    p.alpha / (p.sigma * (2.0 * std::f64::consts::PI).sqrt()) * (-0.5 * z * z).exp()
}

/// Analytic impedance of a single RQ process,
/// Z(w) = alpha / (1 + (i w t0)^beta) with the principal branch of the
/// complex power. Returned as Z = Z1 - i Z2 with Z1, Z2 >= 0 for w >= 0.
pub fn z_rq_analytic(omega: f64, p: &RqProcess) -> Result<Complex64> {
    if !(omega >= 0.0) {
        return Err(DrtError::Domain(format!(
            "omega must be non-negative, got {omega}"
        )));
    }
    if omega == 0.0 {
        return Ok(Complex64::new(p.alpha, 0.0));
    }
    // (i w t0)^beta = (w t0)^beta * exp(i beta pi / 2)
    let mag = (omega * p.t0).powf(p.beta);
    let arg = p.beta * std::f64::consts::FRAC_PI_2;
    let denom = Complex64::new(1.0 + mag * arg.cos(), mag * arg.sin());
    Ok(Complex64::new(p.alpha, 0.0) / denom)
}

/// Shape parameter beta that aligns an RQ process with a log-normal of
/// spread sigma: beta = (2/pi) atan(sqrt(2 pi)/sigma * exp(-sigma^2/2)).
///
/// With this beta and a common time-domain mode, the two densities match
/// in both mode location and mode height.
pub fn beta_for_sigma(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(DrtError::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let inner = (2.0 * std::f64::consts::PI).sqrt() / sigma * (-0.5 * sigma * sigma).exp();
    Ok(2.0 / std::f64::consts::PI * inner.atan())
}

/// Finds [lo, hi] such that the mixture density falls below
/// `rel_floor` times its peak outside the interval.
pub(crate) fn support_range(mix: &ProcessMix, rel_floor: f64) -> Result<(f64, f64)> {
    let centers: Vec<f64> = mix.processes.iter().map(Process::center).collect();
    let peak = centers
        .iter()
        .map(|&c| mix.f(c))
        .fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(DrtError::Domain(
            "mixture density has no positive peak".into(),
        ));
    }
    let floor = rel_floor * peak;
    let step = 0.5;
    let mut lo = centers.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = centers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut guard = 0;
    while mix.f(lo) > floor {
        lo -= step;
        guard += 1;
        if guard > 10_000 {
            return Err(DrtError::Domain(
                "mixture density does not decay on the left".into(),
            ));
        }
    }
    guard = 0;
    while mix.f(hi) > floor {
        hi += step;
        guard += 1;
        if guard > 10_000 {
            return Err(DrtError::Domain(
                "mixture density does not decay on the right".into(),
            ));
        }
    }
    Ok((lo, hi))
}

/// Numerical impedance of an arbitrary mixture,
/// Z(w) = R0 + Rpol * integral of f(s) / (1 + i w e^s) ds,
/// integrated adaptively over the range where f exceeds 1e-16 of its peak,
/// to an absolute tolerance of 1e-12 per component.
///
/// This is the reference oracle for all quadrature-error studies.
pub fn z_numeric(mix: &ProcessMix, omega: f64) -> Result<Complex64> {
    if !(omega >= 0.0) {
        return Err(DrtError::Domain(format!(
            "omega must be non-negative, got {omega}"
        )));
    }
    let (lo, hi) = support_range(mix, 1e-16)?;
    let tol = 1e-12;
    let real = integrate(
        |s| {
            let wt = omega * s.exp();
            mix.f(s) / (1.0 + wt * wt)
        },
        lo,
        hi,
        tol,
    )?;
    let imag = integrate(
        |s| {
            let wt = omega * s.exp();
            mix.f(s) * wt / (1.0 + wt * wt)
        },
        lo,
        hi,
        tol,
    )?;
    Ok(Complex64::new(
        mix.r0 + mix.rpol * real.value,
        -mix.rpol * imag.value,
    ))
}
