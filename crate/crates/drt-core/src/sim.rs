//! Synthetic test datasets: relaxation-time mixtures with tabulated
//! parameters, their exact impedance spectra, and seeded white-noise
//! realizations.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rand_distr::StandardNormal;

use crate::error::{DrtError, Result};
use crate::kernel::FrequencyGrid;
use crate::models::{z_numeric, z_rq_analytic, LnProcess, Process, ProcessMix, RqProcess};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetName {
    A,
    B,
    C,
}

impl std::str::FromStr for DatasetName {
    type Err = DrtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Self::A),
            "B" | "b" => Ok(Self::B),
            "C" | "c" => Ok(Self::C),
            other => Err(DrtError::Config(format!(
                "unknown dataset '{other}', expected A, B, or C"
            ))),
        }
    }
}

impl std::fmt::Display for DatasetName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::A => "A",
            Self::B => "B",
            Self::C => "C",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Rq,
    Ln,
}

impl std::str::FromStr for ModelKind {
    type Err = DrtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rq" => Ok(Self::Rq),
            "ln" => Ok(Self::Ln),
            other => Err(DrtError::Config(format!(
                "unknown model '{other}', expected RQ or LN"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Rq => "RQ",
            Self::Ln => "LN",
        })
    }
}

/// Tabulated parameters of one synthetic dataset.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub name: DatasetName,
    pub model: ModelKind,
    pub t0: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub alpha: Vec<f64>,
}

/// Builds a named dataset for the chosen distribution model.
///
/// The depressed-arc datasets use the tabulated (t0, beta) pairs; the
/// log-normal variants center each process at mu = ln(t0) with the
/// tabulated sigma. Weights sum to one in every case so the polarization
/// resistance is normalized.
pub fn dataset(name: DatasetName, model: ModelKind) -> (DatasetSpec, ProcessMix) {
    let (t0, beta, sigma, alpha): (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) = match name {
        DatasetName::A => (
            vec![10f64.powf(-3.5), 10f64.powf(0.5)],
            vec![0.8, 0.8],
            vec![2f64.ln(), 2f64.ln()],
            vec![0.5, 0.5],
        ),
        DatasetName::B => (
            vec![10f64.powf(-1.5), 10f64.powf(-0.5)],
            vec![0.7, 0.8],
            vec![2.4f64.ln(), 2f64.ln()],
            vec![0.35, 0.65],
        ),
        DatasetName::C => (
            vec![1e-3, 1.0, 10.0],
            vec![0.8, 0.7, 0.7],
            vec![2f64.ln(), 2.1f64.ln(), 2.2f64.ln()],
            vec![0.6, 0.2, 0.2],
        ),
    };
    let processes: Vec<Process> = match model {
        ModelKind::Rq => t0
            .iter()
            .zip(&beta)
            .zip(&alpha)
            .map(|((&t0, &beta), &alpha)| {
                Process::Rq(RqProcess::new(t0, beta, alpha).expect("tabulated parameters"))
            })
            .collect(),
        ModelKind::Ln => t0
            .iter()
            .zip(&sigma)
            .zip(&alpha)
            .map(|((&t0, &sigma), &alpha)| {
                Process::Ln(LnProcess::new(t0.ln(), sigma, alpha).expect("tabulated parameters"))
            })
            .collect(),
    };
    let mix = ProcessMix::new(processes, 0.0, 1.0).expect("tabulated mixes are non-empty");
    let spec = DatasetSpec {
        name,
        model,
        t0,
        beta,
        sigma,
        alpha,
    };
    (spec, mix)
}

/// 65 angular frequencies logarithmically spaced over [1e-2, 1e5] rad/s.
pub fn frequency_grid_default() -> FrequencyGrid {
    FrequencyGrid::log_spaced(1e-2, 1e5, 65).expect("constants form a valid grid")
}

/// Noise-free impedance samples split into real part and negated
/// imaginary part.
#[derive(Debug, Clone)]
pub struct ExactMeasurement {
    pub freq: FrequencyGrid,
    pub z1: DVector<f64>,
    pub z2: DVector<f64>,
}

impl ExactMeasurement {
    /// The stacked data vector [Z1; Z2] of length 2M.
    pub fn stacked(&self) -> DVector<f64> {
        let m = self.z1.len();
        let mut b = DVector::zeros(2 * m);
        b.rows_mut(0, m).copy_from(&self.z1);
        b.rows_mut(m, m).copy_from(&self.z2);
        b
    }
}

/// Exact impedance of a mixture on a frequency grid.
///
/// Depressed-arc processes use the closed form; log-normal processes go
/// through the numeric transform.
pub fn exact_impedance(mix: &ProcessMix, freq: &FrequencyGrid) -> Result<ExactMeasurement> {
    let m = freq.m();
    let mut z1 = DVector::zeros(m);
    let mut z2 = DVector::zeros(m);
    for (j, &omega) in freq.omegas().iter().enumerate() {
        let mut z = num_complex::Complex64::new(mix.r0, 0.0);
        for p in mix.processes.iter() {
            let contribution = match p {
                Process::Rq(rq) => z_rq_analytic(omega, rq)?,
                Process::Ln(_) => {
                    let single = ProcessMix::new(vec![p.clone()], 0.0, 1.0)?;
                    z_numeric(&single, omega)?
                }
            };
            z += mix.rpol * contribution;
        }
        z1[j] = z.re;
        z2[j] = -z.im;
    }
    Ok(ExactMeasurement {
        freq: freq.clone(),
        z1,
        z2,
    })
}

/// One seeded noise realization added to an exact stacked data vector.
#[derive(Debug, Clone)]
pub struct NoisyMeasurement {
    pub b: DVector<f64>,
    pub eta: f64,
    pub seed: u64,
    pub exact: DVector<f64>,
}

/// A standard-normal vector scaled by eta, drawn from the stream with
/// the given seed. Each realization index gets its own stream so runs
/// are reproducible regardless of evaluation order.
pub fn noise_vector(len: usize, eta: f64, seed: u64) -> Result<DVector<f64>> {
    if !(eta >= 0.0) {
        return Err(DrtError::Domain(format!(
            "noise level must be non-negative, got {eta}"
        )));
    }
    if eta == 0.0 {
        return Ok(DVector::zeros(len));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(DVector::from_fn(len, |_, _| {
        let e: f64 = StandardNormal.sample(&mut rng);
        eta * e
    }))
}

/// Adds white noise at level eta to an exact stacked vector.
pub fn add_noise(exact: &DVector<f64>, eta: f64, seed: u64) -> Result<NoisyMeasurement> {
    let noise = noise_vector(exact.len(), eta, seed)?;
    Ok(NoisyMeasurement {
        b: exact + &noise,
        eta,
        seed,
        exact: exact.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::integrate;
    use crate::kernel::reciprocal_grid;
    use approx::assert_relative_eq;

    const ALL_COMBOS: [(DatasetName, ModelKind); 6] = [
        (DatasetName::A, ModelKind::Rq),
        (DatasetName::A, ModelKind::Ln),
        (DatasetName::B, ModelKind::Rq),
        (DatasetName::B, ModelKind::Ln),
        (DatasetName::C, ModelKind::Rq),
        (DatasetName::C, ModelKind::Ln),
    ];

    #[test]
    fn tabulated_parameters() {
        let (spec, mix) = dataset(DatasetName::A, ModelKind::Rq);
        assert_eq!(spec.t0, vec![10f64.powf(-3.5), 10f64.powf(0.5)]);
        assert_eq!(spec.alpha, vec![0.5, 0.5]);
        assert_eq!(mix.processes.len(), 2);
        for p in mix.processes.iter() {
            assert!(matches!(p, Process::Rq(_)));
        }

        let (_, mix_c) = dataset(DatasetName::C, ModelKind::Ln);
        let mus: Vec<f64> = mix_c
            .processes
            .iter()
            .map(|p| match p {
                Process::Ln(ln) => ln.mu,
                _ => panic!("expected log-normal"),
            })
            .collect();
        assert_eq!(mus, vec![1e-3f64.ln(), 0.0, 10f64.ln()]);

        assert!("D".parse::<DatasetName>().is_err());
        assert_eq!("rq".parse::<ModelKind>().unwrap(), ModelKind::Rq);
    }

    #[test]
    fn truth_density_has_unit_mass() {
        for (name, model) in ALL_COMBOS {
            let (_, mix) = dataset(name, model);
            let mass = integrate(|s| mix.f(s), -45.0, 45.0, 1e-8).unwrap().value;
            assert_relative_eq!(mass, 1.0, max_relative = 1e-7);
        }
    }

    #[test]
    fn exact_impedance_endpoints_and_monotonicity() {
        let freq = frequency_grid_default();
        assert_eq!(freq.m(), 65);
        assert_eq!(freq.min(), 1e-2);
        assert_eq!(freq.max(), 1e5);
        for (name, model) in ALL_COMBOS {
            let (_, mix) = dataset(name, model);
            let exact = exact_impedance(&mix, &freq).unwrap();
            for j in 1..65 {
                assert!(
                    exact.z1[j] <= exact.z1[j - 1] + 1e-12,
                    "{name}/{model}: real part rose at index {j}"
                );
            }
            for j in 0..65 {
                assert!(exact.z2[j] >= -1e-12);
            }
            let b = exact.stacked();
            assert_eq!(b.len(), 130);
            assert_eq!(b[0], exact.z1[0]);
            assert_eq!(b[65], exact.z2[0]);
        }
    }

    #[test]
    fn impedance_approaches_polarization_resistance_at_dc() {
        for (name, model) in ALL_COMBOS {
            let (_, mix) = dataset(name, model);
            let z = z_numeric(&mix, 1e-10).unwrap();
            assert!(
                (z.re - 1.0).abs() < 1e-5 && z.im.abs() < 1e-5,
                "{name}/{model}: Z(1e-10) = {z}"
            );
        }
    }

    #[test]
    fn model_variants_peak_at_matching_grid_nodes() {
        let freq = frequency_grid_default();
        let sgrid = reciprocal_grid(&freq, 65).unwrap();
        let centers_a = [10f64.powf(-3.5).ln(), 10f64.powf(0.5).ln()];
        for model in [ModelKind::Rq, ModelKind::Ln] {
            let (_, mix) = dataset(DatasetName::A, model);
            for &c in &centers_a {
                let (mut best_s, mut best_f) = (f64::NAN, f64::NEG_INFINITY);
                for &s in sgrid.s() {
                    if (s - c).abs() < 2.0 {
                        let v = mix.f(s);
                        if v > best_f {
                            best_f = v;
                            best_s = s;
                        }
                    }
                }
                assert!(
                    (best_s - c).abs() <= sgrid.delta_s() + 1e-12,
                    "{model}: peak at {best_s}, center {c}"
                );
            }
        }
    }

    #[test]
    fn noise_is_seeded_and_scaled() {
        let freq = frequency_grid_default();
        let (_, mix) = dataset(DatasetName::A, ModelKind::Rq);
        let exact = exact_impedance(&mix, &freq).unwrap().stacked();

        let clean = add_noise(&exact, 0.0, 7).unwrap();
        assert_eq!(clean.b, exact);

        let n1 = add_noise(&exact, 1e-3, 3).unwrap();
        let n2 = add_noise(&exact, 1e-3, 3).unwrap();
        assert_eq!(n1.b, n2.b);
        assert_ne!(n1.b, add_noise(&exact, 1e-3, 4).unwrap().b);

        let eta = 1e-3;
        let mut pooled = 0.0;
        let mut count = 0usize;
        for seed in 0..50 {
            let noisy = add_noise(&exact, eta, seed).unwrap();
            let diff = &noisy.b - &noisy.exact;
            pooled += diff.norm_squared();
            count += diff.len();

            let std = (diff.norm_squared() / (diff.len() as f64 - 1.0)).sqrt();
            assert!(
                (std - eta).abs() < 0.2 * eta,
                "seed {seed}: std {std} vs eta {eta}"
            );
        }
        let pooled_std = (pooled / count as f64).sqrt();
        assert!((pooled_std - eta).abs() < 0.03 * eta, "pooled std {pooled_std}");
    }
}
