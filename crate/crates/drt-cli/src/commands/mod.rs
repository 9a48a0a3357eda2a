//! The subcommand implementations and the problem assembly they share.

pub mod analyze;
pub mod generate;
pub mod invert;
pub mod sweep;

use anyhow::{Context, Result};
use drt_core::kernel::{
    assemble, reciprocal_grid, square_system, stack, FrequencyGrid, KernelMatrix, KernelTag,
    QuadratureRule,
};
use drt_core::sim::{add_noise, dataset, exact_impedance, ExactMeasurement};
use nalgebra::DVector;

use crate::config::{MatrixChoice, RunConfig};

/// Everything a solve needs: the assembled system, the exact data
/// restricted to the rows the matrix uses, and the truth sampled in the
/// solution's own convention.
pub struct Assembled {
    pub freq: FrequencyGrid,
    pub km: KernelMatrix,
    pub exact: ExactMeasurement,
    /// Noise-free right-hand side matching the matrix rows.
    pub data: DVector<f64>,
    /// Density samples on the solution grid: f(s_j) for log-time
    /// matrices, g(t_j) = f(s_j)/t_j for plain-time ones.
    pub truth: DVector<f64>,
}

pub fn frequency_grid(cfg: &RunConfig) -> Result<FrequencyGrid> {
    let full = FrequencyGrid::log_spaced(1e-2, 1e5, cfg.freqs)?;
    if cfg.drop_first {
        Ok(FrequencyGrid::new(full.omegas()[1..].to_vec())?)
    } else {
        Ok(full)
    }
}

pub fn build_matrix(
    cfg: &RunConfig,
    freq: &FrequencyGrid,
) -> drt_core::Result<KernelMatrix> {
    let grid = reciprocal_grid(freq, freq.m())?;
    match cfg.matrix {
        MatrixChoice::A1 => assemble(freq, &grid, KernelTag::H1, QuadratureRule::TrapT),
        MatrixChoice::A2 => assemble(freq, &grid, KernelTag::H2, QuadratureRule::TrapT),
        MatrixChoice::A1s => assemble(freq, &grid, KernelTag::H1, cfg.rule),
        MatrixChoice::A2s => assemble(freq, &grid, KernelTag::H2, cfg.rule),
        MatrixChoice::A3s => {
            let a1 = assemble(freq, &grid, KernelTag::H1, cfg.rule)?;
            let a2 = assemble(freq, &grid, KernelTag::H2, cfg.rule)?;
            stack(&a1, &a2)
        }
        MatrixChoice::A4s => square_system(freq, cfg.rule),
    }
}

/// Restricts a stacked [Z1; Z2] vector to the rows the matrix solves.
fn select_rows(cfg: &RunConfig, stacked: &DVector<f64>) -> DVector<f64> {
    let m = stacked.len() / 2;
    match cfg.matrix {
        MatrixChoice::A1 | MatrixChoice::A1s => stacked.rows(0, m).clone_owned(),
        MatrixChoice::A2 | MatrixChoice::A2s => stacked.rows(m, m).clone_owned(),
        MatrixChoice::A3s | MatrixChoice::A4s => stacked.clone(),
    }
}

pub fn assemble_problem(cfg: &RunConfig) -> Result<Assembled> {
    let freq = frequency_grid(cfg)?;
    let (_, mix) = dataset(cfg.dataset, cfg.model);
    let exact = exact_impedance(&mix, &freq).context("evaluating the exact impedance")?;
    let km = build_matrix(cfg, &freq)?;
    let data = select_rows(cfg, &exact.stacked());
    let truth = DVector::from_iterator(
        km.sgrid.n(),
        km.sgrid.s().iter().map(|&s| {
            if cfg.matrix.is_log_time() {
                mix.f(s)
            } else {
                mix.f(s) / s.exp()
            }
        }),
    );
    Ok(Assembled {
        freq,
        km,
        exact,
        data,
        truth,
    })
}

impl Assembled {
    /// The noisy right-hand side for one seed, restricted like `data`.
    pub fn noisy_data(&self, cfg: &RunConfig, seed: u64) -> drt_core::Result<DVector<f64>> {
        let noisy = add_noise(&self.exact.stacked(), cfg.noise, seed)?;
        Ok(select_rows(cfg, &noisy.b))
    }

    /// The noise alone, for sweep cells that add it to the exact data.
    pub fn noise_only(&self, cfg: &RunConfig, seed: u64) -> drt_core::Result<DVector<f64>> {
        let full = drt_core::sim::noise_vector(2 * self.freq.m(), cfg.noise, seed)?;
        Ok(select_rows(cfg, &full))
    }
}

pub fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating output directory {}", cfg.out_dir.display()))
}
