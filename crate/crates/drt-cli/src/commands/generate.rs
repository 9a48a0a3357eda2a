//! Writes synthetic impedance spectra: one exact file, one noisy file
//! per seed, and optionally the sampled truth density.

use anyhow::Result;
use drt_core::kernel::reciprocal_grid;
use drt_core::sim::{add_noise, dataset, exact_impedance};

use crate::config::{MatrixChoice, RunConfig};
use crate::export::{sci, write_csv};

use super::{ensure_out_dir, frequency_grid};

pub fn run(cfg: &RunConfig, truth: bool) -> Result<i32> {
    ensure_out_dir(cfg)?;
    let freq = frequency_grid(cfg)?;
    let (_, mix) = dataset(cfg.dataset, cfg.model);
    let exact = exact_impedance(&mix, &freq)?;
    let stem = cfg.stem();

    let header = ["omega", "z1", "z2"];
    let exact_rows: Vec<Vec<String>> = freq
        .omegas()
        .iter()
        .enumerate()
        .map(|(i, &w)| vec![sci(w), sci(exact.z1[i]), sci(exact.z2[i])])
        .collect();
    write_csv(&cfg.out_dir.join(format!("{stem}-exact.csv")), &header, exact_rows)?;

    let m = freq.m();
    let stacked = exact.stacked();
    for &seed in &cfg.seeds {
        let noisy = add_noise(&stacked, cfg.noise, seed)?;
        let rows: Vec<Vec<String>> = freq
            .omegas()
            .iter()
            .enumerate()
            .map(|(i, &w)| vec![sci(w), sci(noisy.b[i]), sci(noisy.b[m + i])])
            .collect();
        write_csv(
            &cfg.out_dir.join(format!("{stem}-noisy-seed{seed}.csv")),
            &header,
            rows,
        )?;
    }

    if truth {
        let n = match cfg.matrix {
            MatrixChoice::A4s => 2 * freq.m(),
            _ => freq.m(),
        };
        let grid = reciprocal_grid(&freq, n)?;
        let rows: Vec<Vec<String>> = grid
            .s()
            .iter()
            .map(|&s| vec![sci(s), sci(mix.f(s))])
            .collect();
        write_csv(&cfg.out_dir.join(format!("{stem}-truth.csv")), &["s", "f"], rows)?;
    }

    println!(
        "wrote {} file(s) to {}",
        cfg.seeds.len() + 1 + usize::from(truth),
        cfg.out_dir.display()
    );
    Ok(0)
}
