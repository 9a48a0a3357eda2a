//! Numerical diagnostics: conditioning tables, Picard triples,
//! per-frequency quadrature error curves, and singular-basis whiteness.

use anyhow::Result;
use drt_core::analysis::{basis_ncp, condition_table, default_t_ranges, quad_error_curve};
use drt_core::kernel::{reciprocal_grid, KernelTag, QuadratureRule};
use drt_core::models::{f_ln, f_rq, LnProcess, RqProcess};
use drt_core::sim::ModelKind;
use drt_core::tikhonov::{picard_data, thin_svd};

use crate::config::RunConfig;
use crate::export::{sci, write_csv};

use super::{assemble_problem, ensure_out_dir, frequency_grid};

pub fn condition(cfg: &RunConfig) -> Result<i32> {
    ensure_out_dir(cfg)?;
    let freq = frequency_grid(cfg)?;
    let rows = condition_table(&freq, &default_t_ranges(), freq.m())?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                sci(r.t_min),
                sci(r.t_max),
                sci(r.cond_a1),
                sci(r.cond_a2),
                sci(r.cond_a1s),
                sci(r.cond_a2s),
            ]
        })
        .collect();
    write_csv(
        &cfg.out_dir.join("condition.csv"),
        &["t_min", "t_max", "cond_a1", "cond_a2", "cond_a1s", "cond_a2s"],
        csv_rows,
    )?;
    println!("wrote condition.csv ({} ranges)", rows.len());
    Ok(0)
}

pub fn picard(cfg: &RunConfig) -> Result<i32> {
    ensure_out_dir(cfg)?;
    let asm = assemble_problem(cfg)?;
    let data = asm.noisy_data(cfg, cfg.seeds[0])?;
    let triples = picard_data(&asm.km.matrix, &data)?;
    let rows: Vec<Vec<String>> = triples
        .iter()
        .enumerate()
        .map(|(i, t)| {
            vec![
                i.to_string(),
                sci(t.sigma),
                sci(t.coefficient),
                sci(t.ratio),
            ]
        })
        .collect();
    let name = format!("picard-{}.csv", cfg.matrix.name());
    write_csv(
        &cfg.out_dir.join(&name),
        &["index", "sigma", "coefficient", "ratio"],
        rows,
    )?;
    println!("wrote {name} ({} triples)", triples.len());
    Ok(0)
}

pub fn quad_error(cfg: &RunConfig, t0: f64, beta: f64, sigma: f64) -> Result<i32> {
    ensure_out_dir(cfg)?;
    let freq = frequency_grid(cfg)?;
    let grid = reciprocal_grid(&freq, freq.m())?;

    let density: Box<dyn Fn(f64) -> f64> = match cfg.model {
        ModelKind::Rq => {
            let p = RqProcess::new(t0, beta, 1.0)?;
            Box::new(move |s| f_rq(s, &p))
        }
        ModelKind::Ln => {
            let p = LnProcess::new(t0.ln(), sigma, 1.0)?;
            Box::new(move |s| f_ln(s, &p))
        }
    };

    let mut columns = Vec::new();
    let mut header = vec!["omega".to_string()];
    for rule in QuadratureRule::ALL {
        for kernel in [KernelTag::H1, KernelTag::H2] {
            header.push(format!("{}-{}", rule.name(), kernel.name()));
            columns.push(quad_error_curve(&density, &freq, &grid, rule, kernel)?);
        }
    }
    let rows: Vec<Vec<String>> = freq
        .omegas()
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let mut row = vec![sci(w)];
            row.extend(columns.iter().map(|c| sci(c[i])));
            row
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let name = format!(
        "quad-error-{}-t0-{t0}.csv",
        cfg.model.to_string().to_lowercase()
    );
    write_csv(&cfg.out_dir.join(&name), &header_refs, rows)?;
    println!("wrote {name}");
    Ok(0)
}

pub fn basis(cfg: &RunConfig) -> Result<i32> {
    ensure_out_dir(cfg)?;
    let asm = assemble_problem(cfg)?;
    let verdicts = basis_ncp(&asm.km.matrix)?;
    let svd = thin_svd(&asm.km.matrix)?;
    let rows: Vec<Vec<String>> = (0..verdicts.u_noise_like.len())
        .map(|i| {
            vec![
                i.to_string(),
                sci(svd.sigma[i]),
                verdicts.u_noise_like[i].to_string(),
                verdicts.v_noise_like[i].to_string(),
            ]
        })
        .collect();
    let name = format!("basis-ncp-{}.csv", cfg.matrix.name());
    write_csv(
        &cfg.out_dir.join(&name),
        &["index", "sigma", "u_noise_like", "v_noise_like"],
        rows,
    )?;
    let show = |o: Option<usize>| o.map_or("none".to_string(), |i| i.to_string());
    println!(
        "wrote {name}; first noise-like u {} v {}",
        show(verdicts.first_noise_u),
        show(verdicts.first_noise_v)
    );
    Ok(0)
}
