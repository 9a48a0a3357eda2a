//! Flag and file handling. Every run is described by a [`RunConfig`];
//! values come from command-line flags, then a TOML config file, then
//! built-in defaults mirroring the standard protocol (65 frequencies,
//! the square tail-corrected system, 0.1% noise, p=0.2, a 50-point
//! lambda grid).

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use drt_core::kernel::QuadratureRule;
use drt_core::select::LambdaGrid;
use drt_core::sim::{DatasetName, ModelKind};
use drt_core::solver::SOLVER_NAMES;
use serde::Deserialize;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DRT_OUT_DIR";

/// A bad flag or config value; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Which assembled system the solver runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixChoice {
    /// Real kernel, plain-time quadrature, M x N.
    A1,
    /// Imaginary kernel, plain-time quadrature.
    A2,
    /// Real kernel on the log-time grid.
    A1s,
    /// Imaginary kernel on the log-time grid.
    A2s,
    /// Both kernels stacked, 2M x N.
    A3s,
    /// Both kernels stacked on a doubled grid, 2M x 2M.
    A4s,
}

impl MatrixChoice {
    pub const ALL: [MatrixChoice; 6] = [
        MatrixChoice::A1,
        MatrixChoice::A2,
        MatrixChoice::A1s,
        MatrixChoice::A2s,
        MatrixChoice::A3s,
        MatrixChoice::A4s,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatrixChoice::A1 => "a1",
            MatrixChoice::A2 => "a2",
            MatrixChoice::A1s => "a1s",
            MatrixChoice::A2s => "a2s",
            MatrixChoice::A3s => "a3s",
            MatrixChoice::A4s => "a4s",
        }
    }

    /// Log-time variants take whichever s-space rule is configured; the
    /// plain-time ones are defined by the time trapezoid.
    pub fn is_log_time(self) -> bool {
        !matches!(self, MatrixChoice::A1 | MatrixChoice::A2)
    }
}

impl std::str::FromStr for MatrixChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let lower = s.to_ascii_lowercase();
        MatrixChoice::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| format!("unknown matrix '{s}', expected one of a1, a2, a1s, a2s, a3s, a4s"))
    }
}

/// How the regularization parameter is chosen for a single inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    Fixed(f64),
    Ncp,
    LCurve,
}

impl Selection {
    pub fn label(self) -> &'static str {
        match self {
            Selection::Fixed(_) => "fixed",
            Selection::Ncp => "ncp",
            Selection::LCurve => "lcurve",
        }
    }
}

/// Flags shared by every subcommand. All are optional; a missing flag
/// falls back to the config file, then to the defaults.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its keys
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Dataset: A, B, or C
    #[arg(long, global = true)]
    pub dataset: Option<String>,
    /// Distribution model: rq or ln
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// System matrix: a1, a2, a1s, a2s, a3s, or a4s
    #[arg(long, global = true)]
    pub matrix: Option<String>,
    /// Quadrature rule for log-time matrices: trap-s, extended-s, or tail-corrected
    #[arg(long, global = true)]
    pub rule: Option<String>,
    /// Smoothing operator order: 0 (identity), 1, or 2
    #[arg(long, global = true)]
    pub l_order: Option<usize>,
    /// Solver: lls or nnls
    #[arg(long, global = true)]
    pub solver: Option<String>,
    /// Noise level applied to the exact impedance
    #[arg(long, global = true)]
    pub noise: Option<f64>,
    /// Seeds: an inclusive range "0..49", a list "0,3,7", or a single value
    #[arg(long, global = true)]
    pub seeds: Option<String>,
    /// Output directory (defaults to $DRT_OUT_DIR, then the working directory)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Whiteness-test level in (0,1)
    #[arg(long, global = true)]
    pub p_level: Option<f64>,
    /// Number of logarithmically spaced frequencies on [1e-2, 1e5]
    #[arg(long, global = true)]
    pub freqs: Option<usize>,
    /// Drop the lowest frequency before assembling
    #[arg(long, global = true)]
    pub drop_first: bool,
    /// Smallest parameter-grid value
    #[arg(long, global = true)]
    pub lambda_min: Option<f64>,
    /// Largest parameter-grid value
    #[arg(long, global = true)]
    pub lambda_max: Option<f64>,
    /// Number of parameter-grid values
    #[arg(long, global = true)]
    pub lambda_count: Option<usize>,
    /// Worker threads for sweeps (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

/// The config-file counterpart of [`CommonArgs`]; unknown keys are
/// rejected so typos surface instead of silently using defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dataset: Option<String>,
    model: Option<String>,
    matrix: Option<String>,
    rule: Option<String>,
    l_order: Option<usize>,
    solver: Option<String>,
    noise: Option<f64>,
    seeds: Option<String>,
    out_dir: Option<PathBuf>,
    p_level: Option<f64>,
    freqs: Option<usize>,
    drop_first: Option<bool>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    lambda_count: Option<usize>,
    jobs: Option<usize>,
    select: Option<String>,
    lambda: Option<f64>,
}

/// A fully resolved run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: DatasetName,
    pub model: ModelKind,
    pub matrix: MatrixChoice,
    pub rule: QuadratureRule,
    pub l_order: usize,
    pub solver: String,
    pub noise: f64,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub p_level: f64,
    pub freqs: usize,
    pub drop_first: bool,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    pub jobs: Option<usize>,
    pub select: Selection,
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let text = text.trim();
    let seeds: Vec<u64> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad seed range start '{lo}'")))?;
        let hi: u64 = hi
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad seed range end '{hi}'")))?;
        if hi < lo {
            return Err(usage(format!("seed range {lo}..{hi} is empty")));
        }
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| usage(format!("bad seed '{}'", t.trim())))
            })
            .collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(usage("no seeds given"));
    }
    for (i, s) in seeds.iter().enumerate() {
        if seeds[..i].contains(s) {
            return Err(usage(format!("duplicate seed {s}")));
        }
    }
    Ok(seeds)
}

impl RunConfig {
    /// Merges flags over the config file over the defaults, then
    /// validates the combination. `select`/`lambda` are the extra
    /// inversion flags; commands without them pass None.
    pub fn resolve(
        args: &CommonArgs,
        select: Option<&str>,
        lambda: Option<f64>,
    ) -> Result<RunConfig> {
        let file: FileConfig = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                toml::from_str(&text).map_err(|e| usage(format!("config file: {e}")))?
            }
            None => FileConfig::default(),
        };

        let dataset: DatasetName = args
            .dataset
            .as_deref()
            .or(file.dataset.as_deref())
            .unwrap_or("A")
            .parse()
            .map_err(|e| usage(format!("{e}")))?;
        let model: ModelKind = args
            .model
            .as_deref()
            .or(file.model.as_deref())
            .unwrap_or("rq")
            .parse()
            .map_err(|e| usage(format!("{e}")))?;
        let matrix: MatrixChoice = args
            .matrix
            .as_deref()
            .or(file.matrix.as_deref())
            .unwrap_or("a4s")
            .parse()
            .map_err(usage)?;

        let rule_given = args.rule.as_deref().or(file.rule.as_deref());
        let rule = match (matrix.is_log_time(), rule_given) {
            (true, None) => QuadratureRule::TailCorrectedS,
            (true, Some(text)) => {
                let rule: QuadratureRule = text.parse().map_err(|e| usage(format!("{e}")))?;
                if rule == QuadratureRule::TrapT {
                    return Err(usage(
                        "the plain-time rule only pairs with matrices a1 and a2",
                    ));
                }
                rule
            }
            (false, None) => QuadratureRule::TrapT,
            (false, Some(text)) => {
                let rule: QuadratureRule = text.parse().map_err(|e| usage(format!("{e}")))?;
                if rule != QuadratureRule::TrapT {
                    return Err(usage(format!(
                        "matrix {} is defined by the plain-time trapezoid; drop --rule or use trap-t",
                        matrix.name()
                    )));
                }
                rule
            }
        };

        let l_order = args.l_order.or(file.l_order).unwrap_or(1);
        if l_order > 2 {
            return Err(usage(format!("smoothing order {l_order} not supported, use 0, 1, or 2")));
        }
        let solver = args
            .solver
            .clone()
            .or(file.solver)
            .unwrap_or_else(|| "nnls".into());
        if !SOLVER_NAMES.contains(&solver.as_str()) {
            return Err(usage(format!(
                "unknown solver '{solver}', expected one of {SOLVER_NAMES:?}"
            )));
        }
        let noise = args.noise.or(file.noise).unwrap_or(1e-3);
        if !(noise >= 0.0) {
            return Err(usage(format!("noise level must be >= 0, got {noise}")));
        }
        let seeds = match args.seeds.as_deref().or(file.seeds.as_deref()) {
            Some(text) => parse_seeds(text)?,
            None => vec![0],
        };
        let out_dir = args
            .out
            .clone()
            .or(file.out_dir)
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let p_level = args.p_level.or(file.p_level).unwrap_or(0.2);
        if !(p_level > 0.0 && p_level < 1.0) {
            return Err(usage(format!("p level must be in (0,1), got {p_level}")));
        }
        let freqs = args.freqs.or(file.freqs).unwrap_or(65);
        if freqs < 2 {
            return Err(usage(format!("need at least 2 frequencies, got {freqs}")));
        }
        let drop_first = args.drop_first || file.drop_first.unwrap_or(false);

        let lambda_min = args.lambda_min.or(file.lambda_min).unwrap_or(10f64.powf(-3.5));
        let lambda_max = args.lambda_max.or(file.lambda_max).unwrap_or(10f64.powf(1.5));
        let lambda_count = args.lambda_count.or(file.lambda_count).unwrap_or(50);
        if !(lambda_min > 0.0) || lambda_max < lambda_min || lambda_count == 0 {
            return Err(usage(format!(
                "bad parameter grid: {lambda_count} values over [{lambda_min}, {lambda_max}]"
            )));
        }
        if lambda_count == 1 && lambda_min != lambda_max {
            return Err(usage(
                "a single-value parameter grid needs lambda-min equal to lambda-max",
            ));
        }
        if lambda_count > 1 && lambda_min == lambda_max {
            return Err(usage(
                "a multi-value parameter grid needs lambda-min below lambda-max",
            ));
        }

        let select = match (select.or(file.select.as_deref()), lambda.or(file.lambda)) {
            (Some("fixed"), Some(l)) if l >= 0.0 => Selection::Fixed(l),
            (Some("fixed"), Some(l)) => {
                return Err(usage(format!("fixed lambda must be >= 0, got {l}")))
            }
            (Some("fixed"), None) => {
                return Err(usage("--select fixed needs --lambda"));
            }
            (Some("ncp") | None, _) => Selection::Ncp,
            (Some("lcurve"), _) => Selection::LCurve,
            (Some(other), _) => {
                return Err(usage(format!(
                    "unknown selection '{other}', expected fixed, ncp, or lcurve"
                )))
            }
        };

        Ok(RunConfig {
            dataset,
            model,
            matrix,
            rule,
            l_order,
            solver,
            noise,
            seeds,
            out_dir,
            p_level,
            freqs,
            drop_first,
            lambda_min,
            lambda_max,
            lambda_count,
            jobs: args.jobs.or(file.jobs),
            select,
        })
    }

    /// The configured regularization-parameter grid.
    pub fn lambda_grid(&self) -> drt_core::Result<LambdaGrid> {
        if self.lambda_count == 1 {
            LambdaGrid::new(vec![self.lambda_min])
        } else {
            LambdaGrid::log_spaced(self.lambda_min, self.lambda_max, self.lambda_count)
        }
    }

    /// Lowercase dataset-model stem used in output file names.
    pub fn stem(&self) -> String {
        format!("{}-{}", self.dataset, self.model.to_string().to_lowercase())
    }
}
