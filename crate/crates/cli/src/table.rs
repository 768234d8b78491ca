//! Comparison tables: one row per blocklength with the random-sample mean
//! and spread, each construction in absolute terms and in `σ̂` units
//! relative to the mean, and the bounds.
//!
//! Every (row, construction) cell runs on its own RNG stream of the master
//! seed, so cells can be evaluated in parallel with a fixed result.

use bewc_core::bounds::{chi2_bounds, chi2_converse_direct, eq_loss_bounds};
use bewc_core::constructions::{
    bklc_incremental, bsc_p_from_epsilon, ldpc_capacity, ldpc_dual_code, random_code, subspace_exclusion_code,
};
use bewc_core::descent::{run_descent, DescentParams, Objective};
use bewc_core::{rng, GeneratorMatrix};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::metrics::metric;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation with Bessel's correction.
    pub std: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let count = xs.len();
        let mean = xs.iter().sum::<f64>() / count as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (count as f64 - 1.0);
        Self {
            count,
            mean,
            std: var.sqrt(),
        }
    }

    /// `(x - mean) / std`, or None when the spread is zero up to rounding.
    pub fn relative(&self, x: f64) -> Option<f64> {
        self.has_spread().then(|| (x - self.mean) / self.std)
    }

    pub fn has_spread(&self) -> bool {
        self.std > ZERO_SPREAD * self.mean.abs().max(1.0)
    }
}

/// Spreads at or below this, relative to `max(1, |mean|)`, count as zero.
const ZERO_SPREAD: f64 = 1e-12;

pub struct TableConfig {
    pub kappa: usize,
    pub ns: Vec<usize>,
    pub epsilon: Option<f64>,
    pub objective: Objective,
    /// Descent parameters; the seed is replaced per run.
    pub params: DescentParams,
    pub sample_size: usize,
    pub seed: u64,
    pub descent_runs: usize,
    pub bklc_seed: Option<GeneratorMatrix>,
}

/// `2^(kappa-4) * {1, ..., 15}`, keeping `n > kappa`.
pub fn default_grid(kappa: usize) -> CliResult<Vec<usize>> {
    if !(4..=16).contains(&kappa) {
        return Err(CliError::Config(format!(
            "the default grid needs 4 <= kappa <= 16 (got {kappa}); pass --n"
        )));
    }
    let unit = 1usize << (kappa - 4);
    Ok((1..=15).map(|i| i * unit).filter(|&n| n > kappa).collect())
}

impl TableConfig {
    fn validate(&self) -> CliResult<()> {
        if self.sample_size < 2 {
            return Err(CliError::Config("sample size must be at least 2".into()));
        }
        if self.descent_runs == 0 {
            return Err(CliError::Config("descent runs must be at least 1".into()));
        }
        if self.ns.is_empty() {
            return Err(CliError::Config("no blocklengths".into()));
        }
        let max = (1usize << self.kappa.min(16)) - 1;
        for &n in &self.ns {
            if self.kappa == 0 || self.kappa > 16 || n < self.kappa || n > max {
                return Err(CliError::Config(format!(
                    "n = {n} must lie in {}..={max} for kappa = {}",
                    self.kappa, self.kappa
                )));
            }
        }
        if let Some(seed) = &self.bklc_seed {
            if seed.kappa() != self.kappa {
                return Err(CliError::Config(format!(
                    "BKLC seed matrix has kappa = {}, table has {}",
                    seed.kappa(),
                    self.kappa
                )));
            }
        }
        self.params.validate()?;
        Ok(())
    }

    fn epsilon_for(&self, n: usize) -> f64 {
        self.epsilon.unwrap_or((n - self.kappa) as f64 / n as f64)
    }
}

#[derive(Debug, Clone, Copy)]
enum Cell {
    Random,
    Descent,
    Ldpc,
    Sec,
    Bklc,
}

impl Cell {
    fn name(&self) -> &'static str {
        match self {
            Cell::Random => "random",
            Cell::Descent => "descent",
            Cell::Ldpc => "ldpc",
            Cell::Sec => "sec",
            Cell::Bklc => "bklc",
        }
    }
}

enum CellValue {
    Sample(Vec<f64>),
    Value(f64),
    /// The construction does not exist at this size.
    Absent,
}

/// `u` with `n = 2^kappa - 2^u`, if any.
fn sec_dimension(kappa: usize, n: usize) -> Option<usize> {
    let rest = (1usize << kappa) - n;
    (rest.is_power_of_two() && rest.trailing_zeros() < kappa as u32).then(|| rest.trailing_zeros() as usize)
}

fn run_cell(config: &TableConfig, n: usize, cell: Cell, stream: u64) -> CliResult<CellValue> {
    let kappa = config.kappa;
    let eps = config.epsilon_for(n);
    let mut r = rng::stream(config.seed, stream);
    let score = |g: &GeneratorMatrix| metric(g, eps, config.objective);
    Ok(match cell {
        Cell::Random => {
            let mut values = Vec::with_capacity(config.sample_size);
            for _ in 0..config.sample_size {
                values.push(score(&random_code(kappa, n, &mut r)?)?);
            }
            CellValue::Sample(values)
        }
        Cell::Descent => {
            let params = DescentParams {
                seed: r.random(),
                ..config.params.clone()
            };
            let out = run_descent(kappa, n, eps, &params).map_err(|f| CliError::from(f.error))?;
            CellValue::Value(score(&out.generator)?)
        }
        Cell::Ldpc => {
            if n > ldpc_capacity(kappa) {
                CellValue::Absent
            } else {
                CellValue::Value(score(&ldpc_dual_code(kappa, n, &mut r)?)?)
            }
        }
        Cell::Sec => match sec_dimension(kappa, n) {
            Some(u) => CellValue::Value(score(&subspace_exclusion_code(kappa, u)?)?),
            None => CellValue::Absent,
        },
        Cell::Bklc => match &config.bklc_seed {
            Some(seed) if seed.n() <= n => {
                let g = bklc_incremental(seed, n, bsc_p_from_epsilon(eps)?)?;
                CellValue::Value(score(&g)?)
            }
            _ => CellValue::Absent,
        },
    })
}

fn fmt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Number of stream slots reserved per row.
const ROW_STRIDE: u64 = 1 << 20;

/// Builds the table text: a timestamp comment line, a configuration comment
/// line, then the CSV.
pub fn run(config: &TableConfig) -> CliResult<String> {
    config.validate()?;
    let mut cells = Vec::new();
    for (row, &n) in config.ns.iter().enumerate() {
        let mut kinds = vec![Cell::Random];
        kinds.extend((0..config.descent_runs).map(|_| Cell::Descent));
        kinds.extend([Cell::Ldpc, Cell::Sec]);
        if config.bklc_seed.is_some() {
            kinds.push(Cell::Bklc);
        }
        for (slot, kind) in kinds.into_iter().enumerate() {
            cells.push((row, n, kind, row as u64 * ROW_STRIDE + slot as u64));
        }
    }
    let results: Vec<CliResult<CellValue>> = cells
        .par_iter()
        .map(|&(_, n, kind, stream)| run_cell(config, n, kind, stream))
        .collect();

    let with_bklc = config.bklc_seed.is_some();
    let chi2 = config.objective == Objective::Chi2;
    let mut header = vec![
        "n",
        "k",
        "epsilon",
        "random_mean",
        "random_std",
        "descent",
        "descent_rel",
    ];
    header.extend(["ldpc", "ldpc_rel", "sec", "sec_rel"]);
    if with_bklc {
        header.extend(["bklc", "bklc_rel"]);
    }
    header.extend(["lower_bound", "upper_bound"]);
    if chi2 {
        header.push("converse_direct");
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    let mut at = 0;
    for (row, &n) in config.ns.iter().enumerate() {
        let eps = config.epsilon_for(n);
        let mut sample = None;
        let mut descent: Option<f64> = None;
        let mut named: Vec<(&str, Option<f64>)> = Vec::new();
        while at < cells.len() && cells[at].0 == row {
            let kind = cells[at].2;
            let value = match &results[at] {
                Ok(CellValue::Sample(v)) => {
                    sample = Some(Summary::of(v));
                    None
                }
                Ok(CellValue::Value(v)) => Some(*v),
                Ok(CellValue::Absent) => None,
                Err(e) => {
                    eprintln!("warning: n = {n}, {}: {e}", kind.name());
                    None
                }
            };
            match kind {
                Cell::Random => {}
                Cell::Descent => {
                    if let Some(v) = value {
                        descent = Some(descent.map_or(v, |d: f64| d.min(v)));
                    }
                }
                other => named.push((other.name(), value)),
            }
            at += 1;
        }
        if sample.is_some_and(|s| !s.has_spread()) {
            eprintln!("warning: n = {n}: random sample has no spread, relative columns left empty");
        }
        let rel = |x: Option<f64>| match (x, sample) {
            (Some(v), Some(s)) => s.relative(v),
            _ => None,
        };
        let k = n - config.kappa;
        let mut record = vec![n.to_string(), k.to_string(), eps.to_string()];
        record.push(fmt(sample.map(|s| s.mean)));
        record.push(fmt(sample.map(|s| s.std)));
        record.push(fmt(descent));
        record.push(fmt(rel(descent)));
        for (_, v) in &named {
            record.push(fmt(*v));
            record.push(fmt(rel(*v)));
        }
        let bounds = if chi2 {
            chi2_bounds(n, k, eps)
        } else {
            eq_loss_bounds(n, k, eps)
        };
        match bounds {
            Ok((lo, hi)) => record.extend([lo.to_string(), hi.to_string()]),
            Err(e) => {
                eprintln!("warning: n = {n}, bounds: {e}");
                record.extend([String::new(), String::new()]);
            }
        }
        if chi2 {
            match chi2_converse_direct(n, config.kappa, eps) {
                Ok(v) => record.push(v.to_string()),
                Err(e) => {
                    eprintln!("warning: n = {n}, converse: {e}");
                    record.push(String::new());
                }
            }
        }
        w.write_record(&record)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).expect("csv is utf-8");
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let bklc = if with_bklc {
        "seeded"
    } else {
        "omitted (no seed matrix)"
    };
    Ok(format!(
        "# generated_unix={stamp}\n# kappa={} objective={} seed={} sample_size={} descent_runs={} bklc={bklc}\n{body}",
        config.kappa, config.objective, config.seed, config.sample_size, config.descent_runs
    ))
}
