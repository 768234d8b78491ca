//! Metric dispatch: the exhaustive oracle up to its blocklength limit,
//! checked against the closed forms wherever both apply, and the closed
//! forms alone above it.

use bewc_core::continuous::{chi2_lambda, eq_loss_l, q_from_generator, MAX_KAPPA_CHI2, MAX_KAPPA_EQ_LOSS};
use bewc_core::descent::Objective;
use bewc_core::exact::{evaluate_exact, PatternHistogram, MAX_EXACT_N};
use bewc_core::GeneratorMatrix;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Allowed gap between oracle and closed form, relative to `max(1, |x|)`.
pub const AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    ClosedForm,
    ExactChecked,
}

#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub kappa: usize,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub eq_loss: Option<f64>,
    pub chi2: Option<f64>,
    pub tvd: Option<f64>,
    pub achievability_gap: Option<f64>,
    pub method: Method,
}

fn check(name: &str, exact: f64, closed: f64) -> CliResult<()> {
    if (exact - closed).abs() <= AGREEMENT_TOL * exact.abs().max(1.0) {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{name}: closed form {closed} disagrees with exact value {exact}"
        )))
    }
}

fn closed_eq(g: &GeneratorMatrix, epsilon: f64) -> CliResult<Option<f64>> {
    if g.kappa() > MAX_KAPPA_EQ_LOSS {
        return Ok(None);
    }
    Ok(Some(eq_loss_l(g.n(), epsilon, &q_from_generator(g))?))
}

fn closed_chi2(g: &GeneratorMatrix, epsilon: f64) -> CliResult<Option<f64>> {
    if g.kappa() > MAX_KAPPA_CHI2 {
        return Ok(None);
    }
    Ok(Some(chi2_lambda(g.n(), epsilon, &q_from_generator(g))?))
}

fn rate(g: &GeneratorMatrix) -> f64 {
    g.k() as f64 / g.n() as f64
}

pub fn evaluate(g: &GeneratorMatrix, epsilon: f64) -> CliResult<Evaluation> {
    let mut out = Evaluation {
        kappa: g.kappa(),
        n: g.n(),
        k: g.k(),
        epsilon,
        eq_loss: None,
        chi2: None,
        tvd: None,
        achievability_gap: None,
        method: Method::ClosedForm,
    };
    if g.n() <= MAX_EXACT_N {
        let report = evaluate_exact(g, epsilon)?;
        out.eq_loss = Some(report.eq_loss);
        out.chi2 = Some(report.chi2);
        out.tvd = Some(report.tvd);
        out.achievability_gap = Some(report.achievability_gap);
        out.method = Method::Exact;
        if let Some(l) = closed_eq(g, epsilon)? {
            check("equivocation loss", report.eq_loss, l)?;
            out.method = Method::ExactChecked;
        }
        if let Some(c) = closed_chi2(g, epsilon)? {
            check("chi2", report.chi2, c)?;
            out.method = Method::ExactChecked;
        }
    } else {
        out.eq_loss = closed_eq(g, epsilon)?;
        out.chi2 = closed_chi2(g, epsilon)?;
        if g.k() > 0 {
            out.achievability_gap = closed_eq(g, rate(g))?.map(|l| l / g.n() as f64);
        }
    }
    Ok(out)
}

/// One metric, by objective, through the same dispatch.
pub fn metric(g: &GeneratorMatrix, epsilon: f64, objective: Objective) -> CliResult<f64> {
    let closed = match objective {
        Objective::EquivocationLoss => closed_eq(g, epsilon)?,
        Objective::Chi2 => closed_chi2(g, epsilon)?,
    };
    if g.n() <= MAX_EXACT_N {
        let hist = PatternHistogram::sweep(g)?;
        let exact = match objective {
            Objective::EquivocationLoss => hist.equivocation_loss(epsilon)?,
            Objective::Chi2 => hist.chi2(epsilon)?,
        };
        if let Some(c) = closed {
            check(&objective.to_string(), exact, c)?;
        }
        return Ok(exact);
    }
    closed.ok_or_else(|| {
        CliError::Config(format!(
            "no closed form for {objective} at kappa = {} and n = {} is beyond the exact limit",
            g.kappa(),
            g.n()
        ))
    })
}
