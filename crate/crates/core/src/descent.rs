//! Boundary-compliant constrained gradient descent over code-definition
//! vectors.
//!
//! The search starts at the uniform fraction code `q̄` (every `q_i = 1/N`,
//! `N = 2^kappa - 1`) and walks outward until `|q|^2` reaches `1/n`, which
//! under the sum and box constraints happens only at a realizable code.
//!
//! Every coordinate is moved through the angle parametrization
//! `q_i = (1 + cos θ_i) / (2n)`, so a step can never leave `[0, 1/n]`, and
//! the sum constraint is restored after each step by rotating all angles
//! together until the centroid of `(cos θ_i, sin θ_i)` has the right
//! abscissa. Step directions are measured in the cost metric
//! `Q̃ = diag(1/√(q_i(1/n - q_i)))`: a gradient component and an outward
//! radial component, both orthogonal to the sum constraint, are mixed in
//! proportion to their value per unit cost. The mixing weight `k_g` is
//! steered by a multiplicative controller so that fluctuations of the
//! gradient value stay a fixed fraction of the radial value.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::continuous::{
    chi2_lambda, chi2_with_grad, eq_loss_l, eq_loss_with_grad, q_from_generator, realize_generator, CodeDefVector,
    MAX_KAPPA_CHI2, MAX_KAPPA_EQ_LOSS,
};
use crate::error::{Error, Result};
use crate::gf2::GeneratorMatrix;
use crate::rng::{seeded, CodeRng, RNG_NAME};

/// `|q|^2` within this of `1/n` counts as having reached the boundary.
pub const TERMINATION_TOL: f64 = 1e-9;
/// Bounds on the gradient weighting factor.
pub const KG_MIN: f64 = 1e-12;
pub const KG_MAX: f64 = 1e12;
/// Residual `|Σq - 1|` the mean adjustment aims for.
const MEAN_TOL: f64 = 1e-13;
/// Slack allowed on the `arccos` argument of the mean adjustment.
const ACOS_SLACK: f64 = 1e-9;
/// Relative magnitude below which a projected gradient counts as vanished.
const GRADIENT_DEGENERACY: f64 = 1e-12;

/// Function being minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Objective {
    EquivocationLoss,
    Chi2,
}

impl Objective {
    pub fn max_kappa(self) -> usize {
        match self {
            Objective::EquivocationLoss => MAX_KAPPA_EQ_LOSS,
            Objective::Chi2 => MAX_KAPPA_CHI2,
        }
    }

    pub fn value(self, n: usize, epsilon: f64, q: &CodeDefVector) -> Result<f64> {
        match self {
            Objective::EquivocationLoss => eq_loss_l(n, epsilon, q),
            Objective::Chi2 => chi2_lambda(n, epsilon, q),
        }
    }

    pub fn value_and_gradient(self, n: usize, epsilon: f64, q: &CodeDefVector) -> Result<(f64, Vec<f64>)> {
        match self {
            Objective::EquivocationLoss => eq_loss_with_grad(n, epsilon, q),
            Objective::Chi2 => chi2_with_grad(n, epsilon, q),
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equiv" | "eq" | "eq-loss" | "equivocation" | "equivocation-loss" => Ok(Objective::EquivocationLoss),
            "chi2" | "chi-squared" => Ok(Objective::Chi2),
            other => Err(Error::Invalid(format!("unknown objective {other:?}"))),
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::EquivocationLoss => "equiv",
            Objective::Chi2 => "chi2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentParams {
    /// Cost-metric length of every step.
    pub s: f64,
    /// Steps between gradient recomputations.
    pub n_g: usize,
    /// Gain exponent of the `k_g` controller.
    pub alpha: f64,
    /// Target fluctuation ratio.
    pub tau_t: f64,
    /// Standard deviation of the random angle offset.
    pub sigma: f64,
    pub objective: Objective,
    pub seed: u64,
    pub max_outer_iterations: usize,
    /// Keep a copy of `q` with every trace record.
    pub record_snapshots: bool,
}

impl Default for DescentParams {
    fn default() -> Self {
        Self {
            s: 1e-4,
            n_g: 25,
            alpha: 0.5,
            tau_t: 1.0,
            sigma: 1e-6,
            objective: Objective::EquivocationLoss,
            seed: 0,
            max_outer_iterations: 1_000_000,
            record_snapshots: false,
        }
    }
}

impl DescentParams {
    pub fn validate(&self) -> Result<()> {
        let real = |what, value: f64, ok: bool, expected| {
            if ok {
                Ok(())
            } else {
                Err(Error::OutOfRangeReal { what, value, expected })
            }
        };
        real("s", self.s, self.s > 0.0 && self.s.is_finite(), "> 0")?;
        real("alpha", self.alpha, self.alpha > 0.0 && self.alpha <= 1.0, "(0, 1]")?;
        real("tau_t", self.tau_t, self.tau_t > 0.0 && self.tau_t.is_finite(), "> 0")?;
        real("sigma", self.sigma, self.sigma >= 0.0 && self.sigma.is_finite(), ">= 0")?;
        if self.n_g == 0 {
            return Err(Error::OutOfRange {
                what: "n_g",
                value: 0,
                expected: ">= 1".into(),
            });
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::OutOfRange {
                what: "max_outer_iterations",
                value: 0,
                expected: ">= 1".into(),
            });
        }
        Ok(())
    }
}

/// The `k_g` fluctuation controller.
///
/// The tracked quantity is the gradient value times the unit gradient
/// direction, so a direction that flips back and forth around a local
/// minimum shows up as variance even when its magnitude is steady.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Controller {
    pub k_g: f64,
    /// Moving mean of the gradient value vector (empty means zero).
    pub g_bar: Vec<f64>,
    /// Moving variance of the gradient value vector.
    pub w_var: f64,
    /// Fluctuation ratio seen by the latest update (NaN before the first).
    pub tau: f64,
}

impl Default for Controller {
    fn default() -> Self {
        Self {
            k_g: 1.0,
            g_bar: Vec::new(),
            w_var: 1.0,
            tau: f64::NAN,
        }
    }
}

impl Controller {
    /// Folds one gradient value vector into the moving moments and rescales
    /// `k_g` toward `tau_t`. Returns the ratio `k_g √W / radial_value`
    /// before the rescale.
    pub fn update(&mut self, value: &[f64], radial_value: f64, alpha: f64, tau_t: f64) -> f64 {
        if self.g_bar.len() != value.len() {
            self.g_bar = vec![0.0; value.len()];
        }
        let dev_sq: f64 = value.iter().zip(&self.g_bar).map(|(v, m)| (v - m) * (v - m)).sum();
        self.w_var = (1.0 - alpha) * self.w_var + alpha * (1.0 - alpha) * dev_sq;
        for (m, v) in self.g_bar.iter_mut().zip(value) {
            *m = (1.0 - alpha) * *m + alpha * v;
        }
        let spread = self.w_var.sqrt();
        let tau = self.k_g * spread / radial_value;
        self.tau = tau;
        if spread > 0.0 && radial_value > 0.0 && tau.is_finite() {
            let next = self.k_g * (tau_t / tau).powf(alpha);
            self.k_g = if next.is_finite() {
                next.clamp(KG_MIN, KG_MAX)
            } else {
                KG_MAX
            };
        }
        tau
    }
}

/// Optimizer state between steps.
#[derive(Debug, Clone)]
pub struct DescentState {
    pub q: CodeDefVector,
    pub controller: Controller,
    pub cached_gradient: Vec<f64>,
    pub step_count: usize,
    rng: CodeRng,
}

impl DescentState {
    pub fn new(kappa: usize, n: usize, seed: u64) -> Result<Self> {
        let q = CodeDefVector::uniform(kappa, n)?;
        Ok(Self {
            cached_gradient: vec![0.0; q.len()],
            q,
            controller: Controller::default(),
            step_count: 0,
            rng: seeded(seed),
        })
    }

    pub fn k_g(&self) -> f64 {
        self.controller.k_g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    pub objective: f64,
    pub dist_from_uniform: f64,
    pub q_norm_sq: f64,
    pub k_g: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentTrace {
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    /// `q` at each record, when requested.
    pub snapshots: Option<Vec<Vec<f64>>>,
}

pub const TRACE_HEADER: &str = "step,objective,dist_from_uniform,q_norm_sq,k_g,tau";

impl DescentTrace {
    fn new(seed: u64, snapshots: bool) -> Self {
        Self {
            seed,
            records: Vec::new(),
            snapshots: snapshots.then(Vec::new),
        }
    }

    /// Appends a record, replacing the last one when no step happened since.
    fn push(&mut self, record: TraceRecord, q: &CodeDefVector) {
        let replace = self.records.last().is_some_and(|r| r.step == record.step);
        if replace {
            self.records.pop();
            if let Some(s) = self.snapshots.as_mut() {
                s.pop();
            }
        }
        self.records.push(record);
        if let Some(s) = self.snapshots.as_mut() {
            s.push(q.as_slice().to_vec());
        }
    }

    /// CSV with a leading `# rng=... seed=...` comment line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# rng={RNG_NAME} seed={}", self.seed)?;
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.step, r.objective, r.dist_from_uniform, r.q_norm_sq, r.k_g, r.tau
            )?;
        }
        Ok(())
    }

    /// The snapshots as a JSON array of `{step, q}` objects.
    pub fn snapshots_json(&self) -> Option<String> {
        #[derive(Serialize)]
        struct Snap<'a> {
            step: usize,
            q: &'a [f64],
        }
        let snaps = self.snapshots.as_ref()?;
        let items: Vec<Snap> = self
            .records
            .iter()
            .zip(snaps)
            .map(|(r, q)| Snap { step: r.step, q })
            .collect();
        serde_json::to_string(&items).ok()
    }
}

/// A finished descent.
#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub generator: GeneratorMatrix,
    pub q: CodeDefVector,
    /// Objective at the realized code.
    pub objective_value: f64,
    pub outer_iterations: usize,
    pub trace: DescentTrace,
}

/// A failed descent and everything recorded up to the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct DescentFailure {
    pub error: Error,
    pub trace: DescentTrace,
}

/// Diagonal of `Q̃`; `+∞` at or beyond the box bounds.
pub fn unit_cost(q_i: f64, n: usize) -> f64 {
    let top = 1.0 / n as f64;
    if q_i <= 0.0 || q_i >= top {
        return f64::INFINITY;
    }
    1.0 / (q_i * (top - q_i)).sqrt()
}

#[inline]
fn trig(q_i: f64, x: f64, n: f64) -> f64 {
    let c = (2.0 * n * q_i - 1.0).clamp(-1.0, 1.0);
    (1.0 + (x + c.acos()).cos()) / (2.0 * n)
}

/// Moves `q_i` by the angle `x`: `(1 + cos(x + arccos(2n q_i - 1))) / (2n)`.
pub fn trig_update(q_i: f64, x: f64, n: usize) -> Result<f64> {
    let top = 1.0 / n as f64;
    if !(q_i >= -1e-12 && q_i <= top + 1e-12) {
        return Err(Error::OutOfRangeReal {
            what: "q_i",
            value: q_i,
            expected: "[0, 1/n]",
        });
    }
    if x == 0.0 {
        return Ok(q_i.clamp(0.0, top));
    }
    Ok(trig(q_i, x, n as f64))
}

fn mean_adjust_in_place(q: &mut [f64], n: usize) -> Result<()> {
    let nf = n as f64;
    let len = q.len() as f64;
    let target = 2.0 * nf / len - 1.0;
    for _ in 0..4 {
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() <= MEAN_TOL {
            return Ok(());
        }
        let mut theta = Vec::with_capacity(q.len());
        let (mut x, mut y) = (0.0, 0.0);
        for &qi in q.iter() {
            let c = (2.0 * nf * qi - 1.0).clamp(-1.0, 1.0);
            x += c;
            y += ((1.0 - c) * (1.0 + c)).sqrt();
            theta.push(c.acos());
        }
        x /= len;
        y /= len;
        let radius = x.hypot(y);
        let mut arg = target / radius;
        if arg.is_nan() || arg.abs() > 1.0 + ACOS_SLACK {
            return Err(Error::InfeasibleMeanAdjust { target, radius });
        }
        arg = arg.clamp(-1.0, 1.0);
        let omega = arg.acos() - y.atan2(x);
        for (qi, t) in q.iter_mut().zip(&theta) {
            *qi = (1.0 + (t + omega).cos()) / (2.0 * nf);
        }
    }
    Ok(())
}

/// Rotates every angle by a common `ω` so that `Σ q_i = 1`.
pub fn mean_adjust(q: &CodeDefVector) -> Result<CodeDefVector> {
    let mut out = q.clone();
    let n = q.n();
    mean_adjust_in_place(out.as_mut_slice(), n)?;
    Ok(out)
}

/// `Q̃^{-1}` diagonal with `q` clamped to `[δ, 1/n - δ]`, `δ = 1e-12/n`.
fn inverse_cost(q: &[f64], n: usize) -> Vec<f64> {
    let top = 1.0 / n as f64;
    let delta = 1e-12 / n as f64;
    q.iter()
        .map(|&x| {
            let c = x.clamp(delta, top - delta);
            (c * (top - c)).sqrt()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn hadamard(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// `P_1 v = v - d (d·v)/(d·d)`.
fn project_sum(d: &[f64], v: &mut [f64]) {
    let c = dot(d, v) / dot(d, d);
    for (vi, di) in v.iter_mut().zip(d) {
        *vi -= c * di;
    }
}

fn centered(q: &[f64]) -> Vec<f64> {
    let qbar = 1.0 / q.len() as f64;
    q.iter().map(|x| x - qbar).collect()
}

/// Unnormalized radial vector `P_1 Q̃^{-1} (q - q̄)`.
fn radial_raw(q: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    let dev = centered(q);
    if dev.iter().all(|x| x.abs() <= f64::EPSILON * 1e-2 / q.len() as f64) {
        return Err(Error::DegenerateDirection {
            which: "radial",
            magnitude: norm(&dev),
        });
    }
    let mut r = hadamard(d, &dev);
    project_sum(d, &mut r);
    let mag = norm(&r);
    if mag == 0.0 || !mag.is_finite() {
        return Err(Error::DegenerateDirection {
            which: "radial",
            magnitude: mag,
        });
    }
    Ok(r)
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let m = norm(&v);
    for x in v.iter_mut() {
        *x /= m;
    }
    v
}

/// Gradient direction given the unnormalized radial vector.
fn gradient_raw(g: &[f64], d: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let mut v = hadamard(d, g);
    let scale = norm(&v);
    project_sum(d, &mut v);
    let c = dot(r, &v) / dot(r, r);
    for (vi, ri) in v.iter_mut().zip(r) {
        *vi -= c * ri;
    }
    let mag = norm(&v);
    if !mag.is_finite() || mag <= GRADIENT_DEGENERACY * scale || scale.is_nan() {
        return Err(Error::DegenerateDirection {
            which: "gradient",
            magnitude: mag,
        });
    }
    let mut v = normalized(v);
    let along: f64 = g.iter().zip(d).zip(&v).map(|((gi, di), vi)| gi * di * vi).sum();
    if along > 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    Ok(v)
}

fn check_len(q: &CodeDefVector, v: &[f64]) -> Result<()> {
    if v.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            found: v.len(),
        });
    }
    Ok(())
}

/// Unit direction of steepest descent of `g` per unit cost that keeps both
/// the sum and the distance from `q̄` fixed to first order.
pub fn dir_gradient(q: &CodeDefVector, g: &[f64]) -> Result<Vec<f64>> {
    check_len(q, g)?;
    let d = inverse_cost(q.as_slice(), q.n());
    let r = radial_raw(q.as_slice(), &d)?;
    gradient_raw(g, &d, &r)
}

/// Unit direction moving away from `q̄` most cheaply while keeping the sum.
pub fn dir_radial(q: &CodeDefVector) -> Result<Vec<f64>> {
    let d = inverse_cost(q.as_slice(), q.n());
    Ok(normalized(radial_raw(q.as_slice(), &d)?))
}

/// The two mixing values of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionValues {
    /// `g · Q̃^{-1} q̀_g / |Q̃^{-1} q̀_g|`, zero without a gradient direction.
    pub gradient: f64,
    /// `(q - q̄) · Q̃^{-1} q̀_m / (|q - q̄| |Q̃^{-1} q̀_m|)`.
    pub radial: f64,
}

fn combine_raw(
    q: &[f64],
    g: &[f64],
    d: &[f64],
    q_g: Option<&[f64]>,
    q_m: &[f64],
    k_g: f64,
) -> Result<(Vec<f64>, DirectionValues)> {
    let gradient = match q_g {
        Some(qg) => {
            let s = hadamard(d, qg);
            dot(g, &s) / norm(&s)
        }
        None => 0.0,
    };
    let dev = centered(q);
    let sm = hadamard(d, q_m);
    let radial = dot(&dev, &sm) / (norm(&dev) * norm(&sm));
    let w_g = -k_g * gradient;
    let mut out: Vec<f64> = q_m.iter().map(|m| radial * m).collect();
    if let Some(qg) = q_g {
        for (o, x) in out.iter_mut().zip(qg) {
            *o += w_g * x;
        }
    }
    let mag = norm(&out);
    if !mag.is_finite() || mag <= 0.0 {
        return Err(Error::DegenerateDirection {
            which: "combined",
            magnitude: mag,
        });
    }
    Ok((normalized(out), DirectionValues { gradient, radial }))
}

/// Value-weighted mix of the gradient and radial directions.
pub fn combine_direction(
    q: &CodeDefVector,
    g: &[f64],
    q_g: Option<&[f64]>,
    q_m: &[f64],
    k_g: f64,
) -> Result<(Vec<f64>, DirectionValues)> {
    check_len(q, g)?;
    check_len(q, q_m)?;
    if let Some(qg) = q_g {
        check_len(q, qg)?;
    }
    let d = inverse_cost(q.as_slice(), q.n());
    combine_raw(q.as_slice(), g, &d, q_g, q_m, k_g)
}

/// Moves `q` a Euclidean distance of about `s` along the unit cost-metric
/// direction `dir`, without restoring the sum. To first order the change is
/// `s Q̃^{-1} dir / |Q̃^{-1} dir|`. The step is shortened when needed so
/// that no coordinate covers more than half of its remaining angle toward
/// the bound it is heading for; near a vertex this turns overshoot and
/// reflection into geometric convergence.
pub fn apply_step(q: &CodeDefVector, dir: &[f64], s: f64) -> Result<CodeDefVector> {
    check_len(q, dir)?;
    let mut out = q.clone();
    let d = inverse_cost(q.as_slice(), q.n());
    step_in_place(out.as_mut_slice(), dir, &d, s, q.n());
    Ok(out)
}

/// Fraction of the remaining angle a single step may use.
const BOUNDARY_FRACTION: f64 = 0.5;
/// Angles closer than this to a bound count as sitting on it.
const ON_BOUND: f64 = 1e-6;

fn step_in_place(q: &mut [f64], dir: &[f64], d: &[f64], s: f64, n: usize) {
    let nf = n as f64;
    let mut scale = s / norm(&hadamard(d, dir));
    let theta: Vec<f64> = q
        .iter()
        .map(|&x| (2.0 * nf * x - 1.0).clamp(-1.0, 1.0).acos())
        .collect();
    for (t, x) in theta.iter().zip(dir) {
        // the angle moves by -scale * x; q grows as the angle shrinks
        let room = if *x > 0.0 { *t } else { std::f64::consts::PI - t };
        if room > ON_BOUND && x.abs() > 0.0 {
            scale = scale.min(BOUNDARY_FRACTION * room / x.abs());
        }
    }
    for ((qi, x), t) in q.iter_mut().zip(dir).zip(&theta) {
        // saturate rather than reflect at the bounds
        *qi = (1.0 + (t - scale * x).clamp(0.0, std::f64::consts::PI).cos()) / (2.0 * nf);
    }
}

/// Sum restoration used inside the descent. Angles move by `-t sin θ_i`,
/// which leaves coordinates on a bound in place. When that cannot reach
/// the target, the common rotation of [`mean_adjust`] is tried, then a
/// common angle shift that saturates at the box bounds.
pub fn restore_sum(q: &CodeDefVector) -> CodeDefVector {
    let mut out = q.clone();
    restore_sum_in_place(out.as_mut_slice(), q.n());
    out
}

fn restore_sum_in_place(q: &mut [f64], n: usize) {
    if weighted_sum_fix(q, n) || mean_adjust_in_place(q, n).is_ok() {
        return;
    }
    let nf = n as f64;
    let theta: Vec<f64> = q
        .iter()
        .map(|&x| (2.0 * nf * x - 1.0).clamp(-1.0, 1.0).acos())
        .collect();
    let sum: f64 = q.iter().sum();
    // positive shifts push angles toward π (q toward 0)
    let dir = if sum > 1.0 { 1.0 } else { -1.0 };
    let eval = |t: f64, out: &mut [f64]| -> f64 {
        let mut total = 0.0;
        for (o, th) in out.iter_mut().zip(&theta) {
            let a = (th + dir * t).clamp(0.0, std::f64::consts::PI);
            *o = (1.0 + a.cos()) / (2.0 * nf);
            total += *o;
        }
        total
    };
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
    let mut scratch = q.to_vec();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let total = eval(mid, &mut scratch);
        if (total > 1.0) == (dir > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    eval(0.5 * (lo + hi), q);
}

/// Restores `Σ q_i = 1` with angle changes `-t sin θ_i`, angles clamped to
/// `[0, π]`. Coordinates on a bound stay put. The sum is monotone in `t`,
/// so `t` is found by bisection. Returns false when no `t` reaches the sum.
fn weighted_sum_fix(q: &mut [f64], n: usize) -> bool {
    use std::f64::consts::PI;
    let nf = n as f64;
    let sum: f64 = q.iter().sum();
    if (sum - 1.0).abs() <= MEAN_TOL {
        return true;
    }
    let theta: Vec<f64> = q
        .iter()
        .map(|&x| (2.0 * nf * x - 1.0).clamp(-1.0, 1.0).acos())
        .collect();
    let eval = |t: f64, out: &mut [f64]| -> f64 {
        let mut total = 0.0;
        for (o, th) in out.iter_mut().zip(&theta) {
            let a = (th - t * th.sin()).clamp(0.0, PI);
            *o = (1.0 + a.cos()) / (2.0 * nf);
            total += *o;
        }
        total
    };
    let mut scratch = q.to_vec();
    // any |t| beyond PI / min sin θ saturates every moving coordinate
    let smallest = theta
        .iter()
        .map(|t| t.sin())
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !smallest.is_finite() {
        return false;
    }
    let reach = PI / smallest;
    let (mut lo, mut hi) = if sum < 1.0 { (0.0, reach) } else { (-reach, 0.0) };
    if (eval(hi, &mut scratch) - 1.0) < -MEAN_TOL || (eval(lo, &mut scratch) - 1.0) > MEAN_TOL {
        return false;
    }
    // safeguarded Newton on the bracket
    let slope = |t: f64| -> f64 {
        theta
            .iter()
            .map(|th| {
                let a = th - t * th.sin();
                if (0.0..=PI).contains(&a) {
                    th.sin() * a.sin() / (2.0 * nf)
                } else {
                    0.0
                }
            })
            .sum()
    };
    let mut t = 0.0;
    let mut total = sum;
    for _ in 0..100 {
        if (total - 1.0).abs() <= MEAN_TOL {
            break;
        }
        if total < 1.0 {
            lo = t;
        } else {
            hi = t;
        }
        let ds = slope(t);
        let newton = t - (total - 1.0) / ds;
        t = if ds > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        total = eval(t, &mut scratch);
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
    }
    eval(t, q);
    true
}

/// `k_g` controller step on a state; `value` is `v q̀_g` with `v` the
/// gradient value of [`DirectionValues`].
pub fn update_kg(state: &mut DescentState, value: &[f64], radial_value: f64, params: &DescentParams) -> f64 {
    state.controller.update(value, radial_value, params.alpha, params.tau_t)
}

fn reached_boundary(q: &CodeDefVector) -> bool {
    q.norm_sq() >= 1.0 / q.n() as f64 - TERMINATION_TOL
}

struct Run<'a> {
    n: usize,
    epsilon: f64,
    params: &'a DescentParams,
    state: DescentState,
    trace: DescentTrace,
}

impl Run<'_> {
    fn record(&mut self, objective: f64) {
        let q = &self.state.q;
        let record = TraceRecord {
            step: self.state.step_count,
            objective,
            dist_from_uniform: q.dist_from_uniform(),
            q_norm_sq: q.norm_sq(),
            k_g: self.state.controller.k_g,
            tau: self.state.controller.tau,
        };
        self.trace.push(record, q);
    }

    fn try_finish(&self) -> Option<GeneratorMatrix> {
        if reached_boundary(&self.state.q) {
            realize_generator(&self.state.q, self.n).ok()
        } else {
            None
        }
    }

    fn offset(&mut self) -> Result<()> {
        let n = self.n as f64;
        if self.params.sigma > 0.0 {
            let normal = Normal::new(0.0, self.params.sigma).expect("sigma validated");
            let rng = &mut self.state.rng;
            for qi in self.state.q.as_mut_slice() {
                let r: f64 = normal.sample(rng);
                *qi = trig(*qi, r, n);
            }
        } else {
            // keep the stream position independent of sigma
            let _: u64 = self.state.rng.random();
        }
        restore_sum_in_place(self.state.q.as_mut_slice(), self.n);
        Ok(())
    }

    /// One update plus mean adjustment. Returns the controller inputs, or
    /// `None` when no direction exists.
    fn inner_step(&mut self, g: &[f64]) -> Result<Option<(Option<Vec<f64>>, f64)>> {
        let n = self.n;
        let d = inverse_cost(self.state.q.as_slice(), n);
        let r = match radial_raw(self.state.q.as_slice(), &d) {
            Ok(r) => r,
            Err(Error::DegenerateDirection { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let q_g = gradient_raw(g, &d, &r).ok();
        let q_m = normalized(r);
        let (dir, values) = match combine_raw(
            self.state.q.as_slice(),
            g,
            &d,
            q_g.as_deref(),
            &q_m,
            self.state.controller.k_g,
        ) {
            Ok(x) => x,
            Err(Error::DegenerateDirection { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        step_in_place(self.state.q.as_mut_slice(), &dir, &d, self.params.s, n);
        restore_sum_in_place(self.state.q.as_mut_slice(), n);
        self.state.step_count += 1;
        let value = q_g.map(|qg| qg.iter().map(|x| values.gradient * x).collect());
        Ok(Some((value, values.radial)))
    }

    fn finish(
        mut self,
        generator: GeneratorMatrix,
        outer: usize,
    ) -> std::result::Result<DescentOutcome, DescentFailure> {
        let q = q_from_generator(&generator);
        let value = match self.params.objective.value(self.n, self.epsilon, &q) {
            Ok(v) => v,
            Err(error) => {
                return Err(DescentFailure {
                    error,
                    trace: self.trace,
                })
            }
        };
        self.state.q = q.clone();
        self.record(value);
        Ok(DescentOutcome {
            generator,
            q,
            objective_value: value,
            outer_iterations: outer,
            trace: self.trace,
        })
    }
}

/// Runs the descent from `q̄` to a realizable code.
pub fn run_descent(
    kappa: usize,
    n: usize,
    epsilon: f64,
    params: &DescentParams,
) -> std::result::Result<DescentOutcome, DescentFailure> {
    run_descent_observed(kappa, n, epsilon, params, |_| {})
}

/// [`run_descent`], calling `observer` after every inner step.
pub fn run_descent_observed(
    kappa: usize,
    n: usize,
    epsilon: f64,
    params: &DescentParams,
    mut observer: impl FnMut(&DescentState),
) -> std::result::Result<DescentOutcome, DescentFailure> {
    let mut trace = DescentTrace::new(params.seed, params.record_snapshots);
    let fail = |error, trace| DescentFailure { error, trace };
    if let Err(e) = params.validate() {
        return Err(fail(e, trace));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        let e = Error::OutOfRangeReal {
            what: "epsilon",
            value: epsilon,
            expected: "(0, 1)",
        };
        return Err(fail(e, trace));
    }
    let ceiling = params.objective.max_kappa();
    if kappa == 0 || kappa > ceiling {
        let e = Error::OutOfRange {
            what: "kappa",
            value: kappa as i64,
            expected: format!("1..={ceiling} for the {} objective", params.objective),
        };
        return Err(fail(e, trace));
    }
    let len = (1usize << kappa) - 1;
    if n < kappa || n > len {
        let e = Error::OutOfRange {
            what: "n",
            value: n as i64,
            expected: format!("{kappa}..={len}"),
        };
        return Err(fail(e, trace));
    }
    let state = match DescentState::new(kappa, n, params.seed) {
        Ok(s) => s,
        Err(e) => return Err(fail(e, trace)),
    };
    trace.records.reserve(64);
    let mut run = Run {
        n,
        epsilon,
        params,
        state,
        trace,
    };

    if let Some(g) = run.try_finish() {
        return run.finish(g, 0);
    }
    macro_rules! attempt {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => {
                    return Err(DescentFailure {
                        error,
                        trace: run.trace,
                    })
                }
            }
        };
    }
    for outer in 1..=params.max_outer_iterations {
        attempt!(run.offset());
        let (value, grad) = attempt!(params.objective.value_and_gradient(n, epsilon, &run.state.q));
        run.state.cached_gradient = grad;
        run.record(value);
        let g = std::mem::take(&mut run.state.cached_gradient);
        let mut last = None;
        let mut done = None;
        for _ in 0..params.n_g {
            match attempt!(run.inner_step(&g)) {
                Some(v) => last = Some(v),
                None => break,
            }
            observer(&run.state);
            if let Some(gen) = run.try_finish() {
                done = Some(gen);
                break;
            }
        }
        run.state.cached_gradient = g;
        if let Some(gen) = done {
            return run.finish(gen, outer);
        }
        if let Some((Some(value), radial)) = last {
            update_kg(&mut run.state, &value, radial, params);
        }
        if let Some(gen) = run.try_finish() {
            return run.finish(gen, outer);
        }
    }
    let iterations = params.max_outer_iterations;
    Err(fail(Error::Timeout { iterations }, run.trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_interior(kappa: usize, n: usize, rng: &mut ChaCha8Rng) -> CodeDefVector {
        let len = (1usize << kappa) - 1;
        let top = 1.0 / n as f64;
        let q: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..0.95) * top).collect();
        restore_sum(&CodeDefVector::new(kappa, n, q).unwrap())
    }

    #[test]
    fn unit_cost_examples() {
        let n = 8;
        assert!((unit_cost(1.0 / 16.0, n) - 16.0).abs() < 1e-12);
        assert_eq!(unit_cost(0.0, n), f64::INFINITY);
        assert_eq!(unit_cost(1.0 / 8.0, n), f64::INFINITY);
        for x in [0.01, 0.03, 0.07] {
            assert!((unit_cost(x, n) - unit_cost(0.125 - x, n)).abs() < 1e-9);
        }
    }

    #[test]
    fn trig_update_examples() {
        let n = 5;
        for q in [0.0, 0.03, 0.1, 0.2] {
            assert_eq!(trig_update(q, 0.0, n).unwrap(), q);
        }
        assert!(trig_update(0.1, std::f64::consts::FRAC_PI_2, n).unwrap().abs() < 1e-17);
        assert!(trig_update(0.3, 0.1, n).is_err());
        assert!(trig_update(-0.01, 0.1, n).is_err());
        for q in [0.02, 0.1, 0.17] {
            let h = 1e-7;
            let fd = (trig_update(q, h, n).unwrap() - trig_update(q, -h, n).unwrap()) / (2.0 * h);
            let want = -(q * (0.2 - q)).sqrt();
            assert!((fd - want).abs() <= 1e-6 * want.abs(), "{fd} {want}");
        }
        for x in [-7.0, -1.0, 0.5, 3.0, 100.0] {
            let v = trig_update(0.13, x, n).unwrap();
            assert!((0.0..=0.2).contains(&v));
        }
    }

    #[test]
    fn mean_adjust_examples() {
        let q = CodeDefVector::uniform(3, 7).unwrap();
        let out = mean_adjust(&q).unwrap();
        for (a, b) in out.as_slice().iter().zip(q.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        let q = CodeDefVector::new(2, 2, vec![0.4, 0.4, 0.1]).unwrap();
        let once = mean_adjust(&q).unwrap();
        assert!((once.sum() - 1.0).abs() <= 1e-10);
        assert!(once.as_slice().iter().all(|&x| (0.0..=0.5).contains(&x)));
        let twice = mean_adjust(&once).unwrap();
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mean_adjust_infeasible() {
        // three points at θ = 0 and four at θ = π: centroid radius 1/7, target -3/7
        let q = CodeDefVector::new(3, 2, vec![0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(mean_adjust(&q), Err(Error::InfeasibleMeanAdjust { .. })));
        let fixed = restore_sum(&q);
        assert!((fixed.sum() - 1.0).abs() <= 1e-12);
        assert!(fixed.as_slice().iter().all(|&x| (0.0..=0.5).contains(&x)));
    }

    #[test]
    fn gradient_direction_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..100 {
            let kappa = 3 + trial % 3;
            let len = (1usize << kappa) - 1;
            let n = rng.random_range(kappa..len);
            let q = random_interior(kappa, n, &mut rng);
            let g: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dir = dir_gradient(&q, &g).unwrap();
            let d = inverse_cost(q.as_slice(), n);
            let s = hadamard(&d, &dir);
            assert!((norm(&dir) - 1.0).abs() < 1e-12);
            let scale = norm(&d);
            assert!(s.iter().sum::<f64>().abs() < 1e-10 * scale);
            assert!(dot(&centered(q.as_slice()), &s).abs() < 1e-10 * scale);
            assert!(dot(&g, &s) <= 0.0);

            let m = dir_radial(&q).unwrap();
            assert!((norm(&m) - 1.0).abs() < 1e-12);
            assert!(hadamard(&d, &m).iter().sum::<f64>().abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn gradient_along_radial_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_interior(4, 6, &mut rng);
        // Q̃^{-1} g lands on span(Q̃^{-1} 1, Q̃^{-1}(q - q̄)) when g = a + b (q - q̄)
        let g: Vec<f64> = centered(q.as_slice()).iter().map(|x| 0.3 + 2.0 * x).collect();
        assert!(matches!(
            dir_gradient(&q, &g),
            Err(Error::DegenerateDirection { which: "gradient", .. })
        ));
        let flat = CodeDefVector::uniform(4, 6).unwrap();
        assert!(dir_radial(&flat).is_err());
        assert!(dir_gradient(&flat, &g).is_err());
    }

    #[test]
    fn radial_step_moves_outward() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let q = random_interior(4, 7, &mut rng);
            let m = dir_radial(&q).unwrap();
            let moved = apply_step(&q, &m, 1e-6).unwrap();
            assert!(moved.dist_from_uniform() > q.dist_from_uniform());
        }
    }

    #[test]
    fn combine_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = random_interior(3, 4, &mut rng);
        let g: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let qg = dir_gradient(&q, &g).unwrap();
        let qm = dir_radial(&q).unwrap();
        let (v, _) = combine_direction(&q, &g, Some(&qg), &qm, 0.0).unwrap();
        for (a, b) in v.iter().zip(&qm) {
            assert!((a - b).abs() < 1e-12);
        }
        let (v, vals) = combine_direction(&q, &g, Some(&qg), &qm, 3.0).unwrap();
        assert!((norm(&v) - 1.0).abs() < 1e-12);
        assert!(vals.gradient < 0.0 && vals.radial > 0.0);
        // zero radial weight: the q̀_m direction is orthogonal to q - q̄ in the cost metric
        let zero = vec![0.0; 7];
        assert!(combine_direction(&q, &zero, None, &zero, 1.0).is_err());
    }

    #[test]
    fn combine_with_zero_radial_weight_is_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = random_interior(3, 4, &mut rng);
        let g: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let qg = dir_gradient(&q, &g).unwrap();
        // q̀_g itself is cost-orthogonal to q - q̄, so using it as the radial input zeroes that weight
        let (v, vals) = combine_direction(&q, &g, Some(&qg), &qg, 1.0).unwrap();
        assert!(vals.radial.abs() < 1e-10);
        let same = v.iter().zip(&qg).all(|(a, b)| (a - b).abs() < 1e-9);
        let flipped = v.iter().zip(&qg).all(|(a, b)| (a + b).abs() < 1e-9);
        assert!(same || flipped);
    }

    #[test]
    fn combine_normalizes_three_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let q = random_interior(3, 4, &mut rng);
        let g: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let qg = dir_gradient(&q, &g).unwrap();
        let qm = dir_radial(&q).unwrap();
        let d = inverse_cost(q.as_slice(), 4);
        let (_, vals) = combine_direction(&q, &g, Some(&qg), &qm, 1.0).unwrap();
        // pick k_g so that the two weights are 3 : 4
        let k = 0.75 * vals.radial / -vals.gradient;
        let (v, vals) = combine_direction(&q, &g, Some(&qg), &qm, k).unwrap();
        assert!((-k * vals.gradient / vals.radial - 0.75).abs() < 1e-12);
        assert!((norm(&v) - 1.0).abs() < 1e-12);
        let _ = d;
    }

    #[test]
    fn controller_behaviour() {
        let mut c = Controller::default();
        for _ in 0..200 {
            c.update(&[0.7, -0.1], 0.5, 0.5, 1.0);
            assert!(c.k_g > 0.0);
        }
        assert_eq!(c.k_g, KG_MAX);

        let mut c = Controller::default();
        c.update(&[3.0], 0.5, 1.0, 1.0);
        assert_eq!(c.g_bar, vec![3.0]);
        c.update(&[-2.0], 0.5, 1.0, 1.0);
        assert_eq!(c.g_bar, vec![-2.0]);
        // alpha = 1 leaves no variance, so k_g is not rescaled
        assert_eq!(c.k_g, 1.0);

        // a flipping direction keeps the variance up and k_g bounded
        let mut c = Controller::default();
        for i in 0..200 {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            c.update(&[sign * 0.7, 0.0], 0.5, 0.5, 1.0);
        }
        assert!(c.k_g < 10.0, "{}", c.k_g);

        let mut c = Controller::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let v = [rng.random_range(-100.0..100.0), rng.random_range(-1.0..1.0)];
            c.update(&v, rng.random_range(0.0..1.0), 0.5, 1.0);
            assert!(c.k_g > 0.0 && c.k_g.is_finite());
        }
    }

    #[test]
    fn small_step_matches_first_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let q = random_interior(4, 6, &mut rng);
            let g: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
            let qg = dir_gradient(&q, &g).unwrap();
            let qm = dir_radial(&q).unwrap();
            let (dir, _) = combine_direction(&q, &g, Some(&qg), &qm, 1.0).unwrap();
            let s = 1e-6;
            let moved = apply_step(&q, &dir, s).unwrap();
            let d = inverse_cost(q.as_slice(), 6);
            let sd = hadamard(&d, &dir);
            let m = norm(&sd);
            let want: Vec<f64> = sd.iter().map(|x| s * x / m).collect();
            let got: Vec<f64> = moved.as_slice().iter().zip(q.as_slice()).map(|(a, b)| a - b).collect();
            let err: Vec<f64> = got.iter().zip(&want).map(|(a, b)| a - b).collect();
            assert!(norm(&err) <= 1e-3 * norm(&want), "{} {}", norm(&err), norm(&want));
        }
    }

    #[test]
    fn large_step_stops_short_of_bounds() {
        let q = CodeDefVector::new(2, 2, vec![0.49, 0.5, 0.01]).unwrap();
        // push the first coordinate up and the last one down, far too hard
        let dir = vec![1.0, 0.0, -1.0];
        let moved = apply_step(&q, &dir, 10.0).unwrap();
        for (i, (&a, &b)) in moved.as_slice().iter().zip(q.as_slice()).enumerate() {
            assert!((0.0..=0.5).contains(&a), "{i}: {a}");
            if dir[i] != 0.0 {
                // moved the right way, at most halfway in angle
                assert_eq!((a - b).signum(), dir[i], "{i}");
                let room = if dir[i] > 0.0 {
                    (4.0 * b - 1.0).acos()
                } else {
                    (1.0 - 4.0 * b).acos()
                };
                let used = ((4.0 * a - 1.0).acos() - (4.0 * b - 1.0).acos()).abs();
                assert!(used <= 0.5 * room + 1e-12, "{i}: {used} {room}");
            }
        }
    }

    #[test]
    fn sum_fix_keeps_bound_coordinates() {
        let mut v = vec![1.0 / 9.0; 8];
        v.extend([0.0; 6]);
        v.push(0.0);
        // one interior coordinate carries the sum error
        v[7] = 0.1;
        v[14] = 1.0 / 9.0 - 0.1 - 3e-4;
        let q = CodeDefVector::new(4, 9, v.clone()).unwrap();
        let fixed = restore_sum(&q);
        assert!((fixed.sum() - 1.0).abs() <= 1e-12);
        for i in 8..14 {
            assert_eq!(fixed.as_slice()[i], 0.0);
        }
        for i in 0..7 {
            assert!((fixed.as_slice()[i] - 1.0 / 9.0).abs() < 1e-15);
        }
    }

    #[test]
    fn small_vertex_case_terminates() {
        let params = DescentParams {
            s: 1e-3,
            seed: 2140919304184404,
            max_outer_iterations: 2000,
            ..DescentParams::default()
        };
        let out = run_descent(4, 9, 5.0 / 9.0, &params).unwrap();
        assert_eq!(out.generator.rank(), 4);
    }

    #[test]
    fn uniform_code_is_already_done() {
        let params = DescentParams::default();
        let out = run_descent(3, 7, 0.5, &params).unwrap();
        assert_eq!(out.outer_iterations, 0);
        assert_eq!(
            out.generator.words().collect::<Vec<u32>>(),
            (1..=7).collect::<Vec<u32>>()
        );
        assert_eq!(out.trace.records.len(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = DescentParams::default();
        assert!(run_descent(3, 5, 0.0, &p).is_err());
        assert!(run_descent(3, 8, 0.5, &p).is_err());
        assert!(run_descent(11, 20, 0.5, &p).is_err());
        let bad = DescentParams { n_g: 0, ..p.clone() };
        assert!(run_descent(3, 5, 0.5, &bad).is_err());
        let bad = DescentParams { alpha: 1.5, ..p };
        assert!(run_descent(3, 5, 0.5, &bad).is_err());
    }

    #[test]
    fn small_run_terminates_and_is_deterministic() {
        let params = DescentParams {
            s: 1e-3,
            seed: 3,
            ..DescentParams::default()
        };
        let mut worst_sum: f64 = 0.0;
        let a = run_descent_observed(4, 6, 0.5, &params, |st| {
            worst_sum = worst_sum.max((st.q.sum() - 1.0).abs());
        })
        .unwrap();
        assert!(worst_sum <= 1e-9);
        let b = run_descent(4, 6, 0.5, &params).unwrap();
        assert_eq!(a.generator, b.generator);
        let csv = |t: &DescentTrace| {
            let mut buf = Vec::new();
            t.write_csv(&mut buf).unwrap();
            buf
        };
        assert_eq!(csv(&a.trace), csv(&b.trace));
        assert_eq!(a.generator.n(), 6);
        let steps: Vec<usize> = a.trace.records.iter().map(|r| r.step).collect();
        assert!(steps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn timeout_carries_trace() {
        let params = DescentParams {
            max_outer_iterations: 3,
            ..DescentParams::default()
        };
        let err = run_descent(4, 6, 0.5, &params).unwrap_err();
        assert_eq!(err.error, Error::Timeout { iterations: 3 });
        assert_eq!(err.trace.records.len(), 3);
    }

    #[test]
    fn trace_csv_format() {
        let params = DescentParams {
            s: 1e-3,
            record_snapshots: true,
            ..DescentParams::default()
        };
        let out = run_descent(3, 4, 0.5, &params).unwrap();
        let mut buf = Vec::new();
        out.trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# rng=chacha8 seed=0");
        assert_eq!(lines.next().unwrap(), TRACE_HEADER);
        assert_eq!(lines.count(), out.trace.records.len());
        let json = out.trace.snapshots_json().unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.as_array().unwrap().len(), out.trace.records.len());
    }
}
