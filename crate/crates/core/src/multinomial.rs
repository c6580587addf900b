//! Bilateral multinomial sums and the reductions that evaluate them.
//!
//! A [`TheoremInstance`] fixes an exponent `n`, variables `x₁..x_k` and
//! anchors `a₁..a_k`. Each summation index `ℓᵢ` runs over `aᵢ + ℤ`, and the
//! summand is
//!
//! ```text
//! Γ(n+1) / (Γ(ℓ₁+1)···Γ(ℓ_k+1)·Γ(n−ℓ₁−…−ℓ_k+1)) · x₁^ℓ₁ ··· x_k^ℓ_k
//! ```
//!
//! with every Gamma quotient regularized. The target is `(1 + Σxᵢ)^n`.
//!
//! Two strategies are available. [`evaluate_multinomial`] sums the full
//! index box shell by shell in max-norm. [`nested_reduction`] peels one
//! variable at a time: with `Sᵢ = 1 + x₁ + … + xᵢ` and `wᵢ = xᵢ / Sᵢ₋₁`,
//! the sum factors into bilateral binomial series in `wᵢ`, each convergent
//! when `|wᵢ| = 1`, which is the modulus chain `|xᵢ| = |Sᵢ₋₁|`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::bilateral::{
    bilateral_binomial_rhs_with_window, decay_exponent, diagnose, BilateralError, TruncationReport, Verdict,
    VerificationReport, VerificationVerdict, DEFAULT_TOLERANCE,
};
use crate::gamma::{gamma_ratio, gamma_ratio_log, nearest_integer, pole_index, principal_power, GammaError};
use crate::summation::ComplexSum;

pub const CHAIN_TOLERANCE: f64 = 1e-9;
pub const MIN_WINDOW: usize = 4;
pub const TERM_CAP: u128 = 100_000_000;
pub const DEFAULT_SCHEDULE: [usize; 4] = [64, 128, 256, 512];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultinomialError {
    #[error("an instance needs at least one variable")]
    Empty,
    #[error("{variables} variables but {anchors} anchors")]
    LengthMismatch { variables: usize, anchors: usize },
    #[error("anchor {index} = {value} is outside [0, 1)")]
    AnchorOutOfRange { index: usize, value: f64 },
    #[error("non-finite input at position {index}")]
    NonFinite { index: usize },
    #[error("index {index} = {value} is not in its anchor class")]
    IndexOffAnchor { index: usize, value: f64 },
    #[error("expected {expected} indices, got {got}")]
    IndexCount { expected: usize, got: usize },
    #[error("window {window} is below the minimum of {min}")]
    WindowTooSmall { window: usize, min: usize },
    #[error("{terms} terms requested, cap is {cap}")]
    TooLarge { terms: u128, cap: u128 },
    #[error("coefficient diverges at indices {indices:?}")]
    DivergentCoefficient { indices: Vec<f64> },
    #[error("modulus chain violated at variable {index}: residual {residual:e}")]
    ChainViolated { index: usize, residual: f64 },
    #[error("window schedule must hold at least {min} strictly increasing entries")]
    InvalidSchedule { min: usize },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error(transparent)]
    Bilateral(#[from] BilateralError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremInstance {
    exponent_n: f64,
    #[serde(with = "crate::serde_complex::vec")]
    variables: Vec<Complex64>,
    anchors: Vec<f64>,
}

impl TheoremInstance {
    pub fn new(exponent_n: f64, variables: Vec<Complex64>, anchors: Vec<f64>) -> Result<Self, MultinomialError> {
        if variables.is_empty() {
            return Err(MultinomialError::Empty);
        }
        if variables.len() != anchors.len() {
            return Err(MultinomialError::LengthMismatch { variables: variables.len(), anchors: anchors.len() });
        }
        if !exponent_n.is_finite() {
            return Err(MultinomialError::NonFinite { index: 0 });
        }
        if let Some(index) = variables.iter().position(|x| !x.is_finite()) {
            return Err(MultinomialError::NonFinite { index: index + 1 });
        }
        if let Some((index, &value)) = anchors.iter().enumerate().find(|(_, a)| !(0.0..1.0).contains(*a)) {
            return Err(MultinomialError::AnchorOutOfRange { index, value });
        }
        Ok(Self { exponent_n, variables, anchors })
    }

    /// Instance with every anchor at zero.
    pub fn integral(exponent_n: f64, variables: Vec<Complex64>) -> Result<Self, MultinomialError> {
        let anchors = vec![0.0; variables.len()];
        Self::new(exponent_n, variables, anchors)
    }

    pub fn exponent_n(&self) -> f64 {
        self.exponent_n
    }

    pub fn variables(&self) -> &[Complex64] {
        &self.variables
    }

    pub fn anchors(&self) -> &[f64] {
        &self.anchors
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    /// `(1 + Σxᵢ)^n` on the principal branch.
    pub fn target(&self) -> Result<Complex64, MultinomialError> {
        let base = self.variables.iter().fold(Complex64::new(1.0, 0.0), |acc, x| acc + x);
        Ok(principal_power(base, self.exponent_n)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusChainReport {
    pub residuals: Vec<f64>,
}

impl ModulusChainReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn satisfied(&self) -> bool {
        self.max_residual() <= CHAIN_TOLERANCE
    }

    /// First variable (zero-based) whose residual exceeds the tolerance.
    pub fn first_violation(&self) -> Option<(usize, f64)> {
        self.residuals.iter().copied().enumerate().find(|&(_, r)| r > CHAIN_TOLERANCE || r.is_nan())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiTruncationReport {
    #[serde(with = "crate::serde_complex")]
    pub value: Complex64,
    pub window: usize,
    pub shell_tail_magnitude: f64,
    pub decay_exponent_estimate: f64,
    pub verdict: Verdict,
}

impl MultiTruncationReport {
    pub fn is_terminating(&self) -> bool {
        self.decay_exponent_estimate == f64::INFINITY
    }
}

/// `| |xᵢ| − |1 + Σ_{j<i} xⱼ| |` for each variable.
pub fn modulus_chain_residuals(variables: &[Complex64]) -> ModulusChainReport {
    let mut partial = Complex64::new(1.0, 0.0);
    let residuals = variables
        .iter()
        .map(|x| {
            let r = (x.norm() - partial.norm()).abs();
            partial += x;
            r
        })
        .collect();
    ModulusChainReport { residuals }
}

/// Variables on the modulus chain with the given phases:
/// `x₁ = e^{iθ₁}`, `xᵢ = |1 + Σ_{j<i}xⱼ|·e^{iθᵢ}`.
pub fn chain_from_angles(angles: &[f64]) -> Vec<Complex64> {
    let mut partial = Complex64::new(1.0, 0.0);
    angles
        .iter()
        .map(|&theta| {
            let x = Complex64::from_polar(partial.norm(), theta);
            partial += x;
            x
        })
        .collect()
}

fn power_product(variables: &[Complex64], indices: &[f64]) -> Result<Complex64, GammaError> {
    let mut acc = Complex64::new(1.0, 0.0);
    for (&x, &l) in variables.iter().zip(indices) {
        if l != 0.0 {
            acc *= principal_power(x, l)?;
        }
    }
    Ok(acc)
}

/// Fills `den` with the Gamma arguments `ℓᵢ + 1` and `n − Σℓ + 1`.
fn coefficient_arguments(n: f64, indices: &[f64], den: &mut Vec<f64>) {
    den.clear();
    den.extend(indices.iter().map(|l| l + 1.0));
    den.push(n - indices.iter().sum::<f64>() + 1.0);
}

/// Summand at `indices`, with index sum and power product evaluated directly.
fn term_unchecked(
    n: f64,
    variables: &[Complex64],
    indices: &[f64],
    den: &mut Vec<f64>,
) -> Result<Complex64, MultinomialError> {
    coefficient_arguments(n, indices, den);
    let den = den.as_slice();
    // More poles below than above: the coefficient vanishes without evaluating Γ.
    let lower_poles = den.iter().filter(|&&x| x <= 0.5 && pole_index(x).is_some()).count();
    let upper_poles = usize::from(pole_index(n + 1.0).is_some());
    if lower_poles > upper_poles {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let coefficient = gamma_ratio(&[n + 1.0], den);
    if coefficient.is_divergent() {
        return Err(MultinomialError::DivergentCoefficient { indices: indices.to_vec() });
    }
    if coefficient.vanishes() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let direct = power_product(variables, indices)? * coefficient.mantissa();
    if direct.is_finite() && (direct.re != 0.0 || direct.im != 0.0) {
        return Ok(direct);
    }

    // Overflow or underflow in one factor: recombine in log space.
    let log = gamma_ratio_log(&[n + 1.0], den);
    if log.log.sign == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut log_magnitude = log.log.log_magnitude;
    let mut phase = if log.log.sign < 0 { std::f64::consts::PI } else { 0.0 };
    for (&x, &l) in variables.iter().zip(indices) {
        if l == 0.0 {
            continue;
        }
        if x == Complex64::new(0.0, 0.0) {
            return Ok(principal_power(x, l)?);
        }
        log_magnitude += l * x.norm().ln();
        let mut arg = x.arg();
        if arg == -std::f64::consts::PI {
            arg = std::f64::consts::PI;
        }
        phase += l * arg;
    }
    Ok(Complex64::from_polar(log_magnitude.exp(), phase))
}

/// One summand of the bilateral multinomial sum.
pub fn general_term(inst: &TheoremInstance, indices: &[f64]) -> Result<Complex64, MultinomialError> {
    if indices.len() != inst.dim() {
        return Err(MultinomialError::IndexCount { expected: inst.dim(), got: indices.len() });
    }
    for (index, (&l, &a)) in indices.iter().zip(&inst.anchors).enumerate() {
        if !l.is_finite() || nearest_integer(l - a).is_none() {
            return Err(MultinomialError::IndexOffAnchor { index, value: l });
        }
    }
    term_unchecked(inst.exponent_n, &inst.variables, indices, &mut Vec::with_capacity(indices.len() + 1))
}

/// Visits every offset tuple of max-norm exactly `shell` in lexicographic order.
fn for_each_in_shell<E>(dim: usize, shell: i64, visit: &mut impl FnMut(&[i64]) -> Result<(), E>) -> Result<(), E> {
    fn recurse<E>(
        offsets: &mut Vec<i64>,
        dim: usize,
        shell: i64,
        reached: bool,
        visit: &mut impl FnMut(&[i64]) -> Result<(), E>,
    ) -> Result<(), E> {
        let depth = offsets.len();
        if depth == dim {
            return visit(offsets);
        }
        if depth + 1 == dim && !reached {
            // Only the two boundary values keep the tuple on the shell.
            let ends: &[i64] = if shell == 0 { &[0] } else { &[-shell, shell] };
            for &j in ends {
                offsets.push(j);
                visit(offsets)?;
                offsets.pop();
            }
            return Ok(());
        }
        for j in -shell..=shell {
            offsets.push(j);
            recurse(offsets, dim, shell, reached || j.abs() == shell, visit)?;
            offsets.pop();
        }
        Ok(())
    }
    recurse(&mut Vec::with_capacity(dim), dim, shell, false, visit)
}

fn box_size(dim: usize, window: usize) -> u128 {
    let side = 2 * window as u128 + 1;
    (0..dim).try_fold(1u128, |acc, _| acc.checked_mul(side)).unwrap_or(u128::MAX)
}

/// Running state of a shell-ordered summation.
struct ShellSum {
    total: ComplexSum,
    masses: Vec<f64>,
}

impl ShellSum {
    fn run(
        inst: &TheoremInstance,
        window: usize,
        mut after_shell: impl FnMut(usize, Complex64),
    ) -> Result<Self, MultinomialError> {
        let dim = inst.dim();
        let mut total = ComplexSum::new();
        let mut masses = Vec::with_capacity(window + 1);
        let mut indices = vec![0.0; dim];
        let mut scratch = Vec::with_capacity(dim + 1);
        for shell in 0..=window {
            let mut mass = 0.0;
            for_each_in_shell(dim, shell as i64, &mut |offsets: &[i64]| {
                for ((slot, &a), &j) in indices.iter_mut().zip(&inst.anchors).zip(offsets) {
                    *slot = a + j as f64;
                }
                let t = term_unchecked(inst.exponent_n, &inst.variables, &indices, &mut scratch)?;
                total.add(t);
                mass += t.norm();
                Ok::<(), MultinomialError>(())
            })?;
            masses.push(mass);
            after_shell(shell, total.value());
        }
        Ok(Self { total, masses })
    }

    fn terminating(&self) -> bool {
        let k = self.masses.len();
        k >= 2 && self.masses[k - 1] == 0.0 && self.masses[k - 2] == 0.0
    }

    fn report(&self, window: usize, bounded: bool, tolerance: f64) -> MultiTruncationReport {
        let value = self.total.value();
        let tail = *self.masses.last().unwrap_or(&0.0);
        let terminating = self.terminating();
        let exponent = if terminating {
            f64::INFINITY
        } else {
            let half = window.div_ceil(2).max(1);
            let samples: Vec<(usize, f64)> = (half..=window).map(|s| (s, self.masses[s])).collect();
            decay_exponent(&samples)
        };
        let verdict = diagnose(value, exponent, tail, terminating, bounded, tolerance);
        MultiTruncationReport { value, window, shell_tail_magnitude: tail, decay_exponent_estimate: exponent, verdict }
    }
}

fn check_window(dim: usize, window: usize) -> Result<(), MultinomialError> {
    if window < MIN_WINDOW {
        return Err(MultinomialError::WindowTooSmall { window, min: MIN_WINDOW });
    }
    let terms = box_size(dim, window);
    if terms > TERM_CAP {
        return Err(MultinomialError::TooLarge { terms, cap: TERM_CAP });
    }
    Ok(())
}

fn check_tolerance(tolerance: f64) -> Result<(), MultinomialError> {
    if tolerance > 0.0 && tolerance.is_finite() {
        Ok(())
    } else {
        Err(MultinomialError::InvalidTolerance(tolerance))
    }
}

pub fn evaluate_multinomial(inst: &TheoremInstance, window: usize) -> Result<MultiTruncationReport, MultinomialError> {
    evaluate_multinomial_with_tolerance(inst, window, DEFAULT_TOLERANCE)
}

/// Full-box sum over offsets in `[−window, window]^k`, shell by shell.
///
/// The side condition used for the verdict is the modulus chain; a sum that
/// terminates inside the window is `Converged` regardless.
pub fn evaluate_multinomial_with_tolerance(
    inst: &TheoremInstance,
    window: usize,
    tolerance: f64,
) -> Result<MultiTruncationReport, MultinomialError> {
    check_window(inst.dim(), window)?;
    check_tolerance(tolerance)?;
    let sum = ShellSum::run(inst, window, |_, _| {})?;
    let bounded = modulus_chain_residuals(&inst.variables).satisfied();
    Ok(sum.report(window, bounded, tolerance))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestedReduction {
    #[serde(with = "crate::serde_complex")]
    pub value: Complex64,
    /// One bilateral binomial series per variable, innermost first.
    pub levels: Vec<TruncationReport>,
}

/// Evaluates the sum as a product of one-dimensional bilateral series.
///
/// Level `i` sums `Σ_j C(n, aᵢ+j)·wᵢ^(aᵢ+j)` with `wᵢ = xᵢ / (1 + x₁ + … + xᵢ₋₁)`,
/// which equals `(1 + wᵢ)^n`; the product telescopes to `(1 + Σx)^n`.
pub fn nested_reduction(inst: &TheoremInstance, window: usize) -> Result<NestedReduction, MultinomialError> {
    nested_reduction_with_tolerance(inst, window, DEFAULT_TOLERANCE)
}

pub fn nested_reduction_with_tolerance(
    inst: &TheoremInstance,
    window: usize,
    tolerance: f64,
) -> Result<NestedReduction, MultinomialError> {
    if let Some((index, residual)) = modulus_chain_residuals(&inst.variables).first_violation() {
        return Err(MultinomialError::ChainViolated { index, residual });
    }
    let mut partial = Complex64::new(1.0, 0.0);
    let mut value = Complex64::new(1.0, 0.0);
    let mut levels = Vec::with_capacity(inst.dim());
    for (&x, &anchor) in inst.variables.iter().zip(&inst.anchors) {
        let w = x / partial;
        let level = bilateral_binomial_rhs_with_window(inst.exponent_n, anchor, w, window, tolerance)?;
        value *= level.value;
        levels.push(level.series);
        partial += x;
    }
    Ok(NestedReduction { value, levels })
}

/// Outcome of comparing the nested reduction with `(1 + Σx)^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestedCheck {
    pub report: VerificationReport,
    pub chain: ModulusChainReport,
    /// Absent when the modulus chain is violated.
    pub reduction: Option<NestedReduction>,
}

/// Pass needs the tolerance met and no series flagged as diverging; a miss
/// on a slowly converging series is inconclusive rather than a failure.
fn settle(base: VerificationVerdict, verdicts: &[Verdict]) -> VerificationVerdict {
    if verdicts.contains(&Verdict::NotConverging) {
        VerificationVerdict::Inconclusive
    } else if base == VerificationVerdict::Pass {
        VerificationVerdict::Pass
    } else if verdicts.contains(&Verdict::SlowlyConverging) {
        VerificationVerdict::Inconclusive
    } else {
        VerificationVerdict::Fail
    }
}

pub fn check_nested_reduction(
    inst: &TheoremInstance,
    window: usize,
    tolerance: f64,
) -> Result<NestedCheck, MultinomialError> {
    check_tolerance(tolerance)?;
    let lhs = inst.target()?;
    let chain = modulus_chain_residuals(&inst.variables);
    match nested_reduction_with_tolerance(inst, window, tolerance) {
        Err(MultinomialError::ChainViolated { .. }) => {
            let missing = Complex64::new(f64::NAN, f64::NAN);
            let report =
                VerificationReport::compare(lhs, missing, tolerance).with_verdict(VerificationVerdict::Inconclusive);
            Ok(NestedCheck { report, chain, reduction: None })
        }
        Err(e) => Err(e),
        Ok(reduction) => {
            let report = VerificationReport::compare(lhs, reduction.value, tolerance);
            let verdicts: Vec<Verdict> = reduction.levels.iter().map(|l| l.verdict).collect();
            let report = report.with_verdict(settle(report.verdict, &verdicts));
            Ok(NestedCheck { report, chain, reduction: Some(reduction) })
        }
    }
}

/// `uᵢ = xᵢ − 1/(k+1)` for `k+1` variables, so that `Σxᵢ = 1 + Σuᵢ`.
pub fn symmetric_substitution(variables: &[Complex64]) -> Vec<Complex64> {
    let shift = 1.0 / variables.len() as f64;
    variables.iter().map(|x| x - shift).collect()
}

/// The symmetric sum with factors `(xᵢ − 1/(k+1))^ℓᵢ`, targeting `(Σxᵢ)^n`.
pub fn symmetric_form(
    exponent_n: f64,
    variables: &[Complex64],
    anchors: &[f64],
    window: usize,
) -> Result<MultiTruncationReport, MultinomialError> {
    symmetric_form_with_tolerance(exponent_n, variables, anchors, window, DEFAULT_TOLERANCE)
}

pub fn symmetric_form_with_tolerance(
    exponent_n: f64,
    variables: &[Complex64],
    anchors: &[f64],
    window: usize,
    tolerance: f64,
) -> Result<MultiTruncationReport, MultinomialError> {
    let inst = TheoremInstance::new(exponent_n, symmetric_substitution(variables), anchors.to_vec())?;
    evaluate_multinomial_with_tolerance(&inst, window, tolerance)
}

/// Compares the symmetric sum with `(Σxᵢ)^n`.
pub fn check_symmetric_form(
    exponent_n: f64,
    variables: &[Complex64],
    anchors: &[f64],
    window: usize,
    tolerance: f64,
) -> Result<(VerificationReport, MultiTruncationReport), MultinomialError> {
    let series = symmetric_form_with_tolerance(exponent_n, variables, anchors, window, tolerance)?;
    let base = variables.iter().sum::<Complex64>();
    let lhs = principal_power(base, exponent_n)?;
    let report = VerificationReport::compare(lhs, series.value, tolerance);
    let report = report.with_verdict(settle(report.verdict, &[series.verdict]));
    Ok((report, series))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub verdict: Verdict,
    #[serde(with = "crate::serde_complex")]
    pub value: Complex64,
    pub windows: Vec<usize>,
    #[serde(with = "crate::serde_complex::vec")]
    pub partial_sums: Vec<Complex64>,
    pub deltas: Vec<f64>,
    pub decay_exponent_estimate: f64,
}

/// Sums the multinomial with every variable equal to one over a schedule
/// of windows and judges convergence from the partial sums.
///
/// The verdict is `NotConverging` when a partial sum is non-finite or when
/// three consecutive deltas between scheduled partial sums fail to
/// decrease; otherwise the shell-decay rule decides.
pub fn unit_sum_probe(
    exponent_n: f64,
    dim: usize,
    anchors: &[f64],
    schedule: &[usize],
) -> Result<ProbeReport, MultinomialError> {
    unit_sum_probe_with_tolerance(exponent_n, dim, anchors, schedule, DEFAULT_TOLERANCE)
}

pub fn unit_sum_probe_with_tolerance(
    exponent_n: f64,
    dim: usize,
    anchors: &[f64],
    schedule: &[usize],
    tolerance: f64,
) -> Result<ProbeReport, MultinomialError> {
    const MIN_SCHEDULE: usize = 4;
    if schedule.len() < MIN_SCHEDULE || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MultinomialError::InvalidSchedule { min: MIN_SCHEDULE });
    }
    check_tolerance(tolerance)?;
    let inst = TheoremInstance::new(exponent_n, vec![Complex64::new(1.0, 0.0); dim], anchors.to_vec())?;
    let largest = *schedule.last().unwrap_or(&0);
    check_window(dim, schedule[0])?;
    check_window(dim, largest)?;

    let mut partial_sums = Vec::with_capacity(schedule.len());
    let sum = ShellSum::run(&inst, largest, |shell, value| {
        if schedule.contains(&shell) {
            partial_sums.push(value);
        }
    })?;
    let deltas: Vec<f64> = partial_sums.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let mut report = sum.report(largest, true, tolerance);

    let diverging = partial_sums.iter().any(|s| !s.is_finite())
        || deltas.windows(3).any(|d| d[0] <= d[1] && d[1] <= d[2] && d[2] > 0.0)
        || deltas.iter().any(|d| d.is_nan());
    if !report.is_terminating() && diverging {
        report.verdict = Verdict::NotConverging;
    }
    Ok(ProbeReport {
        verdict: report.verdict,
        value: report.value,
        windows: schedule.to_vec(),
        partial_sums,
        deltas,
        decay_exponent_estimate: report.decay_exponent_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{point_value, LatticePoint};
    use proptest::prelude::*;
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    /// Coefficients of `(1 + y₁ + … + y_k)^n` by repeated multiplication,
    /// keyed by the exponents of `y₁..y_k`.
    fn expand(dim: usize, n: u32) -> BTreeMap<Vec<u32>, i128> {
        let mut poly = BTreeMap::from([(vec![0; dim], 1i128)]);
        for _ in 0..n {
            let mut next = BTreeMap::new();
            for (exps, c) in &poly {
                *next.entry(exps.clone()).or_insert(0) += c;
                for axis in 0..dim {
                    let mut e = exps.clone();
                    e[axis] += 1;
                    *next.entry(e).or_insert(0) += c;
                }
            }
            poly = next;
        }
        poly
    }

    fn brute_force(n: u32, vars: &[i64]) -> i128 {
        expand(vars.len(), n)
            .iter()
            .map(|(exps, c)| exps.iter().zip(vars).map(|(&e, &x)| i128::from(x).pow(e)).product::<i128>() * c)
            .sum()
    }

    /// `(x₀ + x₁ + … + x_k)^n` from the same expansion, with `x₀` on the constant slot.
    fn brute_force_homogeneous(n: u32, vars: &[i64]) -> i128 {
        expand(vars.len() - 1, n)
            .iter()
            .map(|(exps, c)| {
                let lead = n - exps.iter().sum::<u32>();
                let rest: i128 = exps.iter().zip(&vars[1..]).map(|(&e, &x)| i128::from(x).pow(e)).product();
                c * i128::from(vars[0]).pow(lead) * rest
            })
            .sum()
    }

    #[test]
    fn instance_validation() {
        assert_eq!(TheoremInstance::new(2.0, vec![], vec![]), Err(MultinomialError::Empty));
        assert_eq!(
            TheoremInstance::new(2.0, vec![re(1.0)], vec![0.0, 0.0]),
            Err(MultinomialError::LengthMismatch { variables: 1, anchors: 2 })
        );
        assert_eq!(
            TheoremInstance::new(2.0, vec![re(1.0)], vec![1.0]),
            Err(MultinomialError::AnchorOutOfRange { index: 0, value: 1.0 })
        );
    }

    #[test]
    fn term_examples() {
        let inst = TheoremInstance::integral(2.0, vec![re(1.0), re(1.0)]).unwrap();
        assert_eq!(general_term(&inst, &[1.0, 1.0]).unwrap(), re(2.0));
        assert_eq!(general_term(&inst, &[-1.0, 2.0]).unwrap(), re(0.0));
        assert_eq!(general_term(&inst, &[3.0, -4.0]).unwrap(), re(0.0));
        assert!(matches!(general_term(&inst, &[0.5, 1.0]), Err(MultinomialError::IndexOffAnchor { index: 0, .. })));
    }

    #[test]
    fn half_integer_term_matches_log_gamma_factors() {
        use statrs::function::gamma::ln_gamma;
        let x = chain_from_angles(&[PI / 3.0, PI / 5.0]);
        let inst = TheoremInstance::new(2.5, x.clone(), vec![0.5, 0.5]).unwrap();
        for (l1, l2) in [(0.5, 0.5), (1.5, -0.5), (-2.5, 3.5), (4.5, 2.5)] {
            let rest: f64 = 2.5 - l1 - l2 + 1.0;
            let args = [l1 + 1.0, l2 + 1.0, rest];
            let mut log_mag = ln_gamma(3.5);
            let mut sign = 1.0;
            for a in args {
                log_mag -= ln_gamma(a);
                // Γ is negative on (−2m−1, −2m) for m ≥ 0.
                if a < 0.0 && (a.floor() as i64).rem_euclid(2) == 1 {
                    sign = -sign;
                }
            }
            let phase = l1 * x[0].arg() + l2 * x[1].arg();
            let magnitude = log_mag.exp() * x[0].norm().powf(l1) * x[1].norm().powf(l2);
            let expected = Complex64::from_polar(sign * magnitude, phase);
            let got = general_term(&inst, &[l1, l2]).unwrap();
            assert!((got - expected).norm() <= 1e-12 * expected.norm(), "{l1} {l2}: {got} vs {expected}");
        }
    }

    #[test]
    fn integer_examples() {
        let inst = TheoremInstance::integral(3.0, vec![re(2.0), re(3.0)]).unwrap();
        let r = evaluate_multinomial(&inst, 8).unwrap();
        assert_eq!(r.value, re(216.0));
        assert_eq!(r.verdict, Verdict::Converged);

        let inst = TheoremInstance::integral(6.0, vec![re(1.0); 3]).unwrap();
        let r = evaluate_multinomial(&inst, 8).unwrap();
        assert_eq!(r.value, re(4096.0));
    }

    #[test]
    fn window_limits() {
        let inst = TheoremInstance::integral(2.0, vec![re(1.0); 2]).unwrap();
        assert_eq!(evaluate_multinomial(&inst, 3), Err(MultinomialError::WindowTooSmall { window: 3, min: 4 }));
        let inst = TheoremInstance::integral(2.0, vec![re(1.0); 4]).unwrap();
        assert!(matches!(evaluate_multinomial(&inst, 60), Err(MultinomialError::TooLarge { .. })));
    }

    #[test]
    fn shells_are_complete_and_ordered() {
        for dim in 1..=3 {
            let mut seen = Vec::new();
            for shell in 0..=3 {
                let mut this = Vec::new();
                for_each_in_shell(dim, shell, &mut |o: &[i64]| {
                    assert_eq!(o.iter().map(|j| j.abs()).max().unwrap(), shell);
                    this.push(o.to_vec());
                    Ok::<(), ()>(())
                })
                .unwrap();
                assert!(this.windows(2).all(|w| w[0] < w[1]));
                seen.extend(this);
            }
            assert_eq!(seen.len() as u128, box_size(dim, 3));
        }
    }

    #[test]
    fn nested_reduction_examples() {
        let inst = TheoremInstance::integral(2.0, vec![re(1.0), re(2.0)]).unwrap();
        let r = nested_reduction(&inst, 8).unwrap();
        assert_eq!(r.value, re(16.0));

        let x = chain_from_angles(&[PI / 3.0, PI / 5.0]);
        let inst = TheoremInstance::new(2.5, x, vec![0.5, 0.5]).unwrap();
        let target = inst.target().unwrap();
        let r = nested_reduction(&inst, 1024).unwrap();
        assert!((r.value - target).norm() <= 1e-4 * target.norm(), "{} vs {target}", r.value);
        assert!(r.levels.iter().all(|l| l.verdict == Verdict::Converged));
    }

    #[test]
    fn nested_reduction_requires_the_chain() {
        let inst = TheoremInstance::new(2.5, vec![re(1.0), re(1.0)], vec![0.5, 0.5]).unwrap();
        assert!(matches!(nested_reduction(&inst, 64), Err(MultinomialError::ChainViolated { index: 1, .. })));
    }

    #[test]
    fn four_variable_chain_reduces() {
        let x = chain_from_angles(&[0.4, -0.9, 1.3, 0.2]);
        assert!(modulus_chain_residuals(&x).satisfied());
        let inst = TheoremInstance::new(3.5, x, vec![0.25, 0.5, 0.0, 0.75]).unwrap();
        let target = inst.target().unwrap();
        let r = nested_reduction(&inst, 2048).unwrap();
        assert!((r.value - target).norm() <= 1e-5 * target.norm(), "{} vs {target}", r.value);
    }

    #[test]
    fn direct_sum_off_integers_is_flagged() {
        // The full-box sum grows with the window even on the chain.
        let x = chain_from_angles(&[PI / 3.0, PI / 5.0]);
        let inst = TheoremInstance::new(2.5, x, vec![0.5, 0.5]).unwrap();
        let r = evaluate_multinomial(&inst, 32).unwrap();
        assert_eq!(r.verdict, Verdict::NotConverging);
    }

    #[test]
    fn nested_check_verdicts() {
        let x = chain_from_angles(&[PI / 3.0, PI / 5.0]);
        let inst = TheoremInstance::new(2.5, x, vec![0.5, 0.5]).unwrap();
        let check = check_nested_reduction(&inst, 256, 1e-3).unwrap();
        assert_eq!(check.report.verdict, VerificationVerdict::Pass);

        let inst = TheoremInstance::new(2.5, vec![re(1.0), re(1.0)], vec![0.5, 0.5]).unwrap();
        let check = check_nested_reduction(&inst, 256, 1e-3).unwrap();
        assert_eq!(check.report.verdict, VerificationVerdict::Inconclusive);
        assert!(check.reduction.is_none());
        assert!(!check.chain.satisfied());
    }

    #[test]
    fn symmetric_check_passes_on_terminating_input() {
        let (report, series) = check_symmetric_form(3.0, &[re(1.0), re(1.0), re(2.0)], &[0.0; 3], 8, 1e-10).unwrap();
        assert_eq!(report.verdict, VerificationVerdict::Pass);
        assert!(series.is_terminating());
    }

    #[test]
    fn chain_examples() {
        assert!(modulus_chain_residuals(&[Complex64::from_polar(1.0, 2.2)]).residuals[0] < 1e-15);
        assert_eq!(modulus_chain_residuals(&[re(1.0), re(2.0)]).residuals, vec![0.0, 0.0]);
        let r = modulus_chain_residuals(&[Complex64::i(), Complex64::from_polar(2f64.sqrt(), 0.7)]);
        assert!(r.max_residual() < 1e-15);
        assert!(r.satisfied());
        assert!(!modulus_chain_residuals(&[re(1.0), re(1.0)]).satisfied());
    }

    #[test]
    fn symmetric_examples() {
        let r = symmetric_form(2.0, &[re(1.0), re(1.0)], &[0.0, 0.0], 8).unwrap();
        assert_eq!(r.value, re(4.0));
        let r = symmetric_form(3.0, &[re(1.0), re(1.0), re(2.0)], &[0.0; 3], 8).unwrap();
        assert!((r.value - re(64.0)).norm() < 1e-10);
        assert_eq!(brute_force_homogeneous(3, &[1, 1, 2]), 64);

        let vars = [re(1.0), re(2.0), Complex64::new(0.5, 1.0)];
        let shifted = TheoremInstance::integral(4.0, symmetric_substitution(&vars)).unwrap();
        assert_eq!(symmetric_form(4.0, &vars, &[0.0; 3], 6).unwrap(), evaluate_multinomial(&shifted, 6).unwrap());
    }

    #[test]
    fn probe_examples() {
        let r = unit_sum_probe(2.0, 2, &[0.0, 0.0], &DEFAULT_SCHEDULE).unwrap();
        assert_eq!(r.verdict, Verdict::Converged);
        assert_eq!(r.value, re(9.0));

        let r = unit_sum_probe(2.0, 2, &[0.5, 0.5], &DEFAULT_SCHEDULE).unwrap();
        assert_eq!(r.verdict, Verdict::NotConverging);

        let r = unit_sum_probe(2.5, 1, &[0.5], &DEFAULT_SCHEDULE).unwrap();
        assert_eq!(r.verdict, Verdict::Converged);
        assert!((r.value - re(2f64.powf(2.5))).norm() < 1e-6);

        // Exponent −0.5: terms decay like k^(−1/2) and alternate, so the
        // partial sums creep towards 2^(−1/2) without absolute convergence.
        let r = unit_sum_probe(-0.5, 1, &[0.5], &DEFAULT_SCHEDULE).unwrap();
        assert_eq!(r.verdict, Verdict::SlowlyConverging);

        assert_eq!(
            unit_sum_probe(2.0, 2, &[0.0, 0.0], &[64, 128, 256]),
            Err(MultinomialError::InvalidSchedule { min: 4 })
        );
    }

    #[test]
    fn degenerate_cases_are_exact() {
        for n in 0..=6u32 {
            for vars in [vec![1i64, 1], vec![2, 3], vec![-1, 4], vec![1, 1, 1], vec![2, -3, 1], vec![0, 5, 2]] {
                let inst =
                    TheoremInstance::integral(f64::from(n), vars.iter().map(|&v| re(v as f64)).collect()).unwrap();
                let r = evaluate_multinomial(&inst, 8).unwrap();
                let expected = brute_force(n, &vars);
                assert_eq!(r.value.im, 0.0);
                assert_eq!(r.value.re as i128, expected, "n={n} vars={vars:?}");
                assert_eq!(r.value.re, (1 + vars.iter().sum::<i64>()).pow(n) as f64);
            }
        }
    }

    proptest! {
        #[test]
        fn integer_terms_match_lattice_values(
            n in 0i64..=7,
            l1 in -3i64..=8,
            l2 in -3i64..=8,
            t1 in -3.0f64..3.0,
            t2 in -3.0f64..3.0,
        ) {
            let x = vec![Complex64::from_polar(1.5, t1), Complex64::from_polar(0.75, t2)];
            let inst = TheoremInstance::integral(n as f64, x.clone()).unwrap();
            let got = general_term(&inst, &[l1 as f64, l2 as f64]).unwrap();
            let coefficient = point_value(&LatticePoint::from_integers(&[l1, l2, n - l1 - l2]).unwrap())
                .value()
                .unwrap();
            let expected = x[0].powi(l1 as i32) * x[1].powi(l2 as i32) * coefficient;
            prop_assert!((got - expected).norm() <= 1e-10 * expected.norm().max(f64::MIN_POSITIVE));
        }

        #[test]
        fn degenerate_sums_match_expansion(n in 0u32..=6, vars in proptest::collection::vec(-4i64..=4, 2..=3)) {
            let inst = TheoremInstance::integral(f64::from(n), vars.iter().map(|&v| re(v as f64)).collect()).unwrap();
            let r = evaluate_multinomial(&inst, 8).unwrap();
            prop_assert_eq!(r.value, re(brute_force(n, &vars) as f64));
        }

        #[test]
        fn chain_from_angles_satisfies_the_chain(angles in proptest::collection::vec(-3.1f64..3.1, 1..=5)) {
            prop_assert!(modulus_chain_residuals(&chain_from_angles(&angles)).satisfied());
        }
    }
}
