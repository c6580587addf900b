//! The bilateral hypergeometric series `₁H₁(a; b; z)` and the bilateral
//! binomial identity.
//!
//! ```text
//! ₁H₁(a; b; z) = Σ_{k ∈ ℤ} (a)_k / (b)_k · z^k
//! ```
//!
//! The series is summed over a symmetric window `−K..=K`, adding the `+k`
//! and `−k` terms as a pair in order of increasing `|k|`. On `|z| = 1` the
//! terms decay like `|k|^(a−b)`, so the sum converges absolutely only when
//! `b − a > 1`; every result carries a [`TruncationReport`] that says how far
//! the partial sum can be trusted.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::gamma::{gamma_ratio, principal_power, GammaError};
use crate::lattice::{point_value, LatticePoint, RegularizedValue};
use crate::summation::ComplexSum;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const UNIT_CIRCLE_TOLERANCE: f64 = 1e-12;
pub const MIN_WINDOW: usize = 8;
/// First window of the adaptive doubling in [`bilateral_binomial_rhs`].
pub const ADAPTIVE_START: usize = 256;
/// Largest window the adaptive doubling will reach.
pub const ADAPTIVE_CAP: usize = 1 << 20;
/// Last-term magnitude must fall below this fraction of `tolerance·|value|`.
pub const LAST_TERM_FACTOR: f64 = 1e-3;
/// Floor for the denominator of relative errors.
pub const RELATIVE_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BilateralError {
    #[error("window {window} is below the minimum of {min}")]
    WindowTooSmall { window: usize, min: usize },
    #[error("coefficient of term {k} diverges (a parameter hits a non-cancelling pole)")]
    DivergentCoefficient { k: i64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("(1 + z)^x has a pole: z = -1 with x = {0} < 0")]
    LhsPole(f64),
    #[error(transparent)]
    Gamma(#[from] GammaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Converged,
    SlowlyConverging,
    NotConverging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerificationVerdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H1Params {
    pub a: f64,
    pub b: f64,
    #[serde(with = "crate::serde_complex")]
    pub z: Complex64,
}

/// Partial sum of a bilateral series with its tail diagnostics.
///
/// `decay_exponent_estimate` is `+∞` (serialized as `null`) when every term
/// in the outer half-window vanishes, i.e. the series terminates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationReport {
    #[serde(with = "crate::serde_complex")]
    pub value: Complex64,
    pub window: usize,
    pub last_term_magnitude: f64,
    pub decay_exponent_estimate: f64,
    pub verdict: Verdict,
}

impl TruncationReport {
    pub fn is_terminating(&self) -> bool {
        self.decay_exponent_estimate == f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerificationReport {
    #[serde(with = "crate::serde_complex")]
    pub lhs: Complex64,
    #[serde(with = "crate::serde_complex")]
    pub rhs: Complex64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub verdict: VerificationVerdict,
}

impl VerificationReport {
    pub fn compare(lhs: Complex64, rhs: Complex64, tolerance: f64) -> Self {
        let abs_error = (lhs - rhs).norm();
        let rel_error = abs_error / lhs.norm().max(RELATIVE_FLOOR);
        let verdict = if rel_error <= tolerance { VerificationVerdict::Pass } else { VerificationVerdict::Fail };
        Self { lhs, rhs, abs_error, rel_error, tolerance, verdict }
    }

    pub fn with_verdict(mut self, verdict: VerificationVerdict) -> Self {
        self.verdict = verdict;
        self
    }
}

/// Raw outcome of a paired symmetric summation, before diagnosis.
#[derive(Debug, Clone)]
pub(crate) struct PairedSum {
    pub value: Complex64,
    pub window: usize,
    pub last_term_magnitude: f64,
    /// `(k, |t_k| + |t_−k|)` for the outer half-window.
    pub outer: Vec<(usize, f64)>,
    pub terminating: bool,
}

/// Sums `term(k)` for `k ∈ −window..=window`, pairing `±k`.
pub(crate) fn sum_paired<E>(window: usize, mut term: impl FnMut(i64) -> Result<Complex64, E>) -> Result<PairedSum, E> {
    let mut acc = ComplexSum::new();
    acc.add(term(0)?);
    let half = window.div_ceil(2);
    let mut outer = Vec::with_capacity(window - half + 1);
    let mut last_term_magnitude = 0.0;
    let mut edge_mass = 0.0;
    for k in 1..=window {
        let plus = term(k as i64)?;
        let minus = term(-(k as i64))?;
        acc.add(plus + minus);
        let mass = plus.norm() + minus.norm();
        if k >= half {
            outer.push((k, mass));
        }
        if k + 1 >= window {
            edge_mass += mass;
        }
        if k == window {
            last_term_magnitude = plus.norm().max(minus.norm());
        }
    }
    Ok(PairedSum { value: acc.value(), window, last_term_magnitude, outer, terminating: edge_mass == 0.0 })
}

/// Least-squares decay exponent `p` in `mass ≈ C·k^(−p)`; `NaN` with fewer
/// than two positive samples.
pub(crate) fn decay_exponent(samples: &[(usize, f64)]) -> f64 {
    let points: Vec<(f64, f64)> =
        samples.iter().filter(|(_, m)| *m > 0.0 && m.is_finite()).map(|&(k, m)| ((k as f64).ln(), m.ln())).collect();
    if points.len() < 2 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in &points {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    if sxx == 0.0 {
        return f64::NAN;
    }
    -sxy / sxx
}

/// Verdict shared by the one- and multi-dimensional summations.
///
/// `bounded` is the analytic side condition (`|z| = 1`, or the modulus
/// chain); `last` is the outermost term or shell magnitude.
pub(crate) fn diagnose(
    value: Complex64,
    exponent: f64,
    last: f64,
    terminating: bool,
    bounded: bool,
    tolerance: f64,
) -> Verdict {
    if terminating && value.is_finite() {
        return Verdict::Converged;
    }
    if !value.is_finite() || !bounded || exponent.is_nan() {
        return Verdict::NotConverging;
    }
    if exponent > 1.0 && last < LAST_TERM_FACTOR * tolerance * value.norm() {
        Verdict::Converged
    } else if exponent > 0.0 {
        Verdict::SlowlyConverging
    } else {
        Verdict::NotConverging
    }
}

pub(crate) fn report_from(sum: PairedSum, bounded: bool, tolerance: f64) -> TruncationReport {
    let exponent = if sum.terminating { f64::INFINITY } else { decay_exponent(&sum.outer) };
    let verdict = diagnose(sum.value, exponent, sum.last_term_magnitude, sum.terminating, bounded, tolerance);
    TruncationReport {
        value: sum.value,
        window: sum.window,
        last_term_magnitude: sum.last_term_magnitude,
        decay_exponent_estimate: exponent,
        verdict,
    }
}

fn check_tolerance(tolerance: f64) -> Result<(), BilateralError> {
    if tolerance > 0.0 && tolerance.is_finite() {
        Ok(())
    } else {
        Err(BilateralError::InvalidTolerance(tolerance))
    }
}

fn on_unit_circle(z: Complex64) -> bool {
    (z.norm() - 1.0).abs() <= UNIT_CIRCLE_TOLERANCE
}

/// Term `(a)_k / (b)_k · z^k` with regularized Pochhammer symbols.
pub fn h1_term(params: &H1Params, k: i64) -> Result<Complex64, BilateralError> {
    if k == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let kf = k as f64;
    let coefficient = gamma_ratio(&[params.a + kf, params.b], &[params.a, params.b + kf]);
    if coefficient.is_divergent() {
        return Err(BilateralError::DivergentCoefficient { k });
    }
    if coefficient.vanishes() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(principal_power(params.z, kf)? * coefficient.mantissa())
}

pub fn evaluate_h1(params: &H1Params, window: usize) -> Result<TruncationReport, BilateralError> {
    evaluate_h1_with_tolerance(params, window, DEFAULT_TOLERANCE)
}

pub fn evaluate_h1_with_tolerance(
    params: &H1Params,
    window: usize,
    tolerance: f64,
) -> Result<TruncationReport, BilateralError> {
    if window < MIN_WINDOW {
        return Err(BilateralError::WindowTooSmall { window, min: MIN_WINDOW });
    }
    check_tolerance(tolerance)?;
    let sum = sum_paired(window, |k| h1_term(params, k))?;
    Ok(report_from(sum, on_unit_circle(params.z), tolerance))
}

/// Exponent `b − a` of the term decay `|k|^(−(b−a))` on `|z| = 1`.
pub fn convergence_exponent(a: f64, b: f64) -> f64 {
    b - a
}

/// Regularized binomial coefficient `Γ(n+1)/(Γ(l+1)·Γ(n−l+1))`, the
/// two-dimensional lattice value at `(l, n − l)`.
pub fn generalized_binomial(n: f64, l: f64) -> RegularizedValue {
    LatticePoint::new(vec![l, n - l]).map_or(RegularizedValue::Finite(f64::NAN), |p| point_value(&p))
}

/// Right-hand side of the bilateral binomial identity at one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomialRhs {
    #[serde(with = "crate::serde_complex")]
    pub value: Complex64,
    /// Diagnostics of the underlying bilateral series.
    pub series: TruncationReport,
}

/// `z^y · Γ(x+1)/(Γ(y+1)Γ(x−y+1)) · ₁H₁(y−x; y+1; −z)` at a fixed window.
///
/// The principal-branch factor `z^y` makes the sum equal `(1+z)^x` on the
/// unit circle for every real `y`. When the Gamma prefactor sits on a pole
/// the series is summed as `Σ_k C(x, y+k)·z^(y+k)` with each binomial
/// regularized on its own.
pub fn bilateral_binomial_rhs_with_window(
    x: f64,
    y: f64,
    z: Complex64,
    window: usize,
    tolerance: f64,
) -> Result<BinomialRhs, BilateralError> {
    let phase = principal_power(z, y)?;
    let prefactor = gamma_ratio(&[x + 1.0], &[y + 1.0, x - y + 1.0]);
    if prefactor.order() == 0 {
        let params = H1Params { a: y - x, b: y + 1.0, z: -z };
        let series = evaluate_h1_with_tolerance(&params, window, tolerance)?;
        return Ok(BinomialRhs { value: series.value * prefactor.mantissa() * phase, series });
    }

    if window < MIN_WINDOW {
        return Err(BilateralError::WindowTooSmall { window, min: MIN_WINDOW });
    }
    check_tolerance(tolerance)?;
    let sum = sum_paired(window, |k| {
        let kf = k as f64;
        match generalized_binomial(x, y + kf) {
            RegularizedValue::Finite(c) => Ok(principal_power(z, kf)? * c),
            RegularizedValue::ZeroByPoles => Ok(Complex64::new(0.0, 0.0)),
            RegularizedValue::Divergent => Err(BilateralError::DivergentCoefficient { k }),
        }
    })?;
    let series = report_from(sum, on_unit_circle(z), tolerance);
    Ok(BinomialRhs { value: series.value * phase, series })
}

/// [`bilateral_binomial_rhs_with_window`] with the window doubled from
/// [`ADAPTIVE_START`] until the verdict settles or [`ADAPTIVE_CAP`] is hit.
pub fn bilateral_binomial_rhs(x: f64, y: f64, z: Complex64, tolerance: f64) -> Result<BinomialRhs, BilateralError> {
    let mut window = ADAPTIVE_START;
    let mut previous = None;
    loop {
        let rhs = bilateral_binomial_rhs_with_window(x, y, z, window, tolerance)?;
        let verdict = rhs.series.verdict;
        let settled = match verdict {
            Verdict::Converged | Verdict::NotConverging => true,
            // Sub-unit decay will not improve with a wider window.
            Verdict::SlowlyConverging => {
                rhs.series.decay_exponent_estimate <= 1.0 && previous == Some(Verdict::SlowlyConverging)
            }
        };
        if settled || window >= ADAPTIVE_CAP {
            return Ok(rhs);
        }
        previous = Some(verdict);
        window *= 2;
    }
}

fn binomial_lhs(x: f64, z: Complex64) -> Result<Complex64, BilateralError> {
    let base = Complex64::new(1.0, 0.0) + z;
    if base == Complex64::new(0.0, 0.0) {
        if x < 0.0 {
            return Err(BilateralError::LhsPole(x));
        }
        if x == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
    }
    Ok(principal_power(base, x)?)
}

fn binomial_verdict(report: &VerificationReport, series: &TruncationReport, exponent: f64) -> VerificationVerdict {
    if series.verdict == Verdict::NotConverging {
        return VerificationVerdict::Inconclusive;
    }
    if !series.is_terminating() && exponent <= 1.0 {
        return VerificationVerdict::Inconclusive;
    }
    if report.rel_error <= report.tolerance {
        return VerificationVerdict::Pass;
    }
    if series.verdict == Verdict::SlowlyConverging {
        VerificationVerdict::Inconclusive
    } else {
        VerificationVerdict::Fail
    }
}

/// Compares `(1+z)^x` with the bilateral series, returning the report and
/// the series diagnostics. `window = None` selects the adaptive window.
pub fn check_bilateral_binomial(
    x: f64,
    y: f64,
    z: Complex64,
    tolerance: f64,
    window: Option<usize>,
) -> Result<(VerificationReport, BinomialRhs), BilateralError> {
    check_tolerance(tolerance)?;
    let lhs = binomial_lhs(x, z)?;
    let rhs = match window {
        Some(w) => bilateral_binomial_rhs_with_window(x, y, z, w, tolerance)?,
        None => bilateral_binomial_rhs(x, y, z, tolerance)?,
    };
    let report = VerificationReport::compare(lhs, rhs.value, tolerance);
    let verdict = binomial_verdict(&report, &rhs.series, convergence_exponent(y - x, y + 1.0));
    Ok((report.with_verdict(verdict), rhs))
}

pub fn verify_bilateral_binomial(
    x: f64,
    y: f64,
    z: Complex64,
    tolerance: f64,
) -> Result<VerificationReport, BilateralError> {
    check_bilateral_binomial(x, y, z, tolerance, None).map(|(report, _)| report)
}
