//! Real Gamma function, pole-order algebra and principal complex powers.
//!
//! Every coefficient in this crate is a ratio of Gamma functions whose
//! arguments may sit on poles. Such ratios are read as the limit `h → 0⁺`
//! after shifting every argument by the same `h`. Near a pole
//! `Γ(−m + h) ≈ (−1)^m / (m!·h)`, so each factor is tracked by its leading
//! Laurent term `c·h^(−order)` ([`HLimitValue`]) and the orders add and
//! subtract under multiplication and division.

use std::f64::consts::PI;
use std::ops::Mul;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Distance from the nearest integer below which an argument is treated as
/// that integer (pole classification, factorial lookup).
pub const INTEGER_TOLERANCE: f64 = 1e-9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Largest `n` with `n!` finite in `f64`.
const MAX_FACTORIAL: usize = 170;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GammaError {
    #[error("Gamma has a pole at {0}; use gamma_leading for the regularized value")]
    Pole(f64),
    #[error("division by an exact zero limit")]
    DivisionByZero,
    #[error("0 raised to the non-positive power {0}")]
    ZeroToNonPositivePower(f64),
    #[error("non-finite argument {0}")]
    NonFinite(f64),
}

/// Returns the nearest integer when `x` lies within [`INTEGER_TOLERANCE`] of it.
pub fn nearest_integer(x: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() < INTEGER_TOLERANCE && r.abs() < 9.0e15 {
        Some(r as i64)
    } else {
        None
    }
}

/// `Some(m)` when `x` is the pole `−m` of Gamma (`m ≥ 0`).
pub fn pole_index(x: f64) -> Option<u64> {
    nearest_integer(x).filter(|&n| n <= 0).map(|n| n.unsigned_abs())
}

fn factorial_table() -> &'static [f64; MAX_FACTORIAL + 1] {
    static TABLE: OnceLock<[f64; MAX_FACTORIAL + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [1.0; MAX_FACTORIAL + 1];
        for n in 1..=MAX_FACTORIAL {
            table[n] = table[n - 1] * n as f64;
        }
        table
    })
}

/// `n!` as `f64`; exact for `n ≤ 22`, `+∞` beyond 170.
pub fn factorial(n: u64) -> f64 {
    factorial_table().get(n as usize).copied().unwrap_or(f64::INFINITY)
}

fn ln_factorial(n: u64) -> f64 {
    if (n as usize) <= MAX_FACTORIAL {
        factorial(n).ln()
    } else {
        ln_gamma_lanczos(n as f64 + 1.0)
    }
}

/// `sin(πx)` with exact argument reduction, so zeros at integers are exact.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        (PI * (-1.0 - r)).sin()
    } else {
        (PI * r).sin()
    }
}

fn lanczos_sum(shifted: f64) -> f64 {
    LANCZOS_COEFFS[1..].iter().enumerate().fold(LANCZOS_COEFFS[0], |acc, (i, c)| acc + c / (shifted + (i + 1) as f64))
}

// Valid for x >= 0.5.
fn gamma_lanczos(x: f64) -> f64 {
    if x > 171.7 {
        return f64::INFINITY;
    }
    let shifted = x - 1.0;
    let t = shifted + LANCZOS_G + 0.5;
    let half_power = t.powf((shifted + 0.5) / 2.0);
    SQRT_2PI * lanczos_sum(shifted) * (half_power * (-t).exp()) * half_power
}

// Valid for x >= 0.5.
fn ln_gamma_lanczos(x: f64) -> f64 {
    let shifted = x - 1.0;
    let t = shifted + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (shifted + 0.5) * t.ln() - t + lanczos_sum(shifted).ln()
}

/// Γ(x) for any real `x` that is not a pole.
///
/// Positive integers up to 171 are looked up in an exact factorial table,
/// `x < 0.5` uses the reflection formula.
pub fn gamma(x: f64) -> Result<f64, GammaError> {
    if !x.is_finite() {
        return Err(GammaError::NonFinite(x));
    }
    if let Some(n) = nearest_integer(x) {
        if n <= 0 {
            return Err(GammaError::Pole(x));
        }
        return Ok(factorial((n - 1) as u64));
    }
    if x >= 0.5 {
        Ok(gamma_lanczos(x))
    } else {
        Ok(PI / (sin_pi(x) * gamma_lanczos(1.0 - x)))
    }
}

/// A real number stored as `sign · exp(log_magnitude)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignedLogValue {
    pub log_magnitude: f64,
    pub sign: i8,
}

impl SignedLogValue {
    pub const ZERO: Self = Self { log_magnitude: f64::NEG_INFINITY, sign: 0 };
    pub const ONE: Self = Self { log_magnitude: 0.0, sign: 1 };

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self { log_magnitude: v.abs().ln(), sign: if v > 0.0 { 1 } else { -1 } }
        }
    }

    pub fn value(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_magnitude.exp(),
        }
    }

    pub fn product(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        Self { log_magnitude: self.log_magnitude + rhs.log_magnitude, sign: self.sign * rhs.sign }
    }

    pub fn quotient(self, rhs: Self) -> Result<Self, GammaError> {
        if rhs.sign == 0 {
            return Err(GammaError::DivisionByZero);
        }
        if self.sign == 0 {
            return Ok(Self::ZERO);
        }
        Ok(Self { log_magnitude: self.log_magnitude - rhs.log_magnitude, sign: self.sign * rhs.sign })
    }
}

/// `log|Γ(x)|` and the sign of `Γ(x)`.
pub fn log_gamma_signed(x: f64) -> Result<SignedLogValue, GammaError> {
    if !x.is_finite() {
        return Err(GammaError::NonFinite(x));
    }
    if let Some(n) = nearest_integer(x) {
        if n <= 0 {
            return Err(GammaError::Pole(x));
        }
        return Ok(SignedLogValue { log_magnitude: ln_factorial((n - 1) as u64), sign: 1 });
    }
    if x >= 0.5 {
        return Ok(SignedLogValue { log_magnitude: ln_gamma_lanczos(x), sign: 1 });
    }
    let s = sin_pi(x);
    Ok(SignedLogValue {
        log_magnitude: PI.ln() - s.abs().ln() - ln_gamma_lanczos(1.0 - x),
        sign: if s > 0.0 { 1 } else { -1 },
    })
}

/// Leading Laurent term `mantissa · h^(−order)` of an expression as `h → 0⁺`.
///
/// `order > 0` diverges, `order < 0` vanishes, `order == 0` converges to
/// `mantissa`. A zero mantissa always carries order 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HLimitValue {
    mantissa: f64,
    order: i32,
}

impl HLimitValue {
    pub const ZERO: Self = Self { mantissa: 0.0, order: 0 };
    pub const ONE: Self = Self { mantissa: 1.0, order: 0 };

    pub fn new(mantissa: f64, order: i32) -> Self {
        if mantissa == 0.0 {
            Self::ZERO
        } else {
            Self { mantissa, order }
        }
    }

    pub fn finite(value: f64) -> Self {
        Self::new(value, 0)
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn is_divergent(&self) -> bool {
        self.order > 0
    }

    /// True when the limit is zero, either exactly or by an excess of poles.
    pub fn vanishes(&self) -> bool {
        self.order < 0 || self.mantissa == 0.0
    }

    /// The limit value when it is finite.
    pub fn limit(&self) -> Option<f64> {
        match self.order {
            0 => Some(self.mantissa),
            o if o < 0 => Some(0.0),
            _ => None,
        }
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self, GammaError> {
        if rhs.mantissa == 0.0 {
            return Err(GammaError::DivisionByZero);
        }
        Ok(Self::new(self.mantissa / rhs.mantissa, self.order - rhs.order))
    }

    pub fn recip(self) -> Result<Self, GammaError> {
        Self::ONE.checked_div(self)
    }
}

impl Mul for HLimitValue {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::new(self.mantissa * rhs.mantissa, self.order + rhs.order)
    }
}

/// Leading behaviour of `Γ(x + h)` as `h → 0⁺`.
///
/// Away from poles this is `(Γ(x), 0)`; at `x = −m` it is the residue
/// `((−1)^m / m!, 1)`. The residue underflows to zero for `m > 170`; use
/// [`gamma_ratio`] for overflow-safe ratios.
pub fn gamma_leading(x: f64) -> HLimitValue {
    match pole_index(x) {
        Some(m) => {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            HLimitValue::new(sign / factorial(m), 1)
        }
        None => HLimitValue::finite(gamma(x).unwrap_or(f64::NAN)),
    }
}

/// Log-space counterpart of [`HLimitValue`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LogLimit {
    pub log: SignedLogValue,
    pub order: i32,
}

impl LogLimit {
    pub fn to_hlimit(self) -> HLimitValue {
        HLimitValue::new(self.log.value(), self.order)
    }
}

fn gamma_leading_log(x: f64) -> LogLimit {
    match pole_index(x) {
        Some(m) => LogLimit {
            log: SignedLogValue { log_magnitude: -ln_factorial(m), sign: if m % 2 == 0 { 1 } else { -1 } },
            order: 1,
        },
        None => LogLimit { log: log_gamma_signed(x).unwrap_or(SignedLogValue::ZERO), order: 0 },
    }
}

pub(crate) fn gamma_ratio_log(numerator: &[f64], denominator: &[f64]) -> LogLimit {
    let mut log = SignedLogValue::ONE;
    let mut order = 0;
    for &x in numerator {
        let lead = gamma_leading_log(x);
        log = log.product(lead.log);
        order += lead.order;
    }
    for &x in denominator {
        let lead = gamma_leading_log(x);
        // Leading terms of Gamma are never zero.
        log = log.quotient(lead.log).unwrap_or(SignedLogValue::ZERO);
        order -= lead.order;
    }
    LogLimit { log, order }
}

fn gamma_ratio_direct(numerator: &[f64], denominator: &[f64]) -> Option<HLimitValue> {
    let mut acc = HLimitValue::ONE;
    for &x in numerator {
        acc = acc * gamma_leading(x);
        if !acc.mantissa.is_normal() {
            return None;
        }
    }
    for &x in denominator {
        acc = acc.checked_div(gamma_leading(x)).ok()?;
        if !acc.mantissa.is_normal() {
            return None;
        }
    }
    Some(acc)
}

/// Regularized `Π Γ(numerator_i + h) / Π Γ(denominator_j + h)` as `h → 0⁺`.
///
/// Small arguments are multiplied directly (factorials stay exact); large
/// ones, or intermediate overflow, switch to log space. The returned mantissa
/// is `±∞` only when the limit itself exceeds the `f64` range.
pub fn gamma_ratio(numerator: &[f64], denominator: &[f64]) -> HLimitValue {
    let small = numerator.iter().chain(denominator).all(|x| x.abs() <= 170.0);
    if small {
        if let Some(v) = gamma_ratio_direct(numerator, denominator) {
            return v;
        }
    }
    gamma_ratio_log(numerator, denominator).to_hlimit()
}

/// Regularized Pochhammer symbol `(a)_k = Γ(a + k) / Γ(a)`.
pub fn pochhammer(a: f64, k: f64) -> HLimitValue {
    gamma_ratio(&[a + k], &[a])
}

/// `base^exponent` on the principal branch, `arg(base) ∈ (−π, π]`.
pub fn principal_power(base: Complex64, exponent: f64) -> Result<Complex64, GammaError> {
    if !exponent.is_finite() {
        return Err(GammaError::NonFinite(exponent));
    }
    if base == Complex64::new(0.0, 0.0) {
        return if exponent > 0.0 {
            Ok(Complex64::new(0.0, 0.0))
        } else {
            Err(GammaError::ZeroToNonPositivePower(exponent))
        };
    }
    if exponent == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
        return Ok(base.powi(exponent as i32));
    }
    let mut theta = base.arg();
    if theta == -PI {
        theta = PI;
    }
    Ok(Complex64::from_polar(base.norm().powf(exponent), exponent * theta))
}
