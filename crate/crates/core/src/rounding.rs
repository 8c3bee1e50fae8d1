//! ℓ-bit rounding of objective coefficients and the ε-optimality bounds
//! that come with it.
//!
//! All guarantees are computed as exact rationals. Floating point only
//! appears when a value is rendered for a report.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::model::{Assignment, BinaryProgram, Objective};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoundingError {
    #[error("level 0 rounds every coefficient to zero and carries no epsilon guarantee")]
    ZeroLevel,
    #[error("objective loss is undefined when the original optimum is 0")]
    UndefinedLoss,
}

/// Number of bits of |c|, i.e. ⌈log2(|c| + 1)⌉.
pub fn bit_length(c: i64) -> u32 {
    u64::BITS - c.unsigned_abs().leading_zeros()
}

/// Keeps the top `level` bits of |c| and reattaches the sign.
pub fn round_coefficient(c: i64, level: u32) -> i64 {
    let k = bit_length(c);
    if level >= k {
        return c;
    }
    if level == 0 {
        return 0;
    }
    let drop = k - level;
    let magnitude = c.unsigned_abs() >> drop << drop;
    // magnitude <= |c|, so the signed value is representable
    if c < 0 {
        (-(magnitude as i128)) as i64
    } else {
        magnitude as i64
    }
}

/// 1 / 2^(level-1).
pub fn epsilon_for_level(level: u32) -> Result<BigRational, RoundingError> {
    if level == 0 {
        return Err(RoundingError::ZeroLevel);
    }
    Ok(BigRational::new(BigInt::one(), BigInt::one() << (level as usize - 1)))
}

/// Relative objective loss 2ε/(1+ε) = 1 − (1−ε)/(1+ε) guaranteed for
/// maximization with nonnegative objective.
pub fn loss_bound_traditional(level: u32) -> Result<BigRational, RoundingError> {
    let eps = epsilon_for_level(level)?;
    let one = BigRational::one();
    Ok((&eps + &eps) / (one + eps))
}

/// (1−ε)/(1+ε).
pub fn traditional_factor(level: u32) -> Result<BigRational, RoundingError> {
    let eps = epsilon_for_level(level)?;
    let one = BigRational::one();
    Ok((&one - &eps) / (one + eps))
}

/// |original − other| / |original|.
pub fn objective_loss(opt_original: i64, opt_rounded_sol_value: i64) -> Result<BigRational, RoundingError> {
    if opt_original == 0 {
        return Err(RoundingError::UndefinedLoss);
    }
    let a = BigInt::from(opt_original);
    let b = BigInt::from(opt_rounded_sol_value);
    Ok(BigRational::new((&a - b).abs(), a.abs()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoefficientRounding {
    pub var: usize,
    pub original: i64,
    pub rounded: i64,
    pub bit_length: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundingReport {
    pub level: u32,
    /// `None` for level 0.
    pub epsilon: Option<BigRational>,
    pub per_coefficient: Vec<CoefficientRounding>,
    pub traditional_bound: Option<BigRational>,
    pub loss_bound: Option<BigRational>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    level: u32,
    epsilon: Option<String>,
    traditional_bound: Option<String>,
    loss_bound: Option<String>,
    loss_bound_decimal: Option<String>,
    per_coefficient: &'a [CoefficientRounding],
}

impl RoundingReport {
    pub fn to_json(&self) -> String {
        let json = ReportJson {
            level: self.level,
            epsilon: self.epsilon.as_ref().map(ratio_string),
            traditional_bound: self.traditional_bound.as_ref().map(ratio_string),
            loss_bound: self.loss_bound.as_ref().map(ratio_string),
            loss_bound_decimal: self.loss_bound.as_ref().map(|r| format_significant(r, 6)),
            per_coefficient: &self.per_coefficient,
        };
        serde_json::to_string_pretty(&json).expect("report serializes")
    }

    /// Coefficients whose value changed.
    pub fn changed(&self) -> usize {
        self.per_coefficient.iter().filter(|e| e.original != e.rounded).count()
    }
}

/// `num/den` rendering.
pub fn ratio_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Decimal rendering with `digits` significant digits.
pub fn format_significant(r: &BigRational, digits: usize) -> String {
    let v = ratio_to_f64(r);
    if v == 0.0 {
        return "0".to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Rounds every objective coefficient of `bp`; constraints are untouched and
/// coefficients that round to zero leave the objective map.
pub fn round_objective(bp: &BinaryProgram, level: u32) -> (BinaryProgram, RoundingReport) {
    let mut rounded = Objective::new();
    let mut per_coefficient = Vec::with_capacity(bp.objective().len());
    for (&var, &c) in bp.objective() {
        let r = round_coefficient(c, level);
        per_coefficient.push(CoefficientRounding {
            var,
            original: c,
            rounded: r,
            bit_length: bit_length(c),
        });
        if r != 0 {
            rounded.insert(var, r);
        }
    }
    let program = bp
        .with_objective(rounded)
        .expect("rounding keeps variable indices and cannot overflow");
    let report = RoundingReport {
        level,
        epsilon: epsilon_for_level(level).ok(),
        per_coefficient,
        traditional_bound: traditional_factor(level).ok(),
        loss_bound: loss_bound_traditional(level).ok(),
    };
    (program, report)
}

/// The witness that `x_star` is ε-optimal for `c_original`: it is optimal for
/// `c_perturbed`, which must lie inside the componentwise (1±ε) envelope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsilonCertificate {
    pub x_star: Assignment,
    pub c_original: Objective,
    pub c_perturbed: Objective,
    pub epsilon: BigRational,
}

/// Checks the envelope componentwise in exact arithmetic:
/// `(1-ε)c ≤ c' ≤ (1+ε)c` for `c ≥ 0` and `(1+ε)c ≤ c' ≤ (1-ε)c` for `c < 0`.
/// Missing entries read as zero. Optimality of `x_star` is not checked here.
pub fn verify_certificate(cert: &EpsilonCertificate) -> bool {
    let one = BigRational::one();
    let lower_factor = &one - &cert.epsilon;
    let upper_factor = &one + &cert.epsilon;
    let vars = cert.c_original.keys().chain(cert.c_perturbed.keys());
    for &var in vars {
        let c = BigRational::from_integer(BigInt::from(cert.c_original.get(&var).copied().unwrap_or(0)));
        let cp = BigRational::from_integer(BigInt::from(cert.c_perturbed.get(&var).copied().unwrap_or(0)));
        let a = &lower_factor * &c;
        let b = &upper_factor * &c;
        let (lo, hi) = if c >= BigRational::zero() { (a, b) } else { (b, a) };
        if cp < lo || cp > hi {
            return false;
        }
    }
    true
}
