//! Integer quantization of p-values and test statistics at a given bit
//! width, together with the truncation analysis it induces on z-scores.
//!
//! A gamma-bits p-type encoding maps a p-value to the nearest of the
//! `2^gamma` equally spaced grid points on `[0, 1]`; encoded values of
//! exactly 0 or 1 later probit-transform to infinite z-scores. A gamma-bits
//! T-type encoding stores sign and the magnitude rounded to the nearest of
//! `2^gamma` grid points on `[0, M]`, where `M` is the largest absolute
//! value of the vector being encoded (gamma here counts the magnitude bits;
//! the stored word carries one more bit for the sign).
//!
//! Encoders work in reconstructed real space: the integer scale-and-round
//! representation and the returned grid values are equivalent.

use crate::error::{Error, Result};
use crate::special;

/// Valid bit widths for the p-type scheme.
pub const P_TYPE_GAMMAS: [u8; 4] = [8, 9, 16, 17];
/// Valid magnitude bit widths for the T-type scheme.
pub const T_TYPE_GAMMAS: [u8; 4] = [7, 8, 15, 16];

/// Which quantization (if any) was applied to a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum QuantizationScheme {
    /// Values untouched.
    None,
    /// p-values on the `[0, 1]` grid with `2^gamma` levels.
    PType { gamma: u8 },
    /// Test statistics as sign plus magnitude on a `[0, M]` grid.
    TType { gamma: u8 },
}

impl QuantizationScheme {
    pub fn p_type(gamma: u8) -> Result<Self> {
        if P_TYPE_GAMMAS.contains(&gamma) {
            Ok(Self::PType { gamma })
        } else {
            Err(Error::domain(format!(
                "p-type gamma must be one of {P_TYPE_GAMMAS:?}, got {gamma}"
            )))
        }
    }

    pub fn t_type(gamma: u8) -> Result<Self> {
        if T_TYPE_GAMMAS.contains(&gamma) {
            Ok(Self::TType { gamma })
        } else {
            Err(Error::domain(format!(
                "T-type gamma must be one of {T_TYPE_GAMMAS:?}, got {gamma}"
            )))
        }
    }

    /// Parse the CLI grammar `none | p8 | p9 | p16 | p17 | t7 | t8 | t15 | t16`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "none" {
            return Ok(Self::None);
        }
        let (kind, digits) = s.split_at(1);
        let gamma: u8 = digits
            .parse()
            .map_err(|_| Error::domain(format!("unrecognized encoding scheme '{s}'")))?;
        match kind {
            "p" => Self::p_type(gamma),
            "t" => Self::t_type(gamma),
            _ => Err(Error::domain(format!("unrecognized encoding scheme '{s}'"))),
        }
    }

    /// Compact label used in CSV output (`none`, `p8`, `t16`, ...).
    pub fn label(&self) -> String {
        match self {
            Self::None => "none".to_string(),
            Self::PType { gamma } => format!("p{gamma}"),
            Self::TType { gamma } => format!("t{gamma}"),
        }
    }
}

/// Scale metadata recorded by a T-type encode: the maximum absolute value of
/// the vector at encode time.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TTypeScale {
    pub max_abs: f64,
}

fn grid_levels(gamma: u8) -> f64 {
    // 2^gamma - 1 intervals; exact in f64 for gamma <= 17
    ((1u64 << gamma) - 1) as f64
}

/// Quantize p-values onto the `k / (2^gamma - 1)` grid (nearest point,
/// ties to even).
pub fn p_type_encode(p: &[f64], gamma: u8) -> Result<Vec<f64>> {
    if !P_TYPE_GAMMAS.contains(&gamma) {
        return Err(Error::domain(format!(
            "p-type gamma must be one of {P_TYPE_GAMMAS:?}, got {gamma}"
        )));
    }
    let levels = grid_levels(gamma);
    p.iter()
        .map(|&v| {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!(
                    "p_type_encode: p-value {v} outside [0, 1]"
                )));
            }
            Ok((v * levels).round_ties_even() / levels)
        })
        .collect()
}

/// Quantize test statistics: magnitudes onto the `k * M / (2^gamma - 1)`
/// grid with `M = max |t|`, signs preserved exactly.
pub fn t_type_encode(t: &[f64], gamma: u8) -> Result<(Vec<f64>, TTypeScale)> {
    if !T_TYPE_GAMMAS.contains(&gamma) {
        return Err(Error::domain(format!(
            "T-type gamma must be one of {T_TYPE_GAMMAS:?}, got {gamma}"
        )));
    }
    if t.is_empty() {
        return Err(Error::domain("t_type_encode: empty input"));
    }
    if let Some(bad) = t.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!(
            "t_type_encode: non-finite value {bad}"
        )));
    }
    let max_abs = t.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let levels = grid_levels(gamma);
    let encoded = t
        .iter()
        .map(|&v| {
            if max_abs == 0.0 {
                return 0.0;
            }
            let k = (v.abs() / max_abs * levels).round_ties_even();
            // grid endpoints reproduce exactly; interior points are k*M/L
            let mag = if k == 0.0 {
                0.0
            } else if k == levels {
                max_abs
            } else {
                k * max_abs / levels
            };
            if v < 0.0 {
                -mag
            } else {
                mag
            }
        })
        .collect();
    Ok((encoded, TTypeScale { max_abs }))
}

/// The z-score truncation bound `a_gamma = Phi^{-1}(1 - 1/(2^{gamma+1} - 1))`
/// induced by a gamma-bits p-type encoding.
pub fn truncation_bound(gamma: u8) -> f64 {
    assert!((2..=62).contains(&gamma), "truncation_bound: gamma out of range");
    let denom = ((1u64 << (gamma + 1)) - 1) as f64;
    special::std_quantile(1.0 - 1.0 / denom)
}

/// Variance of a standard normal doubly truncated to `[-a_gamma, a_gamma]`:
/// `1 - 2 a phi(a) / (Phi(a) - Phi(-a))`. This is the variance the naive ML
/// estimator converges to on gamma-bits p-type encoded null data.
pub fn truncated_null_variance(gamma: u8) -> f64 {
    let a = truncation_bound(gamma);
    let mass = special::std_cdf(a) - special::std_cdf(-a);
    1.0 - 2.0 * a * special::std_pdf(a) / mass
}

/// Expected fraction of z-scores that stay finite under a gamma-bits p-type
/// encoding when the z-scores follow the mixture
/// `pi0 N(0,1) + (1-pi0) N(mu1, 1)`.
pub fn expected_finite_fraction(gamma: u8, pi0: f64, mu1: f64) -> f64 {
    let a = truncation_bound(gamma);
    let null_mass = special::std_cdf(a) - special::std_cdf(-a);
    let alt_mass = special::std_cdf(a - mu1) - special::std_cdf(-a - mu1);
    pi0 * null_mass + (1.0 - pi0) * alt_mass
}
