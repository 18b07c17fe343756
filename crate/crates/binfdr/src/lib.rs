//! Empirical-Bayes false discovery rate control for reduced-precision testing data.
//!
//! Large collections of p-values or test statistics are often stored as
//! low-bit integer encodings. Quantization rounds extreme p-values to exactly
//! 0 or 1, whose probit z-scores are infinite, and it perturbs every finite
//! value. Estimating the two-component normal mixture
//! `f(z) = pi0 * phi(z; mu0, var0) + pi1 * phi(z; mu1, var1)` from such data
//! by naive per-observation likelihood is biased; estimating it from bin
//! membership counts is not, because infinities fall in the open-ended end
//! bins and rounding stays inside a bin.
//!
//! This crate provides:
//!
//! - [`encoding`]: the p-type and T-type integer quantization schemes and the
//!   truncation-bound analysis they induce on null z-scores,
//! - [`transforms`]: probit transforms with explicit bookkeeping of infinite
//!   z-scores,
//! - [`binning`]: Sturges/Scott/Freedman-Diaconis bin counts and open-ended
//!   bin systems,
//! - [`mixture`]: the binned-data EM algorithm for the two-component normal
//!   mixture, plus raw-data reference estimators,
//! - [`fdr`]: posterior null probabilities, the plug-in marginal-FDR
//!   estimator, and threshold selection,
//! - [`baselines`]: Benjamini-Hochberg, Benjamini-Yekutieli and Storey
//!   q-value procedures for comparison,
//! - [`simulation`]: seeded, replicable Monte Carlo studies of all of the
//!   above,
//! - [`rng`]: the deterministic stream-indexed generators and distribution
//!   primitives everything else consumes.

pub mod baselines;
pub mod binning;
pub mod encoding;
mod error;
pub mod fdr;
pub mod mixture;
pub mod rng;
pub mod simulation;
mod special;
pub mod transforms;

pub use error::{Error, Result};
