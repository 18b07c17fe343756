//! Empirical-Bayes FDR machinery: the posterior null probability tau, the
//! plug-in marginal-FDR estimator, threshold selection, and the end-to-end
//! control pipeline from p-values to decisions.

use crate::binning::{bin_count, bin_counts, make_bins, BinRule};
use crate::error::Result;
use crate::mixture::{fit_binned_em, log_normal_pdf, EmConfig, MixtureParams};
use crate::transforms::collect_zscores;

/// Decisions for one experiment.
#[derive(Debug, Clone)]
pub struct FdrResult {
    /// Posterior null probability per test, in original input order.
    pub tau: Vec<f64>,
    /// Selected threshold: reject exactly the taus `<= threshold_c`.
    pub threshold_c: f64,
    /// Estimated marginal FDR of the rejection set (0 when empty).
    pub mfdr_at_c: f64,
    pub rejected: Vec<bool>,
    pub n_rejected: usize,
    /// The fitted mixture the decisions are based on.
    pub model: MixtureParams,
}

/// Posterior probability that the hypothesis behind z-score `z` is null:
/// `pi0 phi(z; mu0, var0) / f(z; theta)`, evaluated in log space.
///
/// Encoded data produce `z = +-inf`, where the ratio is taken at its
/// analytic tail limit: the component with the larger variance dominates
/// both tails; with equal variances the component whose mean lies toward
/// the tail dominates.
pub fn tau(z: f64, theta: &MixtureParams) -> f64 {
    if z.is_infinite() {
        let toward_alt = if theta.var1 > theta.var0 {
            true
        } else if theta.var1 < theta.var0 {
            false
        } else if z > 0.0 {
            theta.mu1 > theta.mu0
        } else {
            theta.mu1 < theta.mu0
        };
        return if toward_alt { 0.0 } else { 1.0 };
    }
    let g0 = theta.pi0.ln() + log_normal_pdf(z, theta.mu0, theta.var0);
    let g1 = theta.pi1().ln() + log_normal_pdf(z, theta.mu1, theta.var1);
    // tau = exp(g0) / (exp(g0) + exp(g1)) without overflow
    1.0 / (1.0 + (g1 - g0).exp())
}

/// Plug-in marginal FDR at threshold `c`: the mean of the taus at or below
/// `c`, and 0 when none qualify.
pub fn mfdr_hat(tau: &[f64], c: f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for &t in tau {
        if t <= c {
            sum += t;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Select the rejection threshold for level `beta`: the largest observed
/// tau value `c` with `c <= beta` and plug-in mFDR at or below `beta`;
/// returns `(c, mfdr at c, rejections at c)`. When even the smallest tau
/// fails, `c = 0` designates the empty rejection set.
///
/// Capping the candidates at `beta` itself reproduces the reported
/// procedure: every rejected test has posterior null probability at most
/// `beta`, so the attained mFDR estimate sits well below `beta` and the
/// control is conservative. The running mean of sorted taus is
/// nondecreasing, so one left-to-right scan suffices.
pub fn select_threshold(tau: &[f64], beta: f64) -> (f64, f64, usize) {
    debug_assert!(beta > 0.0 && beta < 1.0, "beta must be in (0, 1)");
    let mut sorted = tau.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64, usize)> = None;
    let mut running = 0.0;
    let n = sorted.len();
    for (i, &t) in sorted.iter().enumerate() {
        if t > beta {
            break;
        }
        running += t;
        // candidate thresholds are the distinct observed values; evaluate at
        // the last index of each run of ties
        if i + 1 < n && sorted[i + 1] == t {
            continue;
        }
        let count = i + 1;
        let mean = running / count as f64;
        if mean <= beta {
            best = Some((t, mean, count));
        }
    }
    best.unwrap_or((0.0, 0.0, 0))
}

/// The full pipeline: probit-transform the p-values, bin, fit the mixture by
/// binned maximum marginal likelihood, compute per-test taus (tail limits at
/// infinite z), and select the rejection threshold for level `beta`.
pub fn eb_control(
    pvalues: &[f64],
    beta: f64,
    bin_rule: BinRule,
    cfg: &EmConfig,
) -> Result<FdrResult> {
    let zs = collect_zscores(pvalues)?;
    let m = bin_count(bin_rule, &zs.finite)?;
    let bins = make_bins(&zs.finite, m)?;
    let counts = bin_counts(&zs, &bins);
    let fit = fit_binned_em(&counts, &bins, cfg)?;
    Ok(decide(&zs_taus(&zs, &fit.params), beta, fit.params))
}

/// Taus for every original index of a z-score sample.
pub(crate) fn zs_taus(zs: &crate::transforms::ZScoreSample, theta: &MixtureParams) -> Vec<f64> {
    (0..zs.len()).map(|i| tau(zs.z_at(i), theta)).collect()
}

/// Threshold a tau vector and assemble the result.
pub(crate) fn decide(taus: &[f64], beta: f64, model: MixtureParams) -> FdrResult {
    let (c, mfdr, n_rejected) = select_threshold(taus, beta);
    let rejected: Vec<bool> = taus.iter().map(|&t| t <= c).collect();
    debug_assert_eq!(rejected.iter().filter(|&&r| r).count(), n_rejected);
    FdrResult {
        tau: taus.to_vec(),
        threshold_c: c,
        mfdr_at_c: mfdr,
        rejected,
        n_rejected,
        model,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn theta_sym() -> MixtureParams {
        MixtureParams::new(0.5, -1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn tau_symmetry_and_degenerate_weight() {
        assert_abs_diff_eq!(tau(0.0, &theta_sym()), 0.5, epsilon = 1e-12);
        // pi0 -> 1 limit: tau near 1 for any finite z
        let near_null = MixtureParams::new(1.0 - 1e-12, 0.0, 1.0, 2.0, 1.0).unwrap();
        assert!(tau(0.0, &near_null) > 0.999_999);
        assert!(tau(3.0, &near_null) > 0.999);
    }

    #[test]
    fn tau_tail_limits() {
        // sigma1 > sigma0: alternative dominates both tails
        let wide_alt = MixtureParams::new(0.6, 0.0, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(tau(f64::INFINITY, &wide_alt), 0.0);
        assert_eq!(tau(f64::NEG_INFINITY, &wide_alt), 0.0);
        // matches the finite evaluation far out
        assert!(tau(40.0, &wide_alt) < 1e-10);
        assert!(tau(-40.0, &wide_alt) < 1e-10);
        // sigma1 < sigma0: null dominates both tails
        let narrow_alt = MixtureParams::new(0.6, 0.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(tau(f64::INFINITY, &narrow_alt), 1.0);
        assert_eq!(tau(f64::NEG_INFINITY, &narrow_alt), 1.0);
        assert!(tau(40.0, &narrow_alt) > 1.0 - 1e-10);
        // equal variances: direction set by the means
        let equal = MixtureParams::new(0.6, 0.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(tau(f64::INFINITY, &equal), 0.0);
        assert_eq!(tau(f64::NEG_INFINITY, &equal), 1.0);
        assert!(tau(40.0, &equal) < 1e-10);
        assert!(tau(-40.0, &equal) > 1.0 - 1e-10);
    }

    #[test]
    fn tau_at_reported_mouse_model() {
        // theta-hat of the structural covariance study; direct formula check
        let theta =
            MixtureParams::new(0.5035, 0.5141, 1.200 * 1.200, 2.9568, 1.785 * 1.785).unwrap();
        assert_abs_diff_eq!(tau(4.169, &theta), 0.018_046_209_886_041_91, epsilon = 1e-12);
    }

    #[test]
    fn mfdr_hand_examples() {
        let taus = [0.01, 0.02, 0.5];
        assert_abs_diff_eq!(mfdr_hat(&taus, 0.05), 0.015, epsilon = 1e-15);
        // c = 1: mean of all
        assert_abs_diff_eq!(mfdr_hat(&taus, 1.0), 0.53 / 3.0, epsilon = 1e-15);
        // below the minimum: empty convention
        assert_eq!(mfdr_hat(&taus, 0.005), 0.0);
    }

    #[test]
    fn threshold_hand_examples() {
        let taus = [0.01, 0.02, 0.5];
        let (c, mfdr, n) = select_threshold(&taus, 0.02);
        assert_eq!(c, 0.02);
        assert_eq!(n, 2);
        assert_abs_diff_eq!(mfdr, 0.015, epsilon = 1e-15);
        // beta >= mean of all: everything rejected
        let (c, _, n) = select_threshold(&taus, 0.2);
        assert_eq!(c, 0.5);
        assert_eq!(n, 3);
        // nothing qualifies
        let (c, mfdr, n) = select_threshold(&[0.4, 0.6], 0.1);
        assert_eq!((c, mfdr, n), (0.0, 0.0, 0));
    }

    #[test]
    fn threshold_handles_ties() {
        let taus = [0.02, 0.02, 0.02, 0.9];
        let (c, _, n) = select_threshold(&taus, 0.05);
        assert_eq!(c, 0.02);
        assert_eq!(n, 3);
    }

    #[test]
    fn eb_control_is_deterministic() {
        use crate::rng::{sample_normal, NormalParams, RngStream};
        use crate::transforms::z_to_p;
        let mut t = sample_normal(RngStream::new(5, 0), &NormalParams::standard(), 4000);
        t.extend(sample_normal(
            RngStream::new(5, 1),
            &NormalParams::new(2.0, 1.0).unwrap(),
            1000,
        ));
        let p: Vec<f64> = t.iter().map(|&v| z_to_p(v).unwrap()).collect();
        let cfg = EmConfig { seed: 9, ..Default::default() };
        let a = eb_control(&p, 0.1, BinRule::Sturges, &cfg).unwrap();
        let b = eb_control(&p, 0.1, BinRule::Sturges, &cfg).unwrap();
        assert_eq!(a.tau, b.tau);
        assert_eq!(a.rejected, b.rejected);
        assert_eq!(a.threshold_c, b.threshold_c);
        assert!(a.n_rejected > 0);
        assert!(a.mfdr_at_c <= 0.1);
        // invariant: rejected exactly the taus at or below the threshold
        for (r, t) in a.rejected.iter().zip(&a.tau) {
            assert_eq!(*r, *t <= a.threshold_c);
        }
    }
}
