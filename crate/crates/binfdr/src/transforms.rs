//! Probit transformation between p-values and z-scores, with explicit
//! bookkeeping for the infinite z-scores produced by encoded p-values of
//! exactly 0 or 1, plus the Fisher-z correlation p-value utility.

use crate::error::{Error, Result};
use crate::special;

/// Where an input landed after the probit transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZSlot {
    /// Index into [`ZScoreSample::finite`].
    Finite(usize),
    /// Came from p = 0.
    PosInf,
    /// Came from p = 1.
    NegInf,
}

/// A z-score sample split into its finite values and the counts of signed
/// infinities, with a map back to the original input order.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScoreSample {
    /// Finite z-scores in original relative order.
    pub finite: Vec<f64>,
    /// Count of z = +inf (p-values equal to 0).
    pub n_pos_inf: usize,
    /// Count of z = -inf (p-values equal to 1).
    pub n_neg_inf: usize,
    /// Per original index: where its z-score went.
    pub order_map: Vec<ZSlot>,
}

impl ZScoreSample {
    /// Total sample size including infinities.
    pub fn len(&self) -> usize {
        self.order_map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order_map.is_empty()
    }

    /// The z-score of original index `i` (possibly infinite).
    pub fn z_at(&self, i: usize) -> f64 {
        match self.order_map[i] {
            ZSlot::Finite(k) => self.finite[k],
            ZSlot::PosInf => f64::INFINITY,
            ZSlot::NegInf => f64::NEG_INFINITY,
        }
    }
}

/// Probit transform `z = Phi^{-1}(1 - p)`; p = 0 maps to +inf, p = 1 to -inf.
pub fn p_to_z(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p_to_z: p={p} outside [0, 1]")));
    }
    // Phi^{-1}(1 - p) = -Phi^{-1}(p); the right-hand form keeps full accuracy
    // for small p where 1 - p would round.
    Ok(-special::std_quantile(p))
}

/// Inverse of [`p_to_z`]: `p = 1 - Phi(z)`.
pub fn z_to_p(z: f64) -> Result<f64> {
    if z.is_nan() {
        return Err(Error::domain("z_to_p: NaN input"));
    }
    Ok(special::std_sf(z))
}

/// Transform a p-value vector to a [`ZScoreSample`].
pub fn collect_zscores(p: &[f64]) -> Result<ZScoreSample> {
    let mut finite = Vec::with_capacity(p.len());
    let mut order_map = Vec::with_capacity(p.len());
    let mut n_pos_inf = 0;
    let mut n_neg_inf = 0;
    for &v in p {
        let z = p_to_z(v)?;
        if z == f64::INFINITY {
            n_pos_inf += 1;
            order_map.push(ZSlot::PosInf);
        } else if z == f64::NEG_INFINITY {
            n_neg_inf += 1;
            order_map.push(ZSlot::NegInf);
        } else {
            order_map.push(ZSlot::Finite(finite.len()));
            finite.push(z);
        }
    }
    Ok(ZScoreSample { finite, n_pos_inf, n_neg_inf, order_map })
}

/// Two-sided p-value for a Pearson correlation of `r` over `n_subjects`
/// observations, via the Fisher z-transformation and normal approximation:
/// `p = 2 (1 - Phi(|atanh r| sqrt(n - 3)))`.
pub fn fisher_corr_pvalue(r: f64, n_subjects: usize) -> Result<f64> {
    if !((-1.0..=1.0).contains(&r)) {
        return Err(Error::domain(format!("fisher_corr_pvalue: |r|={r} > 1")));
    }
    if n_subjects <= 3 {
        return Err(Error::domain(format!(
            "fisher_corr_pvalue: need more than 3 subjects, got {n_subjects}"
        )));
    }
    let stat = r.atanh().abs() * ((n_subjects - 3) as f64).sqrt();
    Ok(2.0 * special::std_sf(stat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn p_to_z_boundaries() {
        assert_eq!(p_to_z(0.5).unwrap(), 0.0);
        assert_eq!(p_to_z(0.0).unwrap(), f64::INFINITY);
        assert_eq!(p_to_z(1.0).unwrap(), f64::NEG_INFINITY);
        assert!(p_to_z(-0.01).is_err());
        assert!(p_to_z(1.01).is_err());
        // smallest non-zero 16-bit p-value -> the truncation z of 4.169
        assert_abs_diff_eq!(p_to_z(1.53e-5).unwrap(), 4.169, epsilon = 1e-3);
    }

    #[test]
    fn z_to_p_and_round_trip() {
        assert_eq!(z_to_p(0.0).unwrap(), 0.5);
        assert_eq!(z_to_p(f64::INFINITY).unwrap(), 0.0);
        assert_eq!(z_to_p(f64::NEG_INFINITY).unwrap(), 1.0);
        assert!(z_to_p(f64::NAN).is_err());
        assert_abs_diff_eq!(z_to_p(p_to_z(0.3).unwrap()).unwrap(), 0.3, epsilon = 1e-10);
        let mut p = 1e-12;
        while p < 1.0 {
            let back = z_to_p(p_to_z(p).unwrap()).unwrap();
            assert!((back - p).abs() < 1e-10, "p={p} back={back}");
            p *= 4.1;
        }
    }

    #[test]
    fn collect_splits_infinities() {
        let zs = collect_zscores(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(zs.finite, vec![0.0]);
        assert_eq!(zs.n_pos_inf, 1);
        assert_eq!(zs.n_neg_inf, 1);
        assert_eq!(zs.len(), 3);
        assert_eq!(zs.z_at(0), f64::INFINITY);
        assert_eq!(zs.z_at(1), 0.0);
        assert_eq!(zs.z_at(2), f64::NEG_INFINITY);

        let zs = collect_zscores(&[0.2, 0.4, 0.6]).unwrap();
        assert_eq!(zs.n_pos_inf + zs.n_neg_inf, 0);
        assert_eq!(zs.finite.len(), 3);
    }

    #[test]
    fn order_map_recovers_inputs() {
        let p = [0.9, 0.0, 0.3, 1.0, 0.3];
        let zs = collect_zscores(&p).unwrap();
        for (i, &pi) in p.iter().enumerate() {
            assert_eq!(zs.z_at(i), p_to_z(pi).unwrap());
        }
    }

    #[test]
    fn fisher_pvalue_examples() {
        assert_eq!(fisher_corr_pvalue(0.0, 10).unwrap(), 1.0);
        assert_eq!(fisher_corr_pvalue(1.0, 10).unwrap(), 0.0);
        assert_eq!(fisher_corr_pvalue(-1.0, 10).unwrap(), 0.0);
        assert!(fisher_corr_pvalue(1.2, 10).is_err());
        assert!(fisher_corr_pvalue(0.3, 3).is_err());
        // 40-digit reference: 2 (1 - Phi(atanh(0.3) sqrt(238)))
        assert_abs_diff_eq!(
            fisher_corr_pvalue(0.3, 241).unwrap(),
            1.796_752_102_790_986e-6,
            epsilon = 1e-8
        );
    }
}
