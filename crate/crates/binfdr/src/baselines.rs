//! Comparison FDR procedures: Benjamini-Hochberg and Benjamini-Yekutieli
//! step-up rules and Storey q-values.

/// Which procedure produced a rejection set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Eb,
    Bh,
    By,
    #[serde(rename = "qvalue")]
    QValue,
}

impl Method {
    pub fn parse(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eb" => Ok(Self::Eb),
            "bh" => Ok(Self::Bh),
            "by" => Ok(Self::By),
            "qvalue" | "q-values" | "qvalues" => Ok(Self::QValue),
            other => Err(crate::Error::Domain(format!("unrecognized method '{other}'"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Eb => "eb",
            Self::Bh => "bh",
            Self::By => "by",
            Self::QValue => "qvalue",
        }
    }
}

/// Default Storey lambda tuning constant.
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// Per-test rejection flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectionSet {
    pub rejected: Vec<bool>,
    pub n_rejected: usize,
    pub method: Method,
}

fn step_up(pvalues: &[f64], level: f64, method: Method) -> RejectionSet {
    let n = pvalues.len();
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    // largest k with p_(k) <= k * level / n
    let mut threshold = f64::NEG_INFINITY;
    for (i, &p) in sorted.iter().enumerate().rev() {
        if p <= (i + 1) as f64 * level / n as f64 {
            threshold = p;
            break;
        }
    }
    let rejected: Vec<bool> = pvalues.iter().map(|&p| p <= threshold).collect();
    let n_rejected = rejected.iter().filter(|&&r| r).count();
    RejectionSet { rejected, n_rejected, method }
}

/// Benjamini-Hochberg step-up at level `beta`; ties at the boundary value
/// are all rejected, and flags follow the input order.
pub fn bh_reject(pvalues: &[f64], beta: f64) -> RejectionSet {
    step_up(pvalues, beta, Method::Bh)
}

/// Benjamini-Yekutieli: BH with `beta` deflated by the harmonic sum
/// `c_n = 1 + 1/2 + ... + 1/n`, valid under arbitrary dependence.
pub fn by_reject(pvalues: &[f64], beta: f64) -> RejectionSet {
    let n = pvalues.len();
    let c_n: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
    let mut set = step_up(pvalues, beta / c_n, Method::Bh);
    set.method = Method::By;
    set
}

/// Storey's null-proportion estimate
/// `min(1, #{p > lambda} / (n (1 - lambda)))`.
pub fn storey_pi0(pvalues: &[f64], lambda: f64) -> f64 {
    debug_assert!(lambda > 0.0 && lambda < 1.0);
    if pvalues.is_empty() {
        return 1.0;
    }
    let n = pvalues.len();
    let above = pvalues.iter().filter(|&&p| p > lambda).count();
    (above as f64 / (n as f64 * (1.0 - lambda))).min(1.0)
}

/// q-values for a given null proportion:
/// `q_(k) = min_{j >= k} pi0 n p_(j) / j`, clamped to `[0, 1]` and returned
/// in the input order.
pub fn qvalues_with_pi0(pvalues: &[f64], pi0: f64) -> Vec<f64> {
    let n = pvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));
    let mut q = vec![0.0; n];
    let mut running_min = f64::INFINITY;
    for (rank, &idx) in order.iter().enumerate().rev() {
        let raw = pi0 * n as f64 * pvalues[idx] / (rank + 1) as f64;
        running_min = running_min.min(raw);
        q[idx] = running_min.clamp(0.0, 1.0);
    }
    q
}

/// Storey q-values with the null proportion estimated at the given lambda.
pub fn storey_qvalues(pvalues: &[f64], lambda: f64) -> Vec<f64> {
    qvalues_with_pi0(pvalues, storey_pi0(pvalues, lambda))
}

/// Reject every test with `q <= beta`.
pub fn qvalue_reject(qvalues: &[f64], beta: f64) -> RejectionSet {
    let rejected: Vec<bool> = qvalues.iter().map(|&q| q <= beta).collect();
    let n_rejected = rejected.iter().filter(|&&r| r).count();
    RejectionSet { rejected, n_rejected, method: Method::QValue }
}
