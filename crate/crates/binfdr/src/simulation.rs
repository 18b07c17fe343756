//! Scenario generators, FDP/TPP metrics and the seeded replication harness
//! behind the batch studies.
//!
//! Replication `r` of a study derives its own seed from the master seed, and
//! every generator channel within a replication owns a stream index, so
//! results are identical no matter how replications are scheduled across
//! workers. All methods inside one replication see the same encoded
//! p-values (paired comparisons). Aggregation walks replications in index
//! order with pairwise summation.

use rand::Rng;
use rayon::prelude::*;

use crate::baselines::{bh_reject, by_reject, qvalue_reject, storey_qvalues, Method};
use crate::binning::{bin_count, bin_counts, make_bins, BinRule};
use crate::encoding::{p_type_encode, t_type_encode, QuantizationScheme};
use crate::error::Result;
use crate::fdr::{select_threshold, zs_taus};
use crate::mixture::{fit_binned_em, fit_normal_ml, fit_raw_em, EmConfig};
use crate::rng::{child_seed, gen_ar1, sample_normal, sample_t_scaled, NormalParams, RngStream};
use crate::transforms::{collect_zscores, z_to_p};

/// Stream channels within one replication.
const CH_FLAGS: u64 = 0;
const CH_NULL: u64 = 1;
const CH_ALT: u64 = 2;

/// The five simulation scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ScenarioId {
    /// IID: null N(0,1), alternative N(2,1).
    S1,
    /// AR(1) chains with coefficient 0.5, means 0 and 2.
    S2,
    /// AR(1) chains with coefficient -0.5.
    S3,
    /// Misspecified null: null N(1.5,1), alternative N(2.5,1).
    S4,
    /// Scaled Student t(25): null centered at 0, alternative at 2.
    S5,
}

impl ScenarioId {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1" => Ok(Self::S1),
            "s2" => Ok(Self::S2),
            "s3" => Ok(Self::S3),
            "s4" => Ok(Self::S4),
            "s5" => Ok(Self::S5),
            other => Err(crate::Error::Domain(format!("unrecognized scenario '{other}'"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::S1 => "s1",
            Self::S2 => "s2",
            Self::S3 => "s3",
            Self::S4 => "s4",
            Self::S5 => "s5",
        }
    }
}

/// What to generate: scenario, size, null proportion and the seed the
/// instance is grown from.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub n: usize,
    pub pi0: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(id: ScenarioId, n: usize, seed: u64) -> Self {
        Self { id, n, pi0: 0.8, seed }
    }
}

/// One generated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentInstance {
    /// true = alternative hypothesis.
    pub hypotheses: Vec<bool>,
    /// `p_i = 1 - Phi(t_i)`.
    pub pvalues: Vec<f64>,
    pub tstats: Vec<f64>,
}

/// Generate test statistics and p-values for a scenario. Both the null and
/// the alternative processes are generated full length and selected per
/// index by the hypothesis flags, which keeps the dependent scenarios exact.
pub fn gen_scenario(spec: &ScenarioSpec) -> ExperimentInstance {
    let n = spec.n;
    let mut flag_rng = RngStream::new(spec.seed, CH_FLAGS).rng();
    let p_alt = 1.0 - spec.pi0;
    let hypotheses: Vec<bool> = (0..n).map(|_| flag_rng.random::<f64>() < p_alt).collect();

    let null_stream = RngStream::new(spec.seed, CH_NULL);
    let alt_stream = RngStream::new(spec.seed, CH_ALT);
    let (null_chain, alt_chain) = match spec.id {
        ScenarioId::S1 => (
            sample_normal(null_stream, &NormalParams::standard(), n),
            sample_normal(alt_stream, &NormalParams { mu: 2.0, var: 1.0 }, n),
        ),
        ScenarioId::S2 => (
            gen_ar1(null_stream, 0.0, 0.5, n).expect("valid coefficient"),
            gen_ar1(alt_stream, 2.0, 0.5, n).expect("valid coefficient"),
        ),
        ScenarioId::S3 => (
            gen_ar1(null_stream, 0.0, -0.5, n).expect("valid coefficient"),
            gen_ar1(alt_stream, 2.0, -0.5, n).expect("valid coefficient"),
        ),
        ScenarioId::S4 => (
            sample_normal(null_stream, &NormalParams { mu: 1.5, var: 1.0 }, n),
            sample_normal(alt_stream, &NormalParams { mu: 2.5, var: 1.0 }, n),
        ),
        ScenarioId::S5 => (
            sample_t_scaled(null_stream, 0.0, 25, n).expect("valid df"),
            sample_t_scaled(alt_stream, 2.0, 25, n).expect("valid df"),
        ),
    };
    let tstats: Vec<f64> = hypotheses
        .iter()
        .enumerate()
        .map(|(i, &alt)| if alt { alt_chain[i] } else { null_chain[i] })
        .collect();
    let pvalues: Vec<f64> = tstats
        .iter()
        .map(|&t| z_to_p(t).expect("finite statistic"))
        .collect();
    ExperimentInstance { hypotheses, pvalues, tstats }
}

/// Encode an instance: p-type quantizes the p-values directly, T-type
/// quantizes the statistics and converts back through `1 - Phi`.
pub fn apply_encoding(
    inst: &ExperimentInstance,
    scheme: &QuantizationScheme,
) -> Result<Vec<f64>> {
    match scheme {
        QuantizationScheme::None => Ok(inst.pvalues.clone()),
        QuantizationScheme::PType { gamma } => p_type_encode(&inst.pvalues, *gamma),
        QuantizationScheme::TType { gamma } => {
            let (t_hat, _) = t_type_encode(&inst.tstats, *gamma)?;
            t_hat.iter().map(|&t| z_to_p(t)).collect()
        }
    }
}

/// False discovery proportion and true positive proportion, with the 0/0
/// conventions mapped to 0.
pub fn fdp_tpp(rejected: &[bool], hypotheses: &[bool]) -> (f64, f64) {
    debug_assert_eq!(rejected.len(), hypotheses.len());
    let mut n_r = 0u64;
    let mut n_01 = 0u64;
    let mut n_11 = 0u64;
    let mut n_1 = 0u64;
    for (&r, &alt) in rejected.iter().zip(hypotheses) {
        if alt {
            n_1 += 1;
        }
        if r {
            n_r += 1;
            if alt {
                n_11 += 1;
            } else {
                n_01 += 1;
            }
        }
    }
    let fdp = if n_r == 0 { 0.0 } else { n_01 as f64 / n_r as f64 };
    let tpp = if n_1 == 0 { 0.0 } else { n_11 as f64 / n_1 as f64 };
    (fdp, tpp)
}

/// Full study description for [`run_study`].
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub scenario: ScenarioId,
    pub n: usize,
    pub pi0: f64,
    pub seed: u64,
    pub encodings: Vec<QuantizationScheme>,
    pub methods: Vec<Method>,
    pub betas: Vec<f64>,
    pub reps: usize,
    pub workers: usize,
    pub bin_rule: BinRule,
    pub em: EmConfig,
    pub lambda: f64,
}

impl StudyConfig {
    pub fn new(scenario: ScenarioId, n: usize, reps: usize, seed: u64) -> Self {
        Self {
            scenario,
            n,
            pi0: 0.8,
            seed,
            encodings: vec![QuantizationScheme::None],
            methods: vec![Method::Eb, Method::Bh, Method::By, Method::QValue],
            betas: vec![0.05, 0.10],
            reps,
            workers: 1,
            bin_rule: BinRule::Sturges,
            em: EmConfig::default(),
            lambda: crate::baselines::DEFAULT_LAMBDA,
        }
    }
}

/// One aggregated cell of a study.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SummaryRow {
    pub scenario: ScenarioId,
    pub encoding: String,
    pub method: Method,
    pub beta: f64,
    pub mean_fdp: f64,
    pub sd_fdp: f64,
    pub se_fdp: f64,
    pub mean_tpp: f64,
    pub sd_tpp: f64,
    pub se_tpp: f64,
    /// Replications that produced this cell (fit failures drop out).
    pub reps_used: usize,
}

/// All cells of a study plus its provenance.
#[derive(Debug, Clone)]
pub struct SimSummary {
    pub rows: Vec<SummaryRow>,
    pub reps: usize,
    pub seed: u64,
}

/// Pairwise (cascade) summation: deterministic and accurate regardless of
/// aggregation batch sizes.
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Mean and sample standard deviation (divisor n-1; 0 when n < 2).
fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let devs: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let sd = (pairwise_sum(&devs) / (n - 1) as f64).sqrt();
    (mean, sd)
}

/// Per-replication measurements: `cells[encoding][method][beta]`.
type RepCells = Vec<Vec<Vec<Option<(f64, f64)>>>>;

fn run_one_rep(cfg: &StudyConfig, rep: u64) -> RepCells {
    let rep_seed = child_seed(cfg.seed, rep);
    let spec = ScenarioSpec { id: cfg.scenario, n: cfg.n, pi0: cfg.pi0, seed: rep_seed };
    let inst = gen_scenario(&spec);
    let mut cells: RepCells = Vec::with_capacity(cfg.encodings.len());
    for (e_idx, scheme) in cfg.encodings.iter().enumerate() {
        let encoded = apply_encoding(&inst, scheme).expect("valid scheme for instance");
        let mut per_method: Vec<Vec<Option<(f64, f64)>>> = Vec::with_capacity(cfg.methods.len());
        // EB shares one fit (hence one tau vector) across betas
        let eb_taus = if cfg.methods.contains(&Method::Eb) {
            let em = EmConfig {
                seed: child_seed(rep_seed, 1000 + e_idx as u64),
                ..cfg.em
            };
            collect_zscores(&encoded).and_then(|zs| {
                let m = bin_count(cfg.bin_rule, &zs.finite)?;
                let bins = make_bins(&zs.finite, m)?;
                let counts = bin_counts(&zs, &bins);
                let fit = fit_binned_em(&counts, &bins, &em)?;
                Ok(zs_taus(&zs, &fit.params))
            })
        } else {
            Err(crate::Error::FitFailure("eb not requested".into()))
        };
        let qvals = if cfg.methods.contains(&Method::QValue) {
            Some(storey_qvalues(&encoded, cfg.lambda))
        } else {
            None
        };
        for method in &cfg.methods {
            let mut per_beta = Vec::with_capacity(cfg.betas.len());
            for &beta in &cfg.betas {
                let measured = match method {
                    Method::Eb => eb_taus.as_ref().ok().map(|taus| {
                        let (c, _, _) = select_threshold(taus, beta);
                        let rejected: Vec<bool> = taus.iter().map(|&t| t <= c).collect();
                        fdp_tpp(&rejected, &inst.hypotheses)
                    }),
                    Method::Bh => {
                        let set = bh_reject(&encoded, beta);
                        Some(fdp_tpp(&set.rejected, &inst.hypotheses))
                    }
                    Method::By => {
                        let set = by_reject(&encoded, beta);
                        Some(fdp_tpp(&set.rejected, &inst.hypotheses))
                    }
                    Method::QValue => {
                        let set = qvalue_reject(qvals.as_ref().unwrap(), beta);
                        Some(fdp_tpp(&set.rejected, &inst.hypotheses))
                    }
                };
                per_beta.push(measured);
            }
            per_method.push(per_beta);
        }
        cells.push(per_method);
    }
    cells
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers <= 1 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool")
            .install(f)
    }
}

/// Run `reps` replications of a scenario and aggregate FDP/TPP per
/// (encoding, method, beta) cell. Deterministic given the seed; identical
/// for any worker count.
pub fn run_study(cfg: &StudyConfig) -> SimSummary {
    let all: Vec<RepCells> = with_pool(cfg.workers, || {
        if cfg.workers <= 1 {
            (0..cfg.reps as u64).map(|r| run_one_rep(cfg, r)).collect()
        } else {
            (0..cfg.reps as u64)
                .into_par_iter()
                .map(|r| run_one_rep(cfg, r))
                .collect()
        }
    });
    let mut rows = Vec::new();
    for (e_idx, scheme) in cfg.encodings.iter().enumerate() {
        for (m_idx, method) in cfg.methods.iter().enumerate() {
            for (b_idx, &beta) in cfg.betas.iter().enumerate() {
                let mut fdps = Vec::with_capacity(cfg.reps);
                let mut tpps = Vec::with_capacity(cfg.reps);
                for rep_cells in &all {
                    if let Some((fdp, tpp)) = rep_cells[e_idx][m_idx][b_idx] {
                        fdps.push(fdp);
                        tpps.push(tpp);
                    }
                }
                let (mean_fdp, sd_fdp) = mean_sd(&fdps);
                let (mean_tpp, sd_tpp) = mean_sd(&tpps);
                let k = fdps.len();
                let sqrt_k = (k.max(1) as f64).sqrt();
                rows.push(SummaryRow {
                    scenario: cfg.scenario,
                    encoding: scheme.label(),
                    method: *method,
                    beta,
                    mean_fdp,
                    sd_fdp,
                    se_fdp: sd_fdp / sqrt_k,
                    mean_tpp,
                    sd_tpp,
                    se_tpp: sd_tpp / sqrt_k,
                    reps_used: k,
                });
            }
        }
    }
    SimSummary { rows, reps: cfg.reps, seed: cfg.seed }
}

/// One row of the all-null bias study: ML mean/variance estimates of the
/// null z-score distribution under an encoding.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NullStudyRow {
    pub encoding: String,
    pub mean_mu0: f64,
    pub sd_mu0: f64,
    pub se_mu0: f64,
    pub mean_var0: f64,
    pub sd_var0: f64,
    pub se_var0: f64,
    pub reps: usize,
}

/// All-null study: simulate standard normal statistics, encode, transform
/// to z-scores, drop infinities and estimate `(mu0, var0)` by ML.
pub fn run_null_study(
    encodings: &[QuantizationScheme],
    n: usize,
    reps: usize,
    seed: u64,
    workers: usize,
) -> Vec<NullStudyRow> {
    let per_rep = |rep: u64| -> Vec<(f64, f64)> {
        let rep_seed = child_seed(seed, rep);
        let t = sample_normal(RngStream::new(rep_seed, CH_NULL), &NormalParams::standard(), n);
        let p: Vec<f64> = t.iter().map(|&v| z_to_p(v).expect("finite")).collect();
        let inst = ExperimentInstance {
            hypotheses: vec![false; n],
            pvalues: p,
            tstats: t,
        };
        encodings
            .iter()
            .map(|scheme| {
                let encoded = apply_encoding(&inst, scheme).expect("valid scheme");
                let zs = collect_zscores(&encoded).expect("p-values in range");
                fit_normal_ml(&zs.finite).expect("enough finite z-scores")
            })
            .collect()
    };
    let all: Vec<Vec<(f64, f64)>> = with_pool(workers, || {
        if workers <= 1 {
            (0..reps as u64).map(per_rep).collect()
        } else {
            (0..reps as u64).into_par_iter().map(per_rep).collect()
        }
    });
    encodings
        .iter()
        .enumerate()
        .map(|(e_idx, scheme)| {
            let mus: Vec<f64> = all.iter().map(|r| r[e_idx].0).collect();
            let vars: Vec<f64> = all.iter().map(|r| r[e_idx].1).collect();
            let (mean_mu0, sd_mu0) = mean_sd(&mus);
            let (mean_var0, sd_var0) = mean_sd(&vars);
            let sqrt_k = (reps.max(1) as f64).sqrt();
            NullStudyRow {
                encoding: scheme.label(),
                mean_mu0,
                sd_mu0,
                se_mu0: sd_mu0 / sqrt_k,
                mean_var0,
                sd_var0,
                se_var0: sd_var0 / sqrt_k,
                reps,
            }
        })
        .collect()
}

/// Which estimator a parameter-recovery study exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamEstimator {
    /// Unbinned EM on the finite z-scores (drops infinities).
    RawEm,
    /// Binned maximum marginal likelihood with the given bin rule.
    BinnedEm(BinRule),
}

/// One row of a parameter-recovery study: per-encoding means/SDs/SEs of the
/// five mixture parameters `(pi0, mu0, var0, mu1, var1)`.
#[derive(Debug, Clone)]
pub struct ParamStudyRow {
    pub encoding: String,
    pub means: [f64; 5],
    pub sds: [f64; 5],
    pub ses: [f64; 5],
    pub reps_used: usize,
}

/// Parameter recovery on two-component data (null proportion 0.8, null
/// N(0,1), alternative N(2,1)): generate, encode, transform, estimate.
pub fn run_param_study(
    estimator: ParamEstimator,
    encodings: &[QuantizationScheme],
    n: usize,
    reps: usize,
    seed: u64,
    em: &EmConfig,
    workers: usize,
) -> Vec<ParamStudyRow> {
    let per_rep = |rep: u64| -> Vec<Option<[f64; 5]>> {
        let rep_seed = child_seed(seed, rep);
        let spec = ScenarioSpec { id: ScenarioId::S1, n, pi0: 0.8, seed: rep_seed };
        let inst = gen_scenario(&spec);
        encodings
            .iter()
            .enumerate()
            .map(|(e_idx, scheme)| {
                let encoded = apply_encoding(&inst, scheme).expect("valid scheme");
                let zs = collect_zscores(&encoded).expect("p-values in range");
                let cfg = EmConfig {
                    seed: child_seed(rep_seed, 2000 + e_idx as u64),
                    ..*em
                };
                let fit = match estimator {
                    ParamEstimator::RawEm => fit_raw_em(&zs.finite, &cfg),
                    ParamEstimator::BinnedEm(rule) => bin_count(rule, &zs.finite)
                        .and_then(|m| make_bins(&zs.finite, m))
                        .and_then(|bins| {
                            let counts = bin_counts(&zs, &bins);
                            fit_binned_em(&counts, &bins, &cfg)
                        }),
                };
                fit.ok().map(|f| {
                    let p = f.params;
                    [p.pi0, p.mu0, p.var0, p.mu1, p.var1]
                })
            })
            .collect()
    };
    let all: Vec<Vec<Option<[f64; 5]>>> = with_pool(workers, || {
        if workers <= 1 {
            (0..reps as u64).map(per_rep).collect()
        } else {
            (0..reps as u64).into_par_iter().map(per_rep).collect()
        }
    });
    encodings
        .iter()
        .enumerate()
        .map(|(e_idx, scheme)| {
            let fits: Vec<[f64; 5]> = all.iter().filter_map(|r| r[e_idx]).collect();
            let mut means = [0.0; 5];
            let mut sds = [0.0; 5];
            let mut ses = [0.0; 5];
            let sqrt_k = (fits.len().max(1) as f64).sqrt();
            for d in 0..5 {
                let vals: Vec<f64> = fits.iter().map(|f| f[d]).collect();
                let (m, s) = mean_sd(&vals);
                means[d] = m;
                sds[d] = s;
                ses[d] = s / sqrt_k;
            }
            ParamStudyRow { encoding: scheme.label(), means, sds, ses, reps_used: fits.len() }
        })
        .collect()
}
