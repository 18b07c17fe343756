//! Batch CLI for empirical-Bayes FDR control on reduced-precision testing
//! data. See `binfdr --help` and the repository README for the file formats.

mod io;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use binfdr::baselines::Method;
use binfdr::binning::{bin_count, bin_counts, make_bins, BinRule};
use binfdr::encoding::{p_type_encode, t_type_encode, QuantizationScheme};
use binfdr::fdr::{select_threshold, tau};
use binfdr::mixture::{fit_binned_em, EmConfig};
use binfdr::simulation::{run_null_study, run_study, ScenarioId, StudyConfig};
use binfdr::transforms::collect_zscores;

use io::{InputFormat, ModelFile};

#[derive(Parser)]
#[command(
    name = "binfdr",
    version,
    about = "FDR control for integer-encoded p-values via binned mixture estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct EmArgs {
    /// EM iteration cap per start
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Relative log-likelihood stopping tolerance
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    /// Number of EM initializations
    #[arg(long, default_value_t = 5)]
    starts: usize,
}

impl EmArgs {
    fn config(&self, seed: u64) -> EmConfig {
        EmConfig {
            max_iter: self.max_iter,
            rel_tol: self.rel_tol,
            n_starts: self.starts,
            seed,
            ..EmConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Quantize a value file with a p-type or T-type scheme
    Encode {
        /// Input file of p-values (p-type) or test statistics (T-type)
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: InputFormat,
        /// Scheme: none | p8 | p9 | p16 | p17 | t7 | t8 | t15 | t16
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit the two-component mixture to p-values by binned MML
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: InputFormat,
        /// Bin rule: sturges | scott | fd
        #[arg(long, default_value = "sturges")]
        bin_rule: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        em: EmArgs,
    },
    /// Per-test FDR decisions at a target level
    Control {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: InputFormat,
        /// Fitted model JSON; omitted = fit in-line from the input
        #[arg(long)]
        model: Option<PathBuf>,
        /// FDR level in (0, 1)
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "sturges")]
        bin_rule: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        em: EmArgs,
    },
    /// Replicated FDP/TPP study of a simulation scenario
    Simulate {
        /// Scenario: s1 | s2 | s3 | s4 | s5
        #[arg(long)]
        scenario: String,
        /// Tests per replication
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: usize,
        /// Comma-separated: none,p8,p9,p16,p17,t7,t8,t15,t16
        #[arg(long, default_value = "none")]
        encodings: String,
        /// Comma-separated: eb,bh,by,qvalue
        #[arg(long, default_value = "eb,bh,by,qvalue")]
        methods: String,
        /// Comma-separated FDR levels in (0, 1)
        #[arg(long, default_value = "0.05,0.10")]
        betas: String,
        #[arg(long, default_value_t = 0.8)]
        pi0: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value = "sturges")]
        bin_rule: String,
        /// Storey pi0 tuning constant
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[command(flatten)]
        em: EmArgs,
    },
    /// All-null bias study: ML estimates of the null z-score distribution
    NullStudy {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: usize,
        /// Comma-separated encodings
        #[arg(long, default_value = "none,p8,p9,p16,p17,t7,t8,t15,t16")]
        encodings: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // keep help/version on stdout with status 0
            if e.use_stderr() {
                let msg = e.to_string();
                eprintln!("error: {}", msg.lines().next().unwrap_or("invalid arguments"));
                std::process::exit(2);
            }
            let _ = e.print();
            std::process::exit(0);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        bail!("beta must be in (0, 1), got {beta}");
    }
    Ok(())
}

fn parse_list<T>(s: &str, parse: impl Fn(&str) -> binfdr::Result<T>) -> Result<Vec<T>> {
    let items: Result<Vec<T>> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse(t).map_err(Into::into))
        .collect();
    let items = items?;
    if items.is_empty() {
        bail!("empty list '{s}'");
    }
    Ok(items)
}

fn parse_betas(s: &str) -> Result<Vec<f64>> {
    let betas: Vec<f64> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow::anyhow!("cannot parse beta '{t}'"))
        })
        .collect::<Result<_>>()?;
    if betas.is_empty() {
        bail!("no beta levels given");
    }
    for &b in &betas {
        check_beta(b)?;
    }
    Ok(betas)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode { input, format, scheme, out, seed } => {
            let scheme = QuantizationScheme::parse(&scheme)?;
            let values = io::read_values(&input, format)?;
            match scheme {
                QuantizationScheme::None => io::write_values(&out, &values, seed, None)?,
                QuantizationScheme::PType { gamma } => {
                    let encoded = p_type_encode(&values, gamma)?;
                    io::write_values(&out, &encoded, seed, None)?;
                }
                QuantizationScheme::TType { gamma } => {
                    let (encoded, scale) = t_type_encode(&values, gamma)?;
                    io::write_values(&out, &encoded, seed, Some(scale.max_abs))?;
                }
            }
        }
        Command::Fit { input, format, bin_rule, out, seed, em } => {
            let rule = BinRule::parse(&bin_rule)?;
            let pvalues = io::read_values(&input, format)?;
            let cfg = em.config(seed);
            let zs = collect_zscores(&pvalues)?;
            let m = bin_count(rule, &zs.finite)?;
            let bins = make_bins(&zs.finite, m)?;
            let counts = bin_counts(&zs, &bins);
            let fit = fit_binned_em(&counts, &bins, &cfg)?;
            ModelFile::from_fit(&fit, &zs, rule.label(), seed).write(&out)?;
            eprintln!(
                "fitted in {} iterations (loglik {:.6}): pi0={:.4} mu0={:.4} var0={:.4} mu1={:.4} var1={:.4}",
                fit.n_iter,
                fit.loglik,
                fit.params.pi0,
                fit.params.mu0,
                fit.params.var0,
                fit.params.mu1,
                fit.params.var1
            );
        }
        Command::Control { input, format, model, beta, out, bin_rule, seed, em } => {
            check_beta(beta)?;
            let pvalues = io::read_values(&input, format)?;
            let zs = collect_zscores(&pvalues)?;
            let params = match model {
                Some(path) => ModelFile::read(&path)?.params,
                None => {
                    let rule = BinRule::parse(&bin_rule)?;
                    let cfg = em.config(seed);
                    let m = bin_count(rule, &zs.finite)?;
                    let bins = make_bins(&zs.finite, m)?;
                    let counts = bin_counts(&zs, &bins);
                    fit_binned_em(&counts, &bins, &cfg)?.params
                }
            };
            let taus: Vec<f64> = (0..zs.len()).map(|i| tau(zs.z_at(i), &params)).collect();
            let (c, mfdr, n_rejected) = select_threshold(&taus, beta);
            let rejected: Vec<bool> = taus.iter().map(|&t| t <= c).collect();
            io::write_decisions(&out, &pvalues, &zs, &taus, &rejected, seed)?;
            eprintln!(
                "rejected {n_rejected} of {} at threshold c={c} (estimated mFDR {mfdr})",
                pvalues.len()
            );
        }
        Command::Simulate {
            scenario,
            n,
            reps,
            encodings,
            methods,
            betas,
            pi0,
            seed,
            out,
            workers,
            bin_rule,
            lambda,
            em,
        } => {
            if !(pi0 > 0.0 && pi0 < 1.0) {
                bail!("pi0 must be in (0, 1), got {pi0}");
            }
            if !(lambda > 0.0 && lambda < 1.0) {
                bail!("lambda must be in (0, 1), got {lambda}");
            }
            let cfg = StudyConfig {
                scenario: ScenarioId::parse(&scenario)?,
                n,
                pi0,
                seed,
                encodings: parse_list(&encodings, |s| QuantizationScheme::parse(s))?,
                methods: parse_list(&methods, Method::parse)?,
                betas: parse_betas(&betas)?,
                reps,
                workers: workers.max(1),
                bin_rule: BinRule::parse(&bin_rule)?,
                em: em.config(seed),
                lambda,
            };
            let summary = run_study(&cfg);
            io::write_summary(&out, &summary)?;
        }
        Command::NullStudy { n, reps, encodings, seed, out, workers } => {
            let encodings = parse_list(&encodings, |s| QuantizationScheme::parse(s))?;
            let rows = run_null_study(&encodings, n, reps, seed, workers.max(1));
            io::write_null_study(&out, &rows, seed)?;
        }
    }
    Ok(())
}
