//! File formats: numeric CSV (one value per line, optional header), raw
//! little-endian f64, the JSON model file, and the decision/summary CSV
//! writers with provenance comments.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use binfdr::mixture::{FitResult, MixtureParams};
use binfdr::simulation::{NullStudyRow, SimSummary};
use binfdr::transforms::ZScoreSample;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InputFormat {
    Csv,
    F64le,
}

/// Read a numeric vector: CSV is one value per line (a single non-numeric
/// first line is treated as a header), f64le is raw little-endian doubles.
pub fn read_values(path: &Path, format: InputFormat) -> Result<Vec<f64>> {
    match format {
        InputFormat::Csv => read_csv(path),
        InputFormat::F64le => read_f64le(path),
    }
}

fn read_csv(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let reader = BufReader::new(file);
    let mut values = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        let trimmed = line.trim_end_matches('\r').trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match trimmed.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if lineno == 0 => {
                // single header line auto-detected
                continue;
            }
            Err(_) => bail!(
                "{}: line {}: cannot parse '{}' as a number",
                path.display(),
                lineno + 1,
                trimmed
            ),
        }
    }
    if values.is_empty() {
        bail!("{}: no numeric values found", path.display());
    }
    Ok(values)
}

fn read_f64le(path: &Path) -> Result<Vec<f64>> {
    let mut file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    if bytes.is_empty() {
        bail!("{}: empty file", path.display());
    }
    if bytes.len() % 8 != 0 {
        bail!(
            "{}: length {} is not a multiple of 8 bytes",
            path.display(),
            bytes.len()
        );
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Persisted fit: parameters plus everything needed to reapply it.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub params: MixtureParams,
    pub loglik: f64,
    pub n_iter: usize,
    pub bin_edges: Vec<f64>,
    pub bin_rule: String,
    pub n_total: usize,
    pub n_pos_inf: usize,
    pub n_neg_inf: usize,
    pub seed: u64,
}

impl ModelFile {
    pub fn from_fit(fit: &FitResult, zs: &ZScoreSample, bin_rule: &str, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            params: fit.params,
            loglik: fit.loglik,
            n_iter: fit.n_iter,
            bin_edges: fit.bins.as_ref().map(|b| b.edges().to_vec()).unwrap_or_default(),
            bin_rule: bin_rule.to_string(),
            n_total: zs.len(),
            n_pos_inf: zs.n_pos_inf,
            n_neg_inf: zs.n_neg_inf,
            seed,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let model: ModelFile = serde_json::from_reader(BufReader::new(file))?;
        if model.schema_version != SCHEMA_VERSION {
            bail!(
                "{}: unsupported schema_version {} (expected {})",
                path.display(),
                model.schema_version,
                SCHEMA_VERSION
            );
        }
        model.params.validate().map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        Ok(model)
    }
}

pub fn provenance_header(w: &mut impl Write, seed: u64) -> Result<()> {
    writeln!(w, "# binfdr {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# seed: {seed}")?;
    Ok(())
}

pub fn create_out(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

/// Encoded-values CSV: provenance, optional T-type scale, one value per line.
pub fn write_values(path: &Path, values: &[f64], seed: u64, t_scale: Option<f64>) -> Result<()> {
    let mut w = create_out(path)?;
    provenance_header(&mut w, seed)?;
    if let Some(m) = t_scale {
        writeln!(w, "# t_scale_max_abs: {m}")?;
    }
    writeln!(w, "value")?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Per-test decision CSV in original input order.
pub fn write_decisions(
    path: &Path,
    pvalues: &[f64],
    zs: &ZScoreSample,
    taus: &[f64],
    rejected: &[bool],
    seed: u64,
) -> Result<()> {
    let mut w = create_out(path)?;
    provenance_header(&mut w, seed)?;
    writeln!(w, "index,pvalue,zscore,tau,rejected")?;
    for i in 0..pvalues.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            i,
            pvalues[i],
            zs.z_at(i),
            taus[i],
            u8::from(rejected[i])
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Study summary CSV, one row per (encoding, method, beta).
pub fn write_summary(path: &Path, summary: &SimSummary) -> Result<()> {
    let mut w = create_out(path)?;
    provenance_header(&mut w, summary.seed)?;
    writeln!(
        w,
        "scenario,encoding,method,beta,mean_fdp,sd_fdp,se_fdp,mean_tpp,sd_tpp,se_tpp,reps"
    )?;
    for r in &summary.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario.label(),
            r.encoding,
            r.method.label(),
            r.beta,
            r.mean_fdp,
            r.sd_fdp,
            r.se_fdp,
            r.mean_tpp,
            r.sd_tpp,
            r.se_tpp,
            r.reps_used
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Null-study CSV, one row per encoding.
pub fn write_null_study(path: &Path, rows: &[NullStudyRow], seed: u64) -> Result<()> {
    let mut w = create_out(path)?;
    provenance_header(&mut w, seed)?;
    writeln!(
        w,
        "encoding,mean_mu0,sd_mu0,se_mu0,mean_var0,sd_var0,se_var0,reps"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.encoding, r.mean_mu0, r.sd_mu0, r.se_mu0, r.mean_var0, r.sd_var0, r.se_var0, r.reps
        )?;
    }
    w.flush()?;
    Ok(())
}
