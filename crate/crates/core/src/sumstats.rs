//! Marginal GWAS statistics and the vectors LDSC regresses on LD scores.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_dot;
use crate::simgen::{variant_id, Cohort, GenotypePanel};

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub beta: Vec<f64>,
    pub n: usize,
    pub trait_id: String,
}

impl SummaryStats {
    pub fn new(beta: Vec<f64>, n: usize, trait_id: impl Into<String>) -> Result<Self> {
        if n < 2 {
            return Err(Error::SampleTooSmall { needed: 2, got: n });
        }
        Ok(SummaryStats {
            beta,
            n,
            trait_id: trait_id.into(),
        })
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    /// `BETA·√n`.
    pub fn z(&self) -> Vec<f64> {
        let s = (self.n as f64).sqrt();
        self.beta.iter().map(|b| b * s).collect()
    }
}

/// `â_j = X_jᵀ y / n` for every variant.
pub fn marginal_stats(cohort: &Cohort) -> Result<SummaryStats> {
    marginal_from_panel(&cohort.panel, &cohort.phenotype, "trait")
}

pub fn marginal_from_panel(panel: &GenotypePanel, y: &[f64], trait_id: &str) -> Result<SummaryStats> {
    let n = panel.n();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    let inv = 1.0 / n as f64;
    let beta = (0..panel.p())
        .map(|j| pairwise_dot(panel.column(j), y) * inv)
        .collect();
    SummaryStats::new(beta, n, trait_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WKind {
    Squared,
    Product,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WVector {
    pub values: Vec<f64>,
    pub kind: WKind,
}

impl WVector {
    pub fn squared(beta: &[f64]) -> Self {
        WVector {
            values: beta.iter().map(|b| b * b).collect(),
            kind: WKind::Squared,
        }
    }

    pub fn product(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        Ok(WVector {
            values: a.iter().zip(b).map(|(x, y)| x * y).collect(),
            kind: WKind::Product,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `â²` when `b` is absent, `â ⊙ b̂` otherwise.
pub fn make_w(a: &SummaryStats, b: Option<&SummaryStats>) -> Result<WVector> {
    match b {
        None => Ok(WVector::squared(&a.beta)),
        Some(b) => WVector::product(&a.beta, &b.beta),
    }
}

const COLUMNS: [&str; 4] = ["SNP", "N", "BETA", "Z"];

/// Tab-separated `SNP N BETA Z`, floats at round-trip precision.
pub fn write_sumstats(stats: &SummaryStats, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", COLUMNS.join("\t"))?;
    let s = (stats.n as f64).sqrt();
    for (j, b) in stats.beta.iter().enumerate() {
        writeln!(out, "{}\t{}\t{}\t{}", variant_id(j), stats.n, b, b * s)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_sumstats(path: &Path) -> Result<SummaryStats> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .flexible(false)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let (i_n, i_beta) = (col("N")?, col("BETA")?);
    col("SNP")?;
    let mut beta = Vec::new();
    let mut n_value: Option<usize> = None;
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let n: usize = record[i_n]
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad N {:?}: {e}", &record[i_n])))?;
        match n_value {
            None => n_value = Some(n),
            Some(prev) if prev != n => {
                return Err(parse_err(format!("N changes from {prev} to {n}")));
            }
            _ => {}
        }
        let b: f64 = record[i_beta]
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad BETA {:?}: {e}", &record[i_beta])))?;
        beta.push(b);
    }
    let n = n_value.ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: "no variants".into(),
    })?;
    let trait_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    SummaryStats::new(beta, n, trait_id).map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: 2,
        message: format!("sample size {n} below 2"),
    })
}
