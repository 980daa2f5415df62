//! True and estimated LD scores.
//!
//! Estimates come from per-block sample correlation matrices of a reference
//! panel (denominator `n_r`). [`BlockCorrelations`] holds those matrices and
//! can be filled from a simulated panel or drawn directly from their Wishart
//! law.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockFactor, BlockStructure, CovarianceModel};
use crate::numeric::pairwise_sum;
use crate::simgen::{variant_id, wishart_correlation, GenotypePanel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Within,
    Cross,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSource {
    True,
    Estimated,
    Pooled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdScoreVector {
    pub values: Vec<f64>,
    pub kind: ScoreKind,
    pub source: ScoreSource,
    /// Reference panel sizes behind an estimate.
    pub panel_n: Option<(usize, Option<usize>)>,
}

impl LdScoreVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-block LD matrices on a fixed block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCorrelations {
    structure: BlockStructure,
    blocks: Vec<DMatrix<f64>>,
    n: usize,
}

impl BlockCorrelations {
    /// Sample correlations of a standardized panel, `X_kᵀX_k / n` per block.
    pub fn from_panel(panel: &GenotypePanel, structure: &BlockStructure) -> Result<Self> {
        if panel.p() != structure.p() {
            return Err(Error::StructureMismatch);
        }
        let n = panel.n();
        if n < 2 {
            return Err(Error::DegeneratePanel(format!("reference panel has {n} sample(s)")));
        }
        let ranges: Vec<_> = structure.ranges().collect();
        let blocks = ranges
            .par_iter()
            .map(|r| {
                let xb = panel.data().columns(r.start, r.len());
                let mut c = xb.transpose() * xb;
                c /= n as f64;
                for i in 0..r.len() {
                    c[(i, i)] = 1.0;
                }
                c
            })
            .collect();
        Ok(BlockCorrelations {
            structure: structure.clone(),
            blocks,
            n,
        })
    }

    /// Draw the sample correlations of an `n`-sample Gaussian reference panel
    /// without simulating the panel.
    pub fn sample<R: Rng + ?Sized>(factor: &BlockFactor, n: usize, rng: &mut R) -> Result<Self> {
        let blocks = factor
            .factors()
            .iter()
            .map(|f| wishart_correlation(f, n, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockCorrelations {
            structure: factor.structure().clone(),
            blocks,
            n,
        })
    }

    /// Population matrices of a covariance model, labelled with `n = 0`.
    pub fn population(cov: &CovarianceModel) -> Self {
        BlockCorrelations {
            structure: cov.structure().clone(),
            blocks: cov.blocks().to_vec(),
            n: 0,
        }
    }

    /// Correlations of the row-stacked panels when each was standardized on
    /// its own: the sample-size weighted average.
    pub fn pooled(a: &BlockCorrelations, b: &BlockCorrelations) -> Result<Self> {
        if a.structure != b.structure {
            return Err(Error::StructureMismatch);
        }
        let (na, nb) = (a.n as f64, b.n as f64);
        let total = na + nb;
        let blocks = a
            .blocks
            .iter()
            .zip(&b.blocks)
            .map(|(x, y)| {
                let mut c = (x * na + y * nb) / total;
                for i in 0..c.nrows() {
                    c[(i, i)] = 1.0;
                }
                c
            })
            .collect();
        Ok(BlockCorrelations {
            structure: a.structure.clone(),
            blocks,
            n: a.n + b.n,
        })
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Within scores `Σ_i C_ji²`.
    pub fn within_scores(&self) -> Vec<f64> {
        row_products(&self.blocks, &self.blocks)
    }

    /// Cross scores `Σ_i A_ji B_ji` against another set of matrices.
    pub fn cross_scores(&self, other: &BlockCorrelations) -> Result<Vec<f64>> {
        if self.structure != other.structure {
            return Err(Error::StructureMismatch);
        }
        Ok(row_products(&self.blocks, &other.blocks))
    }
}

fn row_products(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for (x, y) in a.iter().zip(b) {
        let q = x.nrows();
        // Symmetric blocks: column j equals row j, and columns are contiguous.
        for j in 0..q {
            let terms: Vec<f64> = x
                .column(j)
                .iter()
                .zip(y.column(j).iter())
                .map(|(u, v)| u * v)
                .collect();
            out.push(pairwise_sum(&terms));
        }
    }
    out
}

/// Exact scores from population LD; cross scores when `cov_b` is given.
pub fn true_ld_scores(cov_a: &CovarianceModel, cov_b: Option<&CovarianceModel>) -> Result<LdScoreVector> {
    let a = BlockCorrelations::population(cov_a);
    let (values, kind) = match cov_b {
        None => (a.within_scores(), ScoreKind::Within),
        Some(cb) => {
            if cb.structure() != cov_a.structure() {
                return Err(Error::StructureMismatch);
            }
            (a.cross_scores(&BlockCorrelations::population(cb))?, ScoreKind::Cross)
        }
    };
    Ok(LdScoreVector {
        values,
        kind,
        source: ScoreSource::True,
        panel_n: None,
    })
}

/// Scores from sample LD matrices; cross scores when `b` is given.
pub fn scores_from_correlations(a: &BlockCorrelations, b: Option<&BlockCorrelations>) -> Result<LdScoreVector> {
    match b {
        None => Ok(LdScoreVector {
            values: a.within_scores(),
            kind: ScoreKind::Within,
            source: ScoreSource::Estimated,
            panel_n: Some((a.n, None)),
        }),
        Some(b) => Ok(LdScoreVector {
            values: a.cross_scores(b)?,
            kind: ScoreKind::Cross,
            source: ScoreSource::Estimated,
            panel_n: Some((a.n, Some(b.n))),
        }),
    }
}

pub fn estimate_ld_scores(
    panel_a: &GenotypePanel,
    panel_b: Option<&GenotypePanel>,
    structure: &BlockStructure,
) -> Result<LdScoreVector> {
    let a = BlockCorrelations::from_panel(panel_a, structure)?;
    match panel_b {
        None => scores_from_correlations(&a, None),
        Some(pb) => {
            if pb.p() != panel_a.p() {
                return Err(Error::StructureMismatch);
            }
            let b = BlockCorrelations::from_panel(pb, structure)?;
            scores_from_correlations(&a, Some(&b))
        }
    }
}

/// Within-style scores on the row-stacked panels, re-standardized.
pub fn pooled_ld_scores(
    panel_a: &GenotypePanel,
    panel_b: &GenotypePanel,
    structure: &BlockStructure,
) -> Result<LdScoreVector> {
    if panel_a.p() != panel_b.p() || panel_a.p() != structure.p() {
        return Err(Error::StructureMismatch);
    }
    let stacked = panel_a.stacked(panel_b)?;
    let pooled = GenotypePanel::from_matrix(stacked.data().clone(), structure.clone(), stacked.mode())?;
    let mut scores = estimate_ld_scores(&pooled, None, structure)?;
    scores.source = ScoreSource::Pooled;
    scores.panel_n = Some((panel_a.n(), Some(panel_b.n())));
    Ok(scores)
}

/// Sidecar metadata stored next to an LD-score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMeta {
    pub kind: ScoreKind,
    pub source: ScoreSource,
    pub panel_n: Option<(usize, Option<usize>)>,
    /// Cross scores may legitimately be negative.
    pub negative_allowed: bool,
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Tab-separated `CHR SNP BP L2` with CHR the 1-based block index and BP the
/// 1-based variant index, plus a `.meta.json` sidecar.
pub fn write_ldscores(scores: &LdScoreVector, structure: &BlockStructure, path: &Path) -> Result<()> {
    if scores.len() != structure.p() {
        return Err(Error::DimensionMismatch {
            what: "LD scores",
            expected: structure.p(),
            found: scores.len(),
        });
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "CHR\tSNP\tBP\tL2")?;
    for (k, r) in structure.ranges().enumerate() {
        for j in r {
            writeln!(out, "{}\t{}\t{}\t{}", k + 1, variant_id(j), j + 1, scores.values[j])?;
        }
    }
    out.flush()?;
    let meta = ScoreMeta {
        kind: scores.kind,
        source: scores.source,
        panel_n: scores.panel_n,
        negative_allowed: scores.kind == ScoreKind::Cross,
    };
    std::fs::write(meta_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

pub fn read_ldscores(path: &Path) -> Result<LdScoreVector> {
    read_ldscores_with_structure(path).map(|(s, _)| s)
}

/// Scores and the block structure implied by runs of equal CHR values.
pub fn read_ldscores_with_structure(path: &Path) -> Result<(LdScoreVector, BlockStructure)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let (i_chr, i_l2) = (col("CHR")?, col("L2")?);
    col("SNP")?;
    col("BP")?;
    let mut values = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    let mut last_chr: Option<String> = None;
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = k + 2;
        let v: f64 = record[i_l2].trim().parse().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("bad L2 {:?}: {e}", &record[i_l2]),
        })?;
        let chr = record[i_chr].trim().to_string();
        if last_chr.as_deref() == Some(chr.as_str()) {
            *sizes.last_mut().expect("run started") += 1;
        } else {
            sizes.push(1);
            last_chr = Some(chr);
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "no variants".into(),
        });
    }
    let meta_file = meta_path(path);
    let meta: Option<ScoreMeta> = if meta_file.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(&meta_file)?)?)
    } else {
        None
    };
    let kind = meta.as_ref().map(|m| m.kind).unwrap_or(ScoreKind::Within);
    if let Some(bad) = values.iter().position(|v| *v < 0.0) {
        if kind == ScoreKind::Within {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: bad + 2,
                message: "negative within-ancestry LD score".into(),
            });
        }
    }
    let scores = LdScoreVector {
        values,
        kind,
        source: meta.as_ref().map(|m| m.source).unwrap_or(ScoreSource::Estimated),
        panel_n: meta.and_then(|m| m.panel_n),
    };
    Ok((scores, BlockStructure::new(sizes)?))
}
