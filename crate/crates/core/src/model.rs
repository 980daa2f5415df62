//! Block structures and block-diagonal LD (correlation) models.
//!
//! A [`BlockStructure`] partitions `p` variants into contiguous, disjoint LD
//! blocks. A [`CovarianceModel`] holds one dense correlation matrix per block
//! (off-block entries are zero by construction) together with its spectral
//! decomposition, which [`block_sqrt`] reuses to form symmetric square roots.

use std::ops::Range;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum eigenvalue accepted for a block to count as positive definite.
pub const PD_TOLERANCE: f64 = 1e-10;

/// Default ceiling on the total variant count.
pub const DEFAULT_MAX_P: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureLimits {
    pub max_p: usize,
    /// Upper bound on individual block size, when configured.
    pub max_block: Option<usize>,
}

impl Default for StructureLimits {
    fn default() -> Self {
        StructureLimits {
            max_p: DEFAULT_MAX_P,
            max_block: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BlockStructure {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    p: usize,
}

impl TryFrom<Vec<usize>> for BlockStructure {
    type Error = Error;
    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        BlockStructure::new(sizes)
    }
}

impl From<BlockStructure> for Vec<usize> {
    fn from(s: BlockStructure) -> Self {
        s.sizes
    }
}

impl BlockStructure {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        Self::with_limits(sizes, StructureLimits::default())
    }

    pub fn with_limits(sizes: Vec<usize>, limits: StructureLimits) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::EmptyStructure);
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut p = 0usize;
        for (index, &size) in sizes.iter().enumerate() {
            if size == 0 {
                return Err(Error::ZeroSizedBlock { index });
            }
            if let Some(bound) = limits.max_block {
                if size > bound {
                    return Err(Error::BlockTooLarge { index, size, bound });
                }
            }
            offsets.push(p);
            p = p.checked_add(size).ok_or(Error::SizeOverflow {
                p: usize::MAX,
                max: limits.max_p,
            })?;
        }
        if p > limits.max_p {
            return Err(Error::SizeOverflow { p, max: limits.max_p });
        }
        Ok(BlockStructure { sizes, offsets, p })
    }

    /// `n_blocks` blocks of equal size `size`.
    pub fn uniform(n_blocks: usize, size: usize) -> Result<Self> {
        Self::new(vec![size; n_blocks])
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn max_block_size(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn range(&self, block: usize) -> Range<usize> {
        let start = self.offsets[block];
        start..start + self.sizes[block]
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.n_blocks()).map(move |k| self.range(k))
    }

    /// Block index containing variant `j`.
    pub fn block_of(&self, j: usize) -> Option<usize> {
        if j >= self.p {
            return None;
        }
        Some(self.offsets.partition_point(|&o| o <= j) - 1)
    }

    /// Coarser structure obtained by merging runs of `factor` adjacent
    /// blocks (the last run may be shorter). Emulates wider LD windows.
    pub fn merge_adjacent(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Config("merge factor must be positive".into()));
        }
        let sizes = self
            .sizes
            .chunks(factor)
            .map(|run| run.iter().sum())
            .collect();
        Self::new(sizes)
    }

    /// Structure with blocks reordered so that new block `i` is old block
    /// `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.n_blocks())?;
        Self::new(order.iter().map(|&k| self.sizes[k]).collect())
    }

    /// Permutes a per-variant vector to follow [`BlockStructure::permuted`].
    pub fn permute_values<T: Clone>(&self, values: &[T], order: &[usize]) -> Result<Vec<T>> {
        check_permutation(order, self.n_blocks())?;
        if values.len() != self.p {
            return Err(Error::DimensionMismatch {
                what: "per-variant vector",
                expected: self.p,
                found: values.len(),
            });
        }
        Ok(order
            .iter()
            .flat_map(|&k| values[self.range(k)].iter().cloned())
            .collect())
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::DimensionMismatch {
            what: "block permutation",
            expected: n,
            found: order.len(),
        });
    }
    for &k in order {
        if k >= n || seen[k] {
            return Err(Error::Config("block order is not a permutation".into()));
        }
        seen[k] = true;
    }
    Ok(())
}

/// Recipe for one diagonal block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockTemplate {
    Identity,
    /// `Σ_ij = rho^|i-j|`.
    Ar1 { rho: f64 },
    /// Unit diagonal, `rho` everywhere else.
    Exchangeable { rho: f64 },
    /// Markov chain whose lag-one correlation cycles through `rhos`, moving
    /// to the next value every `segment` variants:
    /// `Σ_ij = r_i · r_{i+1} ⋯ r_{j−1}`.
    Segmented { segment: usize, rhos: Vec<f64> },
    /// Arbitrary symmetric matrix; rescaled to unit diagonal on build.
    #[serde(skip)]
    Explicit(DMatrix<f64>),
}

impl BlockTemplate {
    fn materialize(&self, size: usize) -> Result<DMatrix<f64>> {
        match self {
            BlockTemplate::Identity => Ok(DMatrix::identity(size, size)),
            BlockTemplate::Ar1 { rho } => {
                if !rho.is_finite() || rho.abs() >= 1.0 {
                    return Err(Error::Config(format!("ar1 rho must lie in (-1, 1), got {rho}")));
                }
                Ok(DMatrix::from_fn(size, size, |i, j| {
                    rho.powi(i.abs_diff(j) as i32)
                }))
            }
            BlockTemplate::Exchangeable { rho } => {
                if !rho.is_finite() {
                    return Err(Error::Config("exchangeable rho must be finite".into()));
                }
                Ok(DMatrix::from_fn(size, size, |i, j| if i == j { 1.0 } else { *rho }))
            }
            BlockTemplate::Segmented { segment, rhos } => {
                if *segment == 0 || rhos.is_empty() {
                    return Err(Error::Config("segmented template needs a positive segment and rhos".into()));
                }
                if let Some(r) = rhos.iter().find(|r| !r.is_finite() || r.abs() >= 1.0) {
                    return Err(Error::Config(format!("segmented rho must lie in (-1, 1), got {r}")));
                }
                let step = |t: usize| rhos[(t / segment) % rhos.len()];
                let mut m = DMatrix::identity(size, size);
                for i in 0..size {
                    let mut c = 1.0;
                    for j in i + 1..size {
                        c *= step(j - 1);
                        if c == 0.0 {
                            break;
                        }
                        m[(i, j)] = c;
                        m[(j, i)] = c;
                    }
                }
                Ok(m)
            }
            BlockTemplate::Explicit(m) => {
                if m.nrows() != size || m.ncols() != size {
                    return Err(Error::DimensionMismatch {
                        what: "explicit block template",
                        expected: size,
                        found: if m.nrows() != size { m.nrows() } else { m.ncols() },
                    });
                }
                Ok(m.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    /// The same recipe for every block.
    Uniform(BlockTemplate),
    /// One recipe per block, in block order.
    PerBlock(Vec<BlockTemplate>),
}

impl CovarianceSpec {
    pub fn identity() -> Self {
        CovarianceSpec::Uniform(BlockTemplate::Identity)
    }

    pub fn ar1(rho: f64) -> Self {
        CovarianceSpec::Uniform(BlockTemplate::Ar1 { rho })
    }

    pub fn exchangeable(rho: f64) -> Self {
        CovarianceSpec::Uniform(BlockTemplate::Exchangeable { rho })
    }

    /// Per-block AR(1) coefficients (0 gives an identity block).
    pub fn ar1_per_block(rhos: &[f64]) -> Self {
        CovarianceSpec::PerBlock(
            rhos.iter()
                .map(|&rho| {
                    if rho == 0.0 {
                        BlockTemplate::Identity
                    } else {
                        BlockTemplate::Ar1 { rho }
                    }
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CovarianceOptions {
    /// When set, every block's eigenvalues must fall inside `[c, C]`.
    pub eigen_band: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
struct Spectrum {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct CovarianceModel {
    structure: BlockStructure,
    blocks: Vec<DMatrix<f64>>,
    spectra: Vec<Spectrum>,
}

impl PartialEq for CovarianceModel {
    fn eq(&self, other: &Self) -> bool {
        self.structure == other.structure && self.blocks == other.blocks
    }
}

/// Rescale a symmetric template to correlation form with an exact unit
/// diagonal.
fn to_correlation(mut m: DMatrix<f64>, block: usize) -> Result<DMatrix<f64>> {
    let q = m.nrows();
    let mut asym = 0.0f64;
    for i in 0..q {
        for j in 0..i {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if asym > 1e-8 {
        return Err(Error::Config(format!(
            "block {block} template is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let scale: Vec<f64> = (0..q).map(|i| m[(i, i)]).collect();
    if let Some(&bad) = scale.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
        return Err(Error::NotPositiveDefinite {
            block,
            min_eigenvalue: bad,
        });
    }
    let inv_sqrt: Vec<f64> = scale.iter().map(|d| 1.0 / d.sqrt()).collect();
    let src = m.clone();
    for j in 0..q {
        for i in 0..=j {
            let v = if i == j {
                1.0
            } else {
                0.5 * (src[(i, j)] + src[(j, i)]) * inv_sqrt[i] * inv_sqrt[j]
            };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

fn spectrum(m: &DMatrix<f64>) -> Spectrum {
    let eig = SymmetricEigen::new(m.clone());
    Spectrum {
        values: eig.eigenvalues,
        vectors: eig.eigenvectors,
    }
}

/// Build and validate a block-diagonal correlation model.
pub fn build_covariance(structure: &BlockStructure, spec: &CovarianceSpec) -> Result<CovarianceModel> {
    build_covariance_with(structure, spec, CovarianceOptions::default())
}

pub fn build_covariance_with(
    structure: &BlockStructure,
    spec: &CovarianceSpec,
    options: CovarianceOptions,
) -> Result<CovarianceModel> {
    let templates: Vec<&BlockTemplate> = match spec {
        CovarianceSpec::Uniform(t) => vec![t; structure.n_blocks()],
        CovarianceSpec::PerBlock(ts) => {
            if ts.len() != structure.n_blocks() {
                return Err(Error::DimensionMismatch {
                    what: "per-block templates",
                    expected: structure.n_blocks(),
                    found: ts.len(),
                });
            }
            ts.iter().collect()
        }
    };
    let blocks = templates
        .iter()
        .zip(structure.sizes())
        .enumerate()
        .map(|(k, (t, &size))| t.materialize(size).and_then(|m| to_correlation(m, k)))
        .collect::<Result<Vec<_>>>()?;
    CovarianceModel::from_blocks_with(structure.clone(), blocks, options)
}

impl CovarianceModel {
    /// Validate pre-built correlation blocks.
    pub fn from_blocks(structure: BlockStructure, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::from_blocks_with(structure, blocks, CovarianceOptions::default())
    }

    pub fn from_blocks_with(
        structure: BlockStructure,
        blocks: Vec<DMatrix<f64>>,
        options: CovarianceOptions,
    ) -> Result<Self> {
        if blocks.len() != structure.n_blocks() {
            return Err(Error::DimensionMismatch {
                what: "covariance blocks",
                expected: structure.n_blocks(),
                found: blocks.len(),
            });
        }
        let blocks = blocks
            .into_iter()
            .zip(structure.sizes())
            .enumerate()
            .map(|(k, (m, &size))| {
                if m.nrows() != size || m.ncols() != size {
                    return Err(Error::DimensionMismatch {
                        what: "covariance block",
                        expected: size,
                        found: m.nrows(),
                    });
                }
                to_correlation(m, k)
            })
            .collect::<Result<Vec<_>>>()?;

        // Identical neighbouring blocks share one decomposition.
        let mut unique: Vec<usize> = Vec::with_capacity(blocks.len());
        for k in 0..blocks.len() {
            let found = unique.iter().copied().find(|&u| blocks[u] == blocks[k]);
            unique.push(found.unwrap_or(k));
        }
        let fresh: Vec<usize> = (0..blocks.len()).filter(|&k| unique[k] == k).collect();
        let computed: Vec<(usize, Spectrum)> = fresh
            .par_iter()
            .map(|&k| (k, spectrum(&blocks[k])))
            .collect();
        let mut slots: Vec<Option<Spectrum>> = vec![None; blocks.len()];
        for (k, s) in computed {
            slots[k] = Some(s);
        }
        let spectra: Vec<Spectrum> = (0..blocks.len())
            .map(|k| slots[unique[k]].clone().expect("spectrum computed for representative"))
            .collect();

        for (k, s) in spectra.iter().enumerate() {
            let min = s.values.min();
            let max = s.values.max();
            if !(min > PD_TOLERANCE) {
                return Err(Error::NotPositiveDefinite {
                    block: k,
                    min_eigenvalue: min,
                });
            }
            if let Some((lower, upper)) = options.eigen_band {
                if min < lower || max > upper {
                    return Err(Error::EigenvalueBand {
                        block: k,
                        min,
                        max,
                        lower,
                        upper,
                    });
                }
            }
        }
        Ok(CovarianceModel {
            structure,
            blocks,
            spectra,
        })
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn p(&self) -> usize {
        self.structure.p()
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &DMatrix<f64> {
        &self.blocks[k]
    }

    pub fn block_eigenvalues(&self, k: usize) -> &DVector<f64> {
        &self.spectra[k].values
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.spectra.iter().flat_map(|s| s.values.iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// `Σ v`, block by block.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        block_mul_vec(&self.structure, &self.blocks, v)
    }

    /// Entry `(i, j)` of the full matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match (self.structure.block_of(i), self.structure.block_of(j)) {
            (Some(a), Some(b)) if a == b => {
                let o = self.structure.offsets()[a];
                self.blocks[a][(i - o, j - o)]
            }
            _ => 0.0,
        }
    }

    /// Full `p × p` matrix. Intended for small models and tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let p = self.p();
        let mut out = DMatrix::zeros(p, p);
        for (k, r) in self.structure.ranges().enumerate() {
            out.view_mut((r.start, r.start), (r.len(), r.len()))
                .copy_from(&self.blocks[k]);
        }
        out
    }

    /// Model with blocks reordered as in [`BlockStructure::permuted`].
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let structure = self.structure.permuted(order)?;
        Ok(CovarianceModel {
            structure,
            blocks: order.iter().map(|&k| self.blocks[k].clone()).collect(),
            spectra: order.iter().map(|&k| self.spectra[k].clone()).collect(),
        })
    }

    /// Model on the same variants with a coarser block structure. The merged
    /// blocks contain the original blocks on their diagonal and zeros
    /// elsewhere, so the matrix itself is unchanged.
    pub fn regrouped(&self, coarse: &BlockStructure) -> Result<Self> {
        if coarse.p() != self.p() {
            return Err(Error::StructureMismatch);
        }
        let mut blocks = Vec::with_capacity(coarse.n_blocks());
        for r in coarse.ranges() {
            let first = self.structure.block_of(r.start).ok_or(Error::StructureMismatch)?;
            if self.structure.offsets()[first] != r.start {
                return Err(Error::StructureMismatch);
            }
            let mut m = DMatrix::zeros(r.len(), r.len());
            let mut k = first;
            while k < self.structure.n_blocks() && self.structure.offsets()[k] < r.end {
                let inner = self.structure.range(k);
                if inner.end > r.end {
                    return Err(Error::StructureMismatch);
                }
                let o = inner.start - r.start;
                m.view_mut((o, o), (inner.len(), inner.len()))
                    .copy_from(&self.blocks[k]);
                k += 1;
            }
            blocks.push(m);
        }
        Self::from_blocks(coarse.clone(), blocks)
    }
}

pub(crate) fn block_mul_vec(
    structure: &BlockStructure,
    blocks: &[DMatrix<f64>],
    v: &[f64],
) -> Result<Vec<f64>> {
    if v.len() != structure.p() {
        return Err(Error::DimensionMismatch {
            what: "vector",
            expected: structure.p(),
            found: v.len(),
        });
    }
    let mut out = vec![0.0; v.len()];
    for (k, r) in structure.ranges().enumerate() {
        let x = DVector::from_column_slice(&v[r.clone()]);
        let y = &blocks[k] * x;
        out[r].copy_from_slice(y.as_slice());
    }
    Ok(out)
}

/// Per-block symmetric square roots `Σ_k^{1/2}`.
#[derive(Debug, Clone)]
pub struct BlockFactor {
    structure: BlockStructure,
    factors: Vec<DMatrix<f64>>,
}

/// Symmetric PSD square root of every block, from the stored spectra.
pub fn block_sqrt(cov: &CovarianceModel) -> Result<BlockFactor> {
    let mut factors: Vec<DMatrix<f64>> = Vec::with_capacity(cov.blocks.len());
    for (k, s) in cov.spectra.iter().enumerate() {
        // Reuse the factor of an identical earlier block.
        if let Some(prev) = (0..k).find(|&u| cov.blocks[u] == cov.blocks[k]) {
            factors.push(factors[prev].clone());
            continue;
        }
        let min = s.values.min();
        if !(min > PD_TOLERANCE) {
            return Err(Error::NotPositiveDefinite {
                block: k,
                min_eigenvalue: min,
            });
        }
        let roots = s.values.map(f64::sqrt);
        let scaled = DMatrix::from_fn(s.vectors.nrows(), s.vectors.ncols(), |i, j| {
            s.vectors[(i, j)] * roots[j]
        });
        let mut f = &scaled * s.vectors.transpose();
        // Exact symmetry.
        let q = f.nrows();
        for j in 0..q {
            for i in 0..j {
                let v = 0.5 * (f[(i, j)] + f[(j, i)]);
                f[(i, j)] = v;
                f[(j, i)] = v;
            }
        }
        factors.push(f);
    }
    Ok(BlockFactor {
        structure: cov.structure.clone(),
        factors,
    })
}

impl BlockFactor {
    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn factor(&self, k: usize) -> &DMatrix<f64> {
        &self.factors[k]
    }

    /// `Σ^{1/2} v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        block_mul_vec(&self.structure, &self.factors, v)
    }

    /// Largest `max |F·F − Σ_k|` over blocks.
    pub fn reconstruction_error(&self, cov: &CovarianceModel) -> f64 {
        self.factors
            .iter()
            .zip(cov.blocks())
            .map(|(f, b)| (f * f - b).abs().max())
            .fold(0.0, f64::max)
    }
}

/// JSON description of a covariance model.
///
/// Either `{"blocks":[{"size":N,"kind":"ar1","rho":0.5}, ...]}` or
/// `{"kind":"explicit","file":"<path>"}`, where the file holds the block
/// matrices as tab-separated rows with one blank line between blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovarianceDocument {
    Blocks { blocks: Vec<BlockEntry> },
    Explicit { kind: ExplicitTag, file: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplicitTag {
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub size: usize,
    #[serde(flatten)]
    pub template: BlockTemplate,
}

impl CovarianceDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn blocks(entries: Vec<BlockEntry>) -> Self {
        CovarianceDocument::Blocks { blocks: entries }
    }

    /// Build the model. Relative `file` paths resolve against `base_dir`.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<CovarianceModel> {
        match self {
            CovarianceDocument::Blocks { blocks } => {
                let structure = BlockStructure::new(blocks.iter().map(|b| b.size).collect())?;
                let spec = CovarianceSpec::PerBlock(blocks.iter().map(|b| b.template.clone()).collect());
                build_covariance(&structure, &spec)
            }
            CovarianceDocument::Explicit { file, .. } => {
                let path = match base_dir {
                    Some(dir) if Path::new(file).is_relative() => dir.join(file),
                    _ => Path::new(file).to_path_buf(),
                };
                let blocks = read_block_matrices(&path)?;
                let structure = BlockStructure::new(blocks.iter().map(|b| b.nrows()).collect())?;
                CovarianceModel::from_blocks(structure, blocks)
            }
        }
    }
}

/// Read square matrices stored as TSV rows, blocks separated by blank lines.
pub fn read_block_matrices(path: &Path) -> Result<Vec<DMatrix<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut blocks = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut flush = |rows: &mut Vec<Vec<f64>>, line: usize| -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let q = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != q) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line - q + bad,
                message: format!("expected {q} columns in a {q}x{q} block"),
            });
        }
        blocks.push(DMatrix::from_fn(q, q, |i, j| rows[i][j]));
        rows.clear();
        Ok(())
    };
    let mut last = 0;
    for (i, line) in text.lines().enumerate() {
        last = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut rows, i + 1)?;
            continue;
        }
        let row = trimmed
            .split('\t')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("bad number {tok:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    flush(&mut rows, last + 1)?;
    if blocks.is_empty() {
        return Err(Error::EmptyStructure);
    }
    Ok(blocks)
}

/// Write blocks in the format read by [`read_block_matrices`].
pub fn write_block_matrices(path: &Path, blocks: &[DMatrix<f64>]) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    for (k, b) in blocks.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for i in 0..b.nrows() {
            let row: Vec<String> = (0..b.ncols()).map(|j| format!("{}", b[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join("\t"));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}
