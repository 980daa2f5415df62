//! Seeded simulation of genotype panels, fixed effects and phenotypes.
//!
//! Panels follow `X = X0 Σ^{1/2}` with i.i.d. standard normal `X0`, either
//! kept Gaussian or discretized to 0/1/2 dosages through a Gaussian copula,
//! then standardized column-wise (denominator `n`).
//!
//! [`latent_gwas`] draws marginal statistics from the exact joint law of
//! `X0ᵀy` without forming `X`; it is the fast path used by large Monte Carlo
//! runs and operates on the unstandardized model.

use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, Matrix2};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, StudentT, Uniform};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{BlockFactor, BlockStructure, CovarianceModel};
use crate::numeric::{lp_norm, pairwise_dot, pairwise_sum};

#[derive(Debug, Clone, PartialEq)]
pub struct MafVector {
    values: Vec<f64>,
}

impl MafVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|f| !(**f > 0.0 && **f <= 0.5)) {
            return Err(Error::BadRange { lo: bad, hi: bad });
        }
        Ok(MafVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn sample_maf<R: Rng + ?Sized>(p: usize, lo: f64, hi: f64, rng: &mut R) -> Result<MafVector> {
    if !(lo > 0.0 && lo <= hi && hi <= 0.5) {
        return Err(Error::BadRange { lo, hi });
    }
    if lo == hi {
        return Ok(MafVector { values: vec![lo; p] });
    }
    let dist = Uniform::new_inclusive(lo, hi).map_err(|_| Error::BadRange { lo, hi })?;
    Ok(MafVector {
        values: (0..p).map(|_| dist.sample(rng)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GenotypeMode {
    #[default]
    Gaussian,
    Discrete,
}

/// Whether panel columns are standardized after generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PanelScale {
    #[default]
    Standardized,
    /// `X0 Σ^{1/2}` as drawn (Gaussian mode only).
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenotypePanel {
    data: DMatrix<f64>,
    mode: GenotypeMode,
    structure: BlockStructure,
}

impl GenotypePanel {
    /// Wrap an existing `n × p` matrix and standardize its columns.
    pub fn from_matrix(data: DMatrix<f64>, structure: BlockStructure, mode: GenotypeMode) -> Result<Self> {
        if data.ncols() != structure.p() {
            return Err(Error::DimensionMismatch {
                what: "panel columns",
                expected: structure.p(),
                found: data.ncols(),
            });
        }
        let mut panel = GenotypePanel { data, mode, structure };
        panel.standardize()?;
        Ok(panel)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn mode(&self) -> GenotypeMode {
        self.mode
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.data.as_slice()[j * n..(j + 1) * n]
    }

    fn standardize(&mut self) -> Result<()> {
        let n = self.n();
        if n < 2 {
            return Err(Error::DegeneratePanel(format!("cannot standardize {n} sample(s)")));
        }
        for (j, col) in self.data.as_mut_slice().chunks_exact_mut(n).enumerate() {
            let m = pairwise_sum(col) / n as f64;
            col.iter_mut().for_each(|x| *x -= m);
            let sq: Vec<f64> = col.iter().map(|x| x * x).collect();
            let var = pairwise_sum(&sq) / n as f64;
            if !(var > 0.0) {
                return Err(Error::DegeneratePanel(format!("variant {j} is constant")));
            }
            let inv = 1.0 / var.sqrt();
            col.iter_mut().for_each(|x| *x *= inv);
        }
        Ok(())
    }

    /// Panel restricted to `rows`, re-standardized.
    pub fn subset_rows(&self, rows: &[usize]) -> Result<Self> {
        let data = self.data.select_rows(rows.iter());
        GenotypePanel::from_matrix(data, self.structure.clone(), self.mode)
    }

    /// Rows of `self` followed by rows of `other`. Columns are left as they
    /// are, so two standardized panels stay standardized.
    pub fn stacked(&self, other: &GenotypePanel) -> Result<Self> {
        if self.structure != other.structure {
            return Err(Error::StructureMismatch);
        }
        let (na, nb, p) = (self.n(), other.n(), self.p());
        let data = DMatrix::from_fn(na + nb, p, |i, j| {
            if i < na {
                self.data[(i, j)]
            } else {
                other.data[(i - na, j)]
            }
        });
        Ok(GenotypePanel {
            data,
            mode: self.mode,
            structure: self.structure.clone(),
        })
    }

    /// One row per sample, tab-separated.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header: Vec<String> = (0..self.p()).map(variant_id).collect();
        writeln!(out, "{}", header.join("\t"))?;
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.p()).map(|j| format!("{}", self.data[(i, j)])).collect();
            writeln!(out, "{}", row.join("\t"))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Read a panel written by [`GenotypePanel::write_tsv`] and standardize it.
    pub fn read_tsv(path: &Path, structure: BlockStructure, mode: GenotypeMode) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .flexible(false)
            .from_path(path)?;
        let p = reader.headers()?.len();
        if p != structure.p() {
            return Err(Error::DimensionMismatch {
                what: "panel columns",
                expected: structure.p(),
                found: p,
            });
        }
        let mut values = Vec::new();
        let mut n = 0;
        for (k, record) in reader.records().enumerate() {
            let record = record?;
            for field in record.iter() {
                let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: k + 2,
                    message: format!("bad genotype {field:?}: {e}"),
                })?;
                values.push(v);
            }
            n += 1;
        }
        let data = DMatrix::from_row_slice(n, p, &values);
        GenotypePanel::from_matrix(data, structure, mode)
    }
}

/// Variant identifier for simulated index `j` (zero-based).
pub fn variant_id(j: usize) -> String {
    format!("snp_{:06}", j + 1)
}

fn standard_normal_matrix<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> DMatrix<f64> {
    let values: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_vec(n, p, values)
}

fn latent_gaussian<R: Rng + ?Sized>(factor: &BlockFactor, n: usize, rng: &mut R) -> DMatrix<f64> {
    let structure = factor.structure();
    let mut x = DMatrix::zeros(n, structure.p());
    for (k, r) in structure.ranges().enumerate() {
        let z = standard_normal_matrix(n, r.len(), rng);
        let xb = z * factor.factor(k);
        x.columns_mut(r.start, r.len()).copy_from(&xb);
    }
    x
}

/// Dosage thresholds on the latent normal scale: `g = 1[z > t1] + 1[z > t2]`
/// has probabilities `(1-f)², 2f(1-f), f²`.
pub fn dosage_thresholds(f: f64) -> (f64, f64) {
    let std = Normal::standard();
    (std.inverse_cdf((1.0 - f) * (1.0 - f)), std.inverse_cdf(1.0 - f * f))
}

pub fn simulate_panel<R: Rng + ?Sized>(
    cov: &CovarianceModel,
    factor: &BlockFactor,
    n: usize,
    mode: GenotypeMode,
    maf: Option<&MafVector>,
    rng: &mut R,
) -> Result<GenotypePanel> {
    simulate_panel_scaled(cov, factor, n, mode, maf, PanelScale::Standardized, rng)
}

pub fn simulate_panel_scaled<R: Rng + ?Sized>(
    cov: &CovarianceModel,
    factor: &BlockFactor,
    n: usize,
    mode: GenotypeMode,
    maf: Option<&MafVector>,
    scale: PanelScale,
    rng: &mut R,
) -> Result<GenotypePanel> {
    if factor.structure() != cov.structure() {
        return Err(Error::StructureMismatch);
    }
    if n < 2 && scale == PanelScale::Standardized {
        return Err(Error::DegeneratePanel(format!("cannot standardize {n} sample(s)")));
    }
    let p = cov.p();
    let mut x = latent_gaussian(factor, n, rng);
    if mode == GenotypeMode::Discrete {
        let maf = maf.ok_or(Error::MissingMaf)?;
        if maf.len() != p {
            return Err(Error::DimensionMismatch {
                what: "allele frequencies",
                expected: p,
                found: maf.len(),
            });
        }
        if scale == PanelScale::Raw {
            return Err(Error::Config("raw scale is only defined for Gaussian panels".into()));
        }
        for (j, col) in x.as_mut_slice().chunks_exact_mut(n.max(1)).enumerate() {
            let (t1, t2) = dosage_thresholds(maf.values()[j]);
            for z in col.iter_mut() {
                *z = f64::from(u8::from(*z > t1) + u8::from(*z > t2));
            }
        }
    }
    let structure = cov.structure().clone();
    match scale {
        PanelScale::Standardized => GenotypePanel::from_matrix(x, structure, mode),
        PanelScale::Raw => Ok(GenotypePanel { data: x, mode, structure }),
    }
}

/// Standard bivariate normal CDF `P(Z1 ≤ h, Z2 ≤ k)` with correlation `r`.
///
/// Integrates Plackett's identity in `θ = asin(s)`, which removes the
/// endpoint singularity at `|r| → 1`.
pub fn bivariate_normal_cdf(h: f64, k: f64, r: f64) -> f64 {
    let std = Normal::standard();
    let base = std.cdf(h) * std.cdf(k);
    if r == 0.0 {
        return base;
    }
    let r = r.clamp(-1.0, 1.0);
    let top = r.asin();
    let (nodes, weights) = gauss_legendre_20();
    let panels = 8;
    let width = top / panels as f64;
    let mut acc = 0.0;
    for piece in 0..panels {
        let a = piece as f64 * width;
        for (x, w) in nodes.iter().zip(weights.iter()) {
            let theta = a + 0.5 * width * (x + 1.0);
            let (s, c) = theta.sin_cos();
            let c2 = (c * c).max(1e-300);
            acc += w * 0.5 * width * (-(h * h - 2.0 * h * k * s + k * k) / (2.0 * c2)).exp();
        }
    }
    base + acc / (2.0 * std::f64::consts::PI)
}

fn gauss_legendre_20() -> ([f64; 20], [f64; 20]) {
    const X: [f64; 10] = [
        0.076_526_521_133_497_33,
        0.227_785_851_141_645_08,
        0.373_706_088_715_419_56,
        0.510_867_001_950_827,
        0.636_053_680_726_515,
        0.746_331_906_460_150_8,
        0.839_116_971_822_218_8,
        0.912_234_428_251_326,
        0.963_971_927_277_913_8,
        0.993_128_599_185_094_9,
    ];
    const W: [f64; 10] = [
        0.152_753_387_130_725_85,
        0.149_172_986_472_603_75,
        0.142_096_109_318_382_05,
        0.131_688_638_449_176_63,
        0.118_194_531_961_518_42,
        0.101_930_119_817_240_44,
        0.083_276_741_576_704_75,
        0.062_672_048_334_109_06,
        0.040_601_429_800_386_94,
        0.017_614_007_139_152_12,
    ];
    let mut nodes = [0.0; 20];
    let mut weights = [0.0; 20];
    for i in 0..10 {
        nodes[2 * i] = X[i];
        nodes[2 * i + 1] = -X[i];
        weights[2 * i] = W[i];
        weights[2 * i + 1] = W[i];
    }
    (nodes, weights)
}

/// Correlation between two copula dosages with frequencies `fi`, `fj` whose
/// latent normals have correlation `r`.
pub fn copula_correlation(fi: f64, fj: f64, r: f64) -> f64 {
    let (a1, a2) = dosage_thresholds(fi);
    let (b1, b2) = dosage_thresholds(fj);
    let std = Normal::standard();
    let mut cov = 0.0;
    for &ta in &[a1, a2] {
        for &tb in &[b1, b2] {
            let joint = bivariate_normal_cdf(-ta, -tb, r);
            cov += joint - std.cdf(-ta) * std.cdf(-tb);
        }
    }
    cov / (2.0 * fi * (1.0 - fi) * 2.0 * fj * (1.0 - fj)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectVector {
    values: Vec<f64>,
    support: Vec<usize>,
}

impl EffectVector {
    /// Support is read off the nonzero entries.
    pub fn new(values: Vec<f64>) -> Self {
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        EffectVector { values, support }
    }

    pub fn zeros(p: usize) -> Self {
        EffectVector::new(vec![0.0; p])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn p(&self) -> usize {
        self.values.len()
    }

    pub fn m(&self) -> usize {
        self.support.len()
    }

    /// `g² = αᵀα`.
    pub fn g2(&self) -> f64 {
        pairwise_dot(&self.values, &self.values)
    }

    /// Per-variant variance `g²/p`.
    pub fn sigma2(&self) -> f64 {
        self.g2() / self.p() as f64
    }

    pub fn norm(&self, power: i32) -> f64 {
        lp_norm(&self.values, power)
    }

    pub fn dot(&self, other: &EffectVector) -> f64 {
        pairwise_dot(&self.values, &other.values)
    }

    pub fn scaled(&self, c: f64) -> Self {
        EffectVector::new(self.values.iter().map(|v| v * c).collect())
    }

    /// Rescaled so that `g²` equals `target` (a zero vector stays zero).
    pub fn with_g2(&self, target: f64) -> Self {
        let g2 = self.g2();
        if g2 == 0.0 {
            return self.clone();
        }
        self.scaled((target / g2).sqrt())
    }

    /// `variant_id<TAB>effect` rows.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "SNP\tEFFECT")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{}\t{}", variant_id(j), v)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Genetic correlation `αᵀβ / (‖α‖‖β‖)`.
pub fn genetic_correlation(a: &EffectVector, b: &EffectVector) -> f64 {
    a.dot(b) / (a.g2() * b.g2()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraitArchitecture {
    pub h2: f64,
    /// `m / p`.
    pub sparsity: f64,
    /// `m_αβ / m`.
    pub shared_fraction: f64,
    pub rg: f64,
}

impl TraitArchitecture {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidArchitecture(format!("{what} = {v}")));
        if !(0.0..1.0).contains(&self.h2) {
            return bad("h2", self.h2);
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return bad("sparsity", self.sparsity);
        }
        if !(0.0..=1.0).contains(&self.shared_fraction) {
            return bad("shared_fraction", self.shared_fraction);
        }
        if !(-1.0..=1.0).contains(&self.rg) {
            return bad("rg", self.rg);
        }
        Ok(())
    }
}

/// Draw `(α, β)` with supports of size `m = round(sparsity·p)` sharing
/// `round(shared_fraction·m)` indices, then rotate β on the shared support
/// so that the realized genetic correlation equals `arch.rg` exactly.
pub fn sample_effect_pair<R: Rng + ?Sized>(
    arch: &TraitArchitecture,
    p: usize,
    rng: &mut R,
) -> Result<(EffectVector, EffectVector)> {
    arch.validate()?;
    let m = (arch.sparsity * p as f64).round() as usize;
    if m == 0 {
        return Err(Error::EmptySupport);
    }
    let m_shared = (arch.shared_fraction * m as f64).round() as usize;
    if p - m < m - m_shared {
        return Err(Error::InvalidArchitecture(format!(
            "cannot place {} unshared effects among {} free variants",
            m - m_shared,
            p - m
        )));
    }
    let sd = (1.0 / p as f64).sqrt();
    let rg = arch.rg;

    let mut support_a = sample_indices(rng, p, m).into_vec();
    support_a.sort_unstable();
    let shared_pos = sample_indices(rng, m, m_shared).into_vec();
    let mut shared: Vec<usize> = shared_pos.iter().map(|&i| support_a[i]).collect();
    shared.sort_unstable();
    let mut in_a = vec![false; p];
    support_a.iter().for_each(|&i| in_a[i] = true);
    let free: Vec<usize> = (0..p).filter(|&i| !in_a[i]).collect();
    let mut only_b: Vec<usize> = sample_indices(rng, free.len(), m - m_shared)
        .into_iter()
        .map(|i| free[i])
        .collect();
    only_b.sort_unstable();

    let mut alpha = vec![0.0; p];
    let mut beta = vec![0.0; p];
    for &i in &support_a {
        alpha[i] = sd * rng.sample::<f64, _>(StandardNormal);
    }
    let joint = (1.0 - rg * rg).max(0.0).sqrt();
    for &i in &shared {
        let z: f64 = rng.sample(StandardNormal);
        beta[i] = sd * (rg * alpha[i] / sd + joint * z);
    }
    for &i in &only_b {
        beta[i] = sd * rng.sample::<f64, _>(StandardNormal);
    }

    let a_s: Vec<f64> = shared.iter().map(|&i| alpha[i]).collect();
    let b_s: Vec<f64> = shared.iter().map(|&i| beta[i]).collect();
    let b_o: Vec<f64> = only_b.iter().map(|&i| beta[i]).collect();
    let norm_a = pairwise_dot(&alpha, &alpha).sqrt();
    let norm_as = pairwise_dot(&a_s, &a_s).sqrt();
    let s = pairwise_dot(&b_s, &b_s).sqrt();
    let o = pairwise_dot(&b_o, &b_o).sqrt();

    if shared.is_empty() || s == 0.0 || norm_as == 0.0 {
        if rg != 0.0 {
            return Err(Error::UnreachableRg { rg });
        }
        return Ok((EffectVector::new(alpha), EffectVector::new(beta)));
    }

    let u: Vec<f64> = a_s.iter().map(|x| x / norm_as).collect();
    let proj = pairwise_dot(&b_s, &u);
    let resid: Vec<f64> = b_s.iter().zip(&u).map(|(b, ui)| b - proj * ui).collect();
    let resid_norm = pairwise_dot(&resid, &resid).sqrt();
    let has_orthogonal = resid_norm > 1e-12 * s;

    let mut t = 1.0;
    let mut c = rg * norm_a * (s * s + o * o).sqrt() / (s * norm_as);
    if c.abs() > 1.0 || !has_orthogonal {
        // Put β_S on α_S and rescale the unshared part of β to hit rg.
        if rg == 0.0 {
            return Err(Error::UnreachableRg { rg });
        }
        let room = s * s * (norm_as * norm_as / (rg * rg * norm_a * norm_a) - 1.0);
        if room < -1e-12 * s * s {
            return Err(Error::UnreachableRg { rg });
        }
        if o > 0.0 {
            t = room.max(0.0).sqrt() / o;
        } else if room > 1e-12 * s * s {
            return Err(Error::UnreachableRg { rg });
        }
        c = rg.signum();
    }
    let orth = (1.0 - c * c).max(0.0).sqrt();
    for (idx, &i) in shared.iter().enumerate() {
        let v = if has_orthogonal { resid[idx] / resid_norm } else { 0.0 };
        beta[i] = s * (c * u[idx] + orth * v);
    }
    for &i in &only_b {
        beta[i] *= t;
    }
    let alpha = EffectVector::new(alpha);
    let beta = EffectVector::new(beta);
    let realized = genetic_correlation(&alpha, &beta);
    if (realized - rg).abs() > 1e-9 {
        return Err(Error::UnreachableRg { rg });
    }
    Ok((alpha, beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    Gaussian,
    /// Student t with `df` degrees of freedom, scaled to the target variance.
    ScaledT { df: f64 },
}

impl NoiseModel {
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, variance: f64, rng: &mut R) -> Result<Vec<f64>> {
        let sd = variance.sqrt();
        match *self {
            NoiseModel::Gaussian => Ok((0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()),
            NoiseModel::ScaledT { df } => {
                if !(df > 2.0) {
                    return Err(Error::Config(format!("t noise needs df > 2, got {df}")));
                }
                let t = StudentT::new(df).map_err(|e| Error::Config(e.to_string()))?;
                let unit = ((df - 2.0) / df).sqrt();
                Ok((0..n).map(|_| sd * unit * t.sample(rng)).collect())
            }
        }
    }
}

/// Noise variance giving heritability `h2` for genetic variance `g2`.
pub fn noise_variance(g2: f64, h2: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&h2) {
        return Err(Error::InvalidArchitecture(format!("h2 = {h2}")));
    }
    if h2 == 0.0 {
        return Ok(if g2 == 0.0 { 1.0 } else { f64::INFINITY });
    }
    if g2 == 0.0 {
        return Err(Error::ZeroEffectNonzeroH2);
    }
    Ok(g2 * (1.0 - h2) / h2)
}

#[derive(Debug, Clone)]
pub struct Cohort {
    pub panel: GenotypePanel,
    pub phenotype: Vec<f64>,
    pub sigma_eps2: f64,
    pub effect: EffectVector,
    /// Rows of the source panel used by this cohort.
    pub rows: Vec<usize>,
}

pub fn simulate_phenotype<R: Rng + ?Sized>(
    panel: &GenotypePanel,
    effect: &EffectVector,
    h2: f64,
    rng: &mut R,
) -> Result<Cohort> {
    simulate_phenotype_with(panel, effect, h2, NoiseModel::Gaussian, rng)
}

pub fn simulate_phenotype_with<R: Rng + ?Sized>(
    panel: &GenotypePanel,
    effect: &EffectVector,
    h2: f64,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<Cohort> {
    if effect.p() != panel.p() {
        return Err(Error::DimensionMismatch {
            what: "effect vector",
            expected: panel.p(),
            found: effect.p(),
        });
    }
    let sigma_eps2 = noise_variance(effect.g2(), h2)?;
    if !sigma_eps2.is_finite() {
        return Err(Error::InvalidArchitecture("h2 = 0 with nonzero effects".into()));
    }
    let n = panel.n();
    let mut y = vec![0.0; n];
    for &j in effect.support() {
        let a = effect.values()[j];
        for (yi, x) in y.iter_mut().zip(panel.column(j)) {
            *yi += a * x;
        }
    }
    let eps = noise.draw(n, sigma_eps2, rng)?;
    y.iter_mut().zip(&eps).for_each(|(yi, e)| *yi += e);
    Ok(Cohort {
        panel: panel.clone(),
        phenotype: y,
        sigma_eps2,
        effect: effect.clone(),
        rows: (0..n).collect(),
    })
}

/// Row layout of two cohorts drawn from one panel: cohort B shares
/// `round(overlap·n_b)` rows with cohort A.
pub fn overlap_rows<R: Rng + ?Sized>(
    total: usize,
    n_a: usize,
    n_b: usize,
    overlap: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(Error::Config(format!("overlap fraction {overlap} outside [0, 1]")));
    }
    let shared = (overlap * n_b as f64).round() as usize;
    if shared > n_a {
        return Err(Error::Config(format!(
            "{shared} shared rows exceed cohort A size {n_a}"
        )));
    }
    let needed = n_a + n_b - shared;
    if needed > total {
        return Err(Error::InsufficientSamples { needed, available: total });
    }
    let mut pick = sample_indices(rng, total, needed).into_vec();
    let a: Vec<usize> = pick.drain(..n_a).collect();
    let mut b: Vec<usize> = a[..shared].to_vec();
    b.extend(pick);
    let mut a = a;
    a.sort_unstable();
    b.sort_unstable();
    Ok((a, b))
}

#[allow(clippy::too_many_arguments)]
pub fn split_cohorts<R: Rng + ?Sized>(
    panel: &GenotypePanel,
    effects: (&EffectVector, &EffectVector),
    h2s: (f64, f64),
    n_a: usize,
    n_b: usize,
    overlap: f64,
    rng: &mut R,
) -> Result<(Cohort, Cohort)> {
    let (rows_a, rows_b) = overlap_rows(panel.n(), n_a, n_b, overlap, rng)?;
    let pa = panel.subset_rows(&rows_a)?;
    let pb = panel.subset_rows(&rows_b)?;
    let mut ca = simulate_phenotype(&pa, effects.0, h2s.0, rng)?;
    let mut cb = simulate_phenotype(&pb, effects.1, h2s.1, rng)?;
    ca.rows = rows_a;
    cb.rows = rows_b;
    Ok((ca, cb))
}

/// One trait of a [`latent_gwas`] draw.
#[derive(Debug, Clone, Copy)]
pub struct LatentTrait<'a> {
    pub factor: &'a BlockFactor,
    pub effect: &'a EffectVector,
    pub sigma_eps2: f64,
    pub n: usize,
    pub noise: NoiseModel,
}

/// Marginal statistics `â = Xᵀy / n` for one or two traits under the raw
/// model `X = X0 Σ^{1/2}`, `y = Xα + ε`, without forming `X`.
///
/// For one sample block with directions spanned by an orthonormal `E`,
/// `X0 = T Eᵀ + W` with `T = X0 E` and `W` independent of `T`; given the
/// phenotypes `Y`, `WᵀY` is matrix normal with row covariance `I − EEᵀ` and
/// column covariance `YᵀY`. This costs `O(n + p)` per block of samples.
///
/// `shared` rows are common to both traits, which then must use the same
/// factor.
pub fn latent_gwas<R: Rng + ?Sized>(traits: &[LatentTrait<'_>], shared: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if traits.is_empty() || traits.len() > 2 {
        return Err(Error::Config("latent GWAS takes one or two traits".into()));
    }
    let p = traits[0].factor.structure().p();
    for t in traits {
        if t.effect.p() != p || t.factor.structure().p() != p {
            return Err(Error::DimensionMismatch {
                what: "latent trait",
                expected: p,
                found: t.effect.p(),
            });
        }
        if t.n < 1 {
            return Err(Error::SampleTooSmall { needed: 1, got: t.n });
        }
    }
    if shared > 0 {
        if traits.len() != 2 {
            return Err(Error::Config("shared rows need two traits".into()));
        }
        if traits[0].factor.structure() != traits[1].factor.structure()
            || traits[0].factor.factors() != traits[1].factor.factors()
        {
            return Err(Error::Config("shared rows need a common LD model".into()));
        }
        if shared > traits[0].n.min(traits[1].n) {
            return Err(Error::InsufficientSamples {
                needed: shared,
                available: traits[0].n.min(traits[1].n),
            });
        }
    }
    let dirs: Vec<Vec<f64>> = traits
        .iter()
        .map(|t| t.factor.apply(t.effect.values()))
        .collect::<Result<_>>()?;

    let mut totals: Vec<Vec<f64>> = vec![vec![0.0; p]; traits.len()];
    for (i, t) in traits.iter().enumerate() {
        let rows = t.n - shared;
        if rows > 0 {
            let part = latent_cross_products(&[&dirs[i]], &[(t.sigma_eps2, t.noise)], rows, rng)?;
            add_into(&mut totals[i], &part[0]);
        }
    }
    if shared > 0 {
        let specs = [
            (traits[0].sigma_eps2, traits[0].noise),
            (traits[1].sigma_eps2, traits[1].noise),
        ];
        let part = latent_cross_products(&[&dirs[0], &dirs[1]], &specs, shared, rng)?;
        add_into(&mut totals[0], &part[0]);
        add_into(&mut totals[1], &part[1]);
    }
    traits
        .iter()
        .zip(totals)
        .map(|(t, z)| {
            let mut a = t.factor.apply(&z)?;
            let inv = 1.0 / t.n as f64;
            a.iter_mut().for_each(|x| *x *= inv);
            Ok(a)
        })
        .collect()
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    acc.iter_mut().zip(x).for_each(|(a, b)| *a += b);
}

/// `X0ᵀ y_t` for phenotypes `y_t = X0 v_t + ε_t` on `n` shared rows.
fn latent_cross_products<R: Rng + ?Sized>(
    dirs: &[&Vec<f64>],
    noise: &[(f64, NoiseModel)],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let p = dirs[0].len();
    let k = dirs.len();
    // Orthonormal basis of span{v_t}.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    for v in dirs {
        let mut r: Vec<f64> = v.to_vec();
        for e in &basis {
            let c = pairwise_dot(&r, e);
            r.iter_mut().zip(e).for_each(|(x, ei)| *x -= c * ei);
        }
        let nr = pairwise_dot(&r, &r).sqrt();
        let nv = pairwise_dot(v, v).sqrt();
        if nr > 1e-12 * nv.max(f64::MIN_POSITIVE) && nr > 0.0 {
            r.iter_mut().for_each(|x| *x /= nr);
            basis.push(r);
        }
    }
    let d = basis.len();
    // Coordinates of each direction in the basis.
    let coords: Vec<Vec<f64>> = dirs
        .iter()
        .map(|v| basis.iter().map(|e| pairwise_dot(v, e)).collect())
        .collect();
    let t_mat: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let mut ys: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (c, (var, model)) in coords.iter().zip(noise) {
        let mut y = model.draw(n, *var, rng)?;
        for (col, ci) in t_mat.iter().zip(c) {
            y.iter_mut().zip(col).for_each(|(yi, ti)| *yi += ci * ti);
        }
        ys.push(y);
    }
    // Gram of phenotypes and its symmetric square root.
    let mut gram = Matrix2::zeros();
    for a in 0..k {
        for b in 0..k {
            gram[(a, b)] = pairwise_dot(&ys[a], &ys[b]);
        }
    }
    if k == 1 {
        gram[(1, 1)] = 1.0;
    }
    let eig = gram.symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let half = eig.eigenvectors * Matrix2::from_diagonal(&roots) * eig.eigenvectors.transpose();

    let g: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    // Project the Gaussian columns off span(E).
    let pg: Vec<Vec<f64>> = g
        .into_iter()
        .map(|mut col| {
            for e in &basis {
                let c = pairwise_dot(&col, e);
                col.iter_mut().zip(e).for_each(|(x, ei)| *x -= c * ei);
            }
            col
        })
        .collect();
    let mut out = Vec::with_capacity(k);
    for t in 0..k {
        let mut z = vec![0.0; p];
        for (e, tcol) in basis.iter().zip(&t_mat) {
            let c = pairwise_dot(tcol, &ys[t]);
            z.iter_mut().zip(e).for_each(|(zi, ei)| *zi += c * ei);
        }
        for (s, col) in pg.iter().enumerate() {
            let h = half[(t, s)];
            z.iter_mut().zip(col).for_each(|(zi, x)| *zi += h * x);
        }
        out.push(z);
    }
    Ok(out)
}

/// Sample correlation matrix of `n` draws from `N(0, F F)` for one block,
/// via the Bartlett decomposition of the centered scatter matrix
/// (Wishart with `n − 1` degrees of freedom). Equivalent in law to the
/// correlation of a simulated, standardized Gaussian panel block.
pub fn wishart_correlation<R: Rng + ?Sized>(factor: &DMatrix<f64>, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let q = factor.nrows();
    if n < 2 {
        return Err(Error::DegeneratePanel(format!("cannot standardize {n} sample(s)")));
    }
    let df = n - 1;
    if df < q {
        // Bartlett needs df ≥ q; fall back to explicit draws.
        let z = standard_normal_matrix(n, q, rng);
        let x = z * factor;
        let structure = BlockStructure::new(vec![q])?;
        let panel = GenotypePanel::from_matrix(x, structure, GenotypeMode::Gaussian)?;
        let d = panel.data();
        let mut c = d.transpose() * d;
        c /= n as f64;
        for i in 0..q {
            c[(i, i)] = 1.0;
        }
        return Ok(c);
    }
    let mut b = DMatrix::<f64>::zeros(q, q);
    for i in 0..q {
        let chi = ChiSquared::new((df - i) as f64).map_err(|e| Error::Config(e.to_string()))?;
        b[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            b[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let lb = factor * b;
    let s = &lb * lb.transpose();
    let inv: Vec<f64> = (0..q).map(|i| 1.0 / s[(i, i)].sqrt()).collect();
    let mut c = DMatrix::from_fn(q, q, |i, j| s[(i, j)] * inv[i] * inv[j]);
    for j in 0..q {
        c[(j, j)] = 1.0;
        for i in 0..j {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}
