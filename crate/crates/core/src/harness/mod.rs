//! Monte Carlo experiments: simulate GWAS and reference panels, fit LDSC,
//! and summarize bias, spread, normality and interval coverage.
//!
//! Replicate `i` draws everything from `SeedStream::new(seed).replicate(i)`,
//! so tables do not depend on the number of worker threads.

mod dataset;
pub mod normality;
mod report;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::ldsc::{
    derive_genetic_correlation, fit_bivariate_with, fit_univariate, jackknife_se, jackknife_slopes, FitMode,
    LdscFit, Regression,
};
use crate::ldscores::{scores_from_correlations, true_ld_scores, BlockCorrelations, LdScoreVector, ScoreSource};
use crate::model::{block_sqrt, BlockEntry, BlockFactor, BlockStructure, BlockTemplate, CovarianceDocument, CovarianceModel};
use crate::numeric::{mean, median, sample_variance};
use crate::rng::{SeedStream, StreamRng};
use crate::simgen::{
    latent_gwas, noise_variance, Cohort, overlap_rows, sample_effect_pair, sample_maf, simulate_panel,
    simulate_phenotype_with, EffectVector, GenotypeMode, LatentTrait, MafVector, NoiseModel, TraitArchitecture,
};
use crate::sumstats::{marginal_from_panel, WVector};
use crate::theory::{zeta2_bivariate, zeta2_univariate, TheoryInputs};

pub use dataset::{simulate_dataset, Dataset};
pub use report::{theory_report, TheoryReport};
pub use normality::{normality_summary, NormalityReport, Standardize};

/// Where the regression's LD scores come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreSourceSpec {
    /// Population scores.
    True,
    /// One panel per population; the bivariate fit reuses panel A's
    /// within scores.
    EstimatedWithin,
    /// One panel per population; the bivariate fit uses their cross scores.
    EstimatedCross,
    /// Within scores of the two panels pooled, for every fit.
    Pooled,
    /// As `EstimatedCross`, with LD estimated over windows of `factor`
    /// adjacent true blocks.
    MergedBlocks { factor: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// Fit trait A only; the primary slope is `σ̂²_α`.
    Univariate,
    /// Fit both traits and their product; the primary slope is `σ̂_αβ`.
    Bivariate,
}

/// How GWAS summary statistics are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GwasEngine {
    /// Exact draw of `Xᵀy/n` under the raw Gaussian model, `O(n + p)`.
    Latent,
    /// Simulate standardized genotype panels and phenotypes.
    Materialized,
}

/// How reference-panel LD matrices are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceEngine {
    /// Wishart draw of each block's sample correlation.
    Sampled,
    /// Simulate the panel and compute correlations.
    Materialized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub replicates: usize,
    /// LD model of population A.
    pub ld_a: CovarianceDocument,
    /// LD model of population B; absent means both traits share `ld_a`.
    pub ld_b: Option<CovarianceDocument>,
    pub n_a: usize,
    pub n_b: usize,
    pub n_ra: usize,
    pub n_rb: usize,
    pub h2_a: f64,
    pub h2_b: f64,
    pub rg: f64,
    /// `m / p`.
    pub sparsity: f64,
    /// `m_αβ / m`.
    pub shared_fraction: f64,
    /// Fraction of cohort B's rows also in cohort A.
    pub overlap: f64,
    pub genotype_mode: GenotypeMode,
    pub maf_range: [f64; 2],
    pub score_source: ScoreSourceSpec,
    pub estimator: EstimatorMode,
    pub jackknife_groups: usize,
    /// Draw fresh effects per replicate; otherwise one draw is shared.
    pub redraw_effects: bool,
    pub noise: NoiseModel,
    pub gwas_engine: GwasEngine,
    pub reference_engine: ReferenceEngine,
    /// Fit the bivariate regression with a free intercept.
    pub bivariate_intercept: bool,
    /// Nominal level of the jackknife intervals.
    pub level: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        s51_within()
    }
}

/// Blocks of `size` alternating identity and AR(1) with coefficient `rho`.
pub fn alternating_blocks(n_blocks: usize, size: usize, rho: f64) -> CovarianceDocument {
    let rhos: Vec<f64> = (0..n_blocks).map(|k| if k % 2 == 0 { 0.0 } else { rho }).collect();
    ar1_blocks(size, &rhos)
}

/// One AR(1) block of `size` per coefficient (0 gives identity).
pub fn ar1_blocks(size: usize, rhos: &[f64]) -> CovarianceDocument {
    CovarianceDocument::blocks(
        rhos.iter()
            .map(|&rho| BlockEntry {
                size,
                template: if rho == 0.0 {
                    BlockTemplate::Identity
                } else {
                    BlockTemplate::Ar1 { rho }
                },
            })
            .collect(),
    )
}

/// `n_blocks` blocks of `size`, each a [`BlockTemplate::Segmented`] chain.
pub fn segmented_blocks(n_blocks: usize, size: usize, segment: usize, rhos: &[f64]) -> CovarianceDocument {
    CovarianceDocument::blocks(
        (0..n_blocks)
            .map(|_| BlockEntry {
                size,
                template: BlockTemplate::Segmented {
                    segment,
                    rhos: rhos.to_vec(),
                },
            })
            .collect(),
    )
}

/// Segment length of the preset LD chains.
pub const PRESET_SEGMENT: usize = 25;
/// Lag-one correlations cycled through in the same-population presets.
pub const WITHIN_RHOS: [f64; 2] = [0.0, 0.9];
/// Population A's cycle in the cross-ancestry presets.
pub const CROSS_RHOS_A: [f64; 4] = [0.0, 0.95, 0.0, 0.7];
/// Population B exchanges the two nonzero values of [`CROSS_RHOS_A`].
pub const CROSS_RHOS_B: [f64; 4] = [0.0, 0.7, 0.0, 0.95];

/// Same-population design: 8 blocks of 500, each alternating runs of 25
/// unlinked variants and 25 variants in an AR(1) chain with coefficient
/// 0.9; two GWAS cohorts and two reference panels of 2,000, dense effects,
/// `h² = 0.5`, `φ = 0.5`.
///
/// Paper scale: `p = 16,000` in 8 blocks of 2,000, discrete genotypes,
/// 500 replicates.
pub fn s51_within() -> ExperimentConfig {
    ExperimentConfig {
        name: "s51-within".into(),
        seed: 20240501,
        replicates: 200,
        ld_a: segmented_blocks(8, 500, PRESET_SEGMENT, &WITHIN_RHOS),
        ld_b: None,
        n_a: 2000,
        n_b: 2000,
        n_ra: 2000,
        n_rb: 2000,
        h2_a: 0.5,
        h2_b: 0.5,
        rg: 0.5,
        sparsity: 1.0,
        shared_fraction: 1.0,
        overlap: 0.0,
        genotype_mode: GenotypeMode::Gaussian,
        maf_range: [0.05, 0.45],
        score_source: ScoreSourceSpec::EstimatedCross,
        estimator: EstimatorMode::Bivariate,
        jackknife_groups: crate::ldsc::DEFAULT_JACKKNIFE_GROUPS,
        redraw_effects: true,
        noise: NoiseModel::Gaussian,
        gwas_engine: GwasEngine::Latent,
        reference_engine: ReferenceEngine::Sampled,
        bivariate_intercept: false,
        level: 0.95,
    }
}

/// Two populations whose strong-LD runs alternate between coefficients
/// 0.95 and 0.7 in opposite phase; cross scores.
///
/// Paper scale: as [`s51_within`] with population-specific LD.
pub fn s51_cross() -> ExperimentConfig {
    ExperimentConfig {
        name: "s51-cross".into(),
        ld_a: segmented_blocks(8, 500, PRESET_SEGMENT, &CROSS_RHOS_A),
        ld_b: Some(segmented_blocks(8, 500, PRESET_SEGMENT, &CROSS_RHOS_B)),
        ..s51_within()
    }
}

/// Same population with half of cohort B inside cohort A; the bivariate fit
/// carries an intercept to absorb the shared-sample term.
///
/// Paper scale: `n_α + n_β` of 10,000 to 350,000, overlap 0, 0.5 or 1,
/// `h² = 0.6`, `φ = 0.5`, `m/p` from 0.001 to 0.5, 200 replicates.
pub fn s52_overlap() -> ExperimentConfig {
    ExperimentConfig {
        name: "s52-overlap".into(),
        h2_a: 0.6,
        h2_b: 0.6,
        overlap: 0.5,
        score_source: ScoreSourceSpec::True,
        bivariate_intercept: true,
        ..s51_within()
    }
}

/// Two populations fitted with pooled scores; rerun with
/// `EstimatedCross` or `MergedBlocks` for the window variants.
///
/// Paper scale: `n = 16,800` or 168,000 per population, `m/p = 0.03`,
/// `h² = 0.5`, `φ ∈ {0.5, 1}`, 200 replicates.
pub fn s53_pooled_vs_window() -> ExperimentConfig {
    ExperimentConfig {
        name: "s53-pooled-vs-window".into(),
        sparsity: 0.03,
        score_source: ScoreSourceSpec::Pooled,
        ..s51_cross()
    }
}

pub const PRESETS: [&str; 4] = ["s51-within", "s51-cross", "s52-overlap", "s53-pooled-vs-window"];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "s51-within" => Ok(s51_within()),
        "s51-cross" => Ok(s51_cross()),
        "s52-overlap" => Ok(s52_overlap()),
        "s53-pooled-vs-window" => Ok(s53_pooled_vs_window()),
        other => Err(Error::Config(format!(
            "unknown preset {other:?}; expected one of {}",
            PRESETS.join(", ")
        ))),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn architecture(&self, h2: f64) -> TraitArchitecture {
        TraitArchitecture {
            h2,
            sparsity: self.sparsity,
            shared_fraction: self.shared_fraction,
            rg: self.rg,
        }
    }

    fn bivariate(&self) -> bool {
        self.estimator == EstimatorMode::Bivariate
    }

    fn shared_rows(&self) -> usize {
        (self.overlap * self.n_b as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.replicates < 2 {
            return bad(format!("replicates must be at least 2, got {}", self.replicates));
        }
        for (what, n) in [("n_a", self.n_a), ("n_b", self.n_b), ("n_ra", self.n_ra), ("n_rb", self.n_rb)] {
            if n < 2 {
                return bad(format!("{what} must be at least 2, got {n}"));
            }
        }
        self.architecture(self.h2_a).validate()?;
        self.architecture(self.h2_b).validate()?;
        if !(0.0..=1.0).contains(&self.overlap) {
            return bad(format!("overlap {} outside [0, 1]", self.overlap));
        }
        if self.overlap > 0.0 {
            if self.ld_b.is_some() {
                return bad("sample overlap needs a single population".into());
            }
            if !self.bivariate() {
                return bad("sample overlap needs the bivariate estimator".into());
            }
            if self.shared_rows() > self.n_a {
                return bad(format!("{} shared rows exceed n_a = {}", self.shared_rows(), self.n_a));
            }
        }
        if self.jackknife_groups < 2 {
            return bad(format!("jackknife_groups must be at least 2, got {}", self.jackknife_groups));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level {} outside (0, 1)", self.level));
        }
        if let ScoreSourceSpec::MergedBlocks { factor } = self.score_source {
            if factor == 0 {
                return bad("merged_blocks factor must be positive".into());
            }
        }
        if self.genotype_mode == GenotypeMode::Discrete {
            if self.gwas_engine != GwasEngine::Materialized || self.reference_engine != ReferenceEngine::Materialized {
                return bad("discrete genotypes need materialized GWAS and reference engines".into());
            }
            let [lo, hi] = self.maf_range;
            if !(lo > 0.0 && lo <= hi && hi <= 0.5) {
                return bad(format!("maf_range [{lo}, {hi}] outside (0, 0.5]"));
            }
        }
        Ok(())
    }
}

/// Fixed per-experiment state shared by all replicates.
struct Context {
    cov_a: CovarianceModel,
    cov_b: Option<CovarianceModel>,
    factor_a: BlockFactor,
    factor_b: Option<BlockFactor>,
    true_a: LdScoreVector,
    true_b: LdScoreVector,
    true_ab: LdScoreVector,
    coarse: Option<Coarse>,
    fixed_effects: Option<(EffectVector, EffectVector)>,
    maf: Option<MafVector>,
}

struct Coarse {
    structure: BlockStructure,
    factor_a: BlockFactor,
    factor_b: Option<BlockFactor>,
}

impl Context {
    fn build(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Self> {
        let cov_a = cfg.ld_a.build(base_dir)?;
        let cov_b = match &cfg.ld_b {
            Some(doc) => {
                let c = doc.build(base_dir)?;
                if c.structure() != cov_a.structure() {
                    return Err(Error::StructureMismatch);
                }
                Some(c)
            }
            None => None,
        };
        let factor_a = block_sqrt(&cov_a)?;
        let factor_b = cov_b.as_ref().map(block_sqrt).transpose()?;
        let cb = cov_b.as_ref().unwrap_or(&cov_a);
        let true_a = true_ld_scores(&cov_a, None)?;
        let true_b = true_ld_scores(cb, None)?;
        let true_ab = true_ld_scores(&cov_a, Some(cb))?;
        let coarse = match cfg.score_source {
            ScoreSourceSpec::MergedBlocks { factor } => {
                let structure = cov_a.structure().merge_adjacent(factor)?;
                let fa = block_sqrt(&cov_a.regrouped(&structure)?)?;
                let fb = cov_b
                    .as_ref()
                    .map(|c| c.regrouped(&structure).and_then(|m| block_sqrt(&m)))
                    .transpose()?;
                Some(Coarse {
                    structure,
                    factor_a: fa,
                    factor_b: fb,
                })
            }
            _ => None,
        };
        let root = SeedStream::new(cfg.seed);
        let p = cov_a.p();
        let fixed_effects = if cfg.redraw_effects {
            None
        } else {
            Some(draw_effects(cfg, p, &root.child("effects", 0))?)
        };
        let maf = match cfg.genotype_mode {
            GenotypeMode::Discrete => {
                let mut rng = root.child("maf", 0).rng();
                Some(sample_maf(p, cfg.maf_range[0], cfg.maf_range[1], &mut rng)?)
            }
            GenotypeMode::Gaussian => None,
        };
        Ok(Context {
            cov_a,
            cov_b,
            factor_a,
            factor_b,
            true_a,
            true_b,
            true_ab,
            coarse,
            fixed_effects,
            maf,
        })
    }

    fn jackknife_groups(&self, cfg: &ExperimentConfig) -> usize {
        let blocks = match &self.coarse {
            Some(c) => c.structure.n_blocks(),
            None => self.cov_a.structure().n_blocks(),
        };
        cfg.jackknife_groups.min(blocks)
    }

    fn cov_b(&self) -> &CovarianceModel {
        self.cov_b.as_ref().unwrap_or(&self.cov_a)
    }

    fn factor_b(&self) -> &BlockFactor {
        self.factor_b.as_ref().unwrap_or(&self.factor_a)
    }
}

/// Effects rescaled so that `g² = h²` for each trait.
fn draw_effects(cfg: &ExperimentConfig, p: usize, stream: &SeedStream) -> Result<(EffectVector, EffectVector)> {
    let mut rng = stream.rng();
    let (a, b) = sample_effect_pair(&cfg.architecture(cfg.h2_a), p, &mut rng)?;
    Ok((a.with_g2(cfg.h2_a), b.with_g2(cfg.h2_b)))
}

/// Per-replicate quantities kept alongside the fixed CSV columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub slope_a: Option<f64>,
    pub slope_b: Option<f64>,
    pub slope_ab: Option<f64>,
    pub se_a: Option<f64>,
    pub se_b: Option<f64>,
    /// Oracle standard deviation of `σ̂²_α`.
    pub zeta_a: Option<f64>,
    /// Oracle standard deviation of `σ̂_αβ`; only for independent cohorts
    /// and a through-origin fit.
    pub zeta_ab: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub h2_hat: Option<f64>,
    pub rg_hat: Option<f64>,
    pub se_jackknife: Option<f64>,
    pub error: Option<String>,
    pub diagnostics: Diagnostics,
}

impl ReplicateRow {
    fn failed(replicate: usize, err: &Error) -> Self {
        ReplicateRow {
            replicate,
            slope: None,
            intercept: None,
            h2_hat: None,
            rg_hat: None,
            se_jackknife: None,
            error: Some(err.to_string()),
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplicateTable {
    pub rows: Vec<ReplicateRow>,
}

impl ReplicateTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ok_rows(&self) -> impl Iterator<Item = &ReplicateRow> {
        self.rows.iter().filter(|r| r.is_ok())
    }

    pub fn excluded(&self) -> usize {
        self.rows.len() - self.ok_rows().count()
    }

    /// Values of `field` over successful replicates that have it.
    pub fn column(&self, field: impl Fn(&ReplicateRow) -> Option<f64>) -> Vec<f64> {
        self.ok_rows().filter_map(field).collect()
    }
}

/// Truth for the primary slope, `h²` and `φ` under the `g² = h²` scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub slope: f64,
    pub h2: f64,
    pub rg: f64,
}

impl Truth {
    pub fn of(cfg: &ExperimentConfig, p: usize) -> Self {
        let pf = p as f64;
        let slope = match cfg.estimator {
            EstimatorMode::Univariate => cfg.h2_a / pf,
            EstimatorMode::Bivariate => cfg.rg * (cfg.h2_a * cfg.h2_b).sqrt() / pf,
        };
        Truth {
            slope,
            h2: cfg.h2_a,
            rg: cfg.rg,
        }
    }
}

pub struct Experiment {
    pub config: ExperimentConfig,
    pub table: ReplicateTable,
    pub p: usize,
    /// Jackknife groups actually formed (capped by the block count).
    pub groups: usize,
}

impl Experiment {
    pub fn truth(&self) -> Truth {
        Truth::of(&self.config, self.p)
    }

    pub fn summary(&self) -> ExperimentSummary {
        summarize(&self.config, self.p, self.groups, &self.table)
    }
}

/// Run every replicate on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    run_experiment_in(cfg, None)
}

/// As [`run_experiment`]; relative covariance files resolve against `base_dir`.
pub fn run_experiment_in(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Experiment> {
    cfg.validate()?;
    let ctx = Context::build(cfg, base_dir)?;
    let root = SeedStream::new(cfg.seed);
    let rows: Vec<ReplicateRow> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| run_replicate(cfg, &ctx, &root, i).unwrap_or_else(|e| ReplicateRow::failed(i, &e)))
        .collect();
    Ok(Experiment {
        config: cfg.clone(),
        table: ReplicateTable { rows },
        p: ctx.cov_a.p(),
        groups: ctx.jackknife_groups(cfg),
    })
}

/// Run on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(cfg: &ExperimentConfig, base_dir: Option<&Path>, threads: usize) -> Result<Experiment> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment_in(cfg, base_dir))
}

struct ScoreSet {
    a: LdScoreVector,
    b: LdScoreVector,
    ab: LdScoreVector,
    structure: BlockStructure,
}

fn reference_correlations(
    cfg: &ExperimentConfig,
    ctx: &Context,
    population_b: bool,
    stream: &SeedStream,
) -> Result<BlockCorrelations> {
    let n = if population_b { cfg.n_rb } else { cfg.n_ra };
    let mut rng = stream.rng();
    let (cov, factor) = if population_b {
        (ctx.cov_b(), ctx.factor_b())
    } else {
        (&ctx.cov_a, &ctx.factor_a)
    };
    match cfg.reference_engine {
        ReferenceEngine::Sampled => {
            let f = match &ctx.coarse {
                Some(c) if population_b => c.factor_b.as_ref().unwrap_or(&c.factor_a),
                Some(c) => &c.factor_a,
                None => factor,
            };
            BlockCorrelations::sample(f, n, &mut rng)
        }
        ReferenceEngine::Materialized => {
            let panel = simulate_panel(cov, factor, n, cfg.genotype_mode, ctx.maf.as_ref(), &mut rng)?;
            let structure = ctx.coarse.as_ref().map(|c| &c.structure).unwrap_or(cov.structure());
            BlockCorrelations::from_panel(&panel, structure)
        }
    }
}

fn score_set(cfg: &ExperimentConfig, ctx: &Context, rep: &SeedStream) -> Result<ScoreSet> {
    if cfg.score_source == ScoreSourceSpec::True {
        return Ok(ScoreSet {
            a: ctx.true_a.clone(),
            b: ctx.true_b.clone(),
            ab: ctx.true_ab.clone(),
            structure: ctx.cov_a.structure().clone(),
        });
    }
    let needs_b = cfg.bivariate() || cfg.score_source == ScoreSourceSpec::Pooled;
    let ca = reference_correlations(cfg, ctx, false, &rep.child("reference", 0))?;
    let cb = if needs_b {
        Some(reference_correlations(cfg, ctx, true, &rep.child("reference", 1))?)
    } else {
        None
    };
    let structure = ca.structure().clone();
    let a = scores_from_correlations(&ca, None)?;
    let set = match (cfg.score_source, cb) {
        (ScoreSourceSpec::Pooled, Some(cb)) => {
            let pooled = BlockCorrelations::pooled(&ca, &cb)?;
            let mut s = scores_from_correlations(&pooled, None)?;
            s.source = ScoreSource::Pooled;
            ScoreSet {
                a: s.clone(),
                b: s.clone(),
                ab: s,
                structure,
            }
        }
        (ScoreSourceSpec::EstimatedWithin, Some(cb)) => ScoreSet {
            b: scores_from_correlations(&cb, None)?,
            ab: a.clone(),
            a,
            structure,
        },
        (_, Some(cb)) => ScoreSet {
            b: scores_from_correlations(&cb, None)?,
            ab: scores_from_correlations(&ca, Some(&cb))?,
            a,
            structure,
        },
        (_, None) => ScoreSet {
            b: a.clone(),
            ab: a.clone(),
            a,
            structure,
        },
    };
    Ok(set)
}

/// Marginal statistics for trait A and, in bivariate mode, trait B.
fn gwas(
    cfg: &ExperimentConfig,
    ctx: &Context,
    effects: (&EffectVector, &EffectVector),
    s2: (f64, f64),
    stream: &SeedStream,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let mut rng = stream.rng();
    let shared = cfg.shared_rows();
    match cfg.gwas_engine {
        GwasEngine::Latent => {
            let mut traits = vec![LatentTrait {
                factor: &ctx.factor_a,
                effect: effects.0,
                sigma_eps2: s2.0,
                n: cfg.n_a,
                noise: cfg.noise,
            }];
            if cfg.bivariate() {
                traits.push(LatentTrait {
                    factor: ctx.factor_b(),
                    effect: effects.1,
                    sigma_eps2: s2.1,
                    n: cfg.n_b,
                    noise: cfg.noise,
                });
            }
            let mut out = latent_gwas(&traits, shared, &mut rng)?;
            let b = if out.len() == 2 { out.pop() } else { None };
            Ok((out.pop().expect("trait A"), b))
        }
        GwasEngine::Materialized => {
            let (ca, cb) = materialized_cohorts(cfg, ctx, effects, &mut rng)?;
            let b = cb.map(|c| marginal_from_panel(&c.panel, &c.phenotype, "b")).transpose()?;
            Ok((marginal_from_panel(&ca.panel, &ca.phenotype, "a")?.beta, b.map(|s| s.beta)))
        }
    }
}

/// Simulated cohort A and, in bivariate mode, cohort B. Cohorts of one
/// population share `round(overlap·n_b)` rows.
fn materialized_cohorts(
    cfg: &ExperimentConfig,
    ctx: &Context,
    effects: (&EffectVector, &EffectVector),
    rng: &mut StreamRng,
) -> Result<(Cohort, Option<Cohort>)> {
    let mode = cfg.genotype_mode;
    let maf = ctx.maf.as_ref();
    if !cfg.bivariate() {
        let panel = simulate_panel(&ctx.cov_a, &ctx.factor_a, cfg.n_a, mode, maf, rng)?;
        let ca = simulate_phenotype_with(&panel, effects.0, cfg.h2_a, cfg.noise, rng)?;
        return Ok((ca, None));
    }
    let (pa, pb, rows) = if ctx.cov_b.is_some() {
        let pa = simulate_panel(&ctx.cov_a, &ctx.factor_a, cfg.n_a, mode, maf, rng)?;
        let pb = simulate_panel(ctx.cov_b(), ctx.factor_b(), cfg.n_b, mode, maf, rng)?;
        (pa, pb, None)
    } else {
        let total = cfg.n_a + cfg.n_b - cfg.shared_rows();
        let panel = simulate_panel(&ctx.cov_a, &ctx.factor_a, total, mode, maf, rng)?;
        let (ra, rb) = overlap_rows(total, cfg.n_a, cfg.n_b, cfg.overlap, rng)?;
        (panel.subset_rows(&ra)?, panel.subset_rows(&rb)?, Some((ra, rb)))
    };
    let mut ca = simulate_phenotype_with(&pa, effects.0, cfg.h2_a, cfg.noise, rng)?;
    let mut cb = simulate_phenotype_with(&pb, effects.1, cfg.h2_b, cfg.noise, rng)?;
    if let Some((ra, rb)) = rows {
        ca.rows = ra;
        cb.rows = rb;
    }
    Ok((ca, Some(cb)))
}

fn fit_with_se(
    w: &WVector,
    scores: &LdScoreVector,
    structure: &BlockStructure,
    cfg: &ExperimentConfig,
    mode: FitMode,
) -> Result<LdscFit> {
    let fit = match mode {
        FitMode::Univariate => fit_univariate(w, scores)?,
        FitMode::Bivariate => fit_bivariate_with(w, scores, cfg.bivariate_intercept)?,
    };
    let reg = Regression::for_fit(mode, cfg.bivariate_intercept);
    let thetas = jackknife_slopes(w, scores, structure, cfg.jackknife_groups, reg)?;
    Ok(fit.with_se(jackknife_se(&thetas)))
}

fn run_replicate(cfg: &ExperimentConfig, ctx: &Context, root: &SeedStream, i: usize) -> Result<ReplicateRow> {
    let rep = root.replicate(i as u64);
    let p = ctx.cov_a.p();
    let drawn;
    let (alpha, beta) = match &ctx.fixed_effects {
        Some((a, b)) => (a, b),
        None => {
            drawn = draw_effects(cfg, p, &rep.child("effects", 0))?;
            (&drawn.0, &drawn.1)
        }
    };
    let s2a = noise_variance(alpha.g2(), cfg.h2_a)?;
    let s2b = noise_variance(beta.g2(), cfg.h2_b)?;
    let (beta_a, beta_b) = gwas(cfg, ctx, (alpha, beta), (s2a, s2b), &rep.child("gwas", 0))?;
    let scores = score_set(cfg, ctx, &rep)?;

    let fit_a = fit_with_se(&WVector::squared(&beta_a), &scores.a, &scores.structure, cfg, FitMode::Univariate)?;
    let inputs_a = TheoryInputs {
        cov_a: &ctx.cov_a,
        cov_b: None,
        alpha,
        beta: None,
        sigma_eps2_a: s2a,
        sigma_eps2_b: None,
        n_a: cfg.n_a,
        n_b: None,
        n_ra: None,
        n_rb: None,
        scores: &ctx.true_a,
    };
    let mut diagnostics = Diagnostics {
        slope_a: Some(fit_a.slope),
        se_a: fit_a.se_jackknife,
        zeta_a: zeta2_univariate(&inputs_a).ok().map(f64::sqrt),
        ..Diagnostics::default()
    };
    let h2_hat = Some(fit_a.g_hat);

    let Some(beta_b) = beta_b else {
        return Ok(ReplicateRow {
            replicate: i,
            slope: Some(fit_a.slope),
            intercept: fit_a.intercept,
            h2_hat,
            rg_hat: None,
            se_jackknife: fit_a.se_jackknife,
            error: None,
            diagnostics,
        });
    };

    let fit_b = fit_with_se(&WVector::squared(&beta_b), &scores.b, &scores.structure, cfg, FitMode::Univariate)?;
    let w_ab = WVector::product(&beta_a, &beta_b)?;
    let fit_ab = fit_with_se(&w_ab, &scores.ab, &scores.structure, cfg, FitMode::Bivariate)?;
    let rg_hat = derive_genetic_correlation(&fit_ab, &fit_a, &fit_b);
    diagnostics.slope_b = Some(fit_b.slope);
    diagnostics.se_b = fit_b.se_jackknife;
    diagnostics.slope_ab = Some(fit_ab.slope);
    if cfg.shared_rows() == 0 && !cfg.bivariate_intercept {
        let inputs_ab = TheoryInputs {
            cov_b: Some(ctx.cov_b()),
            beta: Some(beta),
            sigma_eps2_b: Some(s2b),
            n_b: Some(cfg.n_b),
            scores: &ctx.true_ab,
            ..inputs_a
        };
        diagnostics.zeta_ab = zeta2_bivariate(&inputs_ab).ok().map(f64::sqrt);
    }
    // An undefined φ̂ excludes the replicate but keeps its slopes.
    Ok(ReplicateRow {
        replicate: i,
        slope: Some(fit_ab.slope),
        intercept: fit_ab.intercept,
        h2_hat,
        rg_hat: rg_hat.as_ref().ok().copied(),
        se_jackknife: fit_ab.se_jackknife,
        error: rg_hat.err().map(|e| e.to_string()),
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantitySummary {
    pub n: usize,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub relative_bias: f64,
    pub mc_sd: f64,
    /// `mc_sd / √n`.
    pub mc_se: f64,
}

pub fn quantity_summary(values: &[f64], truth: f64) -> Option<QuantitySummary> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values);
    let sd = sample_variance(values).sqrt();
    Some(QuantitySummary {
        n: values.len(),
        truth,
        mean: m,
        bias: m - truth,
        relative_bias: if truth != 0.0 { (m - truth) / truth } else { f64::NAN },
        mc_sd: sd,
        mc_se: sd / (values.len() as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub level: f64,
    pub coverage: f64,
    pub covered: usize,
    pub total: usize,
    pub median_se: f64,
}

/// Reference distribution for interval half-widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Critical {
    Normal,
    /// Student t, e.g. with `G − 1` degrees of freedom for `G` jackknife groups.
    StudentT { df: f64 },
}

impl Critical {
    pub fn value(self, level: f64) -> f64 {
        let q = 0.5 + level / 2.0;
        match self {
            Critical::Normal => Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(q),
            Critical::StudentT { df } => StudentsT::new(0.0, 1.0, df).expect("positive df").inverse_cdf(q),
        }
    }
}

/// Fraction of `estimate ± c·se` intervals containing `truth`.
pub fn coverage_of(estimates: &[f64], ses: &[f64], truth: f64, level: f64, critical: Critical) -> CoverageReport {
    let z = critical.value(level);
    let covered = estimates
        .iter()
        .zip(ses)
        .filter(|(e, s)| (*e - truth).abs() <= z * **s)
        .count();
    let total = estimates.len().min(ses.len());
    CoverageReport {
        level,
        coverage: if total > 0 { covered as f64 / total as f64 } else { f64::NAN },
        covered,
        total,
        median_se: if total > 0 { median(&ses[..total]) } else { f64::NAN },
    }
}

/// Coverage of the primary slope over replicates with a jackknife SE.
pub fn coverage_summary(table: &ReplicateTable, truth: f64, level: f64, critical: Critical) -> CoverageReport {
    let (est, ses): (Vec<f64>, Vec<f64>) = table
        .ok_rows()
        .filter_map(|r| Some((r.slope?, r.se_jackknife?)))
        .unzip();
    coverage_of(&est, &ses, truth, level, critical)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub replicates: usize,
    pub summarized: usize,
    pub excluded: usize,
    pub p: usize,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub relative_bias: f64,
    pub mc_sd: f64,
    pub mc_se: f64,
    /// Root mean of the per-replicate oracle variances of the primary slope.
    pub theory_zeta: Option<f64>,
    pub median_se: f64,
    pub jackknife_groups: usize,
    /// Intervals use the t quantile with `jackknife_groups − 1` df.
    pub coverage: f64,
    /// Intervals use the normal quantile.
    pub coverage_normal: f64,
    #[serde(rename = "W")]
    pub w: Option<f64>,
    pub p_value: Option<f64>,
    /// `"theory_zeta"` or `"empirical"`.
    pub standardized_by: String,
    pub normality: Option<NormalityReport>,
    pub normality_empirical: Option<NormalityReport>,
    pub h2: Option<QuantitySummary>,
    pub rg: Option<QuantitySummary>,
    pub config: ExperimentConfig,
}

fn primary_zeta(cfg: &ExperimentConfig, r: &ReplicateRow) -> Option<f64> {
    match cfg.estimator {
        EstimatorMode::Univariate => r.diagnostics.zeta_a,
        EstimatorMode::Bivariate => r.diagnostics.zeta_ab,
    }
}

pub fn summarize(cfg: &ExperimentConfig, p: usize, groups: usize, table: &ReplicateTable) -> ExperimentSummary {
    let truth = Truth::of(cfg, p);
    let slopes = table.column(|r| r.slope);
    let q = quantity_summary(&slopes, truth.slope);
    let t = Critical::StudentT {
        df: groups.saturating_sub(1).max(1) as f64,
    };
    let cov = coverage_summary(table, truth.slope, cfg.level, t);
    let cov_normal = coverage_summary(table, truth.slope, cfg.level, Critical::Normal);
    let zetas: Vec<Option<f64>> = table.ok_rows().filter(|r| r.slope.is_some()).map(|r| primary_zeta(cfg, r)).collect();
    let all_zeta = !zetas.is_empty() && zetas.iter().all(|z| z.is_some());
    let zetas: Vec<f64> = zetas.into_iter().flatten().collect();
    let theory_zeta = all_zeta.then(|| mean(&zetas.iter().map(|z| z * z).collect::<Vec<_>>()).sqrt());
    let normality = if all_zeta {
        normality_summary(
            &slopes,
            &Standardize::Given {
                center: truth.slope,
                scale: zetas.clone(),
            },
        )
        .ok()
    } else {
        None
    };
    let normality_empirical = normality_summary(&slopes, &Standardize::Empirical).ok();
    let (chosen, label) = match &normality {
        Some(n) => (Some(n), "theory_zeta"),
        None => (normality_empirical.as_ref(), "empirical"),
    };
    ExperimentSummary {
        name: cfg.name.clone(),
        replicates: table.len(),
        summarized: table.len() - table.excluded(),
        excluded: table.excluded(),
        p,
        truth: truth.slope,
        mean: q.map_or(f64::NAN, |q| q.mean),
        bias: q.map_or(f64::NAN, |q| q.bias),
        relative_bias: q.map_or(f64::NAN, |q| q.relative_bias),
        mc_sd: q.map_or(f64::NAN, |q| q.mc_sd),
        mc_se: q.map_or(f64::NAN, |q| q.mc_se),
        theory_zeta,
        median_se: cov.median_se,
        jackknife_groups: groups,
        coverage: cov.coverage,
        coverage_normal: cov_normal.coverage,
        w: chosen.map(|n| n.w),
        p_value: chosen.map(|n| n.p_value),
        standardized_by: label.into(),
        normality,
        normality_empirical,
        h2: quantity_summary(&table.column(|r| r.h2_hat), truth.h2),
        rg: quantity_summary(&table.column(|r| r.rg_hat), truth.rg),
        config: cfg.clone(),
    }
}

/// Fixed column order of the replicate CSV.
pub const TABLE_COLUMNS: [&str; 7] = ["replicate", "slope", "intercept", "h2_hat", "rg_hat", "se_jackknife", "error"];
/// Fixed column order of the diagnostics CSV.
pub const DIAGNOSTIC_COLUMNS: [&str; 8] =
    ["replicate", "slope_a", "slope_b", "slope_ab", "se_a", "se_b", "zeta_a", "zeta_ab"];

fn fmt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(field: &str, path: &Path, line: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("bad number {field:?}: {e}"),
    })
}

pub fn write_table_csv(table: &ReplicateTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TABLE_COLUMNS)?;
    for r in &table.rows {
        w.write_record([
            r.replicate.to_string(),
            fmt(r.slope),
            fmt(r.intercept),
            fmt(r.h2_hat),
            fmt(r.rg_hat),
            fmt(r.se_jackknife),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_csv(table: &ReplicateTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(DIAGNOSTIC_COLUMNS)?;
    for r in &table.rows {
        let d = &r.diagnostics;
        w.write_record([
            r.replicate.to_string(),
            fmt(d.slope_a),
            fmt(d.slope_b),
            fmt(d.slope_ab),
            fmt(d.se_a),
            fmt(d.se_b),
            fmt(d.zeta_a),
            fmt(d.zeta_ab),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv_rows(path: &Path, columns: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    for (i, c) in columns.iter().enumerate() {
        if headers.get(i) != Some(*c) {
            return Err(Error::MissingColumn {
                path: path.to_path_buf(),
                column: c.to_string(),
            });
        }
    }
    reader
        .records()
        .enumerate()
        .map(|(k, r)| Ok((k + 2, r?)))
        .collect()
}

fn parse_index(field: &str, path: &Path, line: usize) -> Result<usize> {
    field.parse().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("bad replicate index {field:?}: {e}"),
    })
}

/// Read a replicate CSV and, when given, its diagnostics CSV.
pub fn read_table(path: &Path, diagnostics: Option<&Path>) -> Result<ReplicateTable> {
    let mut rows = Vec::new();
    for (line, rec) in read_csv_rows(path, &TABLE_COLUMNS)? {
        let num = |i: usize| parse_opt(&rec[i], path, line);
        rows.push(ReplicateRow {
            replicate: parse_index(&rec[0], path, line)?,
            slope: num(1)?,
            intercept: num(2)?,
            h2_hat: num(3)?,
            rg_hat: num(4)?,
            se_jackknife: num(5)?,
            error: (!rec[6].is_empty()).then(|| rec[6].to_string()),
            diagnostics: Diagnostics::default(),
        });
    }
    if let Some(dpath) = diagnostics {
        let drows = read_csv_rows(dpath, &DIAGNOSTIC_COLUMNS)?;
        if drows.len() != rows.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: drows.len(),
            });
        }
        for (row, (line, rec)) in rows.iter_mut().zip(drows) {
            if parse_index(&rec[0], dpath, line)? != row.replicate {
                return Err(Error::Parse {
                    path: dpath.to_path_buf(),
                    line,
                    message: "replicate index out of step with the main table".into(),
                });
            }
            let num = |i: usize| parse_opt(&rec[i], dpath, line);
            row.diagnostics = Diagnostics {
                slope_a: num(1)?,
                slope_b: num(2)?,
                slope_ab: num(3)?,
                se_a: num(4)?,
                se_b: num(5)?,
                zeta_a: num(6)?,
                zeta_ab: num(7)?,
            };
        }
    }
    Ok(ReplicateTable { rows })
}

/// `theoretical,sample` pairs for external plotting.
pub fn write_qq_csv(pairs: &[(f64, f64)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["theoretical", "sample"])?;
    for (t, s) in pairs {
        w.write_record([t.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Files written by [`emit_experiment`].
#[derive(Debug, Clone)]
pub struct EmittedFiles {
    pub replicates: PathBuf,
    pub diagnostics: PathBuf,
    pub summary: PathBuf,
    pub qq: Option<PathBuf>,
}

/// Write `<name>.replicates.csv`, `<name>.diagnostics.csv`,
/// `<name>.summary.json` and, when a normality report exists, `<name>.qq.csv`.
pub fn emit_experiment(exp: &Experiment, dir: &Path) -> Result<EmittedFiles> {
    std::fs::create_dir_all(dir)?;
    let name = &exp.config.name;
    let files = EmittedFiles {
        replicates: dir.join(format!("{name}.replicates.csv")),
        diagnostics: dir.join(format!("{name}.diagnostics.csv")),
        summary: dir.join(format!("{name}.summary.json")),
        qq: None,
    };
    write_table_csv(&exp.table, &files.replicates)?;
    write_diagnostics_csv(&exp.table, &files.diagnostics)?;
    let summary = exp.summary();
    write_json(&summary, &files.summary)?;
    let qq = summary.normality.as_ref().or(summary.normality_empirical.as_ref()).map(|n| &n.qq);
    let qq_path = match qq {
        Some(pairs) => {
            let path = dir.join(format!("{name}.qq.csv"));
            write_qq_csv(pairs, &path)?;
            Some(path)
        }
        None => None,
    };
    Ok(EmittedFiles { qq: qq_path, ..files })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(name: &str) -> ExperimentConfig {
        ExperimentConfig {
            name: name.into(),
            replicates: 12,
            ld_a: alternating_blocks(4, 20, 0.6),
            n_a: 400,
            n_b: 400,
            n_ra: 300,
            n_rb: 300,
            ..s51_within()
        }
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.name, name);
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn config_json_round_trip_and_defaults() {
        let cfg = s53_pooled_vs_window();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
        let partial = ExperimentConfig::from_json(r#"{"replicates": 5, "score_source": {"kind": "merged_blocks", "factor": 2}}"#).unwrap();
        assert_eq!(partial.replicates, 5);
        assert_eq!(partial.score_source, ScoreSourceSpec::MergedBlocks { factor: 2 });
        assert_eq!(partial.n_a, s51_within().n_a);
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn invalid_configs() {
        let base = small("x");
        let cases = [
            ExperimentConfig { replicates: 1, ..base.clone() },
            ExperimentConfig { n_ra: 0, ..base.clone() },
            ExperimentConfig { overlap: 1.5, ..base.clone() },
            ExperimentConfig {
                overlap: 0.5,
                estimator: EstimatorMode::Univariate,
                ..base.clone()
            },
            ExperimentConfig {
                genotype_mode: GenotypeMode::Discrete,
                ..base.clone()
            },
        ];
        for c in cases {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn same_seed_same_table() {
        let cfg = small("det");
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.table.len(), cfg.replicates);
        assert!(a.table.rows.iter().enumerate().all(|(i, r)| r.replicate == i));
        let c = run_experiment(&ExperimentConfig { seed: cfg.seed + 1, ..cfg }).unwrap();
        assert_ne!(a.table, c.table);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let cfg = ExperimentConfig {
            score_source: ScoreSourceSpec::Pooled,
            ..small("threads")
        };
        let one = run_experiment_with_threads(&cfg, None, 1).unwrap();
        let four = run_experiment_with_threads(&cfg, None, 4).unwrap();
        assert_eq!(one.table, four.table);
    }

    #[test]
    fn every_score_source_runs() {
        for source in [
            ScoreSourceSpec::True,
            ScoreSourceSpec::EstimatedWithin,
            ScoreSourceSpec::EstimatedCross,
            ScoreSourceSpec::Pooled,
            ScoreSourceSpec::MergedBlocks { factor: 2 },
        ] {
            for estimator in [EstimatorMode::Univariate, EstimatorMode::Bivariate] {
                let cfg = ExperimentConfig {
                    score_source: source,
                    estimator,
                    replicates: 3,
                    ..small("sources")
                };
                let exp = run_experiment(&cfg).unwrap();
                assert_eq!(exp.table.excluded(), 0, "{source:?} {estimator:?}: {:?}", exp.table.rows[0].error);
                assert_eq!(exp.table.rows[0].rg_hat.is_some(), estimator == EstimatorMode::Bivariate);
            }
        }
    }

    #[test]
    fn materialized_engines_run() {
        let cfg = ExperimentConfig {
            replicates: 3,
            genotype_mode: GenotypeMode::Discrete,
            gwas_engine: GwasEngine::Materialized,
            reference_engine: ReferenceEngine::Materialized,
            overlap: 0.5,
            bivariate_intercept: true,
            n_a: 3000,
            n_b: 3000,
            h2_a: 0.8,
            h2_b: 0.8,
            ..small("discrete")
        };
        let exp = run_experiment(&cfg).unwrap();
        // p = 80 leaves little signal per replicate; nonpositive slopes are
        // recorded as failures rather than aborting.
        assert!(exp.table.ok_rows().count() > 0);
        for r in exp.table.ok_rows() {
            assert!(r.intercept.is_some() && r.diagnostics.zeta_ab.is_none());
        }
    }

    #[test]
    fn failed_replicates_are_counted() {
        // A single block of identical LD gives constant true scores.
        let cfg = ExperimentConfig {
            ld_a: ar1_blocks(20, &[0.0, 0.0]),
            score_source: ScoreSourceSpec::True,
            replicates: 4,
            ..small("fail")
        };
        let exp = run_experiment(&cfg).unwrap();
        assert_eq!(exp.table.excluded(), 4);
        assert!(exp.table.rows[0].error.as_deref().unwrap().contains("degenerate design"));
        let s = exp.summary();
        assert_eq!(s.excluded + s.summarized, s.replicates);
        assert!(s.mean.is_nan());
    }

    #[test]
    fn coverage_edge_cases() {
        let est = [1.0, 2.0, 3.0];
        let n = Critical::Normal;
        assert_eq!(coverage_of(&est, &[f64::INFINITY; 3], 0.0, 0.95, n).coverage, 1.0);
        assert_eq!(coverage_of(&est, &[0.0; 3], 0.0, 0.95, n).coverage, 0.0);
        let half = coverage_of(&[0.0, 10.0], &[1.0, 1.0], 0.0, 0.95, n);
        assert_eq!((half.covered, half.total), (1, 2));
        // 2.0 lies inside the t interval with 7 df but outside the normal one.
        let t7 = Critical::StudentT { df: 7.0 };
        assert!((t7.value(0.95) - 2.364624).abs() < 1e-6);
        assert_eq!(coverage_of(&[2.0], &[1.0], 0.0, 0.95, t7).coverage, 1.0);
        assert_eq!(coverage_of(&[2.0], &[1.0], 0.0, 0.95, n).coverage, 0.0);
    }

    #[test]
    fn emitted_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let exp = run_experiment(&small("emit")).unwrap();
        let files = emit_experiment(&exp, dir.path()).unwrap();
        let back = read_table(&files.replicates, Some(&files.diagnostics)).unwrap();
        assert_eq!(back, exp.table);
        let from_csv = summarize(&exp.config, exp.p, exp.groups, &back);
        assert_eq!(serde_json::to_string(&from_csv).unwrap(), serde_json::to_string(&exp.summary()).unwrap());
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files.summary).unwrap()).unwrap();
        for key in ["bias", "relative_bias", "mc_sd", "theory_zeta", "W", "p_value", "coverage"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert!(files.qq.is_some());
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_table_csv(&ReplicateTable::default(), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{}\n", TABLE_COLUMNS.join(",")));
        assert!(read_table(&path, None).unwrap().is_empty());
    }
}
