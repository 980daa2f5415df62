//! A single materialized draw of cohorts, effects and reference panels.

use std::path::Path;

use super::{draw_effects, materialized_cohorts, Context, ExperimentConfig};
use crate::error::Result;
use crate::model::{BlockStructure, CovarianceModel};
use crate::rng::SeedStream;
use crate::simgen::{simulate_panel, Cohort, EffectVector, GenotypePanel};
use crate::sumstats::{marginal_from_panel, SummaryStats};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub structure: BlockStructure,
    pub cov_a: CovarianceModel,
    pub cov_b: Option<CovarianceModel>,
    pub alpha: EffectVector,
    pub beta: EffectVector,
    pub cohort_a: Cohort,
    pub cohort_b: Option<Cohort>,
    pub sumstats_a: SummaryStats,
    pub sumstats_b: Option<SummaryStats>,
    pub reference_a: GenotypePanel,
    pub reference_b: Option<GenotypePanel>,
}

/// Materialize replicate 0 of `cfg`: genotype panels for every cohort and
/// reference sample, whatever engines the configuration names. Cohort B and
/// reference B exist only in bivariate mode.
pub fn simulate_dataset(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Dataset> {
    cfg.validate()?;
    let ctx = Context::build(cfg, base_dir)?;
    let rep = SeedStream::new(cfg.seed).replicate(0);
    let p = ctx.cov_a.p();
    let (alpha, beta) = match &ctx.fixed_effects {
        Some(e) => e.clone(),
        None => draw_effects(cfg, p, &rep.child("effects", 0))?,
    };
    let mut rng = rep.child("gwas", 0).rng();
    let (cohort_a, cohort_b) = materialized_cohorts(cfg, &ctx, (&alpha, &beta), &mut rng)?;
    let sumstats_a = marginal_from_panel(&cohort_a.panel, &cohort_a.phenotype, "a")?;
    let sumstats_b = cohort_b
        .as_ref()
        .map(|c| marginal_from_panel(&c.panel, &c.phenotype, "b"))
        .transpose()?;
    let mode = cfg.genotype_mode;
    let maf = ctx.maf.as_ref();
    let mut rng = rep.child("reference", 0).rng();
    let reference_a = simulate_panel(&ctx.cov_a, &ctx.factor_a, cfg.n_ra, mode, maf, &mut rng)?;
    let reference_b = if cfg.bivariate() {
        let mut rng = rep.child("reference", 1).rng();
        Some(simulate_panel(ctx.cov_b(), ctx.factor_b(), cfg.n_rb, mode, maf, &mut rng)?)
    } else {
        None
    };
    Ok(Dataset {
        structure: ctx.cov_a.structure().clone(),
        cov_a: ctx.cov_a.clone(),
        cov_b: ctx.cov_b.clone(),
        alpha,
        beta,
        cohort_a,
        cohort_b,
        sumstats_a,
        sumstats_b,
        reference_a,
        reference_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{segmented_blocks, EstimatorMode};

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            ld_a: segmented_blocks(2, 10, 5, &[0.0, 0.8]),
            n_a: 60,
            n_b: 50,
            n_ra: 40,
            n_rb: 30,
            overlap: 0.5,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn shapes_and_overlap() {
        let d = simulate_dataset(&small(), None).unwrap();
        assert_eq!(d.structure.p(), 20);
        assert_eq!(d.sumstats_a.n, 60);
        let b = d.cohort_b.as_ref().unwrap();
        assert_eq!(b.panel.n(), 50);
        assert_eq!(d.reference_b.as_ref().unwrap().n(), 30);
        let shared = b.rows.iter().filter(|r| d.cohort_a.rows.contains(r)).count();
        assert_eq!(shared, 25);
        assert!((d.alpha.g2() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_univariate() {
        let cfg = small();
        let (x, y) = (simulate_dataset(&cfg, None).unwrap(), simulate_dataset(&cfg, None).unwrap());
        assert_eq!(x.sumstats_a, y.sumstats_a);
        assert_eq!(x.reference_a, y.reference_a);
        let uni = ExperimentConfig {
            estimator: EstimatorMode::Univariate,
            overlap: 0.0,
            ..cfg
        };
        let d = simulate_dataset(&uni, None).unwrap();
        assert!(d.cohort_b.is_none() && d.sumstats_b.is_none() && d.reference_b.is_none());
    }
}
