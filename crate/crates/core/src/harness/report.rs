//! Closed-form variances and condition diagnostics for one configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{draw_effects, Context, ExperimentConfig};
use crate::error::Result;
use crate::rng::SeedStream;
use crate::simgen::{genetic_correlation, noise_variance};
use crate::theory::{
    condition_diagnostics, epsilon_cross, epsilon_univariate, rho2_cross, zeta2_bivariate, zeta2_univariate,
    ConditionReport, TheoryInputs,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub p: usize,
    pub n_blocks: usize,
    pub g2_a: f64,
    pub g2_b: Option<f64>,
    pub rg_realized: Option<f64>,
    pub sigma2_a: f64,
    pub sigma_ab: Option<f64>,
    pub sigma_eps2_a: f64,
    pub sigma_eps2_b: Option<f64>,
    pub zeta2_a: f64,
    pub zeta_a: f64,
    pub zeta2_ab: Option<f64>,
    pub zeta_ab: Option<f64>,
    /// Variance of `ℓ̂_abᵀ w_ab` over independent reference panels.
    pub rho2_ab: Option<f64>,
    pub conditions: ConditionReport,
    pub config: ExperimentConfig,
}

/// Evaluate the theory at the effects of replicate 0 and the population LD
/// scores. Bivariate quantities need the bivariate estimator and cohorts
/// without shared rows.
pub fn theory_report(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<TheoryReport> {
    cfg.validate()?;
    let ctx = Context::build(cfg, base_dir)?;
    let p = ctx.cov_a.p();
    let (alpha, beta) = match &ctx.fixed_effects {
        Some(e) => e.clone(),
        None => draw_effects(cfg, p, &SeedStream::new(cfg.seed).replicate(0).child("effects", 0))?,
    };
    let s2a = noise_variance(alpha.g2(), cfg.h2_a)?;
    let s2b = noise_variance(beta.g2(), cfg.h2_b)?;
    let bivariate = cfg.bivariate() && cfg.shared_rows() == 0;
    let inputs_a = TheoryInputs {
        cov_a: &ctx.cov_a,
        cov_b: None,
        alpha: &alpha,
        beta: None,
        sigma_eps2_a: s2a,
        sigma_eps2_b: None,
        n_a: cfg.n_a,
        n_b: None,
        n_ra: Some(cfg.n_ra),
        n_rb: None,
        scores: &ctx.true_a,
    };
    let zeta2_a = zeta2_univariate(&inputs_a)?;
    let (w_a, eps_a) = epsilon_univariate(&ctx.cov_a, &alpha, s2a, cfg.n_a)?;
    let inputs_ab = TheoryInputs {
        cov_b: Some(ctx.cov_b()),
        beta: Some(&beta),
        sigma_eps2_b: Some(s2b),
        n_b: Some(cfg.n_b),
        n_rb: Some(cfg.n_rb),
        scores: &ctx.true_ab,
        ..inputs_a
    };
    let (zeta2_ab, rho2_ab, conditions) = if bivariate {
        let (w_ab, eps_ab) = epsilon_cross(&ctx.cov_a, ctx.cov_b(), &alpha, &beta)?;
        (
            Some(zeta2_bivariate(&inputs_ab)?),
            Some(rho2_cross(&inputs_ab, &w_ab)?),
            condition_diagnostics(&inputs_ab, Some((&w_a, &eps_a)), Some((&w_ab, &eps_ab)))?,
        )
    } else {
        (None, None, condition_diagnostics(&inputs_a, Some((&w_a, &eps_a)), None)?)
    };
    let two = cfg.bivariate();
    Ok(TheoryReport {
        p,
        n_blocks: ctx.cov_a.structure().n_blocks(),
        g2_a: alpha.g2(),
        g2_b: two.then(|| beta.g2()),
        rg_realized: two.then(|| genetic_correlation(&alpha, &beta)),
        sigma2_a: alpha.sigma2(),
        sigma_ab: two.then(|| alpha.dot(&beta) / p as f64),
        sigma_eps2_a: s2a,
        sigma_eps2_b: two.then_some(s2b),
        zeta2_a,
        zeta_a: zeta2_a.sqrt(),
        zeta2_ab,
        zeta_ab: zeta2_ab.map(f64::sqrt),
        rho2_ab,
        conditions,
        config: cfg.clone(),
    })
}
