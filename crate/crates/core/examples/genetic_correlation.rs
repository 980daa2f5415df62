//! Estimate the genetic correlation across two populations with cross LD scores.

use ldsc_forge::harness::{ar1_blocks, simulate_dataset, ExperimentConfig};
use ldsc_forge::ldsc::{derive_genetic_correlation, fit_bivariate, fit_univariate};
use ldsc_forge::ldscores::estimate_ld_scores;
use ldsc_forge::sumstats::make_w;

fn main() -> ldsc_forge::Result<()> {
    let cfg = ExperimentConfig {
        ld_a: ar1_blocks(20, &[0.8, 0.1].repeat(50)),
        ld_b: Some(ar1_blocks(20, &[0.7, 0.0].repeat(50))),
        n_a: 10_000,
        n_b: 10_000,
        n_ra: 1000,
        n_rb: 1000,
        h2_a: 0.6,
        h2_b: 0.6,
        rg: 0.5,
        ..ExperimentConfig::default()
    };
    let data = simulate_dataset(&cfg, None)?;
    let (ref_a, ref_b) = (&data.reference_a, data.reference_b.as_ref().expect("bivariate"));
    let sb = data.sumstats_b.as_ref().expect("bivariate");
    let l_a = estimate_ld_scores(ref_a, None, &data.structure)?;
    let l_b = estimate_ld_scores(ref_b, None, &data.structure)?;
    let l_ab = estimate_ld_scores(ref_a, Some(ref_b), &data.structure)?;

    let fit_a = fit_univariate(&make_w(&data.sumstats_a, None)?, &l_a)?;
    let fit_b = fit_univariate(&make_w(sb, None)?, &l_b)?;
    let fit_ab = fit_bivariate(&make_w(&data.sumstats_a, Some(sb))?, &l_ab)?;
    let rg = derive_genetic_correlation(&fit_ab, &fit_a, &fit_b)?;
    println!("ĥ²_a = {:.3}, ĥ²_b = {:.3}", fit_a.g_hat, fit_b.g_hat);
    println!("φ̂ = {rg:.3} (truth {})", cfg.rg);
    Ok(())
}
