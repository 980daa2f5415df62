//! Fit the univariate regression on simulated summary statistics with a block jackknife.

use ldsc_forge::harness::{segmented_blocks, simulate_dataset, EstimatorMode, ExperimentConfig};
use ldsc_forge::ldsc::{block_jackknife, derive_heritability, fit_univariate, FitMode, Regression};
use ldsc_forge::ldscores::estimate_ld_scores;
use ldsc_forge::sumstats::make_w;

fn main() -> ldsc_forge::Result<()> {
    let cfg = ExperimentConfig {
        ld_a: segmented_blocks(40, 50, 5, &[0.0, 0.9]),
        n_a: 5000,
        n_ra: 1000,
        h2_a: 0.5,
        estimator: EstimatorMode::Univariate,
        ..ExperimentConfig::default()
    };
    let data = simulate_dataset(&cfg, None)?;
    let scores = estimate_ld_scores(&data.reference_a, None, &data.structure)?;
    let w = make_w(&data.sumstats_a, None)?;
    let fit = fit_univariate(&w, &scores)?;
    let se = block_jackknife(&w, &scores, &data.structure, 10, Regression::for_fit(FitMode::Univariate, false))?;
    let h2 = derive_heritability(&fit, None)?;
    println!("slope = {:.3e} ± {se:.1e}", fit.slope);
    println!("ĥ² = {:.3} ± {:.3} (truth {})", h2.value, fit.p as f64 * se, cfg.h2_a);
    Ok(())
}
