//! Estimate within, cross and pooled LD scores from reference panels.

use ldsc_forge::ldscores::{estimate_ld_scores, pooled_ld_scores, true_ld_scores};
use ldsc_forge::model::{block_sqrt, build_covariance, BlockStructure, CovarianceSpec};
use ldsc_forge::rng::SeedStream;
use ldsc_forge::simgen::{simulate_panel, GenotypeMode};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn main() -> ldsc_forge::Result<()> {
    let seeds = SeedStream::new(5);
    let structure = BlockStructure::uniform(20, 10)?;
    let cov_a = build_covariance(&structure, &CovarianceSpec::ar1(0.7))?;
    let cov_b = build_covariance(&structure, &CovarianceSpec::ar1(0.2))?;
    let panel = |cov, label| -> ldsc_forge::Result<_> {
        simulate_panel(cov, &block_sqrt(cov)?, 400, GenotypeMode::Gaussian, None, &mut seeds.child(label, 0).rng())
    };
    let (ref_a, ref_b) = (panel(&cov_a, "a")?, panel(&cov_b, "b")?);

    let within = estimate_ld_scores(&ref_a, None, &structure)?;
    let cross = estimate_ld_scores(&ref_a, Some(&ref_b), &structure)?;
    let pooled = pooled_ld_scores(&ref_a, &ref_b, &structure)?;
    let true_within = true_ld_scores(&cov_a, None)?;
    let true_cross = true_ld_scores(&cov_a, Some(&cov_b))?;
    println!("mean within: estimated {:.3}, true {:.3}", mean(&within.values), mean(&true_within.values));
    println!("mean cross:  estimated {:.3}, true {:.3}", mean(&cross.values), mean(&true_cross.values));
    println!("mean pooled: {:.3}", mean(&pooled.values));
    Ok(())
}
