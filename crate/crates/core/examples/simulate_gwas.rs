//! Simulate a genotype panel and phenotype, then compute and save marginal statistics.

use ldsc_forge::model::{block_sqrt, build_covariance, BlockStructure, CovarianceSpec};
use ldsc_forge::rng::SeedStream;
use ldsc_forge::simgen::{sample_effect_pair, sample_maf, simulate_panel, simulate_phenotype, GenotypeMode, TraitArchitecture};
use ldsc_forge::sumstats::{marginal_stats, read_sumstats, write_sumstats};

fn main() -> ldsc_forge::Result<()> {
    let seeds = SeedStream::new(11);
    let cov = build_covariance(&BlockStructure::uniform(10, 20)?, &CovarianceSpec::ar1(0.6))?;
    let factor = block_sqrt(&cov)?;
    let arch = TraitArchitecture {
        h2: 0.4,
        sparsity: 0.2,
        shared_fraction: 1.0,
        rg: 0.0,
    };
    let (alpha, _) = sample_effect_pair(&arch, cov.p(), &mut seeds.child("effects", 0).rng())?;
    let maf = sample_maf(cov.p(), 0.05, 0.5, &mut seeds.child("maf", 0).rng())?;
    let mut rng = seeds.child("panel", 0).rng();
    let panel = simulate_panel(&cov, &factor, 1500, GenotypeMode::Discrete, Some(&maf), &mut rng)?;
    let cohort = simulate_phenotype(&panel, &alpha, arch.h2, &mut seeds.child("phenotype", 0).rng())?;
    let stats = marginal_stats(&cohort)?;

    let z = stats.z();
    let chi2 = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
    println!("n = {}, p = {}, σ²_ε = {:.3}, mean χ² = {chi2:.3}", panel.n(), stats.p(), cohort.sigma_eps2);

    let dir = tempfile::tempdir().map_err(ldsc_forge::Error::from)?;
    let path = dir.path().join("sumstats.tsv");
    write_sumstats(&stats, &path)?;
    let back = read_sumstats(&path)?;
    println!("round trip exact: {}", back.beta == stats.beta && back.n == stats.n);
    Ok(())
}
