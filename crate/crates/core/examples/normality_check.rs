//! Shapiro-Wilk and Anderson-Darling checks on standardized slopes.

use ldsc_forge::harness::{normality_summary, run_experiment, s51_within, ExperimentConfig, Standardize};

fn main() -> ldsc_forge::Result<()> {
    let cfg = ExperimentConfig {
        replicates: 60,
        ..s51_within()
    };
    let exp = run_experiment(&cfg)?;
    let (values, scale): (Vec<f64>, Vec<f64>) = exp
        .table
        .rows
        .iter()
        .filter_map(|r| r.diagnostics.slope_a.zip(r.diagnostics.zeta_a))
        .unzip();
    let center = cfg.h2_a / exp.p as f64;
    let given = normality_summary(&values, &Standardize::Given { center, scale })?;
    let empirical = normality_summary(&values, &Standardize::Empirical)?;
    println!("ζ-standardized: W = {:.4}, p = {:.3}, mean {:.3}, sd {:.3}", given.w, given.p_value, given.mean, given.sd);
    println!("self-standardized: W = {:.4}, p = {:.3}, AD p = {:.3}", empirical.w, empirical.p_value, empirical.anderson_darling_p);
    Ok(())
}
