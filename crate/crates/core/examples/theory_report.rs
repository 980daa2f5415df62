//! Closed-form standard deviations and condition diagnostics for a preset.

use ldsc_forge::harness::{s51_within, theory_report};

fn main() -> ldsc_forge::Result<()> {
    let report = theory_report(&s51_within(), None)?;
    println!("p = {}, blocks = {}", report.p, report.n_blocks);
    println!("ζ_α = {:.3e} against σ²_α = {:.3e}", report.zeta_a, report.sigma2_a);
    if let (Some(z), Some(s)) = (report.zeta_ab, report.sigma_ab) {
        println!("ζ_αβ = {z:.3e} against σ_αβ = {s:.3e}");
    }
    if let Some(r) = report.rho2_ab {
        println!("reference-panel sd of ℓ̂ᵀw = {:.3e}", r.sqrt());
    }
    println!("{}", serde_json::to_string_pretty(&report.conditions).map_err(ldsc_forge::Error::from)?);
    Ok(())
}
