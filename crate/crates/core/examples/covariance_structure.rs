//! Build a block-diagonal LD covariance and inspect its spectrum and square root.

use ldsc_forge::model::{block_sqrt, build_covariance, BlockStructure, BlockTemplate, CovarianceSpec};

fn main() -> ldsc_forge::Result<()> {
    let structure = BlockStructure::new(vec![4, 6, 5])?;
    let spec = CovarianceSpec::PerBlock(vec![
        BlockTemplate::Ar1 { rho: 0.8 },
        BlockTemplate::Exchangeable { rho: 0.3 },
        BlockTemplate::Identity,
    ]);
    let cov = build_covariance(&structure, &spec)?;
    let eig = cov.eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    println!("p = {}, blocks = {}", cov.p(), structure.n_blocks());
    println!("eigenvalues in [{lo:.4}, {hi:.4}]");

    let factor = block_sqrt(&cov)?;
    let e0: Vec<f64> = (0..cov.p()).map(|j| if j == 0 { 1.0 } else { 0.0 }).collect();
    let once = factor.apply(&e0)?;
    let twice = factor.apply(&once)?;
    let column = cov.mul_vec(&e0)?;
    let err = twice.iter().zip(&column).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("max |Σ^½Σ^½e₀ − Σe₀| = {err:.2e}");
    Ok(())
}
