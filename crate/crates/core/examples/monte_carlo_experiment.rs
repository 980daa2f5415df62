//! Run a shortened preset experiment and write its replicate table and summary.

use ldsc_forge::harness::{emit_experiment, preset, run_experiment, ExperimentConfig, PRESETS};

fn main() -> ldsc_forge::Result<()> {
    println!("presets: {}", PRESETS.join(", "));
    let cfg = ExperimentConfig {
        replicates: 40,
        ..preset("s52-overlap")?
    };
    let exp = run_experiment(&cfg)?;
    let s = exp.summary();
    println!("{} replicates, {} excluded", s.replicates, s.excluded);
    if let Some(rg) = s.rg {
        println!("mean φ̂ = {:.3} ± {:.3} (truth {})", rg.mean, rg.mc_se, rg.truth);
    }
    println!("jackknife coverage {:.2} with {} groups", s.coverage, s.jackknife_groups);

    let dir = tempfile::tempdir().map_err(ldsc_forge::Error::from)?;
    let files = emit_experiment(&exp, dir.path())?;
    println!("wrote {}", files.summary.display());
    Ok(())
}
