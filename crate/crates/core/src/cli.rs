//! Command-line front end.
//!
//! Every subcommand takes an optional JSON config whose fields mirror its
//! flags; flags win. The merged config is echoed into each output.
//! Exit codes: 0 success, 1 usage, 2 data or parse error, 3 numeric or
//! degenerate input.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorClass, Result};
use crate::harness::{
    emit_experiment, preset, run_experiment_with_threads, simulate_dataset, theory_report, write_json,
    ExperimentConfig, PRESETS,
};
use crate::ldsc::{
    block_jackknife, derive_genetic_correlation, derive_heritability, fit_bivariate_with, fit_univariate, FitMode,
    LdscFit, Regression, DEFAULT_JACKKNIFE_GROUPS,
};
use crate::ldscores::{estimate_ld_scores, pooled_ld_scores, read_ldscores_with_structure, write_ldscores};
use crate::model::BlockStructure;
use crate::simgen::{GenotypeMode, GenotypePanel};
use crate::sumstats::{make_w, read_sumstats, write_sumstats};

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "LDSC_FORGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ldsc-forge", version, about = "Simulate GWAS data and fit LD score regressions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate cohorts, reference panels and summary statistics.
    Simulate(SimulateArgs),
    /// Estimate LD scores from one or two reference panels.
    Ldscore(LdscoreArgs),
    /// Fit an LD score regression to summary statistics.
    Fit(FitArgs),
    /// Report closed-form variances and condition diagnostics.
    Theory(TheoryArgs),
    /// Run a Monte Carlo experiment and write its tables and summary.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config; flags override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Root seed (64-bit unsigned).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory or file, depending on the subcommand.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to $LDSC_FORGE_THREADS, then all cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Start from a named preset instead of the default configuration.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS), conflicts_with = "config")]
    pub preset: Option<String>,
    /// Also write the cohorts' genotype matrices.
    #[arg(long)]
    pub cohort_genotypes: bool,
}

#[derive(Debug, Args)]
pub struct LdscoreArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Reference panel TSV (one row per sample).
    #[arg(long, value_name = "FILE")]
    pub panel: Option<PathBuf>,
    /// Second panel; gives cross scores, or pooled scores with --pooled.
    #[arg(long, value_name = "FILE")]
    pub panel_b: Option<PathBuf>,
    /// Pool the two panels and compute within scores.
    #[arg(long)]
    pub pooled: bool,
    /// JSON array of LD block sizes.
    #[arg(long, value_name = "FILE", conflicts_with = "block_size")]
    pub blocks: Option<PathBuf>,
    /// Uniform LD block size; must divide the variant count.
    #[arg(long)]
    pub block_size: Option<usize>,
    /// How the panel values are coded.
    #[arg(long, value_enum)]
    pub genotype_mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Summary statistics of trait A.
    #[arg(long, value_name = "FILE")]
    pub sumstats: Option<PathBuf>,
    /// Summary statistics of trait B (bivariate mode).
    #[arg(long, value_name = "FILE")]
    pub sumstats_b: Option<PathBuf>,
    /// LD scores regressed on; cross scores in bivariate mode.
    #[arg(long, value_name = "FILE")]
    pub ldscores: Option<PathBuf>,
    /// Within scores of population A, to report the genetic correlation.
    #[arg(long, value_name = "FILE")]
    pub ldscores_a: Option<PathBuf>,
    /// Within scores of population B, to report the genetic correlation.
    #[arg(long, value_name = "FILE")]
    pub ldscores_b: Option<PathBuf>,
    /// Regression type; defaults to bivariate when --sumstats-b is given.
    #[arg(long, value_enum)]
    pub mode: Option<FitModeArg>,
    /// Fit the bivariate regression with a free intercept.
    #[arg(long)]
    pub intercept: bool,
    /// Jackknife groups (capped at the number of LD blocks).
    #[arg(long)]
    pub jackknife_groups: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Start from a named preset instead of the default configuration.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS), conflicts_with = "config")]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Start from a named preset instead of the default configuration.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS), conflicts_with = "config")]
    pub preset: Option<String>,
    /// Override the number of replicates.
    #[arg(long)]
    pub replicates: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Gaussian,
    Discrete,
}

impl From<ModeArg> for GenotypeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Gaussian => GenotypeMode::Gaussian,
            ModeArg::Discrete => GenotypeMode::Discrete,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModeArg {
    Univariate,
    Bivariate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdscoreConfig {
    pub panel: Option<PathBuf>,
    pub panel_b: Option<PathBuf>,
    pub pooled: bool,
    pub blocks: Option<PathBuf>,
    pub block_size: Option<usize>,
    pub genotype_mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub sumstats: Option<PathBuf>,
    pub sumstats_b: Option<PathBuf>,
    pub ldscores: Option<PathBuf>,
    pub ldscores_a: Option<PathBuf>,
    pub ldscores_b: Option<PathBuf>,
    pub mode: Option<FitModeArg>,
    pub intercept: bool,
    pub jackknife_groups: Option<usize>,
}

/// Fit output. `flags` lists caveats about the estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub mode: FitMode,
    pub slope: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    pub p: usize,
    pub g_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rg: Option<f64>,
    pub se_jackknife: Option<f64>,
    pub jackknife_groups: usize,
    pub flags: Vec<String>,
    pub config: FitConfig,
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Data => 2,
        ErrorClass::Numeric => 3,
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Worker count: flag, else [`THREADS_ENV`], else all cores.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(Error::Config("thread count must be positive".into()));
    }
    Ok(n)
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Ldscore(a) => ldscore(a),
        Command::Fit(a) => fit(a),
        Command::Theory(a) => theory(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: p.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })
        }
    }
}

/// Experiment config from `--config` or `--preset`, with the seed override.
fn experiment_config(common: &CommonArgs, preset_name: Option<&str>) -> Result<(ExperimentConfig, Option<PathBuf>)> {
    let (mut cfg, base) = match (&common.config, preset_name) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            let cfg = ExperimentConfig::from_json(&text).map_err(|e| match e {
                Error::Json(j) => Error::Parse {
                    path: path.clone(),
                    line: j.line(),
                    message: j.to_string(),
                },
                other => other,
            })?;
            (cfg, path.parent().map(Path::to_path_buf))
        }
        (None, Some(name)) => (preset(name)?, None),
        (None, None) => (ExperimentConfig::default(), None),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok((cfg, base))
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("--{flag} is required")))
}

fn out_dir(common: &CommonArgs) -> Result<PathBuf> {
    let dir = required(common.out.clone(), "out")?;
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn thread_pool(common: &CommonArgs) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(common.threads)?)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let (cfg, base) = experiment_config(&args.common, args.preset.as_deref())?;
    let dir = out_dir(&args.common)?;
    let data = thread_pool(&args.common)?.install(|| simulate_dataset(&cfg, base.as_deref()))?;
    write_json(&cfg, &dir.join("config.json"))?;
    write_json(&data.structure, &dir.join("structure.json"))?;
    data.alpha.write_tsv(&dir.join("effects_a.tsv"))?;
    write_sumstats(&data.sumstats_a, &dir.join("sumstats_a.tsv"))?;
    data.reference_a.write_tsv(&dir.join("reference_a.tsv"))?;
    let mut cohorts = vec![("a", &data.cohort_a)];
    if let Some(cb) = &data.cohort_b {
        cohorts.push(("b", cb));
        data.beta.write_tsv(&dir.join("effects_b.tsv"))?;
    }
    if let Some(s) = &data.sumstats_b {
        write_sumstats(s, &dir.join("sumstats_b.tsv"))?;
    }
    if let Some(r) = &data.reference_b {
        r.write_tsv(&dir.join("reference_b.tsv"))?;
    }
    for (tag, cohort) in cohorts {
        let rows = cohort
            .rows
            .iter()
            .zip(&cohort.phenotype)
            .map(|(r, y)| format!("{}\t{y}", r + 1));
        write_rows(&dir.join(format!("phenotype_{tag}.tsv")), "SAMPLE\tPHENO", rows)?;
        if args.cohort_genotypes {
            cohort.panel.write_tsv(&dir.join(format!("cohort_{tag}.tsv")))?;
        }
    }
    Ok(())
}

fn ldscore(args: LdscoreArgs) -> Result<()> {
    let file: LdscoreConfig = read_config(args.common.config.as_deref())?;
    let cfg = LdscoreConfig {
        panel: args.panel.or(file.panel),
        panel_b: args.panel_b.or(file.panel_b),
        pooled: args.pooled || file.pooled,
        blocks: args.blocks.or(if args.block_size.is_some() { None } else { file.blocks }),
        block_size: args.block_size.or(file.block_size),
        genotype_mode: args.genotype_mode.or(file.genotype_mode),
    };
    let out = required(args.common.out.clone(), "out")?;
    let panel_path = required(cfg.panel.clone(), "panel")?;
    if cfg.pooled && cfg.panel_b.is_none() {
        return Err(Error::Config("--pooled needs --panel-b".into()));
    }
    let p = panel_width(&panel_path)?;
    let structure = match (&cfg.blocks, cfg.block_size) {
        (Some(path), _) => read_config::<Option<BlockStructure>>(Some(path))?
            .ok_or_else(|| Error::Config("block file is empty".into()))?,
        (None, Some(size)) => {
            if size == 0 || p % size != 0 {
                return Err(Error::Config(format!("block size {size} does not divide {p} variants")));
            }
            BlockStructure::uniform(p / size, size)?
        }
        (None, None) => return Err(Error::Config("--blocks or --block-size is required".into())),
    };
    let mode = cfg.genotype_mode.map_or(GenotypeMode::Gaussian, GenotypeMode::from);
    let scores = thread_pool(&args.common)?.install(|| -> Result<_> {
        let a = GenotypePanel::read_tsv(&panel_path, structure.clone(), mode)?;
        let b = cfg
            .panel_b
            .as_deref()
            .map(|path| GenotypePanel::read_tsv(path, structure.clone(), mode))
            .transpose()?;
        match (&b, cfg.pooled) {
            (Some(b), true) => pooled_ld_scores(&a, b, &structure),
            _ => estimate_ld_scores(&a, b.as_ref(), &structure),
        }
    })?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_ldscores(&scores, &structure, &out)?;
    write_json(&cfg, &with_suffix(&out, ".config.json"))
}

fn panel_width(path: &Path) -> Result<usize> {
    let mut reader = csv::ReaderBuilder::new().delimiter(b'\t').from_path(path)?;
    Ok(reader.headers()?.len())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn fit(args: FitArgs) -> Result<()> {
    let file: FitConfig = read_config(args.common.config.as_deref())?;
    let cfg = FitConfig {
        sumstats: args.sumstats.or(file.sumstats),
        sumstats_b: args.sumstats_b.or(file.sumstats_b),
        ldscores: args.ldscores.or(file.ldscores),
        ldscores_a: args.ldscores_a.or(file.ldscores_a),
        ldscores_b: args.ldscores_b.or(file.ldscores_b),
        mode: args.mode.or(file.mode),
        intercept: args.intercept || file.intercept,
        jackknife_groups: args.jackknife_groups.or(file.jackknife_groups),
    };
    let report = fit_report(&cfg)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &args.common.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Run the regression described by `cfg`.
pub fn fit_report(cfg: &FitConfig) -> Result<FitReport> {
    let mode = match cfg.mode {
        Some(FitModeArg::Univariate) => FitMode::Univariate,
        Some(FitModeArg::Bivariate) => FitMode::Bivariate,
        None if cfg.sumstats_b.is_some() => FitMode::Bivariate,
        None => FitMode::Univariate,
    };
    let stats_a = read_sumstats(&required(cfg.sumstats.clone(), "sumstats")?)?;
    let (scores, structure) = read_ldscores_with_structure(&required(cfg.ldscores.clone(), "ldscores")?)?;
    let stats_b = match (mode, &cfg.sumstats_b) {
        (FitMode::Bivariate, Some(path)) => Some(read_sumstats(path)?),
        (FitMode::Bivariate, None) => return Err(Error::Config("bivariate mode needs --sumstats-b".into())),
        (FitMode::Univariate, Some(_)) => {
            return Err(Error::Config("--sumstats-b needs --mode bivariate".into()));
        }
        (FitMode::Univariate, None) => None,
    };
    let w = make_w(&stats_a, stats_b.as_ref())?;
    let requested = cfg.jackknife_groups.unwrap_or(DEFAULT_JACKKNIFE_GROUPS);
    let groups = requested.min(structure.n_blocks());
    let mut flags = Vec::new();
    let fit = match mode {
        FitMode::Univariate => fit_univariate(&w, &scores)?,
        FitMode::Bivariate => fit_bivariate_with(&w, &scores, cfg.intercept)?,
    };
    let se = if groups >= 2 {
        if cfg.jackknife_groups.is_some_and(|g| g > groups) {
            flags.push("jackknife_groups_capped".to_string());
        }
        Some(block_jackknife(&w, &scores, &structure, groups, Regression::for_fit(mode, cfg.intercept))?)
    } else {
        flags.push("no_jackknife".to_string());
        None
    };
    let mut h2 = None;
    if mode == FitMode::Univariate {
        let her = derive_heritability(&fit, None)?;
        if her.negative_variance {
            flags.push("negative_variance".to_string());
        }
        h2 = Some(her.value);
    }
    let rg = match (mode, &cfg.ldscores_a, &cfg.ldscores_b, &stats_b) {
        (FitMode::Bivariate, Some(la), Some(lb), Some(sb)) => {
            let (la, _) = read_ldscores_with_structure(la)?;
            let (lb, _) = read_ldscores_with_structure(lb)?;
            let fa = fit_univariate(&make_w(&stats_a, None)?, &la)?;
            let fb = fit_univariate(&make_w(sb, None)?, &lb)?;
            match derive_genetic_correlation(&fit, &fa, &fb) {
                Ok(r) => Some(r),
                Err(Error::NonpositiveHeritability { .. }) => {
                    flags.push("nonpositive_heritability".to_string());
                    None
                }
                Err(e) => return Err(e),
            }
        }
        _ => None,
    };
    let LdscFit {
        slope, intercept, p, g_hat, ..
    } = fit;
    Ok(FitReport {
        mode,
        slope,
        intercept,
        p,
        g_hat,
        h2,
        rg,
        se_jackknife: se,
        jackknife_groups: if se.is_some() { groups } else { 0 },
        flags,
        config: cfg.clone(),
    })
}

fn theory(args: TheoryArgs) -> Result<()> {
    let (cfg, base) = experiment_config(&args.common, args.preset.as_deref())?;
    let report = thread_pool(&args.common)?.install(|| theory_report(&cfg, base.as_deref()))?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &args.common.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let (mut cfg, base) = experiment_config(&args.common, args.preset.as_deref())?;
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    let dir = out_dir(&args.common)?;
    let threads = resolve_threads(args.common.threads)?;
    let exp = run_experiment_with_threads(&cfg, base.as_deref(), threads)?;
    let files = emit_experiment(&exp, &dir)?;
    let mut stdout = std::io::stdout().lock();
    for path in [Some(&files.replicates), Some(&files.diagnostics), Some(&files.summary), files.qq.as_ref()]
        .into_iter()
        .flatten()
    {
        writeln!(stdout, "{}", path.display())?;
    }
    Ok(())
}
