use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block structure has no blocks")]
    EmptyStructure,

    #[error("block {index} has size 0")]
    ZeroSizedBlock { index: usize },

    #[error("total variant count {p} exceeds the configured maximum {max}")]
    SizeOverflow { p: usize, max: usize },

    #[error("block {index} has size {size} above the configured bound {bound}")]
    BlockTooLarge { index: usize, size: usize, bound: usize },

    #[error("block {block} is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { block: usize, min_eigenvalue: f64 },

    #[error("block {block} eigenvalues [{min:.4}, {max:.4}] leave the band [{lower}, {upper}]")]
    EigenvalueBand {
        block: usize,
        min: f64,
        max: f64,
        lower: f64,
        upper: f64,
    },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("block structures do not match")]
    StructureMismatch,

    #[error("allele frequency range [{lo}, {hi}] is not inside (0, 0.5]")]
    BadRange { lo: f64, hi: f64 },

    #[error("discrete genotypes need allele frequencies")]
    MissingMaf,

    #[error("degenerate panel: {0}")]
    DegeneratePanel(String),

    #[error("effect support is empty (sparsity too small for p)")]
    EmptySupport,

    #[error("genetic correlation {rg} cannot be reached with the shared support")]
    UnreachableRg { rg: f64 },

    #[error("invalid trait architecture: {0}")]
    InvalidArchitecture(String),

    #[error("nonzero heritability requested with all-zero effects")]
    ZeroEffectNonzeroH2,

    #[error("cohorts need {needed} genotype rows but the panel has {available}")]
    InsufficientSamples { needed: usize, available: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("degenerate design: centered LD scores have no spread")]
    DegenerateDesign,

    #[error("LD scores are all zero")]
    ZeroScores,

    #[error("jackknife needs at least 2 groups, got {0}")]
    TooFewGroups(usize),

    #[error("genetic correlation needs positive heritability slopes ({slope_a:e}, {slope_b:e})")]
    NonpositiveHeritability { slope_a: f64, slope_b: f64 },

    #[error("sample is constant")]
    ConstantSample,

    #[error("sample too small: need at least {needed}, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: missing column {column}")]
    MissingColumn { path: PathBuf, column: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse failure class, used by the command-line front end to pick an exit
/// code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::EigenvalueBand { .. }
            | Error::DegeneratePanel(_)
            | Error::DegenerateDesign
            | Error::ZeroScores
            | Error::NonpositiveHeritability { .. }
            | Error::ConstantSample
            | Error::UnreachableRg { .. }
            | Error::ZeroEffectNonzeroH2 => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }
}
