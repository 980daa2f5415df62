//! LD score regression fits and block-jackknife standard errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ldscores::LdScoreVector;
use crate::model::BlockStructure;
use crate::numeric::{mean, pairwise_dot, pairwise_sum};
use crate::sumstats::WVector;

/// Jackknife group count used when none is given.
pub const DEFAULT_JACKKNIFE_GROUPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    Univariate,
    Bivariate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdscFit {
    pub mode: FitMode,
    pub slope: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    pub p: usize,
    pub g_hat: f64,
    pub se_jackknife: Option<f64>,
}

impl LdscFit {
    fn new(mode: FitMode, slope: f64, intercept: Option<f64>, p: usize) -> Self {
        LdscFit {
            mode,
            slope,
            intercept,
            p,
            g_hat: p as f64 * slope,
            se_jackknife: None,
        }
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.se_jackknife = Some(se);
        self
    }
}

fn check_lengths(w: &[f64], l: &[f64]) -> Result<()> {
    if w.len() != l.len() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: l.len(),
        });
    }
    if w.is_empty() {
        return Err(Error::ZeroScores);
    }
    Ok(())
}

/// Centered OLS `(slope, intercept)` of `y` on `x`.
pub fn ols_with_intercept(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    check_lengths(y, x)?;
    let (mx, my) = (mean(x), mean(y));
    let cx: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let cy: Vec<f64> = y.iter().map(|v| v - my).collect();
    let sxx = pairwise_dot(&cx, &cx);
    if !(sxx >= 1e-12 * x.len() as f64) {
        return Err(Error::DegenerateDesign);
    }
    let slope = pairwise_dot(&cx, &cy) / sxx;
    Ok((slope, my - slope * mx))
}

/// OLS of `y` on `x` through the origin.
pub fn ols_through_origin(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(y, x)?;
    let sxx = pairwise_dot(x, x);
    if !(sxx > 0.0) {
        return Err(Error::ZeroScores);
    }
    Ok(pairwise_dot(x, y) / sxx)
}

pub fn fit_univariate(w: &WVector, scores: &LdScoreVector) -> Result<LdscFit> {
    let (slope, intercept) = ols_with_intercept(&scores.values, &w.values)?;
    Ok(LdscFit::new(FitMode::Univariate, slope, Some(intercept), w.len()))
}

/// No-intercept fit of `ŵ_ab` on cross (or within) scores.
pub fn fit_bivariate(w: &WVector, scores: &LdScoreVector) -> Result<LdscFit> {
    fit_bivariate_with(w, scores, false)
}

/// Bivariate fit with an optional free intercept, for overlapping cohorts.
pub fn fit_bivariate_with(w: &WVector, scores: &LdScoreVector, intercept: bool) -> Result<LdscFit> {
    if intercept {
        let (slope, b) = ols_with_intercept(&scores.values, &w.values)?;
        Ok(LdscFit::new(FitMode::Bivariate, slope, Some(b), w.len()))
    } else {
        let slope = ols_through_origin(&scores.values, &w.values)?;
        Ok(LdscFit::new(FitMode::Bivariate, slope, None, w.len()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regression {
    WithIntercept,
    ThroughOrigin,
}

impl Regression {
    pub fn for_fit(mode: FitMode, bivariate_intercept: bool) -> Self {
        match (mode, bivariate_intercept) {
            (FitMode::Univariate, _) | (FitMode::Bivariate, true) => Regression::WithIntercept,
            (FitMode::Bivariate, false) => Regression::ThroughOrigin,
        }
    }
}

/// Contiguous groups of whole blocks: `G = min(n_groups, p_b)` groups, with
/// block counts differing by at most one. Returns variant ranges.
pub fn jackknife_groups(structure: &BlockStructure, n_groups: usize) -> Result<Vec<std::ops::Range<usize>>> {
    let pb = structure.n_blocks();
    let g = n_groups.min(pb);
    if g < 2 {
        return Err(Error::TooFewGroups(g));
    }
    Ok((0..g)
        .map(|i| {
            let first = i * pb / g;
            let last = (i + 1) * pb / g;
            let start = structure.offsets()[first];
            let end = if last == pb {
                structure.p()
            } else {
                structure.offsets()[last]
            };
            start..end
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
}

impl Moments {
    fn of(x: &[f64], y: &[f64]) -> Self {
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        Moments {
            n: x.len() as f64,
            sx: pairwise_sum(x),
            sy: pairwise_sum(y),
            sxx: pairwise_sum(&xx),
            sxy: pairwise_dot(x, y),
        }
    }

    fn minus(&self, o: &Moments) -> Moments {
        Moments {
            n: self.n - o.n,
            sx: self.sx - o.sx,
            sy: self.sy - o.sy,
            sxx: self.sxx - o.sxx,
            sxy: self.sxy - o.sxy,
        }
    }

    fn slope(&self, reg: Regression) -> Result<f64> {
        match reg {
            Regression::WithIntercept => {
                let sxx = self.sxx - self.sx * self.sx / self.n;
                if !(sxx >= 1e-12 * self.n) {
                    return Err(Error::DegenerateDesign);
                }
                Ok((self.sxy - self.sx * self.sy / self.n) / sxx)
            }
            Regression::ThroughOrigin => {
                if !(self.sxx > 0.0) {
                    return Err(Error::ZeroScores);
                }
                Ok(self.sxy / self.sxx)
            }
        }
    }
}

/// Delete-a-group jackknife slopes.
pub fn jackknife_slopes(
    w: &WVector,
    scores: &LdScoreVector,
    structure: &BlockStructure,
    n_groups: usize,
    reg: Regression,
) -> Result<Vec<f64>> {
    check_lengths(&w.values, &scores.values)?;
    if structure.p() != w.len() {
        return Err(Error::DimensionMismatch {
            what: "jackknife structure",
            expected: w.len(),
            found: structure.p(),
        });
    }
    let groups = jackknife_groups(structure, n_groups)?;
    // Shift by global means first; the centered slope is shift-invariant and
    // the moment differences stay well conditioned. The through-origin slope
    // is not, so it works on raw values.
    let (x, y): (Vec<f64>, Vec<f64>) = match reg {
        Regression::WithIntercept => {
            let (mx, my) = (mean(&scores.values), mean(&w.values));
            (
                scores.values.iter().map(|v| v - mx).collect(),
                w.values.iter().map(|v| v - my).collect(),
            )
        }
        Regression::ThroughOrigin => (scores.values.clone(), w.values.clone()),
    };
    let parts: Vec<Moments> = groups.iter().map(|r| Moments::of(&x[r.clone()], &y[r.clone()])).collect();
    let total = Moments::of(&x, &y);
    parts.iter().map(|m| total.minus(m).slope(reg)).collect()
}

/// `sqrt((G−1)/G · Σ (θ_g − θ̄)²)` over leave-one-group-out slopes.
pub fn block_jackknife(
    w: &WVector,
    scores: &LdScoreVector,
    structure: &BlockStructure,
    n_groups: usize,
    reg: Regression,
) -> Result<f64> {
    let thetas = jackknife_slopes(w, scores, structure, n_groups, reg)?;
    Ok(jackknife_se(&thetas))
}

pub fn jackknife_se(thetas: &[f64]) -> f64 {
    let g = thetas.len() as f64;
    let m = mean(thetas);
    let sq: Vec<f64> = thetas.iter().map(|t| (t - m) * (t - m)).collect();
    ((g - 1.0) / g * pairwise_sum(&sq)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Heritability {
    pub value: f64,
    /// Set when the slope is negative; the value is reported unclamped.
    pub negative_variance: bool,
}

/// `h² = p·slope` for a normalized phenotype, else `ĝ²/(ĝ² + σ̂²_ε)`.
pub fn derive_heritability(fit: &LdscFit, sigma_eps2_hat: Option<f64>) -> Result<Heritability> {
    if fit.mode != FitMode::Univariate {
        return Err(Error::ModeMismatch("heritability needs a univariate fit".into()));
    }
    let value = match sigma_eps2_hat {
        None => fit.g_hat,
        Some(s) => fit.g_hat / (fit.g_hat + s),
    };
    Ok(Heritability {
        value,
        negative_variance: fit.slope < 0.0,
    })
}

/// `φ̂ = slope_ab / sqrt(slope_a · slope_b)`.
pub fn derive_genetic_correlation(fit_ab: &LdscFit, fit_a: &LdscFit, fit_b: &LdscFit) -> Result<f64> {
    if !(fit_a.slope > 0.0 && fit_b.slope > 0.0) {
        return Err(Error::NonpositiveHeritability {
            slope_a: fit_a.slope,
            slope_b: fit_b.slope,
        });
    }
    Ok(fit_ab.slope / (fit_a.slope * fit_b.slope).sqrt())
}
