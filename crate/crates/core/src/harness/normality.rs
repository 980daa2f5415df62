//! Normality statistics for Monte Carlo samples.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numeric::{mean, pairwise_sum, sample_variance};

/// Largest sample the Shapiro-Wilk approximation covers.
pub const SHAPIRO_WILK_MAX_N: usize = 5000;
/// Smallest sample `normality_summary` accepts.
pub const MIN_NORMALITY_N: usize = 8;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p_value: f64,
}

/// Shapiro-Wilk W with Royston's p-value approximation, `3 ≤ n ≤ 5000`.
pub fn shapiro_wilk(values: &[f64]) -> Result<ShapiroWilk> {
    let n = values.len();
    if n < 3 {
        return Err(Error::SampleTooSmall { needed: 3, got: n });
    }
    if n > SHAPIRO_WILK_MAX_N {
        return Err(Error::Config(format!(
            "Shapiro-Wilk covers at most {SHAPIRO_WILK_MAX_N} values, got {n}"
        )));
    }
    let mut x = values.to_vec();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("Shapiro-Wilk input must be finite".into()));
    }
    x.sort_by(f64::total_cmp);
    if x[n - 1] - x[0] < 1e-19 * x[0].abs().max(1.0) {
        return Err(Error::ConstantSample);
    }

    let half = n / 2;
    let an = n as f64;
    let mut a = vec![0.0; half];
    if n == 3 {
        a[0] = 0.5f64.sqrt();
    } else {
        let norm = std_normal();
        let m: Vec<f64> = (1..=half)
            .map(|i| -norm.inverse_cdf((i as f64 - 0.375) / (an + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
        const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let a1 = poly(&C1, rsn) + m[0] / ssumm2;
        let (first, fac) = if n > 5 {
            let a2 = poly(&C2, rsn) + m[1] / ssumm2;
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
            a[1] = a2;
            (2, fac)
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (1, fac)
        };
        a[0] = a1;
        for i in first..half {
            a[i] = m[i] / fac;
        }
    }

    // a[i] weights the i-th largest value positively and the i-th smallest
    // negatively.
    let range = x[n - 1] - x[0];
    let xs: Vec<f64> = x.iter().map(|v| v / range).collect();
    let terms: Vec<f64> = (0..half).map(|i| a[i] * (xs[n - 1 - i] - xs[i])).collect();
    let num = pairwise_sum(&terms);
    let xbar = mean(&xs);
    let dev: Vec<f64> = xs.iter().map(|v| (v - xbar) * (v - xbar)).collect();
    let ssq = pairwise_sum(&dev);
    let w = (num * num / ssq).min(1.0);

    let p_value = if n == 3 {
        const PI6: f64 = 6.0 / std::f64::consts::PI;
        const STQR: f64 = std::f64::consts::FRAC_PI_3;
        (PI6 * (w.sqrt().asin() - STQR)).clamp(0.0, 1.0)
    } else {
        let w1 = 1.0 - w;
        if w1 <= 0.0 {
            1.0
        } else {
            let mut y = w1.ln();
            let (mu, sigma) = if n <= 11 {
                let gamma = poly(&[-2.273, 0.459], an);
                if y >= gamma {
                    return Ok(ShapiroWilk { w, p_value: 1e-99 });
                }
                y = -(gamma - y).ln();
                (
                    poly(&[0.544, -0.39978, 0.025054, -6.714e-4], an),
                    poly(&[1.3822, -0.77857, 0.062767, -0.0020322], an).exp(),
                )
            } else {
                let xx = an.ln();
                (
                    poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], xx),
                    poly(&[-0.4803, -0.082676, 0.0030302], xx).exp(),
                )
            };
            let norm = Normal::new(mu, sigma).map_err(|e| Error::Config(e.to_string()))?;
            norm.sf(y)
        }
    };
    Ok(ShapiroWilk { w, p_value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AndersonDarling {
    /// Unadjusted `A²` with mean and sd estimated from the sample.
    pub a2: f64,
    /// `A²·(1 + 0.75/n + 2.25/n²)`.
    pub a2_adjusted: f64,
    pub p_value: f64,
}

pub fn anderson_darling(values: &[f64]) -> Result<AndersonDarling> {
    let n = values.len();
    if n < MIN_NORMALITY_N {
        return Err(Error::SampleTooSmall {
            needed: MIN_NORMALITY_N,
            got: n,
        });
    }
    let m = mean(values);
    let sd = sample_variance(values).sqrt();
    if !(sd > 0.0) {
        return Err(Error::ConstantSample);
    }
    let mut z: Vec<f64> = values.iter().map(|v| (v - m) / sd).collect();
    z.sort_by(f64::total_cmp);
    let norm = std_normal();
    let nf = n as f64;
    let terms: Vec<f64> = (0..n)
        .map(|i| {
            let lo = norm.cdf(z[i]).ln();
            let hi = norm.sf(z[n - 1 - i]).ln();
            (2.0 * i as f64 + 1.0) * (lo + hi)
        })
        .collect();
    let a2 = -nf - pairwise_sum(&terms) / nf;
    let adj = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p_value = if adj >= 0.6 {
        (1.2937 - 5.709 * adj + 0.0186 * adj * adj).exp()
    } else if adj >= 0.34 {
        (0.9177 - 4.279 * adj - 1.38 * adj * adj).exp()
    } else if adj >= 0.2 {
        1.0 - (-8.318 + 42.796 * adj - 59.938 * adj * adj).exp()
    } else {
        1.0 - (-13.436 + 101.14 * adj - 223.73 * adj * adj).exp()
    };
    Ok(AndersonDarling {
        a2,
        a2_adjusted: adj,
        p_value: p_value.clamp(0.0, 1.0),
    })
}

/// `(Φ⁻¹((i − 0.375)/(n + 0.25)), x_(i))` for the sorted sample.
pub fn qq_pairs(values: &[f64]) -> Vec<(f64, f64)> {
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let norm = std_normal();
    let nf = x.len() as f64;
    x.into_iter()
        .enumerate()
        .map(|(i, v)| (norm.inverse_cdf((i as f64 + 1.0 - 0.375) / (nf + 0.25)), v))
        .collect()
}

/// How to standardize before testing.
#[derive(Debug, Clone, PartialEq)]
pub enum Standardize {
    /// Sample mean and sd.
    Empirical,
    /// `(x_i − center) / scale_i`, one scale per value or one for all.
    Given { center: f64, scale: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub n: usize,
    pub w: f64,
    pub p_value: f64,
    pub anderson_darling: f64,
    pub anderson_darling_p: f64,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    #[serde(skip)]
    pub qq: Vec<(f64, f64)>,
}

pub fn normality_summary(values: &[f64], standardize: &Standardize) -> Result<NormalityReport> {
    let n = values.len();
    if n < MIN_NORMALITY_N {
        return Err(Error::SampleTooSmall {
            needed: MIN_NORMALITY_N,
            got: n,
        });
    }
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() == 1 {
        return Err(Error::ConstantSample);
    }
    if distinct.len() < MIN_NORMALITY_N {
        return Err(Error::SampleTooSmall {
            needed: MIN_NORMALITY_N,
            got: distinct.len(),
        });
    }
    let z: Vec<f64> = match standardize {
        Standardize::Empirical => {
            let m = mean(values);
            let sd = sample_variance(values).sqrt();
            values.iter().map(|v| (v - m) / sd).collect()
        }
        Standardize::Given { center, scale } => {
            if scale.len() != 1 && scale.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: scale.len(),
                });
            }
            if scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return Err(Error::Config("standardizing scales must be positive".into()));
            }
            values
                .iter()
                .enumerate()
                .map(|(i, v)| (v - center) / scale[if scale.len() == 1 { 0 } else { i }])
                .collect()
        }
    };
    let sw = shapiro_wilk(&z)?;
    let ad = anderson_darling(&z)?;
    let m = mean(&z);
    let central = |k: i32| pairwise_sum(&z.iter().map(|v| (v - m).powi(k)).collect::<Vec<_>>()) / n as f64;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    Ok(NormalityReport {
        n,
        w: sw.w,
        p_value: sw.p_value,
        anderson_darling: ad.a2,
        anderson_darling_p: ad.p_value,
        mean: m,
        sd: sample_variance(&z).sqrt(),
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        qq: qq_pairs(&z),
    })
}
