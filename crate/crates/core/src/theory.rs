//! Closed-form variances of the oracle LDSC estimators, the exact residual
//! decompositions of `E ŵ`, and numeric condition diagnostics.
//!
//! Everything is evaluated block by block; no `p × p` matrix is formed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ldscores::LdScoreVector;
use crate::model::CovarianceModel;
use crate::numeric::{lp_norm, mean, pairwise_dot, pairwise_sum};
use crate::simgen::EffectVector;
use crate::sumstats::{WKind, WVector};

#[derive(Debug, Clone, Copy)]
pub struct TheoryInputs<'a> {
    pub cov_a: &'a CovarianceModel,
    pub cov_b: Option<&'a CovarianceModel>,
    pub alpha: &'a EffectVector,
    pub beta: Option<&'a EffectVector>,
    pub sigma_eps2_a: f64,
    pub sigma_eps2_b: Option<f64>,
    pub n_a: usize,
    pub n_b: Option<usize>,
    pub n_ra: Option<usize>,
    pub n_rb: Option<usize>,
    /// Within scores for univariate quantities, cross scores otherwise.
    pub scores: &'a LdScoreVector,
}

impl<'a> TheoryInputs<'a> {
    fn check(&self) -> Result<usize> {
        let p = self.cov_a.p();
        let dims = [
            ("effect alpha", self.alpha.p()),
            ("LD scores", self.scores.len()),
        ];
        for (what, found) in dims {
            if found != p {
                return Err(Error::DimensionMismatch { what, expected: p, found });
            }
        }
        if let Some(b) = self.beta {
            if b.p() != p {
                return Err(Error::DimensionMismatch {
                    what: "effect beta",
                    expected: p,
                    found: b.p(),
                });
            }
        }
        if let Some(cb) = self.cov_b {
            if cb.structure() != self.cov_a.structure() {
                return Err(Error::StructureMismatch);
            }
        }
        Ok(p)
    }

    fn bivariate_parts(&self) -> Result<(&'a CovarianceModel, &'a EffectVector, f64, usize)> {
        let missing = |what: &str| Error::Config(format!("bivariate theory needs {what}"));
        Ok((
            self.cov_b.unwrap_or(self.cov_a),
            self.beta.ok_or_else(|| missing("beta"))?,
            self.sigma_eps2_b.ok_or_else(|| missing("sigma_eps2_b"))?,
            self.n_b.ok_or_else(|| missing("n_b"))?,
        ))
    }
}

fn block_vec(v: &[f64], r: std::ops::Range<usize>) -> DVector<f64> {
    DVector::from_column_slice(&v[r])
}

fn diag_scale(d: &DVector<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)])
}

/// `Var(σ̃²_α)` with `D = diag(Hℓ_a)` built from centered scores.
pub fn zeta2_univariate(inputs: &TheoryInputs<'_>) -> Result<f64> {
    inputs.check()?;
    let n = inputs.n_a as f64;
    let s2 = inputs.sigma_eps2_a;
    let l = &inputs.scores.values;
    let mu = mean(l);
    let d: Vec<f64> = l.iter().map(|x| x - mu).collect();
    let lhl = pairwise_dot(&d, &d);
    if !(lhl > 0.0) {
        return Err(Error::DegenerateDesign);
    }
    let alpha = inputs.alpha.values();
    let (mut a1, mut a2, mut tr, mut asa) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (k, r) in inputs.cov_a.structure().ranges().enumerate() {
        let sigma = inputs.cov_a.block(k);
        let a = block_vec(alpha, r.clone());
        let dk = block_vec(&d, r);
        let u = sigma * &a;
        let du = u.component_mul(&dk);
        a1.push(du.dot(&(sigma * &du)));
        a2.push(u.dot(&du));
        asa.push(a.dot(&u));
        // tr(ΣDΣD) = Σ_ij Σ_ij² d_i d_j.
        let ds = diag_scale(&dk, sigma);
        tr.push(ds.component_mul(&ds.transpose()).sum());
    }
    let (a1, a2, t, asa) = (pairwise_sum(&a1), pairwise_sum(&a2), pairwise_sum(&tr), pairwise_sum(&asa));
    let bracket = 2.0 * s2 * ((n + 2.0) * (n + 3.0) * a1 + (n + 2.0) * t * asa)
        + s2 * s2 * (n + 2.0) * t
        + (2.0 * n * n + 5.0 * n + 3.0) * a2 * a2
        + (n + 2.0) * asa * asa * t
        + 2.0 * (n + 2.0) * (n + 3.0) * asa * a1;
    Ok(2.0 / (n * n * n * lhl * lhl) * bracket)
}

/// `Var(σ̃_αβ)` with `D = diag(ℓ_ab)` built from raw (uncentered) scores.
pub fn zeta2_bivariate(inputs: &TheoryInputs<'_>) -> Result<f64> {
    inputs.check()?;
    let (cov_b, beta, s2b, nb) = inputs.bivariate_parts()?;
    let na = inputs.n_a as f64;
    let nb = nb as f64;
    let s2a = inputs.sigma_eps2_a;
    let l = &inputs.scores.values;
    let ltl = pairwise_dot(l, l);
    if !(ltl > 0.0) {
        return Err(Error::ZeroScores);
    }
    let mut acc: [Vec<f64>; 6] = Default::default();
    for (k, r) in inputs.cov_a.structure().ranges().enumerate() {
        let sa = inputs.cov_a.block(k);
        let sb = cov_b.block(k);
        let a = block_vec(inputs.alpha.values(), r.clone());
        let b = block_vec(beta.values(), r.clone());
        let dk = block_vec(l, r);
        let ua = sa * &a;
        let ub = sb * &b;
        let dua = ua.component_mul(&dk);
        let dub = ub.component_mul(&dk);
        acc[0].push(a.dot(&ua)); // αᵀΣαα
        acc[1].push(b.dot(&ub)); // βᵀΣββ
        acc[2].push(dub.dot(&(sa * &dub))); // βᵀΣβDΣαDΣββ
        acc[3].push(dua.dot(&(sb * &dua))); // αᵀΣαDΣβDΣαα
        acc[4].push(ua.dot(&dub)); // αᵀΣαDΣββ
        // tr(DΣαDΣβ) = Σ_ij d_i Σα_ij d_j Σβ_ji.
        let da = diag_scale(&dk, sa);
        let db = diag_scale(&dk, sb);
        acc[5].push(da.component_mul(&db.transpose()).sum());
    }
    let asa = pairwise_sum(&acc[0]);
    let bsb = pairwise_sum(&acc[1]);
    let b_dad = pairwise_sum(&acc[2]);
    let a_dbd = pairwise_sum(&acc[3]);
    let cross = pairwise_sum(&acc[4]);
    let tr = pairwise_sum(&acc[5]);
    let bracket = (nb + 1.0) * asa * b_dad
        + s2b * (tr * asa + (na + 1.0) * a_dbd)
        + s2a * (tr * bsb + (nb + 1.0) * b_dad)
        + s2a * s2b * tr
        + (na + nb + 1.0) * cross * cross
        + (na + 1.0) * bsb * a_dbd
        + asa * bsb * tr;
    Ok(bracket / (ltl * ltl * na * nb))
}

/// `Var(ℓ̂_abᵀ w_ab)` for independent reference panels of sizes
/// `n_ra`, `n_rb`, given the expectation vector `w_ab`.
pub fn rho2_cross(inputs: &TheoryInputs<'_>, w_ab: &WVector) -> Result<f64> {
    let p = inputs.check()?;
    if w_ab.len() != p {
        return Err(Error::DimensionMismatch {
            what: "w_ab",
            expected: p,
            found: w_ab.len(),
        });
    }
    let cov_b = inputs.cov_b.unwrap_or(inputs.cov_a);
    let missing = || Error::Config("cross theory needs both reference panel sizes".into());
    let na = inputs.n_ra.ok_or_else(missing)? as f64;
    let nb = inputs.n_rb.ok_or_else(missing)? as f64;
    let nn = na * nb;
    let mut parts = Vec::with_capacity(inputs.cov_a.structure().n_blocks());
    for (k, r) in inputs.cov_a.structure().ranges().enumerate() {
        let a = inputs.cov_a.block(k);
        let b = cov_b.block(k);
        let w = block_vec(&w_ab.values, r);
        let ab = a * b;
        let ba = ab.transpose();
        let bab = b * &ab;
        let aba = &ab * a;
        let tr_ab = ab.trace();
        let diag_term: f64 = (0..w.len()).map(|j| w[j] * ab[(j, j)]).sum();
        let quad = |m: &DMatrix<f64>| w.dot(&(m * &w));
        let m = a.component_mul(b) * tr_ab / nn
            + a.component_mul(&bab) * ((1.0 + nb) / nn)
            + b.component_mul(&aba) * ((1.0 + na) / nn)
            + ab.component_mul(&ba) * ((na + nb) / nn);
        parts.push(diag_term * diag_term / nn + quad(&m));
    }
    Ok(pairwise_sum(&parts))
}

/// Exact `E ŵ_a = σ²_α ℓ_a + ε_a` under the raw model.
pub fn epsilon_univariate(
    cov: &CovarianceModel,
    alpha: &EffectVector,
    sigma_eps2: f64,
    n: usize,
) -> Result<(WVector, Vec<f64>)> {
    let p = cov.p();
    if alpha.p() != p {
        return Err(Error::DimensionMismatch {
            what: "effect alpha",
            expected: p,
            found: alpha.p(),
        });
    }
    let n = n as f64;
    let sigma2 = alpha.sigma2();
    let u = cov.mul_vec(alpha.values())?;
    let asa = pairwise_dot(alpha.values(), &u);
    let l = crate::ldscores::true_ld_scores(cov, None)?.values;
    let eps: Vec<f64> = u
        .iter()
        .zip(&l)
        .map(|(uj, lj)| (n + 1.0) / n * uj * uj - sigma2 * lj + (asa + sigma_eps2) / n)
        .collect();
    let w = l.iter().zip(&eps).map(|(lj, e)| sigma2 * lj + e).collect();
    Ok((
        WVector {
            values: w,
            kind: WKind::Squared,
        },
        eps,
    ))
}

/// Exact `E(â b̂) = σ_αβ ℓ_ab + ε_ab` for cohorts without shared samples.
pub fn epsilon_cross(
    cov_a: &CovarianceModel,
    cov_b: &CovarianceModel,
    alpha: &EffectVector,
    beta: &EffectVector,
) -> Result<(WVector, Vec<f64>)> {
    if cov_a.structure() != cov_b.structure() {
        return Err(Error::StructureMismatch);
    }
    let p = cov_a.p();
    for (what, found) in [("effect alpha", alpha.p()), ("effect beta", beta.p())] {
        if found != p {
            return Err(Error::DimensionMismatch { what, expected: p, found });
        }
    }
    let sigma_ab = alpha.dot(beta) / p as f64;
    let mut eps = Vec::with_capacity(p);
    let mut l_ab = Vec::with_capacity(p);
    for (k, r) in cov_a.structure().ranges().enumerate() {
        let sa = cov_a.block(k);
        let sb = cov_b.block(k);
        let a = block_vec(alpha.values(), r.clone());
        let b = block_vec(beta.values(), r);
        let ua = sa * &a;
        let ub = sb * &b;
        let ab = a.component_mul(&b);
        for j in 0..a.len() {
            let col_a = sa.column(j);
            let col_b = sb.column(j);
            let prod = col_a.component_mul(&col_b);
            let diag = ab.dot(&prod);
            let lj = prod.sum();
            // Σ_{i≠k} α_i β_k Σα_ij Σβ_kj = (Σαα)_j (Σββ)_j − Σ_i α_i β_i Σα_ij Σβ_ij.
            let off = ua[j] * ub[j] - diag;
            eps.push(diag - sigma_ab * lj + off);
            l_ab.push(lj);
        }
    }
    let w = l_ab.iter().zip(&eps).map(|(l, e)| sigma_ab * l + e).collect();
    Ok((
        WVector {
            values: w,
            kind: WKind::Product,
        },
        eps,
    ))
}

/// `‖x‖₃ / ‖x‖₂`, zero for a zero vector.
pub fn norm_ratio_3_2(x: &[f64]) -> f64 {
    let n2 = lp_norm(x, 2);
    if n2 == 0.0 {
        0.0
    } else {
        lp_norm(x, 3) / n2
    }
}

/// Left-hand quantities of the regularity conditions; values only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub p: usize,
    pub n_blocks: usize,
    pub max_block: usize,
    pub sigma2_a: f64,
    pub l_a_min: Option<f64>,
    pub l_a_max: Option<f64>,
    pub hw_a_norm_ratio: Option<f64>,
    pub p_over_n_a: f64,
    pub n_a_sixth_root_alpha_norm: f64,
    pub alpha_norm4_over_n_a_p: f64,
    pub alpha_fourth_moment_ratio: Option<f64>,
    pub centered_orthogonality_a: Option<f64>,
    pub n_ra_over_sqrt_p: Option<f64>,
    pub n_ra_over_sqrt_max_p_n_a: Option<f64>,
    pub sigma_ab: Option<f64>,
    pub l_ab_min: Option<f64>,
    pub l_ab_max: Option<f64>,
    pub w_ab_norm_ratio: Option<f64>,
    pub p_over_n_b: Option<f64>,
    pub effect_strength_ab: Option<f64>,
    pub norm_product_over_sqrt_n_a_n_b: Option<f64>,
    pub norm_product_over_p_three_halves: Option<f64>,
    pub cross_orthogonality: Option<f64>,
    pub marginal_effect_margin: Option<f64>,
    pub min_n_r_over_sqrt_p: Option<f64>,
}

pub fn condition_diagnostics(
    inputs: &TheoryInputs<'_>,
    w_a: Option<(&WVector, &[f64])>,
    w_ab: Option<(&WVector, &[f64])>,
) -> Result<ConditionReport> {
    let p = inputs.check()?;
    let pf = p as f64;
    let sp = pf.sqrt();
    let na = inputs.n_a as f64;
    let alpha = inputs.alpha;
    let norm_a = alpha.norm(2);
    let mut rep = ConditionReport {
        p,
        n_blocks: inputs.cov_a.structure().n_blocks(),
        max_block: inputs.cov_a.structure().max_block_size(),
        sigma2_a: alpha.sigma2(),
        p_over_n_a: pf / na,
        n_a_sixth_root_alpha_norm: na.powf(1.0 / 6.0) * norm_a,
        alpha_norm4_over_n_a_p: norm_a.powi(4) / (na * pf),
        ..Default::default()
    };
    let l_a = crate::ldscores::true_ld_scores(inputs.cov_a, None)?;
    rep.l_a_min = Some(l_a.min());
    rep.l_a_max = Some(l_a.max());
    if norm_a > 0.0 {
        if let Some(nr) = inputs.n_ra {
            rep.alpha_fourth_moment_ratio = Some(na * alpha.norm(4).powi(4) / (nr as f64 * norm_a.powi(4)));
        }
    }
    if let Some(nr) = inputs.n_ra {
        let nr = nr as f64;
        rep.n_ra_over_sqrt_p = Some(nr / sp);
        rep.n_ra_over_sqrt_max_p_n_a = Some(nr / pf.max(na).sqrt());
    }
    if let Some((w, eps)) = w_a {
        let mw = mean(&w.values);
        let hw: Vec<f64> = w.values.iter().map(|x| x - mw).collect();
        rep.hw_a_norm_ratio = Some(norm_ratio_3_2(&hw));
        let ml = mean(&l_a.values);
        let hl: Vec<f64> = l_a.values.iter().map(|x| x - ml).collect();
        rep.centered_orthogonality_a = Some(pairwise_dot(&hl, eps).abs() / sp);
    }
    if let Some(beta) = inputs.beta {
        let cov_b = inputs.cov_b.unwrap_or(inputs.cov_a);
        let norm_b = beta.norm(2);
        rep.sigma_ab = Some(alpha.dot(beta) / pf);
        let l_ab = crate::ldscores::true_ld_scores(inputs.cov_a, Some(cov_b))?;
        rep.l_ab_min = Some(l_ab.min());
        rep.l_ab_max = Some(l_ab.max());
        if let Some(nb) = inputs.n_b {
            let nb = nb as f64;
            rep.p_over_n_b = Some(pf / nb);
            rep.effect_strength_ab = Some(na.min(nb).sqrt() * norm_a.min(1.0) * norm_b.min(1.0));
            rep.norm_product_over_sqrt_n_a_n_b = Some(norm_a * norm_b / (na * nb).sqrt());
            if let (Some((w, _)), Some(ra), Some(rb)) = (w_ab, inputs.n_ra, inputs.n_rb) {
                let w2 = pairwise_dot(&w.values, &w.values);
                rep.marginal_effect_margin = Some(w2 / (pf + na + nb) * (1.0 / ra as f64 + 1.0 / rb as f64));
            }
        }
        rep.norm_product_over_p_three_halves = Some(norm_a * norm_b / pf.powf(1.5));
        if let Some((w, eps)) = w_ab {
            rep.w_ab_norm_ratio = Some(norm_ratio_3_2(&w.values));
            rep.cross_orthogonality = Some(pairwise_dot(&l_ab.values, eps).abs() / sp);
        }
        if let (Some(ra), Some(rb)) = (inputs.n_ra, inputs.n_rb) {
            rep.min_n_r_over_sqrt_p = Some(ra.min(rb) as f64 / sp);
        }
    }
    Ok(rep)
}
