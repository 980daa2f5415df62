use ldsc_forge::ldsc::{fit_bivariate_with, fit_univariate, ols_with_intercept, FitMode};
use ldsc_forge::ldscores::{estimate_ld_scores, true_ld_scores, LdScoreVector, ScoreKind, ScoreSource};
use ldsc_forge::model::{block_sqrt, build_covariance, BlockStructure, BlockTemplate, CovarianceModel, CovarianceSpec};
use ldsc_forge::numeric::mean;
use ldsc_forge::rng::SeedStream;
use ldsc_forge::simgen::{
    genetic_correlation, noise_variance, sample_effect_pair, simulate_panel, EffectVector, GenotypeMode,
    TraitArchitecture,
};
use ldsc_forge::sumstats::{marginal_from_panel, read_sumstats, write_sumstats, SummaryStats, WKind, WVector};
use ldsc_forge::theory::{zeta2_bivariate, zeta2_univariate, TheoryInputs};
use proptest::prelude::*;

fn template() -> impl Strategy<Value = BlockTemplate> {
    prop_oneof![
        Just(BlockTemplate::Identity),
        (-0.9..0.9f64).prop_map(|rho| BlockTemplate::Ar1 { rho }),
        (0.0..0.8f64).prop_map(|rho| BlockTemplate::Exchangeable { rho }),
        (1usize..4, prop::collection::vec(-0.9..0.9f64, 1..3))
            .prop_map(|(segment, rhos)| BlockTemplate::Segmented { segment, rhos }),
    ]
}

fn blocks(max_blocks: usize) -> impl Strategy<Value = Vec<(usize, BlockTemplate)>> {
    prop::collection::vec((1usize..7, template()), 1..max_blocks)
}

fn model(entries: &[(usize, BlockTemplate)]) -> CovarianceModel {
    let structure = BlockStructure::new(entries.iter().map(|e| e.0).collect()).unwrap();
    let spec = CovarianceSpec::PerBlock(entries.iter().map(|e| e.1.clone()).collect());
    build_covariance(&structure, &spec).unwrap()
}

fn scores(values: Vec<f64>, kind: ScoreKind) -> LdScoreVector {
    LdScoreVector {
        values,
        kind,
        source: ScoreSource::True,
        panel_n: None,
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Regression inputs with enough spread in `x` to be well posed.
fn design() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(1.0..20.0f64, n),
            prop::collection::vec(-5.0..5.0f64, n),
        )
            .prop_filter("x needs spread", |(x, _)| {
                let m = mean(x);
                x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() > 1e-3
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dense_eigenvalues_are_block_union(entries in blocks(5)) {
        let cov = model(&entries);
        let mut dense: Vec<f64> = cov.to_dense().symmetric_eigenvalues().iter().copied().collect();
        let mut union = cov.eigenvalues();
        dense.sort_by(f64::total_cmp);
        union.sort_by(f64::total_cmp);
        prop_assert_eq!(dense.len(), union.len());
        for (d, u) in dense.iter().zip(&union) {
            prop_assert!((d - u).abs() < 1e-10, "{} vs {}", d, u);
        }
    }

    #[test]
    fn block_sqrt_squares_back(entries in blocks(5)) {
        let cov = model(&entries);
        let f = block_sqrt(&cov).unwrap();
        prop_assert!(f.reconstruction_error(&cov) < 1e-8);
    }

    #[test]
    fn block_list_permutation_permutes_model(entries in blocks(6), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..entries.len()).collect();
        let mut rng = SeedStream::new(seed).rng();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let cov = model(&entries);
        let reordered: Vec<_> = order.iter().map(|&k| entries[k].clone()).collect();
        let direct = model(&reordered);
        let permuted = cov.permuted(&order).unwrap();
        prop_assert_eq!(direct.blocks(), permuted.blocks());
    }

    #[test]
    fn simulation_is_deterministic_and_standardized(entries in blocks(4), seed in any::<u64>(), n in 3usize..40) {
        let cov = model(&entries);
        let f = block_sqrt(&cov).unwrap();
        let draw = || simulate_panel(&cov, &f, n, GenotypeMode::Gaussian, None, &mut SeedStream::new(seed).rng()).unwrap();
        let (x, y) = (draw(), draw());
        prop_assert_eq!(&x, &y);
        for j in 0..x.p() {
            let c = x.column(j);
            let m = mean(c);
            let v = c.iter().map(|z| (z - m) * (z - m)).sum::<f64>() / n as f64;
            prop_assert!(m.abs() < 1e-10 && (v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn effect_calibration_is_exact(
        p in 20usize..200,
        sparsity in 0.2..0.5f64,
        shared in 0.5..1.0f64,
        rg in -0.6..0.6f64,
        h2 in 0.05..0.95f64,
        seed in any::<u64>(),
    ) {
        let arch = TraitArchitecture { h2, sparsity, shared_fraction: shared, rg };
        let (a, b) = sample_effect_pair(&arch, p, &mut SeedStream::new(seed).rng()).unwrap();
        let (a, b) = (a.with_g2(h2), b.with_g2(h2));
        prop_assert!((genetic_correlation(&a, &b) - rg).abs() < 1e-12);
        let s2 = noise_variance(a.g2(), h2).unwrap();
        prop_assert!((a.g2() / (a.g2() + s2) - h2).abs() < 1e-12);
    }

    #[test]
    fn marginal_stats_are_linear(seed in any::<u64>(), n in 3usize..50, k in -4i32..4, c in -3.0..3.0f64) {
        let cov = build_covariance(&BlockStructure::new(vec![3, 2]).unwrap(), &CovarianceSpec::ar1(0.5)).unwrap();
        let f = block_sqrt(&cov).unwrap();
        let mut rng = SeedStream::new(seed).rng();
        let panel = simulate_panel(&cov, &f, n, GenotypeMode::Gaussian, None, &mut rng).unwrap();
        let stream = SeedStream::new(seed ^ 1);
        let y1: Vec<f64> = simulate_panel(&cov, &f, n, GenotypeMode::Gaussian, None, &mut stream.child("y", 1).rng()).unwrap().column(0).to_vec();
        let y2: Vec<f64> = simulate_panel(&cov, &f, n, GenotypeMode::Gaussian, None, &mut stream.child("y", 2).rng()).unwrap().column(1).to_vec();
        let s = |y: &[f64]| marginal_from_panel(&panel, y, "t").unwrap().beta;
        let sum: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
        for ((t, a), b) in s(&sum).iter().zip(s(&y1)).zip(s(&y2)) {
            prop_assert!((t - (a + b)).abs() < 1e-12);
        }
        let two = 2f64.powi(k);
        let scaled: Vec<f64> = y1.iter().map(|v| v * two).collect();
        for (t, a) in s(&scaled).iter().zip(s(&y1)) {
            prop_assert_eq!(*t, a * two);
        }
        let scaled: Vec<f64> = y1.iter().map(|v| v * c).collect();
        for (t, a) in s(&scaled).iter().zip(s(&y1)) {
            prop_assert!((t - a * c).abs() < 1e-12);
        }
    }

    #[test]
    fn sumstats_file_round_trip(beta in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..40), n in 2usize..1_000_000) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        let stats = SummaryStats::new(beta, n, "t").unwrap();
        write_sumstats(&stats, &path).unwrap();
        let back = read_sumstats(&path).unwrap();
        prop_assert_eq!(back.beta, stats.beta);
        prop_assert_eq!(back.n, n);
    }

    #[test]
    fn estimated_within_scores_at_least_one(entries in blocks(4), seed in any::<u64>(), n in 3usize..30) {
        let cov = model(&entries);
        let f = block_sqrt(&cov).unwrap();
        let panel = simulate_panel(&cov, &f, n, GenotypeMode::Gaussian, None, &mut SeedStream::new(seed).rng()).unwrap();
        let est = estimate_ld_scores(&panel, None, cov.structure()).unwrap();
        prop_assert!(est.values.iter().all(|l| *l >= 1.0 - 1e-12));
        let truth = true_ld_scores(&cov, None).unwrap();
        prop_assert!(truth.values.iter().all(|l| *l >= 1.0 - 1e-12));
    }

    #[test]
    fn fit_scale_equivariance((x, y) in design(), k in -6i32..6, c in 0.01..100.0f64) {
        let l = scores(x, ScoreKind::Within);
        for mode in [FitMode::Univariate, FitMode::Bivariate] {
            let fit = |w: &[f64]| match mode {
                FitMode::Univariate => fit_univariate(&WVector { values: w.to_vec(), kind: WKind::Squared }, &l).unwrap(),
                FitMode::Bivariate => fit_bivariate_with(&WVector { values: w.to_vec(), kind: WKind::Product }, &l, false).unwrap(),
            };
            let base = fit(&y).slope;
            let two = 2f64.powi(k);
            let exact: Vec<f64> = y.iter().map(|v| v * two).collect();
            prop_assert_eq!(fit(&exact).slope, base * two);
            let general: Vec<f64> = y.iter().map(|v| v * c).collect();
            prop_assert!(close(fit(&general).slope, base * c, 1e-12));
        }
    }

    #[test]
    fn univariate_slope_ignores_translation((x, y) in design(), shift in -10.0..10.0f64) {
        let l = scores(x, ScoreKind::Within);
        let w = |v: Vec<f64>| WVector { values: v, kind: WKind::Squared };
        let base = fit_univariate(&w(y.clone()), &l).unwrap();
        let moved = fit_univariate(&w(y.iter().map(|v| v + shift).collect()), &l).unwrap();
        prop_assert!((moved.slope - base.slope).abs() <= 1e-12 * (1.0 + base.slope.abs()));
        prop_assert!((moved.intercept.unwrap() - base.intercept.unwrap() - shift).abs() < 1e-10);
    }

    #[test]
    fn fit_permutation_invariance((x, y) in design(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..x.len()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut SeedStream::new(seed).rng());
        let px: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let py: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let (s0, i0) = ols_with_intercept(&x, &y).unwrap();
        let (s1, i1) = ols_with_intercept(&px, &py).unwrap();
        prop_assert!(close(s0, s1, 1e-12) || (s0 - s1).abs() < 1e-15);
        prop_assert!((i0 - i1).abs() < 1e-12 * (1.0 + i0.abs()));
        let w = |v: &[f64]| WVector { values: v.to_vec(), kind: WKind::Product };
        let s0 = fit_bivariate_with(&w(&y), &scores(x.clone(), ScoreKind::Cross), false).unwrap().slope;
        let s1 = fit_bivariate_with(&w(&py), &scores(px, ScoreKind::Cross), false).unwrap().slope;
        prop_assert!(close(s0, s1, 1e-12) || (s0 - s1).abs() < 1e-15);
    }

    #[test]
    fn residuals_orthogonal_to_centered_scores((x, y) in design()) {
        let (slope, intercept) = ols_with_intercept(&x, &y).unwrap();
        let mx = mean(&x);
        let dot: f64 = x.iter().zip(&y).map(|(xi, yi)| (xi - mx) * (yi - intercept - slope * xi)).sum();
        prop_assert!(dot.abs() < 1e-10, "{}", dot);
    }

    #[test]
    fn zeta_invariant_under_block_permutation(entries in blocks(5), seed in any::<u64>(), shift in -3.0..3.0f64) {
        let cov_a = model(&entries);
        let cov_b = model(&entries.iter().map(|(s, _)| (*s, BlockTemplate::Ar1 { rho: 0.3 })).collect::<Vec<_>>());
        let p = cov_a.p();
        let l_a = true_ld_scores(&cov_a, None).unwrap();
        prop_assume!(p >= 4 && l_a.max() - l_a.min() > 0.1);
        let arch = TraitArchitecture { h2: 0.4, sparsity: 1.0, shared_fraction: 1.0, rg: 0.5 };
        let (alpha, beta) = sample_effect_pair(&arch, p, &mut SeedStream::new(seed).rng()).unwrap();
        let l_ab = true_ld_scores(&cov_a, Some(&cov_b)).unwrap();
        let zetas = |ca: &CovarianceModel, cb: &CovarianceModel, a: &EffectVector, b: &EffectVector, la: &LdScoreVector, lab: &LdScoreVector| {
            let base = TheoryInputs {
                cov_a: ca, cov_b: None, alpha: a, beta: None,
                sigma_eps2_a: 0.6, sigma_eps2_b: None,
                n_a: 300, n_b: None, n_ra: None, n_rb: None, scores: la,
            };
            let uni = zeta2_univariate(&base).unwrap();
            let bi = zeta2_bivariate(&TheoryInputs {
                cov_b: Some(cb), beta: Some(b), sigma_eps2_b: Some(0.6), n_b: Some(200), scores: lab, ..base
            }).unwrap();
            (uni, bi)
        };
        let (u0, b0) = zetas(&cov_a, &cov_b, &alpha, &beta, &l_a, &l_ab);

        let mut order: Vec<usize> = (0..entries.len()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut SeedStream::new(seed ^ 7).rng());
        let s = cov_a.structure();
        let perm = |v: &[f64]| s.permute_values(v, &order).unwrap();
        let (pa, pb) = (cov_a.permuted(&order).unwrap(), cov_b.permuted(&order).unwrap());
        let (alpha_p, beta_p) = (EffectVector::new(perm(alpha.values())), EffectVector::new(perm(beta.values())));
        let la_p = scores(perm(&l_a.values), ScoreKind::Within);
        let lab_p = scores(perm(&l_ab.values), ScoreKind::Cross);
        let (u1, b1) = zetas(&pa, &pb, &alpha_p, &beta_p, &la_p, &lab_p);
        prop_assert!(close(u0, u1, 1e-10) && close(b0, b1, 1e-10), "{} {} {} {}", u0, u1, b0, b1);

        let shifted = scores(l_a.values.iter().map(|v| v + shift).collect(), ScoreKind::Within);
        let (u2, _) = zetas(&cov_a, &cov_b, &alpha, &beta, &shifted, &l_ab);
        prop_assert!(close(u0, u2, 1e-10), "{} {}", u0, u2);
    }
}
