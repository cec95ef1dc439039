//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Criterion 2's stated shape claims are reported FAIL by construction: the
//! literal right-side slope/floor/window/envelope statements are false for
//! positive coefficient tails in the bracket-driven regime (see the
//! documented counterexample in the oracle module tests); their corrected
//! provable forms, and every other listed inequality, are asserted at zero
//! violations.

mod common;

use common::{adaptive_simpson, mean_stderr, median, variance};
use cvasym_core::density::{make_family, DensityModel, Family};
use cvasym_core::grid::GridFunction;
use cvasym_core::harness::experiments::run_experiment;
use cvasym_core::harness::{
    summarize, to_csv, ExperimentConfig, ExperimentKind, GroupBy, NtRule,
};
use cvasym_core::limit::monotone_correct;
use cvasym_core::linalg::sym_eigen;
use cvasym_core::oracle::scaling;
use cvasym_core::series::{empirical_coeffs, exact_excess_risk, Sample};
use cvasym_core::splits::{holdout_crit, make_scheme, rescaled_processes};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {}{}",
        if pass { "PASS" } else { "FAIL" },
        if detail.is_empty() {
            String::new()
        } else {
            format!(" — {detail}")
        }
    );
}

fn budget(criterion: &str, start: Instant, limit_s: u64) {
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < limit_s as f64,
        "criterion {criterion} exceeded its {limit_s}s budget: {elapsed:.1}s"
    );
}

#[test]
fn criterion_01_exact_identity_suite() {
    let start = Instant::now();
    let tol = 1e-10;

    // θ̂_0 = 1 and HO(0) = -1, exactly
    let geo = make_family(&Family::Geometric { ratio: 1.0 / 3.0 }).unwrap();
    let model = DensityModel::build(geo.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let xs = model.sample(200, &mut rng).unwrap();
    let sample = Sample::new(xs, 101).unwrap();
    let scheme = make_scheme(200, 160, 4, &mut rng).unwrap();
    let coeffs = empirical_coeffs(&sample, &scheme.folds()[0].train, 12).unwrap();
    assert_eq!(coeffs.theta_hat(0), 1.0);
    assert_eq!(
        holdout_crit(&sample, &scheme.folds()[0].train, 0).unwrap(),
        -1.0
    );

    // Parseval risk identity against quadrature
    for (fam, k) in [
        (Family::Geometric { ratio: 1.0 / 3.0 }, 8u64),
        (
            Family::Plateau {
                height: 1.0 / 64.0,
                width: 6,
            },
            6u64,
        ),
    ] {
        let seq = make_family(&fam).unwrap();
        let m = DensityModel::build(seq.clone()).unwrap();
        let xs = m.sample_seeded(150, 7).unwrap();
        let s150 = Sample::new(xs, 7).unwrap();
        let idx: Vec<usize> = (0..150).collect();
        let c = empirical_coeffs(&s150, &idx, k).unwrap();
        let exact = exact_excess_risk(&c, &seq, k);
        let quad = adaptive_simpson(
            &|x| {
                let d = c.estimator_at(k, x) - seq.density_eval(x, 1e-13).unwrap();
                d * d
            },
            0.0,
            1.0,
            1e-12,
        );
        assert!((exact - quad).abs() < tol, "{fam:?}: {exact} vs {quad}");
    }

    // ĥo = L - Z at knots and R̂_cv = mean of ĥo_i
    let sc = scaling(&geo, 200, 160).unwrap();
    let j_min = -(sc.k_star as i64);
    let j_max = 2 * sc.delta as i64;
    let set = rescaled_processes(&sample, &scheme, &geo, &sc, j_min, j_max).unwrap();
    for j in j_min..=j_max {
        let mut mean = 0.0;
        for i in 0..scheme.v() {
            let ho = set.ho[i].value_at_j(j).unwrap();
            let l = set.excess[i].value_at_j(j).unwrap();
            let z = set.fluct[i].value_at_j(j).unwrap();
            assert!((ho - (l - z)).abs() < tol, "fold {i}, j={j}");
            mean += ho;
        }
        mean /= scheme.v() as f64;
        assert!((set.cv.value_at_j(j).unwrap() - mean).abs() < tol);
    }
    budget("1", start, 10);
    report("1 (exact identities)", true, "");
}

#[test]
fn criterion_02_lemma_sweep() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default_for(ExperimentKind::LemmaSweep);
    assert_eq!(cfg.replicates, 200);
    let records = run_experiment(&cfg).unwrap();
    let exact: f64 = records
        .iter()
        .filter(|r| r.statistic == "violations_exact")
        .map(|r| r.value)
        .sum();
    let stated: f64 = records
        .iter()
        .filter(|r| r.statistic == "violations_stated")
        .map(|r| r.value)
        .sum();
    let affected = records
        .iter()
        .filter(|r| r.statistic == "violations_stated" && r.value > 0.0)
        .count();
    assert_eq!(
        exact, 0.0,
        "provable inequalities must hold on every configuration"
    );
    budget("2", start, 120);
    if stated == 0.0 {
        report("2 (lemma sweep)", true, "");
    } else {
        report(
            "2 (lemma sweep)",
            false,
            &format!(
                "literal right-side shape claims: {stated} violations across {affected}/200 \
                 configs (documented defect of the source lemmas in the bracket-driven regime; \
                 corrected provable forms and all other inequalities: 0 violations)"
            ),
        );
        // the defect is real and characterized: the sweep must reproduce it
        assert!(affected > 0);
    }
}

#[test]
fn criterion_03_psd_property() {
    let start = Instant::now();
    let families = [
        Family::Uniform,
        Family::Geometric { ratio: 1.0 / 3.0 },
        Family::Geometric { ratio: 0.6 },
        Family::Polynomial {
            exponent: 1.5,
            scale: 0.5,
        },
        Family::Plateau {
            height: 1.0 / 900.0,
            width: 30,
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for fam in &families {
        let seq = make_family(fam).unwrap();
        let model = DensityModel::build(seq.clone()).unwrap();
        let sup_hi = model.sup_norm().hi;
        for _ in 0..50 {
            let lo = rng.gen_range(1u64..=191);
            let hi = rng.gen_range(lo..=200);
            let m = (hi - lo + 1) as usize;
            let mat = DMatrix::from_fn(m, m, |p, q| {
                let (i, j) = (lo + p as u64, lo + q as u64);
                let w = if i == j {
                    1.0
                } else {
                    1.0 / std::f64::consts::SQRT_2
                };
                w * seq.theta(i.abs_diff(j))
            });
            let (vals, _) = sym_eigen(&mat);
            assert!(
                vals[0] >= -1e-10,
                "{fam:?} I=[{lo},{hi}]: min eig {}",
                vals[0]
            );
            let max = vals.last().unwrap();
            assert!(
                *max <= sup_hi + 1e-8,
                "{fam:?} I=[{lo},{hi}]: max eig {max} vs ‖s‖_∞ ≤ {sup_hi}"
            );
        }
    }
    budget("3", start, 30);
    report("3 (PSD property)", true, "");
}

#[test]
fn criterion_04_worked_examples() {
    let start = Instant::now();
    let plateau = make_family(&Family::Plateau {
        height: 1.0 / 900.0,
        width: 30,
    })
    .unwrap();
    let sc = scaling(&plateau, 1000, 900).unwrap();
    assert_eq!(
        (sc.k_star, sc.delta_d, sc.delta_g, sc.delta),
        (30, 9, 30, 30)
    );
    assert_eq!(sc.e_script, 1.0 / 30.0);
    assert!((sc.e_frak - 1.0 / 3000.0_f64.sqrt()).abs() <= 1e-15);

    let geo = make_family(&Family::Geometric { ratio: 1.0 / 3.0 }).unwrap();
    let sc = scaling(&geo, 10_000, 9_900).unwrap();
    assert!(
        (98..=100).contains(&sc.delta),
        "Δ = {} not within ±1 of 99",
        sc.delta
    );
    budget("4", start, 5);
    report("4 (worked examples)", true, "");
}

#[test]
fn criterion_05_unbiasedness_mc() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default_for(ExperimentKind::Unbiasedness);
    assert_eq!(cfg.replicates, 10_000);
    assert_eq!(cfg.resolved_sizes().unwrap(), vec![(300, 250)]);
    assert_eq!(cfg.k_max, Some(10));
    let records = run_experiment(&cfg).unwrap();
    let mut worst = 0.0f64;
    for k in 0..=10u64 {
        let s = summarize(&records, &format!("ho_gap_k{k}"), GroupBy::default());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].count, 10_000);
        if k == 0 {
            // HO(0) + ‖s‖² - risk(0) is identically zero
            assert!(s[0].mean.abs() < 1e-12);
            continue;
        }
        let z = s[0].mean.abs() / s[0].stderr;
        worst = worst.max(z);
        assert!(
            z <= 4.0,
            "k={k}: |mean| = {} exceeds 4·stderr = {}",
            s[0].mean.abs(),
            4.0 * s[0].stderr
        );
    }
    budget("5", start, 300);
    report(
        "5 (unbiasedness MC)",
        true,
        &format!("worst |mean|/stderr = {worst:.2}"),
    );
}

#[test]
fn criterion_06_variance_reduction() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default_for(ExperimentKind::VarianceRatio);
    assert_eq!(cfg.replicates, 2000);
    assert_eq!(cfg.v, vec![1, 2, 5]);
    let records = run_experiment(&cfg).unwrap();
    let values = |v: u64, stat: &str| -> Vec<f64> {
        records
            .iter()
            .filter(|r| r.v == v && r.statistic == stat)
            .map(|r| r.value)
            .collect()
    };
    let mut detail = String::new();
    for stat in ["crit_at_m0.5", "crit_at_p0.5", "crit_at_p1"] {
        let base = variance(&values(1, stat));
        for v in [2u64, 5] {
            let ratio = variance(&values(v, stat)) / base;
            let (lo, hi) = (0.75 / v as f64, 1.33 / v as f64);
            assert!(
                ratio >= lo && ratio <= hi,
                "{stat}, V={v}: ratio {ratio} outside [{lo}, {hi}]"
            );
            detail.push_str(&format!("V={v}@{stat}: {ratio:.3} "));
        }
    }
    budget("6", start, 600);
    report("6 (variance reduction)", true, detail.trim());
}

#[test]
fn criterion_07_covariance_trend() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default_for(ExperimentKind::CovMatch);
    assert_eq!(cfg.n, vec![500, 2000, 8000]);
    assert_eq!(cfg.training_sets, 20);
    let records = run_experiment(&cfg).unwrap();
    let mut means = Vec::new();
    for &n in &cfg.n {
        let vals: Vec<f64> = records
            .iter()
            .filter(|r| r.n == n && r.statistic == "sup_cov_gap")
            .map(|r| r.value)
            .collect();
        assert_eq!(vals.len(), 20);
        means.push(mean_stderr(&vals).0);
    }
    assert!(
        means[0] > means[1] && means[1] > means[2],
        "sup |cond_cov - K(g_n)| must strictly decrease: {means:?}"
    );
    budget("7", start, 600);
    report(
        "7 (covariance-approximation trend)",
        true,
        &format!("{:.3} > {:.3} > {:.3}", means[0], means[1], means[2]),
    );
}

#[test]
fn criterion_08_excess_risk_shape_trend() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default_for(ExperimentKind::ExcessRiskShape);
    assert_eq!(cfg.replicates, 200);
    let records = run_experiment(&cfg).unwrap();
    let mut medians = Vec::new();
    for &n in &cfg.n {
        let vals: Vec<f64> = records
            .iter()
            .filter(|r| r.n == n && r.statistic == "sup_excess_gap")
            .map(|r| r.value)
            .collect();
        assert_eq!(vals.len(), 200);
        medians.push(median(&vals));
    }
    assert!(
        medians[0] > medians[1] && medians[1] > medians[2],
        "median sup |L - f_n| must strictly decrease: {medians:?}"
    );
    budget("8", start, 600);
    report(
        "8 (excess-risk shape trend)",
        true,
        &format!("{:.3} > {:.3} > {:.3}", medians[0], medians[1], medians[2]),
    );
}

#[test]
fn criterion_09_coupling() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default_for(ExperimentKind::CouplingCheck);
    assert_eq!(cfg.replicates, 20);
    assert_eq!(cfg.path_replicates, 100_000);
    let records = run_experiment(&cfg).unwrap();
    let stat = |rep: u64, name: &str| -> f64 {
        records
            .iter()
            .find(|r| r.replicate == rep && r.statistic == name)
            .unwrap()
            .value
    };
    let mut worst_z = 0.0f64;
    let mut worst_m = 0.0f64;
    for rep in 0..20u64 {
        let z = (stat(rep, "w2_mc") - stat(rep, "w2_trace")).abs() / stat(rep, "w2_mc_se");
        assert!(z < 4.0, "pair {rep}: W₂² MC vs trace z = {z}");
        // marginal covariances: exact identity plus a seeded 4σ MC subset
        assert!(stat(rep, "marginal_exact_gap_x") < 1e-9);
        assert!(stat(rep, "marginal_exact_gap_y") < 1e-9);
        let m = stat(rep, "marginal_subset_sigma_x").max(stat(rep, "marginal_subset_sigma_y"));
        assert!(m < 4.0, "pair {rep}: marginal deviation {m}σ");
        worst_z = worst_z.max(z);
        worst_m = worst_m.max(m);
    }
    budget("9", start, 120);
    report(
        "9 (Wasserstein coupling)",
        true,
        &format!("worst W₂² z = {worst_z:.2}, worst marginal = {worst_m:.2}σ"),
    );
}

#[test]
fn criterion_10_monotone_correction() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for case in 0..100 {
        let m = rng.gen_range(40..120);
        // h₊: cumulative non-negative increments; ε: positive non-decreasing
        let mut h = vec![0.0];
        for _ in 1..m {
            h.push(h.last().unwrap() + rng.gen_range(0.0..0.6));
        }
        let eps0 = rng.gen_range(0.05..0.4);
        let mut eps = vec![eps0];
        for _ in 1..m {
            eps.push(eps.last().unwrap() + rng.gen_range(0.0..0.02));
        }
        // g0 = c·h₊ + bounded oscillation satisfying the lemma hypothesis
        let c = rng.gen_range(0.0..0.9);
        let amp = 0.45 * (1.0 - c) * eps0;
        let freq = rng.gen_range(0.5..3.0);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let g0: Vec<f64> = (0..m)
            .map(|i| c * h[i] + amp * (freq * i as f64 + phase).sin())
            .collect();
        let g0 = GridFunction::new(0, 1, g0);
        let h_plus = GridFunction::new(0, 1, h.clone());
        let eps_f = GridFunction::new(0, 1, eps);
        let out = monotone_correct(&g0, &h_plus, &eps_f).unwrap();
        assert!(out.hypothesis_ok, "case {case}: hypothesis violated by construction");
        assert!(
            out.sup_ratio <= 6.0,
            "case {case}: ‖(g-g0)/ε‖ = {}",
            out.sup_ratio
        );
        for (i, w) in out.g.values().windows(2).enumerate() {
            assert!(w[1] >= w[0], "case {case}: not non-decreasing at {i}");
            assert!(
                w[1] - w[0] <= h[i + 1] - h[i] + 1e-12,
                "case {case}: increment above h₊ at {i}"
            );
        }
    }
    budget("10", start, 60);
    report("10 (monotone correction)", true, "");
}

#[test]
fn criterion_11_determinism() {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::default_for(ExperimentKind::VarianceRatio);
    cfg.replicates = 40;
    cfg.n = vec![400];
    cfg.nt_rule = NtRule::Explicit(vec![320]);
    cfg.v = vec![1, 2];
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(to_csv(&a), to_csv(&b), "repeated runs must be byte-identical");
    // worker-count invariance of the sorted record set
    std::env::set_var("CVASYM_THREADS", "1");
    let serial = run_experiment(&cfg).unwrap();
    std::env::set_var("CVASYM_THREADS", "3");
    let parallel = run_experiment(&cfg).unwrap();
    std::env::remove_var("CVASYM_THREADS");
    assert_eq!(to_csv(&serial), to_csv(&parallel));
    assert_eq!(to_csv(&a), to_csv(&serial));
    budget("11", start, 120);
    report("11 (determinism)", true, "");
}
