//! Monte Carlo and quadrature checks of the module-level invariants.

mod common;

use common::{adaptive_simpson, mean_stderr};
use cvasym_core::density::{cov_psi, make_family, psi, DensityModel, Family};
use cvasym_core::grid::UnitGridFunction;
use cvasym_core::limit::{bridge_integral, simulate_bridge};
use cvasym_core::oracle::scaling;
use cvasym_core::series::{empirical_coeffs, exact_excess_risk, Sample};
use cvasym_core::splits::{holdout_crit, make_scheme, rescaled_processes};
use cvasym_core::{ks::two_sample_ks, CoefficientSequence};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn families() -> Vec<(&'static str, CoefficientSequence)> {
    vec![
        ("uniform", make_family(&Family::Uniform).unwrap()),
        (
            "geometric",
            make_family(&Family::Geometric { ratio: 1.0 / 3.0 }).unwrap(),
        ),
        (
            "polynomial",
            make_family(&Family::Polynomial {
                exponent: 1.5,
                scale: 0.5,
            })
            .unwrap(),
        ),
        (
            "plateau",
            make_family(&Family::Plateau {
                height: 1.0 / 900.0,
                width: 30,
            })
            .unwrap(),
        ),
    ]
}

#[test]
fn quadrature_recovers_coefficients() {
    // ∫ s ψ_j = θ_j to 1e-8 for j <= 20, adaptive quadrature at tol 1e-10
    for (name, seq) in families() {
        for j in 0..=20u64 {
            let f = |x: f64| seq.density_eval(x, 1e-13).unwrap() * psi(j, x);
            let got = adaptive_simpson(&f, 0.0, 1.0, 1e-10);
            assert!(
                (got - seq.theta(j)).abs() < 1e-8,
                "{name}, j={j}: {got} vs {}",
                seq.theta(j)
            );
        }
    }
}

#[test]
fn empirical_covariance_matches_cov_psi() {
    // 10⁶ samples; empirical Cov(ψ_i, ψ_j) within 4σ of the closed form
    let seq = make_family(&Family::Geometric { ratio: 1.0 / 3.0 }).unwrap();
    let model = DensityModel::build(seq.clone()).unwrap();
    let n = 1_000_000usize;
    let xs = model.sample_seeded(n, 90_210).unwrap();
    let jmax = 10usize;
    // per-sample ψ values via the recurrence
    let mut sums = vec![0.0f64; jmax + 1];
    let mut prods = vec![vec![0.0f64; jmax + 1]; jmax + 1];
    let mut prod_sq = vec![vec![0.0f64; jmax + 1]; jmax + 1];
    let mut vals = vec![0.0f64; jmax + 1];
    for &x in &xs {
        let c1 = (TWO_PI * x).cos();
        let mut prev = 1.0;
        let mut cur = c1;
        vals[0] = 1.0;
        for v in vals.iter_mut().skip(1) {
            *v = std::f64::consts::SQRT_2 * cur;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
        for i in 1..=jmax {
            sums[i] += vals[i];
            for j in i..=jmax {
                prods[i][j] += vals[i] * vals[j];
                prod_sq[i][j] += (vals[i] * vals[j]).powi(2);
            }
        }
    }
    let nf = n as f64;
    for i in 1..=jmax {
        for j in i..=jmax {
            let mean_i = sums[i] / nf;
            let mean_j = sums[j] / nf;
            let emp = prods[i][j] / nf - mean_i * mean_j;
            let expect = cov_psi(&seq, i as u64, j as u64);
            // dominant noise: the product-moment estimate
            let var_prod = prod_sq[i][j] / nf - (prods[i][j] / nf).powi(2);
            let sigma = (var_prod / nf).sqrt();
            assert!(
                (emp - expect).abs() < 4.0 * sigma,
                "({i},{j}): {emp} vs {expect} (σ={sigma})"
            );
        }
    }
}

#[test]
fn variance_of_psi_tends_to_one() {
    for (name, seq) in families() {
        // |Var(ψ_j) - 1| <= |θ_{2j}|/√2 + θ_j² pointwise
        for j in 1..=200u64 {
            let gap = (cov_psi(&seq, j, j) - 1.0).abs();
            let bound = seq.theta(2 * j).abs() / std::f64::consts::SQRT_2 + seq.theta_sq(j);
            assert!(gap <= bound + 1e-15, "{name}, j={j}");
        }
        // Σ_j |Var(ψ_j) - 1| <= ‖θ‖₁ (partial sum + analytic tail bound)
        let mut acc = 0.0;
        for j in 1..=400u64 {
            acc += (cov_psi(&seq, j, j) - 1.0).abs();
        }
        let tail_bound = seq.tail_abs_from(800).unwrap() / std::f64::consts::SQRT_2
            + seq.tail_sq_from(400);
        let ell1 = seq.ell1_norm().unwrap();
        assert!(acc + tail_bound <= ell1 + 1e-12, "{name}: {acc} vs {ell1}");
    }
}

#[test]
fn coefficient_estimates_unbiased_with_exact_second_moment() {
    // M = 10⁴ replicates at n_t = 200: mean(θ̂_j) within 4√(Var(ψ_j)/(n_t M))
    // of θ_j, and mean((θ̂_j-θ_j)²) within 4 stderr of Var(ψ_j)/n_t
    let seq = make_family(&Family::Geometric { ratio: 1.0 / 3.0 }).unwrap();
    let model = DensityModel::build(seq.clone()).unwrap();
    let m = 10_000usize;
    let n_t = 200usize;
    let jmax = 10u64;
    let idx: Vec<usize> = (0..n_t).collect();
    let mut means = vec![Vec::with_capacity(m); jmax as usize + 1];
    let mut sq_errs = vec![Vec::with_capacity(m); jmax as usize + 1];
    for rep in 0..m {
        let xs = model.sample_seeded(n_t, 7_000_000 + rep as u64).unwrap();
        let sample = Sample::new(xs, rep as u64).unwrap();
        let c = empirical_coeffs(&sample, &idx, jmax).unwrap();
        for j in 1..=jmax {
            means[j as usize].push(c.theta_hat(j));
            sq_errs[j as usize].push((c.theta_hat(j) - seq.theta(j)).powi(2));
        }
    }
    for j in 1..=jmax {
        let var_psi = cov_psi(&seq, j, j);
        let (mean, _) = mean_stderr(&means[j as usize]);
        let band = 4.0 * (var_psi / (n_t as f64 * m as f64)).sqrt();
        assert!(
            (mean - seq.theta(j)).abs() < band,
            "unbiasedness j={j}: {mean} vs {}",
            seq.theta(j)
        );
        let (mean_sq, se) = mean_stderr(&sq_errs[j as usize]);
        let expect = var_psi / n_t as f64;
        assert!(
            (mean_sq - expect).abs() < 4.0 * se,
            "second moment j={j}: {mean_sq} vs {expect} (se {se})"
        );
    }
}

#[test]
fn excess_risk_matches_quadrature() {
    // ‖ŝ_k - s‖² via Parseval equals ∫ (ŝ_k - s)² to 1e-8, k <= 10
    let fams = vec![
        ("geometric", make_family(&Family::Geometric { ratio: 1.0 / 3.0 }).unwrap()),
        (
            "plateau",
            make_family(&Family::Plateau {
                height: 1.0 / 64.0,
                width: 6,
            })
            .unwrap(),
        ),
    ];
    for (name, seq) in fams {
        let model = DensityModel::build(seq.clone()).unwrap();
        let xs = model.sample_seeded(150, 31).unwrap();
        let sample = Sample::new(xs, 31).unwrap();
        let idx: Vec<usize> = (0..150).collect();
        let coeffs = empirical_coeffs(&sample, &idx, 10).unwrap();
        for k in [0u64, 3, 10] {
            let exact = exact_excess_risk(&coeffs, &seq, k);
            let f = |x: f64| {
                let shat = coeffs.estimator_at(k, x);
                let s = seq.density_eval(x, 1e-13).unwrap();
                (shat - s).powi(2)
            };
            let quad = adaptive_simpson(&f, 0.0, 1.0, 1e-10);
            assert!(
                (exact - quad).abs() < 1e-8,
                "{name}, k={k}: {exact} vs {quad}"
            );
        }
    }
}

#[test]
fn holdout_matches_quadrature_definition() {
    // HO_T(k) against the direct definition with ‖ŝ_k‖² by quadrature and
    // the test term by pointwise averaging, to 1e-10
    let seq = make_family(&Family::Geometric { ratio: 1.0 / 3.0 }).unwrap();
    let model = DensityModel::build(seq.clone()).unwrap();
    let xs = model.sample_seeded(20, 55).unwrap();
    let sample = Sample::new(xs, 55).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(56);
    let scheme = make_scheme(20, 15, 1, &mut rng).unwrap();
    let fold = &scheme.folds()[0];
    for k in [0u64, 1, 3] {
        let c = empirical_coeffs(&sample, &fold.train, k).unwrap();
        let norm_sq = adaptive_simpson(&|x| c.estimator_at(k, x).powi(2), 0.0, 1.0, 1e-12);
        let mean: f64 = fold
            .test
            .iter()
            .map(|&i| c.estimator_at(k, sample.values()[i]))
            .sum::<f64>()
            / fold.test.len() as f64;
        let oracle = norm_sq - 2.0 * mean;
        let got = holdout_crit(&sample, &fold.train, k).unwrap();
        assert!((got - oracle).abs() < 1e-10, "k={k}: {got} vs {oracle}");
    }
}

#[test]
fn holdout_distribution_invariant_in_t() {
    // two T of equal size: indistinguishable HO distributions (KS p > 0.001)
    let seq = make_family(&Family::Geometric { ratio: 1.0 / 3.0 }).unwrap();
    let model = DensityModel::build(seq.clone()).unwrap();
    let reps = 5000;
    let n = 60usize;
    let n_t = 45usize;
    let k = 3u64;
    let t1: Vec<usize> = (0..n_t).collect();
    let t2: Vec<usize> = (n - n_t..n).collect();
    let mut a = Vec::with_capacity(reps);
    let mut b = Vec::with_capacity(reps);
    for rep in 0..reps {
        let xs = model.sample_seeded(n, 40_000 + rep as u64).unwrap();
        let sample = Sample::new(xs, rep as u64).unwrap();
        a.push(holdout_crit(&sample, &t1, k).unwrap());
        b.push(holdout_crit(&sample, &t2, k).unwrap());
    }
    let (d, p) = two_sample_ks(&a, &b);
    assert!(p > 0.001, "KS D={d}, p={p}");
}

#[test]
fn cv_variance_never_exceeds_holdout_variance() {
    // Var(R̂_cv(α)) <= Var(ĥo(α)) at every knot, tested with 4σ slack
    let seq = make_family(&Family::Geometric { ratio: 1.0 / 3.0 }).unwrap();
    let model = DensityModel::build(seq.clone()).unwrap();
    let n = 300;
    let n_t = 240;
    let sc = scaling(&seq, n as u64, n_t as u64).unwrap();
    let j_min = -(sc.k_star as i64).min(2);
    let j_max = 2 * sc.delta as i64;
    let reps = 4000;
    let mut ho_vals: Vec<Vec<f64>> = vec![Vec::new(); (j_max - j_min + 1) as usize];
    let mut cv_vals: Vec<Vec<f64>> = vec![Vec::new(); (j_max - j_min + 1) as usize];
    for rep in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(52_000 + rep as u64);
        let xs = model.sample(n, &mut rng).unwrap();
        let sample = Sample::new(xs, rep as u64).unwrap();
        let scheme = make_scheme(n, n_t, 4, &mut rng).unwrap();
        let set = rescaled_processes(&sample, &scheme, &seq, &sc, j_min, j_max).unwrap();
        for j in j_min..=j_max {
            let idx = (j - j_min) as usize;
            ho_vals[idx].push(set.ho[0].value_at_j(j).unwrap());
            cv_vals[idx].push(set.cv.value_at_j(j).unwrap());
        }
    }
    for j in j_min..=j_max {
        if j == 0 {
            continue;
        }
        let idx = (j - j_min) as usize;
        let vh = common::variance(&ho_vals[idx]);
        let vc = common::variance(&cv_vals[idx]);
        // 4σ slack on the variance-difference estimate
        let slack = 4.0 * (2.0f64 / reps as f64).sqrt() * (vh + vc);
        assert!(vc <= vh + slack, "j={j}: Var(cv)={vc} > Var(ho)={vh}");
    }
}

#[test]
fn bridge_integrals_have_population_covariance() {
    // Cov(G(f), G(g)) = P(fg) - P(f)P(g) against 10⁵ simulated bridges
    let seq = make_family(&Family::Geometric { ratio: 1.0 / 3.0 }).unwrap();
    // f = ψ_1 + 0.5 ψ_2, g = ψ_2 - 0.25 ψ_3
    let fa = [(1u64, 1.0f64), (2, 0.5)];
    let ga = [(2u64, 1.0f64), (3, -0.25)];
    let deriv = |arr: &[(u64, f64)], x: f64| -> f64 {
        arr.iter()
            .map(|&(j, a)| {
                -a * std::f64::consts::SQRT_2 * TWO_PI * j as f64 * (TWO_PI * j as f64 * x).sin()
            })
            .sum()
    };
    let f_prime = UnitGridFunction::from_fn(1001, |x| deriv(&fa, x));
    let g_prime = UnitGridFunction::from_fn(1001, |x| deriv(&ga, x));
    let cdf = UnitGridFunction::from_fn(1001, |x| seq.cdf(x, 1e-12).unwrap());
    let m = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut prods = Vec::with_capacity(m);
    for _ in 0..m {
        let bridge = simulate_bridge(1001, &mut rng);
        let gf = bridge_integral(&f_prime, &bridge, &cdf).unwrap();
        let gg = bridge_integral(&g_prime, &bridge, &cdf).unwrap();
        prods.push(gf * gg);
    }
    // E[G(f)] = E[G(g)] = 0, so Cov = E[G(f)G(g)]
    let (emp, se) = mean_stderr(&prods);
    let mut expect = 0.0;
    for &(i, a) in &fa {
        for &(j, b) in &ga {
            expect += a * b * cov_psi(&seq, i, j);
        }
    }
    assert!(
        (emp - expect).abs() < 4.0 * se,
        "{emp} vs {expect} (se {se})"
    );
}

#[test]
fn u_statistic_expansion_error_decreases_along_ladder() {
    // U_{I¹,I²} = Σ Σ θ̂_i θ̂_j Cov(ψ_i, ψ_j). Its exact expectation is
    // Σ Σ (θ_iθ_j + c_ij/n_t) c_ij, so the gap between E[U] and the four
    // deterministic leading terms is computable without noise; that gap over
    // ℰ must decrease along the ladder. The MC side checks that the mean of
    // U over fresh training sets agrees with E[U] within 4 standard errors
    // (the per-sample spread is of order 𝔢·polylog, wider than the gap, so
    // the trend itself is only visible in the exact expectation).
    let seq = make_family(&Family::Polynomial {
        exponent: 1.5,
        scale: 0.5,
    })
    .unwrap();
    let model = DensityModel::build(seq.clone()).unwrap();
    let mut gaps = Vec::new();
    for (n, seed0) in [(500u64, 1u64), (2000, 2), (8000, 3)] {
        let w = cvasym_core::density::nt_window(n, 0.2, 0.05).unwrap();
        let n_t = n - w.midpoint().unwrap();
        let sc = scaling(&seq, n, n_t).unwrap();
        // intervals: I¹ = (k*, k*+Δ], I² = (k*-⌊Δ/2⌋, k*+⌊Δ/2⌋], overlapping
        let lo1 = sc.k_star + 1;
        let hi1 = sc.k_star + sc.delta;
        let lo2 = sc.k_star + 1 - (sc.delta / 2).min(sc.k_star);
        let hi2 = sc.k_star + sc.delta / 2;
        let nt_f = n_t as f64;
        let mut expect_u = 0.0;
        for i in lo1..=hi1 {
            for j in lo2..=hi2 {
                let c = cov_psi(&seq, i, j);
                expect_u += c * (seq.theta(i) * seq.theta(j) + c / nt_f);
            }
        }
        let inter_lo = lo1.max(lo2);
        let inter_hi = hi1.min(hi2);
        let inter = if inter_hi >= inter_lo {
            inter_hi - inter_lo + 1
        } else {
            0
        };
        let mut lead = 0.5 * inter as f64 / nt_f;
        lead += (1.0 - 1.0 / std::f64::consts::SQRT_2)
            * (inter_lo..=inter_hi).map(|i| seq.theta_sq(i)).sum::<f64>();
        let mut cross = 0.0;
        let mut cross_sq = 0.0;
        for i in lo1..=hi1 {
            for j in lo2..=hi2 {
                cross += seq.theta(i) * seq.theta(j) * seq.theta(i.abs_diff(j));
                cross_sq += seq.theta_sq(i.abs_diff(j));
            }
        }
        lead += cross / std::f64::consts::SQRT_2 + cross_sq / (2.0 * nt_f);
        gaps.push(((expect_u - lead) / sc.e_script).abs());

        let mut vals = Vec::new();
        for t in 0..20 {
            let xs = model
                .sample_seeded(n_t as usize, 80_000 + 100 * seed0 + t)
                .unwrap();
            let train = Sample::new(xs, t).unwrap();
            let idx: Vec<usize> = (0..n_t as usize).collect();
            let th = empirical_coeffs(&train, &idx, hi1).unwrap();
            let mut u = 0.0;
            for i in lo1..=hi1 {
                for j in lo2..=hi2 {
                    u += th.theta_hat(i) * th.theta_hat(j) * cov_psi(&seq, i, j);
                }
            }
            vals.push(u);
        }
        let (mc_mean, se) = mean_stderr(&vals);
        assert!(
            (mc_mean - expect_u).abs() < 4.0 * se,
            "n={n}: MC mean {mc_mean} vs exact E[U] {expect_u} (se {se})"
        );
    }
    assert!(
        gaps[0] > gaps[1] && gaps[1] > gaps[2],
        "no decrease: {gaps:?}"
    );
}
