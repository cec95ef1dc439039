//! The supported Monte Carlo experiments and the curve-export helpers.

use super::{derive_seed, sort_records, ExperimentConfig, ExperimentKind, ExperimentRecord};
use crate::density::{make_family, CoefficientSequence, DensityModel, Family};
use crate::error::{Error, Result};
use crate::ks::two_sample_ks;
use crate::limit::{
    approx_process, assert_gn_invariants, build_gn, gaussian_coupling, kernel_of_time_change,
    simulate_path, EpsSpec,
};
use crate::oracle::{f_n_at, scaling, RiskShape, ScalingSummary};
use crate::series::{empirical_coeffs, exact_excess_risk, Sample};
use crate::splits::{cv_curve, make_scheme, rescaled_processes, select_k};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Build the worker pool; CVASYM_THREADS overrides the worker count.
fn pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(s) = std::env::var("CVASYM_THREADS") {
        if let Ok(v) = s.parse::<usize>() {
            if v > 0 {
                builder = builder.num_threads(v);
            }
        }
    }
    builder
        .build()
        .map_err(|e| Error::Data(format!("thread pool: {e}")))
}

/// Run one experiment to a normalized, deterministically ordered record set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let mut records = match cfg.kind {
        ExperimentKind::Unbiasedness => unbiasedness(cfg)?,
        ExperimentKind::VarianceRatio => variance_ratio(cfg)?,
        ExperimentKind::CovMatch => cov_match(cfg)?,
        ExperimentKind::ExcessRiskShape => excess_risk_shape(cfg)?,
        ExperimentKind::ArgminLaw => argmin_law(cfg)?,
        ExperimentKind::LemmaSweep => lemma_sweep(cfg)?,
        ExperimentKind::CouplingCheck => coupling_check(cfg)?,
    };
    sort_records(&mut records);
    Ok(records)
}

fn base_record(cfg: &ExperimentConfig, n: u64, n_t: u64, v: u64) -> ExperimentRecord {
    ExperimentRecord {
        experiment: cfg.label.clone(),
        family: cfg.family.to_string(),
        n,
        n_t,
        v,
        replicate: 0,
        statistic: String::new(),
        value: 0.0,
        seed: 0,
    }
}

fn default_k_max(cfg: &ExperimentConfig, seq: &CoefficientSequence, n_t: u64) -> u64 {
    cfg.k_max
        .unwrap_or_else(|| n_t.min(4 * crate::oracle::k_star(seq, n_t).max(1)))
}

/// The scaling summary of a size pair, emitted once per (n, n_t) as
/// statistic rows so the quantities travel with every result file.
fn scaling_records(cfg: &ExperimentConfig, sc: &ScalingSummary) -> Vec<ExperimentRecord> {
    [
        ("k_star", sc.k_star as f64),
        ("delta_d", sc.delta_d as f64),
        ("delta_g", sc.delta_g as f64),
        ("delta", sc.delta as f64),
        ("E_script", sc.e_script),
        ("e_frak", sc.e_frak),
        ("oracle_risk", sc.oracle_risk),
    ]
    .into_iter()
    .map(|(name, value)| {
        let mut r = base_record(cfg, sc.n, sc.n_t, 1);
        r.statistic = name.to_string();
        r.value = value;
        r.seed = cfg.base_seed;
        r
    })
    .collect()
}

/// E[HO(k)] + ‖s‖² - E[‖ŝ_k - s‖²] should vanish; one record per (replicate, k).
fn unbiasedness(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let seq = make_family(&cfg.family)?;
    let model = DensityModel::build(seq.clone())?;
    let l2 = model.l2_norm_sq();
    let mut out = Vec::new();
    for (n, n_t) in cfg.resolved_sizes()? {
        let k_max = default_k_max(cfg, &seq, n_t);
        out.extend(scaling_records(cfg, &scaling(&seq, n, n_t)?));
        let chunks: Vec<Vec<ExperimentRecord>> = pool()?.install(|| {
            (0..cfg.replicates)
                .into_par_iter()
                .map(|rep| -> Result<Vec<ExperimentRecord>> {
                    let seed = derive_seed(cfg.base_seed, rep, 0);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let xs = model.sample(n as usize, &mut rng)?;
                    let sample = Sample::new(xs, seed)?;
                    let scheme = make_scheme(n as usize, n_t as usize, 1, &mut rng)?;
                    let fold = &scheme.folds()[0];
                    let curve = crate::splits::holdout_curve(&sample, &fold.train, k_max)?;
                    let coeffs = empirical_coeffs(&sample, &fold.train, k_max)?;
                    let mut recs = Vec::with_capacity(k_max as usize + 1);
                    for k in 0..=k_max {
                        let gap =
                            curve[k as usize] + l2 - exact_excess_risk(&coeffs, &seq, k);
                        let mut r = base_record(cfg, n, n_t, 1);
                        r.replicate = rep;
                        r.statistic = format!("ho_gap_k{k}");
                        r.value = gap;
                        r.seed = seed;
                        recs.push(r);
                    }
                    Ok(recs)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        out.extend(chunks.into_iter().flatten());
    }
    Ok(out)
}

/// Rescaled criterion values at the knots nearest α ∈ {-1/2, 1/2, 1},
/// per V; variance ratios are computed downstream from the records.
fn variance_ratio(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let seq = make_family(&cfg.family)?;
    let model = DensityModel::build(seq.clone())?;
    let mut out = Vec::new();
    for (n, n_t) in cfg.resolved_sizes()? {
        let sc = scaling(&seq, n, n_t)?;
        if sc.degenerate {
            return Err(Error::Grid(format!("degenerate scaling at n={n}, n_t={n_t}")));
        }
        let j_half = ((sc.delta as f64) / 2.0).round() as i64;
        let probes: [(i64, &str); 3] = [
            (-j_half, "crit_at_m0.5"),
            (j_half, "crit_at_p0.5"),
            (sc.delta as i64, "crit_at_p1"),
        ];
        if j_half > sc.k_star as i64 {
            return Err(Error::Grid(format!(
                "knot -Δ/2 = -{j_half} below -k* = -{}",
                sc.k_star
            )));
        }
        let k_max = sc.k_star + sc.delta;
        out.extend(scaling_records(cfg, &sc));
        for &v in &cfg.v {
            let chunks: Vec<Vec<ExperimentRecord>> = pool()?.install(|| {
                (0..cfg.replicates)
                    .into_par_iter()
                    .map(|rep| -> Result<Vec<ExperimentRecord>> {
                        let seed = derive_seed(cfg.base_seed, rep, v);
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let xs = model.sample(n as usize, &mut rng)?;
                        let sample = Sample::new(xs, seed)?;
                        let scheme = make_scheme(n as usize, n_t as usize, v as usize, &mut rng)?;
                        let curve = cv_curve(&sample, &scheme, k_max)?;
                        let base = curve[sc.k_star as usize];
                        let mut recs = Vec::with_capacity(3);
                        for (j, name) in probes {
                            let val =
                                (curve[(sc.k_star as i64 + j) as usize] - base) / sc.e_frak;
                            let mut r = base_record(cfg, n, n_t, v);
                            r.replicate = rep;
                            r.statistic = name.to_string();
                            r.value = val;
                            r.seed = seed;
                            recs.push(r);
                        }
                        Ok(recs)
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            out.extend(chunks.into_iter().flatten());
        }
    }
    Ok(out)
}

/// 2D prefix table of θ̂_{i1} θ̂_{i2} Cov(ψ_{i1}, ψ_{i2}) over a window of
/// indices, giving O(1) block sums for the conditional covariance.
struct CovPrefix {
    base: u64,
    prefix: Vec<Vec<f64>>,
}

impl CovPrefix {
    fn build(
        theta_hat: &crate::series::EmpiricalCoefficients,
        seq: &CoefficientSequence,
        lo: u64,
        hi: u64,
    ) -> Self {
        let w = (hi - lo + 1) as usize;
        let mut prefix = vec![vec![0.0; w + 1]; w + 1];
        for p in 0..w {
            let i1 = lo + p as u64;
            for q in 0..w {
                let i2 = lo + q as u64;
                let c = theta_hat.theta_hat(i1)
                    * theta_hat.theta_hat(i2)
                    * crate::density::cov_psi(seq, i1, i2);
                prefix[p + 1][q + 1] = c + prefix[p][q + 1] + prefix[p + 1][q] - prefix[p][q];
            }
        }
        Self { base: lo, prefix }
    }

    /// Σ over [a1, b1] × [a2, b2] (inclusive index ranges).
    fn block(&self, a1: u64, b1: u64, a2: u64, b2: u64) -> f64 {
        if b1 < a1 || b2 < a2 {
            return 0.0;
        }
        let p0 = (a1 - self.base) as usize;
        let p1 = (b1 - self.base + 1) as usize;
        let q0 = (a2 - self.base) as usize;
        let q1 = (b2 - self.base + 1) as usize;
        self.prefix[p1][q1] - self.prefix[p0][q1] - self.prefix[p1][q0] + self.prefix[p0][q0]
    }
}

fn block_of(sc: &ScalingSummary, j: i64) -> (u64, u64) {
    if j >= 0 {
        (sc.k_star + 1, sc.k_star + j as u64)
    } else {
        ((sc.k_star as i64 + j + 1) as u64, sc.k_star)
    }
}

/// sup over window grid pairs of |Cov(Z(j1/Δ), Z(j2/Δ) | D_n^T) - K(g_n)|,
/// averaged over fresh training samples; one record per training set.
fn cov_match(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let seq = make_family(&cfg.family)?;
    let model = DensityModel::build(seq.clone())?;
    let mut out = Vec::new();
    for (n, n_t) in cfg.resolved_sizes()? {
        let sc = scaling(&seq, n, n_t)?;
        let shape = RiskShape::build(&seq, &sc, cfg.x + 1.0)?;
        let w = shape.window(cfg.x)?;
        let (gn, _) = build_gn(
            &model,
            &sc,
            &shape,
            w.j_lo,
            w.j_hi,
            EpsSpec {
                c: cfg.eps.c,
                u: cfg.eps.u,
            },
            cfg.correction,
        )?;
        let kernel = kernel_of_time_change(&gn)?;
        out.extend(scaling_records(cfg, &sc));
        let pref = 4.0 / (sc.n_v as f64 * sc.e_frak * sc.e_frak);
        let k_hi = (sc.k_star as i64 + w.j_hi) as u64;
        let lo = (sc.k_star as i64 + w.j_lo + 1) as u64;
        let chunks: Vec<Vec<ExperimentRecord>> = pool()?.install(|| {
            (0..cfg.training_sets)
                .into_par_iter()
                .map(|t| -> Result<Vec<ExperimentRecord>> {
                    let seed = derive_seed(cfg.base_seed, t, 7);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let xs = model.sample(n_t as usize, &mut rng)?;
                    let train = Sample::new(xs, seed)?;
                    let idx: Vec<usize> = (0..n_t as usize).collect();
                    let th = empirical_coeffs(&train, &idx, k_hi)?;
                    let table = CovPrefix::build(&th, &seq, lo, k_hi);
                    let mut sup = 0.0f64;
                    for j1 in w.j_lo..=w.j_hi {
                        for j2 in j1..=w.j_hi {
                            let cov = if j1 == 0 || j2 == 0 {
                                0.0
                            } else {
                                let (a1, b1) = block_of(&sc, j1);
                                let (a2, b2) = block_of(&sc, j2);
                                let sgn = (j1.signum() * j2.signum()) as f64;
                                sgn * pref * table.block(a1, b1, a2, b2)
                            };
                            let p = (j1 - w.j_lo) as usize;
                            let q = (j2 - w.j_lo) as usize;
                            sup = sup.max((cov - kernel.matrix[(p, q)]).abs());
                        }
                    }
                    let mut r = base_record(cfg, n, n_t, 1);
                    r.replicate = t;
                    r.statistic = "sup_cov_gap".into();
                    r.value = sup;
                    r.seed = seed;
                    Ok(vec![r])
                })
                .collect::<Result<Vec<_>>>()
        })?;
        out.extend(chunks.into_iter().flatten());
    }
    Ok(out)
}

/// sup over the window of |L - f_n| per replicate (L the rescaled excess
/// risk of a fresh hold-out split).
fn excess_risk_shape(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let seq = make_family(&cfg.family)?;
    let model = DensityModel::build(seq.clone())?;
    let mut out = Vec::new();
    for (n, n_t) in cfg.resolved_sizes()? {
        let sc = scaling(&seq, n, n_t)?;
        let shape = RiskShape::build(&seq, &sc, cfg.x + 1.0)?;
        let w = shape.window(cfg.x)?;
        out.extend(scaling_records(cfg, &sc));
        let chunks: Vec<Vec<ExperimentRecord>> = pool()?.install(|| {
            (0..cfg.replicates)
                .into_par_iter()
                .map(|rep| -> Result<Vec<ExperimentRecord>> {
                    let seed = derive_seed(cfg.base_seed, rep, 3);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let xs = model.sample(n as usize, &mut rng)?;
                    let sample = Sample::new(xs, seed)?;
                    let scheme = make_scheme(n as usize, n_t as usize, 1, &mut rng)?;
                    let set = rescaled_processes(&sample, &scheme, &seq, &sc, w.j_lo, w.j_hi)?;
                    let mut sup = 0.0f64;
                    for j in w.j_lo..=w.j_hi {
                        let l = set.excess[0].value_at_j(j).unwrap();
                        let f = shape.value_at_j(j).unwrap();
                        sup = sup.max((l - f).abs());
                    }
                    let mut r = base_record(cfg, n, n_t, 1);
                    r.replicate = rep;
                    r.statistic = "sup_excess_gap".into();
                    r.value = sup;
                    r.seed = seed;
                    Ok(vec![r])
                })
                .collect::<Result<Vec<_>>>()
        })?;
        out.extend(chunks.into_iter().flatten());
    }
    Ok(out)
}

/// Law of the selected index: (k̂ - k*)/Δ over MC replicates against the
/// argmin of f_n - W_{g_n/V} over simulated paths; the two-sample KS
/// statistic is reported, not thresholded.
fn argmin_law(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let seq = make_family(&cfg.family)?;
    let model = DensityModel::build(seq.clone())?;
    let mut out = Vec::new();
    for (n, n_t) in cfg.resolved_sizes()? {
        let sc = scaling(&seq, n, n_t)?;
        let shape = RiskShape::build(&seq, &sc, cfg.x + 1.0)?;
        let w = shape.window(cfg.x)?;
        let k_max = default_k_max(cfg, &seq, n_t);
        out.extend(scaling_records(cfg, &sc));
        for &v in &cfg.v {
            let (gn, _) = build_gn(
                &model,
                &sc,
                &shape,
                w.j_lo,
                w.j_hi,
                EpsSpec {
                    c: cfg.eps.c,
                    u: cfg.eps.u,
                },
                cfg.correction,
            )?;
            let mc: Vec<(u64, f64, bool)> = pool()?.install(|| {
                (0..cfg.replicates)
                    .into_par_iter()
                    .map(|rep| -> Result<(u64, f64, bool)> {
                        let seed = derive_seed(cfg.base_seed, rep, 10 + v);
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let xs = model.sample(n as usize, &mut rng)?;
                        let sample = Sample::new(xs, seed)?;
                        let scheme = make_scheme(n as usize, n_t as usize, v as usize, &mut rng)?;
                        let curve = cv_curve(&sample, &scheme, k_max)?;
                        let sel = select_k(&curve)?;
                        let scaled =
                            (sel.k_hat as f64 - sc.k_star as f64) / sc.delta as f64;
                        Ok((seed, scaled, sel.at_boundary))
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            let gauss: Vec<(u64, f64)> = pool()?.install(|| {
                (0..cfg.path_replicates)
                    .into_par_iter()
                    .map(|rep| -> Result<(u64, f64)> {
                        let seed = derive_seed(cfg.base_seed, rep, 100 + v);
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let path = simulate_path(&gn, v, &mut rng)?;
                        let proc = approx_process(&shape, &path);
                        let (jm, _) = proc.argmin_knot();
                        Ok((seed, jm as f64 / sc.delta as f64))
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            for (rep, &(seed, scaled, boundary)) in mc.iter().enumerate() {
                let mut r = base_record(cfg, n, n_t, v);
                r.replicate = rep as u64;
                r.statistic = "scaled_argmin".into();
                r.value = scaled;
                r.seed = seed;
                out.push(r.clone());
                r.statistic = "boundary_hit".into();
                r.value = boundary as u64 as f64;
                out.push(r);
            }
            for (rep, &(seed, a)) in gauss.iter().enumerate() {
                let mut r = base_record(cfg, n, n_t, v);
                r.replicate = rep as u64;
                r.statistic = "approx_argmin".into();
                r.value = a;
                r.seed = seed;
                out.push(r);
            }
            let sample_mc: Vec<f64> = mc.iter().map(|&(_, s, _)| s).collect();
            let sample_g: Vec<f64> = gauss.iter().map(|&(_, a)| a).collect();
            let (d, p) = two_sample_ks(&sample_mc, &sample_g);
            for (name, value) in [("ks_stat", d), ("ks_p", p)] {
                let mut r = base_record(cfg, n, n_t, v);
                r.statistic = name.into();
                r.value = value;
                r.seed = cfg.base_seed;
                out.push(r);
            }
            // shared histogram over [-2, 2], 16 bins, reported as fractions
            let bins = 16usize;
            let count = |xs: &[f64], b: usize| {
                let lo = -2.0 + 4.0 * b as f64 / bins as f64;
                let hi = -2.0 + 4.0 * (b + 1) as f64 / bins as f64;
                xs.iter().filter(|&&x| x >= lo && x < hi).count() as f64 / xs.len() as f64
            };
            for b in 0..bins {
                for (name, xs) in [("hist_mc", &sample_mc), ("hist_gauss", &sample_g)] {
                    let mut r = base_record(cfg, n, n_t, v);
                    r.statistic = format!("{name}_b{b:02}");
                    r.value = count(xs, b);
                    r.seed = cfg.base_seed;
                    out.push(r);
                }
            }
        }
    }
    Ok(out)
}

/// A randomly drawn configuration for the exact-inequality sweep:
/// monotone coefficients and n_v | n_t (the V-fold-natural regime).
pub struct AdmissibleConfig {
    pub family: Family,
    pub n: u64,
    pub n_t: u64,
}

pub fn random_admissible_config(rng: &mut impl Rng) -> AdmissibleConfig {
    let n_v = rng.gen_range(5u64..=120);
    let mult = rng.gen_range(2u64..=30);
    let n_t = n_v * mult;
    let n = n_t + n_v;
    let family = match rng.gen_range(0u8..10) {
        0 => Family::Uniform,
        1..=4 => Family::Geometric {
            ratio: rng.gen_range(0.25..0.9),
        },
        5..=7 => Family::Polynomial {
            exponent: rng.gen_range(1.1..2.9),
            scale: rng.gen_range(0.3..1.2),
        },
        _ => {
            let width = rng.gen_range(2u64..=60);
            let c: f64 = rng.gen_range(0.5..2.0);
            Family::Plateau {
                height: c / n_t as f64,
                width,
            }
        }
    };
    AdmissibleConfig { family, n, n_t }
}

fn le_slack(a: f64, b: f64) -> bool {
    a <= b + 8.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0)
}

/// Outcome of the exact-inequality checks on one configuration.
///
/// `exact` holds violations of the inequalities that are provable from the
/// definitions and must never fire. `stated` holds violations of the
/// literal right-side shape statements (the knot slope ≥ 1/Δ beyond Δ, the
/// (|α|-1)₊ floor, the 2(1+x) window width, the 4(1+x)ℰ window mass and the
/// 20‖s‖_∞f_n + 12‖s‖_∞ envelope), which fail for positive tails in the
/// bracket-driven regime Δ = n_t/n_v; their corrected provable forms are
/// part of `exact`, so a `stated` violation is always accompanied by a
/// zero-violation certificate of the corrected bound.
#[derive(Debug, Default, Clone)]
pub struct SweepOutcome {
    pub exact: Vec<String>,
    pub stated: Vec<String>,
}

/// All sweep inequalities for one admissible configuration.
pub fn check_exact_inequalities(
    family: &Family,
    n: u64,
    n_t: u64,
    x: f64,
    eps: EpsSpec,
    mode: crate::limit::CorrectionMode,
) -> Result<SweepOutcome> {
    let seq = make_family(family)?;
    let mut out = SweepOutcome::default();
    let sc = scaling(&seq, n, n_t)?;
    if sc.degenerate {
        out.exact.push(format!("degenerate scaling for {family}"));
        return Ok(out);
    }
    if sc.canonical {
        out.exact.extend(sc.check_lemma_chain());
    }
    // grid tall enough for pairs with |α| ≥ 1 on the right
    let f_at_delta = f_n_at(&seq, &sc, sc.delta as i64)?;
    let shape = RiskShape::build(&seq, &sc, (x + 1.0).max(f_at_delta + 2.0))?;
    let step = 1.0 / sc.delta as f64;
    let d = sc.delta as i64;
    let delta = sc.delta as f64;
    for j in shape.grid().j_min()..shape.grid().j_max() {
        let f1 = shape.value_at_j(j).unwrap();
        let f2 = shape.value_at_j(j + 1).unwrap();
        if j >= d {
            if !le_slack(step, f2 - f1) {
                out.stated.push(format!("f_n slope < 1 at j={j} (right)"));
            }
            // corrected knot bound: increment ≥ 1/√(Δ(j+1))
            let floor = 1.0 / (delta * (j + 1) as f64).sqrt();
            if !le_slack(floor, f2 - f1) {
                out.exact
                    .push(format!("f_n slope below corrected bound at j={j}"));
            }
        }
        if j < -d && !le_slack(step, f1 - f2) {
            out.exact.push(format!("f_n slope > -1 at j={j} (left)"));
        }
        if sc.delta == sc.delta_d && j >= 0 && j < d && !le_slack(f2 - f1, step) {
            out.exact.push(format!("Δ=Δ_d but f_n slope > 1 at j={j}"));
        }
        if sc.delta == sc.delta_g && j >= -d && j < 0 {
            if !le_slack(f1 - f2, step) {
                out.stated.push(format!("Δ=Δ_g but f_n slope < -1 at j={j}"));
            }
            // corrected cap: descent ≤ 1/√(Δ(Δ-1)) per knot
            if sc.delta >= 2 {
                let cap = 1.0 / (delta * (delta - 1.0)).sqrt();
                if !le_slack(f1 - f2, cap) {
                    out.exact
                        .push(format!("f_n descent above corrected cap at j={j}"));
                }
            }
        }
    }
    for (j, alpha, v) in shape.grid().iter_knots() {
        let stated_floor = (alpha.abs() - 1.0).max(0.0);
        if !le_slack(stated_floor, v) {
            out.stated.push(format!("f_n(α) < (|α|-1)+ at j={j}"));
        }
        let corrected_floor = if j <= 0 {
            stated_floor // left side is exact
        } else if j > d {
            2.0 * ((j as f64 + 1.0).sqrt() - (delta + 1.0).sqrt()) / delta.sqrt()
        } else {
            0.0
        };
        if !le_slack(corrected_floor, v) {
            out.exact
                .push(format!("f_n below corrected floor at j={j}"));
        }
    }
    // window bounds
    let w = shape.window(x)?;
    if !le_slack(w.b_x - w.a_x, 2.0 * (1.0 + x)) {
        out.stated
            .push(format!("window width {} > 2(1+x)", w.b_x - w.a_x));
    }
    // corrected: a_x ≥ -(1+x) exactly; b_x within the corrected floor's sublevel
    if !le_slack(-(1.0 + x), w.a_x) {
        out.exact.push(format!("a_x = {} < -(1+x)", w.a_x));
    }
    let b_cap = {
        let r = (delta + 1.0).sqrt() + x * delta.sqrt() / 2.0;
        (r * r - 1.0) / delta
    };
    if !le_slack(w.b_x, b_cap.max(1.0 + x)) {
        out.exact
            .push(format!("b_x = {} beyond corrected cap {b_cap}", w.b_x));
    }
    let mut mass = 0.0;
    for k in (sc.k_star as i64 + w.j_lo + 1)..=(sc.k_star as i64 + w.j_hi) {
        mass += seq.theta_sq(k as u64);
    }
    if !le_slack(mass, 4.0 * (1.0 + x) * sc.e_script) {
        out.stated.push(format!(
            "window θ² mass {mass} > 4(1+x)ℰ = {}",
            4.0 * (1.0 + x) * sc.e_script
        ));
    }
    // corrected mass bound: 𝔢(f(a)+f(b)) + (b-a)Δ/n_t, exact from |θ²-1/n_t|
    let f_ends = shape.value_at_j(w.j_lo).unwrap() + shape.value_at_j(w.j_hi).unwrap();
    let mass_cap = sc.e_frak * f_ends + (w.j_hi - w.j_lo) as f64 / n_t as f64;
    if !le_slack(mass, mass_cap) {
        out.exact
            .push(format!("window θ² mass {mass} > exact cap {mass_cap}"));
    }
    // time change: items 1-3 are construction-guaranteed; the f_n envelope
    // splits into the stated 20f+12 form and the exact 8f+12|α| form
    let model = DensityModel::build(seq.clone())?;
    match build_gn(&model, &sc, &shape, w.j_lo, w.j_hi, eps, mode) {
        Ok((gn, _)) => {
            if let Err(e) =
                assert_gn_invariants(gn.grid(), &shape, model.sup_norm().hi, model.l2_norm_sq(), &sc)
            {
                out.exact.push(e.to_string());
            }
            let sup = model.sup_norm().hi;
            for (j, alpha, v) in gn.grid().iter_knots() {
                let f = shape.value_at_j(j).unwrap();
                if !le_slack(v.abs(), 20.0 * sup * f + 12.0 * sup) {
                    out.stated
                        .push(format!("|g_n| > 20‖s‖_∞f_n + 12‖s‖_∞ at j={j}"));
                }
                if !le_slack(v.abs(), 8.0 * sup * f + 12.0 * sup * alpha.abs()) {
                    out.exact
                        .push(format!("|g_n| > 8‖s‖_∞f_n + 12‖s‖_∞|α| at j={j}"));
                }
            }
        }
        Err(e) => out.exact.push(e.to_string()),
    }
    Ok(out)
}

/// Exact-inequality sweep over random admissible configurations; per
/// configuration the violation counts of the provable set and of the
/// literal stated forms are recorded separately.
fn lemma_sweep(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let eps = EpsSpec {
        c: cfg.eps.c,
        u: cfg.eps.u,
    };
    let chunks: Vec<Vec<ExperimentRecord>> = pool()?.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| -> Result<Vec<ExperimentRecord>> {
                let seed = derive_seed(cfg.base_seed, rep, 4);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let ac = random_admissible_config(&mut rng);
                let out =
                    check_exact_inequalities(&ac.family, ac.n, ac.n_t, cfg.x, eps, cfg.correction)?;
                for b in &out.exact {
                    eprintln!("lemma_sweep EXACT violation (rep {rep}, {}): {b}", ac.family);
                }
                let rec = |statistic: &str, value: f64| ExperimentRecord {
                    experiment: cfg.label.clone(),
                    family: ac.family.to_string(),
                    n: ac.n,
                    n_t: ac.n_t,
                    v: 1,
                    replicate: rep,
                    statistic: statistic.into(),
                    value,
                    seed,
                };
                Ok(vec![
                    rec("violations_exact", out.exact.len() as f64),
                    rec("violations_stated", out.stated.len() as f64),
                ])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Wasserstein coupling check on random PSD pairs: the closed-form W₂²
/// against the Monte Carlo mean of ‖X-Y‖², plus marginal-covariance
/// deviations in sigma units.
fn coupling_check(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    const DIMS: [usize; 6] = [5, 8, 13, 21, 34, 50];
    let draws = cfg.path_replicates.max(1000) as usize;
    let chunks: Vec<Vec<ExperimentRecord>> = pool()?.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| -> Result<Vec<ExperimentRecord>> {
                let seed = derive_seed(cfg.base_seed, rep, 5);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let d = DIMS[rep as usize % DIMS.len()];
                let random_psd = |rng: &mut ChaCha8Rng| {
                    let r = DMatrix::from_fn(d, d, |_, _| {
                        rng.sample::<f64, _>(rand_distr::StandardNormal) / (d as f64).sqrt()
                    });
                    &r * r.transpose() + DMatrix::<f64>::identity(d, d) * 0.05
                };
                let kx = random_psd(&mut rng);
                let ky = random_psd(&mut rng);
                let coupling = gaussian_coupling(&kx, &ky)?;
                let mut mean = 0.0;
                let mut m2 = 0.0;
                let mut emp_x = DMatrix::<f64>::zeros(d, d);
                let mut emp_y = DMatrix::<f64>::zeros(d, d);
                for i in 0..draws {
                    let (x, y) = coupling.sample(&mut rng);
                    let dist = (&x - &y).norm_squared();
                    let delta = dist - mean;
                    mean += delta / (i + 1) as f64;
                    m2 += delta * (dist - mean);
                    emp_x += &x * x.transpose();
                    emp_y += &y * y.transpose();
                }
                let se = (m2 / (draws as f64 - 1.0) / draws as f64).sqrt();
                emp_x /= draws as f64;
                emp_y /= draws as f64;
                let sigma_at = |emp: &DMatrix<f64>, k: &DMatrix<f64>, i: usize, j: usize| {
                    let sd =
                        ((k[(i, i)] * k[(j, j)] + k[(i, j)].powi(2)) / draws as f64).sqrt();
                    (emp[(i, j)] - k[(i, j)]).abs() / sd
                };
                let max_sigma = |emp: &DMatrix<f64>, k: &DMatrix<f64>| {
                    let mut worst = 0.0f64;
                    for i in 0..d {
                        for j in 0..=i {
                            worst = worst.max(sigma_at(emp, k, i, j));
                        }
                    }
                    worst
                };
                // a seeded 20-entry subset keeps the per-pair comparison
                // count small enough for a 4σ band to be meaningful; the
                // full maxima stay in the record set as diagnostics
                let mut subset_sigma = |emp: &DMatrix<f64>, k: &DMatrix<f64>| {
                    let mut worst = 0.0f64;
                    for _ in 0..20 {
                        let i = rng.gen_range(0..d);
                        let j = rng.gen_range(0..=i);
                        worst = worst.max(sigma_at(emp, k, i, j));
                    }
                    worst
                };
                let sub_x = subset_sigma(&emp_x, &kx);
                let sub_y = subset_sigma(&emp_y, &ky);
                let aat = &coupling.a * coupling.a.transpose();
                let bbt = &coupling.b * coupling.b.transpose();
                let stats = [
                    ("w2_trace", coupling.w2_sq),
                    ("w2_mc", mean),
                    ("w2_mc_se", se),
                    ("marginal_max_sigma_x", max_sigma(&emp_x, &kx)),
                    ("marginal_max_sigma_y", max_sigma(&emp_y, &ky)),
                    ("marginal_subset_sigma_x", sub_x),
                    ("marginal_subset_sigma_y", sub_y),
                    ("marginal_exact_gap_x", (&aat - &kx).abs().max()),
                    ("marginal_exact_gap_y", (&bbt - &ky).abs().max()),
                    ("dim", d as f64),
                ];
                Ok(stats
                    .into_iter()
                    .map(|(name, value)| ExperimentRecord {
                        experiment: cfg.label.clone(),
                        family: "psd_pair".into(),
                        n: d as u64,
                        n_t: d as u64,
                        v: 1,
                        replicate: rep,
                        statistic: name.into(),
                        value,
                        seed,
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Knot rows of f_n and g_n plus the window ends, as CSV for plotting.
pub fn curves_csv(
    family: &Family,
    n: u64,
    n_t: u64,
    x: f64,
    mode: crate::limit::CorrectionMode,
) -> Result<String> {
    let seq = make_family(family)?;
    let model = DensityModel::build(seq.clone())?;
    let sc = scaling(&seq, n, n_t)?;
    let shape = RiskShape::build(&seq, &sc, x + 1.0)?;
    let w = shape.window(x)?;
    let (gn, _) = build_gn(&model, &sc, &shape, w.j_lo, w.j_hi, EpsSpec::default(), mode)?;
    let mut out = String::from("curve,j,alpha,value\n");
    for (j, alpha, v) in shape.grid().iter_knots() {
        if j >= w.j_lo && j <= w.j_hi {
            out.push_str(&format!("f_n,{j},{alpha:.17e},{v:.17e}\n"));
        }
    }
    for (j, alpha, v) in gn.grid().iter_knots() {
        out.push_str(&format!("g_n,{j},{alpha:.17e},{v:.17e}\n"));
    }
    out.push_str(&format!("a_x,{},{:.17e},{:.17e}\n", w.j_lo, w.a_x, x));
    out.push_str(&format!("b_x,{},{:.17e},{:.17e}\n", w.j_hi, w.b_x, x));
    Ok(out)
}

/// The illustration curves: f_n(α) = e^{-α} - 1 on α ≤ 0 and
/// 0.8α + (8/30)α³ on α ≥ 0, with g_n(α) = 7.8α - 3 f_n(α) 1_{α<0},
/// sampled on [a_x, b_x] for the requested level x.
pub fn demo_curves_csv(x: f64, points: usize) -> Result<String> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Parameter("demo level x must be positive".into()));
    }
    let f = |a: f64| {
        if a <= 0.0 {
            (-a).exp() - 1.0
        } else {
            0.8 * a + 8.0 / 30.0 * a * a * a
        }
    };
    let g = |a: f64| 7.8 * a - if a < 0.0 { 3.0 * f(a) } else { 0.0 };
    let a_x = -(1.0 + x).ln();
    // right end: bisect 0.8b + (8/30)b³ = x
    let mut lo = 0.0;
    let mut hi = x.max(1.0);
    while f(hi) < x {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b_x = 0.5 * (lo + hi);
    let mut out = String::from("curve,j,alpha,value\n");
    let n = points.max(2);
    for i in 0..n {
        let a = a_x + (b_x - a_x) * i as f64 / (n - 1) as f64;
        out.push_str(&format!("f_n,{i},{a:.17e},{:.17e}\n", f(a)));
    }
    for i in 0..n {
        let a = a_x + (b_x - a_x) * i as f64 / (n - 1) as f64;
        out.push_str(&format!("g_n,{i},{a:.17e},{:.17e}\n", g(a)));
    }
    out.push_str(&format!("a_x,0,{a_x:.17e},{x:.17e}\n"));
    out.push_str(&format!("b_x,0,{b_x:.17e},{x:.17e}\n"));
    Ok(out)
}
