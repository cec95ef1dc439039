//! Hold-out / incomplete V-fold split schemes, the CV criteria, argmin
//! selection, and the rescaled processes with their excess-risk /
//! empirical-fluctuation decomposition.

use crate::density::CoefficientSequence;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::oracle::ScalingSummary;
use crate::series::{empirical_coeffs, EmpiricalCoefficients, Sample};
use rand::seq::SliceRandom;
use rand::Rng;

/// One train/test split: T_i and its complement I_i.
#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// V folds with pairwise-disjoint, equal-size test sets I_i of size n - n_t.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitScheme {
    n: usize,
    n_t: usize,
    v: usize,
    folds: Vec<Fold>,
}

impl SplitScheme {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn folds(&self) -> &[Fold] {
        &self.folds
    }
}

/// Draw a scheme with uniformly random disjoint test blocks (a random
/// permutation cut into V consecutive blocks of size n - n_t).
/// V = 1 is the plain hold-out.
pub fn make_scheme<R: Rng>(n: usize, n_t: usize, v: usize, rng: &mut R) -> Result<SplitScheme> {
    if v < 1 {
        return Err(Error::Scheme(format!("V = {v} < 1")));
    }
    if n_t < 1 || n_t > n - 1 {
        return Err(Error::Scheme(format!("need 1 <= n_t <= n-1, got n_t={n_t}, n={n}")));
    }
    let n_v = n - n_t;
    if v * n_v > n {
        return Err(Error::Scheme(format!(
            "(V-1)/V·n = {:.6} > n_t = {n_t} (disjoint test sets need V(n - n_t) <= n)",
            (v - 1) as f64 / v as f64 * n as f64
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut folds = Vec::with_capacity(v);
    for i in 0..v {
        let mut test: Vec<usize> = perm[i * n_v..(i + 1) * n_v].to_vec();
        test.sort_unstable();
        let mut mask = vec![false; n];
        for &j in &test {
            mask[j] = true;
        }
        let train: Vec<usize> = (0..n).filter(|&j| !mask[j]).collect();
        folds.push(Fold { train, test });
    }
    Ok(SplitScheme { n, n_t, v, folds })
}

/// HO_T(k) = ‖ŝ_k^T‖² - 2 P_n^{T^c}(ŝ_k^T)
///         = Σ_{j≤k} θ̂_j^T (θ̂_j^T - 2 θ̂_j^{T^c}).
pub fn holdout_crit(sample: &Sample, train: &[usize], k: u64) -> Result<f64> {
    let curve = holdout_curve(sample, train, k)?;
    Ok(curve[k as usize])
}

/// HO_T(k) for every k = 0..=k_max at once (cumulative in k).
pub fn holdout_curve(sample: &Sample, train: &[usize], k_max: u64) -> Result<Vec<f64>> {
    let test = complement(sample.len(), train)?;
    if test.is_empty() {
        return Err(Error::Domain("test subset T^c is empty".into()));
    }
    let ct = empirical_coeffs(sample, train, k_max)?;
    let cv = empirical_coeffs(sample, &test, k_max)?;
    Ok(holdout_curve_from_coeffs(&ct, &cv, k_max))
}

/// The same criterion from precomputed train/test coefficients.
pub fn holdout_curve_from_coeffs(
    train: &EmpiricalCoefficients,
    test: &EmpiricalCoefficients,
    k_max: u64,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max as usize + 1);
    let mut acc = 0.0;
    for j in 0..=k_max {
        let t = train.theta_hat(j);
        acc += t * (t - 2.0 * test.theta_hat(j));
        out.push(acc);
    }
    out
}

fn complement(n: usize, subset: &[usize]) -> Result<Vec<usize>> {
    let mut mask = vec![false; n];
    for &i in subset {
        if i >= n {
            return Err(Error::Domain(format!("index {i} out of range 0..{n}")));
        }
        mask[i] = true;
    }
    Ok((0..n).filter(|&i| !mask[i]).collect())
}

/// Incomplete V-fold criterion: mean of the fold hold-out criteria.
pub fn cv_crit(sample: &Sample, scheme: &SplitScheme, k: u64) -> Result<f64> {
    let curve = cv_curve(sample, scheme, k)?;
    Ok(curve[k as usize])
}

pub fn cv_curve(sample: &Sample, scheme: &SplitScheme, k_max: u64) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; k_max as usize + 1];
    for fold in &scheme.folds {
        let ho = holdout_curve(sample, &fold.train, k_max)?;
        for (a, h) in acc.iter_mut().zip(&ho) {
            *a += h;
        }
    }
    let inv = 1.0 / scheme.v as f64;
    Ok(acc.into_iter().map(|a| a * inv).collect())
}

/// Argmin over criterion values indexed by k = 0, 1, ….
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Smallest index attaining the minimum.
    pub k_hat: u64,
    /// Every index attaining the minimum.
    pub argmin: Vec<u64>,
    /// k_hat sits on the last searched index (truncation visible).
    pub at_boundary: bool,
}

pub fn select_k(values: &[f64]) -> Result<Selection> {
    if values.is_empty() {
        return Err(Error::Data("no criterion values to minimize".into()));
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Data(format!("NaN criterion value at k = {i}")));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let argmin: Vec<u64> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == min)
        .map(|(i, _)| i as u64)
        .collect();
    let k_hat = argmin[0];
    Ok(Selection {
        k_hat,
        at_boundary: k_hat as usize == values.len() - 1,
        argmin,
    })
}

/// Per-fold rescaled processes on the grid j/Δ, j ∈ [j_min, j_max]:
/// the criteria `ho`, their mean `cv`, the rescaled excess risks `excess`
/// (L), and the centered empirical fluctuations `fluct` (Z), so that
/// ho = excess - fluct holds as an algebraic identity at the knots.
#[derive(Debug, Clone)]
pub struct RescaledSet {
    pub ho: Vec<GridFunction>,
    pub cv: GridFunction,
    pub excess: Vec<GridFunction>,
    pub fluct: Vec<GridFunction>,
}

/// Build the rescaled processes of a scheme. Requires the true θ
/// (simulation-only decomposition) and a non-degenerate scaling.
pub fn rescaled_processes(
    sample: &Sample,
    scheme: &SplitScheme,
    seq: &CoefficientSequence,
    sc: &ScalingSummary,
    j_min: i64,
    j_max: i64,
) -> Result<RescaledSet> {
    if sc.degenerate {
        return Err(Error::Grid("degenerate scaling: Δ = 0".into()));
    }
    if j_min > 0 || j_max < 0 || j_min < -(sc.k_star as i64) {
        return Err(Error::Grid(format!(
            "grid [{j_min}, {j_max}] must contain 0 and stay above -k* = -{}",
            sc.k_star
        )));
    }
    let k_max = (sc.k_star as i64 + j_max) as u64;
    let ks = sc.k_star;
    let inv_e = 1.0 / sc.e_frak;
    let mut ho = Vec::with_capacity(scheme.v);
    let mut excess = Vec::with_capacity(scheme.v);
    let mut fluct = Vec::with_capacity(scheme.v);
    for fold in &scheme.folds {
        let ct = empirical_coeffs(sample, &fold.train, k_max)?;
        let cx = empirical_coeffs(sample, &fold.test, k_max)?;
        let curve = holdout_curve_from_coeffs(&ct, &cx, k_max);
        let base = curve[ks as usize];
        let ho_vals: Vec<f64> = (j_min..=j_max)
            .map(|j| (curve[(ks as i64 + j) as usize] - base) * inv_e)
            .collect();
        // cumulative Σ (θ̂_j - θ_j)² for the excess-risk differences
        let mut d2 = Vec::with_capacity(k_max as usize + 1);
        let mut acc = 0.0;
        for j in 0..=k_max {
            let d = ct.theta_hat(j) - seq.theta(j);
            acc += d * d;
            d2.push(acc);
        }
        let risk_at = |k: u64| d2[k as usize] + seq.tail_sq_from(k);
        let base_risk = risk_at(ks);
        let l_vals: Vec<f64> = (j_min..=j_max)
            .map(|j| (risk_at((ks as i64 + j) as u64) - base_risk) * inv_e)
            .collect();
        // Z(j/Δ) = sgn(j) (2/𝔢) Σ_{i∈block(j)} θ̂_i^T (θ̂_i^{T^c} - θ_i)
        let mut zc = Vec::with_capacity(k_max as usize + 1);
        let mut acc = 0.0;
        for j in 0..=k_max {
            acc += ct.theta_hat(j) * (cx.theta_hat(j) - seq.theta(j));
            zc.push(acc);
        }
        let base_z = zc[ks as usize];
        let z_vals: Vec<f64> = (j_min..=j_max)
            .map(|j| 2.0 * (zc[(ks as i64 + j) as usize] - base_z) * inv_e)
            .collect();
        ho.push(GridFunction::new(j_min, sc.delta, ho_vals));
        excess.push(GridFunction::new(j_min, sc.delta, l_vals));
        fluct.push(GridFunction::new(j_min, sc.delta, z_vals));
    }
    let mut cv_vals = vec![0.0; (j_max - j_min + 1) as usize];
    for h in &ho {
        for (c, v) in cv_vals.iter_mut().zip(h.values()) {
            *c += v;
        }
    }
    let inv_v = 1.0 / scheme.v as f64;
    let cv = GridFunction::new(
        j_min,
        sc.delta,
        cv_vals.into_iter().map(|v| v * inv_v).collect(),
    );
    Ok(RescaledSet {
        ho,
        cv,
        excess,
        fluct,
    })
}
