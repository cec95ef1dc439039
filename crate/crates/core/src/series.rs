//! Empirical Fourier coefficients, projection estimators ŝ_k, the empirical
//! contrast, and exact excess risk via Parseval.

use crate::density::{psi, CoefficientSequence, SQRT_2};
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// An i.i.d. sample on [0,1] with its provenance seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    seed: u64,
}

impl Sample {
    pub fn new(values: Vec<f64>, seed: u64) -> Result<Self> {
        if values.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Domain("sample values must lie in [0,1]".into()));
        }
        Ok(Self { values, seed })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// θ̂_j = P_n^T(ψ_j) for 0 ≤ j ≤ k_max over a subset T of the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCoefficients {
    theta_hat: Vec<f64>,
    n_t: usize,
}

impl EmpiricalCoefficients {
    /// Wrap raw coefficient values (synthetic estimators, diagnostics).
    /// `empirical_coeffs` is the estimating constructor.
    pub fn from_values(theta_hat: Vec<f64>, n_t: usize) -> Self {
        Self { theta_hat, n_t }
    }

    pub fn theta_hat(&self, j: u64) -> f64 {
        self.theta_hat[j as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn k_max(&self) -> u64 {
        (self.theta_hat.len() - 1) as u64
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    /// ŝ_k(x) = Σ_{j≤k} θ̂_j ψ_j(x).
    pub fn estimator_at(&self, k: u64, x: f64) -> f64 {
        (0..=k).map(|j| self.theta_hat(j) * psi(j, x)).sum()
    }
}

/// Empirical coefficients over the index subset T, j = 0..=k_max.
/// θ̂_0 is exactly 1; cosines are generated by the angle-addition recurrence.
pub fn empirical_coeffs(sample: &Sample, t: &[usize], k_max: u64) -> Result<EmpiricalCoefficients> {
    if t.is_empty() {
        return Err(Error::Domain("training subset T is empty".into()));
    }
    if let Some(&bad) = t.iter().find(|&&i| i >= sample.len()) {
        return Err(Error::Domain(format!(
            "index {bad} out of range for sample of size {}",
            sample.len()
        )));
    }
    let mut acc = vec![0.0f64; k_max as usize + 1];
    for &i in t {
        let omega = TWO_PI * sample.values[i];
        let c1 = omega.cos();
        let mut prev = 1.0; // cos(0)
        let mut cur = c1;
        for a in acc.iter_mut().skip(1) {
            *a += cur;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
    }
    let inv = 1.0 / t.len() as f64;
    let mut theta_hat = vec![1.0];
    theta_hat.extend(acc[1..].iter().map(|&a| SQRT_2 * a * inv));
    Ok(EmpiricalCoefficients::from_values(theta_hat, t.len()))
}

/// ‖ŝ_k - s‖² = Σ_{j≤k} (θ̂_j - θ_j)² + Σ_{j>k} θ_j², analytic tail.
pub fn exact_excess_risk(coeffs: &EmpiricalCoefficients, seq: &CoefficientSequence, k: u64) -> f64 {
    assert!(k <= coeffs.k_max(), "k beyond estimated coefficients");
    let head: f64 = (0..=k)
        .map(|j| {
            let d = coeffs.theta_hat(j) - seq.theta(j);
            d * d
        })
        .sum();
    head + seq.tail_sq_from(k)
}

/// Empirical contrast P_S γ(ŝ_k) = ‖ŝ_k‖² - 2 (1/|S|) Σ_{i∈S} ŝ_k(X_i),
/// with ‖ŝ_k‖² = Σ_{j≤k} θ̂_j² by orthonormality.
pub fn empirical_contrast(
    sample: &Sample,
    eval_set: &[usize],
    coeffs: &EmpiricalCoefficients,
    k: u64,
) -> Result<f64> {
    if eval_set.is_empty() {
        return Err(Error::Domain("evaluation subset is empty".into()));
    }
    assert!(k <= coeffs.k_max(), "k beyond estimated coefficients");
    let norm_sq: f64 = (0..=k).map(|j| coeffs.theta_hat(j).powi(2)).sum();
    let mut mean = 0.0;
    for &i in eval_set {
        if i >= sample.len() {
            return Err(Error::Domain(format!("index {i} out of sample range")));
        }
        mean += coeffs.estimator_at(k, sample.values[i]);
    }
    mean /= eval_set.len() as f64;
    Ok(norm_sq - 2.0 * mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{make_family, Family};

    #[test]
    fn coefficients_at_degenerate_points() {
        let s = Sample::new(vec![0.0; 5], 0).unwrap();
        let c = empirical_coeffs(&s, &[0, 1, 2, 3, 4], 6).unwrap();
        assert_eq!(c.theta_hat(0), 1.0);
        for j in 1..=6 {
            assert!((c.theta_hat(j) - SQRT_2).abs() < 1e-12);
        }
        let s = Sample::new(vec![0.25; 3], 0).unwrap();
        let c = empirical_coeffs(&s, &[0, 1, 2], 2).unwrap();
        assert!(c.theta_hat(1).abs() < 1e-12);
        assert!((c.theta_hat(2) + SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn single_point_value() {
        let s = Sample::new(vec![0.1], 0).unwrap();
        let c = empirical_coeffs(&s, &[0], 1).unwrap();
        let expect = SQRT_2 * (0.2 * std::f64::consts::PI).cos();
        assert!((c.theta_hat(1) - expect).abs() < 1e-12);
        assert!((expect - 1.14412).abs() < 1e-5);
    }

    #[test]
    fn recurrence_matches_direct_psi() {
        let vals: Vec<f64> = (0..50).map(|i| (i as f64 * 0.618_034) % 1.0).collect();
        let idx: Vec<usize> = (0..50).collect();
        let s = Sample::new(vals.clone(), 0).unwrap();
        let c = empirical_coeffs(&s, &idx, 40).unwrap();
        for j in 1..=40u64 {
            let direct: f64 = vals.iter().map(|&x| psi(j, x)).sum::<f64>() / 50.0;
            assert!((c.theta_hat(j) - direct).abs() < 1e-11, "j={j}");
            assert!(c.theta_hat(j).abs() <= SQRT_2 + 1e-12);
        }
    }

    #[test]
    fn excess_risk_cases() {
        let uniform = make_family(&Family::Uniform).unwrap();
        // a perfect estimator of the uniform has zero risk at any k
        let perfect = EmpiricalCoefficients::from_values(vec![1.0, 0.0, 0.0, 0.0], 10);
        for k in 0..=3 {
            assert_eq!(exact_excess_risk(&perfect, &uniform, k), 0.0);
        }
        // arbitrary coefficients against uniform: risk is Σ θ̂_j²
        let arb = EmpiricalCoefficients::from_values(vec![1.0, 0.3, -0.2], 10);
        let r = exact_excess_risk(&arb, &uniform, 2);
        assert!((r - (0.09 + 0.04)).abs() < 1e-15);
        // geometric truth, estimator equal to θ up to k=2: pure tail
        let geo = make_family(&Family::Geometric { ratio: 1.0 / 3.0 }).unwrap();
        let truncated =
            EmpiricalCoefficients::from_values(vec![1.0, geo.theta(1), geo.theta(2)], 10);
        let r = exact_excess_risk(&truncated, &geo, 2);
        assert!((r - 1.0 / 648.0).abs() < 1e-15);
    }

    #[test]
    fn contrast_cases() {
        let s = Sample::new(vec![0.1, 0.35, 0.8, 0.62], 0).unwrap();
        let all: Vec<usize> = (0..4).collect();
        let c = empirical_coeffs(&s, &all, 3).unwrap();
        // k = 0: ŝ_0 ≡ 1, contrast is 1 - 2 = -1
        assert_eq!(empirical_contrast(&s, &all, &c, 0).unwrap(), -1.0);
        // zero-extended synthetic estimator: contrast 0
        let zero = EmpiricalCoefficients::from_values(vec![0.0, 0.0], 4);
        assert_eq!(empirical_contrast(&s, &all, &zero, 1).unwrap(), 0.0);
        // seeded fixture vs direct re-evaluation
        let k = 3;
        let direct_norm: f64 = (0..=k).map(|j| c.theta_hat(j).powi(2)).sum();
        let direct_mean: f64 = s
            .values()
            .iter()
            .map(|&x| (0..=k).map(|j| c.theta_hat(j) * psi(j, x)).sum::<f64>())
            .sum::<f64>()
            / 4.0;
        let oracle = direct_norm - 2.0 * direct_mean;
        let got = empirical_contrast(&s, &all, &c, k).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        // error paths
        assert!(empirical_contrast(&s, &[], &c, 1).is_err());
        assert!(empirical_coeffs(&s, &[], 3).is_err());
        assert!(empirical_coeffs(&s, &[9], 3).is_err());
    }
}
