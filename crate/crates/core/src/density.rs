//! Densities s = Σ θ_j ψ_j on [0,1] over the cosine basis ψ_0 = 1,
//! ψ_j(x) = √2 cos(2πjx), described by finitely many stored coefficients
//! plus a closed-form tail rule. All infinite sums (tails, norms, pointwise
//! tail values) are evaluated analytically, never by blind truncation.

use crate::error::{Error, Result};
use crate::special::{hurwitz_zeta, periodic_zeta_cos, periodic_zeta_sin};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// ψ_j(x): ψ_0 ≡ 1, ψ_j(x) = √2 cos(2πjx) for j ≥ 1.
pub fn psi(j: u64, x: f64) -> f64 {
    if j == 0 {
        1.0
    } else {
        SQRT_2 * (TWO_PI * j as f64 * x).cos()
    }
}

/// `a ≥ b` under real-number semantics: tolerates a few ulps of rounding in
/// computed thresholds so exact real equalities classify as qualifying.
pub(crate) fn ge_real(a: f64, b: f64) -> bool {
    a >= b - 4.0 * f64::EPSILON * a.abs().max(b.abs())
}

/// Closed-form rule for coefficients beyond the stored prefix θ_0..θ_J.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Tail {
    /// θ_j = 0 for j > J.
    Zero,
    /// θ_j = θ_J · ratio^{j-J} for j > J, ratio ∈ (0, 1).
    Geometric { ratio: f64 },
    /// θ_j = scale · j^{-exponent} for j > J, exponent > 1/2.
    Polynomial { exponent: f64, scale: f64 },
}

/// Fourier coefficients θ_j = ⟨s, ψ_j⟩ of the density, with tail rule.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSequence {
    coeffs: Vec<f64>,
    tail: Tail,
    monotone_sq: bool,
}

impl CoefficientSequence {
    pub fn new(coeffs: Vec<f64>, tail: Tail) -> Result<Self> {
        if coeffs.is_empty() || coeffs[0] != 1.0 {
            return Err(Error::Parameter("θ_0 must equal 1".into()));
        }
        match tail {
            Tail::Geometric { ratio } => {
                if !(0.0 < ratio && ratio < 1.0) {
                    return Err(Error::Parameter(format!(
                        "geometric tail ratio must lie in (0,1), got {ratio}"
                    )));
                }
            }
            Tail::Polynomial { exponent, .. } => {
                if exponent <= 0.5 {
                    return Err(Error::Parameter(format!(
                        "polynomial tail exponent must exceed 1/2 for Σθ² < ∞, got {exponent}"
                    )));
                }
            }
            Tail::Zero => {}
        }
        let mut seq = Self {
            coeffs,
            tail,
            monotone_sq: false,
        };
        seq.monotone_sq = seq.compute_monotone_sq();
        Ok(seq)
    }

    /// Largest stored index J.
    pub fn stored_max(&self) -> u64 {
        (self.coeffs.len() - 1) as u64
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    /// True iff θ_j² is non-increasing over j ≥ 1 (stored prefix, junction
    /// into the tail, and within the tail rule).
    pub fn monotone_sq(&self) -> bool {
        self.monotone_sq
    }

    fn compute_monotone_sq(&self) -> bool {
        for j in 1..self.coeffs.len().saturating_sub(1) {
            if self.coeffs[j + 1].abs() > self.coeffs[j].abs() {
                return false;
            }
        }
        let j_first = self.stored_max() + 1;
        let junction_ok = if self.stored_max() >= 1 {
            self.theta(j_first).abs() <= self.theta(self.stored_max()).abs()
        } else {
            // only θ_0 stored: monotonicity starts at j = 1 inside the tail
            true
        };
        // both tail rules are non-increasing in |θ| beyond the junction
        junction_ok
    }

    /// θ_j for any j ≥ 0.
    pub fn theta(&self, j: u64) -> f64 {
        if let Some(&v) = self.coeffs.get(j as usize) {
            return v;
        }
        let jj = self.stored_max();
        match self.tail {
            Tail::Zero => 0.0,
            Tail::Geometric { ratio } => {
                self.coeffs[jj as usize] * ratio.powi((j - jj) as i32)
            }
            Tail::Polynomial { exponent, scale } => scale * (j as f64).powf(-exponent),
        }
    }

    pub fn theta_sq(&self, j: u64) -> f64 {
        let t = self.theta(j);
        t * t
    }

    /// Σ_{j > k} θ_j², by analytic remainder.
    pub fn tail_sq_from(&self, k: u64) -> f64 {
        let jj = self.stored_max();
        let mut acc = 0.0;
        for j in (k + 1)..=jj {
            acc += self.theta_sq(j);
        }
        let m = k.max(jj);
        acc + match self.tail {
            Tail::Zero => 0.0,
            Tail::Geometric { ratio } => {
                let t = self.coeffs[jj as usize];
                let r2 = ratio * ratio;
                t * t * r2.powi((m + 1 - jj) as i32) / (1.0 - r2)
            }
            Tail::Polynomial { exponent, scale } => {
                scale * scale * hurwitz_zeta(2.0 * exponent, (m + 1) as f64)
            }
        }
    }

    /// Σ_{j > k} |θ_j|; None when the tail is not absolutely summable.
    pub fn tail_abs_from(&self, k: u64) -> Option<f64> {
        let jj = self.stored_max();
        let mut acc = 0.0;
        for j in (k + 1)..=jj {
            acc += self.theta(j).abs();
        }
        let m = k.max(jj);
        match self.tail {
            Tail::Zero => Some(acc),
            Tail::Geometric { ratio } => {
                let t = self.coeffs[jj as usize].abs();
                Some(acc + t * ratio.powi((m + 1 - jj) as i32) / (1.0 - ratio))
            }
            Tail::Polynomial { exponent, scale } => {
                if exponent <= 1.0 {
                    None
                } else {
                    Some(acc + scale.abs() * hurwitz_zeta(exponent, (m + 1) as f64))
                }
            }
        }
    }

    /// ‖θ‖_{ℓ¹} = Σ_{j≥0} |θ_j|.
    pub fn ell1_norm(&self) -> Option<f64> {
        let stored: f64 = self.coeffs.iter().map(|t| t.abs()).sum();
        Some(stored + self.tail_abs_from(self.stored_max())?)
    }

    /// ‖s‖² = Σ_j θ_j² (Parseval).
    pub fn l2_norm_sq(&self) -> f64 {
        let stored: f64 = self.coeffs.iter().map(|t| t * t).sum();
        stored + self.tail_sq_from(self.stored_max())
    }

    /// Σ_{j > m} θ_j cos(2πjx) for m ≥ stored_max, to absolute accuracy ≈ tol.
    fn tail_cos_from(&self, m: u64, x: f64, tol: f64) -> Result<f64> {
        let jj = self.stored_max();
        debug_assert!(m >= jj);
        match self.tail {
            Tail::Zero => Ok(0.0),
            Tail::Geometric { ratio } => {
                let t = self.coeffs[jj as usize];
                let mut acc = 0.0;
                let mut fac = ratio.powi((m + 1 - jj) as i32);
                let mut j = m + 1;
                // geometric remainder |θ_J| fac r/(1-r) below tol terminates the loop
                while t.abs() * fac / (1.0 - ratio) > tol * 0.5 && fac > 0.0 {
                    acc += t * fac * (TWO_PI * j as f64 * x).cos();
                    fac *= ratio;
                    j += 1;
                }
                Ok(acc)
            }
            Tail::Polynomial { exponent, scale } => {
                match periodic_zeta_cos(x, exponent) {
                    Ok(full) => {
                        let mut partial = 0.0;
                        for j in 1..=m {
                            partial += (j as f64).powf(-exponent) * (TWO_PI * j as f64 * x).cos();
                        }
                        Ok(scale * (full - partial))
                    }
                    Err(Error::UnsupportedTail(_)) => {
                        direct_oscillatory_tail(m, x, exponent, tol / scale.abs().max(1e-300), false)
                            .map(|v| scale * v)
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }

    /// Σ_{j > m} θ_j sin(2πjx)/(2πj) for m ≥ stored_max (cdf tail).
    fn tail_sin_over_j_from(&self, m: u64, x: f64, tol: f64) -> Result<f64> {
        let jj = self.stored_max();
        debug_assert!(m >= jj);
        match self.tail {
            Tail::Zero => Ok(0.0),
            Tail::Geometric { ratio } => {
                let t = self.coeffs[jj as usize];
                let mut acc = 0.0;
                let mut fac = ratio.powi((m + 1 - jj) as i32);
                let mut j = m + 1;
                while t.abs() * fac / (1.0 - ratio) > tol && fac > 0.0 {
                    acc += t * fac * (TWO_PI * j as f64 * x).sin() / (TWO_PI * j as f64);
                    fac *= ratio;
                    j += 1;
                }
                Ok(acc)
            }
            Tail::Polynomial { exponent, scale } => {
                let s1 = exponent + 1.0;
                match periodic_zeta_sin(x, s1) {
                    Ok(full) => {
                        let mut partial = 0.0;
                        for j in 1..=m {
                            partial += (j as f64).powf(-s1) * (TWO_PI * j as f64 * x).sin();
                        }
                        Ok(scale / TWO_PI * (full - partial))
                    }
                    Err(Error::UnsupportedTail(_)) => {
                        direct_oscillatory_tail(m, x, s1, tol * TWO_PI / scale.abs().max(1e-300), true)
                            .map(|v| scale / TWO_PI * v)
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }

    /// s(x) = Σ_j θ_j ψ_j(x), pointwise, tail in closed form.
    pub fn density_eval(&self, x: f64, trunc_tol: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0,1]")));
        }
        if let Tail::Polynomial { exponent, .. } = self.tail {
            if exponent <= 1.0 {
                return Err(Error::UnsupportedTail(format!(
                    "|θ| not summable for exponent {exponent} <= 1; pointwise error cannot be bounded"
                )));
            }
        }
        let mut acc = self.coeffs[0];
        let mut cos_acc = 0.0;
        for j in 1..=self.stored_max() {
            cos_acc += self.theta(j) * (TWO_PI * j as f64 * x).cos();
        }
        cos_acc += self.tail_cos_from(self.stored_max(), x, trunc_tol / SQRT_2)?;
        acc += SQRT_2 * cos_acc;
        Ok(acc)
    }

    /// F(x) = ∫_0^x s(t) dt.
    pub fn cdf(&self, x: f64, trunc_tol: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0,1]")));
        }
        let mut sin_acc = 0.0;
        for j in 1..=self.stored_max() {
            sin_acc += self.theta(j) * (TWO_PI * j as f64 * x).sin() / (TWO_PI * j as f64);
        }
        sin_acc += self.tail_sin_over_j_from(self.stored_max(), x, trunc_tol / SQRT_2)?;
        Ok(x + SQRT_2 * sin_acc)
    }

    /// Rigorous bound on sup_{|x-y| ≤ d} |s(x) - s(y)|:
    /// √2 Σ_{j≥1} |θ_j| min(2, 2πjd), tail handled analytically.
    pub fn continuity_modulus(&self, d: f64) -> f64 {
        let cutoff = (1.0 / (std::f64::consts::PI * d)).ceil() as u64;
        let mut acc = 0.0;
        for j in 1..=cutoff.max(self.stored_max()) {
            let w = (TWO_PI * j as f64 * d).min(2.0);
            acc += w * self.theta(j).abs();
            if j >= cutoff && j >= self.stored_max() {
                break;
            }
        }
        let from = cutoff.max(self.stored_max());
        let tail = self.tail_abs_from(from).unwrap_or(f64::INFINITY);
        SQRT_2 * (acc + 2.0 * tail)
    }
}

/// Direct summation of Σ_{j>m} j^{-s} cos/sin(2πjx) with an analytic stop
/// bound; fallback for exponents the functional equation does not cover.
fn direct_oscillatory_tail(m: u64, x: f64, s: f64, tol: f64, sine: bool) -> Result<f64> {
    // Σ_{j>M} j^{-s} <= M^{1-s}/(s-1)
    let stop = (tol * (s - 1.0)).powf(1.0 / (1.0 - s));
    if !stop.is_finite() || stop > 2e7 {
        return Err(Error::UnsupportedTail(format!(
            "direct tail summation for exponent {s} cannot reach tolerance {tol}"
        )));
    }
    let stop = (stop.ceil() as u64).max(m + 1);
    let mut acc = 0.0;
    for j in (m + 1)..=stop {
        let w = TWO_PI * j as f64 * x;
        acc += (j as f64).powf(-s) * if sine { w.sin() } else { w.cos() };
    }
    Ok(acc)
}

/// Certified two-sided bracket for a scalar norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

/// A coefficient sequence together with certified norms and the
/// non-negativity certificate required for sampling.
#[derive(Debug, Clone)]
pub struct DensityModel {
    seq: CoefficientSequence,
    l2_norm_sq: f64,
    sup_norm: Bracket,
    ell1_norm: f64,
    min_density: Bracket,
    nonneg_certified: bool,
}

/// Grid size used for the non-negativity / sup-norm certification scan.
pub const CERT_GRID_POINTS: usize = 20_000;

impl DensityModel {
    pub fn build(seq: CoefficientSequence) -> Result<Self> {
        let ell1_norm = seq.ell1_norm().ok_or_else(|| {
            Error::UnsupportedTail("‖θ‖_{ℓ¹} is infinite; model norms undefined".into())
        })?;
        let l2_norm_sq = seq.l2_norm_sq();
        let n = CERT_GRID_POINTS;
        let h = 1.0 / (n - 1) as f64;
        let mut min_v = f64::INFINITY;
        let mut max_abs = 0.0f64;
        for i in 0..n {
            let x = i as f64 * h;
            let v = seq.density_eval(x.min(1.0), 1e-12)?;
            min_v = min_v.min(v);
            max_abs = max_abs.max(v.abs());
        }
        let slack = seq.continuity_modulus(h / 2.0);
        let min_density = Bracket {
            lo: min_v - slack,
            hi: min_v,
        };
        let sup_norm = Bracket {
            lo: max_abs,
            hi: max_abs + slack,
        };
        let nonneg_certified = min_density.lo >= -1e-9;
        Ok(Self {
            seq,
            l2_norm_sq,
            sup_norm,
            ell1_norm,
            min_density,
            nonneg_certified,
        })
    }

    pub fn seq(&self) -> &CoefficientSequence {
        &self.seq
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm_sq
    }

    /// Certified bracket on ‖s‖_∞.
    pub fn sup_norm(&self) -> Bracket {
        self.sup_norm
    }

    pub fn ell1_norm(&self) -> f64 {
        self.ell1_norm
    }

    pub fn min_density(&self) -> Bracket {
        self.min_density
    }

    pub fn nonneg_certified(&self) -> bool {
        self.nonneg_certified
    }

    /// i.i.d. draws from s by rejection sampling under the flat envelope of
    /// height 1 + √2 ‖θ‖_{ℓ¹}.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        if !self.nonneg_certified {
            return Err(Error::NotCertified);
        }
        let envelope = 1.0 + SQRT_2 * self.ell1_norm;
        let mut out = Vec::with_capacity(n);
        let mut proposed: u64 = 0;
        let min_trials = 10_000u64.max(1000 * n as u64);
        while out.len() < n {
            let x: f64 = rng.gen::<f64>();
            let u: f64 = rng.gen::<f64>() * envelope;
            proposed += 1;
            if u <= self.seq.density_eval(x, 1e-12)? {
                out.push(x);
            }
            if proposed >= min_trials && (out.len() as u64) < proposed / 1000 {
                return Err(Error::LowAcceptance {
                    accepted: out.len() as u64,
                    proposed,
                });
            }
        }
        Ok(out)
    }

    /// Deterministic sampling from a seed (ChaCha8 stream).
    pub fn sample_seeded(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(n, &mut rng)
    }
}

/// Exact Cov(ψ_i(X), ψ_j(X)) for i, j ≥ 1:
/// θ_{i+j}/√2 + ((1-δ_{ij})/√2 + δ_{ij}) θ_{|i-j|} - θ_i θ_j.
pub fn cov_psi(seq: &CoefficientSequence, i: u64, j: u64) -> f64 {
    assert!(i >= 1 && j >= 1, "cov_psi indices must be >= 1");
    let diag = if i == j { 1.0 } else { 1.0 / SQRT_2 };
    seq.theta(i + j) / SQRT_2 + diag * seq.theta(i.abs_diff(j)) - seq.theta(i) * seq.theta(j)
}

/// Named coefficient families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Family {
    Uniform,
    Geometric { ratio: f64 },
    Polynomial { exponent: f64, scale: f64 },
    Plateau { height: f64, width: u64 },
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Uniform => write!(f, "uniform"),
            Family::Geometric { ratio } => write!(f, "geometric(r={ratio})"),
            Family::Polynomial { exponent, scale } => {
                write!(f, "polynomial(beta={exponent};kappa={scale})")
            }
            Family::Plateau { height, width } => write!(f, "plateau(h={height};u={width})"),
        }
    }
}

/// Build the coefficient sequence of a named family.
pub fn make_family(family: &Family) -> Result<CoefficientSequence> {
    match *family {
        Family::Uniform => CoefficientSequence::new(vec![1.0], Tail::Zero),
        Family::Geometric { ratio } => CoefficientSequence::new(vec![1.0], Tail::Geometric { ratio }),
        Family::Polynomial { exponent, scale } => {
            if exponent <= 1.0 {
                return Err(Error::Parameter(format!(
                    "polynomial family exponent must exceed 1, got {exponent}"
                )));
            }
            CoefficientSequence::new(vec![1.0], Tail::Polynomial { exponent, scale })
        }
        Family::Plateau { height, width } => {
            if height <= 0.0 || !height.is_finite() {
                return Err(Error::Parameter(format!(
                    "plateau height must be positive and finite, got {height}"
                )));
            }
            let mut coeffs = vec![1.0];
            coeffs.extend(std::iter::repeat_n(height.sqrt(), width as usize));
            CoefficientSequence::new(coeffs, Tail::Zero)
        }
    }
}

/// Supplied constants for the decay hypotheses, plus the (n, n_t) pair for
/// the two sample-size hypotheses when available.
#[derive(Debug, Clone, Copy)]
pub struct HypothesisConstants {
    pub c1: f64,
    pub delta1: f64,
    pub c2: f64,
    pub delta2: f64,
    pub c3: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub delta5: f64,
    pub sample_sizes: Option<(u64, u64)>,
}

impl HypothesisConstants {
    fn validate(&self) -> Result<()> {
        if self.c1 < 0.0 || self.delta1 < 0.0 || self.c2 < 0.0 || self.delta2 < 0.0 {
            return Err(Error::Parameter(
                "c1, δ1, c2, δ2 must be non-negative".into(),
            ));
        }
        if self.c3 <= 0.0 || self.delta3 <= 0.0 || self.delta4 <= 0.0 || self.delta5 <= 0.0 {
            return Err(Error::Parameter(
                "c3, δ3, δ4, δ5 must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypCheck {
    pub holds_on_checked_range: bool,
    pub first_violation: Option<u64>,
}

impl HypCheck {
    fn from_violation(first: Option<u64>) -> Self {
        Self {
            holds_on_checked_range: first.is_none(),
            first_violation: first,
        }
    }
}

/// Outcome of checking the five decay/sample-size hypotheses on a finite
/// range; "holds" always means "holds on the checked range".
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub constants: HypothesisConstants,
    pub k_check_max: u64,
    pub tail_upper: HypCheck,
    pub tail_lower: HypCheck,
    pub local_ratio: HypCheck,
    pub test_size_upper: Option<HypCheck>,
    pub test_size_lower: Option<HypCheck>,
}

/// Check the hypotheses for 1 ≤ k ≤ k_check_max using analytic tail sums.
/// A failing hypothesis is reported, not an error.
pub fn check_hypotheses(
    seq: &CoefficientSequence,
    constants: HypothesisConstants,
    k_check_max: u64,
) -> Result<HypothesisReport> {
    constants.validate()?;
    if k_check_max < 2 {
        return Err(Error::Parameter("k_check_max must be >= 2".into()));
    }
    let mut v1 = None;
    let mut v2 = None;
    let mut v3 = None;
    for k in 1..=k_check_max {
        let tail = seq.tail_sq_from(k);
        let kf = k as f64;
        if v1.is_none() && tail > constants.c1 / kf.powf(2.0 + constants.delta1) {
            v1 = Some(k);
        }
        if v2.is_none() && tail < constants.c2 / kf.powf(constants.delta2) {
            v2 = Some(k);
        }
        if v3.is_none() {
            let step = kf.powf(constants.delta3).floor() as u64;
            let left = k.saturating_sub(step).max(1);
            if seq.theta_sq(k + step) < constants.c3 * seq.theta_sq(left) {
                v3 = Some(k);
            }
        }
    }
    let (test_size_upper, test_size_lower) = match constants.sample_sizes {
        None => (None, None),
        Some((n, n_t)) => {
            let n_v = (n - n_t) as f64;
            let nf = n as f64;
            let up = n_v <= snap(nf.powf(1.0 - constants.delta4));
            let lo = n_v >= snap(nf.powf(2.0 / 3.0 + constants.delta5));
            (
                Some(HypCheck::from_violation(if up { None } else { Some(n) })),
                Some(HypCheck::from_violation(if lo { None } else { Some(n) })),
            )
        }
    };
    Ok(HypothesisReport {
        constants,
        k_check_max,
        tail_upper: HypCheck::from_violation(v1),
        tail_lower: HypCheck::from_violation(v2),
        local_ratio: HypCheck::from_violation(v3),
        test_size_upper,
        test_size_lower,
    })
}

/// Snap a float to the nearest integer when within relative 1e-9, so
/// exact powers are not lost to rounding before floor/ceil.
pub(crate) fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 * v.abs().max(1.0) {
        r
    } else {
        v
    }
}

/// Admissible test-set sizes [⌈n^{2/3+δ5}⌉, ⌊n^{1-δ4}⌋].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NtWindow {
    pub n_v_min: u64,
    pub n_v_max: u64,
}

impl NtWindow {
    pub fn is_empty(&self) -> bool {
        self.n_v_min > self.n_v_max
    }

    /// Midpoint n_v, for experiment defaults. None when empty.
    pub fn midpoint(&self) -> Option<u64> {
        if self.is_empty() {
            None
        } else {
            Some((self.n_v_min + self.n_v_max) / 2)
        }
    }
}

pub fn nt_window(n: u64, delta4: f64, delta5: f64) -> Result<NtWindow> {
    if delta4 <= 0.0 || delta5 <= 0.0 {
        return Err(Error::Parameter("δ4 and δ5 must be positive".into()));
    }
    if n < 2 {
        return Err(Error::Parameter("n must be >= 2".into()));
    }
    let nf = n as f64;
    let n_v_min = snap(nf.powf(2.0 / 3.0 + delta5)).ceil() as u64;
    let n_v_max = snap(nf.powf(1.0 - delta4)).floor() as u64;
    Ok(NtWindow { n_v_min, n_v_max })
}
