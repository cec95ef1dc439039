//! Oracle quantities: optimal index k*(n), oracle risk or(n), the scaling
//! triple (Δ, ℰ, 𝔢), the deterministic rescaled-risk shape f_n, and the
//! sublevel windows [a_x, b_x].

use crate::density::{ge_real, CoefficientSequence};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Largest index k whose squared coefficient still clears `thresh`.
/// Safe to terminate once inside the tail region, where |θ| is non-increasing.
fn max_index_sq_at_least(seq: &CoefficientSequence, thresh: f64) -> u64 {
    let stored = seq.stored_max();
    let mut best = 0;
    let mut k = 1u64;
    loop {
        let q = ge_real(seq.theta_sq(k), thresh);
        if q {
            best = k;
        }
        if k > stored && !q {
            return best;
        }
        k += 1;
    }
}

/// k*(n) = max{k ∈ ℕ : θ_k² ≥ 1/n}. θ_0 = 1 guarantees k* ≥ 0.
pub fn k_star(seq: &CoefficientSequence, n: u64) -> u64 {
    assert!(n >= 1);
    max_index_sq_at_least(seq, 1.0 / n as f64)
}

/// or(n) = inf_k { Σ_{j>k} θ_j² + k/n }, scanned until k/n alone exceeds
/// the best value found (tails are non-negative, so no later k can win).
pub fn oracle_risk(seq: &CoefficientSequence, n: u64) -> f64 {
    assert!(n >= 1);
    let nf = n as f64;
    let mut best = seq.tail_sq_from(0);
    let mut k = 1u64;
    loop {
        let lin = k as f64 / nf;
        if lin > best {
            return best;
        }
        let v = seq.tail_sq_from(k) + lin;
        if v < best {
            best = v;
        }
        k += 1;
    }
}

/// The scaling quantities of a (θ, n_t, n) triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingSummary {
    pub k_star: u64,
    pub oracle_risk: f64,
    pub delta_d: u64,
    pub delta_g: u64,
    pub delta: u64,
    /// ℰ = Δ / n_t, the risk-fluctuation scale.
    pub e_script: f64,
    /// 𝔢 = √(ℰ / n_v), the criterion scale.
    pub e_frak: f64,
    pub n: u64,
    pub n_t: u64,
    pub n_v: u64,
    /// Both qualifying sets empty (Δ = 0); downstream rescaling undefined.
    pub degenerate: bool,
    /// monotone_sq held, so k*/Δ carry their intended meaning.
    pub canonical: bool,
}

/// Compute (k*, or, Δ_d, Δ_g, Δ, ℰ, 𝔢) for the triple (seq, n_t, n).
pub fn scaling(seq: &CoefficientSequence, n: u64, n_t: u64) -> Result<ScalingSummary> {
    if n_t < 1 || n_t > n - 1 {
        return Err(Error::Parameter(format!(
            "need 1 <= n_t <= n-1, got n_t={n_t}, n={n}"
        )));
    }
    let n_v = n - n_t;
    let ks = k_star(seq, n_t);
    let ntf = n_t as f64;
    let sq_ratio = (ntf / n_v as f64).sqrt();
    let stored = seq.stored_max();

    // Δ_d = max{l >= 1 : θ_{k*+l}² >= [1 - √(n_t/n_v)/√l] / n_t}; 0 if none.
    let mut delta_d = 0u64;
    let mut l = 1u64;
    loop {
        let thresh = (1.0 - sq_ratio / (l as f64).sqrt()) / ntf;
        let q = ge_real(seq.theta_sq(ks + l), thresh);
        if q {
            delta_d = l;
        }
        let beyond_auto = thresh > 0.0;
        let beyond_stored = ks + l > stored;
        if beyond_auto && beyond_stored && !q {
            break;
        }
        l += 1;
    }

    // Δ_g = min{l ∈ {1..k*} : θ_{k*-l}² >= [1 + √(n_t/n_v)/√l] / n_t}; 0 if none.
    let mut delta_g = 0u64;
    for l in 1..=ks {
        let thresh = (1.0 + sq_ratio / (l as f64).sqrt()) / ntf;
        if ge_real(seq.theta_sq(ks - l), thresh) {
            delta_g = l;
            break;
        }
    }

    let delta = delta_d.max(delta_g);
    let e_script = delta as f64 / ntf;
    let e_frak = (e_script / n_v as f64).sqrt();
    Ok(ScalingSummary {
        k_star: ks,
        oracle_risk: oracle_risk(seq, n_t),
        delta_d,
        delta_g,
        delta,
        e_script,
        e_frak,
        n,
        n_t,
        n_v,
        degenerate: delta == 0,
        canonical: seq.monotone_sq(),
    })
}

fn ge_slack(a: f64, b: f64) -> bool {
    a >= b - 8.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0)
}

impl ScalingSummary {
    /// Check the Δ/ℰ/𝔢 inequality chain. Returns violation descriptions;
    /// empty means all five hold. Meaningful when `canonical` and not
    /// degenerate (callers gate on that).
    pub fn check_lemma_chain(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if (self.delta as u128) * (self.n_v as u128) < self.n_t as u128 {
            bad.push(format!(
                "Δ = {} < n_t/n_v = {}/{}",
                self.delta, self.n_t, self.n_v
            ));
        }
        let inv_nv = 1.0 / self.n_v as f64;
        if !ge_slack(self.e_script, inv_nv) {
            bad.push(format!("ℰ = {} < 1/n_v = {inv_nv}", self.e_script));
        }
        if !ge_slack(self.e_frak, inv_nv) {
            bad.push(format!("𝔢 = {} < 1/n_v = {inv_nv}", self.e_frak));
        }
        if !ge_slack(self.e_script, self.e_frak) {
            bad.push(format!("𝔢 = {} > ℰ = {}", self.e_frak, self.e_script));
        }
        let ub = 2.0 * self.oracle_risk + inv_nv;
        if !ge_slack(ub, self.e_script) {
            bad.push(format!(
                "ℰ = {} > 2·or(n_t) + 1/n_v = {ub}",
                self.e_script
            ));
        }
        bad
    }
}

/// 𝔢 f_n((k - k*)/Δ) = Σ_{j = k∧k*+1}^{k∨k*} |θ_j² - 1/n_t|, evaluated at a
/// single signed grid offset j = k - k*.
pub fn f_n_at(seq: &CoefficientSequence, sc: &ScalingSummary, j: i64) -> Result<f64> {
    if j < -(sc.k_star as i64) {
        return Err(Error::Grid(format!(
            "grid offset {j} below -k* = -{}",
            sc.k_star
        )));
    }
    if sc.degenerate {
        return Err(Error::Grid("degenerate scaling: Δ = 0".into()));
    }
    let inv_nt = 1.0 / sc.n_t as f64;
    let (lo, hi) = if j >= 0 {
        (sc.k_star + 1, sc.k_star + j as u64)
    } else {
        ((sc.k_star as i64 + j + 1) as u64, sc.k_star)
    };
    let mut acc = 0.0;
    for i in lo..=hi {
        acc += (seq.theta_sq(i) - inv_nt).abs();
    }
    Ok(acc / sc.e_frak)
}

/// The deterministic rescaled-risk shape f_n on the grid j/Δ,
/// j ∈ [-k*, j_max], extended far enough that sublevel windows up to
/// `x_max` fit with 2Δ knots of slack.
#[derive(Debug, Clone)]
pub struct RiskShape {
    grid: GridFunction,
    summary: ScalingSummary,
    x_max: f64,
}

impl RiskShape {
    pub fn build(seq: &CoefficientSequence, sc: &ScalingSummary, x_max: f64) -> Result<Self> {
        if sc.degenerate {
            return Err(Error::Grid("degenerate scaling: Δ = 0".into()));
        }
        if x_max.is_nan() || x_max <= 0.0 {
            return Err(Error::Parameter("x_max must be positive".into()));
        }
        let inv_nt = 1.0 / sc.n_t as f64;
        let ks = sc.k_star;
        // left: cumulative from 0 down to -k*
        let mut left = Vec::with_capacity(ks as usize);
        let mut acc = 0.0;
        for back in 0..ks {
            acc += (seq.theta_sq(ks - back) - inv_nt).abs() / sc.e_frak;
            left.push(acc);
        }
        // right: extend until f exceeds x_max, then 2Δ more knots
        let mut right = Vec::new();
        let mut acc = 0.0;
        let mut extra = 0u64;
        let mut i = 1u64;
        loop {
            acc += (seq.theta_sq(ks + i) - inv_nt).abs() / sc.e_frak;
            right.push(acc);
            if acc > x_max {
                extra += 1;
                if extra > 2 * sc.delta {
                    break;
                }
            }
            if i > 100_000_000 {
                return Err(Error::Grid("f_n grid extension did not terminate".into()));
            }
            i += 1;
        }
        let mut values: Vec<f64> = left.into_iter().rev().collect();
        values.push(0.0);
        values.extend(right);
        let grid = GridFunction::new(-(ks as i64), sc.delta, values);
        Ok(Self {
            grid,
            summary: *sc,
            x_max,
        })
    }

    pub fn grid(&self) -> &GridFunction {
        &self.grid
    }

    pub fn summary(&self) -> &ScalingSummary {
        &self.summary
    }

    pub fn value_at_j(&self, j: i64) -> Option<f64> {
        self.grid.value_at_j(j)
    }

    /// f_n(α) by linear interpolation.
    pub fn eval(&self, alpha: f64) -> f64 {
        self.grid.eval(alpha)
    }

    /// Knot slopes are non-decreasing (convexity), within float slack.
    pub fn is_convex(&self) -> bool {
        let v = self.grid.values();
        let mut prev = f64::NEG_INFINITY;
        for w in v.windows(2) {
            let slope = w[1] - w[0];
            if slope < prev - 1e-9 * slope.abs().max(prev.abs()).max(1.0) {
                return false;
            }
            prev = slope;
        }
        true
    }

    /// Sublevel window [a_x, b_x]: extreme grid knots with f_n ≤ x.
    pub fn window(&self, x: f64) -> Result<Window> {
        if x.is_nan() || x <= 0.0 {
            return Err(Error::Parameter("window level x must be positive".into()));
        }
        if x > self.x_max {
            return Err(Error::Grid(format!(
                "window level {x} beyond built extent x_max = {}",
                self.x_max
            )));
        }
        let mut j_lo = 0i64;
        for j in (self.grid.j_min()..=0).rev() {
            if self.grid.value_at_j(j).unwrap() <= x {
                j_lo = j;
            } else {
                break;
            }
        }
        let mut j_hi = 0i64;
        for j in 0..=self.grid.j_max() {
            if self.grid.value_at_j(j).unwrap() <= x {
                j_hi = j;
            } else {
                break;
            }
        }
        if j_hi == self.grid.j_max() {
            return Err(Error::Grid("window reached grid boundary".into()));
        }
        let d = self.summary.delta as f64;
        Ok(Window {
            x,
            j_lo,
            j_hi,
            a_x: j_lo as f64 / d,
            b_x: j_hi as f64 / d,
        })
    }
}

/// Grid-restricted sublevel set {f_n ≤ x}: a_x = j_lo/Δ ≤ 0 ≤ b_x = j_hi/Δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x: f64,
    pub j_lo: i64,
    pub j_hi: i64,
    pub a_x: f64,
    pub b_x: f64,
}
