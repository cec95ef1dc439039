//! The approximating object of the main theorem: the time change g_n built
//! from θ by the monotone-correction construction, its covariance kernel
//! K(g), two-sided time-changed Brownian simulation, the exact conditional
//! covariance of the fluctuation process, Gaussian Wasserstein coupling,
//! and the Brownian-bridge integral.

use crate::density::{cov_psi, CoefficientSequence, DensityModel, SQRT_2};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, UnitGridFunction};
use crate::linalg::{psd_floor, sym_pinv, sym_sqrt};
use crate::oracle::{RiskShape, ScalingSummary};
use crate::series::EmpiricalCoefficients;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Construction stage of a time change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Raw double-sum process g_n¹ (not yet monotone).
    G1,
    /// Monotone-corrected g_n².
    G2,
    /// Final g_n = g_n² + 4‖s‖²·α.
    G,
}

/// Monotone-correction algorithm choice for assembling g_n².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrectionMode {
    /// Inductive breakpoint construction (the default).
    #[default]
    Lemma,
    /// L² isotonic projection followed by increment capping at h₊.
    Isotonic,
}

/// A (piecewise-linear) time change on the grid j/Δ.
#[derive(Debug, Clone)]
pub struct TimeChange {
    grid: GridFunction,
    stage: Stage,
}

impl TimeChange {
    pub fn grid(&self) -> &GridFunction {
        &self.grid
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        self.grid.eval(alpha)
    }
}

/// g_n¹ on [j_min, j_max]:
/// sgn(j)·g_n¹(j/Δ) = (4/(n_v 𝔢²)) Σ Σ θ_{i₁} θ_{i₂} ((1-δ)/√2 + δ) θ_{|i₁-i₂|}
/// over the index block (k*-(j)₋, k*+(j)₊]. Computed incrementally in j.
pub fn g1_from_theta(
    seq: &CoefficientSequence,
    sc: &ScalingSummary,
    j_min: i64,
    j_max: i64,
) -> Result<TimeChange> {
    if sc.degenerate {
        return Err(Error::Grid("degenerate scaling: Δ = 0".into()));
    }
    if j_min > 0 || j_max < 0 || j_min < -(sc.k_star as i64) {
        return Err(Error::Grid(format!(
            "grid [{j_min}, {j_max}] must contain 0 and stay above -k* = -{}",
            sc.k_star
        )));
    }
    let pref = 4.0 / (sc.n_v as f64 * sc.e_frak * sc.e_frak);
    let ks = sc.k_star;
    let mut values = vec![0.0; (j_max - j_min + 1) as usize];
    let at = |j: i64| (j - j_min) as usize;
    // right: block grows upward one index at a time
    let mut sum = 0.0;
    let mut block: Vec<u64> = Vec::new();
    for j in 1..=j_max {
        let m = ks + j as u64;
        let tm = seq.theta(m);
        let mut cross = 0.0;
        for &i in &block {
            cross += seq.theta(i) * seq.theta(m - i);
        }
        sum += tm * tm + SQRT_2 * tm * cross;
        block.push(m);
        values[at(j)] = pref * sum;
    }
    // left: block grows downward
    let mut sum = 0.0;
    let mut block: Vec<u64> = Vec::new();
    for j in (j_min..=-1).rev() {
        let m = (ks as i64 + j + 1) as u64;
        let tm = seq.theta(m);
        let mut cross = 0.0;
        for &i in &block {
            cross += seq.theta(i) * seq.theta(i - m);
        }
        sum += tm * tm + SQRT_2 * tm * cross;
        block.push(m);
        values[at(j)] = -pref * sum;
    }
    Ok(TimeChange {
        grid: GridFunction::new(j_min, sc.delta, values),
        stage: Stage::G1,
    })
}

/// Output of the monotone correction.
#[derive(Debug, Clone)]
pub struct MonotoneCorrected {
    pub g: GridFunction,
    /// Whether the lemma's two-sided increment hypothesis held on the grid.
    pub hypothesis_ok: bool,
    /// sup |g - g0| / ε over the knots.
    pub sup_ratio: f64,
}

/// Monotone correction of `g0` against the non-decreasing envelope `h_plus`
/// and slack `eps` (all on one shared grid): returns a continuous
/// non-decreasing g with g(0) = g0(0), ‖(g-g0)/ε‖_∞ ≤ 6 and g-increments
/// bounded by h₊-increments whenever the hypothesis held.
///
/// Breakpoints x_{i+1} = inf{x ≥ x_i : g0(x) ≥ g0(x_i) + 2ε(x_i)
/// or ε(x) ≥ (3/2)ε(x_i)}; g is flat after an ε-trigger and h₊-shaped
/// after a g0-trigger. A hypothesis violation is reported, not fatal.
pub fn monotone_correct(
    g0: &GridFunction,
    h_plus: &GridFunction,
    eps: &GridFunction,
) -> Result<MonotoneCorrected> {
    let n = g0.len();
    if h_plus.len() != n || eps.len() != n || h_plus.j_min() != g0.j_min() || eps.j_min() != g0.j_min()
    {
        return Err(Error::DimensionMismatch("correction inputs on different grids".into()));
    }
    if eps.values().iter().any(|&e| e <= 0.0) {
        return Err(Error::Parameter("ε must be strictly positive".into()));
    }
    if n == 1 {
        return Ok(MonotoneCorrected {
            g: g0.clone(),
            hypothesis_ok: true,
            sup_ratio: 0.0,
        });
    }
    for w in eps.values().windows(2) {
        if w[1] < w[0] {
            return Err(Error::Parameter("ε must be non-decreasing".into()));
        }
    }
    for w in h_plus.values().windows(2) {
        if w[1] < w[0] {
            return Err(Error::Parameter("h₊ must be non-decreasing".into()));
        }
    }
    let hypothesis_ok = check_correction_hypothesis(g0, h_plus, eps);

    // positions in knot units t ∈ [0, n-1]; inputs are linear between knots
    let gv = g0.values();
    let hv = h_plus.values();
    let ev = eps.values();
    let lerp = |v: &[f64], t: f64| -> f64 {
        let i = (t.floor() as usize).min(n - 2);
        let f = t - i as f64;
        v[i] * (1.0 - f) + v[i + 1] * f
    };
    // earliest t in [from, n-1] where the linear interpolant of v reaches level
    let first_hit = |v: &[f64], from: f64, level: f64| -> Option<f64> {
        let mut t = from;
        loop {
            let va = lerp(v, t);
            if va >= level {
                return Some(t);
            }
            let seg = t.floor() as usize;
            if seg + 1 >= n {
                return None;
            }
            let vb = v[seg + 1];
            if vb >= level {
                let end = (seg + 1) as f64;
                let tt = if vb > va {
                    t + (level - va) / (vb - va) * (end - t)
                } else {
                    end
                };
                return Some(tt.min(end));
            }
            t = (seg + 1) as f64;
        }
    };

    let mut out = vec![0.0; n];
    out[0] = gv[0];
    let mut cur_t = 0.0f64; // current breakpoint x_i
    let mut cur_g = gv[0]; // g(x_i)
    let mut next_knot = 1usize;
    loop {
        let g0_i = lerp(gv, cur_t);
        let eps_i = lerp(ev, cur_t);
        let hit_g = first_hit(gv, cur_t + 0.0, g0_i + 2.0 * eps_i);
        let hit_e = first_hit(ev, cur_t, 1.5 * eps_i);
        // triggers cannot fire at cur_t itself (both levels sit strictly above)
        let clean = |h: Option<f64>| h.filter(|&t| t > cur_t + 1e-15);
        let (hit_g, hit_e) = (clean(hit_g), clean(hit_e));
        let next_t = match (hit_g, hit_e) {
            (None, None) => f64::INFINITY,
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (Some(a), Some(b)) => a.min(b),
        };
        let flat = match (hit_e, next_t.is_finite()) {
            (_, false) => true,
            (Some(b), true) => b <= next_t, // ε-trigger wins ties
            (None, true) => false,
        };
        let seg_end = next_t.min((n - 1) as f64);
        // fill knots inside (cur_t, seg_end]
        let h_i = lerp(hv, cur_t);
        let (num, den) = if flat {
            (0.0, 1.0)
        } else {
            let g0_next = lerp(gv, next_t);
            let h_next = lerp(hv, next_t);
            let den = h_next - h_i;
            if den <= 0.0 {
                (0.0, 1.0) // degenerate envelope; fall back to flat
            } else {
                (g0_next - g0_i, den)
            }
        };
        while next_knot < n && (next_knot as f64) <= seg_end + 1e-15 {
            let t = next_knot as f64;
            out[next_knot] = cur_g + num / den * (lerp(hv, t.min(seg_end)) - h_i);
            next_knot += 1;
        }
        if !next_t.is_finite() || next_t >= (n - 1) as f64 {
            break;
        }
        cur_g += num / den * (lerp(hv, next_t) - h_i);
        cur_t = next_t;
        if next_knot >= n {
            break;
        }
    }
    // kill sub-ulp ripples so monotonicity is exact
    for i in 1..n {
        if out[i] < out[i - 1] {
            out[i] = out[i - 1];
        }
    }
    let sup_ratio = out
        .iter()
        .zip(gv)
        .zip(ev)
        .map(|((&g, &g0), &e)| (g - g0).abs() / e)
        .fold(0.0f64, f64::max);
    Ok(MonotoneCorrected {
        g: GridFunction::new(g0.j_min(), g0.delta(), out),
        hypothesis_ok,
        sup_ratio,
    })
}

/// Grid check of -ε(t) ≤ g0(t)-g0(s) ≤ max{h₊(t)-h₊(s), ε(t)} over knot pairs.
fn check_correction_hypothesis(g0: &GridFunction, h_plus: &GridFunction, eps: &GridFunction) -> bool {
    let g = g0.values();
    let h = h_plus.values();
    let e = eps.values();
    for t in 0..g.len() {
        for s in 0..t {
            let d = g[t] - g[s];
            if d < -e[t] - 1e-12 {
                return false;
            }
            if d > (h[t] - h[s]).max(e[t]) + 1e-12 {
                return false;
            }
        }
    }
    true
}

/// L² isotonic regression (pool adjacent violators), unit weights.
pub fn isotonic_projection(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut level: Vec<f64> = Vec::with_capacity(n);
    let mut weight: Vec<f64> = Vec::with_capacity(n);
    for &v in values {
        level.push(v);
        weight.push(1.0);
        while level.len() > 1 {
            let m = level.len();
            if level[m - 2] <= level[m - 1] {
                break;
            }
            let w = weight[m - 2] + weight[m - 1];
            let merged = (level[m - 2] * weight[m - 2] + level[m - 1] * weight[m - 1]) / w;
            level.truncate(m - 1);
            weight.truncate(m - 1);
            *level.last_mut().unwrap() = merged;
            *weight.last_mut().unwrap() = w;
        }
    }
    let mut out = Vec::with_capacity(n);
    for (l, w) in level.iter().zip(&weight) {
        for _ in 0..*w as usize {
            out.push(*l);
        }
    }
    out
}

/// Slack function ε(α) ≡ c·n^{-u} for the monotone correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsSpec {
    pub c: f64,
    pub u: f64,
}

impl Default for EpsSpec {
    fn default() -> Self {
        Self { c: 1.0, u: 0.1 }
    }
}

/// Diagnostics from assembling g_n.
#[derive(Debug, Clone)]
pub struct GnDiagnostics {
    pub eps_value: f64,
    pub sup_ratio_right: f64,
    pub sup_ratio_left: f64,
    pub hypothesis_ok: bool,
    pub mode: CorrectionMode,
}

/// Build the final time change g_n = g_n² + 4‖s‖²·α on the shape's grid
/// restricted to [j_min, j_max], asserting the structural bounds
/// (monotone growth ≥ 4‖s‖²; increment cap via f_n; the 20‖s‖_∞ f_n + 12‖s‖_∞
/// envelope). The sup-norm constant is the certified upper bracket.
pub fn build_gn(
    model: &DensityModel,
    sc: &ScalingSummary,
    shape: &RiskShape,
    j_min: i64,
    j_max: i64,
    eps_spec: EpsSpec,
    mode: CorrectionMode,
) -> Result<(TimeChange, GnDiagnostics)> {
    let seq = model.seq();
    let g1 = g1_from_theta(seq, sc, j_min, j_max)?;
    let sup = model.sup_norm().hi;
    let l2 = model.l2_norm_sq();
    let eps_value = eps_spec.c * (sc.n as f64).powf(-eps_spec.u);
    if eps_value <= 0.0 {
        return Err(Error::Parameter("ε spec must be positive".into()));
    }
    let coef = 8.0 * sup / (sc.n_v as f64 * sc.e_frak);
    let delta = sc.delta;

    // h₊ on a half grid: -(8‖s‖_∞/(n_v 𝔢)) f_n(±·) sign-adjusted + 8‖s‖_∞·Id,
    // non-decreasing by the f_n slope bounds; clamp sub-ulp ripples.
    let build_half = |side: i64, extent: i64| -> Result<MonotoneCorrected> {
        let m = extent as usize + 1;
        let g0_vals: Vec<f64> = (0..m)
            .map(|i| {
                let j = side * i as i64;
                let v = g1.grid().value_at_j(j).unwrap();
                if side >= 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        let mut h_vals: Vec<f64> = (0..m)
            .map(|i| {
                let j = side * i as i64;
                let f = shape.value_at_j(j).unwrap();
                let alpha = i as f64 / delta as f64;
                -coef * (if side >= 0 { f } else { -f }) + 8.0 * sup * alpha
            })
            .collect();
        for i in 1..m {
            if h_vals[i] < h_vals[i - 1] {
                let drop = h_vals[i - 1] - h_vals[i];
                if drop > 1e-9 * h_vals[i - 1].abs().max(1.0) {
                    return Err(Error::Construction {
                        bound: "h₊ non-decreasing".into(),
                        detail: format!("h₊ drops by {drop} at half-grid index {i}"),
                    });
                }
                h_vals[i] = h_vals[i - 1];
            }
        }
        let g0 = GridFunction::new(0, delta, g0_vals);
        let h_plus = GridFunction::new(0, delta, h_vals);
        let eps = GridFunction::new(0, delta, vec![eps_value; m]);
        match mode {
            CorrectionMode::Lemma => monotone_correct(&g0, &h_plus, &eps),
            CorrectionMode::Isotonic => {
                let iso = isotonic_projection(g0.values());
                // pin at zero, then cap increments at h₊ increments
                let base = iso[0];
                let mut out = vec![0.0; m];
                for i in 1..m {
                    let capped = (out[i - 1] + (h_plus.values()[i] - h_plus.values()[i - 1]))
                        .min(iso[i] - base);
                    out[i] = capped.max(out[i - 1]);
                }
                let sup_ratio = out
                    .iter()
                    .zip(g0.values())
                    .map(|(&g, &g0v)| (g - g0v).abs() / eps_value)
                    .fold(0.0f64, f64::max);
                Ok(MonotoneCorrected {
                    g: GridFunction::new(0, delta, out),
                    hypothesis_ok: check_correction_hypothesis(&g0, &h_plus, &eps),
                    sup_ratio,
                })
            }
        }
    };

    let right = build_half(1, j_max)?;
    let left = build_half(-1, -j_min)?;
    // both halves pinned to 0 at α = 0 before summation
    let r0 = right.g.values()[0];
    let l0 = left.g.values()[0];
    let mut values = vec![0.0; (j_max - j_min + 1) as usize];
    for j in j_min..=j_max {
        let idx = (j - j_min) as usize;
        let g2 = if j >= 0 {
            right.g.values()[j as usize] - r0
        } else {
            -(left.g.values()[(-j) as usize] - l0)
        };
        values[idx] = g2 + 4.0 * l2 * (j as f64 / delta as f64);
    }
    let gn = GridFunction::new(j_min, delta, values);
    assert_gn_invariants(&gn, shape, sup, l2, sc)?;
    Ok((
        TimeChange {
            grid: gn,
            stage: Stage::G,
        },
        GnDiagnostics {
            eps_value,
            sup_ratio_right: right.sup_ratio,
            sup_ratio_left: left.sup_ratio,
            hypothesis_ok: right.hypothesis_ok && left.hypothesis_ok,
            mode,
        },
    ))
}

/// The construction-guaranteed bounds of g_n (the main theorem's items
/// 1-3), checked at the knots. Returns the first violated bound as a
/// construction error. The f_n envelope on |g_n| is a separate check owned
/// by the inequality sweep: its stated constant is not implied by the
/// definitions in the bracket-driven regime.
pub fn assert_gn_invariants(
    gn: &GridFunction,
    shape: &RiskShape,
    sup: f64,
    l2: f64,
    sc: &ScalingSummary,
) -> Result<()> {
    let tol = 1e-9;
    if gn.value_at_j(0) != Some(0.0) {
        return Err(Error::Construction {
            bound: "g_n(0) = 0".into(),
            detail: format!("{:?}", gn.value_at_j(0)),
        });
    }
    let step = 1.0 / sc.delta as f64;
    let vals = gn.values();
    for (i, w) in vals.windows(2).enumerate() {
        let inc = w[1] - w[0];
        if inc < 4.0 * l2 * step - tol {
            return Err(Error::Construction {
                bound: "g_n increments ≥ 4‖s‖²·Δα".into(),
                detail: format!("increment {inc} at index {i}"),
            });
        }
    }
    let coef = 8.0 * sup / (sc.n_v as f64 * sc.e_frak);
    // same-sign increment cap; adjacent pairs suffice, both sides of the
    // bound are additive along the grid
    for j in gn.j_min()..gn.j_max() {
        let a1 = gn.alpha_of(j);
        let a2 = gn.alpha_of(j + 1);
        let f1 = shape.value_at_j(j).unwrap();
        let f2 = shape.value_at_j(j + 1).unwrap();
        let lhs = gn.value_at_j(j + 1).unwrap() - gn.value_at_j(j).unwrap();
        let rhs = -coef * (f2 - f1) + (8.0 * sup + 4.0 * l2) * (a2 - a1);
        if lhs > rhs + tol {
            return Err(Error::Construction {
                bound: "g_n increment cap (item 3)".into(),
                detail: format!("j={j}: {lhs} > {rhs}"),
            });
        }
    }
    Ok(())
}

/// A symmetric kernel evaluated on grid knots.
#[derive(Debug, Clone)]
pub struct CovKernel {
    pub alphas: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

impl CovKernel {
    /// Validate symmetry + PSD (eigenvalue ≥ -1e-9) and floor at zero.
    pub fn into_psd(self) -> Result<CovKernel> {
        let (m, _) = psd_floor(&self.matrix, 1e-9)?;
        Ok(CovKernel {
            alphas: self.alphas,
            matrix: m,
        })
    }
}

/// K(g)(s,t) = g(s∧t) on ℝ₊², -g(s∨t) on ℝ₋², and 0 across signs.
pub fn kernel_of_time_change(g: &TimeChange) -> Result<CovKernel> {
    let grid = g.grid();
    for w in grid.values().windows(2) {
        if w[1] < w[0] - 1e-12 {
            return Err(Error::Construction {
                bound: "K(g) needs non-decreasing g".into(),
                detail: format!("decrease {} -> {}", w[0], w[1]),
            });
        }
    }
    let n = grid.len();
    let alphas: Vec<f64> = grid.iter_knots().map(|(_, a, _)| a).collect();
    let vals: Vec<f64> = grid.values().to_vec();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let (s, t) = (alphas[j], alphas[i]); // s <= t
            let v = if s >= 0.0 {
                vals[j] // g(min)
            } else if t <= 0.0 {
                -vals[i] // -g(max)
            } else {
                0.0
            };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(CovKernel { alphas, matrix: m })
}

/// One simulated path of W_{g(α)/V} on the knots of g, by independent
/// Gaussian increments marching outward from α = 0.
#[derive(Debug, Clone)]
pub struct GaussianPath {
    pub grid: GridFunction,
    pub v: u64,
}

pub fn simulate_path<R: Rng>(g: &TimeChange, v: u64, rng: &mut R) -> Result<GaussianPath> {
    if v < 1 {
        return Err(Error::Parameter("V must be >= 1".into()));
    }
    let grid = g.grid();
    if !grid.contains_j(0) {
        return Err(Error::Grid("time-change grid must contain α = 0".into()));
    }
    let zero = (-grid.j_min()) as usize;
    let vals = grid.values();
    let mut out = vec![0.0; vals.len()];
    for i in zero..vals.len() - 1 {
        let var = (vals[i + 1] - vals[i]) / v as f64;
        if var < -1e-12 {
            return Err(Error::Construction {
                bound: "non-negative increments".into(),
                detail: format!("var {var} at index {i}"),
            });
        }
        let z: f64 = rng.sample(StandardNormal);
        out[i + 1] = out[i] + var.max(0.0).sqrt() * z;
    }
    for i in (1..=zero).rev() {
        let var = (vals[i] - vals[i - 1]) / v as f64;
        if var < -1e-12 {
            return Err(Error::Construction {
                bound: "non-negative increments".into(),
                detail: format!("var {var} at index {i}"),
            });
        }
        let z: f64 = rng.sample(StandardNormal);
        out[i - 1] = out[i] + var.max(0.0).sqrt() * z;
    }
    Ok(GaussianPath {
        grid: GridFunction::new(grid.j_min(), grid.delta(), out),
        v,
    })
}

/// The approximating process f_n(α) - W(α) on the path's knots.
pub fn approx_process(shape: &RiskShape, path: &GaussianPath) -> GridFunction {
    path.grid
        .map(|j, w| shape.value_at_j(j).expect("path grid within shape grid") - w)
}

/// Exact conditional covariance of the fluctuation process given the
/// training data: sgn(j₁)sgn(j₂)·(4/(n_v 𝔢²)) Σ Σ θ̂_{i₁}θ̂_{i₂} Cov(ψ_{i₁}, ψ_{i₂})
/// over the blocks of j₁ and j₂.
pub fn cond_cov_z(
    theta_hat: &EmpiricalCoefficients,
    seq: &CoefficientSequence,
    sc: &ScalingSummary,
    j1: i64,
    j2: i64,
) -> f64 {
    if j1 == 0 || j2 == 0 {
        return 0.0;
    }
    let block = |j: i64| -> (u64, u64) {
        if j > 0 {
            (sc.k_star + 1, sc.k_star + j as u64)
        } else {
            ((sc.k_star as i64 + j + 1) as u64, sc.k_star)
        }
    };
    let (lo1, hi1) = block(j1);
    let (lo2, hi2) = block(j2);
    let mut acc = 0.0;
    for i1 in lo1..=hi1 {
        for i2 in lo2..=hi2 {
            acc += theta_hat.theta_hat(i1) * theta_hat.theta_hat(i2) * cov_psi(seq, i1, i2);
        }
    }
    let sgn = (j1.signum() * j2.signum()) as f64;
    sgn * 4.0 / (sc.n_v as f64 * sc.e_frak * sc.e_frak) * acc
}

/// E_{m₁,m₂,m₃}: 0 on ties of the sorted triple, otherwise the double sum
/// of θ̂_{j₁}θ̂_{j₂} Cov(ψ_{j₁}, ψ_{j₂}) over (m_(1), m_(2)] × (m_(2), m_(3)].
pub fn e_stat(
    theta_hat: &EmpiricalCoefficients,
    seq: &CoefficientSequence,
    m1: u64,
    m2: u64,
    m3: u64,
) -> f64 {
    let mut m = [m1, m2, m3];
    m.sort_unstable();
    if m[0] == m[1] || m[1] == m[2] {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in (m[0] + 1)..=m[1] {
        for j in (m[1] + 1)..=m[2] {
            acc += theta_hat.theta_hat(i) * theta_hat.theta_hat(j) * cov_psi(seq, i, j);
        }
    }
    acc
}

/// An optimal (Wasserstein) coupling of N(0, K_X) and N(0, K_Y):
/// X = Aξ, Y = Bξ with a shared standard normal ξ, and the closed-form
/// squared distance Tr(K_X + K_Y - 2 (K_X^{1/2} K_Y K_X^{1/2})^{1/2}).
#[derive(Debug, Clone)]
pub struct GaussianCoupling {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub w2_sq: f64,
}

impl GaussianCoupling {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> (DVector<f64>, DVector<f64>) {
        let xi = DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)),
        );
        (&self.a * &xi, &self.b * &xi)
    }
}

pub fn gaussian_coupling(kx: &DMatrix<f64>, ky: &DMatrix<f64>) -> Result<GaussianCoupling> {
    if kx.nrows() != ky.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            kx.nrows(),
            kx.ncols(),
            ky.nrows(),
            ky.ncols()
        )));
    }
    let (kx, _) = psd_floor(kx, 1e-9)?;
    let (ky, _) = psd_floor(ky, 1e-9)?;
    let a = sym_sqrt(&kx);
    let inner = &a * &ky * &a;
    let inner_sqrt = sym_sqrt(&inner);
    let a_pinv = sym_pinv(&a, 1e-12);
    let t = &a_pinv * &inner_sqrt * &a_pinv;
    let b = &t * &a;
    let w2_sq = (kx.trace() + ky.trace() - 2.0 * inner_sqrt.trace()).max(0.0);
    Ok(GaussianCoupling { a, b, w2_sq })
}

/// -∫₀¹ f'(x) B(F(x)) dx by the trapezoid rule on f'’s grid.
pub fn bridge_integral(
    f_prime: &UnitGridFunction,
    bridge: &UnitGridFunction,
    cdf: &UnitGridFunction,
) -> Result<f64> {
    if f_prime.step() > 1e-3 + 1e-12 {
        return Err(Error::Parameter(format!(
            "quadrature step {} exceeds 1e-3",
            f_prime.step()
        )));
    }
    let n = f_prime.len();
    let step = f_prime.step();
    let mut acc = 0.0;
    for i in 0..n {
        let x = i as f64 * step;
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += w * f_prime.values()[i] * bridge.eval(cdf.eval(x.min(1.0)));
    }
    Ok(-acc * step)
}

/// A standard Brownian bridge on a uniform grid of [0,1]:
/// B_t = W_t - t W_1 from accumulated Gaussian increments.
pub fn simulate_bridge<R: Rng>(nodes: usize, rng: &mut R) -> UnitGridFunction {
    let step = 1.0 / (nodes - 1) as f64;
    let mut w = Vec::with_capacity(nodes);
    w.push(0.0);
    let mut cur = 0.0;
    for _ in 1..nodes {
        let z: f64 = rng.sample(StandardNormal);
        cur += step.sqrt() * z;
        w.push(cur);
    }
    let w1 = *w.last().unwrap();
    UnitGridFunction::new(
        w.iter()
            .enumerate()
            .map(|(i, &wi)| wi - (i as f64 * step) * w1)
            .collect(),
    )
}
