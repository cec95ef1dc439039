//! Hurwitz zeta and the periodic zeta function, used for closed-form
//! evaluation of polynomial coefficient tails.

use crate::error::{Error, Result};
use statrs::function::gamma::gamma;

/// Bernoulli numbers B_2, B_4, ..., B_20.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Hurwitz zeta ζ(s, a) = Σ_{k≥0} (a+k)^{-s}, continued to all real s ≠ 1,
/// by Euler–Maclaurin summation. Requires a > 0.
///
/// For s < 0 the shift point is kept small: the leading terms grow like
/// (a+N)^{1-s} and cancel, so a large N costs precision instead of buying it.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(a > 0.0, "hurwitz_zeta requires a > 0, got {a}");
    assert!(s != 1.0, "hurwitz_zeta has a pole at s = 1");
    let target = if s < 0.0 { 4.0 + s.abs() } else { 18.0 + s };
    let shift = (target - a).ceil().max(0.0) as usize;
    let mut direct = 0.0;
    for k in 0..shift {
        direct += (a + k as f64).powf(-s);
    }
    let b = a + shift as f64;
    let mut acc = direct + b.powf(1.0 - s) / (s - 1.0) + 0.5 * b.powf(-s);
    // Σ_j B_{2j}/(2j)! · s(s+1)…(s+2j-2) · b^{-s-2j+1}
    let mut poch = s;
    let mut fact = 2.0;
    let mut bpow = b.powf(-s - 1.0);
    let b2 = b * b;
    for (j, bern) in BERNOULLI_EVEN.iter().enumerate() {
        acc += bern / fact * poch * bpow;
        let m = 2 * (j + 1);
        poch *= (s + m as f64 - 1.0) * (s + m as f64);
        fact *= ((m + 1) * (m + 2)) as f64;
        bpow /= b2;
    }
    acc
}

/// Riemann zeta ζ(s) for s ≠ 1.
pub fn riemann_zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

/// Exponent window on which the functional-equation evaluation stays
/// accurate to ~1e-12. Beyond it the reflected zeta argument is too
/// negative and cancellation dominates.
pub const PERIODIC_ZETA_MAX_S: f64 = 3.25;
const PERIODIC_ZETA_MIN_S: f64 = 1.05;
const INTEGER_GUARD: f64 = 1e-6;

fn check_range(s: f64, bad_parity: i64, what: &str) -> Result<()> {
    if !(PERIODIC_ZETA_MIN_S..=PERIODIC_ZETA_MAX_S).contains(&s) {
        return Err(Error::UnsupportedTail(format!(
            "{what} tail exponent {s} outside supported range [{PERIODIC_ZETA_MIN_S}, {PERIODIC_ZETA_MAX_S}]"
        )));
    }
    let r = s.round();
    if (s - r).abs() < INTEGER_GUARD && (r as i64).rem_euclid(2) == bad_parity {
        return Err(Error::UnsupportedTail(format!(
            "{what} tail exponent {s} too close to an integer where the closed form degenerates"
        )));
    }
    Ok(())
}

/// Σ_{j≥1} cos(2πjx)/j^s for x ∈ [0, 1], via Hurwitz's functional equation.
///
/// Supported for s in (1, 3.25] away from odd integers.
pub fn periodic_zeta_cos(x: f64, s: f64) -> Result<f64> {
    assert!((0.0..=1.0).contains(&x));
    if x == 0.0 || x == 1.0 {
        return Ok(riemann_zeta(s));
    }
    check_range(s, 1, "cosine")?;
    let pref = (2.0 * std::f64::consts::PI).powf(s - 1.0) * std::f64::consts::PI
        / gamma(s)
        / (std::f64::consts::PI * (1.0 - s) / 2.0).sin();
    Ok(pref * 0.5 * (hurwitz_zeta(1.0 - s, x) + hurwitz_zeta(1.0 - s, 1.0 - x)))
}

/// Σ_{j≥1} sin(2πjx)/j^s for x ∈ [0, 1].
///
/// Supported for s in (1, 3.25] away from even integers.
pub fn periodic_zeta_sin(x: f64, s: f64) -> Result<f64> {
    assert!((0.0..=1.0).contains(&x));
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    check_range(s, 0, "sine")?;
    let pref = (2.0 * std::f64::consts::PI).powf(s - 1.0) * std::f64::consts::PI
        / gamma(s)
        / (std::f64::consts::PI * (1.0 - s) / 2.0).cos();
    Ok(pref * 0.5 * (hurwitz_zeta(1.0 - s, x) - hurwitz_zeta(1.0 - s, 1.0 - x)))
}
