//! Upper bounds for spherical codes `A(r, θ)`: the maximum number of points on
//! the unit sphere in `ℝʳ` with pairwise angles at least `θ`.
//!
//! Everything is carried as a natural logarithm; binomials and gamma ratios
//! go through `lgamma`. Trigonometric integrals are evaluated by positive
//! power series in `sin²`, with a scaled adaptive Simpson rule where the
//! series converges slowly.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use libm::lgamma;
use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Largest `k` tried when selecting the KL degree.
pub const KL_MAX_K: u64 = 2_000_000;

/// Power series in `s = sin²` are used for `s` up to this value.
const SERIES_MAX_S: f64 = 0.9;

const SIMPSON_TOL: f64 = 1e-10;

const LN_TARGET_BASE: f64 = 0.636_576_829_071_551_7; // ln 1.89

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RankinCap,
    RankinSimplex,
    Shannon,
    Kl,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    /// `ln` of the bound on `A(r, θ)`.
    pub log_bound: f64,
    pub method: Method,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiRoot {
    pub k: u64,
    pub alpha: f64,
    pub root: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
}

fn ln_gamma(x: f64) -> f64 {
    lgamma(x)
}

/// `τ_k = √(1 − (α² − 1)/((k + α)(k + α + 1)))`.
pub fn tau(k: u64, alpha: f64) -> f64 {
    let kf = k as f64;
    (1.0 - (alpha * alpha - 1.0) / ((kf + alpha) * (kf + alpha + 1.0))).sqrt()
}

/// Lower end of the known bracket for `t_k^α`.
pub fn tau_lower(k: u64, alpha: f64) -> f64 {
    let kf = k as f64;
    let t = tau(k, alpha);
    t - 2.0 * PI.powf(2.0 / 3.0) / ((kf + alpha) * (kf + alpha + 1.0) * t).cbrt()
}

/// Runs the three-term recurrence for `P_n^{(α,α)}(x)`, `n ≤ k`, and returns the
/// number of sign changes in `P_0(x), …, P_k(x)` (the number of zeros of `P_k`
/// above `x`), the sign of `P_k(x)` and `ln |P_k(x)|`.
fn jacobi_sturm(k: u64, alpha: f64, x: f64) -> (usize, f64, f64) {
    let mut p_prev = 1.0f64;
    let mut p = (alpha + 1.0) * x;
    let mut log_scale = 0.0f64;
    let mut changes = 0usize;
    let mut last_sign = 1.0f64;
    let note = |v: f64, last: &mut f64, changes: &mut usize| {
        if v != 0.0 {
            let s = v.signum();
            if s != *last {
                *changes += 1;
            }
            *last = s;
        }
    };
    if k == 0 {
        return (0, 1.0, 0.0);
    }
    note(p, &mut last_sign, &mut changes);
    for n in 2..=k {
        let nf = n as f64;
        let two_na = 2.0 * nf + 2.0 * alpha;
        let a = 2.0 * nf * (nf + 2.0 * alpha) * (two_na - 2.0);
        let b = (two_na - 1.0) * two_na * (two_na - 2.0);
        let c = 2.0 * (nf + alpha - 1.0) * (nf + alpha - 1.0) * two_na;
        let next = (b * x * p - c * p_prev) / a;
        p_prev = p;
        p = next;
        let m = p.abs().max(p_prev.abs());
        if m > 1e200 || (m < 1e-200 && m > 0.0) {
            p /= m;
            p_prev /= m;
            log_scale += m.ln();
        }
        note(p, &mut last_sign, &mut changes);
    }
    (changes, p.signum(), p.abs().ln() + log_scale)
}

/// `ln P_k^{(α,α)}(1) = ln binom(k + α, k)`.
fn jacobi_log_at_one(k: u64, alpha: f64) -> f64 {
    let kf = k as f64;
    ln_gamma(kf + alpha + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(alpha + 1.0)
}

/// `|P_k(x)| / P_k(1)`, the residual scale used to judge a root.
pub fn jacobi_relative_value(k: u64, alpha: f64, x: f64) -> f64 {
    let (_, _, lv) = jacobi_sturm(k, alpha, x);
    (lv - jacobi_log_at_one(k, alpha)).exp()
}

/// Largest root of the symmetric Jacobi polynomial `P_k^{(α,α)}`.
pub fn jacobi_largest_root(k: u64, alpha: f64) -> Result<JacobiRoot> {
    if k == 0 {
        return domain("Jacobi root needs k >= 1");
    }
    if !(alpha > -1.0) {
        return domain(format!("Jacobi parameter must exceed -1, got {alpha}"));
    }
    let count = |x: f64| jacobi_sturm(k, alpha, x).0;
    let mut hi = tau(k, alpha).min(1.0);
    let mut lo = tau_lower(k, alpha).max(-1.0).min(hi);
    let mut widen = 0;
    while count(hi) > 0 {
        hi = (hi + (hi - lo).max(1e-3)).min(1.0);
        widen += 1;
        if widen > 200 {
            return Err(Error::Numeric(format!("no root-free upper end for k={k}, alpha={alpha}")));
        }
    }
    while count(lo) == 0 {
        lo = (lo - 2.0 * (hi - lo).max(1e-3)).max(-1.0);
        widen += 1;
        if widen > 400 {
            return Err(Error::Numeric(format!("no sign change found for k={k}, alpha={alpha}")));
        }
    }
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) > 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo > 1e-12 {
        return Err(Error::Numeric(format!("bisection did not converge for k={k}, alpha={alpha}")));
    }
    Ok(JacobiRoot { k, alpha, root: 0.5 * (lo + hi), bracket: (lo, hi) })
}

fn check_angle(theta: f64, inclusive_right: bool) -> Result<()> {
    let ok = theta > 0.0 && (theta < FRAC_PI_2 || (inclusive_right && theta == FRAC_PI_2));
    if !ok {
        return domain(format!("angle {theta} outside (0, pi/2)"));
    }
    Ok(())
}

/// Kabatiansky–Levenshtein bound with the degree chosen from the root bracket.
pub fn kl_bound(r: u32, theta: f64) -> Result<BoundResult> {
    if r < 3 {
        return domain(format!("KL bound needs r >= 3, got {r}"));
    }
    check_angle(theta, false)?;
    let alpha = (r as f64 - 3.0) / 2.0;
    let c = theta.cos();
    let mut k = (2..=KL_MAX_K)
        .find(|&k| tau_lower(k, alpha) >= c)
        .ok_or_else(|| Error::Numeric(format!("no admissible degree below {KL_MAX_K} for r={r}, theta={theta}")))?;
    // The bracket is only a sufficient condition; confirm with the actual root.
    let mut t_k = jacobi_largest_root(k, alpha)?.root;
    while t_k < c {
        k += 1;
        if k > KL_MAX_K {
            return Err(Error::Numeric(format!("no admissible degree below {KL_MAX_K}")));
        }
        t_k = jacobi_largest_root(k, alpha)?.root;
    }
    let tau_next = tau(k + 1, alpha);
    let t_next = jacobi_largest_root(k + 1, alpha)?.root;
    let denom_root = if tau_next < 1.0 { tau_next } else { t_next };
    let (kf, rf) = (k as f64, r as f64);
    let log_binom = ln_gamma(kf + rf - 1.0) - ln_gamma(rf + 1.0) - ln_gamma(kf - 1.0);
    let log_bound = 4f64.ln() - (1.0 - denom_root).ln() + log_binom;
    let params = BTreeMap::from([
        ("k".to_string(), kf),
        ("alpha".to_string(), alpha),
        ("t_k".to_string(), t_k),
        ("tau_k1".to_string(), tau_next),
        ("t_k1".to_string(), t_next),
        ("denominator_root".to_string(), denom_root),
    ]);
    Ok(BoundResult { log_bound, method: Method::Kl, params })
}

/// `∫₀^θ sin^n x dx` by adaptive Simpson on `(sin x / sin θ)^n`, returned as a log.
fn log_sine_power_simpson(n: u32, theta: f64) -> f64 {
    let st = theta.sin();
    let f = |x: f64| (x.sin() / st).powi(n as i32);
    n as f64 * st.ln() + adaptive_simpson(&f, 0.0, theta, SIMPSON_TOL).ln()
}

/// `ln ∫₀^θ sin^n x dx` for `0 < θ ≤ π/2`.
///
/// Uses `I_n = cos θ · sin^{n+1} θ · Σ c_j s^j` with `s = sin²θ`,
/// `c_0 = 1/(n+1)`, `c_j = c_{j−1}(n+2j)/(n+2j+1)`, which is the downward
/// form of `I_n = (−sin^{n−1}θ cos θ + (n−1) I_{n−2})/n` and has no cancellation.
pub fn log_sine_power_integral(n: u32, theta: f64) -> f64 {
    let nf = n as f64;
    if theta == FRAC_PI_2 {
        return 0.5 * PI.ln() + ln_gamma((nf + 1.0) / 2.0) - ln_gamma(nf / 2.0 + 1.0) - 2f64.ln();
    }
    let s = theta.sin().powi(2);
    if s > SERIES_MAX_S {
        return log_sine_power_simpson(n, theta);
    }
    let mut c = 1.0 / (nf + 1.0);
    let mut pow = 1.0;
    let mut sum = c;
    for j in 1..100_000u32 {
        let jf = j as f64;
        c *= (nf + 2.0 * jf) / (nf + 2.0 * jf + 1.0);
        pow *= s;
        let term = c * pow;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    theta.cos().ln() + (nf + 1.0) * theta.sin().ln() + sum.ln()
}

/// `ln ∫₀^β sin^n x (cos x − cos β) dx` for `0 < β < π/2`.
///
/// Equal to `sin^{n+1}β · Σ_{j≥1} c_{j−1} s^j/(n+2j+1)` with `c` as in
/// [`log_sine_power_integral`] and `s = sin²β`.
pub fn log_rankin_integral(n: u32, beta: f64) -> f64 {
    let nf = n as f64;
    let s = beta.sin().powi(2);
    if s > SERIES_MAX_S {
        return log_rankin_simpson(n, beta);
    }
    let mut c = 1.0 / (nf + 1.0);
    let mut pow = 1.0;
    let mut sum = 0.0;
    for j in 1..100_000u32 {
        let jf = j as f64;
        pow *= s;
        let term = c * pow / (nf + 2.0 * jf + 1.0);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        c *= (nf + 2.0 * jf) / (nf + 2.0 * jf + 1.0);
    }
    (nf + 1.0) * beta.sin().ln() + sum.ln()
}

fn log_rankin_simpson(n: u32, beta: f64) -> f64 {
    let sb = beta.sin();
    let f = |x: f64| (x.sin() / sb).powi(n as i32) * 2.0 * ((beta - x) / 2.0).sin() * ((beta + x) / 2.0).sin();
    n as f64 * sb.ln() + adaptive_simpson(&f, 0.0, beta, SIMPSON_TOL).ln()
}

/// Adaptive Simpson quadrature with relative tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    // Start from fixed panels so that a sharply peaked integrand is not
    // mistaken for zero by the first coarse estimate.
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    let xs: Vec<f64> = (0..=2 * PANELS).map(|i| a + h * i as f64 / 2.0).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let coarse: f64 = fs.iter().map(|v| v.abs()).sum::<f64>() * h / 2.0;
    let panel_tol = (tol / PANELS as f64).max(1e-15) * coarse.max(f64::MIN_POSITIVE);
    (0..PANELS)
        .map(|p| {
            let (i, m, j) = (2 * p, 2 * p + 1, 2 * p + 2);
            let whole = h / 6.0 * (fs[i] + 4.0 * fs[m] + fs[j]);
            rec(f, xs[i], xs[j], fs[i], fs[m], fs[j], whole, panel_tol, 24)
        })
        .sum()
}

/// Rankin's bounds: the cap bound for `θ < π/4` (smaller of the integral and
/// closed forms) and the simplex bound `2sin²θ/(2sin²θ − 1)` for `θ > π/4`.
pub fn rankin_bounds(r: u32, theta: f64) -> Result<BoundResult> {
    check_angle(theta, false)?;
    if r < 2 {
        return domain(format!("Rankin bound needs r >= 2, got {r}"));
    }
    if theta == FRAC_PI_4 {
        return domain("Rankin bounds are not defined at theta = pi/4");
    }
    let s2 = theta.sin().powi(2);
    if theta > FRAC_PI_4 {
        let v = 2.0 * s2 / (2.0 * s2 - 1.0);
        return Ok(BoundResult {
            log_bound: v.ln(),
            method: Method::RankinSimplex,
            params: BTreeMap::from([("value".to_string(), v)]),
        });
    }
    let rf = r as f64;
    let beta = (2f64.sqrt() * theta.sin()).asin();
    let (sb, cb, tb) = (beta.sin(), beta.cos(), beta.tan());
    let gamma_ratio = ln_gamma((rf - 1.0) / 2.0) - ln_gamma(rf / 2.0);
    let integral = 0.5 * PI.ln() + gamma_ratio + sb.ln() + tb.ln() - 2f64.ln() - log_rankin_integral(r - 2, beta);
    let mut params = BTreeMap::from([("beta".to_string(), beta), ("log_integral_form".to_string(), integral)]);
    let denom = 1.0 - 3.0 / (rf + 3.0) * tb * tb;
    let mut log_bound = integral;
    if denom > 0.0 {
        let closed = 2f64.ln() + 0.5 * PI.ln() + ln_gamma((rf + 3.0) / 2.0) + cb.ln()
            - ln_gamma(rf / 2.0)
            - (rf - 1.0) * sb.ln()
            - denom.ln();
        params.insert("log_closed_form".to_string(), closed);
        log_bound = log_bound.min(closed);
    }
    Ok(BoundResult { log_bound, method: Method::RankinCap, params })
}

/// Shannon's bound `√π Γ((r−1)/2) / (Γ(r/2) ∫₀^θ sin^{r−2} x dx)`, with the
/// closed-form variant recorded in `params` when its denominator is positive.
pub fn shannon_bound(r: u32, theta: f64) -> Result<BoundResult> {
    if r < 3 {
        return domain(format!("Shannon bound needs r >= 3, got {r}"));
    }
    check_angle(theta, true)?;
    let rf = r as f64;
    let log_bound =
        0.5 * PI.ln() + ln_gamma((rf - 1.0) / 2.0) - ln_gamma(rf / 2.0) - log_sine_power_integral(r - 2, theta);
    let mut params = BTreeMap::new();
    if let Some(closed) = shannon_closed_form(r, theta) {
        params.insert("log_closed_form".to_string(), closed);
    }
    Ok(BoundResult { log_bound, method: Method::Shannon, params })
}

/// `ln` of `2√π Γ((r+1)/2) cos θ / (Γ(r/2) sin^{r−1}θ (1 − tan²θ/r))`, if the last factor is positive.
pub fn shannon_closed_form(r: u32, theta: f64) -> Option<f64> {
    let rf = r as f64;
    let denom = 1.0 - theta.tan().powi(2) / rf;
    if !(denom > 0.0) || theta >= FRAC_PI_2 {
        return None;
    }
    Some(
        2f64.ln() + 0.5 * PI.ln() + ln_gamma((rf + 1.0) / 2.0) + theta.cos().ln()
            - ln_gamma(rf / 2.0)
            - (rf - 1.0) * theta.sin().ln()
            - denom.ln(),
    )
}

/// Angle with `sin(θ/2) = 1/(2√(2(1+ε)))`.
pub fn theta_for_epsilon(eps: f64) -> f64 {
    2.0 * (1.0 / (2.0 * (2.0 * (1.0 + eps)).sqrt())).asin()
}

/// `ln` of `1.89^{r + 19 r^{1/3}}`.
pub fn log_target(r: u32) -> f64 {
    let rf = r as f64;
    (rf + 19.0 * rf.cbrt()) * LN_TARGET_BASE
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallPointBound {
    pub r: u32,
    pub epsilon: f64,
    pub theta: f64,
    /// Smallest of the available bounds on `A(r + 1, θ)`.
    pub best: BoundResult,
    pub kl: Option<BoundResult>,
    pub rankin: Option<BoundResult>,
    pub shannon: Option<BoundResult>,
    pub log_target: f64,
}

impl SmallPointBound {
    pub fn below_target(&self, slack: f64) -> bool {
        self.best.log_bound <= self.log_target + slack
    }
}

/// Bound on the number of small points in a coset of a rank-`r` curve.
pub fn small_point_count_bound(r: u32, eps: f64) -> Result<SmallPointBound> {
    if r < 1 {
        return domain("rank must be at least 1");
    }
    if !(eps > 0.0 && eps < 1.0 / 650.0) {
        return domain(format!("epsilon {eps} outside (0, 1/650)"));
    }
    let theta = theta_for_epsilon(eps);
    let dim = r + 1;
    let kl = if dim >= 3 { Some(kl_bound(dim, theta)?) } else { None };
    let shannon = if dim >= 3 { Some(shannon_bound(dim, theta)?) } else { None };
    let rankin = Some(rankin_bounds(dim, theta)?);
    let best = [&kl, &rankin, &shannon]
        .into_iter()
        .flatten()
        .min_by(|a, b| a.log_bound.total_cmp(&b.log_bound))
        .expect("rankin is always present")
        .clone();
    Ok(SmallPointBound { r, epsilon: eps, theta, best, kl, rankin, shannon, log_target: log_target(r) })
}

/// `(1+N)^{1+N}/N^N` with `N = 2(1−ε)/√(7−8ε) − 1/2`.
pub fn kl_asymptotic_base(eps: f64) -> Result<f64> {
    if !(0.0..1.0 / 650.0).contains(&eps) {
        return domain(format!("epsilon {eps} outside [0, 1/650)"));
    }
    let n = 2.0 * (1.0 - eps) / (7.0 - 8.0 * eps).sqrt() - 0.5;
    Ok(base_of(n))
}

/// The same base with `N = (1 − sin θ)/(2 sin θ)` taken directly from [`theta_for_epsilon`].
pub fn kl_asymptotic_base_from_angle(eps: f64) -> f64 {
    let s = theta_for_epsilon(eps).sin();
    base_of((1.0 - s) / (2.0 * s))
}

fn base_of(n: f64) -> f64 {
    ((1.0 + n) * (1.0 + n).ln() - n * n.ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_examples() {
        assert!(jacobi_largest_root(1, 0.7).unwrap().root.abs() < 1e-14);
        let r = jacobi_largest_root(2, 1.0).unwrap().root;
        assert!((r - 5f64.sqrt().recip()).abs() < 1e-14);
        let r = jacobi_largest_root(2, 3.0).unwrap().root;
        assert!((r - 1.0 / 3.0).abs() < 1e-14);
        assert!(jacobi_largest_root(0, 1.0).is_err());
        assert!(jacobi_largest_root(3, -1.0).is_err());
    }

    /// Reference roots from an independent high-precision evaluation of the explicit sum.
    #[test]
    fn jacobi_reference_roots() {
        let cases = [
            (3, 0.5, 0.707_106_781_186_547_5),
            (5, 2.5, 0.743_477_004_521_219_2),
            (10, 0.0, 0.973_906_528_517_171_7),
            (10, 7.5, 0.784_894_312_759_664_5),
            (30, 1.5, 0.990_151_023_319_648_9),
        ];
        for (k, a, expected) in cases {
            let j = jacobi_largest_root(k, a).unwrap();
            assert!((j.root - expected).abs() < 1e-13, "k={k} a={a}: {}", j.root);
            assert!(j.bracket.0 <= j.root && j.root <= j.bracket.1);
            assert!(jacobi_relative_value(k, a, j.root) < 1e-10);
        }
    }

    #[test]
    fn jacobi_root_inside_bracket_for_large_degree() {
        for (k, a) in [(200u64, 10.0), (1000, 500.0), (2726, 4999.5)] {
            let j = jacobi_largest_root(k, a).unwrap();
            assert!(j.root <= tau(k, a) + 1e-12);
            assert!(j.root >= tau_lower(k, a) - 1e-12);
        }
    }

    #[test]
    fn shannon_examples() {
        let b = shannon_bound(3, PI / 3.0).unwrap();
        assert!((b.log_bound.exp() - 4.0).abs() < 1e-12);
        let b = shannon_bound(3, FRAC_PI_2).unwrap();
        assert!((b.log_bound.exp() - 2.0).abs() < 1e-12);
        let b = shannon_bound(10, 0.5).unwrap();
        assert!((b.log_bound - 8.556_945_826_174_01).abs() < 1e-9);
        assert!(shannon_bound(2, 0.5).is_err());
    }

    #[test]
    fn rankin_examples() {
        let b = rankin_bounds(7, PI / 3.0).unwrap();
        assert_eq!(b.method, Method::RankinSimplex);
        assert!((b.log_bound.exp() - 3.0).abs() < 1e-12);
        let b = rankin_bounds(7, FRAC_PI_2 - 1e-6).unwrap();
        assert!((b.log_bound.exp() - 2.0).abs() < 1e-9);
        assert!(rankin_bounds(7, FRAC_PI_4).is_err());
        let b = rankin_bounds(4, PI / 6.0).unwrap();
        let (integral, closed) = (b.params["log_integral_form"], b.params["log_closed_form"]);
        assert!((integral - 3.489_488_512_617_28).abs() < 1e-9);
        assert!((closed - 3.719_248_694_327_09).abs() < 1e-9);
        assert!(closed >= integral);
        let b = rankin_bounds(10, 0.5).unwrap();
        assert!((b.params["log_integral_form"] - 7.107_592_332_474_81).abs() < 1e-9);
    }

    #[test]
    fn series_agree_with_quadrature() {
        for n in [0u32, 1, 5, 40, 300, 2000] {
            for theta in [0.1, 0.4, 0.7, 1.0, 1.2] {
                let series = log_sine_power_integral(n, theta);
                let simpson = log_sine_power_simpson(n, theta);
                assert!((series - simpson).abs() < 1e-8, "n={n} theta={theta}");
                let beta = theta.min(1.2);
                let rs = log_rankin_integral(n, beta);
                let rq = log_rankin_simpson(n, beta);
                assert!((rs - rq).abs() < 1e-8, "rankin n={n} beta={beta}: {rs} vs {rq}");
            }
        }
    }

    #[test]
    fn shannon_closed_form_dominates_integral_form() {
        for r in 3..=50u32 {
            for i in 1..=260 {
                let theta = 0.1 + 1.3 * i as f64 / 261.0;
                let b = shannon_bound(r, theta).unwrap();
                if let Some(&c) = b.params.get("log_closed_form") {
                    assert!(c >= b.log_bound - 1e-9, "r={r} theta={theta}");
                }
            }
        }
        let b = shannon_bound(37, 0.1001).unwrap();
        assert!((b.log_bound - 85.630_109_939_734).abs() < 1e-9);
        assert!((b.params["log_closed_form"] - 85.630_117_316_796).abs() < 1e-9);
    }

    #[test]
    fn kl_is_monotone_and_finite() {
        let b = kl_bound(3, FRAC_PI_2 - 0.01).unwrap();
        assert!(b.log_bound.is_finite() && b.log_bound > 0.0);
        for r in [3u32, 10, 101] {
            let mut prev = f64::INFINITY;
            for i in 1..15 {
                let theta = 0.1 * i as f64;
                let v = kl_bound(r, theta).unwrap().log_bound;
                assert!(v <= prev + 1e-12, "r={r} theta={theta}");
                prev = v;
            }
        }
        assert!(kl_bound(2, 0.5).is_err());
    }

    #[test]
    fn kl_growth_rate_matches_asymptotic_base() {
        let theta = 2.0 * (1.0 / (2.0 * 2f64.sqrt())).asin();
        let s = theta.sin();
        let n = (1.0 - s) / (2.0 * s);
        let expected = (1.0 + n) * (1.0 + n).ln() - n * n.ln();
        let rate = |r: u32| kl_bound(r, theta).unwrap().log_bound / r as f64;
        let (coarse, fine) = (rate(201), rate(4001));
        assert!(fine > expected && fine < coarse, "{coarse} {fine} vs {expected}");
    }

    #[test]
    fn asymptotic_base_examples() {
        assert!((kl_asymptotic_base(0.0).unwrap() - 1.887_002).abs() < 1e-6);
        assert!((kl_asymptotic_base(1.0 / 650.0 - 1e-15).unwrap() - 1.885_506).abs() < 1e-6);
        assert!(kl_asymptotic_base(1.0 / 650.0).is_err());
        for i in 0..1000 {
            let eps = i as f64 / 1000.0 / 650.0;
            assert!(kl_asymptotic_base(eps).unwrap() < 1.89);
            assert!(kl_asymptotic_base_from_angle(eps) < 1.89);
        }
    }

    #[test]
    fn small_point_pipeline() {
        let b = small_point_count_bound(5, 0.00153).unwrap();
        assert!(b.below_target(0.0));
        assert!((b.theta - 0.7222).abs() < 1e-3);
        for r in [2000, 3000, 5000, 10000] {
            let b = small_point_count_bound(r, 0.00153).unwrap();
            let kl = b.kl.as_ref().unwrap();
            assert!(kl.log_bound < b.log_target, "r={r}");
        }
        assert!(small_point_count_bound(0, 0.00153).is_err());
        assert!(small_point_count_bound(5, 0.01).is_err());
        for r in 1..50 {
            assert!(log_target(r + 1) > log_target(r));
        }
    }

    #[test]
    fn small_point_reference_values() {
        let cases = [
            (10u32, 68.0, 37.495_612_595_057, 4.280_742_050_133_45),
            (100, 79.0, 122.934_030_808_167, 13.029_683_373_925_6),
            (1999, 611.0, 1_416.606_404_580_33, 145.377_203_823_159),
            (2000, 611.0, 1_416.871_674_918_2, 145.445_369_396_876),
            (3000, 880.0, 2_073.291_078_757, 213.470_812_596_138),
            (10000, 2726.0, 6_606.102_613_765_71, 687.218_490_084_706),
        ];
        for (r, k, kl, rankin) in cases {
            let b = small_point_count_bound(r, 0.00153).unwrap();
            let klb = b.kl.as_ref().unwrap();
            assert_eq!(klb.params["k"], k, "r={r}");
            assert!((klb.log_bound - kl).abs() < 1e-9 * kl, "r={r}: {}", klb.log_bound);
            let rb = b.rankin.as_ref().unwrap();
            assert!(
                (rb.params["log_integral_form"] - rankin).abs() < 1e-8 * rankin,
                "r={r}: {}",
                rb.params["log_integral_form"]
            );
            assert_eq!(b.best.method, Method::RankinCap);
            assert!(b.below_target(0.0));
        }
    }
}
