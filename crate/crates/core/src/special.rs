//! Special functions: log-gamma, regularized incomplete gamma, Gaussian tail
//! and its inverse, and the binomial log-pmf.
//!
//! The incomplete gamma and binomial routines factor out the saddle-point
//! deviance `bd0` and the Stirling remainder `stirlerr`, so the prefactor
//! `x^a e^{-x} / Γ(a+1)` keeps full relative precision for large `a`
//! (Loader, "Fast and accurate computation of binomial probabilities", 2000).

use std::f64::consts::LN_2;

use crate::error::{Error, Result};

/// ln √(2π)
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

const MAX_SERIES_TERMS: usize = 1_000_000;

/// Asymptotic tail of Stirling's series for ln Γ(x), valid for x ≥ 10.
fn stirling_tail(x: f64) -> f64 {
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in C.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// Natural log of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x.fract() == 0.0 && x <= 20.0 {
        // (x−1)! is exact in f64 up to 20!
        let fact: f64 = (2..x as u64).map(|k| k as f64).product();
        return fact.ln();
    }
    if x >= 10.0 {
        return (x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_tail(x);
    }
    // Shift into the asymptotic range: Γ(x) = Γ(x+n) / (x (x+1) ... (x+n-1)).
    let mut shifted = x;
    let mut prod = 1.0;
    while shifted < 10.0 {
        prod *= shifted;
        shifted += 1.0;
    }
    ln_gamma(shifted) - prod.ln()
}

/// Stirling remainder `ln Γ(n+1) − (n+½) ln n + n − ln √(2π)`.
pub fn stirlerr(n: f64) -> f64 {
    if n >= 10.0 {
        stirling_tail(n)
    } else {
        ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI
    }
}

/// Deviance term `x ln(x/m) + m − x`, evaluated without cancellation when
/// `x ≈ m`.
pub fn bd0(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        return m;
    }
    let diff = x - m;
    if diff.abs() < 0.1 * (x + m) {
        let v = diff / (x + m);
        let v2 = v * v;
        let mut s = diff * v;
        let mut ej = 2.0 * x * v;
        let mut j = 1.0;
        loop {
            ej *= v2;
            let next = s + ej / (2.0 * j + 1.0);
            if next == s {
                return s;
            }
            s = next;
            j += 1.0;
        }
    }
    x * (x / m).ln() + m - x
}

/// `ln(x^a e^{-x} / Γ(a+1))` for a > 0, x ≥ 0.
pub fn ln_poisson_term(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if a >= 10.0 {
        -stirlerr(a) - bd0(a, x) - 0.5 * (LN_2PI + a.ln())
    } else {
        a * x.ln() - x - ln_gamma(a + 1.0)
    }
}

/// `ln(1 − e^l)` for l ≤ 0.
pub fn ln_one_minus_exp(l: f64) -> f64 {
    if l > -LN_2 {
        (-l.exp_m1()).ln()
    } else {
        (-l.exp()).ln_1p()
    }
}

/// Natural logs of the regularized incomplete gamma pair `(P(a,x), Q(a,x))`.
///
/// Each member is computed directly on the side where it is the smaller of the
/// two, so tiny tails keep their relative precision. Relative accuracy is
/// ~1e-14 for `a ≥ 1/2`; for `a < 1/2` and `x < 1.1` the upper tail is
/// obtained by complement.
pub fn ln_gamma_pq(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain { name: "shape", value: a, range: "(0, ∞)" });
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain { name: "x", value: x, range: "[0, ∞]" });
    }
    if x == 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    if x == f64::INFINITY {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    let use_series = x < a + 1.0 && !(a < 1.0 && x >= 1.1);
    if use_series {
        let ln_p = ln_poisson_term(a, x) + lower_series(a, x)?.ln();
        Ok((ln_p, ln_one_minus_exp(ln_p)))
    } else {
        let ln_q = a.ln() + ln_poisson_term(a, x) + upper_continued_fraction(a, x)?.ln();
        Ok((ln_one_minus_exp(ln_q), ln_q))
    }
}

/// Σ_{n≥0} x^n / ((a+1)…(a+n))
fn lower_series(a: f64, x: f64) -> Result<f64> {
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut denom = a;
    for _ in 0..MAX_SERIES_TERMS {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term < sum * f64::EPSILON * 0.5 {
            return Ok(sum);
        }
    }
    Err(Error::SeriesDivergence("lower incomplete gamma"))
}

/// Legendre continued fraction for Γ(a,x) e^x x^{-a}, modified Lentz.
fn upper_continued_fraction(a: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_SERIES_TERMS {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(h);
        }
    }
    Err(Error::SeriesDivergence("upper incomplete gamma"))
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    Ok(ln_gamma_pq(a, x)?.0.exp())
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    Ok(ln_gamma_pq(a, x)?.1.exp())
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let (ln_p, ln_q) = ln_gamma_pq(0.5, x * x).expect("x² is a valid argument");
    if x >= 0.0 {
        ln_q.exp()
    } else {
        1.0 + ln_p.exp()
    }
}

/// Standard Gaussian tail `Q(x) = ∫ₓ^∞ φ(t) dt`.
pub fn q_func(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    // erfc(x/√2) = Q_Γ(½, x²/2); squaring first avoids rounding x/√2.
    let (ln_p, ln_q) = ln_gamma_pq(0.5, 0.5 * x * x).expect("x²/2 is a valid argument");
    if x >= 0.0 {
        0.5 * ln_q.exp()
    } else {
        0.5 + 0.5 * ln_p.exp()
    }
}

/// `ln Q(x)`, finite far beyond the range where `Q(x)` underflows.
pub fn ln_q_func(x: f64) -> f64 {
    let (ln_p, ln_q) = ln_gamma_pq(0.5, 0.5 * x * x).expect("x²/2 is a valid argument");
    if x >= 0.0 {
        ln_q - LN_2
    } else {
        ln_p.exp().ln_1p() - LN_2
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Inverse of [`q_func`] on `(0, 1)`.
///
/// Acklam's rational approximation (relative error ~1e-9) followed by two
/// Newton steps on `ln Q(x) − ln p`.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain { name: "p", value: p, range: "(0, 1)" });
    }
    if p > 0.5 {
        return Ok(-q_inv(1.0 - p)?);
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut x = -acklam_lower(p);
    let ln_p = p.ln();
    for _ in 0..2 {
        let ln_q = ln_q_func(x);
        let ln_phi = -0.5 * x * x - LN_SQRT_2PI;
        x += (ln_q - ln_p) * (ln_q - ln_phi).exp();
    }
    Ok(x)
}

/// Acklam's approximation to Φ⁻¹(p) for p ≤ ½.
fn acklam_lower(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    if p < 0.024_25 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// `ln Pr{Binom(n, p) = k}` with `q = 1 − p` supplied separately so that
/// neither tail loses precision.
pub fn ln_binomial_pmf(k: u64, n: u64, p: f64, q: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if k == 0 {
        return if p < 0.1 { -bd0(nf, nf * q) - nf * p } else { nf * q.ln() };
    }
    if k == n {
        return if q < 0.1 { -bd0(nf, nf * p) - nf * q } else { nf * p.ln() };
    }
    let kf = k as f64;
    let rest = nf - kf;
    let lc = stirlerr(nf) - stirlerr(kf) - stirlerr(rest) - bd0(kf, nf * p) - bd0(rest, nf * q);
    let lf = LN_2PI + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// ln Σ exp(values), stable for widely spread magnitudes.
pub fn ln_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + compensated_sum(values.iter().map(|v| (v - max).exp())).ln()
}
