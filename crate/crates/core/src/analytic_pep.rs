//! Exact packet error probability for finite `N` and `M`.

use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::integrate_log_concave;
use crate::special::{compensated_sum, ln_binomial_pmf, ln_gamma, ln_gamma_pq, ln_poisson_term};
use crate::system_model::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Asymptotic,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Asymptotic => "asymptotic",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "asymptotic" => Ok(Method::Asymptotic),
            "monte_carlo" | "mc" => Ok(Method::MonteCarlo),
            other => Err(Error::Invalid(format!("unknown method {other:?}"))),
        }
    }
}

/// Error probability estimate tagged with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PepResult {
    pub p_e: f64,
    pub method: Method,
    /// 99.7% half-width, Monte Carlo only.
    pub ci_halfwidth: Option<f64>,
    /// Binomial mass left out of the k-sum, exact only.
    pub truncation_bound: Option<f64>,
}

impl PepResult {
    pub(crate) fn exact(p_e: f64, truncation_bound: f64) -> Self {
        PepResult {
            p_e: p_e.clamp(0.0, 1.0),
            method: Method::Exact,
            ci_halfwidth: None,
            truncation_bound: Some(truncation_bound),
        }
    }

    pub(crate) fn asymptotic(p_e: f64) -> Self {
        PepResult { p_e: p_e.clamp(0.0, 1.0), method: Method::Asymptotic, ci_halfwidth: None, truncation_bound: None }
    }

    pub(crate) fn monte_carlo(p_e: f64, ci_halfwidth: f64) -> Self {
        PepResult {
            p_e: p_e.clamp(0.0, 1.0),
            method: Method::MonteCarlo,
            ci_halfwidth: Some(ci_halfwidth),
            truncation_bound: None,
        }
    }
}

const QUAD_REL_TOL: f64 = 1e-12;

/// `Pr{Γ(shape, scale) ≥ x}`.
pub fn gamma_survival(shape: f64, scale: f64, x: f64) -> Result<f64> {
    ensure_finite("shape", shape)?;
    ensure_finite("scale", scale)?;
    ensure_finite("x", x)?;
    if shape <= 0.0 {
        return Err(Error::Domain { name: "shape", value: shape, range: "(0, ∞)" });
    }
    if scale <= 0.0 {
        return Err(Error::Domain { name: "scale", value: scale, range: "(0, ∞)" });
    }
    if x < 0.0 {
        return Err(Error::Domain { name: "x", value: x, range: "[0, ∞)" });
    }
    Ok(ln_gamma_pq(shape, x / scale)?.1.exp())
}

fn ln_gamma_density(k: u64, x: f64) -> f64 {
    if k == 1 {
        -x
    } else {
        ln_poisson_term((k - 1) as f64, x)
    }
}

fn check_sinr_args(m: u64, alpha_rho: f64, beta: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::Domain { name: "n_antennas", value: 0.0, range: "[1, ∞)" });
    }
    ensure_finite("alpha_rho", alpha_rho)?;
    ensure_finite("beta", beta)?;
    if alpha_rho <= 0.0 {
        return Err(Error::Domain { name: "alpha_rho", value: alpha_rho, range: "(0, ∞)" });
    }
    if beta < 0.0 {
        return Err(Error::Domain { name: "beta", value: beta, range: "[0, ∞)" });
    }
    Ok(())
}

/// `(ln Pr{success}, ln Pr{failure})` given `k` active interferers; each side
/// is integrated directly so neither loses relative precision.
fn ln_success_failure(m: u64, k: u64, alpha_rho: f64, beta: f64, want_success: bool) -> Result<f64> {
    check_sinr_args(m, alpha_rho, beta)?;
    let mf = m as f64;
    let pick = |x: f64| -> f64 {
        match ln_gamma_pq(mf, (beta + x) / alpha_rho) {
            Ok((lp, lq)) => {
                if want_success {
                    lq
                } else {
                    lp
                }
            }
            Err(_) => f64::NAN,
        }
    };
    if k == 0 {
        return Ok(pick(0.0));
    }
    let est = integrate_log_concave(
        |x: f64| ln_gamma_density(k, x) + pick(x),
        0.0,
        k as f64,
        QUAD_REL_TOL,
    )?;
    Ok(est.ln_value)
}

/// `p_{i|k}`: probability the designated user is decoded when `k` other users
/// transmit in the same slot.
pub fn conditional_success(m: u64, k: u64, alpha_rho: f64, beta: f64) -> Result<f64> {
    Ok(ln_success_failure(m, k, alpha_rho, beta, true)?.exp())
}

/// `1 − p_{i|k}`, computed without cancellation.
pub fn conditional_failure(m: u64, k: u64, alpha_rho: f64, beta: f64) -> Result<f64> {
    Ok(ln_conditional_failure(m, k, alpha_rho, beta)?.exp())
}

pub fn ln_conditional_failure(m: u64, k: u64, alpha_rho: f64, beta: f64) -> Result<f64> {
    ln_success_failure(m, k, alpha_rho, beta, false)
}

/// Density of `α_ρ‖h‖² − X_k` at `z ≥ 0`, by the convolution integral.
pub fn pdf_z(z: f64, m: u64, k: u64, rho: f64) -> Result<f64> {
    ensure_finite("z", z)?;
    ensure_finite("rho", rho)?;
    if z < 0.0 {
        return Err(Error::Domain { name: "z", value: z, range: "[0, ∞)" });
    }
    if k == 0 {
        return Err(Error::Domain { name: "k", value: 0.0, range: "[1, ∞)" });
    }
    if m == 0 {
        return Err(Error::Domain { name: "n_antennas", value: 0.0, range: "[1, ∞)" });
    }
    if rho <= 0.0 {
        return Err(Error::ZeroSpectralEfficiency);
    }
    let alpha = crate::system_model::Alpha::from_spectral_eff(rho)
        .finite()
        .ok_or(Error::ZeroSpectralEfficiency)?;
    let rate = rho.exp2();
    let (km1, mm1) = ((k - 1) as f64, (m - 1) as f64);
    let ln_kernel = |y: f64| {
        let mut v = -rate * y;
        if k > 1 {
            v += km1 * y.ln();
        }
        if m > 1 {
            v += mm1 * (z + y).ln();
        }
        v
    };
    let hint = (km1 + mm1) / rate;
    let integral = integrate_log_concave(ln_kernel, 0.0, hint, QUAD_REL_TOL)?;
    let ln_pre = -z / alpha - ln_gamma(k as f64) - ln_gamma(m as f64) - m as f64 * alpha.ln();
    Ok((ln_pre + integral.ln_value).exp())
}

/// `ln Pr{Binom(n, τ) = k}` for `k = 0..=n`.
pub fn binomial_log_weights(n: u64, tau: f64) -> Result<Vec<f64>> {
    check_tau(tau)?;
    let q = 1.0 - tau;
    Ok((0..=n).map(|k| ln_binomial_pmf(k, n, tau, q)).collect())
}

fn check_tau(tau: f64) -> Result<()> {
    ensure_finite("tau", tau)?;
    if tau <= 0.0 || tau > 1.0 {
        return Err(Error::Domain { name: "attempt_prob", value: tau, range: "(0, 1]" });
    }
    Ok(())
}

/// Sums longer than this are restricted to a window around the mean.
pub const TRUNCATION_THRESHOLD: u64 = 2000;
/// Initial half-width of the window in standard deviations.
pub const WINDOW_SIGMAS: f64 = 8.0;
/// Largest binomial mass the window may exclude.
pub const MAX_EXCLUDED_MASS: f64 = 1e-12;

fn kl_bernoulli(a: f64, p: f64) -> f64 {
    let mut d = 0.0;
    if a > 0.0 {
        d += a * (a / p).ln();
    }
    if a < 1.0 {
        d += (1.0 - a) * ((1.0 - a) / (1.0 - p)).ln();
    }
    d
}

/// Chernoff bound on `Pr{K < lo} + Pr{K > hi}` for `K ~ Binom(n, τ)`.
fn excluded_mass_bound(n: u64, tau: f64, lo: u64, hi: u64) -> f64 {
    let nf = n as f64;
    let mut bound = 0.0;
    if lo > 0 {
        let a = (lo - 1) as f64 / nf;
        bound += (-nf * kl_bernoulli(a, tau)).exp();
    }
    if hi < n {
        let a = (hi + 1) as f64 / nf;
        bound += (-nf * kl_bernoulli(a, tau)).exp();
    }
    bound
}

/// Index window `[lo, hi]` of the k-sum and a bound on the mass outside it.
pub fn summation_window(n: u64, tau: f64) -> Result<(u64, u64, f64)> {
    check_tau(tau)?;
    if n <= TRUNCATION_THRESHOLD || tau == 1.0 {
        let lo = if tau == 1.0 { n } else { 0 };
        return Ok((lo, n, 0.0));
    }
    let nf = n as f64;
    let mean = nf * tau;
    let sd = (nf * tau * (1.0 - tau)).sqrt();
    let mut c = WINDOW_SIGMAS;
    loop {
        let lo = (mean - c * sd).floor().max(0.0) as u64;
        let hi = ((mean + c * sd).ceil() as u64).min(n);
        let bound = excluded_mass_bound(n, tau, lo, hi);
        if bound < MAX_EXCLUDED_MASS || (lo == 0 && hi == n) {
            return Ok((lo, hi, bound));
        }
        c += 1.0;
    }
}

/// Exact error probability of a designated active user, marginalized over
/// the binomial number of active interferers.
pub fn exact_pep(config: &SystemConfig) -> Result<PepResult> {
    let derived = config.derive()?;
    let alpha = derived.alpha_rho.finite().ok_or(Error::ZeroSpectralEfficiency)?;
    let n = config.n_users - 1;
    let tau = config.attempt_prob;
    let (lo, hi, bound) = summation_window(n, tau)?;
    let q = 1.0 - tau;
    let terms: Vec<f64> = (lo..=hi)
        .into_par_iter()
        .map(|k| {
            let lw = ln_binomial_pmf(k, n, tau, q);
            if lw == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            Ok(lw + ln_conditional_failure(config.n_antennas, k, alpha, derived.beta)?)
        })
        .collect::<Result<_>>()?;
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p_e = if max == f64::NEG_INFINITY {
        0.0
    } else {
        max.exp() * compensated_sum(terms.iter().map(|t| (t - max).exp()))
    };
    Ok(PepResult::exact(p_e, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn cfg(n: u64, m: u64, tau: f64, rho: f64, beta: f64) -> SystemConfig {
        SystemConfig { n_users: n, n_antennas: m, attempt_prob: tau, tx_power: 1.0, noise_var: beta, spectral_eff: rho }
    }

    #[test]
    fn survival_examples() {
        assert!(rel(gamma_survival(1.0, 1.0, 1.0).unwrap(), (-1f64).exp()) < 1e-15);
        assert_eq!(gamma_survival(8.0, 0.3, 0.0).unwrap(), 1.0);
        assert!(rel(gamma_survival(2.0, 1.0, 2.0).unwrap(), 3.0 * (-2f64).exp()) < 1e-14);
        assert!(rel(gamma_survival(717.0, 1.0, 900.0).unwrap(), 1.1584988854903360478e-10) < 1e-12);
        assert!(gamma_survival(0.0, 1.0, 1.0).is_err());
        assert!(gamma_survival(1.0, 1.0, f64::NAN).is_err());
        assert!(gamma_survival(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn conditional_success_reference_values() {
        assert!(rel(conditional_success(1, 0, 1.0, 1.0).unwrap(), (-1f64).exp()) < 1e-14);
        assert_eq!(conditional_success(4, 0, 1.0, 0.0).unwrap(), 1.0);
        let cases = [
            (4, 2, 1.0, 0.1, 0.799687769748364104),
            (8, 3, 1.0, 0.1, 0.941697916997610855),
            (16, 10, 1.0 / (2f64.powf(1.5) - 1.0), 0.1, 0.373591335280580811),
        ];
        for (m, k, a, b, want) in cases {
            let s = conditional_success(m, k, a, b).unwrap();
            let f = conditional_failure(m, k, a, b).unwrap();
            assert!((s - want).abs() < 1e-12, "{m} {k}: {s}");
            assert!((s + f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_success_decreasing_in_k() {
        let mut prev = 1.0;
        for k in 0..40 {
            let s = conditional_success(12, k, 0.8, 0.05).unwrap();
            assert!(s <= prev + 1e-15, "k={k}");
            prev = s;
        }
    }

    #[test]
    fn tiny_failures_keep_relative_precision() {
        // k = 0: P(M, β/α) in closed form for M = 1
        let f = conditional_failure(1, 0, 1.0, 1e-20).unwrap();
        assert!(rel(f, 1e-20) < 1e-12);
        let f = conditional_failure(64, 1, 10.0, 0.01).unwrap();
        assert!(f > 0.0 && f < 1e-50);
    }

    fn laguerre(n: u64, a: f64, x: f64) -> f64 {
        // L_n^{(a)}(x) = Σ_i (−1)^i C(n+a, n−i) x^i / i!
        let mut total = 0.0;
        for i in 0..=n {
            let mut c = 1.0;
            for j in 0..(n - i) {
                c *= (n as f64 + a - j as f64) / (j + 1) as f64;
            }
            let mut term = c;
            for j in 1..=i {
                term *= x / j as f64;
            }
            total += if i % 2 == 0 { term } else { -term };
        }
        total
    }

    /// Whittaker closed form, with W reduced to a Laguerre polynomial.
    fn pdf_z_whittaker(z: f64, m: u64, k: u64, rho: f64) -> f64 {
        let alpha = 1.0 / (rho.exp2() - 1.0);
        let x = rho.exp2() * z;
        let mu = (1.0 - m as f64 - k as f64) / 2.0;
        let n = m - 1;
        let fact: f64 = (1..=n).map(|j| j as f64).product();
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        let u = sign * fact * laguerre(n, 1.0 - m as f64 - k as f64, x);
        let w = (-x / 2.0).exp() * x.powf(mu + 0.5) * u;
        let mk = (m + k) as f64;
        z.powf((mk - 2.0) / 2.0) / (fact * alpha.powi(m as i32) * (rho / 2.0 * mk).exp2())
            * (-z / 2.0 * (rho.exp2() - 2.0)).exp()
            * w
    }

    const WHITTAKER: [(u64, u64, f64, f64, f64); 9] = [
        (1, 1, 1.0, 0.5, 0.3032653298563167118),
        (1, 3, 2.0, 0.2, 0.025725545441907488173),
        (2, 1, 0.5, 1.3, 0.14211707025511744419),
        (2, 2, 1.0, 0.5, 0.22744899739223753385),
        (2, 3, 0.5, 1.3, 0.12112659580161533442),
        (3, 1, 2.0, 0.2, 0.49084340703159489284),
        (3, 2, 0.5, 1.3, 0.086760597788967950959),
        (3, 3, 1.0, 0.5, 0.18006378960218804763),
        (3, 3, 2.0, 0.2, 0.12618380039255623193),
    ];

    #[test]
    fn pdf_z_matches_whittaker_form() {
        for (m, k, rho, z, want) in WHITTAKER {
            let conv = pdf_z(z, m, k, rho).unwrap();
            let closed = pdf_z_whittaker(z, m, k, rho);
            assert!(rel(conv, want) < 1e-11, "conv {m} {k}: {conv} vs {want}");
            assert!(rel(closed, want) < 1e-11, "closed {m} {k}: {closed} vs {want}");
        }
    }

    #[test]
    fn pdf_z_normalizes_with_negative_mass() {
        let (m, k, rho) = (3u64, 2u64, 1.0f64);
        let alpha = 1.0 / (rho.exp2() - 1.0);
        let positive = crate::quadrature::integrate(
            |z: f64| if z <= 0.0 { pdf_z(0.0, m, k, rho).unwrap() } else { pdf_z(z, m, k, rho).unwrap() },
            0.0,
            80.0,
            1e-13,
            1e-12,
        )
        .unwrap()
        .value;
        let negative = conditional_failure(m, k, alpha, 0.0).unwrap();
        assert!((positive + negative - 1.0).abs() < 1e-8);
    }

    #[test]
    fn pdf_z_tail_decays_monotonically() {
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let v = pdf_z(5.0 + i as f64, 4, 2, 1.0).unwrap();
            assert!(v < prev && v > 0.0);
            prev = v;
        }
        assert!(prev < 1e-10);
    }

    #[test]
    fn binomial_weights() {
        let w: Vec<f64> = binomial_log_weights(2, 0.5).unwrap().iter().map(|v| v.exp()).collect();
        for (got, want) in w.iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
        let w = binomial_log_weights(5, 1.0).unwrap();
        assert_eq!(w[5], 0.0);
        assert!(w[..5].iter().all(|v| *v == f64::NEG_INFINITY));
        let w = binomial_log_weights(1000, 0.3).unwrap();
        let total = compensated_sum(w.iter().map(|v| v.exp()));
        assert!((total - 1.0).abs() < 1e-12);
        assert!(binomial_log_weights(3, 0.0).is_err());
    }

    #[test]
    fn window_bound_is_honest() {
        let (n, tau) = (5000u64, 0.3);
        let (lo, hi, bound) = summation_window(n, tau).unwrap();
        assert!(lo > 0 && hi < n && bound < MAX_EXCLUDED_MASS);
        let excluded = compensated_sum(
            (0..lo).chain(hi + 1..=n).map(|k| ln_binomial_pmf(k, n, tau, 1.0 - tau).exp()),
        );
        assert!(excluded <= bound);
        assert_eq!(summation_window(100, 0.3).unwrap(), (0, 100, 0.0));
    }

    #[test]
    fn exact_pep_reference_values() {
        let cases = [
            (cfg(8, 8, 0.5, 1.0, 0.1), 0.104992634049215983),
            (cfg(16, 4, 0.7, 1.5, 0.1), 0.995519915808005551),
            (cfg(4, 16, 0.3, 0.5, 0.1), 1.58350986085208186e-8),
        ];
        for (c, want) in cases {
            let r = exact_pep(&c).unwrap();
            assert!(rel(r.p_e, want) < 1e-10, "{c}: {} vs {want}", r.p_e);
            assert_eq!(r.method, Method::Exact);
            assert_eq!(r.truncation_bound, Some(0.0));
            assert_eq!(r.ci_halfwidth, None);
        }
    }

    #[test]
    fn single_user_limits() {
        let alone = crate::special::gamma_p(8.0, 0.1).unwrap();
        assert!((alone - (1.0 - gamma_survival(8.0, 1.0, 0.1).unwrap())).abs() < 1e-15);
        let r = exact_pep(&cfg(1, 8, 0.5, 1.0, 0.1)).unwrap();
        assert!(rel(r.p_e, alone) < 1e-13);
        let r = exact_pep(&cfg(2, 8, 1e-12, 1.0, 0.1)).unwrap();
        assert!((r.p_e - alone).abs() < 1e-12);
    }

    #[test]
    fn tau_one_uses_point_mass() {
        let r = exact_pep(&cfg(5, 6, 1.0, 1.0, 0.1)).unwrap();
        let want = conditional_failure(6, 4, 1.0, 0.1).unwrap();
        assert!(rel(r.p_e, want) < 1e-14);
    }

    #[test]
    fn zero_rate_is_rejected() {
        assert_eq!(exact_pep(&cfg(4, 4, 0.5, 0.0, 0.1)), Err(Error::ZeroSpectralEfficiency));
    }

    #[test]
    fn truncated_sum_reports_bound() {
        let r = exact_pep(&cfg(3001, 2100, 0.5, 0.7, 0.1)).unwrap();
        let b = r.truncation_bound.unwrap();
        assert!(b > 0.0 && b < MAX_EXCLUDED_MASS);
        assert!((0.0..=1.0).contains(&r.p_e));
    }

    #[test]
    fn bit_stable_across_pool_sizes() {
        let c = cfg(40, 20, 0.4, 1.0, 0.1);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| exact_pep(&c).unwrap().p_e)
        };
        assert_eq!(run(1).to_bits(), run(3).to_bits());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn monotone_in_parameters(
            n in 2u64..12,
            m in 1u64..12,
            tau in 0.05f64..0.95,
            rho in 0.2f64..2.0,
            beta in 0.0f64..0.5,
        ) {
            let base = exact_pep(&cfg(n, m, tau, rho, beta)).unwrap().p_e;
            let slack = 1e-12 * base.max(1e-300) + 1e-300;
            prop_assert!(exact_pep(&cfg(n, m, tau, rho * 1.1, beta)).unwrap().p_e >= base - slack);
            prop_assert!(exact_pep(&cfg(n, m, (tau * 1.05).min(1.0), rho, beta)).unwrap().p_e >= base - slack);
            prop_assert!(exact_pep(&cfg(n, m + 1, tau, rho, beta)).unwrap().p_e <= base + slack);
            prop_assert!(exact_pep(&cfg(n, m, tau, rho, beta + 0.05)).unwrap().p_e >= base - slack);
        }
    }
}
