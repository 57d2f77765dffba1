//! Large-system approximations: error probability, AoI and the
//! spectral-efficiency trade-off as `N, M → ∞` with `ζ = M/N` fixed.
//!
//! Every returned value drops the `O(1/√N)` correction of its formula
//! (`O(N^{-1.5})` for [`supremum_rho`]).

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use crate::analytic_pep::PepResult;
use crate::error::{ensure_finite, Error, Result};
use crate::system_model::{Alpha, SystemConfig};

pub use crate::special::{q_func, q_inv};

/// Average age in slots; `Unbounded` when the success probability underflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Age {
    Finite(f64),
    Unbounded,
}

impl Age {
    pub fn from_value(v: f64) -> Age {
        if v.is_finite() {
            Age::Finite(v)
        } else {
            Age::Unbounded
        }
    }

    /// The age as a float, `+∞` when unbounded.
    pub fn value(self) -> f64 {
        match self {
            Age::Finite(v) => v,
            Age::Unbounded => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Age::Finite(v) => Some(v),
            Age::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoiSource {
    AnalyticAsymptotic,
    Simulated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoiEstimate {
    /// Network average.
    pub delta: Age,
    pub per_user: Option<Vec<f64>>,
    pub source: AoiSource,
}

/// Number of users on a trade-off curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Population {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Population {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Population::Finite(n) => write!(f, "{n}"),
            Population::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Population {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t, "inf" | "Inf" | "infinite" | "∞") {
            return Ok(Population::Infinite);
        }
        // accept 1e4 style as well as plain integers
        let v: f64 = t.parse().map_err(|_| Error::Invalid(format!("bad user count {s:?}")))?;
        if v < 1.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
            return Err(Error::Invalid(format!("bad user count {s:?}")));
        }
        Ok(Population::Finite(v as u64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub rho: f64,
    pub tau_eps: f64,
    pub delta: f64,
    pub n_users: Population,
}

fn check_eps(eps: f64) -> Result<()> {
    ensure_finite("eps", eps)?;
    if eps <= 0.0 || eps >= 0.5 {
        return Err(Error::Domain { name: "eps", value: eps, range: "(0, 0.5)" });
    }
    Ok(())
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    ensure_finite(name, v)?;
    if v <= 0.0 {
        return Err(Error::Domain { name, value: v, range: "(0, ∞)" });
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    ensure_finite("tau", tau)?;
    if tau <= 0.0 || tau > 1.0 {
        return Err(Error::Domain { name: "attempt_prob", value: tau, range: "(0, 1]" });
    }
    Ok(())
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain { name: "n_users", value: 0.0, range: "[1, ∞)" });
    }
    Ok(())
}

fn finite_alpha(rho: f64) -> Result<f64> {
    ensure_finite("rho", rho)?;
    if rho < 0.0 {
        return Err(Error::Domain { name: "rho", value: rho, range: "(0, ∞)" });
    }
    Alpha::from_spectral_eff(rho).finite().ok_or(Error::ZeroSpectralEfficiency)
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// `w = √N(τ − α_ρζ)/√(α_ρ²ζ + τ)`; the success probability is `Q(w)`.
pub fn w_argument(n: u64, zeta: f64, tau: f64, alpha_rho: f64) -> f64 {
    (n as f64).sqrt() * (tau - alpha_rho * zeta) / (alpha_rho * alpha_rho * zeta + tau).sqrt()
}

fn config_w(config: &SystemConfig) -> Result<f64> {
    let d = config.derive()?;
    let alpha = d.alpha_rho.finite().ok_or(Error::ZeroSpectralEfficiency)?;
    Ok(w_argument(config.n_users, d.zeta, config.attempt_prob, alpha))
}

/// `p_e = 1 − Q(w)`, evaluated as `Q(−w)`.
pub fn asymptotic_pep(config: &SystemConfig) -> Result<PepResult> {
    Ok(PepResult::asymptotic(q_func(-config_w(config)?)))
}

/// `Δ = 1/(τ·Q(w))`.
pub fn asymptotic_aoi(config: &SystemConfig) -> Result<AoiEstimate> {
    let success = q_func(config_w(config)?);
    let delta = if success > 0.0 {
        Age::from_value(1.0 / (config.attempt_prob * success))
    } else {
        Age::Unbounded
    };
    Ok(AoiEstimate { delta, per_user: None, source: AoiSource::AnalyticAsymptotic })
}

/// `1/(τ(1 − p_e))`, the renewal-law age for a given error probability.
pub fn aoi_from_pep(tau: f64, p_e: f64) -> Age {
    let success = tau * (1.0 - p_e);
    if success > 0.0 {
        Age::from_value(1.0 / success)
    } else {
        Age::Unbounded
    }
}

/// `Q⁻¹(ε)²/N`, the operational lower limit on `ζ`.
pub fn case_threshold(eps: f64, n: u64) -> Result<f64> {
    check_eps(eps)?;
    check_n(n)?;
    let qi = q_inv(eps)?;
    Ok(qi * qi / n as f64)
}

/// Larger root `α_ρ⁺` of the quadratic in `α_ρ` obtained from `p_e = ε`.
pub fn alpha_rho_plus(eps: f64, n: u64, zeta: f64, tau: f64) -> Result<f64> {
    check_positive("zeta", zeta)?;
    check_tau(tau)?;
    let q = case_threshold(eps, n)?;
    if zeta <= q {
        return Err(Error::NoValidSolution { zeta, threshold: q });
    }
    let disc = tau * tau - tau * (1.0 - q / zeta) * (tau - q);
    Ok((tau + disc.sqrt()) / (zeta - q))
}

/// Supremum `ρ*_N` of the spectral efficiencies with `p_e < ε`.
pub fn supremum_rho(eps: f64, n: u64, zeta: f64, tau: f64) -> Result<f64> {
    Ok(log2_1p(1.0 / alpha_rho_plus(eps, n, zeta, tau)?))
}

/// `C_{τ,ζ} = log2(1 + ζ/τ)`.
pub fn age_limited_capacity(tau: f64, zeta: f64) -> Result<f64> {
    check_tau(tau)?;
    check_positive("zeta", zeta)?;
    Ok(log2_1p(zeta / tau))
}

/// `φ(ρ) = (α_ρζ − τ)/√(α_ρ²ζ + τ)`, positive below capacity.
pub fn phi(rho: f64, tau: f64, zeta: f64) -> Result<f64> {
    check_positive("rho", rho)?;
    check_tau(tau)?;
    check_positive("zeta", zeta)?;
    let a = finite_alpha(rho)?;
    Ok((a * zeta - tau) / (a * a * zeta + tau).sqrt())
}

/// Smallest spectral efficiency reachable at error `ε` (supremum at `τ = 1`).
pub fn rho_min(eps: f64, n: u64, zeta: f64) -> Result<f64> {
    supremum_rho(eps, n, zeta, 1.0)
}

/// Attempt probability `τ_ε` giving `p_e = ε` at spectral efficiency `ρ`.
pub fn tau_for_error(eps: f64, rho: f64, zeta: f64, n: u64) -> Result<f64> {
    check_positive("rho", rho)?;
    let floor = rho_min(eps, n, zeta)?;
    if rho < floor * (1.0 - 1e-12) {
        return Err(Error::BelowMinimumSpectralEfficiency { rho, rho_min: floor });
    }
    let a = finite_alpha(rho)?;
    let q = case_threshold(eps, n)?;
    let half = a * zeta + 0.5 * q;
    let c = a * a * zeta * (zeta - q);
    // minus root rewritten to avoid cancellation
    let tau = c / (half + (half * half - c).sqrt());
    Ok(tau.min(1.0))
}

/// AoI on the fixed-error curve; for `Infinite` users `τ = α_ρζ` clipped to 1
/// and `ε` plays no role.
pub fn aoi_at_fixed_error(eps: f64, rho: f64, zeta: f64, n_users: Population) -> Result<TradeoffPoint> {
    check_eps(eps)?;
    check_positive("rho", rho)?;
    check_positive("zeta", zeta)?;
    match n_users {
        Population::Finite(n) => {
            let tau = tau_for_error(eps, rho, zeta, n)?;
            Ok(TradeoffPoint { rho, tau_eps: tau, delta: 1.0 / (tau * (1.0 - eps)), n_users })
        }
        Population::Infinite => {
            let tau = if rho <= log2_1p(zeta) { 1.0 } else { finite_alpha(rho)? * zeta };
            Ok(TradeoffPoint { rho, tau_eps: tau, delta: 1.0 / tau, n_users })
        }
    }
}
