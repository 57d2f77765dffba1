//! Physical-layer and slot-level simulation: Rayleigh channels, MRC SINR
//! outage and time-average age.

mod aoi;
mod rng;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analytic_pep::PepResult;
use crate::error::{Error, Result};
use crate::special::{ln_binomial_pmf, ln_sum_exp, q_func};
use crate::system_model::SystemConfig;

pub use aoi::{
    area_decomposition, direct_age_sum, empirical_network_aoi, geometric_success_slots, simulate_aoi,
    AgeArea, AoiMode,
};
pub use rng::RngSpec;

/// One unit-variance circular complex Gaussian draw.
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Channel vectors of all users for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n_antennas: usize,
    entries: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn from_vectors(vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let n_antennas = vectors.first().map_or(0, Vec::len);
        if n_antennas == 0 || vectors.iter().any(|v| v.len() != n_antennas) {
            return Err(Error::Invalid("channel vectors must be non-empty and of equal length".into()));
        }
        Ok(ChannelRealization { n_antennas, entries: vectors.concat() })
    }

    pub fn n_users(&self) -> usize {
        self.entries.len() / self.n_antennas
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn vector(&self, user: usize) -> &[Complex64] {
        &self.entries[user * self.n_antennas..(user + 1) * self.n_antennas]
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `|aᴴb|²`.
fn inner_sqr(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}

/// Draws `N·M` i.i.d. `CN(0, 1)` entries from sub-stream 0 of `rng`.
pub fn sample_channels(rng: &RngSpec, n_users: usize, n_antennas: usize) -> ChannelRealization {
    let mut r = rng.stream(0);
    let entries = (0..n_users * n_antennas).map(|_| complex_normal(&mut r)).collect();
    ChannelRealization { n_antennas: n_antennas.max(1), entries }
}

/// Post-MRC signal-to-interference-plus-noise ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sinr {
    Finite(f64),
    /// No noise and no interference.
    Unbounded,
}

impl Sinr {
    fn from_parts(signal: f64, impairment: f64) -> Sinr {
        if impairment > 0.0 {
            Sinr::Finite(signal / impairment)
        } else {
            Sinr::Unbounded
        }
    }

    /// Whether spectral efficiency `rho` is supported, i.e. `ρ < log2(1 + SINR)`.
    pub fn supports(self, rho: f64) -> bool {
        match self {
            Sinr::Finite(s) => rho < s.ln_1p() / std::f64::consts::LN_2,
            Sinr::Unbounded => true,
        }
    }
}

/// `SINR_i = ‖h_i‖⁴P / (‖h_i‖²σ² + Σ_{j≠i active} |h_iᴴh_j|²P)` for each active
/// user; `None` for idle users.
pub fn slot_sinr(channels: &ChannelRealization, active: &[bool], tx_power: f64, noise_var: f64) -> Vec<Option<Sinr>> {
    let n = channels.n_users().min(active.len());
    (0..n)
        .map(|i| {
            if !active[i] {
                return None;
            }
            let hi = channels.vector(i);
            let g = norm_sqr(hi);
            let interference: f64 = (0..n)
                .filter(|&j| j != i && active[j])
                .map(|j| inner_sqr(hi, channels.vector(j)))
                .sum();
            Some(Sinr::from_parts(g * g * tx_power, g * noise_var + interference * tx_power))
        })
        .collect()
}

/// Per-slot outcome for every user.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub active_mask: Vec<bool>,
    pub decoded_mask: Vec<bool>,
    pub sinr: Vec<Option<Sinr>>,
}

/// Draws activity and channels for one slot from `rng`'s sub-stream `slot`.
pub fn simulate_slot(config: &SystemConfig, rng: &RngSpec, slot: u64) -> SlotOutcome {
    let n = config.n_users as usize;
    let m = config.n_antennas as usize;
    let mut r = rng.stream(slot);
    let active_mask: Vec<bool> = (0..n).map(|_| r.random::<f64>() < config.attempt_prob).collect();
    let mut entries = vec![Complex64::new(0.0, 0.0); n * m];
    for (i, _) in active_mask.iter().enumerate().filter(|(_, a)| **a) {
        for z in &mut entries[i * m..(i + 1) * m] {
            *z = complex_normal(&mut r);
        }
    }
    let channels = ChannelRealization { n_antennas: m, entries };
    let sinr = slot_sinr(&channels, &active_mask, config.tx_power, config.noise_var);
    let decoded_mask = sinr.iter().map(|s| s.is_some_and(|s| s.supports(config.spectral_eff))).collect();
    SlotOutcome { active_mask, decoded_mask, sinr }
}

/// One trial for the designated user 0: `None` if it stays idle, otherwise
/// whether its packet fails.
fn designated_trial(config: &SystemConfig, rng: &RngSpec, trial: u64) -> Option<bool> {
    let mut r = rng.stream(trial);
    if r.random::<f64>() >= config.attempt_prob {
        return None;
    }
    let m = config.n_antennas as usize;
    let h0: Vec<Complex64> = (0..m).map(|_| complex_normal(&mut r)).collect();
    let mut hj = vec![Complex64::new(0.0, 0.0); m];
    let mut interference = 0.0;
    for _ in 1..config.n_users {
        if r.random::<f64>() < config.attempt_prob {
            for z in hj.iter_mut() {
                *z = complex_normal(&mut r);
            }
            interference += inner_sqr(&h0, &hj);
        }
    }
    let g = norm_sqr(&h0);
    let sinr = Sinr::from_parts(g * g * config.tx_power, g * config.noise_var + interference * config.tx_power);
    Some(!sinr.supports(config.spectral_eff))
}

/// Failure and conditioning counts over `trials` trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialCounts {
    pub trials: u64,
    pub conditioned: u64,
    pub failures: u64,
}

pub fn count_failures(config: &SystemConfig, trials: u64, rng: &RngSpec) -> Result<TrialCounts> {
    config.validate()?;
    let (conditioned, failures) = (0..trials)
        .into_par_iter()
        .map(|t| match designated_trial(config, rng, t) {
            None => (0u64, 0u64),
            Some(failed) => (1, failed as u64),
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(TrialCounts { trials, conditioned, failures })
}

/// Below this many failures (or successes) the interval is exact rather
/// than normal.
pub const EXACT_INTERVAL_BELOW: u64 = 50;
/// Number of standard deviations in the normal interval.
pub const CI_SIGMAS: f64 = 3.0;

/// `ln Pr{Binom(n, p) ≤ x}` summed term by term; meant for small `x`.
fn ln_binomial_cdf(x: u64, n: u64, p: f64) -> f64 {
    let terms: Vec<f64> = (0..=x).map(|k| ln_binomial_pmf(k, n, p, 1.0 - p)).collect();
    ln_sum_exp(&terms)
}

/// Clopper–Pearson bounds for `x` events in `n` trials with small `x`.
fn clopper_pearson_small(x: u64, n: u64, tail: f64) -> (f64, f64) {
    let ln_tail = tail.ln();
    let bisect = |mut lo: f64, mut hi: f64, above: &dyn Fn(f64) -> bool| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if above(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let p_hat = x as f64 / n as f64;
    // upper: Pr{X ≤ x; u} = tail, decreasing in u
    let upper = if x == n { 1.0 } else { bisect(p_hat, 1.0, &|u| ln_binomial_cdf(x, n, u) > ln_tail) };
    // lower: Pr{X ≥ x; l} = tail, i.e. Pr{X ≤ x−1; l} = 1 − tail
    let lower = if x == 0 {
        0.0
    } else {
        let target = (-tail).ln_1p();
        bisect(0.0, p_hat, &|l| ln_binomial_cdf(x - 1, n, l) > target)
    };
    (lower, upper)
}

/// Half-width of the 99.7% interval around `failures / n`.
pub fn ci_halfwidth(failures: u64, n: u64) -> f64 {
    let p = failures as f64 / n as f64;
    let successes = n - failures;
    if failures.min(successes) >= EXACT_INTERVAL_BELOW {
        return CI_SIGMAS * (p * (1.0 - p) / n as f64).sqrt();
    }
    let tail = q_func(CI_SIGMAS);
    let (lo, hi) = if failures <= successes {
        clopper_pearson_small(failures, n, tail)
    } else {
        let (l, h) = clopper_pearson_small(successes, n, tail);
        (1.0 - h, 1.0 - l)
    };
    (p - lo).max(hi - p)
}

/// Fraction of trials in which the designated user, given that it
/// transmits, fails the rate test.
pub fn empirical_pep(config: &SystemConfig, trials: u64, rng: &RngSpec) -> Result<PepResult> {
    let counts = count_failures(config, trials, rng)?;
    if counts.conditioned == 0 {
        return Err(Error::InsufficientSamples { trials, conditioned: 0 });
    }
    let p = counts.failures as f64 / counts.conditioned as f64;
    Ok(PepResult::monte_carlo(p, ci_halfwidth(counts.failures, counts.conditioned)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u64, m: u64, tau: f64, rho: f64, noise: f64) -> SystemConfig {
        SystemConfig { n_users: n, n_antennas: m, attempt_prob: tau, tx_power: 1.0, noise_var: noise, spectral_eff: rho }
    }

    #[test]
    fn channel_statistics() {
        let spec = RngSpec::new(11, 0);
        let draws = sample_channels(&spec, 100_000, 8);
        let mean: f64 = (0..100_000).map(|i| norm_sqr(draws.vector(i))).sum::<f64>() / 1e5;
        assert!((mean - 8.0).abs() < 0.1);
        let re_var: f64 = draws.entries.iter().map(|z| z.re * z.re).sum::<f64>() / draws.entries.len() as f64;
        let im_mean: f64 = draws.entries.iter().map(|z| z.im).sum::<f64>() / draws.entries.len() as f64;
        assert!((re_var - 0.5).abs() < 0.005);
        assert!(im_mean.abs() < 0.005);
        // |h̃_iᴴ h_j|² with unit-norm h̃_i is CN(0,1)-squared
        let cross: f64 = (0..50_000)
            .map(|p| {
                let (a, b) = (draws.vector(2 * p), draws.vector(2 * p + 1));
                inner_sqr(a, b) / norm_sqr(a)
            })
            .sum::<f64>()
            / 5e4;
        assert!((cross - 1.0).abs() < 0.05);
        assert_eq!(sample_channels(&spec, 3, 4), sample_channels(&spec, 3, 4));
    }

    #[test]
    fn sinr_cases() {
        let spec = RngSpec::new(5, 1);
        let ch = sample_channels(&spec, 2, 4);
        let alone = slot_sinr(&ch, &[true, false], 2.0, 0.5);
        let g = norm_sqr(ch.vector(0));
        assert_eq!(alone[0], Some(Sinr::Finite(g * g * 2.0 / (g * 0.5))));
        assert_eq!(alone[1], None);
        assert_eq!(slot_sinr(&ch, &[true, false], 1.0, 0.0)[0], Some(Sinr::Unbounded));

        let both = slot_sinr(&ch, &[true, true], 1.0, 0.1);
        let scaled = slot_sinr(&ch, &[true, true], 7.0, 0.7);
        for (a, b) in both.iter().zip(&scaled) {
            let (Some(Sinr::Finite(a)), Some(Sinr::Finite(b))) = (a, b) else { panic!() };
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn sinr_hand_computed() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let ch = ChannelRealization::from_vectors(vec![
            vec![c(1.0, 0.0), c(0.0, 1.0), c(0.5, -0.5), c(-1.0, 0.0)],
            vec![c(0.0, 1.0), c(1.0, 1.0), c(0.0, 0.0), c(2.0, 0.0)],
        ])
        .unwrap();
        // ‖h0‖² = 3.5, h0ᴴh1 = i + (1 − i) + 0 − 2 = −1, |·|² = 1
        let s = slot_sinr(&ch, &[true, true], 1.0, 0.1);
        let close = |got: Option<Sinr>, want: f64| match got {
            Some(Sinr::Finite(v)) => (v - want).abs() < 1e-14 * want,
            _ => false,
        };
        assert!(close(s[0], 3.5 * 3.5 / (3.5 * 0.1 + 1.0)));
        // ‖h1‖² = 7
        assert!(close(s[1], 49.0 / (0.7 + 1.0)));
    }

    #[test]
    fn slot_outcome_consistency() {
        let c = cfg(12, 6, 0.6, 1.0, 0.1);
        let spec = RngSpec::new(3, 3);
        for slot in 0..200 {
            let o = simulate_slot(&c, &spec, slot);
            for i in 0..12 {
                assert!(!o.decoded_mask[i] || o.active_mask[i]);
                assert_eq!(o.sinr[i].is_some(), o.active_mask[i]);
                assert_eq!(o.decoded_mask[i], o.sinr[i].is_some_and(|s| s.supports(1.0)));
            }
        }
    }

    #[test]
    fn ties_count_as_failures() {
        assert!(!Sinr::Finite(1.0).supports(1.0));
        assert!(Sinr::Finite(1.0 + 1e-12).supports(1.0));
    }

    #[test]
    fn degenerate_error_rates() {
        let spec = RngSpec::new(9, 0);
        let r = empirical_pep(&cfg(1, 4, 0.5, 1.0, 0.0), 10_000, &spec).unwrap();
        assert_eq!(r.p_e, 0.0);
        let r = empirical_pep(&cfg(4, 4, 0.5, 60.0, 0.1), 10_000, &spec).unwrap();
        assert_eq!(r.p_e, 1.0);
        assert!(r.ci_halfwidth.unwrap() > 0.0);
        let err = empirical_pep(&cfg(4, 4, 1e-12, 1.0, 0.1), 100, &spec);
        assert_eq!(err, Err(Error::InsufficientSamples { trials: 100, conditioned: 0 }));
    }

    #[test]
    fn exact_interval_brackets() {
        // zero events: upper bound solves (1 − u)^n = tail
        let n = 1_000_000;
        let hw = ci_halfwidth(0, n);
        let want = 1.0 - q_func(3.0).powf(1.0 / n as f64);
        assert!((hw - want).abs() < 1e-12 * want);
        // mirrored for all successes
        assert!((ci_halfwidth(n, n) - hw).abs() < 1e-12 * hw);
        // between the exact and normal regimes the two agree roughly
        let exact = ci_halfwidth(49, 10_000);
        let normal = 3.0 * (0.0049f64 * 0.9951 / 1e4).sqrt();
        assert!((exact / normal - 1.0).abs() < 0.3);
    }

    #[test]
    fn deterministic_across_pool_sizes() {
        let c = cfg(8, 8, 0.5, 1.0, 0.1);
        let spec = RngSpec::new(2024, 0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| count_failures(&c, 20_000, &spec).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn agrees_with_exact_on_small_point() {
        let c = cfg(8, 8, 0.5, 1.0, 0.1);
        let exact = crate::analytic_pep::exact_pep(&c).unwrap().p_e;
        let mc = empirical_pep(&c, 200_000, &RngSpec::new(77, 0)).unwrap();
        assert!((mc.p_e - exact).abs() <= mc.ci_halfwidth.unwrap());
    }
}
