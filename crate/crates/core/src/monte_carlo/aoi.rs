use rand::Rng;
use rayon::prelude::*;

use super::{simulate_slot, RngSpec};
use crate::asymptotic::{Age, AoiEstimate, AoiSource};
use crate::error::{ensure_finite, Error, Result};
use crate::system_model::SystemConfig;

/// How per-slot success is decided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AoiMode {
    /// Fresh activity and channels every slot, decoded by the SINR test.
    Physical,
    /// Success with the given probability, independently per slot.
    Geometric(f64),
}

/// Integer area under the age staircase, split as in the renewal argument:
/// a unit-height rectangle and a triangle for each inter-update gap, plus
/// the two partial gaps at the ends of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AgeArea {
    pub base: u128,
    pub triangles: u128,
    pub boundary: u128,
}

impl AgeArea {
    pub fn total(&self) -> u128 {
        self.base + self.triangles + self.boundary
    }
}

fn staircase(z: u128) -> u128 {
    z * (z + 1) / 2
}

/// Area from the ascending success slots (1-based) within `1..=horizon`.
/// An update at slot 0 is assumed.
pub fn area_decomposition(success_slots: &[u64], horizon: u64) -> AgeArea {
    let mut area = AgeArea::default();
    let Some((&first, _)) = success_slots.split_first() else {
        area.boundary = staircase(horizon as u128);
        return area;
    };
    area.boundary += staircase(first as u128);
    for pair in success_slots.windows(2) {
        let z = (pair[1] - pair[0]) as u128;
        area.base += z;
        area.triangles += z * (z - 1) / 2;
    }
    let last = *success_slots.last().expect("non-empty");
    area.boundary += staircase((horizon - last) as u128);
    area
}

/// Slot-by-slot sum of the age: 1 after an update, +1 per slot otherwise.
pub fn direct_age_sum(success: &[bool]) -> u128 {
    let mut age: u128 = 1;
    let mut sum: u128 = 0;
    for &s in success {
        sum += age;
        age = if s { 1 } else { age + 1 };
    }
    sum
}

/// Slots in `1..=horizon` where a `Bernoulli(gamma)` update succeeds.
pub fn geometric_success_slots(gamma: f64, horizon: u64, rng: &RngSpec, user: u64) -> Vec<u64> {
    let mut r = rng.stream(user);
    (1..=horizon).filter(|_| r.random::<f64>() < gamma).collect()
}

/// Time-average age of every user over `horizon` slots.
pub fn simulate_aoi(config: &SystemConfig, horizon: u64, rng: &RngSpec, mode: AoiMode) -> Result<AoiEstimate> {
    config.validate()?;
    if horizon == 0 {
        return Err(Error::Domain { name: "horizon_slots", value: 0.0, range: "[1, ∞)" });
    }
    let n = config.n_users as usize;
    let slots: Vec<Vec<u64>> = match mode {
        AoiMode::Geometric(gamma) => {
            ensure_finite("gamma", gamma)?;
            if gamma <= 0.0 || gamma > 1.0 {
                return Err(Error::Domain { name: "gamma", value: gamma, range: "(0, 1]" });
            }
            let spec = rng.child(1);
            (0..n as u64)
                .into_par_iter()
                .map(|u| geometric_success_slots(gamma, horizon, &spec, u))
                .collect()
        }
        AoiMode::Physical => {
            let spec = rng.child(2);
            let decoded: Vec<Vec<u32>> = (1..=horizon)
                .into_par_iter()
                .map(|s| {
                    let o = simulate_slot(config, &spec, s);
                    o.decoded_mask.iter().enumerate().filter(|(_, d)| **d).map(|(i, _)| i as u32).collect()
                })
                .collect();
            let mut per_user = vec![Vec::new(); n];
            for (s, users) in (1..=horizon).zip(&decoded) {
                for &u in users {
                    per_user[u as usize].push(s);
                }
            }
            per_user
        }
    };
    let per_user: Vec<f64> =
        slots.iter().map(|s| area_decomposition(s, horizon).total() as f64 / horizon as f64).collect();
    let mean = per_user.iter().sum::<f64>() / n as f64;
    Ok(AoiEstimate { delta: Age::Finite(mean), per_user: Some(per_user), source: AoiSource::Simulated })
}

/// Arithmetic mean of the per-user ages.
pub fn empirical_network_aoi(estimate: &AoiEstimate) -> Result<f64> {
    match &estimate.per_user {
        Some(v) if !v.is_empty() => Ok(v.iter().sum::<f64>() / v.len() as f64),
        _ => Err(Error::Invalid("per-user ages are required".into())),
    }
}
