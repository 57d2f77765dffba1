//! Parameter sweeps, figure curves and cross-method validation, emitted as
//! CSV tables (and SVG plots of them).

mod csv;
mod svg;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analytic_pep::{binomial_log_weights, exact_pep, Method, PepResult};
use crate::asymptotic::{
    aoi_at_fixed_error, aoi_from_pep, asymptotic_aoi, asymptotic_pep, rho_min, supremum_rho, Population,
};
use crate::error::{Error, Result};
use crate::monte_carlo::{empirical_pep, RngSpec};
use crate::special::compensated_sum;
use crate::system_model::SystemConfig;

pub use csv::{format_number, format_optional, parse_cell, quantize, Table, SENTINEL};
pub use svg::{emit_svg, render, series_from_table, Series, SvgStyle};

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Rho,
    Tau,
    N,
    Zeta,
    Snr,
}

impl Axis {
    /// CSV column name.
    pub fn column(self) -> &'static str {
        match self {
            Axis::Rho => "rho",
            Axis::Tau => "tau",
            Axis::N => "n_users",
            Axis::Zeta => "zeta",
            Axis::Snr => "snr_db",
        }
    }

    /// `config` with the swept parameter set to `value`. Sweeping `N` keeps
    /// `ζ` fixed and sweeping `ζ` keeps `N` fixed, with `M = round(ζN)`.
    pub fn apply(self, config: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut c = *config;
        match self {
            Axis::Rho => c.spectral_eff = value,
            Axis::Tau => c.attempt_prob = value,
            Axis::N => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Invalid(format!("n_users grid value {value} is not a positive integer")));
                }
                let zeta = config.n_antennas as f64 / config.n_users as f64;
                c.n_users = value as u64;
                c.n_antennas = ((zeta * value).round() as u64).max(1);
            }
            Axis::Zeta => {
                if value.is_nan() || value <= 0.0 {
                    return Err(Error::Invalid(format!("zeta grid value {value} is not positive")));
                }
                c.n_antennas = ((value * c.n_users as f64).round() as u64).max(1);
            }
            Axis::Snr => c = c.with_snr_db(value),
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Rho => "rho",
            Axis::Tau => "tau",
            Axis::N => "n",
            Axis::Zeta => "zeta",
            Axis::Snr => "snr",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" => Ok(Axis::Rho),
            "tau" => Ok(Axis::Tau),
            "n" | "N" | "n_users" => Ok(Axis::N),
            "zeta" => Ok(Axis::Zeta),
            "snr" | "snr_db" => Ok(Axis::Snr),
            other => Err(Error::Invalid(format!("unknown axis {other:?} (expected rho, tau, n, zeta or snr)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub fixed: SystemConfig,
    pub methods: Vec<Method>,
    pub mc_trials: u64,
    pub rng: RngSpec,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Invalid("grid must not be empty".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("grid values must be finite".into()));
        }
        let up = self.grid.windows(2).all(|w| w[1] > w[0]);
        let down = self.grid.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Invalid("grid must be strictly monotone".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Invalid("at least one method is required".into()));
        }
        if self.methods.contains(&Method::MonteCarlo) && self.mc_trials == 0 {
            return Err(Error::Invalid("monte carlo needs at least one trial".into()));
        }
        self.fixed.validate()?;
        Ok(())
    }
}

/// Values of one method at one grid point; `None` marks a failed point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MethodValues {
    pub p_e: Option<f64>,
    pub delta: Option<f64>,
    pub ci_halfwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub axis_value: f64,
    pub values: Vec<(Method, MethodValues)>,
}

fn method_columns(method: Method) -> Vec<String> {
    let m = method.as_str();
    let mut cols = vec![format!("p_e_{m}"), format!("delta_{m}")];
    if method == Method::MonteCarlo {
        cols.push(format!("ci_halfwidth_{m}"));
    }
    cols
}

/// Header of a `pep` table.
pub fn curve_header(axis: Axis, methods: &[Method]) -> Vec<String> {
    let mut h = vec![axis.column().to_string()];
    for &m in methods {
        h.extend(method_columns(m));
    }
    h
}

pub fn curve_table(axis: Axis, methods: &[Method], rows: &[CurveRow]) -> Table {
    let mut t = Table::new(curve_header(axis, methods));
    for row in rows {
        let mut cells = vec![format_number(row.axis_value)];
        for (m, v) in &row.values {
            cells.push(format_optional(v.p_e));
            cells.push(format_optional(v.delta));
            if *m == Method::MonteCarlo {
                cells.push(format_optional(v.ci_halfwidth));
            }
        }
        t.push(cells);
    }
    t
}

/// Inverse of [`curve_table`].
pub fn parse_curve_table(table: &Table) -> Result<(Axis, Vec<Method>, Vec<CurveRow>)> {
    let first = table.header.first().ok_or_else(|| Error::Invalid("empty header".into()))?;
    let axis = [Axis::Rho, Axis::Tau, Axis::N, Axis::Zeta, Axis::Snr]
        .into_iter()
        .find(|a| a.column() == first)
        .ok_or_else(|| Error::Invalid(format!("unknown axis column {first:?}")))?;
    let mut methods = Vec::new();
    for h in &table.header[1..] {
        if let Some(m) = h.strip_prefix("p_e_") {
            methods.push(m.parse::<Method>()?);
        }
    }
    if curve_header(axis, &methods) != table.header {
        return Err(Error::Invalid("header is not a pep curve header".into()));
    }
    let mut rows = Vec::new();
    for r in &table.rows {
        let axis_value = parse_cell(&r[0])?.ok_or_else(|| Error::Invalid("axis value is NA".into()))?;
        let mut i = 1;
        let mut values = Vec::new();
        for &m in &methods {
            let mut v = MethodValues { p_e: parse_cell(&r[i])?, delta: parse_cell(&r[i + 1])?, ci_halfwidth: None };
            i += 2;
            if m == Method::MonteCarlo {
                v.ci_halfwidth = parse_cell(&r[i])?;
                i += 1;
            }
            values.push((m, v));
        }
        rows.push(CurveRow { axis_value, values });
    }
    Ok((axis, methods, rows))
}

fn evaluate(method: Method, config: &SystemConfig, trials: u64, rng: &RngSpec) -> Result<MethodValues> {
    let tau = config.attempt_prob;
    let (r, delta): (PepResult, f64) = match method {
        Method::Exact => {
            let r = exact_pep(config)?;
            (r, aoi_from_pep(tau, r.p_e).value())
        }
        Method::Asymptotic => (asymptotic_pep(config)?, asymptotic_aoi(config)?.delta.value()),
        Method::MonteCarlo => {
            let r = empirical_pep(config, trials, rng)?;
            (r, aoi_from_pep(tau, r.p_e).value())
        }
    };
    Ok(MethodValues { p_e: Some(quantize(r.p_e)), delta: Some(quantize(delta)), ci_halfwidth: r.ci_halfwidth.map(quantize) })
}

/// Error probability and AoI per method along the grid. Points where a
/// method fails are reported as `NA`.
pub fn sweep_rows(spec: &SweepSpec) -> Result<Vec<CurveRow>> {
    spec.validate()?;
    Ok(spec
        .grid
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let config = spec.axis.apply(&spec.fixed, x);
            let values = spec
                .methods
                .iter()
                .enumerate()
                .map(|(j, &m)| {
                    let rng = spec.rng.child(i as u64 * 8 + j as u64);
                    let v = config.as_ref().ok().and_then(|c| evaluate(m, c, spec.mc_trials, &rng).ok());
                    (m, v.unwrap_or_default())
                })
                .collect();
            CurveRow { axis_value: quantize(x), values }
        })
        .collect())
}

pub fn cmd_pep(spec: &SweepSpec) -> Result<Table> {
    Ok(curve_table(spec.axis, &spec.methods, &sweep_rows(spec)?))
}

/// Default number of points per fixed-error curve.
pub const CURVE_POINTS: usize = 200;
/// Default width of each curve in bits/channel-use above its left endpoint.
pub const CURVE_SPAN: f64 = 3.0;

fn curve_floor(eps: f64, zeta: f64, pop: Population) -> Result<f64> {
    match pop {
        Population::Finite(n) => rho_min(eps, n, zeta),
        Population::Infinite => Ok((1.0 + zeta).log2()),
    }
}

/// Fixed-error trade-off curves `(ρ, τ_ε, Δ)`, one per user population.
///
/// Without an explicit `rho_grid` each curve gets [`CURVE_POINTS`] uniform
/// points from its own minimum spectral efficiency to [`CURVE_SPAN`] above it.
/// Points below the minimum, and whole curves with no valid solution, are
/// emitted as `NA`.
pub fn cmd_aoi_curve(eps: f64, zeta: f64, populations: &[Population], rho_grid: Option<&[f64]>) -> Result<Table> {
    // reject a bad ε or ζ up front rather than filling the table with NA
    aoi_at_fixed_error(eps, 1.0, zeta, Population::Infinite)?;
    if populations.is_empty() {
        return Err(Error::Invalid("at least one user count is required".into()));
    }
    let mut t = Table::new(["n_users", "rho", "tau_eps", "delta"]);
    for &pop in populations {
        let grid: Vec<f64> = match rho_grid {
            Some(g) => g.to_vec(),
            None => match curve_floor(eps, zeta, pop) {
                Ok(lo) => (0..CURVE_POINTS)
                    .map(|i| lo + CURVE_SPAN * i as f64 / (CURVE_POINTS - 1) as f64)
                    .collect(),
                Err(_) => {
                    t.push(vec![pop.to_string(), SENTINEL.into(), SENTINEL.into(), SENTINEL.into()]);
                    continue;
                }
            },
        };
        for rho in grid {
            let cells = match aoi_at_fixed_error(eps, rho, zeta, pop) {
                Ok(p) => vec![format_number(p.tau_eps), format_number(p.delta)],
                Err(_) => vec![SENTINEL.into(), SENTINEL.into()],
            };
            t.push([vec![pop.to_string(), format_number(rho)], cells].concat());
        }
    }
    Ok(t)
}

/// Age-limited capacity and, when `(ε, N)` are given, the finite-N supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityReport {
    pub tau: f64,
    pub zeta: f64,
    pub capacity: f64,
    pub eps: Option<f64>,
    pub n_users: Option<u64>,
    pub supremum_rho: Option<f64>,
    pub gap: Option<f64>,
}

impl CapacityReport {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["tau", "zeta", "capacity", "eps", "n_users", "supremum_rho", "gap"]);
        t.push(vec![
            format_number(self.tau),
            format_number(self.zeta),
            format_number(self.capacity),
            format_optional(self.eps),
            self.n_users.map_or_else(|| SENTINEL.to_string(), |n| n.to_string()),
            format_optional(self.supremum_rho),
            format_optional(self.gap),
        ]);
        t
    }
}

pub fn cmd_capacity(tau: f64, zeta: f64, eps: Option<f64>, n_users: Option<u64>) -> Result<CapacityReport> {
    let capacity = crate::asymptotic::age_limited_capacity(tau, zeta)?;
    let mut report = CapacityReport { tau, zeta, capacity, eps, n_users, supremum_rho: None, gap: None };
    match (eps, n_users) {
        (Some(e), Some(n)) => {
            let s = supremum_rho(e, n, zeta, tau)?;
            report.supremum_rho = Some(s);
            report.gap = Some(capacity - s);
        }
        (None, None) => {}
        _ => return Err(Error::Invalid("eps and n_users must be given together".into())),
    }
    Ok(report)
}

/// Capacity bound points `log2(1 + M/K_a)`.
pub fn cmd_ura_points(antennas: &[u64], active: &[u64]) -> Result<Table> {
    if antennas.len() != active.len() {
        return Err(Error::Invalid(format!(
            "antenna and active-user lists differ in length ({} vs {})",
            antennas.len(),
            active.len()
        )));
    }
    let mut t = Table::new(["n_antennas", "n_active", "bound"]);
    for (&m, &k) in antennas.iter().zip(active) {
        if m == 0 || k == 0 {
            return Err(Error::Invalid("antenna and active-user counts must be positive".into()));
        }
        let bound = (m as f64 / k as f64).ln_1p() / std::f64::consts::LN_2;
        t.push(vec![m.to_string(), k.to_string(), format_number(bound)]);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    /// `tolerance − value`; negative when the check fails.
    pub margin: f64,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Check {
        Check { name, passed: value <= tolerance, value, tolerance, margin: tolerance - value }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["check", "status", "value", "tolerance", "margin"]);
        for c in &self.checks {
            t.push(vec![
                c.name.to_string(),
                if c.passed { "pass" } else { "fail" }.to_string(),
                format_number(c.value),
                format_number(c.tolerance),
                format_number(c.margin),
            ]);
        }
        t
    }
}

/// Largest allowed growth of `e(N)·√N` from `N` to `4N`.
pub const CONVERGENCE_FACTOR: f64 = 3.0;

/// Runs the cross-method checks at one operating point. Every tolerance is
/// multiplied by `tolerance_scale` (1 for normal use).
pub fn cmd_validate(config: &SystemConfig, trials: u64, rng: &RngSpec, tolerance_scale: f64) -> Result<ValidationReport> {
    config.validate()?;
    let mut checks = Vec::new();

    let exact = exact_pep(config)?;
    let mc = empirical_pep(config, trials, rng)?;
    let hw = mc.ci_halfwidth.expect("monte carlo interval");
    checks.push(Check::at_most("exact_vs_monte_carlo", (exact.p_e - mc.p_e).abs(), hw * tolerance_scale));

    let weights = binomial_log_weights(config.n_users - 1, config.attempt_prob)?;
    let total = compensated_sum(weights.iter().map(|w| w.exp()));
    checks.push(Check::at_most("binomial_normalization", (total - 1.0).abs(), 1e-12 * tolerance_scale));

    let asym = asymptotic_pep(config)?.p_e;
    let aoi = asymptotic_aoi(config)?.delta.value();
    let via_pep = 1.0 / (config.attempt_prob * (1.0 - asym));
    checks.push(Check::at_most("asymptotic_aoi_identity", ((aoi - via_pep) / via_pep).abs(), 1e-12 * tolerance_scale));

    let scaled_gap = |n: u64| -> Result<f64> {
        let c = Axis::N.apply(config, n as f64)?;
        let e = (exact_pep(&c)?.p_e - asymptotic_pep(&c)?.p_e).abs();
        Ok(e * (n as f64).sqrt())
    };
    let (g1, g4) = (scaled_gap(config.n_users)?, scaled_gap(4 * config.n_users)?);
    let ratio = if g1 > 0.0 {
        g4 / g1
    } else if g4 == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    checks.push(Check::at_most("asymptotic_convergence_order", ratio, CONVERGENCE_FACTOR * tolerance_scale));

    Ok(ValidationReport { checks })
}
