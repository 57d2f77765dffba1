//! Parameter space of the symmetric slotted random-access system and the
//! derived quantities every analysis consumes.
//!
//! Slot length is normalized to one, so ages are counted in slots. Only the
//! ratio `noise_var / tx_power` enters the analysis; both are nominally in
//! watts.

use std::fmt;
use std::str::FromStr;

use crate::error::{ConfigError, Error, Result};

/// One operating point: `N` single-antenna users, an `M`-antenna receiver,
/// per-slot attempt probability `τ`, transmit power `P`, noise variance
/// `σ²` and per-user spectral efficiency `ρ` in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub n_users: u64,
    pub n_antennas: u64,
    pub attempt_prob: f64,
    pub tx_power: f64,
    pub noise_var: f64,
    pub spectral_eff: f64,
}

/// Reciprocal SINR threshold `1/(2^ρ − 1)`.
///
/// `ρ = 0` makes the threshold zero, so the reciprocal is unbounded. That case
/// is carried as [`Alpha::Unbounded`] instead of an IEEE infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Finite(f64),
    Unbounded,
}

impl Alpha {
    pub fn from_spectral_eff(rho: f64) -> Alpha {
        if rho == 0.0 {
            Alpha::Unbounded
        } else {
            // expm1 keeps precision for small ρ; exp2 is exact at integers.
            let threshold = if rho < 1.0 {
                (rho * std::f64::consts::LN_2).exp_m1()
            } else {
                rho.exp2() - 1.0
            };
            Alpha::Finite(1.0 / threshold)
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Alpha::Finite(a) => Some(a),
            Alpha::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Alpha::Unbounded)
    }
}

/// `ζ = M/N`, `α_ρ` and the inverse SNR `β = σ²/P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub zeta: f64,
    pub alpha_rho: Alpha,
    pub beta: f64,
}

impl SystemConfig {
    /// Returns the first violated invariant, checked in field order.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_users < 1 {
            return Err(ConfigError::NUsers);
        }
        if self.n_antennas < 1 {
            return Err(ConfigError::NAntennas);
        }
        // NaN fails every comparison and lands in the error arms.
        if !(self.attempt_prob > 0.0 && self.attempt_prob <= 1.0) {
            return Err(ConfigError::AttemptProb);
        }
        if !(self.tx_power > 0.0 && self.tx_power.is_finite()) {
            return Err(ConfigError::TxPower);
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(ConfigError::NoiseVar);
        }
        if !(self.spectral_eff >= 0.0 && self.spectral_eff.is_finite()) {
            return Err(ConfigError::SpectralEff);
        }
        Ok(())
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        self.validate()?;
        Ok(DerivedParams {
            zeta: self.n_antennas as f64 / self.n_users as f64,
            alpha_rho: Alpha::from_spectral_eff(self.spectral_eff),
            beta: self.noise_var / self.tx_power,
        })
    }

    /// Sets `noise_var` so that `P/σ²` equals `snr_db`.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.noise_var = self.tx_power * 10f64.powf(-snr_db / 10.0);
        self
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.tx_power / self.noise_var).log10()
    }
}

/// Free-function form of [`SystemConfig::validate`].
pub fn validate(config: &SystemConfig) -> Result<(), ConfigError> {
    config.validate()
}

/// Free-function form of [`SystemConfig::derive`].
pub fn derive(config: &SystemConfig) -> Result<DerivedParams> {
    config.derive()
}

pub const CONFIG_KEYS: [&str; 6] = [
    "n_users",
    "n_antennas",
    "attempt_prob",
    "tx_power",
    "noise_var",
    "spectral_eff",
];

/// Partially specified config, as read from a key=value file before command
/// line overrides are applied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDraft {
    pub n_users: Option<u64>,
    pub n_antennas: Option<u64>,
    pub attempt_prob: Option<f64>,
    pub tx_power: Option<f64>,
    pub noise_var: Option<f64>,
    pub spectral_eff: Option<f64>,
}

impl ConfigDraft {
    /// Parses flat `key = value` text. Blank lines and `#` comments are
    /// ignored; unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<ConfigDraft> {
        let mut draft = ConfigDraft::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected key=value, got {line:?}"),
            })?;
            draft.set(key.trim(), value.trim()).map_err(|message| Error::Parse {
                line: line_no,
                message,
            })?;
        }
        Ok(draft)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value {value:?} for {key}"))
        }
        fn put<T>(slot: &mut Option<T>, key: &str, v: T) -> std::result::Result<(), String> {
            if slot.is_some() {
                return Err(format!("duplicate key {key}"));
            }
            *slot = Some(v);
            Ok(())
        }
        match key {
            "n_users" => put(&mut self.n_users, key, num(key, value)?),
            "n_antennas" => put(&mut self.n_antennas, key, num(key, value)?),
            "attempt_prob" => put(&mut self.attempt_prob, key, num(key, value)?),
            "tx_power" => put(&mut self.tx_power, key, num(key, value)?),
            "noise_var" => put(&mut self.noise_var, key, num(key, value)?),
            "spectral_eff" => put(&mut self.spectral_eff, key, num(key, value)?),
            _ => Err(format!("unknown key {key:?}")),
        }
    }

    /// Fields of `other` that are set take precedence.
    pub fn overridden_by(self, other: &ConfigDraft) -> ConfigDraft {
        ConfigDraft {
            n_users: other.n_users.or(self.n_users),
            n_antennas: other.n_antennas.or(self.n_antennas),
            attempt_prob: other.attempt_prob.or(self.attempt_prob),
            tx_power: other.tx_power.or(self.tx_power),
            noise_var: other.noise_var.or(self.noise_var),
            spectral_eff: other.spectral_eff.or(self.spectral_eff),
        }
    }

    pub fn build(&self) -> Result<SystemConfig> {
        fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
            v.ok_or_else(|| Error::Invalid(format!("missing config value {key}")))
        }
        let config = SystemConfig {
            n_users: need(self.n_users, "n_users")?,
            n_antennas: need(self.n_antennas, "n_antennas")?,
            attempt_prob: need(self.attempt_prob, "attempt_prob")?,
            tx_power: need(self.tx_power, "tx_power")?,
            noise_var: need(self.noise_var, "noise_var")?,
            spectral_eff: need(self.spectral_eff, "spectral_eff")?,
        };
        config.validate()?;
        Ok(config)
    }
}

impl FromStr for SystemConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConfigDraft::parse(s)?.build()
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n_users={}", self.n_users)?;
        writeln!(f, "n_antennas={}", self.n_antennas)?;
        writeln!(f, "attempt_prob={}", self.attempt_prob)?;
        writeln!(f, "tx_power={}", self.tx_power)?;
        writeln!(f, "noise_var={}", self.noise_var)?;
        writeln!(f, "spectral_eff={}", self.spectral_eff)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SystemConfig {
        SystemConfig {
            n_users: 10,
            n_antennas: 7,
            attempt_prob: 0.5,
            tx_power: 1.0,
            noise_var: 0.1,
            spectral_eff: 1.0,
        }
    }

    #[test]
    fn valid_config_passes() {
        assert_eq!(base().validate(), Ok(()));
    }

    #[test]
    fn each_field_has_its_own_error() {
        let cases = [
            (SystemConfig { n_users: 0, ..base() }, ConfigError::NUsers),
            (SystemConfig { n_antennas: 0, ..base() }, ConfigError::NAntennas),
            (SystemConfig { attempt_prob: 0.0, ..base() }, ConfigError::AttemptProb),
            (SystemConfig { attempt_prob: 1.5, ..base() }, ConfigError::AttemptProb),
            (SystemConfig { attempt_prob: f64::NAN, ..base() }, ConfigError::AttemptProb),
            (SystemConfig { tx_power: 0.0, ..base() }, ConfigError::TxPower),
            (SystemConfig { noise_var: -1e-3, ..base() }, ConfigError::NoiseVar),
            (SystemConfig { spectral_eff: -1.0, ..base() }, ConfigError::SpectralEff),
        ];
        for (cfg, expected) in cases {
            assert_eq!(cfg.validate(), Err(expected.clone()));
        }
        assert_eq!(
            ConfigError::AttemptProb.to_string(),
            "attempt_prob must be in (0,1]"
        );
        assert_eq!(ConfigError::NAntennas.to_string(), "n_antennas must be ≥ 1");
        assert_eq!(ConfigError::NoiseVar.field(), "noise_var");
    }

    #[test]
    fn boundary_values_are_legal() {
        let full = SystemConfig { attempt_prob: 1.0, noise_var: 0.0, spectral_eff: 0.0, ..base() };
        assert!(full.validate().is_ok());
        let d = full.derive().unwrap();
        assert_eq!(d.beta, 0.0);
        assert!(d.alpha_rho.is_unbounded());
    }

    #[test]
    fn derive_examples() {
        let d = base().derive().unwrap();
        assert_eq!(d.zeta, 0.7);
        assert_eq!(d.alpha_rho, Alpha::Finite(1.0));
        assert_eq!(d.beta, 0.1);

        let rho2 = SystemConfig { spectral_eff: 2.0, ..base() }.derive().unwrap();
        assert!((rho2.alpha_rho.finite().unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let big = SystemConfig { n_users: 100, n_antennas: 70, ..base() }.derive().unwrap();
        assert_eq!(big.zeta, 0.7);
    }

    #[test]
    fn alpha_strictly_decreasing_on_grid() {
        let mut prev = f64::INFINITY;
        for i in 1..=400 {
            let a = Alpha::from_spectral_eff(i as f64 * 0.025).finite().unwrap();
            assert!(a < prev);
            prev = a;
        }
    }

    #[test]
    fn parse_config_file() {
        let text = "# operating point\nn_users = 10\nn_antennas=7\nattempt_prob=0.5\n\ntx_power=1\nnoise_var=0.1 # 10 dB\nspectral_eff=1\n";
        let cfg: SystemConfig = text.parse().unwrap();
        assert_eq!(cfg, base());
        let round: SystemConfig = cfg.to_string().parse().unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn parse_rejects_unknown_and_duplicate_keys() {
        let err = ConfigDraft::parse("n_users=3\nbandwidth=10\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = ConfigDraft::parse("n_users=3\nn_users=4\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        let err = ConfigDraft::parse("n_users 3\n").unwrap_err();
        assert!(err.to_string().contains("key=value"));
    }

    #[test]
    fn flags_override_file() {
        let file = ConfigDraft::parse(&base().to_string()).unwrap();
        let flags = ConfigDraft { n_antennas: Some(9), ..Default::default() };
        let cfg = file.overridden_by(&flags).build().unwrap();
        assert_eq!(cfg.n_antennas, 9);
        assert_eq!(cfg.n_users, 10);
    }

    #[test]
    fn snr_helper() {
        let cfg = base().with_snr_db(10.0);
        assert!((cfg.noise_var - 0.1).abs() < 1e-15);
        assert!((cfg.snr_db() - 10.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn zeta_scale_invariant(n in 1u64..500, m in 1u64..500, k in 1u64..50) {
                let a = SystemConfig { n_users: n, n_antennas: m, ..base() }.derive().unwrap();
                let b = SystemConfig { n_users: k * n, n_antennas: k * m, ..base() }.derive().unwrap();
                prop_assert_eq!(a.zeta, b.zeta);
            }

            #[test]
            fn derive_is_pure(rho in 0.0f64..10.0, p in 1e-3f64..10.0, s in 0.0f64..10.0) {
                let cfg = SystemConfig { spectral_eff: rho, tx_power: p, noise_var: s, ..base() };
                let a = cfg.derive().unwrap();
                let b = cfg.derive().unwrap();
                prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
            }
        }
    }
}
