use thiserror::Error;

/// Violated [`SystemConfig`](crate::SystemConfig) invariant, one variant per field.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("n_users must be ≥ 1")]
    NUsers,
    #[error("n_antennas must be ≥ 1")]
    NAntennas,
    #[error("attempt_prob must be in (0,1]")]
    AttemptProb,
    #[error("tx_power must be > 0")]
    TxPower,
    #[error("noise_var must be ≥ 0")]
    NoiseVar,
    #[error("spectral_eff must be ≥ 0")]
    SpectralEff,
}

impl ConfigError {
    /// Name of the offending field as it appears in config files.
    pub fn field(&self) -> &'static str {
        match self {
            ConfigError::NUsers => "n_users",
            ConfigError::NAntennas => "n_antennas",
            ConfigError::AttemptProb => "attempt_prob",
            ConfigError::TxPower => "tx_power",
            ConfigError::NoiseVar => "noise_var",
            ConfigError::SpectralEff => "spectral_eff",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{0} must be finite")]
    NonFinite(&'static str),

    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("spectral_eff must be > 0 for this operation")]
    ZeroSpectralEfficiency,

    #[error("no valid solutions: zeta = {zeta} does not exceed Q^-1(eps)^2/N = {threshold}")]
    NoValidSolution { zeta: f64, threshold: f64 },

    #[error("below minimum spectral efficiency for this ε: rho = {rho} < rho_min = {rho_min}")]
    BelowMinimumSpectralEfficiency { rho: f64, rho_min: f64 },

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("series for {0} did not converge")]
    SeriesDivergence(&'static str),

    #[error("insufficient samples: {conditioned} conditioning trials out of {trials}")]
    InsufficientSamples { trials: u64, conditioned: u64 },

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}
