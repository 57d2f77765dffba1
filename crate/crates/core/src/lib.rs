#![allow(clippy::excessive_precision)]

pub mod analytic_pep;
pub mod asymptotic;
pub mod error;
pub mod monte_carlo;
pub mod quadrature;
pub mod special;
pub mod sweep;
pub mod system_model;

pub use analytic_pep::{Method, PepResult};
pub use asymptotic::{Age, AoiEstimate, AoiSource, Population, TradeoffPoint};
pub use error::{ConfigError, Error, Result};
pub use monte_carlo::{AoiMode, RngSpec};
pub use system_model::{Alpha, ConfigDraft, DerivedParams, SystemConfig};
