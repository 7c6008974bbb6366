//! Statistical audits of top-k rankings for group fairness.
//!
//! Rankings are binary group sequences drawn from a finite pool. The crate
//! provides exact prefix-count laws under three null models
//! ([`null_model`]), seeded samplers ([`sampler`]), single and
//! multiple-prefix hypothesis tests with Monte Carlo calibration
//! ([`audit`]), and a minimal-change re-ranker ([`rerank`]).
//!
//! ```
//! use fairtopk::{audit, NullModel, PopulationSpec, Ranking};
//!
//! let pop = PopulationSpec::new(5, 2).unwrap();
//! let ranking = Ranking::from_flags(&[0, 0, 0, 1, 1]).unwrap();
//! let z = audit::z_statistic(&ranking, &pop, &NullModel::Hypergeometric, 5).unwrap();
//! assert!((z - 0.1).abs() < 1e-12);
//! ```

pub mod audit;
mod error;
pub mod null_model;
pub mod prob;
pub mod rerank;
pub mod sampler;

pub use audit::{AuditReport, CdfMode, Side, TestConfig, Verdict};
pub use error::{Error, Result};
pub use null_model::{CountDistribution, NullModel, PopulationSpec, TargetQuota};
pub use sampler::{Ranking, SeedSpec};
