//! Generative null models for the protected count in a ranking prefix.
//!
//! All three models build a ranking one draw at a time from a finite pool of
//! `n` candidates, `n_p` of them protected. They differ only in the
//! probability that the next draw is protected given the current state
//! (draws made, protected drawn):
//!
//! * [`NullModel::Hypergeometric`]: uniform draw from the remaining pool.
//! * [`NullModel::FiniteBinomial`]: a fixed coin `f` while both groups have
//!   members left, then deterministic fill from the surviving group.
//! * [`NullModel::WeightedHypergeometric`]: remaining protected candidates
//!   carry weight `omega` relative to non-protected ones (Wallenius).
//!
//! The exact law of the prefix count under any of them is computed by one
//! forward dynamic program in [`law`].

pub mod law;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::check_unit_open;

pub use law::{
    cdf, count_distribution, count_distribution_with_threshold, quantile, CountDistribution,
    PrefixLaws, DEFAULT_LARGE_N_THRESHOLD,
};

/// Finite candidate pool: `n` candidates of which `n_p` are protected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PopulationSpec {
    n: usize,
    n_p: usize,
}

impl PopulationSpec {
    pub fn new(n: usize, n_p: usize) -> Result<Self> {
        if n == 0 || n_p > n {
            return Err(Error::InvalidPopulation { n, n_p });
        }
        Ok(Self { n, n_p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_protected(&self) -> usize {
        self.n_p
    }

    pub fn n_non_protected(&self) -> usize {
        self.n - self.n_p
    }

    /// Population share `n_p / n`.
    pub fn proportion(&self) -> f64 {
        self.n_p as f64 / self.n as f64
    }

    /// `n_p == 0` or `n_p == n`: every prefix count is fixed.
    pub fn is_degenerate(&self) -> bool {
        self.n_p == 0 || self.n_p == self.n
    }

    /// Support of the protected count after `k` draws.
    pub fn support(&self, k: usize) -> (usize, usize) {
        (k.saturating_sub(self.n - self.n_p), k.min(self.n_p))
    }
}

/// Which generative process the null hypothesis assumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NullModel {
    Hypergeometric,
    FiniteBinomial { f: f64 },
    WeightedHypergeometric { omega: f64 },
}

impl NullModel {
    pub fn finite_binomial(f: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidParameter {
                name: "f",
                value: f,
                range: "[0, 1]",
            });
        }
        Ok(NullModel::FiniteBinomial { f })
    }

    pub fn weighted(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: omega,
                range: "(0, inf)",
            });
        }
        Ok(NullModel::WeightedHypergeometric { omega })
    }

    /// Weighted model whose first draw is protected with probability `rho`.
    pub fn for_target(pop: &PopulationSpec, quota: TargetQuota) -> Result<Self> {
        Self::weighted(odds_ratio_for_target(pop, quota)?)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NullModel::Hypergeometric => Ok(()),
            NullModel::FiniteBinomial { f } => Self::finite_binomial(f).map(|_| ()),
            NullModel::WeightedHypergeometric { omega } => Self::weighted(omega).map(|_| ()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NullModel::Hypergeometric => "hypergeometric",
            NullModel::FiniteBinomial { .. } => "finite_binomial",
            NullModel::WeightedHypergeometric { .. } => "weighted_hypergeometric",
        }
    }

    /// `(P(next protected), P(next non-protected))` given `protected_left`
    /// and `other_left` candidates remaining, at least one of them nonzero.
    ///
    /// Both branches are computed as ratios rather than `1 - p` so that the
    /// weighted model at `omega = 1` reproduces the hypergeometric values bit
    /// for bit.
    #[inline]
    pub(crate) fn step(&self, protected_left: usize, other_left: usize) -> (f64, f64) {
        debug_assert!(protected_left + other_left > 0);
        if other_left == 0 {
            return (1.0, 0.0);
        }
        if protected_left == 0 {
            return (0.0, 1.0);
        }
        let a = protected_left as f64;
        let b = other_left as f64;
        match *self {
            NullModel::Hypergeometric => (a / (a + b), b / (a + b)),
            NullModel::FiniteBinomial { f } => (f, 1.0 - f),
            NullModel::WeightedHypergeometric { omega } => {
                let wa = omega * a;
                (wa / (wa + b), b / (wa + b))
            }
        }
    }
}

/// Desired protected share of a selection, strictly between 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetQuota(f64);

impl TargetQuota {
    pub fn new(rho: f64) -> Result<Self> {
        check_unit_open("rho", rho)?;
        Ok(Self(rho))
    }

    pub fn rho(&self) -> f64 {
        self.0
    }
}

/// Probability that draw `drawn + 1` is protected, given `protected_drawn`
/// protected candidates among the first `drawn`.
pub fn transition_probability(
    model: &NullModel,
    pop: &PopulationSpec,
    drawn: usize,
    protected_drawn: usize,
) -> Result<f64> {
    model.validate()?;
    if drawn >= pop.n {
        return Err(Error::OutOfRange {
            name: "drawn",
            value: drawn as i64,
            min: 0,
            max: pop.n as i64 - 1,
        });
    }
    let (lo, hi) = pop.support(drawn);
    if protected_drawn < lo || protected_drawn > hi {
        return Err(Error::OutOfRange {
            name: "protected_drawn",
            value: protected_drawn as i64,
            min: lo as i64,
            max: hi as i64,
        });
    }
    let protected_left = pop.n_p - protected_drawn;
    let other_left = pop.n - pop.n_p - (drawn - protected_drawn);
    Ok(model.step(protected_left, other_left).0)
}

/// Probability that the very first draw is protected.
pub fn first_draw_probability(model: &NullModel, pop: &PopulationSpec) -> Result<f64> {
    transition_probability(model, pop, 0, 0)
}

/// Odds ratio `omega` that makes the first draw protected with probability
/// `rho`: `omega = rho / (1 - rho) * (1 - p) / p`.
pub fn odds_ratio_for_target(pop: &PopulationSpec, quota: TargetQuota) -> Result<f64> {
    if pop.is_degenerate() {
        return Err(Error::DegenerateOdds {
            n: pop.n,
            n_p: pop.n_p,
        });
    }
    let rho = quota.rho();
    let p = pop.proportion();
    Ok(rho / (1.0 - rho) * ((1.0 - p) / p))
}
