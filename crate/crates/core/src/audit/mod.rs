//! Fairness tests on ranking prefixes.
//!
//! A single prefix test compares the protected count `y_k` in the top `k`
//! with its null law. Testing every prefix `j = 1..k` at once is a family
//! of dependent tests; [`adjust_alpha`] calibrates a per-test level
//! `alpha_c` by simulating the family statistic `Z_k = min_j F_j(Y_j)` so
//! the chance of any false rejection stays at `alpha`. [`fairness_score`]
//! reports how extreme an observed ranking's `Z` is under the null.

mod bands;
mod monte_carlo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::null_model::{
    count_distribution, CountDistribution, NullModel, PopulationSpec, PrefixLaws,
};
use crate::prob::{at_most, check_unit_open};
use crate::sampler::Ranking;

pub use bands::{
    boundary_curves, confidence_band, dkw_epsilon, lower_boundary, required_samples,
    upper_boundary, BandRow, BoundaryCurves, BoundaryPoint, ConfidenceBand,
};
pub use monte_carlo::{AdjustedAlpha, CdfMode, NullZSample};

/// Default Monte Carlo replication count.
pub const DEFAULT_N_E: usize = 1_000_000;

/// Which deviation a test looks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Under-representation of the protected group: p-value `P(Y <= y)`.
    #[default]
    Lower,
    /// Over-representation: p-value `P(Y >= y)`.
    Upper,
    /// Either tail; the family statistic takes the smaller tail.
    TwoSided,
}

/// Parameters of a multi-prefix audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    /// Number of prefixes tested, `1..=n`.
    pub k: usize,
    pub side: Side,
    pub n_e: usize,
    pub cdf_mode: CdfMode,
    /// Master seed; null ranking `i` uses substream `i`.
    pub seed: u64,
    /// Thread count for the simulation; results do not depend on it.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl TestConfig {
    pub fn new(alpha: f64, k: usize) -> Self {
        Self {
            alpha,
            k,
            side: Side::Lower,
            n_e: DEFAULT_N_E,
            cdf_mode: CdfMode::Analytical,
            seed: 0,
            workers: None,
        }
    }

    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn with_n_e(mut self, n_e: usize) -> Self {
        self.n_e = n_e;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_cdf_mode(mut self, mode: CdfMode) -> Self {
        self.cdf_mode = mode;
        self
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self, pop: &PopulationSpec) -> Result<()> {
        check_unit_open("alpha", self.alpha)?;
        check_k(pop, self.k)?;
        if self.n_e == 0 {
            return Err(Error::OutOfRange {
                name: "n_e",
                value: 0,
                min: 1,
                max: i64::MAX,
            });
        }
        Ok(())
    }
}

fn check_k(pop: &PopulationSpec, k: usize) -> Result<()> {
    if k == 0 || k > pop.n() {
        return Err(Error::OutOfRange {
            name: "k",
            value: k as i64,
            min: 1,
            max: pop.n() as i64,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of one prefix test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleTest {
    pub p_value: f64,
    pub reject: bool,
}

/// Result of auditing every prefix `1..=k` of a ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub k: usize,
    pub side: Side,
    pub cdf_mode: CdfMode,
    /// Per-prefix p-value `T_j(y_j)`, `j = 1..=k` (lower side: `F_j(y_j)`).
    pub per_prefix_pvalues: Vec<f64>,
    /// Minimum of `per_prefix_pvalues`.
    pub z_statistic: f64,
    pub fairness_score: f64,
    pub alpha_c: AdjustedAlpha,
    /// `z_statistic <= alpha_c`. Can differ from the verdict by one atom at
    /// ties; the verdict follows the score.
    pub z_at_or_below_alpha_c: bool,
    pub verdict: Verdict,
    /// First (1-based) prefix with p-value at or below `alpha_c`.
    pub first_failing_prefix: Option<usize>,
}

/// Cumulative protected counts `y_1, ..., y_n`.
pub fn prefix_counts(ranking: &Ranking) -> Vec<usize> {
    ranking
        .groups()
        .iter()
        .scan(0usize, |y, &g| {
            *y += g as usize;
            Some(*y)
        })
        .collect()
}

/// Tests the top-`k` prefix alone.
///
/// Lower and upper sides reject when their tail probability is at most
/// `alpha`. The two-sided p-value is twice the smaller tail (capped at 1),
/// so it rejects exactly when either tail is at most `alpha / 2`.
pub fn single_test(
    ranking: &Ranking,
    pop: &PopulationSpec,
    model: &NullModel,
    k: usize,
    alpha: f64,
    side: Side,
) -> Result<SingleTest> {
    check_unit_open("alpha", alpha)?;
    ranking.check_against(pop)?;
    check_k(pop, k)?;
    let law = count_distribution(model, pop, k)?;
    let y = prefix_counts(ranking)[k - 1];
    let p_value = match side {
        Side::Lower => law.cdf(y),
        Side::Upper => law.survival(y),
        Side::TwoSided => (2.0 * law.cdf(y).min(law.survival(y))).min(1.0),
    };
    Ok(SingleTest {
        p_value,
        reject: at_most(p_value, alpha),
    })
}

/// Two-sided acceptance of count `y` under `law` at level `alpha`: both
/// tails must exceed `alpha / 2`.
///
/// Equivalent to the band `[min {y : F(y) > alpha/2}, min {y : F(y) >= 1 - alpha/2}]`.
/// Both tails are strict, so the decision is symmetric under
/// `y -> n_p - y` and a top-k pass coincides with a bottom-(n-k) pass under
/// the hypergeometric model.
pub fn two_sided_accepts(law: &CountDistribution, y: usize, alpha: f64) -> bool {
    !at_most(law.cdf(y).min(law.survival(y)), alpha / 2.0)
}

/// `Z_k = min_{j <= k} F_j(y_j)` with exact CDFs.
pub fn z_statistic(
    ranking: &Ranking,
    pop: &PopulationSpec,
    model: &NullModel,
    k: usize,
) -> Result<f64> {
    ranking.check_against(pop)?;
    check_k(pop, k)?;
    let laws = PrefixLaws::compute(model, pop, k)?;
    Ok(prefix_counts(ranking)[..k]
        .iter()
        .enumerate()
        .map(|(i, &y)| laws.get(i + 1).cdf(y))
        .fold(f64::INFINITY, f64::min))
}

/// Monte Carlo calibration of the per-test level for the lower-side family
/// of `k` prefix tests.
pub fn adjust_alpha(
    pop: &PopulationSpec,
    model: &NullModel,
    k: usize,
    alpha: f64,
    n_e: usize,
    seed: u64,
    cdf_mode: CdfMode,
) -> Result<AdjustedAlpha> {
    let config = TestConfig::new(alpha, k)
        .with_n_e(n_e)
        .with_seed(seed)
        .with_cdf_mode(cdf_mode);
    adjust_alpha_with(pop, model, &config)
}

/// As [`adjust_alpha`] for any side and execution settings in `config`.
pub fn adjust_alpha_with(
    pop: &PopulationSpec,
    model: &NullModel,
    config: &TestConfig,
) -> Result<AdjustedAlpha> {
    Ok(NullZSample::simulate(model, pop, config)?.alpha_c(config.alpha))
}

/// Fraction of `n_e` null rankings whose `Z_k` is at or below the observed
/// one (lower side, exact CDFs).
pub fn fairness_score(
    ranking: &Ranking,
    pop: &PopulationSpec,
    model: &NullModel,
    k: usize,
    n_e: usize,
    seed: u64,
) -> Result<f64> {
    ranking.check_against(pop)?;
    // alpha is irrelevant to the score
    let config = TestConfig::new(0.5, k).with_n_e(n_e).with_seed(seed);
    NullZSample::simulate(model, pop, &config)?.score(ranking)
}

/// Full audit: calibrates `alpha_c`, scores the ranking, and locates the
/// first failing prefix.
pub fn multi_test(
    ranking: &Ranking,
    pop: &PopulationSpec,
    model: &NullModel,
    config: &TestConfig,
) -> Result<AuditReport> {
    ranking.check_against(pop)?;
    let sample = NullZSample::simulate(model, pop, config)?;
    audit_against(ranking, &sample, config.alpha)
}

/// Audit against an already simulated null sample.
///
/// Fails when the fairness score is strictly below `alpha`.
pub fn audit_against(ranking: &Ranking, sample: &NullZSample, alpha: f64) -> Result<AuditReport> {
    check_unit_open("alpha", alpha)?;
    let per_prefix_pvalues = sample.prefix_statistics(ranking)?;
    let z_statistic = per_prefix_pvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let adjusted = sample.alpha_c(alpha);
    let fairness_score = sample.fraction_at_most(z_statistic);
    let first_failing_prefix = per_prefix_pvalues
        .iter()
        .position(|&p| at_most(p, adjusted.alpha_c))
        .map(|i| i + 1);
    Ok(AuditReport {
        k: sample.k(),
        side: sample.side(),
        cdf_mode: sample.cdf_mode(),
        z_at_or_below_alpha_c: at_most(z_statistic, adjusted.alpha_c),
        verdict: if fairness_score < alpha {
            Verdict::Fail
        } else {
            Verdict::Pass
        },
        per_prefix_pvalues,
        z_statistic,
        fairness_score,
        alpha_c: adjusted,
        first_failing_prefix,
    })
}
