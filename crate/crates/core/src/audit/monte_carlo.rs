//! Monte Carlo law of the prefix-family statistic `Z_k` under a null model.
//!
//! A [`NullZSample`] holds `n_e` draws of `Z_k = min_j T_j(Y_j)` where
//! `T_j` is the per-prefix p-value for the chosen side. It calibrates the
//! per-test level `alpha_c` and scores observed rankings against the same
//! batch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Side, TestConfig};
use crate::error::Result;
use crate::null_model::{NullModel, PopulationSpec, PrefixLaws};
use crate::prob::{at_most, strictly_below, PROB_TOL};
use crate::sampler::{fill_ranking, with_workers, Ranking, SeedSpec};

/// How per-prefix p-values are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdfMode {
    /// Exact laws from the DP.
    #[default]
    Analytical,
    /// Per-position empirical CDF of the simulated batch itself
    /// (self-inclusive: fraction of the batch with `Y_j <= y`).
    Empirical,
}

/// Calibrated per-test significance level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustedAlpha {
    /// Family-wise level requested.
    pub alpha: f64,
    pub alpha_c: f64,
    /// Fraction of the null batch with `Z <= alpha_c`.
    pub achieved_fwer: f64,
    pub n_e_used: usize,
    /// Set when `n_e * alpha < 10`: too few replications to resolve `alpha`.
    pub under_resolved: bool,
}

/// Empirical per-position CDF: `le[(j - 1) * width + y] = #{Y_j <= y}`.
#[derive(Debug, Clone)]
struct EmpiricalPrefixCdf {
    width: usize,
    n_e: u64,
    le: Vec<u64>,
}

impl EmpiricalPrefixCdf {
    fn cdf(&self, j: usize, y: usize) -> f64 {
        let y = y.min(self.width - 1);
        self.le[(j - 1) * self.width + y] as f64 / self.n_e as f64
    }

    fn survival(&self, j: usize, y: usize) -> f64 {
        if y == 0 {
            return 1.0;
        }
        let below = self.le[(j - 1) * self.width + (y - 1).min(self.width - 1)];
        (self.n_e - below) as f64 / self.n_e as f64
    }
}

#[derive(Debug, Clone)]
enum Reference {
    Analytical(PrefixLaws),
    Empirical(EmpiricalPrefixCdf),
}

impl Reference {
    #[inline]
    fn statistic(&self, side: Side, j: usize, y: usize) -> f64 {
        let (lower, upper) = match self {
            Reference::Analytical(laws) => {
                let law = laws.get(j);
                match side {
                    Side::Lower => return law.cdf(y),
                    Side::Upper => return law.survival(y),
                    Side::TwoSided => (law.cdf(y), law.survival(y)),
                }
            }
            Reference::Empirical(e) => match side {
                Side::Lower => return e.cdf(j, y),
                Side::Upper => return e.survival(j, y),
                Side::TwoSided => (e.cdf(j, y), e.survival(j, y)),
            },
        };
        lower.min(upper)
    }
}

/// `n_e` null draws of the prefix-family statistic.
#[derive(Debug, Clone)]
pub struct NullZSample {
    model: NullModel,
    pop: PopulationSpec,
    k: usize,
    side: Side,
    mode: CdfMode,
    reference: Reference,
    sorted_z: Vec<f64>,
}

impl NullZSample {
    /// Simulates `config.n_e` null rankings (ranking `i` on substream `i` of
    /// `config.seed`) and records the statistic of each.
    pub fn simulate(model: &NullModel, pop: &PopulationSpec, config: &TestConfig) -> Result<Self> {
        model.validate()?;
        config.validate(pop)?;
        with_workers(config.workers, || Self::simulate_inner(model, pop, config))
    }

    fn simulate_inner(
        model: &NullModel,
        pop: &PopulationSpec,
        config: &TestConfig,
    ) -> Result<Self> {
        let k = config.k;
        let n_e = config.n_e;
        let seed = config.seed;
        let reference = match config.cdf_mode {
            CdfMode::Analytical => Reference::Analytical(PrefixLaws::compute(model, pop, k)?),
            CdfMode::Empirical => {
                Reference::Empirical(empirical_prefix_cdf(model, pop, k, n_e, seed))
            }
        };
        let side = config.side;
        let mut sorted_z: Vec<f64> = (0..n_e as u64)
            .into_par_iter()
            .map_init(
                || Vec::with_capacity(pop.n()),
                |buf, i| {
                    fill_ranking(model, pop, &mut SeedSpec::new(seed, i).rng(), buf);
                    family_statistic(&reference, side, &buf[..k])
                },
            )
            .collect();
        sorted_z.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            model: *model,
            pop: *pop,
            k,
            side,
            mode: config.cdf_mode,
            reference,
            sorted_z,
        })
    }

    pub fn model(&self) -> &NullModel {
        &self.model
    }

    pub fn population(&self) -> &PopulationSpec {
        &self.pop
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn cdf_mode(&self) -> CdfMode {
        self.mode
    }

    pub fn n_e(&self) -> usize {
        self.sorted_z.len()
    }

    /// Simulated statistics in ascending order.
    pub fn sorted_statistics(&self) -> &[f64] {
        &self.sorted_z
    }

    /// Empirical `P(Z <= gamma)`.
    pub fn fraction_at_most(&self, gamma: f64) -> f64 {
        let count = self.sorted_z.partition_point(|&z| at_most(z, gamma));
        count as f64 / self.sorted_z.len() as f64
    }

    /// Largest `gamma` among the observed atoms not above `alpha`, and
    /// `alpha` itself, with empirical `P(Z <= gamma) <= alpha`.
    pub fn alpha_c(&self, alpha: f64) -> AdjustedAlpha {
        let n_e = self.sorted_z.len();
        let alpha_c = if self.fraction_at_most(alpha) <= alpha {
            alpha
        } else {
            let below = self.sorted_z.partition_point(|&z| at_most(z, alpha));
            let mut chosen = None;
            // walk atoms downward; the fraction only shrinks
            let mut i = below;
            while i > 0 {
                let atom = self.sorted_z[i - 1];
                if self.fraction_at_most(atom) <= alpha {
                    chosen = Some(atom);
                    break;
                }
                i = self.sorted_z.partition_point(|&z| strictly_below(z, atom));
            }
            chosen.unwrap_or_else(|| {
                // even the smallest atom rejects too often: stay just below it
                self.sorted_z[0] * (1.0 - 4.0 * PROB_TOL)
            })
        };
        AdjustedAlpha {
            alpha,
            alpha_c,
            achieved_fwer: self.fraction_at_most(alpha_c),
            n_e_used: n_e,
            under_resolved: (n_e as f64) * alpha < 10.0,
        }
    }

    /// Per-prefix p-values `T_1(y_1), ..., T_k(y_k)` of an observed ranking,
    /// evaluated with this sample's reference CDFs.
    pub fn prefix_statistics(&self, ranking: &Ranking) -> Result<Vec<f64>> {
        ranking.check_against(&self.pop)?;
        let mut y = 0;
        Ok(ranking.groups()[..self.k]
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                y += g as usize;
                self.reference.statistic(self.side, i + 1, y)
            })
            .collect())
    }

    /// Observed `Z` of a ranking.
    pub fn statistic(&self, ranking: &Ranking) -> Result<f64> {
        ranking.check_against(&self.pop)?;
        Ok(family_statistic(
            &self.reference,
            self.side,
            &ranking.groups()[..self.k],
        ))
    }

    /// Fairness score: fraction of null draws whose statistic is at or below
    /// the ranking's.
    pub fn score(&self, ranking: &Ranking) -> Result<f64> {
        Ok(self.fraction_at_most(self.statistic(ranking)?))
    }
}

fn family_statistic(reference: &Reference, side: Side, prefix: &[bool]) -> f64 {
    let mut y = 0;
    let mut z = f64::INFINITY;
    for (i, &g) in prefix.iter().enumerate() {
        y += g as usize;
        z = z.min(reference.statistic(side, i + 1, y));
    }
    z
}

fn empirical_prefix_cdf(
    model: &NullModel,
    pop: &PopulationSpec,
    k: usize,
    n_e: usize,
    seed: u64,
) -> EmpiricalPrefixCdf {
    let width = k.min(pop.n_protected()) + 1;
    let counts = (0..n_e as u64)
        .into_par_iter()
        .fold(
            || (vec![0u64; k * width], Vec::with_capacity(pop.n())),
            |(mut acc, mut buf), i| {
                fill_ranking(model, pop, &mut SeedSpec::new(seed, i).rng(), &mut buf);
                let mut y = 0;
                for (j, &g) in buf[..k].iter().enumerate() {
                    y += g as usize;
                    acc[j * width + y] += 1;
                }
                (acc, buf)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(
            || vec![0u64; k * width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let mut le = counts;
    for row in le.chunks_mut(width) {
        for y in 1..width {
            row[y] += row[y - 1];
        }
    }
    EmpiricalPrefixCdf {
        width,
        n_e: n_e as u64,
        le,
    }
}
