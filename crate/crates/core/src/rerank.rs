//! Minimal re-ranking to restore ranked group fairness.
//!
//! A [`RerankPlan`] fixes, for every prefix length `i`, the fewest protected
//! candidates the top `i` must hold so that `F_i(y_i) > alpha_c`. The sweep
//! walks the ranking top-down and, whenever the running count falls short,
//! pulls the highest-ranked protected candidate still below into the current
//! position and shifts the skipped block down by one. Order within each group
//! is never changed.
//!
//! The mirrored mode caps the protected count instead (over-representation),
//! using the upper tail `P(Y_i >= y) > alpha_c`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::audit::{adjust_alpha_with, AdjustedAlpha, Side, TestConfig};
use crate::error::{Error, Result};
use crate::null_model::{NullModel, PopulationSpec, PrefixLaws};
use crate::prob::{at_most, check_unit_open};
use crate::sampler::Ranking;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `bounds[i - 1]` is the minimum protected count in the top `i`.
    #[default]
    MinProtected,
    /// `bounds[i - 1]` is the maximum protected count in the top `i`.
    MaxProtected,
}

/// Per-prefix count thresholds for the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankPlan {
    pub kind: BoundKind,
    pub bounds: Vec<usize>,
    pub alpha_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankResult {
    pub ranking: Ranking,
    /// Number of candidates moved up.
    pub swap_count: usize,
    /// 1-based positions that received a moved candidate.
    pub positions_adjusted: Vec<usize>,
    pub alpha_c: f64,
}

fn check_model(model: &NullModel) -> Result<()> {
    model.validate()?;
    if matches!(model, NullModel::FiniteBinomial { .. }) {
        return Err(Error::UnsupportedModel("finite binomial model"));
    }
    Ok(())
}

fn check_table_args(pop: &PopulationSpec, alpha_c: f64, k: usize) -> Result<()> {
    check_unit_open("alpha_c", alpha_c)?;
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

/// `m[i] = min { y : F_i(y) > alpha_c }` for `i = 1..=k`.
pub fn min_protected_table(
    pop: &PopulationSpec,
    model: &NullModel,
    alpha_c: f64,
    k: usize,
) -> Result<RerankPlan> {
    check_table_args(pop, alpha_c, k)?;
    let laws = PrefixLaws::compute(model, pop, k)?;
    let bounds = laws
        .iter()
        .map(|law| {
            let (lo, hi) = law.support();
            (lo..=hi)
                .find(|&y| !at_most(law.cdf(y), alpha_c))
                .unwrap_or(hi)
        })
        .collect();
    Ok(RerankPlan {
        kind: BoundKind::MinProtected,
        bounds,
        alpha_c,
    })
}

/// `M[i] = max { y : P(Y_i >= y) > alpha_c }` for `i = 1..=k`.
pub fn max_protected_table(
    pop: &PopulationSpec,
    model: &NullModel,
    alpha_c: f64,
    k: usize,
) -> Result<RerankPlan> {
    check_table_args(pop, alpha_c, k)?;
    let laws = PrefixLaws::compute(model, pop, k)?;
    let bounds = laws
        .iter()
        .map(|law| {
            let (lo, hi) = law.support();
            (lo..=hi)
                .rev()
                .find(|&y| !at_most(law.survival(y), alpha_c))
                .unwrap_or(lo)
        })
        .collect();
    Ok(RerankPlan {
        kind: BoundKind::MaxProtected,
        bounds,
        alpha_c,
    })
}

/// Runs the sweep for `plan` over `ranking`.
pub fn apply_plan(ranking: &Ranking, plan: &RerankPlan) -> Result<RerankResult> {
    let n = ranking.len();
    let (groups, ids) = ranking.clone().into_parts();
    // work on the group that must be pulled upward
    let (mut lifted, minimum): (Vec<bool>, Vec<usize>) = match plan.kind {
        BoundKind::MinProtected => (groups, plan.bounds.clone()),
        BoundKind::MaxProtected => (
            groups.iter().map(|g| !g).collect(),
            plan.bounds
                .iter()
                .enumerate()
                .map(|(i, &m)| (i + 1).saturating_sub(m))
                .collect(),
        ),
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| lifted[i]).collect();
    let mut positions_adjusted = Vec::new();
    let mut count = 0;
    for (i, &need) in minimum.iter().enumerate().take(n) {
        if lifted[i] {
            count += 1;
            queue.pop_front();
        }
        if count < need {
            let from = queue.pop_front().ok_or(Error::InfeasibleConstraint {
                position: i + 1,
                required: need,
                available: count,
            })?;
            // the block i..from holds no lifted-group member; rotate it down
            lifted[i..=from].rotate_right(1);
            order[i..=from].rotate_right(1);
            count += 1;
            positions_adjusted.push(i + 1);
        }
    }
    let groups: Vec<bool> = match plan.kind {
        BoundKind::MinProtected => lifted,
        BoundKind::MaxProtected => lifted.iter().map(|g| !g).collect(),
    };
    let ranking = match ids {
        Some(ids) => Ranking::with_ids(groups, order.iter().map(|&i| ids[i].clone()).collect())?,
        None => Ranking::new(groups),
    };
    Ok(RerankResult {
        ranking,
        swap_count: positions_adjusted.len(),
        positions_adjusted,
        alpha_c: plan.alpha_c,
    })
}

/// Re-ranks with a known per-test level over the whole ranking.
pub fn rerank_with_alpha_c(
    ranking: &Ranking,
    pop: &PopulationSpec,
    model: &NullModel,
    alpha_c: f64,
    kind: BoundKind,
) -> Result<RerankResult> {
    check_model(model)?;
    ranking.check_against(pop)?;
    let plan = match kind {
        BoundKind::MinProtected => min_protected_table(pop, model, alpha_c, pop.n())?,
        BoundKind::MaxProtected => max_protected_table(pop, model, alpha_c, pop.n())?,
    };
    apply_plan(ranking, &plan)
}

/// Calibrates `alpha_c` for the family of all `n` prefix tests, then removes
/// under-representation of the protected group.
pub fn rerank(
    ranking: &Ranking,
    pop: &PopulationSpec,
    model: &NullModel,
    alpha: f64,
    n_e: usize,
    seed: u64,
) -> Result<(RerankResult, AdjustedAlpha)> {
    check_model(model)?;
    ranking.check_against(pop)?;
    let config = TestConfig::new(alpha, pop.n())
        .with_n_e(n_e)
        .with_seed(seed)
        .with_side(Side::Lower);
    let adjusted = adjust_alpha_with(pop, model, &config)?;
    let result = rerank_with_alpha_c(
        ranking,
        pop,
        model,
        adjusted.alpha_c,
        BoundKind::MinProtected,
    )?;
    Ok((result, adjusted))
}
