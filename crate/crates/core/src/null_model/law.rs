//! Exact laws of the protected prefix count.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use super::{NullModel, PopulationSpec};
use crate::error::{Error, Result};
use crate::prob::{at_least, check_unit_open, KahanSum};

/// Pool size above which the hypergeometric law is evaluated in closed form
/// through log-binomials instead of the forward DP.
pub const DEFAULT_LARGE_N_THRESHOLD: usize = 10_000;

/// Law of the protected count `Y_k` among the first `k` draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    k: usize,
    min: usize,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    sf: Vec<f64>,
}

impl CountDistribution {
    /// Builds the law from probabilities on the support `min..min + pmf.len()`.
    fn from_support_pmf(k: usize, min: usize, pmf: Vec<f64>) -> Self {
        debug_assert!(!pmf.is_empty());
        // running max and the clamp keep rounding from breaking monotonicity
        let mut acc = KahanSum::new();
        let mut last = 0.0f64;
        let cdf = pmf
            .iter()
            .map(|&p| {
                acc.add(p);
                last = last.max(acc.value()).min(1.0);
                last
            })
            .collect();
        let mut acc = KahanSum::new();
        let mut last = 0.0f64;
        let mut sf: Vec<f64> = pmf
            .iter()
            .rev()
            .map(|&p| {
                acc.add(p);
                last = last.max(acc.value()).min(1.0);
                last
            })
            .collect();
        sf.reverse();
        Self {
            k,
            min,
            pmf,
            cdf,
            sf,
        }
    }

    pub fn prefix_length(&self) -> usize {
        self.k
    }

    /// Inclusive support bounds.
    pub fn support(&self) -> (usize, usize) {
        (self.min, self.min + self.pmf.len() - 1)
    }

    /// Probabilities on the support, lowest count first.
    pub fn pmf_values(&self) -> &[f64] {
        &self.pmf
    }

    pub fn pmf(&self, y: usize) -> f64 {
        y.checked_sub(self.min)
            .and_then(|i| self.pmf.get(i).copied())
            .unwrap_or(0.0)
    }

    /// `P(Y <= y)`; exactly 1 from the support maximum upward.
    pub fn cdf(&self, y: usize) -> f64 {
        let (lo, hi) = self.support();
        if y < lo {
            0.0
        } else if y >= hi {
            1.0
        } else {
            self.cdf[y - lo]
        }
    }

    /// `P(Y <= y)` for any integer `y`.
    pub fn cdf_signed(&self, y: i64) -> f64 {
        if y < 0 {
            0.0
        } else {
            self.cdf(y as usize)
        }
    }

    /// Upper tail `P(Y >= y)`, summed from the top so small tails keep their
    /// relative precision.
    pub fn survival(&self, y: usize) -> f64 {
        let (lo, hi) = self.support();
        if y <= lo {
            1.0
        } else if y > hi {
            0.0
        } else {
            self.sf[y - lo]
        }
    }

    /// Lower quantile `min { y : P(Y <= y) >= gamma }`.
    pub fn quantile(&self, gamma: f64) -> usize {
        let (lo, hi) = self.support();
        (lo..hi)
            .find(|&y| at_least(self.cdf(y), gamma))
            .unwrap_or(hi)
    }

    pub fn mean(&self) -> f64 {
        let mut acc = KahanSum::new();
        for (i, p) in self.pmf.iter().enumerate() {
            acc.add((self.min + i) as f64 * p);
        }
        acc.value()
    }

    /// Total probability mass (1 up to rounding).
    pub fn total_mass(&self) -> f64 {
        self.cdf.last().copied().unwrap_or(0.0)
    }
}

/// Forward DP over states (draws, protected drawn). Calls `visit(j, probs)`
/// after every draw `j = 1..=k_max`, with `probs[y] = P(Y_j = y)` (zero
/// outside the support).
fn forward<F>(model: &NullModel, pop: &PopulationSpec, k_max: usize, mut visit: F)
where
    F: FnMut(usize, &[f64]),
{
    let n_p = pop.n_protected();
    let n_other = pop.n_non_protected();
    let width = k_max.min(n_p) + 2;
    let mut cur = vec![0.0; width];
    let mut next = vec![0.0; width];
    cur[0] = 1.0;
    for j in 0..k_max {
        let (lo, hi) = pop.support(j);
        next[lo..=hi + 1].fill(0.0);
        for y in lo..=hi {
            let mass = cur[y];
            if mass == 0.0 {
                continue;
            }
            let (up, stay) = model.step(n_p - y, n_other - (j - y));
            next[y + 1] += mass * up;
            next[y] += mass * stay;
        }
        std::mem::swap(&mut cur, &mut next);
        visit(j + 1, &cur);
    }
}

fn law_from_dense(pop: &PopulationSpec, k: usize, probs: &[f64]) -> CountDistribution {
    let (lo, hi) = pop.support(k);
    CountDistribution::from_support_pmf(k, lo, probs[lo..=hi].to_vec())
}

fn hypergeometric_closed_form(pop: &PopulationSpec, k: usize) -> CountDistribution {
    let n = pop.n() as u64;
    let n_p = pop.n_protected() as u64;
    let (lo, hi) = pop.support(k);
    let k = k as u64;
    let ln_total = ln_binomial(n, k);
    let pmf = (lo as u64..=hi as u64)
        .map(|y| (ln_binomial(n_p, y) + ln_binomial(n - n_p, k - y) - ln_total).exp())
        .collect();
    CountDistribution::from_support_pmf(k as usize, lo, pmf)
}

fn check_prefix(pop: &PopulationSpec, k: usize) -> Result<()> {
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

/// Exact law of `Y_k` under `model`.
pub fn count_distribution(
    model: &NullModel,
    pop: &PopulationSpec,
    k: usize,
) -> Result<CountDistribution> {
    count_distribution_with_threshold(model, pop, k, DEFAULT_LARGE_N_THRESHOLD)
}

/// As [`count_distribution`], switching the hypergeometric model to the
/// closed-form log-gamma route when `n > large_n_threshold`.
pub fn count_distribution_with_threshold(
    model: &NullModel,
    pop: &PopulationSpec,
    k: usize,
    large_n_threshold: usize,
) -> Result<CountDistribution> {
    model.validate()?;
    check_prefix(pop, k)?;
    if matches!(model, NullModel::Hypergeometric) && pop.n() > large_n_threshold {
        return Ok(hypergeometric_closed_form(pop, k));
    }
    let mut out = None;
    forward(model, pop, k, |j, probs| {
        if j == k {
            out = Some(law_from_dense(pop, j, probs));
        }
    });
    Ok(out.expect("forward visits every prefix"))
}

/// `P(Y_k <= y)` for any integer `y`.
pub fn cdf(model: &NullModel, pop: &PopulationSpec, k: usize, y: i64) -> Result<f64> {
    Ok(count_distribution(model, pop, k)?.cdf_signed(y))
}

/// Lower `gamma`-quantile of `Y_k`.
pub fn quantile(model: &NullModel, pop: &PopulationSpec, k: usize, gamma: f64) -> Result<usize> {
    check_unit_open("gamma", gamma)?;
    Ok(count_distribution(model, pop, k)?.quantile(gamma))
}

/// Laws of `Y_1, ..., Y_k` from a single DP sweep.
#[derive(Debug, Clone)]
pub struct PrefixLaws {
    pop: PopulationSpec,
    laws: Vec<CountDistribution>,
}

impl PrefixLaws {
    pub fn compute(model: &NullModel, pop: &PopulationSpec, k: usize) -> Result<Self> {
        model.validate()?;
        check_prefix(pop, k)?;
        let mut laws = Vec::with_capacity(k);
        forward(model, pop, k, |j, probs| {
            laws.push(law_from_dense(pop, j, probs))
        });
        Ok(Self { pop: *pop, laws })
    }

    pub fn population(&self) -> &PopulationSpec {
        &self.pop
    }

    /// Longest prefix covered.
    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    /// Law of `Y_j`, `1 <= j <= len()`.
    pub fn get(&self, j: usize) -> &CountDistribution {
        &self.laws[j - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = &CountDistribution> {
        self.laws.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pop(n: usize, n_p: usize) -> PopulationSpec {
        PopulationSpec::new(n, n_p).unwrap()
    }

    const H: NullModel = NullModel::Hypergeometric;

    #[test]
    fn single_draw_from_ten() {
        let d = count_distribution(&H, &pop(10, 3), 1).unwrap();
        assert!((d.pmf(1) - 0.3).abs() < 1e-15);
        assert!((d.cdf(0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn two_from_five_matches_enumeration() {
        // C(5,2) = 10 equally likely protected-position sets:
        // both protected outside the top 2 -> C(3,2)=3, one inside -> 2*3=6, both -> 1
        let d = count_distribution(&H, &pop(5, 2), 2).unwrap();
        assert!((d.pmf(0) - 0.3).abs() < 1e-15);
        assert!((d.pmf(1) - 0.6).abs() < 1e-15);
        assert!((d.pmf(2) - 0.1).abs() < 1e-15);
        assert!((d.cdf(1) - 0.9).abs() < 1e-15);
        assert_eq!(d.quantile(0.5), 1);
        assert_eq!(d.quantile(0.9), 1);
        assert_eq!(d.quantile(1.0 - 1e-9), 2);
        assert_eq!(d.cdf(2), 1.0);
        assert_eq!(d.cdf_signed(-1), 0.0);
        assert_eq!(d.survival(0), 1.0);
        assert!((d.survival(2) - 0.1).abs() < 1e-15);
        assert_eq!(d.survival(3), 0.0);
    }

    #[test]
    fn weighted_two_of_four_matches_probability_tree() {
        // omega = 2, two protected (weight 2 each), two others (weight 1 each).
        // P(P,P) = 4/6 * 2/4, P(P,O) = 4/6 * 2/4, P(O,P) = 2/6 * 4/5, P(O,O) = 2/6 * 1/5
        let w = NullModel::weighted(2.0).unwrap();
        let d = count_distribution(&w, &pop(4, 2), 2).unwrap();
        let pp = 4.0 / 6.0 * 2.0 / 4.0;
        let po = 4.0 / 6.0 * 2.0 / 4.0;
        let op = 2.0 / 6.0 * 4.0 / 5.0;
        let oo = 2.0 / 6.0 * 1.0 / 5.0;
        assert!((d.pmf(2) - pp).abs() < 1e-15);
        assert!((d.pmf(1) - (po + op)).abs() < 1e-15);
        assert!((d.pmf(0) - oo).abs() < 1e-15);
    }

    #[test]
    fn full_draw_is_point_mass() {
        for m in [
            H,
            NullModel::weighted(3.5).unwrap(),
            NullModel::finite_binomial(0.8).unwrap(),
        ] {
            let d = count_distribution(&m, &pop(12, 5), 12).unwrap();
            assert_eq!(d.support(), (5, 5));
            assert!((d.pmf(5) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_pools_are_point_masses() {
        let d = count_distribution(&H, &pop(6, 0), 4).unwrap();
        assert_eq!(d.support(), (0, 0));
        assert_eq!(d.pmf(0), 1.0);
        let d =
            count_distribution(&NullModel::finite_binomial(0.2).unwrap(), &pop(6, 6), 4).unwrap();
        assert_eq!(d.support(), (4, 4));
        assert_eq!(d.pmf(4), 1.0);
    }

    #[test]
    fn prefix_range_is_checked() {
        assert!(count_distribution(&H, &pop(5, 2), 0).is_err());
        assert!(count_distribution(&H, &pop(5, 2), 6).is_err());
        assert!(quantile(&H, &pop(5, 2), 2, 0.0).is_err());
        assert!(quantile(&H, &pop(5, 2), 2, 1.0).is_err());
    }

    #[test]
    fn large_n_route_agrees_with_dp() {
        let p = pop(400, 123);
        for k in [1, 57, 200, 399] {
            let dp = count_distribution(&H, &p, k).unwrap();
            let cf = count_distribution_with_threshold(&H, &p, k, 100).unwrap();
            assert_eq!(dp.support(), cf.support());
            for (a, b) in dp.pmf_values().iter().zip(cf.pmf_values()) {
                assert!((a - b).abs() < 1e-12, "k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn prefix_laws_match_individual_laws() {
        let p = pop(30, 11);
        let m = NullModel::weighted(0.7).unwrap();
        let laws = PrefixLaws::compute(&m, &p, 30).unwrap();
        for j in [1, 9, 22, 30] {
            assert_eq!(laws.get(j), &count_distribution(&m, &p, j).unwrap());
        }
    }

    #[test]
    fn top_level_cdf_and_quantile() {
        assert!((cdf(&H, &pop(10, 3), 1, 0).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(cdf(&H, &pop(10, 3), 4, 3).unwrap(), 1.0);
        assert_eq!(cdf(&H, &pop(10, 3), 4, -3).unwrap(), 0.0);
        assert!((cdf(&H, &pop(5, 2), 2, 1).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(quantile(&H, &pop(5, 2), 2, 0.5).unwrap(), 1);
    }
}
