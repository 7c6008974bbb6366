mod common;

use common::{hyper_cdf, Frac};
use fairtopk::audit::{dkw_epsilon, lower_boundary, upper_boundary};
use fairtopk::null_model::{odds_ratio_for_target, PrefixLaws};
use fairtopk::sampler::sample_batch;
use fairtopk::{NullModel, PopulationSpec, TargetQuota};

fn pop(n: usize, n_p: usize) -> PopulationSpec {
    PopulationSpec::new(n, n_p).unwrap()
}

/// Empirical law of every prefix count matches the exact rational CDF within
/// the DKW half-width at beta = 0.01.
#[test]
#[allow(clippy::needless_range_loop)]
fn hypergeometric_prefix_counts_are_exchangeable() {
    let n_e = 1_000_000;
    let eps = dkw_epsilon(n_e, 0.01).unwrap();
    let mut worst = 0.0f64;
    for n in 1..=8 {
        for n_p in 0..=n {
            let batch = sample_batch(&NullModel::Hypergeometric, &pop(n, n_p), n_e, 17).unwrap();
            // counts[k-1][y]
            let mut counts = vec![vec![0u64; n + 1]; n];
            for r in &batch {
                let mut y = 0;
                for (j, &g) in r.groups().iter().enumerate() {
                    y += g as usize;
                    counts[j][y] += 1;
                }
            }
            for k in 1..=n {
                let mut le = 0u64;
                for y in 0..=k {
                    le += counts[k - 1][y];
                    let exact = hyper_cdf(n, n_p, k, y as i64).to_f64();
                    worst = worst.max((le as f64 / n_e as f64 - exact).abs());
                }
            }
        }
    }
    assert!(worst <= eps, "max CDF deviation {worst} > {eps}");
}

#[test]
fn mean_prefix_count_tracks_expectation() {
    let batch = sample_batch(&NullModel::Hypergeometric, &pop(100, 30), 100_000, 3).unwrap();
    let mean = batch
        .iter()
        .map(|r| r.groups()[..50].iter().filter(|&&g| g).count() as f64)
        .sum::<f64>()
        / batch.len() as f64;
    assert!((mean - 15.0).abs() < 0.15, "mean {mean}");
}

#[test]
fn target_odds_give_target_share_at_the_top() {
    let p = pop(100, 30);
    let rho = 0.5;
    let omega = odds_ratio_for_target(&p, TargetQuota::new(rho).unwrap()).unwrap();
    let m = NullModel::weighted(omega).unwrap();
    let n_e = 1_000_000;
    let hits = sample_batch(&m, &p, n_e, 23)
        .unwrap()
        .iter()
        .filter(|r| r.groups()[0])
        .count();
    let share = hits as f64 / n_e as f64;
    let se = (rho * (1.0 - rho) / n_e as f64).sqrt();
    assert!((share - rho).abs() <= 3.0 * se, "share {share}");
}

#[test]
fn weighted_prefix_counts_match_the_dp_law() {
    let p = pop(12, 5);
    let m = NullModel::weighted(2.5).unwrap();
    let n_e = 400_000;
    let laws = PrefixLaws::compute(&m, &p, 12).unwrap();
    let batch = sample_batch(&m, &p, n_e, 8).unwrap();
    let eps = dkw_epsilon(n_e, 0.01).unwrap();
    for k in [1, 3, 6, 9] {
        let mut counts = vec![0u64; k + 1];
        for r in &batch {
            counts[r.groups()[..k].iter().filter(|&&g| g).count()] += 1;
        }
        let mut le = 0;
        for (y, &c) in counts.iter().enumerate() {
            le += c;
            assert!((le as f64 / n_e as f64 - laws.get(k).cdf(y)).abs() <= eps);
        }
    }
}

#[test]
fn finite_binomial_never_overdraws_a_group() {
    for (n, n_p, f) in [(10, 2, 0.9), (10, 8, 0.1), (30, 15, 0.5)] {
        let m = NullModel::finite_binomial(f).unwrap();
        for r in sample_batch(&m, &pop(n, n_p), 5_000, 2).unwrap() {
            assert_eq!(r.protected_count(), n_p);
            assert_eq!(r.len() - r.protected_count(), n - n_p);
        }
    }
}

/// Every prefix share of every sampled ranking lies between the curves.
#[test]
fn sampled_shares_stay_inside_boundaries() {
    let p = pop(50, 15);
    let share = p.proportion();
    let models = [
        NullModel::Hypergeometric,
        NullModel::weighted(0.2).unwrap(),
        NullModel::weighted(7.0 / 3.0).unwrap(),
    ];
    for m in models {
        for r in sample_batch(&m, &p, 5_000, 4).unwrap() {
            let mut y = 0;
            for (j, &g) in r.groups().iter().enumerate() {
                y += g as usize;
                let k = j + 1;
                let x = k as f64 / 50.0;
                let s = y as f64 / k as f64;
                assert!(s <= upper_boundary(share, x) + 1e-12);
                assert!(s >= lower_boundary(share, x) - 1e-12);
            }
        }
    }
}

#[test]
fn exchangeability_oracle_is_sane() {
    // first position is protected with probability n_p / n
    assert_eq!(hyper_cdf(8, 3, 1, 0), Frac::new(5, 8));
}
