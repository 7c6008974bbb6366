//! Confidence bands, attainable-proportion boundaries and DKW sample sizing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::null_model::{NullModel, PopulationSpec, PrefixLaws};
use crate::prob::check_unit_open;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub j: usize,
    pub lower: usize,
    pub upper: usize,
    pub lower_proportion: f64,
    pub upper_proportion: f64,
}

/// Two-sided `1 - alpha` band for the protected count at every prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub alpha: f64,
    pub rows: Vec<BandRow>,
}

impl ConfidenceBand {
    pub fn row(&self, j: usize) -> &BandRow {
        &self.rows[j - 1]
    }
}

/// Lower `alpha/2` and `1 - alpha/2` quantiles of `Y_j` for `j = 1..=n`.
pub fn confidence_band(
    pop: &PopulationSpec,
    model: &NullModel,
    alpha: f64,
) -> Result<ConfidenceBand> {
    check_unit_open("alpha", alpha)?;
    let laws = PrefixLaws::compute(model, pop, pop.n())?;
    let rows = laws
        .iter()
        .map(|law| {
            let j = law.prefix_length();
            let lower = law.quantile(alpha / 2.0);
            let upper = law.quantile(1.0 - alpha / 2.0);
            BandRow {
                j,
                lower,
                upper,
                lower_proportion: lower as f64 / j as f64,
                upper_proportion: upper as f64 / j as f64,
            }
        })
        .collect();
    Ok(ConfidenceBand { alpha, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub x: f64,
    pub upper: f64,
    pub lower: f64,
}

/// Extremes of the protected share `y_k / k` reachable at `x = k / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurves {
    pub p: f64,
    pub points: Vec<BoundaryPoint>,
}

/// Highest attainable share: every protected candidate drawn first.
pub fn upper_boundary(p: f64, x: f64) -> f64 {
    if x <= p {
        1.0
    } else {
        p / x
    }
}

/// Lowest attainable share: every non-protected candidate drawn first.
pub fn lower_boundary(p: f64, x: f64) -> f64 {
    if x <= 1.0 - p {
        0.0
    } else if x >= 1.0 {
        // whole pool drawn; avoids 1 - (1 - p) rounding away from p
        p
    } else {
        1.0 - (1.0 - p) / x
    }
}

/// Both boundaries on the grid `x = i / grid_size`, `i = 1..=grid_size`.
pub fn boundary_curves(p: f64, grid_size: usize) -> Result<BoundaryCurves> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            range: "[0, 1]",
        });
    }
    if grid_size < 2 {
        return Err(Error::OutOfRange {
            name: "grid_size",
            value: grid_size as i64,
            min: 2,
            max: i64::MAX,
        });
    }
    let points = (1..=grid_size)
        .map(|i| {
            let x = i as f64 / grid_size as f64;
            BoundaryPoint {
                x,
                upper: upper_boundary(p, x),
                lower: lower_boundary(p, x),
            }
        })
        .collect();
    Ok(BoundaryCurves { p, points })
}

/// DKW half-width `sqrt(ln(2 / beta) / (2 n_e))`.
pub fn dkw_epsilon(n_e: usize, beta: f64) -> Result<f64> {
    check_unit_open("beta", beta)?;
    Ok(((2.0 / beta).ln() / (2.0 * n_e as f64)).sqrt())
}

/// Smallest `n_e` whose DKW half-width at confidence `1 - beta` is at most
/// `10^-delta`.
pub fn required_samples(delta: f64, beta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            range: "(0, inf)",
        });
    }
    check_unit_open("beta", beta)?;
    let n = ((2.0 / beta).ln() * 10f64.powf(2.0 * delta) / 2.0).ceil();
    Ok(n as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_examples() {
        let c = boundary_curves(0.3, 10).unwrap();
        let at = |x: f64| c.points.iter().find(|pt| (pt.x - x).abs() < 1e-12).unwrap();
        assert!((at(0.6).upper - 0.5).abs() < 1e-12);
        assert_eq!(at(0.2).upper, 1.0);
        assert_eq!(at(0.2).lower, 0.0);
        assert!((at(1.0).upper - 0.3).abs() < 1e-12);
        assert!((at(1.0).lower - 0.3).abs() < 1e-12);
        assert!(boundary_curves(0.3, 1).is_err());
        assert!(boundary_curves(1.3, 10).is_err());
    }

    #[test]
    fn required_samples_examples() {
        assert_eq!(required_samples(1.0, 0.1).unwrap(), 150);
        let n = required_samples(3.0, 0.1).unwrap();
        assert_eq!(n, 1_497_867);
        assert!(required_samples(2.0, 2.0).is_err());
        assert!(required_samples(0.0, 0.1).is_err());
        assert!(dkw_epsilon(n as usize, 0.1).unwrap() <= 1e-3);
    }

    #[test]
    fn full_prefix_band_is_the_pool() {
        let pop = PopulationSpec::new(100, 30).unwrap();
        let band = confidence_band(&pop, &NullModel::Hypergeometric, 0.1).unwrap();
        let last = band.row(100);
        assert_eq!((last.lower, last.upper), (30, 30));
        assert!((last.lower_proportion - 0.3).abs() < 1e-15);
        for r in &band.rows {
            assert!(r.lower <= r.upper);
        }
    }
}
