//! Small numeric helpers shared by the probability code.

/// Relative tolerance applied when a probability is compared to a level.
///
/// Exact laws are rational, so two routes to the same value (DP vs closed
/// form, top-k vs bottom-(n-k)) can land a few ulps apart. Comparisons that
/// decide a test treat values this close (relative to the level) as equal.
pub const PROB_TOL: f64 = 1e-12;

/// `p <= level` up to [`PROB_TOL`]. A p-value at the level rejects.
#[inline]
pub fn at_most(p: f64, level: f64) -> bool {
    p <= level + PROB_TOL * level.abs()
}

/// `p >= level` up to [`PROB_TOL`].
#[inline]
pub fn at_least(p: f64, level: f64) -> bool {
    p >= level - PROB_TOL * level.abs()
}

/// `p < level` by more than the tie tolerance.
#[inline]
pub fn strictly_below(p: f64, level: f64) -> bool {
    !at_least(p, level)
}

/// Compensated (Kahan) running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

pub(crate) fn check_unit_open(name: &'static str, value: f64) -> crate::Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(crate::Error::InvalidParameter {
            name,
            value,
            range: "(0, 1)",
        })
    }
}
