//! Independent oracles: exact rational hypergeometric laws and exhaustive
//! enumeration of arrangements. Nothing here calls into the DP engine.

#![allow(dead_code)]

use std::cmp::Ordering;

/// Non-negative rational with u128 parts; compared by cross-multiplication.
#[derive(Debug, Clone, Copy)]
pub struct Frac {
    pub num: u128,
    pub den: u128,
}

impl Frac {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den > 0);
        Self { num, den }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Frac {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frac {}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Binomial coefficient by the multiplicative formula in u128.
pub fn choose(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

/// Pascal triangle of f64 binomial coefficients up to row `n_max`.
pub fn pascal(n_max: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut row = vec![1.0; n + 1];
        for k in 1..n {
            row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
        }
        rows.push(row);
    }
    rows
}

/// Closed-form hypergeometric pmf from a Pascal table.
pub fn hyper_pmf_f64(c: &[Vec<f64>], n: usize, n_p: usize, k: usize, y: usize) -> f64 {
    if y > n_p || y > k || k - y > n - n_p {
        return 0.0;
    }
    c[n_p][y] * c[n - n_p][k - y] / c[n][k]
}

/// Exact `P(H_k = y)` for `H_k ~ Hyp(n, n_p, k)`.
pub fn hyper_pmf(n: usize, n_p: usize, k: usize, y: usize) -> Frac {
    let num = if y > n_p || y > k || k - y > n - n_p {
        0
    } else {
        choose(n_p as u64, y as u64) * choose((n - n_p) as u64, (k - y) as u64)
    };
    Frac::new(num, choose(n as u64, k as u64))
}

/// Exact `P(H_k <= y)`.
pub fn hyper_cdf(n: usize, n_p: usize, k: usize, y: i64) -> Frac {
    let den = choose(n as u64, k as u64);
    if y < 0 {
        return Frac::new(0, den);
    }
    let num = (0..=y as usize).map(|i| hyper_pmf(n, n_p, k, i).num).sum();
    Frac::new(num, den)
}

/// Exact `P(H_k >= y)`.
pub fn hyper_sf(n: usize, n_p: usize, k: usize, y: usize) -> Frac {
    let den = choose(n as u64, k as u64);
    let num = (y..=k).map(|i| hyper_pmf(n, n_p, k, i).num).sum();
    Frac::new(num, den)
}

/// Lower quantile `min { y : F(y) >= gamma }` with rational `gamma`.
pub fn hyper_quantile(n: usize, n_p: usize, k: usize, gamma: Frac) -> usize {
    (0..=k)
        .find(|&y| hyper_cdf(n, n_p, k, y as i64) >= gamma)
        .expect("cdf reaches one")
}

/// All arrangements of `n_p` ones among `n` positions.
pub fn arrangements(n: usize, n_p: usize) -> Vec<Vec<u8>> {
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == n_p)
        .map(|m| (0..n).map(|i| ((m >> i) & 1) as u8).collect())
        .collect()
}

/// Exact `Z_k = min_{j<=k} F_j(y_j)` of an arrangement.
pub fn exact_z(flags: &[u8], n_p: usize, k: usize) -> Frac {
    let n = flags.len();
    let mut y = 0i64;
    let mut z = Frac::new(1, 1);
    for (j, &f) in flags[..k].iter().enumerate() {
        y += f as i64;
        z = z.min(hyper_cdf(n, n_p, j + 1, y));
    }
    z
}

/// Exact law of `Z_k` over all equally likely arrangements, as sorted
/// (value, count) atoms plus the number of arrangements.
pub fn exact_z_law(n: usize, n_p: usize, k: usize) -> (Vec<(Frac, usize)>, usize) {
    let mut zs: Vec<Frac> = arrangements(n, n_p)
        .iter()
        .map(|a| exact_z(a, n_p, k))
        .collect();
    zs.sort();
    let total = zs.len();
    let mut atoms: Vec<(Frac, usize)> = Vec::new();
    for z in zs {
        match atoms.last_mut() {
            Some((v, c)) if *v == z => *c += 1,
            _ => atoms.push((z, 1)),
        }
    }
    (atoms, total)
}

/// Exact fairness score of an arrangement: `P(Z_k <= z_observed)`.
pub fn exact_score(flags: &[u8], n_p: usize, k: usize) -> f64 {
    let z_obs = exact_z(flags, n_p, k);
    let (atoms, total) = exact_z_law(flags.len(), n_p, k);
    let below: usize = atoms
        .iter()
        .filter(|(v, _)| *v <= z_obs)
        .map(|(_, c)| c)
        .sum();
    below as f64 / total as f64
}

/// `sup`-definition adjusted level restricted to `[0, alpha]`: the largest
/// of {atoms <= alpha} and alpha with `P(Z <= gamma) <= alpha`.
pub fn exact_alpha_c(n: usize, n_p: usize, k: usize, alpha: Frac) -> f64 {
    let (atoms, total) = exact_z_law(n, n_p, k);
    let mass_at_most = |g: Frac| -> Frac {
        Frac::new(
            atoms
                .iter()
                .filter(|(v, _)| *v <= g)
                .map(|(_, c)| *c as u128)
                .sum(),
            total as u128,
        )
    };
    if mass_at_most(alpha) <= alpha {
        return alpha.to_f64();
    }
    atoms
        .iter()
        .rev()
        .map(|(v, _)| *v)
        .filter(|v| *v <= alpha)
        .find(|v| mass_at_most(*v) <= alpha)
        .map(Frac::to_f64)
        .expect("some atom qualifies in the tested configurations")
}
