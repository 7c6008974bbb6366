//! Seeded generation of rankings under the null models.
//!
//! Every ranking is drawn from its own ChaCha8 stream: the key is expanded
//! from the 64-bit master seed with `SeedableRng::seed_from_u64` and the
//! ChaCha stream id is the substream index. A batch is therefore a pure
//! function of `(model, pop, count, master_seed)` no matter how the work is
//! split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::null_model::{NullModel, PopulationSpec};

/// Ordered group sequence, position 0 = top. `true` marks a protected
/// candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    groups: Vec<bool>,
    ids: Option<Vec<String>>,
}

impl Ranking {
    pub fn new(groups: Vec<bool>) -> Self {
        Self { groups, ids: None }
    }

    /// From 0/1 flags; any other value is rejected.
    pub fn from_flags(flags: &[u8]) -> Result<Self> {
        let groups = flags
            .iter()
            .map(|&f| match f {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::OutOfRange {
                    name: "group",
                    value: f as i64,
                    min: 0,
                    max: 1,
                }),
            })
            .collect::<Result<_>>()?;
        Ok(Self::new(groups))
    }

    pub fn with_ids(groups: Vec<bool>, ids: Vec<String>) -> Result<Self> {
        if ids.len() != groups.len() {
            return Err(Error::InvalidIds(format!(
                "{} ids for {} positions",
                ids.len(),
                groups.len()
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidIds(format!("duplicate id {id:?}")));
            }
        }
        Ok(Self {
            groups,
            ids: Some(ids),
        })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[bool] {
        &self.groups
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn protected_count(&self) -> usize {
        self.groups.iter().filter(|&&g| g).count()
    }

    /// Groups as 0/1 flags.
    pub fn flags(&self) -> Vec<u8> {
        self.groups.iter().map(|&g| g as u8).collect()
    }

    /// Population implied by the ranking's composition.
    pub fn population(&self) -> Result<PopulationSpec> {
        PopulationSpec::new(self.len(), self.protected_count())
    }

    /// Errors unless length and protected count match `pop`.
    pub fn check_against(&self, pop: &PopulationSpec) -> Result<()> {
        let protected = self.protected_count();
        if self.len() != pop.n() || protected != pop.n_protected() {
            return Err(Error::InconsistentRanking {
                len: self.len(),
                protected,
                n: pop.n(),
                n_p: pop.n_protected(),
            });
        }
        Ok(())
    }

    pub(crate) fn into_parts(self) -> (Vec<bool>, Option<Vec<String>>) {
        (self.groups, self.ids)
    }
}

/// Names one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub substream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, substream_index: u64) -> Self {
        Self {
            master_seed,
            substream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.substream_index);
        rng
    }
}

/// Writes one ranking drawn under `model` into `out` (resized to `n`).
pub(crate) fn fill_ranking<R: Rng + ?Sized>(
    model: &NullModel,
    pop: &PopulationSpec,
    rng: &mut R,
    out: &mut Vec<bool>,
) {
    let n = pop.n();
    let n_p = pop.n_protected();
    out.clear();
    match model {
        NullModel::Hypergeometric => {
            out.resize(n, false);
            out[..n_p].fill(true);
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                out.swap(i, j);
            }
        }
        NullModel::FiniteBinomial { f } => {
            let (mut protected_left, mut other_left) = (n_p, n - n_p);
            for _ in 0..n {
                let pick = if other_left == 0 {
                    true
                } else if protected_left == 0 {
                    false
                } else {
                    rng.random::<f64>() < *f
                };
                if pick {
                    protected_left -= 1;
                } else {
                    other_left -= 1;
                }
                out.push(pick);
            }
        }
        NullModel::WeightedHypergeometric { .. } => {
            let (mut protected_left, mut other_left) = (n_p, n - n_p);
            for _ in 0..n {
                let (up, _) = model.step(protected_left, other_left);
                let pick = up >= 1.0 || (up > 0.0 && rng.random::<f64>() < up);
                if pick {
                    protected_left -= 1;
                } else {
                    other_left -= 1;
                }
                out.push(pick);
            }
        }
    }
}

/// One ranking from the stream named by `seed`.
pub fn sample_ranking(model: &NullModel, pop: &PopulationSpec, seed: SeedSpec) -> Result<Ranking> {
    model.validate()?;
    let mut groups = Vec::with_capacity(pop.n());
    fill_ranking(model, pop, &mut seed.rng(), &mut groups);
    Ok(Ranking::new(groups))
}

/// `count` rankings; ranking `i` comes from substream `i`.
pub fn sample_batch(
    model: &NullModel,
    pop: &PopulationSpec,
    count: usize,
    master_seed: u64,
) -> Result<Vec<Ranking>> {
    model.validate()?;
    if count == 0 {
        return Err(Error::OutOfRange {
            name: "count",
            value: 0,
            min: 1,
            max: i64::MAX,
        });
    }
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut groups = Vec::with_capacity(pop.n());
            fill_ranking(
                model,
                pop,
                &mut SeedSpec::new(master_seed, i).rng(),
                &mut groups,
            );
            Ranking::new(groups)
        })
        .collect())
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool
/// when `workers` is `None`.
pub fn with_workers<T, F>(workers: Option<usize>, f: F) -> T
where
    F: FnOnce() -> T + Send,
    T: Send,
{
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}
