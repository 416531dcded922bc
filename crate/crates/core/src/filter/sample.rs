use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::contains_latin;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub first: String,
    pub second: String,
    pub label: bool,
}

impl LabeledPair {
    fn is_latin_free(&self) -> bool {
        !contains_latin(&self.first) && !contains_latin(&self.second)
    }
}

/// Drops pairs with any Latin letter, then draws exactly `n_pos` positive and
/// `n_neg` negative pairs uniformly without replacement. The result keeps the
/// input order.
pub fn balanced_sample<I>(pairs: I, n_pos: usize, n_neg: usize, seed: u64) -> Result<Vec<LabeledPair>>
where
    I: IntoIterator<Item = LabeledPair>,
{
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, p) in pairs.into_iter().enumerate() {
        if !p.is_latin_free() {
            continue;
        }
        if p.label {
            pos.push((i, p));
        } else {
            neg.push((i, p));
        }
    }
    for (label, pool, needed) in [("positive", &pos, n_pos), ("negative", &neg, n_neg)] {
        if pool.len() < needed {
            return Err(Error::InsufficientPairs {
                label,
                needed,
                available: pool.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<(usize, LabeledPair)> = Vec::with_capacity(n_pos + n_neg);
    for (mut pool, n) in [(pos, n_pos), (neg, n_neg)] {
        let mut chosen = index::sample(&mut rng, pool.len(), n).into_vec();
        chosen.sort_unstable();
        for &c in chosen.iter().rev() {
            picked.push(pool.swap_remove(c));
        }
    }
    picked.sort_unstable_by_key(|(i, _)| *i);
    Ok(picked.into_iter().map(|(_, p)| p).collect())
}
