use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default held-out fraction: 48 of 156 subjects.
pub const DEFAULT_TEST_FRACTION: f64 = 4.0 / 13.0;
pub const DEFAULT_VAL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub val_fraction_of_train: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: DEFAULT_TEST_FRACTION,
            val_fraction_of_train: DEFAULT_VAL_FRACTION,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("test_fraction", self.test_fraction),
            ("val_fraction_of_train", self.val_fraction_of_train),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {f}")));
            }
        }
        Ok(())
    }
}

/// Disjoint index sets; each is sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Training plus validation indices, i.e. everything outside the test set.
    pub fn non_test(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.train.iter().chain(&self.val).copied().collect();
        v.sort_unstable();
        v
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// `(train, val, test)` sizes: test rounded first, validation from the rest.
pub fn split_counts(n: usize, spec: &SplitSpec) -> Result<(usize, usize, usize)> {
    spec.validate()?;
    let test = round_half_up(n as f64 * spec.test_fraction).min(n);
    let rest = n - test;
    let val = round_half_up(rest as f64 * spec.val_fraction_of_train).min(rest);
    let train = rest - val;
    if train == 0 || val == 0 || test == 0 {
        return Err(Error::Data(format!(
            "degenerate split of {n} samples: train {train}, val {val}, test {test}"
        )));
    }
    Ok((train, val, test))
}

/// Seeded shuffle of `0..n` partitioned into test, validation and training.
pub fn split(n: usize, spec: &SplitSpec) -> Result<Split> {
    if n < 10 {
        return Err(Error::Data(format!("need at least 10 samples to split, got {n}")));
    }
    let (_, val, test) = split_counts(n, spec)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut test_idx = idx[..test].to_vec();
    let mut val_idx = idx[test..test + val].to_vec();
    let mut train_idx = idx[test + val..].to_vec();
    test_idx.sort_unstable();
    val_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok(Split {
        train: train_idx,
        val: val_idx,
        test: test_idx,
    })
}
