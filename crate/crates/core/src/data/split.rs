use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Repeated random train/test partitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub seed: u64,
    pub test_fraction: f64,
    pub n_repeats: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            test_fraction: 0.1,
            n_repeats: 20,
        }
    }
}

/// Train and test row indices, each ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// splitmix64 finaliser, used to derive independent per-repeat seeds.
pub(crate) fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Domain {
                what: "test fraction",
                value: self.test_fraction,
            });
        }
        if self.n_repeats == 0 {
            return Err(Error::Config("at least one repeat is required".into()));
        }
        Ok(())
    }

    /// Seed for everything random inside repeat `repeat`.
    pub fn repeat_seed(&self, repeat: usize) -> u64 {
        mix(self.seed, repeat as u64 + 1)
    }

    /// Partition of `n` rows for repeat `repeat`; depends only on
    /// `(seed, repeat, n, test_fraction)`.
    pub fn split(&self, n: usize, repeat: usize) -> Result<Split> {
        self.validate()?;
        if n < 2 {
            return Err(Error::Data(format!("cannot split {n} rows")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.repeat_seed(repeat));
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let n_test = ((n as f64 * self.test_fraction).round() as usize).clamp(1, n - 1);
        let mut test = idx.split_off(n - n_test);
        idx.sort_unstable();
        test.sort_unstable();
        Ok(Split { train: idx, test })
    }
}
