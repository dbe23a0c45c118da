//! Reproducible random streams.
//!
//! A run draws from several independent lanes (marks, drift clock, one
//! lane per truncation shell), each a ChaCha8 stream keyed by the seed and a
//! hash of `(stream, lane)`. Separate lanes keep the randomness of one
//! ingredient unchanged when another is switched on or off.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ALGORITHM: &str = "chacha8";

pub(crate) const LANE_AUX: u64 = 0;
pub(crate) const LANE_DRIFT: u64 = 1;
pub(crate) const LANE_SHELL0: u64 = 2;
pub(crate) const LANE_INITIAL: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    #[serde(default = "default_algorithm")]
    pub algorithm: String,
}

fn default_algorithm() -> String {
    ALGORITHM.to_string()
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        RngSpec { seed, stream: 0, algorithm: default_algorithm() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithm != ALGORITHM {
            return Err(Error::Config(format!("unknown generator `{}`; supported: {ALGORITHM}", self.algorithm)));
        }
        Ok(())
    }

    /// Spec of the `run`-th member of a batch.
    pub fn for_run(&self, run: u64) -> RngSpec {
        RngSpec {
            seed: self.seed,
            stream: splitmix(self.stream ^ splitmix(run.wrapping_add(0x5851_f42d_4c95_7f2d))),
            algorithm: self.algorithm.clone(),
        }
    }

    pub fn lane(&self, lane: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(splitmix(self.stream.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ splitmix(lane)));
        rng
    }
}
