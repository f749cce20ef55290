use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Binary phase layer: `σ_j = e^{iφ_j} ∈ {-1, +1}` for each of the `M` modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::InvalidArgument("spin configuration must be non-empty".into()));
        }
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument(format!("spin value {bad} is not ±1")));
        }
        Ok(Self(spins))
    }

    pub fn all_up(m: usize) -> Self {
        Self(vec![1; m])
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        Self((0..m).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    /// Spins from the sign of real numbers, with `sign(0) = +1`.
    pub fn from_signs(values: impl IntoIterator<Item = f64>) -> Self {
        Self(values.into_iter().map(|v| if v < 0.0 { -1 } else { 1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    /// Pack into 64-bit words, bit set for `-1`.
    pub fn pack_into(&self, words: &mut [u64]) {
        words.iter_mut().for_each(|w| *w = 0);
        for (i, &s) in self.0.iter().enumerate() {
            if s < 0 {
                words[i / 64] |= 1 << (i % 64);
            }
        }
    }

    pub fn unpack(words: &[u64], m: usize) -> Self {
        Self(
            (0..m)
                .map(|i| if words[i / 64] >> (i % 64) & 1 == 1 { -1 } else { 1 })
                .collect(),
        )
    }
}

pub(crate) fn words_for(m: usize) -> usize {
    m.div_ceil(64)
}
