use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Refuse to enumerate configuration spaces larger than this.
pub const DEFAULT_CONFIG_CAP: u128 = 1_000_000;

/// Occupation pattern of `N_ph` indistinguishable photons over `M` modes,
/// stored as the non-decreasing list of occupied mode indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeConfig {
    modes: Vec<usize>,
    n_modes: usize,
}

impl ModeConfig {
    /// Builds the canonical form of `modes` (any order accepted).
    pub fn new(mut modes: Vec<usize>, n_modes: usize) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidArgument("a configuration needs at least one photon".into()));
        }
        if let Some(&bad) = modes.iter().find(|&&m| m >= n_modes) {
            return Err(Error::IndexOutOfRange { index: bad, size: n_modes });
        }
        modes.sort_unstable();
        Ok(Self { modes, n_modes })
    }

    /// All `n_photons` photons in mode `mode`.
    pub fn bunched(mode: usize, n_photons: usize, n_modes: usize) -> Result<Self> {
        Self::new(vec![mode; n_photons], n_modes)
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_photons(&self) -> usize {
        self.modes.len()
    }

    pub fn is_bunched(&self) -> bool {
        self.modes.first() == self.modes.last()
    }

    /// Occupation number of every mode.
    pub fn occupations(&self) -> Vec<usize> {
        let mut occ = vec![0; self.n_modes];
        for &m in &self.modes {
            occ[m] += 1;
        }
        occ
    }
}

/// `μ(c) = Π_j n_j!` over the occupation numbers of `c`.
pub fn multiplicity(c: &ModeConfig) -> u64 {
    c.modes
        .chunk_by(|a, b| a == b)
        .map(|run| (1..=run.len() as u64).product::<u64>())
        .product()
}

/// The set of all `N_ph`-photon configurations over `M` modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfigSpace {
    pub n_modes: usize,
    pub n_photons: usize,
}

impl ConfigSpace {
    pub fn new(n_modes: usize, n_photons: usize) -> Result<Self> {
        if n_modes == 0 || n_photons == 0 {
            return Err(Error::InvalidArgument(format!(
                "need M >= 1 and N_ph >= 1, got M={n_modes}, N_ph={n_photons}"
            )));
        }
        Ok(Self { n_modes, n_photons })
    }

    /// `binom(N_ph + M - 1, N_ph)`, saturating at `u128::MAX`.
    pub fn cardinality(&self) -> u128 {
        binomial(self.n_photons + self.n_modes - 1, self.n_photons)
    }

    /// Lexicographic enumeration, refused above `cap` elements.
    pub fn enumerate(&self, cap: u128) -> Result<Vec<ModeConfig>> {
        let size = self.cardinality();
        if size > cap {
            return Err(Error::ConfigSpaceTooLarge { size, cap });
        }
        let (m, n) = (self.n_modes, self.n_photons);
        let mut out = Vec::with_capacity(size as usize);
        let mut cur = vec![0usize; n];
        loop {
            out.push(ModeConfig { modes: cur.clone(), n_modes: m });
            // Advance to the next non-decreasing tuple.
            let Some(pos) = cur.iter().rposition(|&v| v + 1 < m) else {
                break;
            };
            let next = cur[pos] + 1;
            cur[pos..].iter_mut().for_each(|v| *v = next);
        }
        Ok(out)
    }
}

/// All canonical configurations, capped at [`DEFAULT_CONFIG_CAP`].
pub fn enumerate_configs(n_modes: usize, n_photons: usize) -> Result<Vec<ModeConfig>> {
    ConfigSpace::new(n_modes, n_photons)?.enumerate(DEFAULT_CONFIG_CAP)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}
