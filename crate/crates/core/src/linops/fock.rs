use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{multiplicity, permanent, submatrix, ComplexMatrix, ModeConfig};
use crate::{Error, Result, SpinConfig};

/// Pure state `Σ_c a_c |c⟩` of `N_ph` indistinguishable photons over `M` modes.
/// Configurations absent from the map have zero amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct FockSuperposition {
    n_modes: usize,
    n_photons: usize,
    amplitudes: BTreeMap<ModeConfig, Complex64>,
}

impl FockSuperposition {
    /// Builds a state, rejecting configurations of the wrong shape and
    /// amplitudes that are not normalized to within `1e-10`.
    pub fn new(
        n_modes: usize,
        n_photons: usize,
        amplitudes: impl IntoIterator<Item = (ModeConfig, Complex64)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (c, a) in amplitudes {
            if c.n_modes() != n_modes || c.n_photons() != n_photons {
                return Err(Error::Dimension(format!(
                    "configuration {:?} does not live in M={n_modes}, N_ph={n_photons}",
                    c.modes()
                )));
            }
            if map.insert(c, a).is_some() {
                return Err(Error::InvalidArgument("duplicate configuration".into()));
            }
        }
        let state = Self { n_modes, n_photons, amplitudes: map };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("state norm² is {norm}, expected 1")));
        }
        Ok(state)
    }

    /// `|c⟩` with unit amplitude.
    pub fn basis(c: ModeConfig) -> Self {
        let (n_modes, n_photons) = (c.n_modes(), c.n_photons());
        Self { n_modes, n_photons, amplitudes: BTreeMap::from([(c, Complex64::new(1.0, 0.0))]) }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_photons(&self) -> usize {
        self.n_photons
    }

    pub fn amplitude(&self, c: &ModeConfig) -> Complex64 {
        self.amplitudes.get(c).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeConfig, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }
}

/// `⟨k|U|c⟩ = Perm(U_{k|c}) / √(μ(c) μ(k))`.
pub fn scattering_amplitude(u: &ComplexMatrix, c: &ModeConfig, k: &ModeConfig) -> Result<Complex64> {
    let perm = permanent(&submatrix(u, k, c)?)?;
    Ok(perm / ((multiplicity(c) * multiplicity(k)) as f64).sqrt())
}

/// `|⟨k|U|c⟩|²`.
pub fn transition_probability(u: &ComplexMatrix, c: &ModeConfig, k: &ModeConfig) -> Result<f64> {
    Ok(scattering_amplitude(u, c, k)?.norm_sqr())
}

/// State after a DFT interferometer fed with all photons in mode 0, in
/// closed form: `a_x = √(N_ph! / (M^{N_ph} μ(x)))`.
pub fn dft_input_amplitudes(n_modes: usize, n_photons: usize) -> Result<FockSuperposition> {
    let configs = super::enumerate_configs(n_modes, n_photons)?;
    let amplitudes = configs
        .into_iter()
        .map(|x| {
            let a = dft_amplitude(&x, n_modes, n_photons);
            (x, Complex64::new(a, 0.0))
        })
        .collect::<BTreeMap<_, _>>();
    Ok(FockSuperposition { n_modes, n_photons, amplitudes })
}

/// Closed-form DFT amplitude of one configuration.
pub(crate) fn dft_amplitude(x: &ModeConfig, n_modes: usize, n_photons: usize) -> f64 {
    // N!/M^N computed as a running product to stay in range for large M.
    let ratio: f64 = (1..=n_photons).map(|i| i as f64 / n_modes as f64).product();
    (ratio / multiplicity(x) as f64).sqrt()
}

/// `a'_c = a_c Π_j σ_{c_j}`.
pub fn apply_phase_layer(psi: &FockSuperposition, sigma: &SpinConfig) -> Result<FockSuperposition> {
    if sigma.len() != psi.n_modes {
        return Err(Error::Dimension(format!(
            "{} spins for a {}-mode state",
            sigma.len(),
            psi.n_modes
        )));
    }
    let amplitudes = psi
        .amplitudes
        .iter()
        .map(|(c, &a)| {
            let sign: i32 = c.modes().iter().map(|&j| sigma.get(j) as i32).product();
            (c.clone(), if sign < 0 { -a } else { a })
        })
        .collect();
    Ok(FockSuperposition { n_modes: psi.n_modes, n_photons: psi.n_photons, amplitudes })
}

/// `⟨k|S|ψ⟩ = Σ_c a_c ⟨k|S|c⟩`, the exact superposition route.
pub fn evolve_superposition(s: &ComplexMatrix, psi: &FockSuperposition, k: &ModeConfig) -> Result<Complex64> {
    if s.rows() != psi.n_modes || !s.is_square() {
        return Err(Error::Dimension(format!(
            "{}x{} scattering matrix for a {}-mode state",
            s.rows(),
            s.cols(),
            psi.n_modes
        )));
    }
    if k.n_modes() != psi.n_modes || k.n_photons() != psi.n_photons {
        return Err(Error::Dimension("output configuration does not match the state".into()));
    }
    let support = psi.amplitudes.len() as u128;
    if support > super::DEFAULT_CONFIG_CAP {
        return Err(Error::ConfigSpaceTooLarge { size: support, cap: super::DEFAULT_CONFIG_CAP });
    }
    psi.amplitudes
        .iter()
        .filter(|(_, a)| **a != Complex64::default())
        .try_fold(Complex64::default(), |acc, (c, &a)| Ok(acc + a * scattering_amplitude(s, c, k)?))
}
