//! The photonic Hopfield Hamiltonian `H[σ|Λ] = -M Pr(Λ|σ)`.
//!
//! Two evaluation routes exist. The exact route prepares the input state,
//! applies the phase layer and sums permanent amplitudes over `Λ`; it works
//! for any input state and any output set but costs `O(|C_M| |Λ|)`
//! permanents. The fast route applies when the input is DFT-prepared and `Λ`
//! is a set of fully-bunched channels: then
//!
//! ```text
//! Pr(Λ|σ) = M^{-N} Σ_{μ ∈ Λ} |f_μ|^{2N},    f_μ = Σ_j S_{μ,j} σ_j
//! ```
//!
//! and a [`FieldCache`] holding the `f_μ` makes a single spin flip `O(|Λ|)`.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::linops::{
    apply_phase_layer, dft_input_amplitudes, evolve_superposition, multiplicity, permanent, submatrix,
    ComplexMatrix, ConfigSpace, FockSuperposition, ModeConfig, DEFAULT_CONFIG_CAP,
};
use crate::seed::StreamRng;
use crate::{Error, Result};

pub use crate::SpinConfig;

/// Unitarity tolerance for scattering matrices.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// The detected output channels `Λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OutputSet {
    Explicit(Vec<ModeConfig>),
    /// Fully-bunched channels, one per listed output mode.
    BunchedSubset(Vec<usize>),
}

impl OutputSet {
    pub fn len(&self) -> usize {
        match self {
            Self::Explicit(c) => c.len(),
            Self::BunchedSubset(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The channels as configurations.
    pub fn configs(&self, n_modes: usize, n_photons: usize) -> Result<Vec<ModeConfig>> {
        match self {
            Self::Explicit(c) => Ok(c.clone()),
            Self::BunchedSubset(modes) => {
                modes.iter().map(|&m| ModeConfig::bunched(m, n_photons, n_modes)).collect()
            }
        }
    }
}

/// A seed-controlled uniformly random ordering of the `M` modes. Taking its
/// first `P` entries gives a uniformly random bunched output set, and sets
/// for increasing `P` are nested.
pub fn random_mode_order(n_modes: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_modes).collect();
    order.shuffle(&mut StreamRng::seed_from_u64(seed));
    order
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputState {
    /// All photons in mode 0 sent through the DFT interferometer.
    DftUniform,
    Explicit(FockSuperposition),
}

/// One Hopfield Hamiltonian: scattering matrix, input state and output set.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    scattering: ComplexMatrix,
    output_set: OutputSet,
    n_modes: usize,
    n_photons: usize,
    input: InputState,
    fast: bool,
    /// Spin-major copy of the `Λ` columns, `columns[i * P + k] = S[Λ_k, i]`,
    /// filled only for the fast path.
    columns: Vec<Complex64>,
    exact_input: OnceLock<FockSuperposition>,
}

impl ModelInstance {
    /// Checks shapes, index ranges, distinctness and unitarity of `s`. The
    /// storage-ratio bounds are checked separately by
    /// [`check_storage_ratio`](Self::check_storage_ratio) so that the trivial
    /// sets `Λ = ∅` and `Λ = C_M` stay representable.
    pub fn new(s: ComplexMatrix, output_set: OutputSet, n_photons: usize, input: InputState) -> Result<Self> {
        if !s.is_square() || s.rows() == 0 {
            return Err(Error::Dimension(format!("scattering matrix is {}x{}", s.rows(), s.cols())));
        }
        if n_photons == 0 {
            return Err(Error::InvalidArgument("need at least one photon".into()));
        }
        let n_modes = s.rows();
        let defect = s.unitarity_defect();
        if defect > UNITARITY_TOLERANCE {
            return Err(Error::InvalidArgument(format!("scattering matrix is not unitary (defect {defect:e})")));
        }
        match &output_set {
            OutputSet::Explicit(configs) => {
                for c in configs {
                    if c.n_modes() != n_modes || c.n_photons() != n_photons {
                        return Err(Error::Dimension(format!("output configuration {:?} has the wrong shape", c.modes())));
                    }
                }
                let mut sorted = configs.clone();
                sorted.sort();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidArgument("output configurations must be distinct".into()));
                }
            }
            OutputSet::BunchedSubset(modes) => {
                if let Some(&bad) = modes.iter().find(|&&m| m >= n_modes) {
                    return Err(Error::IndexOutOfRange { index: bad, size: n_modes });
                }
                let mut sorted = modes.clone();
                sorted.sort_unstable();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidArgument("bunched output modes must be distinct".into()));
                }
            }
        }
        if let InputState::Explicit(psi) = &input {
            if psi.n_modes() != n_modes || psi.n_photons() != n_photons {
                return Err(Error::Dimension("input state does not match M and N_ph".into()));
            }
        }
        let fast = matches!((&output_set, &input), (OutputSet::BunchedSubset(_), InputState::DftUniform));
        let columns = match (&output_set, &input) {
            (OutputSet::BunchedSubset(modes), InputState::DftUniform) => (0..n_modes)
                .flat_map(|i| modes.iter().map(move |&mu| (mu, i)))
                .map(|idx| s[idx])
                .collect(),
            _ => Vec::new(),
        };
        Ok(Self { scattering: s, output_set, n_modes, n_photons, input, fast, columns, exact_input: OnceLock::new() })
    }

    /// DFT-prepared input with `Λ` the bunched channels on `modes`, with the
    /// storage ratio checked.
    pub fn bunched(s: ComplexMatrix, modes: Vec<usize>, n_photons: usize) -> Result<Self> {
        let inst = Self::new(s, OutputSet::BunchedSubset(modes), n_photons, InputState::DftUniform)?;
        inst.check_storage_ratio()?;
        Ok(inst)
    }

    /// `α ∈ (0, 1)`, `P < |C_M|` for explicit sets and `P ≤ M` for bunched ones.
    pub fn check_storage_ratio(&self) -> Result<()> {
        let p = self.output_set.len();
        let alpha = self.alpha();
        if p == 0 || !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("storage ratio α = {alpha} outside (0, 1)")));
        }
        match &self.output_set {
            OutputSet::Explicit(_) => {
                let all = ConfigSpace::new(self.n_modes, self.n_photons)?.cardinality();
                if p as u128 >= all {
                    return Err(Error::InvalidArgument(format!("|Λ| = {p} must be below |C_M| = {all}")));
                }
            }
            OutputSet::BunchedSubset(_) if p > self.n_modes => {
                return Err(Error::InvalidArgument(format!("{p} bunched channels exceed M = {}", self.n_modes)));
            }
            OutputSet::BunchedSubset(_) => {}
        }
        Ok(())
    }

    pub fn scattering(&self) -> &ComplexMatrix {
        &self.scattering
    }

    pub fn output_set(&self) -> &OutputSet {
        &self.output_set
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_photons(&self) -> usize {
        self.n_photons
    }

    pub fn input(&self) -> &InputState {
        &self.input
    }

    /// `α = P / M^{N_ph}`.
    pub fn alpha(&self) -> f64 {
        self.output_set.len() as f64 / (self.n_modes as f64).powi(self.n_photons as i32)
    }

    /// True when the fully-bunched formula and field caches apply.
    pub fn uses_fast_path(&self) -> bool {
        self.fast
    }

    pub fn input_amplitude(&self, x: &ModeConfig) -> Complex64 {
        match &self.input {
            InputState::DftUniform => {
                Complex64::new(crate::linops::fock_dft_amplitude(x, self.n_modes, self.n_photons), 0.0)
            }
            InputState::Explicit(psi) => psi.amplitude(x),
        }
    }

    /// The input state as an explicit superposition (enumerated once).
    pub fn input_state(&self) -> Result<&FockSuperposition> {
        if let Some(psi) = self.exact_input.get() {
            return Ok(psi);
        }
        let psi = match &self.input {
            InputState::DftUniform => dft_input_amplitudes(self.n_modes, self.n_photons)?,
            InputState::Explicit(psi) => psi.clone(),
        };
        Ok(self.exact_input.get_or_init(|| psi))
    }

    /// `S[Λ_k, i]` for all `k`, for the fast path.
    #[inline]
    pub(crate) fn lambda_column(&self, i: usize) -> &[Complex64] {
        let p = self.output_set.len();
        &self.columns[i * p..(i + 1) * p]
    }

    fn check_spins(&self, sigma: &SpinConfig) -> Result<()> {
        if sigma.len() != self.n_modes {
            return Err(Error::Dimension(format!("{} spins for M = {}", sigma.len(), self.n_modes)));
        }
        Ok(())
    }
}

/// `J_Λ(x, y) = a_x a*_y / √(μ(x)μ(y)) Σ_{k∈Λ} Perm(S_{k|x}) Perm*(S_{k|y}) / μ(k)`.
pub fn coupling_tensor(inst: &ModelInstance, x: &ModeConfig, y: &ModeConfig) -> Result<Complex64> {
    for c in [x, y] {
        if c.n_modes() != inst.n_modes || c.n_photons() != inst.n_photons {
            return Err(Error::Dimension(format!("configuration {:?} has the wrong shape", c.modes())));
        }
    }
    let s = &inst.scattering;
    let mut sum = Complex64::default();
    for k in inst.output_set.configs(inst.n_modes, inst.n_photons)? {
        let px = permanent(&submatrix(s, &k, x)?)?;
        let py = permanent(&submatrix(s, &k, y)?)?;
        sum += px * py.conj() / multiplicity(&k) as f64;
    }
    let prefactor = inst.input_amplitude(x) * inst.input_amplitude(y).conj()
        / ((multiplicity(x) * multiplicity(y)) as f64).sqrt();
    Ok(prefactor * sum)
}

/// `Pr(Λ|σ) = Σ_{k∈Λ} |⟨k|S|ψ'⟩|²` with `ψ'` the phase-modulated input.
pub fn output_probability_exact(inst: &ModelInstance, sigma: &SpinConfig) -> Result<f64> {
    inst.check_spins(sigma)?;
    let psi = apply_phase_layer(inst.input_state()?, sigma)?;
    inst.output_set
        .configs(inst.n_modes, inst.n_photons)?
        .iter()
        .try_fold(0.0, |acc, k| Ok(acc + evolve_superposition(&inst.scattering, &psi, k)?.norm_sqr()))
}

/// `Pr(Λ|σ) = Σ_{x,y} J_Λ(x, y) Π_j σ_{x_j} σ_{y_j}`, the coupling-tensor
/// double sum. Quadratic in `|C_M|`; intended for cross-checks on small systems.
pub fn output_probability_couplings(inst: &ModelInstance, sigma: &SpinConfig) -> Result<f64> {
    inst.check_spins(sigma)?;
    let space = ConfigSpace::new(inst.n_modes, inst.n_photons)?;
    let configs = space.enumerate(DEFAULT_CONFIG_CAP)?;
    let lambda = inst.output_set.configs(inst.n_modes, inst.n_photons)?;
    let s = &inst.scattering;

    // perms[k][x] = Perm(S_{k|x}), weights[x] = a_x / √μ(x), signs[x] = Π σ_{x_j}.
    let perms = lambda
        .iter()
        .map(|k| configs.iter().map(|x| permanent(&submatrix(s, k, x)?)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<Complex64> =
        configs.iter().map(|x| inst.input_amplitude(x) / (multiplicity(x) as f64).sqrt()).collect();
    let signs: Vec<f64> = configs
        .iter()
        .map(|x| x.modes().iter().map(|&j| sigma.get(j) as f64).product())
        .collect();
    let mu_k: Vec<f64> = lambda.iter().map(|k| multiplicity(k) as f64).collect();

    let mut total = Complex64::default();
    for xi in 0..configs.len() {
        for yi in 0..configs.len() {
            let hebb: Complex64 = perms
                .iter()
                .zip(&mu_k)
                .map(|(row, &mu)| row[xi] * row[yi].conj() / mu)
                .sum();
            let j = weights[xi] * weights[yi].conj() * hebb;
            total += j * (signs[xi] * signs[yi]);
        }
    }
    Ok(total.re)
}

/// `f_k = Σ_j S_{k,j} σ_j` for every output mode.
pub fn mode_fields(s: &ComplexMatrix, sigma: &SpinConfig) -> Result<Vec<Complex64>> {
    if sigma.len() != s.cols() {
        return Err(Error::Dimension(format!("{} spins for {} columns", sigma.len(), s.cols())));
    }
    Ok((0..s.rows()).map(|k| field(s, sigma, k)).collect())
}

#[inline]
fn field(s: &ComplexMatrix, sigma: &SpinConfig, k: usize) -> Complex64 {
    s.row(k)
        .iter()
        .zip(sigma.as_slice())
        .fold(Complex64::default(), |acc, (&z, &sg)| if sg > 0 { acc + z } else { acc - z })
}

#[inline]
fn bunched_sum(fields: impl Iterator<Item = Complex64>, n_photons: usize, scale: f64) -> f64 {
    fields.map(|f| f.norm_sqr().powi(n_photons as i32)).sum::<f64>() * scale
}

fn probability_scale(n_modes: usize, n_photons: usize) -> f64 {
    (n_modes as f64).powi(-(n_photons as i32))
}

/// `M^{-N} Σ_{μ ∈ modes} |Σ_j S_{μ,j} σ_j|^{2N}`: the output probability of
/// the fully-bunched channels for the DFT-prepared input.
pub fn fully_bunched_probability(
    s: &ComplexMatrix,
    sigma: &SpinConfig,
    modes: &[usize],
    n_photons: usize,
) -> Result<f64> {
    Ok(FieldCache::new(s, sigma, modes, n_photons)?.probability())
}

/// Cached fields `f_μ` for the bunched output modes of one replica.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCache {
    modes: Vec<usize>,
    fields: Vec<Complex64>,
    n_photons: usize,
    scale: f64,
}

impl FieldCache {
    pub fn new(s: &ComplexMatrix, sigma: &SpinConfig, modes: &[usize], n_photons: usize) -> Result<Self> {
        if sigma.len() != s.cols() || !s.is_square() {
            return Err(Error::Dimension(format!("{} spins for a {}x{} matrix", sigma.len(), s.rows(), s.cols())));
        }
        if let Some(&bad) = modes.iter().find(|&&m| m >= s.rows()) {
            return Err(Error::IndexOutOfRange { index: bad, size: s.rows() });
        }
        Ok(Self {
            modes: modes.to_vec(),
            fields: modes.iter().map(|&k| field(s, sigma, k)).collect(),
            n_photons,
            scale: probability_scale(s.rows(), n_photons),
        })
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn fields(&self) -> &[Complex64] {
        &self.fields
    }

    pub fn probability(&self) -> f64 {
        bunched_sum(self.fields.iter().copied(), self.n_photons, self.scale)
    }

    /// Flips `σ_i` in place, updating `f_k ← f_k - 2 S_{k,i} σ_i`, and returns
    /// the change in probability.
    pub fn flip_update(&mut self, s: &ComplexMatrix, sigma: &mut SpinConfig, i: usize) -> Result<f64> {
        if i >= sigma.len() {
            return Err(Error::IndexOutOfRange { index: i, size: sigma.len() });
        }
        let column: Vec<Complex64> = self.modes.iter().map(|&k| s[(k, i)]).collect();
        let before = self.probability();
        self.apply(&column, sigma.get(i));
        sigma.flip(i);
        Ok(self.probability() - before)
    }

    /// Probability after flipping a spin currently equal to `spin` whose
    /// column restricted to the cached modes is `column`. Leaves the cache untouched.
    #[inline]
    pub(crate) fn proposed_probability(&self, column: &[Complex64], spin: i8) -> f64 {
        let step = 2.0 * spin as f64;
        bunched_sum(self.fields.iter().zip(column).map(|(&f, &c)| f - c * step), self.n_photons, self.scale)
    }

    #[inline]
    pub(crate) fn apply(&mut self, column: &[Complex64], spin: i8) {
        let step = 2.0 * spin as f64;
        self.fields.iter_mut().zip(column).for_each(|(f, &c)| *f -= c * step);
    }

    /// Largest `|cached - recomputed|` over the cached fields.
    pub fn max_deviation(&self, s: &ComplexMatrix, sigma: &SpinConfig) -> f64 {
        self.modes
            .iter()
            .zip(&self.fields)
            .map(|(&k, f)| (field(s, sigma, k) - f).norm())
            .fold(0.0, f64::max)
    }

    /// Recomputes every field from scratch.
    pub fn refresh(&mut self, s: &ComplexMatrix, sigma: &SpinConfig) {
        for (f, &k) in self.fields.iter_mut().zip(&self.modes) {
            *f = field(s, sigma, k);
        }
    }
}

/// `Pr(Λ|σ)` by the fast path when available, else exactly.
pub fn output_probability(inst: &ModelInstance, sigma: &SpinConfig) -> Result<f64> {
    if inst.uses_fast_path() {
        inst.check_spins(sigma)?;
        let OutputSet::BunchedSubset(modes) = &inst.output_set else {
            unreachable!("fast path implies a bunched output set")
        };
        fully_bunched_probability(&inst.scattering, sigma, modes, inst.n_photons)
    } else {
        output_probability_exact(inst, sigma)
    }
}

/// `H[σ|Λ] = -M Pr(Λ|σ)`.
pub fn energy(inst: &ModelInstance, sigma: &SpinConfig) -> Result<f64> {
    Ok(-(inst.n_modes as f64) * output_probability(inst, sigma)?)
}

fn check_pair(k: &ModeConfig) -> Result<()> {
    if k.n_photons() != 2 {
        return Err(Error::UnsupportedPhotonNumber(k.n_photons()));
    }
    Ok(())
}

/// `m_k = (1/M) σᵀ X^{(k)} σ` with `X^{(k)}_{x1,x2} = Perm(S_{k|x})`, evaluated
/// in factored form `(2/M) f_{k1} f_{k2}`.
pub fn memory_overlap(s: &ComplexMatrix, sigma: &SpinConfig, k: &ModeConfig) -> Result<Complex64> {
    check_pair(k)?;
    if sigma.len() != s.cols() || k.n_modes() != s.rows() {
        return Err(Error::Dimension("spins, configuration and matrix disagree on M".into()));
    }
    let (k1, k2) = (k.modes()[0], k.modes()[1]);
    Ok(field(s, sigma, k1) * field(s, sigma, k2) * (2.0 / s.rows() as f64))
}

/// `m̂_k = m_k / √(Σ_{k1,k2} |m_{k1,k2}|²)` over all ordered pairs.
///
/// The denominator factorizes as `(2/M) Σ_j |f_j|²`, so
/// `m̂_k = f_{k1} f_{k2} / Σ_j |f_j|²`.
pub fn normalized_memory_overlap(s: &ComplexMatrix, sigma: &SpinConfig, k: &ModeConfig) -> Result<Complex64> {
    check_pair(k)?;
    if k.n_modes() != s.rows() {
        return Err(Error::Dimension("configuration and matrix disagree on M".into()));
    }
    let fields = mode_fields(s, sigma)?;
    overlap_from_fields(&fields, k.modes()[0], k.modes()[1])
}

/// `m̂` for the bunched channels `[μ, μ]`, `μ ∈ modes`, from one field evaluation.
pub fn bunched_memory_overlaps(s: &ComplexMatrix, sigma: &SpinConfig, modes: &[usize]) -> Result<Vec<Complex64>> {
    let fields = mode_fields(s, sigma)?;
    modes.iter().map(|&mu| overlap_from_fields(&fields, mu, mu)).collect()
}

pub(crate) fn overlap_from_fields(fields: &[Complex64], k1: usize, k2: usize) -> Result<Complex64> {
    if k1 >= fields.len() || k2 >= fields.len() {
        return Err(Error::IndexOutOfRange { index: k1.max(k2), size: fields.len() });
    }
    let norm: f64 = fields.iter().map(|f| f.norm_sqr()).sum();
    if norm == 0.0 {
        return Err(Error::NullOverlapField);
    }
    Ok(fields[k1] * fields[k2] / norm)
}
