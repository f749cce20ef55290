//! Metropolis single-spin-flip dynamics and exchange Monte Carlo.
//!
//! One Monte Carlo step is `M` flip proposals at uniformly random sites. An
//! exchange run keeps `n_groups` independent temperature ladders; every
//! `exchange_interval` steps each ladder attempts configuration swaps
//! between adjacent temperatures, alternating even and odd pairs. Trajectories
//! are recorded per ladder slot (fixed temperature), so a swap moves a
//! configuration from one trajectory into another.
//!
//! All randomness comes from per-chain and per-ladder streams derived from
//! the run seed (see [`crate::seed`]); chains advance in parallel between
//! exchange points, and results do not depend on the worker count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{output_probability, FieldCache, ModelInstance, OutputSet};
use crate::seed::{stream, StreamRng, TAG_CHAIN, TAG_EXCHANGE};
use crate::spin::words_for;
use crate::{Error, Result, SpinConfig};

/// Thermalization length used for the published phase diagram.
pub const PAPER_THERMALIZATION_STEPS: usize = 200_000;
/// Steps between exchange attempts used for the published phase diagram.
pub const PAPER_EXCHANGE_INTERVAL: usize = 200;
/// Replicas per temperature and disorder sample.
pub const PAPER_REPLICAS: usize = 36;
/// Disorder samples per phase-diagram point.
pub const PAPER_SAMPLES: usize = 20;

/// Largest tolerated drift of a cached probability before it is rebuilt.
const CACHE_DRIFT_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone)]
enum Tracker {
    Fields(FieldCache),
    /// Full recomputation on every proposal.
    Exact,
}

/// State of one Markov chain.
#[derive(Debug, Clone)]
pub struct MCState {
    sigma: SpinConfig,
    tracker: Tracker,
    pr: f64,
    temperature: f64,
    rng: StreamRng,
    step_count: u64,
}

impl MCState {
    /// `temperature` may be zero (quench: only non-uphill moves accepted).
    pub fn new(inst: &ModelInstance, sigma: SpinConfig, temperature: f64, rng: StreamRng) -> Result<Self> {
        if !(temperature >= 0.0) || !temperature.is_finite() {
            return Err(Error::InvalidArgument(format!("temperature {temperature} must be finite and >= 0")));
        }
        if sigma.len() != inst.n_modes() {
            return Err(Error::Dimension(format!("{} spins for M = {}", sigma.len(), inst.n_modes())));
        }
        let tracker = match inst.output_set() {
            OutputSet::BunchedSubset(modes) if inst.uses_fast_path() => {
                Tracker::Fields(FieldCache::new(inst.scattering(), &sigma, modes, inst.n_photons())?)
            }
            _ => Tracker::Exact,
        };
        let pr = match &tracker {
            Tracker::Fields(cache) => cache.probability(),
            Tracker::Exact => output_probability(inst, &sigma)?,
        };
        Ok(Self { sigma, tracker, pr, temperature, rng, step_count: 0 })
    }

    /// Uniformly random initial spins drawn from `rng`.
    pub fn random(inst: &ModelInstance, temperature: f64, mut rng: StreamRng) -> Result<Self> {
        let sigma = SpinConfig::random(inst.n_modes(), &mut rng);
        Self::new(inst, sigma, temperature, rng)
    }

    pub fn sigma(&self) -> &SpinConfig {
        &self.sigma
    }

    pub fn pr(&self) -> f64 {
        self.pr
    }

    pub fn energy(&self) -> f64 {
        -(self.sigma.len() as f64) * self.pr
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn rng_mut(&mut self) -> &mut StreamRng {
        &mut self.rng
    }

    /// `|pr - Pr(Λ|σ)|` against a from-scratch evaluation.
    pub fn drift(&self, inst: &ModelInstance) -> Result<f64> {
        Ok((self.pr - output_probability(inst, &self.sigma)?).abs())
    }

    fn rebuild_if_drifted(&mut self, inst: &ModelInstance) -> Result<()> {
        if let Tracker::Fields(cache) = &mut self.tracker {
            if (cache.probability() - self.pr).abs() > CACHE_DRIFT_LIMIT
                || cache.max_deviation(inst.scattering(), &self.sigma) > CACHE_DRIFT_LIMIT
            {
                cache.refresh(inst.scattering(), &self.sigma);
                self.pr = cache.probability();
            }
        }
        Ok(())
    }

    fn swap_configuration(&mut self, other: &mut Self) {
        std::mem::swap(&mut self.sigma, &mut other.sigma);
        std::mem::swap(&mut self.tracker, &mut other.tracker);
        std::mem::swap(&mut self.pr, &mut other.pr);
    }
}

/// Metropolis rule: accept when `ΔH <= 0`, otherwise with probability `e^{-ΔH/T}`.
#[inline]
pub fn metropolis_accept<R: Rng + ?Sized>(delta_h: f64, temperature: f64, rng: &mut R) -> bool {
    if delta_h <= 0.0 {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    rng.random::<f64>() < (-delta_h / temperature).exp()
}

/// Proposes `σ_i → -σ_i`. A rejected proposal leaves the state bit-identical.
pub fn metropolis_flip(state: &mut MCState, inst: &ModelInstance, i: usize) -> Result<bool> {
    let m = state.sigma.len();
    if i >= m {
        return Err(Error::IndexOutOfRange { index: i, size: m });
    }
    let spin = state.sigma.get(i);
    match &mut state.tracker {
        Tracker::Fields(cache) => {
            let column = inst.lambda_column(i);
            let proposed = cache.proposed_probability(column, spin);
            let delta_h = -(m as f64) * (proposed - state.pr);
            if !metropolis_accept(delta_h, state.temperature, &mut state.rng) {
                return Ok(false);
            }
            cache.apply(column, spin);
            state.sigma.flip(i);
            state.pr = proposed;
            Ok(true)
        }
        Tracker::Exact => {
            state.sigma.flip(i);
            let proposed = output_probability(inst, &state.sigma)?;
            let delta_h = -(m as f64) * (proposed - state.pr);
            if metropolis_accept(delta_h, state.temperature, &mut state.rng) {
                state.pr = proposed;
                Ok(true)
            } else {
                state.sigma.flip(i);
                Ok(false)
            }
        }
    }
}

/// One Monte Carlo step: `M` proposals at uniformly random sites, with
/// replacement. Returns the number of accepted flips.
pub fn mc_step(state: &mut MCState, inst: &ModelInstance) -> Result<usize> {
    let m = state.sigma.len();
    let mut accepted = 0;
    for _ in 0..m {
        let i = state.rng.random_range(0..m);
        accepted += metropolis_flip(state, inst, i)? as usize;
    }
    state.step_count += 1;
    Ok(accepted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Geometric,
    Linear,
}

/// `count` temperatures from `min` to `max` inclusive (both endpoints exact).
pub fn temperature_ladder(min: f64, max: f64, count: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if count == 0 || !(min > 0.0) || !max.is_finite() || max < min || (count > 1 && max == min) {
        return Err(Error::InvalidArgument(format!(
            "bad ladder: min={min}, max={max}, count={count}"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let last = (count - 1) as f64;
    let mut ladder: Vec<f64> = (0..count)
        .map(|k| {
            let x = k as f64 / last;
            match spacing {
                Spacing::Geometric => min * (max / min).powf(x),
                Spacing::Linear => min + (max - min) * x,
            }
        })
        .collect();
    ladder[0] = min;
    ladder[count - 1] = max;
    Ok(ladder)
}

/// Timing of an exchange Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub n_therm: usize,
    /// Recorded steps after thermalization; zero records nothing.
    pub n_measure: usize,
    pub exchange_interval: usize,
    /// Strictly increasing, positive.
    pub temperatures: Vec<f64>,
    /// With swaps disabled every slot is an independent Metropolis chain.
    pub exchanges: bool,
}

impl Schedule {
    pub fn new(n_therm: usize, n_measure: usize, exchange_interval: usize, temperatures: Vec<f64>) -> Result<Self> {
        let s = Self { n_therm, n_measure, exchange_interval, temperatures, exchanges: true };
        s.validate()?;
        Ok(s)
    }

    pub fn without_exchanges(mut self) -> Self {
        self.exchanges = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_therm == 0 || self.exchange_interval == 0 {
            return Err(Error::InvalidArgument("n_therm and exchange_interval must be >= 1".into()));
        }
        if self.temperatures.is_empty() {
            return Err(Error::InvalidArgument("empty temperature ladder".into()));
        }
        if self.temperatures.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidArgument("temperatures must be finite and > 0".into()));
        }
        if self.temperatures.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("temperatures must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Per-step record of one ladder slot during the measurement window.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    group: usize,
    slot: usize,
    temperature: f64,
    n_modes: usize,
    words: usize,
    spins: Vec<u64>,
    pr: Vec<f64>,
}

impl Trajectory {
    pub fn new(group: usize, slot: usize, temperature: f64, n_modes: usize) -> Self {
        Self { group, slot, temperature, n_modes, words: words_for(n_modes), spins: Vec::new(), pr: Vec::new() }
    }

    pub fn push(&mut self, sigma: &SpinConfig, pr: f64) {
        let start = self.spins.len();
        self.spins.resize(start + self.words, 0);
        sigma.pack_into(&mut self.spins[start..]);
        self.pr.push(pr);
    }

    pub fn group(&self) -> usize {
        self.group
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn len(&self) -> usize {
        self.pr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pr.is_empty()
    }

    pub fn spins(&self, t: usize) -> SpinConfig {
        SpinConfig::unpack(self.packed(t), self.n_modes)
    }

    /// Spins at step `t`, one bit per mode, set for `-1`.
    pub fn packed(&self, t: usize) -> &[u64] {
        &self.spins[t * self.words..(t + 1) * self.words]
    }

    pub fn pr(&self) -> &[f64] {
        &self.pr
    }

    pub fn energy(&self, t: usize) -> f64 {
        -(self.n_modes as f64) * self.pr[t]
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.len()).map(|t| self.energy(t)).collect()
    }
}

/// `Σ_i σ_i σ'_i` for packed spins.
#[inline]
pub(crate) fn packed_dot(a: &[u64], b: &[u64], n_modes: usize) -> i64 {
    let differing: u32 = a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum();
    n_modes as i64 - 2 * differing as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapAttempt {
    /// Index of the colder member of the pair.
    pub lower: usize,
    pub accepted: bool,
}

/// Swaps configurations between adjacent temperatures with probability
/// `min(1, exp((1/T_a - 1/T_b)(E_a - E_b)))`, pairing `(0,1), (2,3), …` for
/// even `parity` and `(1,2), (3,4), …` for odd. Fewer than two states is a no-op.
pub fn exchange_sweep<R: Rng + ?Sized>(states: &mut [MCState], parity: usize, rng: &mut R) -> Vec<SwapAttempt> {
    let mut attempts = Vec::new();
    let mut a = parity % 2;
    while a + 1 < states.len() {
        let (lo, hi) = states.split_at_mut(a + 1);
        let (x, y) = (&mut lo[a], &mut hi[0]);
        let accepted = swap_accepted(x.temperature, y.temperature, x.energy(), y.energy(), rng);
        if accepted {
            x.swap_configuration(y);
        }
        attempts.push(SwapAttempt { lower: a, accepted });
        a += 2;
    }
    attempts
}

fn swap_accepted<R: Rng + ?Sized>(t_a: f64, t_b: f64, e_a: f64, e_b: f64, rng: &mut R) -> bool {
    if t_a == t_b || e_a == e_b {
        return true;
    }
    let log_ratio = (1.0 / t_a - 1.0 / t_b) * (e_a - e_b);
    log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp()
}

/// How each chain picks its starting spins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initialization {
    /// Independent uniform ±1 per spin, from the chain's own stream.
    #[default]
    Random,
    /// `σ_j = sign Re S_{μ,j}` with `μ` the first mode of the first planted
    /// channel: a start inside that channel's retrieval basin.
    Planted,
}

pub fn planted_spins(inst: &ModelInstance) -> Result<SpinConfig> {
    let lambda = inst.output_set().configs(inst.n_modes(), inst.n_photons())?;
    let k = lambda
        .first()
        .ok_or_else(|| Error::InvalidArgument("planted start needs a non-empty output set".into()))?;
    let mu = k.modes()[0];
    Ok(SpinConfig::from_signs(inst.scattering().row(mu).iter().map(|z| z.re)))
}

/// Output of [`run_emc`].
#[derive(Debug, Clone)]
pub struct EmcRun {
    pub temperatures: Vec<f64>,
    pub n_groups: usize,
    /// Group-major: `trajectories[g * n_temps + t]`.
    pub trajectories: Vec<Trajectory>,
    /// Energy of every slot at the end of each thermalization block
    /// (one entry per `exchange_interval` steps).
    pub thermalization_energies: Vec<Vec<f64>>,
    /// Swap attempts and acceptances per adjacent pair `(t, t+1)`, summed over groups.
    pub swap_attempts: Vec<u64>,
    pub swap_accepts: Vec<u64>,
    /// Accepted / proposed flips over the whole run, per slot.
    pub flip_acceptance: Vec<f64>,
}

impl EmcRun {
    pub fn n_temperatures(&self) -> usize {
        self.temperatures.len()
    }

    pub fn trajectory(&self, group: usize, slot: usize) -> &Trajectory {
        &self.trajectories[group * self.n_temperatures() + slot]
    }

    /// All groups' trajectories at ladder slot `slot`.
    pub fn at_slot(&self, slot: usize) -> Vec<&Trajectory> {
        (0..self.n_groups).map(|g| self.trajectory(g, slot)).collect()
    }

    pub fn swap_rates(&self) -> Vec<f64> {
        self.swap_attempts
            .iter()
            .zip(&self.swap_accepts)
            .map(|(&n, &a)| if n == 0 { f64::NAN } else { a as f64 / n as f64 })
            .collect()
    }
}

/// Exchange Monte Carlo over `n_groups` independent ladders, fully
/// determined by `(inst, schedule, n_groups, seed, init)`.
pub fn run_emc(
    inst: &ModelInstance,
    schedule: &Schedule,
    n_groups: usize,
    seed: u64,
    init: Initialization,
) -> Result<EmcRun> {
    schedule.validate()?;
    if n_groups == 0 {
        return Err(Error::InvalidArgument("need at least one replica group".into()));
    }
    let temps = &schedule.temperatures;
    let n_t = temps.len();
    let planted = match init {
        Initialization::Planted => Some(planted_spins(inst)?),
        Initialization::Random => None,
    };

    let mut chains = Vec::with_capacity(n_groups * n_t);
    let mut trajectories = Vec::with_capacity(n_groups * n_t);
    for g in 0..n_groups {
        for (t, &temperature) in temps.iter().enumerate() {
            let rng = stream(seed, &[TAG_CHAIN, g as u64, t as u64]);
            chains.push(match &planted {
                Some(sigma) => MCState::new(inst, sigma.clone(), temperature, rng)?,
                None => MCState::random(inst, temperature, rng)?,
            });
            trajectories.push(Trajectory::new(g, t, temperature, inst.n_modes()));
        }
    }
    let mut exchange_rngs: Vec<StreamRng> = (0..n_groups).map(|g| stream(seed, &[TAG_EXCHANGE, g as u64])).collect();
    let mut thermalization_energies = vec![Vec::new(); chains.len()];
    let mut accepted_flips = vec![0u64; chains.len()];
    let mut swap_attempts = vec![0u64; n_t.saturating_sub(1)];
    let mut swap_accepts = vec![0u64; n_t.saturating_sub(1)];

    let total = schedule.n_therm + schedule.n_measure;
    let n_therm = schedule.n_therm;
    let mut step = 0;
    let mut sweep = 0usize;
    while step < total {
        let block = schedule.exchange_interval.min(total - step);
        chains
            .par_iter_mut()
            .zip(trajectories.par_iter_mut())
            .zip(accepted_flips.par_iter_mut())
            .try_for_each(|((chain, traj), accepted)| -> Result<()> {
                for s in step..step + block {
                    *accepted += mc_step(chain, inst)? as u64;
                    if s >= n_therm {
                        traj.push(&chain.sigma, chain.pr);
                    }
                }
                chain.rebuild_if_drifted(inst)
            })?;
        step += block;
        if step <= n_therm {
            for (trace, chain) in thermalization_energies.iter_mut().zip(&chains) {
                trace.push(chain.energy());
            }
        }
        if schedule.exchanges && block == schedule.exchange_interval && step < total {
            for (ladder, rng) in chains.chunks_mut(n_t).zip(exchange_rngs.iter_mut()) {
                for attempt in exchange_sweep(ladder, sweep, rng) {
                    swap_attempts[attempt.lower] += 1;
                    swap_accepts[attempt.lower] += attempt.accepted as u64;
                }
            }
            sweep += 1;
        }
    }

    let proposals = (total * inst.n_modes()) as f64;
    Ok(EmcRun {
        temperatures: temps.clone(),
        n_groups,
        trajectories,
        thermalization_energies,
        swap_attempts,
        swap_accepts,
        flip_acceptance: accepted_flips.iter().map(|&a| a as f64 / proposals).collect(),
    })
}

/// `F(τ) = (1/(N_valid M)) Σ_t Σ_i σ_i(t) σ_i(t+τ)` over the `N_valid = len - τ`
/// start times with `t + τ` inside the trajectory.
pub fn self_correlation(traj: &Trajectory, tau: usize) -> Result<f64> {
    if tau >= traj.len() {
        return Err(Error::InvalidArgument(format!("τ = {tau} not below trajectory length {}", traj.len())));
    }
    let n_valid = traj.len() - tau;
    let total: i64 = (0..n_valid).map(|t| packed_dot(traj.packed(t), traj.packed(t + tau), traj.n_modes)).sum();
    Ok(total as f64 / (n_valid as f64 * traj.n_modes as f64))
}

/// Binomial error on a frequency estimated from `n_exp` trials: `√(Pr(1-Pr)/n_exp)`.
pub fn measurement_noise(pr: f64, n_exp: u64) -> f64 {
    let pr = pr.clamp(0.0, 1.0);
    (pr * (1.0 - pr) / n_exp.max(1) as f64).sqrt()
}

/// `σ_T = √⟨(ΔPr)²⟩` over successive recorded steps.
pub fn thermal_fluctuation(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 2 {
        return Err(Error::InsufficientData("thermal fluctuation needs at least two recorded steps".into()));
    }
    let pr = traj.pr();
    let sum_sq: f64 = pr.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok((sum_sq / (pr.len() - 1) as f64).sqrt())
}

/// Measurement versus thermal noise at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseWindowRow {
    pub temperature: f64,
    pub mean_pr: f64,
    pub sigma_exp: f64,
    pub sigma_t: f64,
    /// `σ_exp < σ_T`: the measured probability resolves the thermal fluctuations.
    pub valid: bool,
}

/// One row per temperature; `per_temperature[i]` holds every trajectory
/// recorded at `temperatures[i]`.
pub fn noise_window(temperatures: &[f64], per_temperature: &[Vec<&Trajectory>], n_exp: u64) -> Result<Vec<NoiseWindowRow>> {
    if temperatures.len() != per_temperature.len() {
        return Err(Error::Dimension("one trajectory list per temperature".into()));
    }
    temperatures
        .iter()
        .zip(per_temperature)
        .map(|(&temperature, trajs)| {
            if trajs.is_empty() {
                return Err(Error::InsufficientData(format!("no trajectories at T = {temperature}")));
            }
            let sigma_t = trajs.iter().map(|t| thermal_fluctuation(t)).sum::<Result<f64>>()? / trajs.len() as f64;
            let n: usize = trajs.iter().map(|t| t.len()).sum();
            let mean_pr = trajs.iter().flat_map(|t| t.pr()).sum::<f64>() / n as f64;
            let sigma_exp = measurement_noise(mean_pr, n_exp);
            Ok(NoiseWindowRow { temperature, mean_pr, sigma_exp, sigma_t, valid: sigma_exp < sigma_t })
        })
        .collect()
}
