//! Order parameters and phase-structure estimation.
//!
//! Replica overlaps `q_ab` are taken between distinct replica groups at the
//! same temperature and the same recorded step; memory overlaps `m̂_k` are
//! taken for every planted channel of every strided snapshot. Histograms are
//! normalized per disorder sample and pooled with equal sample weights.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{packed_dot, run_emc, thermal_fluctuation, Initialization, Schedule, Trajectory};
use crate::linops::haar_random_unitary;
use crate::model::{mode_fields, overlap_from_fields, random_mode_order, ModelInstance};
use crate::seed::{derive_seed, TAG_DYNAMICS, TAG_LAMBDA, TAG_MATRIX};
use crate::{Error, Result, SpinConfig};

pub const DEFAULT_BINS: usize = 51;

/// `q = (1/M) Σ_j a_j b_j`.
pub fn overlap_q(a: &SpinConfig, b: &SpinConfig) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Dimension(format!("overlap of {} and {} spins", a.len(), b.len())));
    }
    let dot: i64 = a.as_slice().iter().zip(b.as_slice()).map(|(&x, &y)| (x * y) as i64).sum();
    Ok(dot as f64 / a.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapSample {
    pub q: f64,
    pub group_a: usize,
    pub group_b: usize,
    pub step: usize,
    pub temperature: f64,
    pub sample: usize,
}

/// Uniform bins over `[-1, 1]` holding non-negative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    weights: Vec<f64>,
}

impl Histogram {
    pub fn new(n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
        }
        Ok(Self { weights: vec![0.0; n_bins] })
    }

    pub fn from_values(n_bins: usize, values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut h = Self::new(n_bins)?;
        for v in values {
            h.add(v);
        }
        Ok(h)
    }

    pub fn n_bins(&self) -> usize {
        self.weights.len()
    }

    pub fn bin_width(&self) -> f64 {
        2.0 / self.n_bins() as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.n_bins()).map(|k| -1.0 + k as f64 * self.bin_width()).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_bins()).map(|k| -1.0 + (k as f64 + 0.5) * self.bin_width()).collect()
    }

    fn bin_of(&self, x: f64) -> usize {
        let k = ((x.clamp(-1.0, 1.0) + 1.0) / self.bin_width()).floor() as usize;
        k.min(self.n_bins() - 1)
    }

    /// Values outside `[-1, 1]` (rounding only) land in the end bins.
    pub fn add(&mut self, x: f64) {
        self.add_weighted(x, 1.0);
    }

    pub fn add_weighted(&mut self, x: f64, w: f64) {
        let k = self.bin_of(x);
        self.weights[k] += w;
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0.0
    }

    /// Density per unit `x`; integrates to one. All zeros when empty.
    pub fn density(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0.0 {
            return vec![0.0; self.n_bins()];
        }
        self.weights.iter().map(|w| w / (total * self.bin_width())).collect()
    }

    pub fn normalized(&self) -> Self {
        let total = self.total();
        if total == 0.0 {
            return self.clone();
        }
        Self { weights: self.weights.iter().map(|w| w / total).collect() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { weights: self.weights.iter().map(|w| w * factor).collect() }
    }

    /// `∫ density dx`.
    pub fn mass(&self) -> f64 {
        self.density().iter().sum::<f64>() * self.bin_width()
    }

    /// Mean of `g(center)` under the normalized histogram.
    pub fn expectation(&self, g: impl Fn(f64) -> f64) -> Option<f64> {
        let total = self.total();
        (total > 0.0).then(|| self.centers().iter().zip(&self.weights).map(|(&c, &w)| g(c) * w).sum::<f64>() / total)
    }

    /// Equal-weight average of the normalized inputs; empty inputs are skipped.
    pub fn pool(parts: &[Histogram]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InsufficientData("nothing to pool".into()))?;
        let mut out = Self::new(first.n_bins())?;
        let used: Vec<&Histogram> = parts.iter().filter(|h| !h.is_empty()).collect();
        for h in &used {
            if h.n_bins() != out.n_bins() {
                return Err(Error::Dimension("histograms with different binning".into()));
            }
            for (o, w) in out.weights.iter_mut().zip(h.normalized().weights) {
                *o += w / used.len() as f64;
            }
        }
        Ok(out)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean and standard error across per-sample means.
fn mean_and_se(per_sample: &[f64]) -> (f64, f64) {
    let m = mean(per_sample);
    if per_sample.len() < 2 {
        return (m, f64::NAN);
    }
    let var = per_sample.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (per_sample.len() - 1) as f64;
    (m, (var / per_sample.len() as f64).sqrt())
}

/// Equal-time snapshot indices `0, stride, 2·stride, …`.
fn snapshot_steps(len: usize, stride: usize) -> impl Iterator<Item = usize> {
    (0..len).step_by(stride.max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqResult {
    pub histogram: Histogram,
    pub samples: Vec<OverlapSample>,
    /// Sample-weighted means.
    pub mean_abs_q: f64,
    pub frac_abs_q_above_half: f64,
    pub n_pairs: usize,
}

/// `P(q)` at one temperature. `per_sample[s]` holds one trajectory per replica
/// group of disorder sample `s`, all at the same temperature.
pub fn collect_pq(per_sample: &[Vec<&Trajectory>], stride: usize, n_bins: usize) -> Result<PqResult> {
    if per_sample.is_empty() {
        return Err(Error::InsufficientData("no disorder samples".into()));
    }
    let mut hists = Vec::new();
    let mut samples = Vec::new();
    let mut abs_means = Vec::new();
    let mut frac_means = Vec::new();
    for (s, trajs) in per_sample.iter().enumerate() {
        if trajs.len() < 2 {
            return Err(Error::InsufficientData(format!("sample {s}: P(q) needs at least two replicas")));
        }
        let len = trajs.iter().map(|t| t.len()).min().unwrap_or(0);
        if len == 0 {
            return Err(Error::InsufficientData(format!("sample {s}: empty trajectories")));
        }
        let m = trajs[0].n_modes();
        let mut qs = Vec::new();
        for step in snapshot_steps(len, stride) {
            for a in 0..trajs.len() {
                for b in a + 1..trajs.len() {
                    let q = packed_dot(trajs[a].packed(step), trajs[b].packed(step), m) as f64 / m as f64;
                    qs.push(q);
                    samples.push(OverlapSample {
                        q,
                        group_a: trajs[a].group(),
                        group_b: trajs[b].group(),
                        step,
                        temperature: trajs[a].temperature(),
                        sample: s,
                    });
                }
            }
        }
        abs_means.push(qs.iter().map(|q| q.abs()).sum::<f64>() / qs.len() as f64);
        frac_means.push(qs.iter().filter(|q| q.abs() > 0.5).count() as f64 / qs.len() as f64);
        hists.push(Histogram::from_values(n_bins, qs)?);
    }
    Ok(PqResult {
        histogram: Histogram::pool(&hists)?,
        n_pairs: samples.len(),
        samples,
        mean_abs_q: mean(&abs_means),
        frac_abs_q_above_half: mean(&frac_means),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmResult {
    /// `Re m̂_k`, the signed display.
    pub signed: Histogram,
    pub magnitude: Histogram,
    /// Per-snapshot `max_k |m̂_k|`.
    pub max_magnitude: Histogram,
    pub mean_abs_m: f64,
    pub mean_max_abs_m: f64,
    /// Across disorder samples; NaN for a single sample.
    pub se_max_abs_m: f64,
    pub n_snapshots: usize,
}

/// `m̂_k` for every planted channel, in output-set order.
pub fn channel_overlaps(inst: &ModelInstance, sigma: &SpinConfig) -> Result<Vec<Complex64>> {
    if inst.n_photons() != 2 {
        return Err(Error::UnsupportedPhotonNumber(inst.n_photons()));
    }
    let fields = mode_fields(inst.scattering(), sigma)?;
    inst.output_set()
        .configs(inst.n_modes(), 2)?
        .iter()
        .map(|k| overlap_from_fields(&fields, k.modes()[0], k.modes()[1]))
        .collect()
}

/// `P(m)` at one temperature. Each entry pairs a disorder sample's instance
/// with its trajectories; every strided snapshot of every replica contributes.
pub fn collect_pm(per_sample: &[(&ModelInstance, Vec<&Trajectory>)], stride: usize, n_bins: usize) -> Result<PmResult> {
    if per_sample.is_empty() {
        return Err(Error::InsufficientData("no disorder samples".into()));
    }
    let (mut signed, mut magnitude, mut maxima) = (Vec::new(), Vec::new(), Vec::new());
    let (mut abs_means, mut max_means) = (Vec::new(), Vec::new());
    let mut n_snapshots = 0;
    for (inst, trajs) in per_sample {
        if inst.n_photons() != 2 {
            return Err(Error::UnsupportedPhotonNumber(inst.n_photons()));
        }
        let (mut re, mut abs, mut max) = (Vec::new(), Vec::new(), Vec::new());
        for traj in trajs {
            for step in snapshot_steps(traj.len(), stride) {
                let m = channel_overlaps(inst, &traj.spins(step))?;
                re.extend(m.iter().map(|z| z.re));
                abs.extend(m.iter().map(|z| z.norm()));
                max.push(m.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        if max.is_empty() || abs.is_empty() {
            return Err(Error::InsufficientData("no snapshots or no planted channels".into()));
        }
        n_snapshots += max.len();
        abs_means.push(mean(&abs));
        max_means.push(mean(&max));
        signed.push(Histogram::from_values(n_bins, re)?);
        magnitude.push(Histogram::from_values(n_bins, abs)?);
        maxima.push(Histogram::from_values(n_bins, max)?);
    }
    let (mean_max_abs_m, se_max_abs_m) = mean_and_se(&max_means);
    Ok(PmResult {
        signed: Histogram::pool(&signed)?,
        magnitude: Histogram::pool(&magnitude)?,
        max_magnitude: Histogram::pool(&maxima)?,
        mean_abs_m: mean(&abs_means),
        mean_max_abs_m,
        se_max_abs_m,
        n_snapshots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Retrieval,
    SpinGlass,
    Paramagnet,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Retrieval => "retrieval",
            Phase::SpinGlass => "spin-glass",
            Phase::Paramagnet => "paramagnet",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub theta_m: f64,
    pub theta_q: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { theta_m: 0.5, theta_q: 0.3 }
    }
}

/// What the classification rule looks at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEvidence {
    pub mean_max_abs_m: f64,
    pub mean_abs_q: f64,
}

impl PhaseEvidence {
    /// From the `max_k |m̂_k|` and `q` histograms (bin centers); unaffected by
    /// rescaling the counts.
    pub fn from_histograms(max_abs_m: &Histogram, pq: &Histogram) -> Result<Self> {
        let empty = || Error::InsufficientData("empty histogram".into());
        Ok(Self {
            mean_max_abs_m: max_abs_m.expectation(f64::abs).ok_or_else(empty)?,
            mean_abs_q: pq.expectation(f64::abs).ok_or_else(empty)?,
        })
    }
}

pub fn classify_phase(evidence: &PhaseEvidence, thresholds: &Thresholds) -> Result<Phase> {
    if !evidence.mean_max_abs_m.is_finite() || !evidence.mean_abs_q.is_finite() {
        return Err(Error::InsufficientData("cell has no overlap statistics".into()));
    }
    Ok(if evidence.mean_max_abs_m > thresholds.theta_m {
        Phase::Retrieval
    } else if evidence.mean_abs_q > thresholds.theta_q {
        Phase::SpinGlass
    } else {
        Phase::Paramagnet
    })
}

/// `P = round(α M^{N_ph})`, restricted to `1 ≤ P ≤ M` for bunched sets.
pub fn bunched_pattern_count(alpha: f64, n_modes: usize, n_photons: usize) -> Result<usize> {
    let p = (alpha * (n_modes as f64).powi(n_photons as i32)).round();
    if !(p >= 1.0) || p > n_modes as f64 {
        return Err(Error::InvalidArgument(format!(
            "α = {alpha} gives P = {p} at M = {n_modes}, N_ph = {n_photons}; bunched sets need 1 ≤ P ≤ M"
        )));
    }
    Ok(p as usize)
}

/// Disorder sample `sample`: Haar `S` from `(seed, MATRIX, sample)` and the
/// first `P` modes of the order drawn from `(seed, LAMBDA, sample)`, so sets
/// for increasing `P` are nested.
pub fn disorder_sample(n_modes: usize, n_photons: usize, p: usize, seed: u64, sample: usize) -> Result<ModelInstance> {
    let s = haar_random_unitary(n_modes, derive_seed(seed, &[TAG_MATRIX, sample as u64]));
    let order = random_mode_order(n_modes, derive_seed(seed, &[TAG_LAMBDA, sample as u64]));
    if p > n_modes {
        return Err(Error::InvalidArgument(format!("P = {p} exceeds M = {n_modes}")));
    }
    let inst = ModelInstance::bunched(s, order[..p].to_vec(), n_photons)?;
    Ok(inst)
}

pub fn dynamics_seed(seed: u64, sample: usize, alpha_index: usize) -> u64 {
    derive_seed(seed, &[TAG_DYNAMICS, sample as u64, alpha_index as u64])
}

/// Everything but the `(α, T)` grid and the disorder sample count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBase {
    pub n_modes: usize,
    pub n_photons: usize,
    /// Its ladder is the temperature grid.
    pub schedule: Schedule,
    pub n_groups: usize,
    pub init: Initialization,
    pub stride: usize,
    pub n_bins: usize,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub alpha: f64,
    pub temperature: f64,
    pub n_patterns: usize,
    pub n_samples: usize,
    pub pq: PqResult,
    /// Absent unless `N_ph = 2`.
    pub pm: Option<PmResult>,
    pub energy_mean: f64,
    pub energy_std: f64,
    pub mean_pr: f64,
    pub sigma_t: f64,
    pub phase: Option<Phase>,
}

impl CellSummary {
    pub fn evidence(&self) -> Option<PhaseEvidence> {
        self.pm.as_ref().map(|pm| PhaseEvidence { mean_max_abs_m: pm.mean_max_abs_m, mean_abs_q: self.pq.mean_abs_q })
    }
}

/// Summarizes one temperature. Each entry pairs a disorder sample's instance
/// with its trajectories at that temperature (one per replica group).
pub fn summarize_cell(
    alpha: f64,
    per_sample: &[(&ModelInstance, Vec<&Trajectory>)],
    stride: usize,
    n_bins: usize,
    thresholds: &Thresholds,
) -> Result<CellSummary> {
    let (first_inst, first_trajs) = per_sample.first().ok_or_else(|| Error::InsufficientData("no samples".into()))?;
    let temperature = first_trajs
        .first()
        .ok_or_else(|| Error::InsufficientData("no trajectories".into()))?
        .temperature();
    let trajs: Vec<Vec<&Trajectory>> = per_sample.iter().map(|(_, t)| t.clone()).collect();
    let pq = collect_pq(&trajs, stride, n_bins)?;
    let pm = if first_inst.n_photons() == 2 { Some(collect_pm(per_sample, stride, n_bins)?) } else { None };
    let all: Vec<&Trajectory> = trajs.iter().flatten().copied().collect();
    let energies: Vec<f64> = all.iter().flat_map(|t| t.energies()).collect();
    let energy_mean = mean(&energies);
    let energy_std = (energies.iter().map(|e| (e - energy_mean).powi(2)).sum::<f64>() / energies.len() as f64).sqrt();
    let sigma_t = all.iter().map(|t| thermal_fluctuation(t)).sum::<Result<f64>>()? / all.len() as f64;
    let mut cell = CellSummary {
        alpha,
        temperature,
        n_patterns: first_inst.output_set().len(),
        n_samples: per_sample.len(),
        pq,
        pm,
        energy_mean,
        energy_std,
        mean_pr: -energy_mean / first_inst.n_modes() as f64,
        sigma_t,
        phase: None,
    };
    cell.phase = cell.evidence().map(|e| classify_phase(&e, thresholds)).transpose()?;
    Ok(cell)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub alphas: Vec<f64>,
    pub temperatures: Vec<f64>,
    /// `cells[a * n_temperatures + t]`.
    pub cells: Vec<CellSummary>,
}

impl SweepResult {
    pub fn cell(&self, alpha_index: usize, temperature_index: usize) -> &CellSummary {
        &self.cells[alpha_index * self.temperatures.len() + temperature_index]
    }
}

/// One exchange run per `(α, disorder sample)`; the schedule's ladder is the
/// temperature grid.
pub fn phase_sweep(base: &SweepBase, alphas: &[f64], n_samples: usize, seed: u64) -> Result<SweepResult> {
    if alphas.is_empty() || n_samples == 0 {
        return Err(Error::InvalidArgument("empty α grid or no disorder samples".into()));
    }
    base.schedule.validate()?;
    let n_t = base.schedule.temperatures.len();
    let mut cells = Vec::with_capacity(alphas.len() * n_t);
    for (a, &alpha) in alphas.iter().enumerate() {
        let p = bunched_pattern_count(alpha, base.n_modes, base.n_photons)?;
        let insts = (0..n_samples)
            .map(|s| disorder_sample(base.n_modes, base.n_photons, p, seed, s))
            .collect::<Result<Vec<_>>>()?;
        let runs = insts
            .iter()
            .enumerate()
            .map(|(s, inst)| run_emc(inst, &base.schedule, base.n_groups, dynamics_seed(seed, s, a), base.init))
            .collect::<Result<Vec<_>>>()?;
        for slot in 0..n_t {
            let per_sample: Vec<(&ModelInstance, Vec<&Trajectory>)> =
                insts.iter().zip(&runs).map(|(i, r)| (i, r.at_slot(slot))).collect();
            cells.push(summarize_cell(alpha, &per_sample, base.stride, base.n_bins, &base.thresholds)?);
        }
    }
    Ok(SweepResult { alphas: alphas.to_vec(), temperatures: base.schedule.temperatures.clone(), cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSizeRow {
    pub n_modes: usize,
    pub cell: CellSummary,
}

/// The cell at `(α, temperature)` for each system size; `temperature` must
/// be on the base ladder.
pub fn finite_size_study(
    base: &SweepBase,
    sizes: &[usize],
    alpha: f64,
    temperature: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<FiniteSizeRow>> {
    let slot = base
        .schedule
        .temperatures
        .iter()
        .position(|&t| (t - temperature).abs() <= 1e-12 * temperature)
        .ok_or_else(|| Error::InvalidArgument(format!("T = {temperature} is not on the ladder")))?;
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("empty size list".into()));
    }
    sizes
        .iter()
        .map(|&m| {
            let base_m = SweepBase { n_modes: m, ..base.clone() };
            let mut sweep = phase_sweep(&base_m, &[alpha], n_samples, seed)?;
            Ok(FiniteSizeRow { n_modes: m, cell: sweep.cells.swap_remove(slot) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::EmcRun;
    use crate::seed::stream;

    #[test]
    fn overlap_examples() {
        let a = SpinConfig::new(vec![1, -1, 1, 1]).unwrap();
        assert_eq!(overlap_q(&a, &a).unwrap(), 1.0);
        assert_eq!(overlap_q(&a, &a.negated()).unwrap(), -1.0);
        assert_eq!(overlap_q(&a, &SpinConfig::all_up(4)).unwrap(), 0.5);
        assert!(overlap_q(&a, &SpinConfig::all_up(3)).is_err());
    }

    #[test]
    fn random_pairs_clt() {
        let m = 50;
        let mut rng = stream(1, &[]);
        let n = 10_000;
        let qs: Vec<f64> = (0..n)
            .map(|_| overlap_q(&SpinConfig::random(m, &mut rng), &SpinConfig::random(m, &mut rng)).unwrap())
            .collect();
        let mu = mean(&qs);
        let var = qs.iter().map(|q| (q - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
        let target = 1.0 / m as f64;
        assert!(mu.abs() < 5.0 * (target / n as f64).sqrt());
        // Var of the sample variance for q = (2B - M)/M, B ~ Binomial(M, 1/2).
        let kurt_excess = -2.0 / m as f64;
        let sd_var = target * ((2.0 + kurt_excess) / n as f64).sqrt();
        assert!((var - target).abs() < 5.0 * sd_var);
    }

    #[test]
    fn histogram_mass_and_binning() {
        let h = Histogram::from_values(DEFAULT_BINS, [-1.0, 1.0, 0.0, 0.3, 1.0 + 1e-15]).unwrap();
        assert!((h.mass() - 1.0).abs() < 1e-9);
        assert_eq!(h.weights()[0], 1.0);
        assert_eq!(h.weights()[50], 2.0);
        assert_eq!(h.weights()[25], 1.0);
        assert_eq!(h.edges().len(), 52);
        assert!((h.centers()[25]).abs() < 1e-15);
        assert_eq!(Histogram::new(5).unwrap().mass(), 0.0);
        assert!(Histogram::new(0).is_err());
    }

    #[test]
    fn pooling_weights_samples_equally() {
        let a = Histogram::from_values(4, [-0.9; 100]).unwrap();
        let b = Histogram::from_values(4, [0.9]).unwrap();
        let p = Histogram::pool(&[a, b, Histogram::new(4).unwrap()]).unwrap();
        assert_eq!(p.weights(), &[0.5, 0.0, 0.0, 0.5]);
        assert!(Histogram::pool(&[Histogram::new(4).unwrap(), Histogram::new(5).unwrap().scaled(0.0)]).is_ok());
        let c = Histogram::from_values(5, [0.1]).unwrap();
        assert!(Histogram::pool(&[Histogram::from_values(4, [0.1]).unwrap(), c]).is_err());
    }

    #[test]
    fn classification_rule() {
        let t = Thresholds::default();
        let at = |m, q| classify_phase(&PhaseEvidence { mean_max_abs_m: m, mean_abs_q: q }, &t).unwrap();
        assert_eq!(at(0.9, 0.9), Phase::Retrieval);
        assert_eq!(at(0.05, 0.8), Phase::SpinGlass);
        assert_eq!(at(0.05, 0.05), Phase::Paramagnet);
        assert!(classify_phase(&PhaseEvidence { mean_max_abs_m: f64::NAN, mean_abs_q: 0.0 }, &t).is_err());
    }

    #[test]
    fn classification_from_histograms_is_scale_free() {
        let pm = Histogram::from_values(DEFAULT_BINS, [0.9, 0.88, 0.91]).unwrap();
        let pq = Histogram::from_values(DEFAULT_BINS, [0.8, -0.8]).unwrap();
        let t = Thresholds::default();
        let e = PhaseEvidence::from_histograms(&pm, &pq).unwrap();
        assert_eq!(classify_phase(&e, &t).unwrap(), Phase::Retrieval);
        for f in [1e-6, 3.0, 1e9] {
            let e2 = PhaseEvidence::from_histograms(&pm.scaled(f), &pq.scaled(f)).unwrap();
            assert_eq!(classify_phase(&e2, &t).unwrap(), Phase::Retrieval);
            assert!((e2.mean_max_abs_m - e.mean_max_abs_m).abs() < 1e-12);
        }
        assert!(PhaseEvidence::from_histograms(&Histogram::new(3).unwrap(), &pq).is_err());
    }

    #[test]
    fn pattern_counts() {
        assert_eq!(bunched_pattern_count(0.0004, 50, 2).unwrap(), 1);
        assert_eq!(bunched_pattern_count(0.0032, 50, 2).unwrap(), 8);
        assert_eq!(bunched_pattern_count(0.02, 50, 2).unwrap(), 50);
        assert!(bunched_pattern_count(0.0001, 50, 2).is_err());
        assert!(bunched_pattern_count(0.03, 50, 2).is_err());
    }

    #[test]
    fn nested_pattern_sets() {
        let small = disorder_sample(20, 2, 2, 9, 0).unwrap();
        let large = disorder_sample(20, 2, 8, 9, 0).unwrap();
        let (OutputSet::BunchedSubset(a), OutputSet::BunchedSubset(b)) = (small.output_set(), large.output_set()) else {
            unreachable!()
        };
        assert_eq!(a[..], b[..2]);
        assert_eq!(small.scattering(), large.scattering());
    }

    fn tiny_base(temps: Vec<f64>) -> SweepBase {
        SweepBase {
            n_modes: 12,
            n_photons: 2,
            schedule: Schedule::new(200, 400, 50, temps).unwrap(),
            n_groups: 4,
            init: Initialization::Random,
            stride: 50,
            n_bins: DEFAULT_BINS,
            thresholds: Thresholds::default(),
        }
    }

    use crate::model::OutputSet;

    #[test]
    fn identical_frozen_replicas_give_delta_at_one() {
        let inst = disorder_sample(10, 2, 1, 3, 0).unwrap();
        let sigma = SpinConfig::random(10, &mut stream(2, &[]));
        let mut trajs = Vec::new();
        for g in 0..3 {
            let mut t = Trajectory::new(g, 0, 0.01, 10);
            for _ in 0..10 {
                t.push(&sigma, 0.1);
            }
            trajs.push(t);
        }
        let refs: Vec<&Trajectory> = trajs.iter().collect();
        let pq = collect_pq(std::slice::from_ref(&refs), 1, DEFAULT_BINS).unwrap();
        assert_eq!(pq.n_pairs, 30);
        assert_eq!(pq.histogram.weights()[50], 1.0);
        assert_eq!(pq.mean_abs_q, 1.0);
        assert!(collect_pq(&[refs[..1].to_vec()], 1, DEFAULT_BINS).is_err());
        let pm = collect_pm(&[(&inst, refs)], 1, DEFAULT_BINS).unwrap();
        assert!((pm.signed.mass() - 1.0).abs() < 1e-9);
        assert_eq!(pm.n_snapshots, 30);
    }

    #[test]
    fn pm_rejects_three_photons() {
        let inst = disorder_sample(6, 3, 2, 1, 0).unwrap();
        let t = Trajectory::new(0, 0, 0.1, 6);
        assert!(matches!(collect_pm(&[(&inst, vec![&t])], 1, 11), Err(Error::UnsupportedPhotonNumber(3))));
    }

    #[test]
    fn single_cell_sweep_matches_direct_run() {
        let base = tiny_base(vec![0.2]);
        let sweep = phase_sweep(&base, &[0.02], 2, 5).unwrap();
        assert_eq!(sweep.cells.len(), 1);
        let insts: Vec<ModelInstance> = (0..2).map(|s| disorder_sample(12, 2, 3, 5, s).unwrap()).collect();
        let runs: Vec<EmcRun> = insts
            .iter()
            .enumerate()
            .map(|(s, i)| run_emc(i, &base.schedule, 4, dynamics_seed(5, s, 0), Initialization::Random).unwrap())
            .collect();
        let per_sample: Vec<_> = insts.iter().zip(&runs).map(|(i, r)| (i, r.at_slot(0))).collect();
        let direct = summarize_cell(0.02, &per_sample, 50, DEFAULT_BINS, &base.thresholds).unwrap();
        assert_eq!(sweep.cells[0], direct);
        assert_eq!(direct.n_patterns, 3);
        let pm = direct.pm.as_ref().unwrap();
        assert!(pm.signed.weights().iter().sum::<f64>() > 0.0);
        assert!(direct.phase.is_some());
    }

    #[test]
    fn finite_size_single_entry() {
        let base = tiny_base(vec![0.1, 0.3]);
        let rows = finite_size_study(&base, &[12], 0.02, 0.3, 1, 2).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].cell.temperature, 0.3);
        assert!(finite_size_study(&base, &[12], 0.02, 0.2, 1, 2).is_err());
    }

    /// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
    fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> (f64, f64) {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (n, m) = (a.len(), b.len());
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < n && j < m {
            let x = a[i].min(b[j]);
            while i < n && a[i] <= x {
                i += 1;
            }
            while j < m && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
        }
        let en = ((n * m) as f64 / (n + m) as f64).sqrt();
        let lambda = (en + 0.12 + 0.11 / en) * d;
        let p = (1..=100).map(|k| 2.0 * (-1f64).powi(k - 1) * (-2.0 * (k * k) as f64 * lambda * lambda).exp()).sum::<f64>();
        (d, p.clamp(0.0, 1.0))
    }

    #[test]
    fn pq_is_flip_symmetric() {
        let mut base = tiny_base(vec![0.15, 0.25, 0.4]);
        base.n_modes = 16;
        base.n_groups = 6;
        base.stride = 25;
        let sweep = phase_sweep(&base, &[0.02], 3, 11).unwrap();
        for cell in &sweep.cells {
            // Independent replica pairs only: one pair per group pair per snapshot is already pooled.
            let q: Vec<f64> = cell.pq.samples.iter().map(|s| s.q).collect();
            let neg: Vec<f64> = q.iter().map(|x| -x).collect();
            let (_, p) = ks(q, neg);
            assert!(p > 0.01, "T = {}: KS p = {p}", cell.temperature);
            assert!(cell.pq.samples.iter().all(|s| s.q.abs() <= 1.0));
            assert!((cell.pq.histogram.mass() - 1.0).abs() < 1e-9);
        }
    }
}
