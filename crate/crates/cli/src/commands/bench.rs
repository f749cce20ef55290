use std::time::Instant;

use serde::{Deserialize, Serialize};

use phopfield_core::dynamics::{mc_step, MCState};
use phopfield_core::linops::haar_random_unitary;
use phopfield_core::model::{random_mode_order, ModelInstance};
use phopfield_core::seed::{derive_seed, stream};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub n_modes: usize,
    pub n_photons: usize,
    pub sizes: Vec<usize>,
    pub seed: u64,
    /// Flip proposals per timing repeat.
    pub flips: usize,
    pub repeats: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { n_modes: 50, n_photons: 2, sizes: vec![1, 5, 10, 25, 50], seed: 0, flips: 400_000, repeats: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n_patterns: usize,
    /// Median over repeats.
    pub ns_per_flip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub slope_ns: f64,
    pub intercept_ns: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`, with `R²`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Wall time per Metropolis flip proposal against the number of planted
/// bunched channels, at a temperature where nearly every flip is accepted.
pub fn bench_scaling(opts: &BenchOptions) -> CliResult<BenchReport> {
    if opts.sizes.len() < 2 || opts.flips == 0 || opts.repeats == 0 {
        return Err(CliError::Config("need at least two sizes, and flips and repeats >= 1".into()));
    }
    if let Some(&p) = opts.sizes.iter().find(|&&p| p == 0 || p > opts.n_modes) {
        return Err(CliError::Config(format!("|Λ| = {p} must lie in 1..={}", opts.n_modes)));
    }
    let s = haar_random_unitary(opts.n_modes, derive_seed(opts.seed, &[0]));
    let order = random_mode_order(opts.n_modes, derive_seed(opts.seed, &[1]));
    let steps = opts.flips.div_ceil(opts.n_modes);
    let mut rows = Vec::new();
    for &p in &opts.sizes {
        let inst = ModelInstance::bunched(s.clone(), order[..p].to_vec(), opts.n_photons)?;
        let mut state = MCState::random(&inst, 1e6, stream(opts.seed, &[2, p as u64]))?;
        for _ in 0..steps / 10 + 1 {
            mc_step(&mut state, &inst)?;
        }
        let mut samples = Vec::with_capacity(opts.repeats);
        for _ in 0..opts.repeats {
            let start = Instant::now();
            for _ in 0..steps {
                mc_step(&mut state, &inst)?;
            }
            samples.push(start.elapsed().as_nanos() as f64 / (steps * opts.n_modes) as f64);
        }
        samples.sort_by(f64::total_cmp);
        rows.push(BenchRow { n_patterns: p, ns_per_flip: samples[samples.len() / 2] });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n_patterns as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ns_per_flip).collect();
    let (slope_ns, intercept_ns, r_squared) = linear_fit(&xs, &ys);
    Ok(BenchReport { rows, slope_ns, intercept_ns, r_squared })
}
