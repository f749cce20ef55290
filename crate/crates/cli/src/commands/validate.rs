use serde::Serialize;

use phopfield_core::linops::{
    dft_input_amplitudes, dft_matrix, enumerate_configs, haar_random_unitary, scattering_amplitude, ComplexMatrix,
    ModeConfig,
};
use phopfield_core::model::{
    fully_bunched_probability, output_probability, output_probability_couplings, output_probability_exact, FieldCache,
    InputState, ModelInstance, OutputSet,
};
use phopfield_core::seed::{derive_seed, stream};
use phopfield_core::SpinConfig;
use rand::Rng;

use crate::error::{CliError, CliResult};

/// Signature of the fully-bunched probability routine under test.
pub type FastPath = fn(&ComplexMatrix, &SpinConfig, &[usize], usize) -> phopfield_core::Result<f64>;

pub const DEFAULT_FAST_PATH: FastPath = fully_bunched_probability;

pub const MAX_VALIDATE_MODES: usize = 10;
pub const MAX_VALIDATE_PHOTONS: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub max_modes: usize,
    pub max_photons: usize,
    pub n_cases: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { max_modes: 6, max_photons: 3, n_cases: 20, seed: 0, tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:<28} {:>7} {:>12} {:>9}  status\n", "check", "cases", "max dev", "tol");
        for c in &self.checks {
            out += &format!(
                "{:<28} {:>7} {:>12.3e} {:>9.1e}  {}\n",
                c.name,
                c.cases,
                c.max_deviation,
                c.tolerance,
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
        out
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, worst: 0.0 }
    }

    fn record(&mut self, deviation: f64) {
        self.cases += 1;
        // NaN counts as a failure.
        self.worst = if deviation.is_nan() { f64::INFINITY } else { self.worst.max(deviation) };
    }

    fn finish(self, tolerance: f64) -> CheckResult {
        CheckResult {
            name: self.name,
            cases: self.cases,
            max_deviation: self.worst,
            tolerance,
            passed: self.worst <= tolerance,
        }
    }
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

fn explicit(s: ComplexMatrix, lambda: Vec<ModeConfig>, n: usize) -> phopfield_core::Result<ModelInstance> {
    ModelInstance::new(s, OutputSet::Explicit(lambda), n, InputState::DftUniform)
}

/// Oracle equivalences on small random instances.
pub fn validate(opts: &ValidateOptions, fast: FastPath) -> CliResult<ValidationReport> {
    if opts.max_modes == 0 || opts.max_photons == 0 || opts.n_cases == 0 {
        return Err(CliError::Config("max M, max N_ph and the case count must be >= 1".into()));
    }
    if opts.max_modes > MAX_VALIDATE_MODES || opts.max_photons > MAX_VALIDATE_PHOTONS {
        return Err(CliError::Config(format!(
            "exact enumeration is capped at M <= {MAX_VALIDATE_MODES}, N_ph <= {MAX_VALIDATE_PHOTONS}"
        )));
    }
    let mut fast_vs_exact = Tally::new("fast-vs-exact");
    let mut normalization = Tally::new("normalization");
    let mut dft = Tally::new("dft-amplitude");
    let mut flips = Tally::new("flip-update");
    let mut couplings = Tally::new("couplings-vs-amplitudes");
    for m in 1..=opts.max_modes {
        for n in 1..=opts.max_photons {
            let all = enumerate_configs(m, n)?;
            let psi = dft_input_amplitudes(m, n)?;
            let u = dft_matrix(m);
            let source = ModeConfig::bunched(0, n, m)?;
            for x in &all {
                dft.record((psi.amplitude(x) - scattering_amplitude(&u, &source, x)?).norm());
            }
            let mut rng = stream(opts.seed, &[m as u64, n as u64]);
            for case in 0..opts.n_cases {
                let s = haar_random_unitary(m, derive_seed(opts.seed, &[m as u64, n as u64, case as u64]));
                let sigma = SpinConfig::random(m, &mut rng);
                let p = rng.random_range(1..=m);
                let mut modes: Vec<usize> = (0..m).collect();
                rand::seq::SliceRandom::shuffle(modes.as_mut_slice(), &mut rng);
                modes.truncate(p);

                let bunched: Vec<ModeConfig> =
                    modes.iter().map(|&mu| ModeConfig::bunched(mu, n, m)).collect::<phopfield_core::Result<_>>()?;
                let exact = output_probability_exact(&explicit(s.clone(), bunched, n)?, &sigma)?;
                fast_vs_exact.record(relative(fast(&s, &sigma, &modes, n)?, exact));

                let total = output_probability(&explicit(s.clone(), all.clone(), n)?, &sigma)?;
                normalization.record((total - 1.0).abs());

                let mut cache = FieldCache::new(&s, &sigma, &modes, n)?;
                let mut walked = sigma.clone();
                for _ in 0..1000 {
                    let i = rng.random_range(0..m);
                    cache.flip_update(&s, &mut walked, i)?;
                }
                flips.record(relative(cache.probability(), fast(&s, &walked, &modes, n)?));

                if n == 2 {
                    let k = all[rng.random_range(0..all.len())].clone();
                    let inst = explicit(s, vec![k], n)?;
                    let a = output_probability_couplings(&inst, &sigma)?;
                    let b = output_probability_exact(&inst, &sigma)?;
                    couplings.record(relative(a, b));
                }
            }
        }
    }
    let tol = opts.tolerance;
    Ok(ValidationReport {
        checks: vec![
            fast_vs_exact.finish(tol),
            normalization.finish(tol),
            dft.finish(tol),
            flips.finish(tol),
            couplings.finish(tol),
        ],
    })
}
