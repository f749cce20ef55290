//! Run configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use phopfield_core::analysis::{bunched_pattern_count, Thresholds, DEFAULT_BINS};
use phopfield_core::dynamics::{
    temperature_ladder, Initialization, Schedule, Spacing, PAPER_EXCHANGE_INTERVAL, PAPER_REPLICAS, PAPER_SAMPLES,
    PAPER_THERMALIZATION_STEPS,
};
use phopfield_core::linops::{ConfigSpace, ModeConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    BunchedSubset,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "M")]
    pub n_modes: usize,
    pub n_photons: usize,
    /// Storage ratio; for bunched sets `P = round(α M^{N_ph})`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Explicit pattern count, instead of `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_patterns: Option<usize>,
    pub lambda_mode: LambdaMode,
    /// Output configurations as mode lists, for `lambda_mode = "explicit"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_lambda: Option<Vec<Vec<usize>>>,
    pub temperatures: LadderConfig,
    pub n_therm: usize,
    pub n_measure: usize,
    pub exchange_interval: usize,
    /// Replica groups: independent chains per temperature.
    pub n_replicas: usize,
    pub n_samples: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "yes")]
    pub exchanges: bool,
    #[serde(default)]
    pub init: Initialization,
    /// α grid for `phase-diagram`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    /// Snapshot stride for overlaps; defaults to `exchange_interval`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default = "default_bins")]
    pub n_bins: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Detected pairs per frequency estimate, for the noise-window table.
    #[serde(default = "default_n_exp")]
    pub n_exp: u64,
}

fn yes() -> bool {
    true
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_n_exp() -> u64 {
    10_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Paper,
    Desk,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Paper => Self {
                n_modes: 50,
                n_photons: 2,
                alpha: Some(0.0004),
                n_patterns: None,
                lambda_mode: LambdaMode::BunchedSubset,
                explicit_lambda: None,
                temperatures: LadderConfig { min: 0.05, max: 0.6, count: 12, spacing: Spacing::Geometric },
                n_therm: PAPER_THERMALIZATION_STEPS,
                n_measure: 20_000,
                exchange_interval: PAPER_EXCHANGE_INTERVAL,
                n_replicas: PAPER_REPLICAS,
                n_samples: PAPER_SAMPLES,
                master_seed: 1,
                output_dir: PathBuf::from("runs/paper"),
                exchanges: true,
                init: Initialization::Random,
                alphas: Some(vec![0.0004, 0.0032, 0.01, 0.02]),
                stride: None,
                n_bins: DEFAULT_BINS,
                thresholds: Thresholds::default(),
                n_exp: default_n_exp(),
            },
            Preset::Desk => Self {
                temperatures: LadderConfig { min: 0.1, max: 0.6, count: 8, spacing: Spacing::Geometric },
                n_therm: 20_000,
                n_measure: 4_000,
                n_replicas: 12,
                n_samples: 4,
                output_dir: PathBuf::from("runs/desk"),
                ..Self::preset(Preset::Paper)
            },
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn stride(&self) -> usize {
        self.stride.unwrap_or(self.exchange_interval)
    }

    pub fn ladder(&self) -> CliResult<Vec<f64>> {
        let l = &self.temperatures;
        temperature_ladder(l.min, l.max, l.count, l.spacing).map_err(|e| CliError::Config(format!("temperatures: {e}")))
    }

    pub fn schedule(&self) -> CliResult<Schedule> {
        let mut s = Schedule::new(self.n_therm, self.n_measure, self.exchange_interval, self.ladder()?)
            .map_err(|e| CliError::Config(e.to_string()))?;
        s.exchanges = self.exchanges;
        Ok(s)
    }

    pub fn explicit_configs(&self) -> CliResult<Vec<ModeConfig>> {
        let lists = self
            .explicit_lambda
            .as_ref()
            .ok_or_else(|| CliError::Config("lambda_mode \"explicit\" needs explicit_lambda".into()))?;
        lists
            .iter()
            .map(|modes| {
                if modes.len() != self.n_photons {
                    return Err(CliError::Config(format!(
                        "explicit_lambda entry {modes:?} has {} photons, expected {}",
                        modes.len(),
                        self.n_photons
                    )));
                }
                ModeConfig::new(modes.clone(), self.n_modes).map_err(|e| CliError::Config(format!("explicit_lambda: {e}")))
            })
            .collect()
    }

    /// Number of planted channels `P` for a storage ratio.
    pub fn patterns_for(&self, alpha: f64) -> CliResult<usize> {
        bunched_pattern_count(alpha, self.n_modes, self.n_photons).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Bunched-set size from `n_patterns` or `alpha`.
    pub fn bunched_patterns(&self) -> CliResult<usize> {
        match (self.n_patterns, self.alpha) {
            (Some(p), None) => {
                if p == 0 || p > self.n_modes {
                    return Err(CliError::Config(format!("n_patterns = {p} must lie in 1..={}", self.n_modes)));
                }
                Ok(p)
            }
            (None, Some(a)) => self.patterns_for(a),
            (Some(_), Some(_)) => Err(CliError::Config("give either alpha or n_patterns, not both".into())),
            (None, None) => Err(CliError::Config("bunched-subset runs need alpha or n_patterns".into())),
        }
    }

    /// All checks, before any compute; the first problem found is reported.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n_modes == 0 || self.n_photons == 0 {
            return bad("M and n_photons must be >= 1".into());
        }
        if self.n_modes > 64 * 1024 {
            return bad(format!("M = {} is unreasonably large", self.n_modes));
        }
        if self.n_replicas == 0 || self.n_samples == 0 || self.n_bins == 0 || self.n_exp == 0 {
            return bad("n_replicas, n_samples, n_bins and n_exp must be >= 1".into());
        }
        if self.stride == Some(0) {
            return bad("stride must be >= 1".into());
        }
        self.schedule()?;
        let t = &self.thresholds;
        if !(t.theta_m.is_finite() && t.theta_q.is_finite()) {
            return bad("thresholds must be finite".into());
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return bad(format!("alpha = {a} must lie in (0, 1)"));
            }
        }
        match self.lambda_mode {
            LambdaMode::BunchedSubset => {
                if self.explicit_lambda.is_some() {
                    return bad("explicit_lambda is only allowed with lambda_mode \"explicit\"".into());
                }
                self.bunched_patterns()?;
            }
            LambdaMode::Explicit => {
                if self.alpha.is_some() || self.n_patterns.is_some() {
                    return bad("explicit runs take P from explicit_lambda; drop alpha/n_patterns".into());
                }
                let configs = self.explicit_configs()?;
                if configs.is_empty() {
                    return bad("explicit_lambda is empty".into());
                }
                let mut sorted = configs.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != configs.len() {
                    return bad("explicit_lambda lists a configuration twice".into());
                }
                let space = ConfigSpace::new(self.n_modes, self.n_photons).map_err(|e| CliError::Config(e.to_string()))?;
                if configs.len() as u128 >= space.cardinality() {
                    return bad("explicit_lambda must be a proper subset of the output configurations".into());
                }
            }
        }
        if let Some(alphas) = &self.alphas {
            if alphas.is_empty() {
                return bad("alphas grid is empty".into());
            }
            if self.lambda_mode != LambdaMode::BunchedSubset {
                return bad("alphas grids need lambda_mode \"bunched-subset\"".into());
            }
            for &a in alphas {
                self.patterns_for(a)?;
            }
        }
        Ok(())
    }
}
