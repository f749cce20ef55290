pub mod analyze;
pub mod bench;
pub mod phase;
pub mod run;
pub mod selfcorr;
pub mod validate;

use std::path::Path;

use serde::{Deserialize, Serialize};

use phopfield_core::analysis::{disorder_sample, CellSummary};
use phopfield_core::dynamics::measurement_noise;
use phopfield_core::linops::haar_random_unitary;
use phopfield_core::model::{InputState, ModelInstance, OutputSet};
use phopfield_core::seed::{derive_seed, TAG_MATRIX};

use crate::config::{LambdaMode, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;
use crate::store::{histogram_rows, write_csv};

/// Disorder sample `sample` of a run.
pub fn instance_for(cfg: &RunConfig, sample: usize) -> CliResult<ModelInstance> {
    match cfg.lambda_mode {
        LambdaMode::BunchedSubset => Ok(disorder_sample(cfg.n_modes, cfg.n_photons, cfg.bunched_patterns()?, cfg.master_seed, sample)?),
        LambdaMode::Explicit => {
            let s = haar_random_unitary(cfg.n_modes, derive_seed(cfg.master_seed, &[TAG_MATRIX, sample as u64]));
            let inst = ModelInstance::new(s, OutputSet::Explicit(cfg.explicit_configs()?), cfg.n_photons, InputState::DftUniform)?;
            inst.check_storage_ratio().map_err(|e| CliError::Config(e.to_string()))?;
            Ok(inst)
        }
    }
}

/// One row of `summary.csv` / `phase_summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub alpha: f64,
    pub n_patterns: usize,
    pub temperature: f64,
    pub n_samples: usize,
    pub n_pairs: usize,
    pub mean_abs_q: f64,
    pub frac_abs_q_above_half: f64,
    pub mean_abs_m: Option<f64>,
    pub mean_max_abs_m: Option<f64>,
    pub se_max_abs_m: Option<f64>,
    pub energy_mean: f64,
    pub energy_std: f64,
    pub mean_pr: f64,
    pub sigma_t: f64,
    pub sigma_exp: f64,
    pub noise_valid: bool,
    pub phase: Option<String>,
}

impl SummaryRow {
    pub fn new(cell: &CellSummary, n_exp: u64) -> Self {
        let sigma_exp = measurement_noise(cell.mean_pr, n_exp);
        Self {
            alpha: cell.alpha,
            n_patterns: cell.n_patterns,
            temperature: cell.temperature,
            n_samples: cell.n_samples,
            n_pairs: cell.pq.n_pairs,
            mean_abs_q: cell.pq.mean_abs_q,
            frac_abs_q_above_half: cell.pq.frac_abs_q_above_half,
            mean_abs_m: cell.pm.as_ref().map(|p| p.mean_abs_m),
            mean_max_abs_m: cell.pm.as_ref().map(|p| p.mean_max_abs_m),
            se_max_abs_m: cell.pm.as_ref().map(|p| p.se_max_abs_m),
            energy_mean: cell.energy_mean,
            energy_std: cell.energy_std,
            mean_pr: cell.mean_pr,
            sigma_t: cell.sigma_t,
            sigma_exp,
            noise_valid: sigma_exp < cell.sigma_t,
            phase: cell.phase.map(|p| p.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub alpha: f64,
    pub temperature: f64,
    pub n_exp: u64,
    pub mean_pr: f64,
    pub sigma_exp: f64,
    pub sigma_t: f64,
    pub valid: bool,
}

impl From<&SummaryRow> for NoiseRow {
    fn from(r: &SummaryRow) -> Self {
        Self {
            alpha: r.alpha,
            temperature: r.temperature,
            n_exp: 0,
            mean_pr: r.mean_pr,
            sigma_exp: r.sigma_exp,
            sigma_t: r.sigma_t,
            valid: r.noise_valid,
        }
    }
}

/// Summary table, noise-window table and per-cell histograms, all declared.
/// Histogram files are named `histograms/{prefix}t{slot:02}_{kind}.csv`.
pub(crate) fn write_cells(
    dir: &Path,
    manifest: &mut Manifest,
    summary_name: &str,
    cells: &[(String, &CellSummary)],
    n_exp: u64,
) -> CliResult<Vec<SummaryRow>> {
    let rows: Vec<SummaryRow> = cells.iter().map(|(_, c)| SummaryRow::new(c, n_exp)).collect();
    write_csv(&dir.join(summary_name), &rows)?;
    manifest.declare(dir, summary_name)?;
    let noise: Vec<NoiseRow> = rows.iter().map(|r| NoiseRow { n_exp, ..NoiseRow::from(r) }).collect();
    write_csv(&dir.join("noise_window.csv"), &noise)?;
    manifest.declare(dir, "noise_window.csv")?;
    for (stem, cell) in cells {
        let mut hists = vec![("pq", &cell.pq.histogram)];
        if let Some(pm) = &cell.pm {
            hists.extend([("pm_signed", &pm.signed), ("pm_abs", &pm.magnitude), ("pm_max_abs", &pm.max_magnitude)]);
        }
        for (kind, h) in hists {
            let rel = format!("histograms/{stem}_{kind}.csv");
            write_csv(&dir.join(&rel), histogram_rows(h))?;
            manifest.declare(dir, &rel)?;
        }
    }
    Ok(rows)
}
