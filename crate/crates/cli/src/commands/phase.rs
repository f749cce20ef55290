use phopfield_core::analysis::{phase_sweep, SweepBase};

use super::{write_cells, SummaryRow};
use crate::config::{LambdaMode, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{now, Manifest};

pub const PHASE_SUMMARY_FILE: &str = "phase_summary.csv";

pub fn sweep_base(cfg: &RunConfig) -> CliResult<SweepBase> {
    Ok(SweepBase {
        n_modes: cfg.n_modes,
        n_photons: cfg.n_photons,
        schedule: cfg.schedule()?,
        n_groups: cfg.n_replicas,
        init: cfg.init,
        stride: cfg.stride(),
        n_bins: cfg.n_bins,
        thresholds: cfg.thresholds,
    })
}

/// The α grid: `alphas`, else the single `alpha` (or `n_patterns / M^{N_ph}`).
pub fn alpha_grid(cfg: &RunConfig) -> CliResult<Vec<f64>> {
    if let Some(a) = &cfg.alphas {
        return Ok(a.clone());
    }
    match (cfg.alpha, cfg.n_patterns) {
        (Some(a), _) => Ok(vec![a]),
        (None, Some(p)) => Ok(vec![p as f64 / (cfg.n_modes as f64).powi(cfg.n_photons as i32)]),
        (None, None) => Err(CliError::Config("phase-diagram needs alphas, alpha or n_patterns".into())),
    }
}

/// Sweeps the `(α, T)` grid and writes per-cell histograms plus the summary
/// and noise-window tables into `output_dir`.
pub fn phase_diagram(cfg: &RunConfig) -> CliResult<Vec<SummaryRow>> {
    cfg.validate()?;
    if cfg.lambda_mode != LambdaMode::BunchedSubset {
        return Err(CliError::Config("phase-diagram sweeps bunched-subset output sets only".into()));
    }
    let alphas = alpha_grid(cfg)?;
    for &a in &alphas {
        cfg.patterns_for(a)?;
    }
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    if let Some(m) = Manifest::load(dir)? {
        if m.command != "phase-diagram" || m.config != *cfg {
            return Err(CliError::Config(format!("{} already holds a different output", dir.display())));
        }
    }
    let mut manifest = Manifest::new("phase-diagram", cfg, alphas.len());
    manifest.save(dir)?;

    let sweep = phase_sweep(&sweep_base(cfg)?, &alphas, cfg.n_samples, cfg.master_seed)?;
    let n_t = sweep.temperatures.len();
    let named: Vec<(String, _)> = sweep
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| (format!("a{:02}_t{:02}", i / n_t, i % n_t), c))
        .collect();
    let rows = write_cells(dir, &mut manifest, PHASE_SUMMARY_FILE, &named, cfg.n_exp)?;
    manifest.completed_samples = (0..cfg.n_samples).collect();
    manifest.finished_at = Some(now());
    manifest.save(dir)?;
    Ok(rows)
}
