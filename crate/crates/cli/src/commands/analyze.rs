use std::path::Path;

use phopfield_core::analysis::summarize_cell;
use phopfield_core::dynamics::Trajectory;
use phopfield_core::model::ModelInstance;

use super::{instance_for, write_cells, SummaryRow};
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;
use crate::store::load_sample;

pub const SUMMARY_FILE: &str = "summary.csv";

/// Trajectories and instances of every completed sample of a `run` directory.
pub(crate) struct LoadedRun {
    pub temperatures: Vec<f64>,
    pub instances: Vec<ModelInstance>,
    /// Per sample, group-major.
    pub trajectories: Vec<Vec<Trajectory>>,
}

impl LoadedRun {
    pub fn at_slot(&self, slot: usize) -> Vec<Vec<&Trajectory>> {
        let n_t = self.temperatures.len();
        self.trajectories.iter().map(|ts| ts.iter().skip(slot).step_by(n_t).collect()).collect()
    }
}

pub(crate) fn open_run(dir: &Path) -> CliResult<Manifest> {
    let manifest = Manifest::load(dir)?
        .ok_or_else(|| CliError::Check(format!("{} has no manifest; run `phopfield run` first", dir.display())))?;
    if manifest.command != "run" {
        return Err(CliError::Check(format!("{} holds a `{}` output, not a run", dir.display(), manifest.command)));
    }
    if manifest.completed_samples.is_empty() {
        return Err(CliError::Check("no completed samples in the manifest".into()));
    }
    if manifest.config.n_measure == 0 {
        return Err(CliError::Check("the run recorded no measurement steps (n_measure = 0)".into()));
    }
    Ok(manifest)
}

pub(crate) fn load_run(dir: &Path, manifest: &Manifest) -> CliResult<LoadedRun> {
    let cfg = &manifest.config;
    let temperatures = cfg.ladder()?;
    let mut instances = Vec::new();
    let mut trajectories = Vec::new();
    for &s in &manifest.completed_samples {
        instances.push(instance_for(cfg, s)?);
        trajectories.push(load_sample(dir, manifest, s, &temperatures)?);
    }
    Ok(LoadedRun { temperatures, instances, trajectories })
}

pub(crate) fn analyze_with(dir: &Path, manifest: &mut Manifest) -> CliResult<Vec<SummaryRow>> {
    let loaded = load_run(dir, manifest)?;
    let cfg = manifest.config.clone();
    let mut cells = Vec::new();
    for slot in 0..loaded.temperatures.len() {
        let per_sample: Vec<(&ModelInstance, Vec<&Trajectory>)> =
            loaded.instances.iter().zip(loaded.at_slot(slot)).collect();
        let alpha = cfg.alpha.unwrap_or_else(|| loaded.instances[0].alpha());
        cells.push(summarize_cell(alpha, &per_sample, cfg.stride(), cfg.n_bins, &cfg.thresholds)?);
    }
    let named: Vec<(String, _)> = cells.iter().enumerate().map(|(t, c)| (format!("t{t:02}"), c)).collect();
    let rows = write_cells(dir, manifest, SUMMARY_FILE, &named, cfg.n_exp)?;
    manifest.save(dir)?;
    Ok(rows)
}

/// Recomputes the summaries of a run directory from its declared files.
pub fn analyze(dir: &Path) -> CliResult<Vec<SummaryRow>> {
    let mut manifest = open_run(dir)?;
    analyze_with(dir, &mut manifest)
}
