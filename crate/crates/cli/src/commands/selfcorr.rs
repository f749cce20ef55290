use std::path::Path;

use serde::{Deserialize, Serialize};

use phopfield_core::dynamics::self_correlation;

use super::analyze::{load_run, open_run};
use crate::error::{CliError, CliResult};
use crate::store::write_csv;

pub const SELFCORR_FILE: &str = "selfcorr.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCorrRow {
    pub slot: usize,
    pub temperature: f64,
    pub tau: usize,
    pub f_self: f64,
    pub n_trajectories: usize,
}

/// `F(τ)` per temperature, averaged over replica groups and disorder samples.
pub fn selfcorr(dir: &Path, taus: &[usize]) -> CliResult<Vec<SelfCorrRow>> {
    let mut manifest = open_run(dir)?;
    if taus.is_empty() {
        return Err(CliError::Config("empty τ list".into()));
    }
    if let Some(&tau) = taus.iter().find(|&&t| t >= manifest.config.n_measure) {
        return Err(CliError::Config(format!("τ = {tau} is not below n_measure = {}", manifest.config.n_measure)));
    }
    let loaded = load_run(dir, &manifest)?;
    let mut rows = Vec::new();
    for (slot, &temperature) in loaded.temperatures.iter().enumerate() {
        let trajs: Vec<_> = loaded.at_slot(slot).into_iter().flatten().collect();
        for &tau in taus {
            let total = trajs.iter().map(|t| self_correlation(t, tau)).sum::<phopfield_core::Result<f64>>()?;
            rows.push(SelfCorrRow { slot, temperature, tau, f_self: total / trajs.len() as f64, n_trajectories: trajs.len() });
        }
    }
    write_csv(&dir.join(SELFCORR_FILE), &rows)?;
    manifest.declare(dir, SELFCORR_FILE)?;
    manifest.save(dir)?;
    Ok(rows)
}
