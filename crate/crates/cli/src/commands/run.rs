use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use phopfield_core::analysis::dynamics_seed;
use phopfield_core::dynamics::{run_emc, EmcRun};

use super::analyze::analyze_with;
use super::instance_for;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{now, Manifest};
use crate::store::{records_file, sample_dir, spins_file, thermalization_file, write_csv, write_sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub slot: usize,
    pub temperature: f64,
    pub flip_acceptance: f64,
    /// Swap acceptance with the next warmer slot; empty for the last.
    pub swap_rate_up: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub simulated: Vec<usize>,
    pub resumed: Vec<usize>,
}

pub fn ladder_file(sample: usize) -> String {
    format!("{}/ladder.csv", sample_dir(sample))
}

fn sample_files(sample: usize) -> [String; 4] {
    [spins_file(sample), records_file(sample), thermalization_file(sample), ladder_file(sample)]
}

fn ladder_rows(run: &EmcRun) -> Vec<LadderRow> {
    let n_t = run.n_temperatures();
    let rates = run.swap_rates();
    (0..n_t)
        .map(|slot| LadderRow {
            slot,
            temperature: run.temperatures[slot],
            flip_acceptance: (0..run.n_groups).map(|g| run.flip_acceptance[g * n_t + slot]).sum::<f64>() / run.n_groups as f64,
            swap_rate_up: rates.get(slot).copied().filter(|r| r.is_finite()),
        })
        .collect()
}

/// Simulates every disorder sample not already completed in `output_dir`,
/// checkpointing the manifest after each sample, then writes the summaries.
pub fn run(cfg: &RunConfig) -> CliResult<RunOutcome> {
    cfg.validate()?;
    let schedule = cfg.schedule()?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let mut manifest = match Manifest::load(&dir)? {
        Some(m) if m.command == "run" && m.config == *cfg => m,
        Some(_) => {
            return Err(CliError::Config(format!(
                "{} already holds a different run; choose another output directory",
                dir.display()
            )))
        }
        None => Manifest::new("run", cfg, 1),
    };
    manifest.finished_at = None;
    manifest.save(&dir)?;

    let (mut simulated, mut resumed) = (Vec::new(), Vec::new());
    for s in 0..cfg.n_samples {
        let done = manifest.completed_samples.contains(&s)
            && sample_files(s).iter().all(|f| manifest.is_declared_intact(&dir, f));
        if done {
            resumed.push(s);
            continue;
        }
        manifest.completed_samples.retain(|&c| c != s);
        let inst = instance_for(cfg, s)?;
        let result = run_emc(&inst, &schedule, cfg.n_replicas, dynamics_seed(cfg.master_seed, s, 0), cfg.init)?;
        write_sample(&dir, &mut manifest, s, &result, cfg.exchange_interval, cfg.n_therm)?;
        write_csv(&dir.join(ladder_file(s)), ladder_rows(&result))?;
        manifest.declare(&dir, &ladder_file(s))?;
        manifest.completed_samples.push(s);
        manifest.completed_samples.sort_unstable();
        manifest.save(&dir)?;
        simulated.push(s);
    }

    if cfg.n_measure > 0 {
        analyze_with(&dir, &mut manifest)?;
    }
    manifest.finished_at = Some(now());
    manifest.save(&dir)?;
    Ok(RunOutcome { output_dir: dir, simulated, resumed })
}
