//! Trajectory and table files.
//!
//! Per disorder sample `s` a run directory holds `sample_{s:03}/`:
//! - `spins.bin`: one byte per spin (`+1`/`-1` as `i8`), records back to back;
//! - `records.csv`: index sidecar, one row per record with its byte offset;
//! - `thermalization.csv`: slot energies at the end of each thermalization block.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use phopfield_core::analysis::Histogram;
use phopfield_core::dynamics::{EmcRun, Trajectory};
use phopfield_core::SpinConfig;

use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

pub fn sample_dir(sample: usize) -> String {
    format!("sample_{sample:03}")
}

pub fn spins_file(sample: usize) -> String {
    format!("{}/spins.bin", sample_dir(sample))
}

pub fn records_file(sample: usize) -> String {
    format!("{}/records.csv", sample_dir(sample))
}

pub fn thermalization_file(sample: usize) -> String {
    format!("{}/thermalization.csv", sample_dir(sample))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub group: usize,
    pub slot: usize,
    pub temperature: f64,
    pub step: usize,
    pub offset: u64,
    pub pr: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalizationRow {
    pub group: usize,
    pub slot: usize,
    pub temperature: f64,
    pub step: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub density: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    for row in rows {
        w.serialize(row).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_csv<T: DeserializeOwned>(bytes: &[u8], name: &str) -> CliResult<Vec<T>> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(CliError::csv(name))
}

pub fn histogram_rows(h: &Histogram) -> Vec<HistogramRow> {
    let edges = h.edges();
    h.density()
        .into_iter()
        .enumerate()
        .map(|(k, density)| HistogramRow { bin_lo: edges[k], bin_hi: edges[k + 1], density })
        .collect()
}

/// Writes one sample's trajectories and thermalization trace under `dir`,
/// declaring each file in `manifest`.
pub fn write_sample(dir: &Path, manifest: &mut Manifest, sample: usize, run: &EmcRun, exchange_interval: usize, n_therm: usize) -> CliResult<()> {
    let sub = dir.join(sample_dir(sample));
    std::fs::create_dir_all(&sub).map_err(CliError::io(&sub))?;

    let mut bytes = Vec::new();
    let mut rows = Vec::new();
    for traj in &run.trajectories {
        for t in 0..traj.len() {
            rows.push(RecordRow {
                group: traj.group(),
                slot: traj.slot(),
                temperature: traj.temperature(),
                step: n_therm + t + 1,
                offset: bytes.len() as u64,
                pr: traj.pr()[t],
                energy: traj.energy(t),
            });
            bytes.extend(traj.spins(t).as_slice().iter().map(|&s| s as u8));
        }
    }
    let spins = spins_file(sample);
    std::fs::write(dir.join(&spins), &bytes).map_err(CliError::io(dir.join(&spins)))?;
    write_csv(&dir.join(records_file(sample)), rows)?;

    let n_t = run.n_temperatures();
    let therm = run.thermalization_energies.iter().enumerate().flat_map(|(c, trace)| {
        trace.iter().enumerate().map(move |(b, &energy)| ThermalizationRow {
            group: c / n_t,
            slot: c % n_t,
            temperature: run.temperatures[c % n_t],
            step: ((b + 1) * exchange_interval).min(n_therm),
            energy,
        })
    });
    write_csv(&dir.join(thermalization_file(sample)), therm)?;

    for rel in [spins, records_file(sample), thermalization_file(sample)] {
        manifest.declare(dir, &rel)?;
    }
    Ok(())
}

/// One sample's trajectories, group-major (`[g * n_temperatures + slot]`),
/// read only from declared files with matching checksums.
pub fn load_sample(dir: &Path, manifest: &Manifest, sample: usize, temperatures: &[f64]) -> CliResult<Vec<Trajectory>> {
    let bytes = manifest.read_declared(dir, &spins_file(sample))?;
    let rows: Vec<RecordRow> = read_csv(&manifest.read_declared(dir, &records_file(sample))?, &records_file(sample))?;
    let n_modes = manifest.config.n_modes;
    let n_t = temperatures.len();
    let n_groups = manifest.config.n_replicas;
    let mut trajs: Vec<Trajectory> =
        (0..n_groups * n_t).map(|c| Trajectory::new(c / n_t, c % n_t, temperatures[c % n_t], n_modes)).collect();
    for row in rows {
        if row.group >= n_groups || row.slot >= n_t {
            return Err(CliError::Check(format!("record for group {} slot {} is out of range", row.group, row.slot)));
        }
        let start = row.offset as usize;
        let raw = bytes
            .get(start..start + n_modes)
            .ok_or_else(|| CliError::Check(format!("record offset {start} beyond spins.bin")))?;
        let sigma = SpinConfig::new(raw.iter().map(|&b| b as i8).collect())?;
        trajs[row.group * n_t + row.slot].push(&sigma, row.pr);
    }
    Ok(trajs)
}
