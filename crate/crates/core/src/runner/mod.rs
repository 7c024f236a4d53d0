//! Disorder sweeps: configuration, per-realization trajectories on disk,
//! and ensemble averages.
//!
//! A results directory looks like
//!
//! ```text
//! out/config.toml
//! out/W_10/realization_00000.csv   trajectory
//! out/W_10/realization_00000.json  manifest (written last; marks completion)
//! ```
//!
//! Every file is a pure function of the configuration, so rerunning a sweep
//! skips realizations whose manifest already carries the same config hash.

mod config;
mod ensemble;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, build_phenomenological_two_spin, sample_disorder, SparseHamiltonian};
use crate::observables::{entropy_record, EntropyRecord};
use crate::propagator::{evolve_on_grid, EvolveOptions};
use crate::states::product_state;

pub use config::{
    DisorderConfig, ExperimentConfig, GridSpec, InitialConfig, ModelConfig, ModelKind, ObservableConfig,
    OutputConfig, PropagatorConfig,
};
pub use ensemble::{aggregate, average_records, strength_dir, write_series, EnsembleResult, EnsembleSeries};

/// Fraction of failed realizations above which a sweep is aborted.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RealizationStatus {
    Ok,
    Failed,
}

/// Provenance of one trajectory. Wall-clock timing is logged rather than
/// stored so that identical configurations produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationManifest {
    pub config_hash: String,
    pub software_version: String,
    pub seed: u64,
    #[serde(rename = "W")]
    pub w: f64,
    pub realization_index: u64,
    pub fields: Vec<f64>,
    pub status: RealizationStatus,
    pub error: Option<String>,
    pub grid_points: usize,
    pub substeps: usize,
    pub matvecs: usize,
    pub entropy_unit: String,
    pub config: ExperimentConfig,
}

/// One realization's outcome.
#[derive(Debug, Clone)]
pub struct RealizationOutput {
    pub manifest: RealizationManifest,
    /// Empty for failed realizations.
    pub records: Vec<EntropyRecord>,
}

pub fn realization_stem(index: u64) -> String {
    format!("realization_{index:05}")
}

/// Builds the Hamiltonian of realization `index` at strength `w`.
pub fn realization_hamiltonian(cfg: &ExperimentConfig, w: f64, index: u64) -> Result<(SparseHamiltonian, Vec<f64>)> {
    match cfg.model.kind {
        ModelKind::TwoSpin => Ok((build_phenomenological_two_spin(cfg.model.v_int), Vec::new())),
        ModelKind::Xxz => {
            let d = sample_disorder(cfg.model.chain_len, w, cfg.disorder.seed, index)?;
            let h = build_hamiltonian(cfg.model.chain_len, cfg.model.delta, cfg.model.hopping, &d, cfg.model.boundary)?;
            Ok((h, d.fields))
        }
    }
}

/// Evolves one realization in memory. Propagation failures are reported
/// in the manifest rather than as an error.
pub fn run_realization(cfg: &ExperimentConfig, w: f64, index: u64) -> Result<RealizationOutput> {
    let started = Instant::now();
    let (h, fields) = realization_hamiltonian(cfg, w, index)?;
    let psi0 = product_state(&cfg.initial.state.expand(cfg.chain_len()))?;
    let grid = cfg.grid.build()?;
    let opts = EvolveOptions {
        propagator: cfg.propagator.kind,
        sector_blocked: cfg.propagator.sector_blocked,
        krylov: cfg.propagator.krylov,
    };
    let mut records = Vec::with_capacity(grid.len());
    let outcome = evolve_on_grid(&h, &psi0, &grid, &opts, |t, psi| {
        records.push(entropy_record(psi, t, cfg.observables.half_chain)?);
        Ok(())
    });
    let mut manifest = RealizationManifest {
        config_hash: cfg.hash(),
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.disorder.seed,
        w,
        realization_index: index,
        fields,
        status: RealizationStatus::Ok,
        error: None,
        grid_points: grid.len(),
        substeps: 0,
        matvecs: 0,
        entropy_unit: "nats".to_string(),
        config: persisted_config(cfg),
    };
    match outcome {
        Ok(stats) => {
            manifest.substeps = stats.substeps;
            manifest.matvecs = stats.matvecs;
        }
        Err(e @ Error::Propagation { .. }) => {
            log::warn!("W = {w}, realization {index}: {e}");
            manifest.status = RealizationStatus::Failed;
            manifest.error = Some(e.to_string());
            records.clear();
        }
        Err(e) => return Err(e),
    }
    log::debug!(
        "W = {w}, realization {index}: {:.3} s, {} matvecs",
        started.elapsed().as_secs_f64(),
        manifest.matvecs
    );
    Ok(RealizationOutput { manifest, records })
}

/// Output location and worker count do not belong in the physics record.
fn persisted_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.output = OutputConfig::default();
    c
}

/// Runs the full sweep, persisting per-realization files when an output
/// directory is configured, and returns the ensemble averages.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EnsembleResult> {
    cfg.validate()?;
    let started = Instant::now();
    if let Some(dir) = &cfg.output.dir {
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join("config.toml"), persisted_config(cfg).to_toml().as_bytes())?;
        for &w in &cfg.disorder.strengths {
            std::fs::create_dir_all(strength_dir(dir, w))?;
        }
    }
    let tasks: Vec<(f64, u64)> = cfg
        .disorder
        .strengths
        .iter()
        .flat_map(|&w| (0..cfg.disorder.realizations as u64).map(move |r| (w, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.output.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let hash = cfg.hash();
    let outputs: Vec<RealizationOutput> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(w, r)| match &cfg.output.dir {
                Some(dir) => run_persisted(cfg, &hash, dir, w, r),
                None => run_realization(cfg, w, r),
            })
            .collect::<Result<_>>()
    })?;

    let failed = outputs.iter().filter(|o| o.manifest.status == RealizationStatus::Failed).count();
    if failed > 0 {
        log::warn!("{failed} of {} realizations failed and were excluded", outputs.len());
    }
    if failed as f64 > MAX_FAILURE_FRACTION * outputs.len() as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total: outputs.len(),
        });
    }
    let mut series = Vec::new();
    for &w in &cfg.disorder.strengths {
        let group: Vec<&RealizationOutput> = outputs.iter().filter(|o| o.manifest.w == w).collect();
        let ok: Vec<Vec<EntropyRecord>> = group
            .iter()
            .filter(|o| o.manifest.status == RealizationStatus::Ok)
            .map(|o| o.records.clone())
            .collect();
        series.push(average_records(w, &ok, group.len() - ok.len())?);
    }
    log::info!(
        "{} realizations in {:.1} s",
        outputs.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(EnsembleResult {
        config_hash: hash,
        seed: cfg.disorder.seed,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        series,
        manifests: outputs.into_iter().map(|o| o.manifest).collect(),
    })
}

/// Reuses a finished realization with a matching hash, otherwise computes
/// and writes it (trajectory first, manifest last).
fn run_persisted(cfg: &ExperimentConfig, hash: &str, dir: &Path, w: f64, index: u64) -> Result<RealizationOutput> {
    let base = strength_dir(dir, w).join(realization_stem(index));
    let (csv, json) = (base.with_extension("csv"), base.with_extension("json"));
    if let Some(done) = load_finished(&csv, &json, hash)? {
        log::debug!("W = {w}, realization {index}: reusing {}", json.display());
        return Ok(done);
    }
    let out = run_realization(cfg, w, index)?;
    if out.manifest.status == RealizationStatus::Ok {
        write_atomic(&csv, table::write_trajectory(&out.records, 1.0).as_bytes())?;
    }
    let text = serde_json::to_string_pretty(&out.manifest)? + "\n";
    write_atomic(&json, text.as_bytes())?;
    Ok(out)
}

fn load_finished(csv: &Path, json: &Path, hash: &str) -> Result<Option<RealizationOutput>> {
    let Ok(text) = std::fs::read_to_string(json) else {
        return Ok(None);
    };
    let Ok(manifest) = serde_json::from_str::<RealizationManifest>(&text) else {
        return Ok(None);
    };
    if manifest.config_hash != hash {
        return Ok(None);
    }
    let records = match manifest.status {
        RealizationStatus::Failed => Vec::new(),
        RealizationStatus::Ok => match table::read_trajectory_file(csv) {
            Ok(r) if r.len() == manifest.grid_points => r,
            _ => return Ok(None),
        },
    };
    Ok(Some(RealizationOutput { manifest, records }))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp: PathBuf = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::two_spin_entropy;
    use crate::states::Preset;

    fn small(len: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.model.chain_len = len;
        cfg.disorder.strengths = vec![1.0, 10.0];
        cfg.disorder.realizations = 3;
        cfg.grid = GridSpec::Log {
            t_min: 0.1,
            t_max: 100.0,
            points_per_decade: 5,
        };
        cfg
    }

    #[test]
    fn two_spin_single_realization_matches_closed_form() {
        let mut cfg = ExperimentConfig::default();
        cfg.model.kind = ModelKind::TwoSpin;
        cfg.disorder.strengths = vec![0.0];
        cfg.disorder.realizations = 1;
        cfg.initial.state = Preset::NeelX;
        cfg.grid = GridSpec::Uniform { dt: 0.05, t_max: 8.0 * std::f64::consts::PI };
        let res = run_experiment(&cfg).unwrap();
        let s = &res.series[0];
        assert_eq!(s.realizations, 1);
        for r in &s.mean {
            let expect = two_spin_entropy(cfg.model.v_int, r.t);
            assert!((r.site_entropies[0] - expect).abs() < 1e-9, "t = {}", r.t);
        }
    }

    #[test]
    fn in_memory_sweep_is_deterministic() {
        let cfg = small(4);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.series.len(), 2);
        assert_eq!(a.manifests.len(), 6);
        assert_eq!(a.manifests[0].fields.len(), 4);
    }

    #[test]
    fn realization_index_selects_fields() {
        let cfg = small(6);
        let (_, f0) = realization_hamiltonian(&cfg, 10.0, 0).unwrap();
        let (_, f1) = realization_hamiltonian(&cfg, 10.0, 1).unwrap();
        let (_, g0) = realization_hamiltonian(&cfg, 1.0, 0).unwrap();
        assert_ne!(f0, f1);
        for (a, b) in f0.iter().zip(&g0) {
            assert!((a - 10.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn stem_is_zero_padded() {
        assert_eq!(realization_stem(7), "realization_00007");
    }
}
