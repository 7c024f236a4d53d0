//! Disorder averages and their persistence.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::EntropyRecord;

use super::table::{fmt_f64, read_trajectory_file};
use super::{realization_stem, RealizationManifest, RealizationStatus};

/// Pointwise mean and standard error over the realizations of one disorder
/// strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSeries {
    #[serde(rename = "W")]
    pub w: f64,
    /// Realizations that entered the averages.
    pub realizations: usize,
    /// Realizations excluded after a propagation failure.
    pub failed: usize,
    /// Column-wise means; `lattice_deviation` is the mean of the
    /// per-realization `δ(t)`.
    pub mean: Vec<EntropyRecord>,
    /// Standard errors of the same columns (sample deviation over `√n`).
    pub stderr: Vec<EntropyRecord>,
}

impl EnsembleSeries {
    pub fn times(&self) -> Vec<f64> {
        self.mean.iter().map(|r| r.t).collect()
    }

    /// `(t, ⟨S⟩(t))`.
    pub fn average_entropy(&self) -> Vec<(f64, f64)> {
        self.mean.iter().map(|r| (r.t, r.average)).collect()
    }

    /// Lattice RMS spread of the disorder-averaged site entropies.
    pub fn mean_profile_deviation(&self) -> Vec<f64> {
        self.mean
            .iter()
            .map(|r| EntropyRecord::from_site_entropies(r.t, r.site_entropies.clone(), None).lattice_deviation)
            .collect()
    }
}

/// Disorder averages for every strength of a sweep plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub config_hash: String,
    pub seed: u64,
    pub software_version: String,
    pub series: Vec<EnsembleSeries>,
    pub manifests: Vec<RealizationManifest>,
}

impl EnsembleResult {
    pub fn series_for(&self, w: f64) -> Option<&EnsembleSeries> {
        self.series.iter().find(|s| s.w == w)
    }
}

/// Mean and standard error of equally gridded trajectories.
pub fn average_records(w: f64, trajectories: &[Vec<EntropyRecord>], failed: usize) -> Result<EnsembleSeries> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::InvalidParameter(format!("no successful realizations at W = {w}")))?;
    let n = trajectories.len();
    for tr in trajectories {
        if tr.len() != first.len() || tr.iter().zip(first).any(|(a, b)| a.t != b.t) {
            return Err(Error::InvalidGrid(format!("realizations at W = {w} use different time grids")));
        }
        if tr.iter().any(|r| r.chain_len() != first[0].chain_len()) {
            return Err(Error::InvalidGrid(format!("realizations at W = {w} differ in chain length")));
        }
    }
    let mut mean = Vec::with_capacity(first.len());
    let mut stderr = Vec::with_capacity(first.len());
    for (k, head) in first.iter().enumerate() {
        let column = |f: &dyn Fn(&EntropyRecord) -> f64| -> (f64, f64) {
            mean_stderr(trajectories.iter().map(|tr| f(&tr[k])), n)
        };
        let (avg, avg_e) = column(&|r| r.average);
        let (tot, tot_e) = column(&|r| r.total_correlations);
        let (dev, dev_e) = column(&|r| r.lattice_deviation);
        let half = trajectories
            .iter()
            .all(|tr| tr[k].half_chain.is_some())
            .then(|| column(&|r| r.half_chain.unwrap_or(f64::NAN)));
        let sites: Vec<(f64, f64)> = (0..head.chain_len())
            .map(|s| column(&|r| r.site_entropies[s]))
            .collect();
        mean.push(EntropyRecord {
            t: head.t,
            site_entropies: sites.iter().map(|p| p.0).collect(),
            average: avg,
            total_correlations: tot,
            half_chain: half.map(|p| p.0),
            lattice_deviation: dev,
        });
        stderr.push(EntropyRecord {
            t: head.t,
            site_entropies: sites.iter().map(|p| p.1).collect(),
            average: avg_e,
            total_correlations: tot_e,
            half_chain: half.map(|p| p.1),
            lattice_deviation: dev_e,
        });
    }
    Ok(EnsembleSeries {
        w,
        realizations: n,
        failed,
        mean,
        stderr,
    })
}

fn mean_stderr(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

/// Table of means with `_err` columns; `unit` rescales entropies.
pub fn write_series(series: &EnsembleSeries, unit: f64) -> String {
    let len = series.mean.first().map_or(0, EntropyRecord::chain_len);
    let mut header: Vec<String> = ["t", "S_avg", "S_avg_err", "T", "T_err", "S_half", "S_half_err", "delta", "delta_err", "delta_profile"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for n in 1..=len {
        header.push(format!("S_{n}"));
        header.push(format!("S_{n}_err"));
    }
    let mut out = header.join(",");
    out.push('\n');
    let profile = series.mean_profile_deviation();
    for ((m, e), p) in series.mean.iter().zip(&series.stderr).zip(profile) {
        let mut row = vec![
            fmt_f64(m.t),
            fmt_f64(unit * m.average),
            fmt_f64(unit * e.average),
            fmt_f64(unit * m.total_correlations),
            fmt_f64(unit * e.total_correlations),
            fmt_f64(m.half_chain.map_or(f64::NAN, |v| unit * v)),
            fmt_f64(e.half_chain.map_or(f64::NAN, |v| unit * v)),
            fmt_f64(unit * m.lattice_deviation),
            fmt_f64(unit * e.lattice_deviation),
            fmt_f64(unit * p),
        ];
        for (a, b) in m.site_entropies.iter().zip(&e.site_entropies) {
            row.push(fmt_f64(unit * a));
            row.push(fmt_f64(unit * b));
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Directory holding the realizations of one disorder strength.
pub fn strength_dir(root: &Path, w: f64) -> PathBuf {
    root.join(format!("W_{w}"))
}

/// Rebuilds the ensemble averages from a results directory.
///
/// Every `W_*` subdirectory contributes one series. Each trajectory must
/// have a manifest, all trajectories of a strength must share one grid, and
/// when the directory carries a `config.toml` every configured realization
/// must be present.
pub fn aggregate(dir: &Path) -> Result<EnsembleResult> {
    let config = {
        let p = dir.join("config.toml");
        if p.exists() {
            Some(super::ExperimentConfig::load(&p)?)
        } else {
            None
        }
    };
    let mut strength_dirs: Vec<(f64, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(w) = name.strip_prefix("W_") {
            if path.is_dir() {
                let w: f64 = w
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad strength directory {}", path.display())))?;
                strength_dirs.push((w, path));
            }
        }
    }
    if let Some(cfg) = &config {
        for &w in &cfg.disorder.strengths {
            if !strength_dirs.iter().any(|(x, _)| *x == w) {
                return Err(Error::MissingManifest(strength_dir(dir, w)));
            }
        }
    }
    if strength_dirs.is_empty() {
        return Err(Error::MissingManifest(dir.to_path_buf()));
    }
    strength_dirs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut series = Vec::new();
    let mut manifests = Vec::new();
    let mut hash: Option<String> = None;
    let mut seed = config.as_ref().map_or(0, |c| c.disorder.seed);
    for (w, path) in strength_dirs {
        let (mut found, csvs) = scan_strength_dir(&path)?;
        for csv in &csvs {
            let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("");
            if !found.iter().any(|(_, p)| p.file_stem().and_then(|s| s.to_str()) == Some(stem)) {
                return Err(Error::MissingManifest(csv.with_extension("json")));
            }
        }
        if let Some(cfg) = &config {
            for r in 0..cfg.disorder.realizations {
                let expected = path.join(format!("{}.json", realization_stem(r as u64)));
                if !found.iter().any(|(_, p)| *p == expected) {
                    return Err(Error::MissingManifest(expected));
                }
            }
        }
        found.sort_by_key(|(m, _)| m.realization_index);
        let mut trajectories = Vec::new();
        let mut reference: Option<(PathBuf, Vec<f64>)> = None;
        let mut failed = 0;
        for (m, mpath) in found {
            match &hash {
                Some(h) if *h != m.config_hash => {
                    return Err(Error::InvalidParameter(format!(
                        "{} belongs to a different configuration",
                        mpath.display()
                    )))
                }
                None => hash = Some(m.config_hash.clone()),
                _ => {}
            }
            seed = m.seed;
            if m.status != RealizationStatus::Ok {
                failed += 1;
                manifests.push(m);
                continue;
            }
            let csv = mpath.with_extension("csv");
            if !csv.exists() {
                return Err(Error::Parse(format!("trajectory {} is missing", csv.display())));
            }
            let records = read_trajectory_file(&csv)?;
            let times: Vec<f64> = records.iter().map(|r| r.t).collect();
            match &reference {
                Some((rp, rt)) if *rt != times => return Err(Error::GridMismatch(rp.clone(), csv)),
                None => reference = Some((csv.clone(), times)),
                _ => {}
            }
            trajectories.push(records);
            manifests.push(m);
        }
        series.push(average_records(w, &trajectories, failed)?);
    }
    Ok(EnsembleResult {
        config_hash: hash.unwrap_or_default(),
        seed,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        series,
        manifests,
    })
}

type Scan = (Vec<(RealizationManifest, PathBuf)>, Vec<PathBuf>);

fn scan_strength_dir(path: &Path) -> Result<Scan> {
    let mut manifests = Vec::new();
    let mut csvs = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(path)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for p in entries {
        let is_realization = p
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("realization_"));
        if !is_realization {
            continue;
        }
        match p.extension().and_then(|e| e.to_str()) {
            Some("json") => {
                let m: RealizationManifest = serde_json::from_str(&std::fs::read_to_string(&p)?)?;
                manifests.push((m, p));
            }
            Some("csv") => csvs.push(p),
            _ => {}
        }
    }
    Ok((manifests, csvs))
}
