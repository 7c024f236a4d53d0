//! Plain-text tables: trajectory, aggregate and spectrum CSVs.
//!
//! Numbers are written with 17 significant digits in `e` notation, which
//! round-trips every `f64` exactly and never depends on locale.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::observables::EntropyRecord;
use crate::spectral::PowerSpectrum;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad number '{s}': {e}")))
}

/// Column names of a trajectory table for an `len`-site chain.
pub fn trajectory_header(len: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "S_avg", "T", "S_half", "delta"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((1..=len).map(|n| format!("S_{n}")));
    cols
}

/// Writes entropy records; `unit` multiplies every entropy column (1 for
/// nats, `1/ln 2` for bits).
pub fn write_trajectory(records: &[EntropyRecord], unit: f64) -> String {
    let len = records.first().map_or(0, EntropyRecord::chain_len);
    let mut out = trajectory_header(len).join(",");
    out.push('\n');
    for r in records {
        let mut row = vec![
            fmt_f64(r.t),
            fmt_f64(unit * r.average),
            fmt_f64(unit * r.total_correlations),
            fmt_f64(r.half_chain.map_or(f64::NAN, |s| unit * s)),
            fmt_f64(unit * r.lattice_deviation),
        ];
        row.extend(r.site_entropies.iter().map(|s| fmt_f64(unit * s)));
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn read_trajectory(text: &str) -> Result<Vec<EntropyRecord>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trajectory table".into()))?
        .split(',')
        .collect();
    if header.len() < 6 || header[..5] != ["t", "S_avg", "T", "S_half", "delta"] {
        return Err(Error::Parse(format!("unexpected trajectory header {header:?}")));
    }
    let len = header.len() - 5;
    lines
        .map(|line| {
            let v: Vec<f64> = line.split(',').map(parse_f64).collect::<Result<_>>()?;
            if v.len() != header.len() {
                return Err(Error::Parse(format!("row has {} fields, expected {}", v.len(), header.len())));
            }
            Ok(EntropyRecord {
                t: v[0],
                site_entropies: v[5..5 + len].to_vec(),
                average: v[1],
                total_correlations: v[2],
                half_chain: if v[3].is_nan() { None } else { Some(v[3]) },
                lattice_deviation: v[4],
            })
        })
        .collect()
}

pub fn read_trajectory_file(path: &Path) -> Result<Vec<EntropyRecord>> {
    read_trajectory(&std::fs::read_to_string(path)?)
}

/// One named numeric column of a CSV with a header row.
pub fn read_column(text: &str, name: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty table".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let idx = header
        .iter()
        .position(|h| *h == name)
        .ok_or_else(|| Error::Parse(format!("no column '{name}' in {header:?}")))?;
    lines
        .map(|l| {
            l.split(',')
                .nth(idx)
                .ok_or_else(|| Error::Parse(format!("short row '{l}'")))
                .and_then(parse_f64)
        })
        .collect()
}

pub fn write_spectrum(spectrum: &PowerSpectrum) -> String {
    let mut out = String::from("omega,P\n");
    for (w, p) in spectrum.omega.iter().zip(&spectrum.magnitude) {
        let _ = writeln!(out, "{},{}", fmt_f64(*w), fmt_f64(*p));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        assert_eq!(
            trajectory_header(3),
            vec!["t", "S_avg", "T", "S_half", "delta", "S_1", "S_2", "S_3"]
        );
    }

    #[test]
    fn number_format_has_enough_digits() {
        let s = fmt_f64(std::f64::consts::LN_2);
        let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
        assert!(digits >= 12, "{s}");
        assert_eq!(parse_f64(&fmt_f64(f64::NAN)).unwrap().is_nan(), true);
        assert!(parse_f64("abc").is_err());
    }

    #[test]
    fn missing_half_chain_survives() {
        let r = EntropyRecord::from_site_entropies(0.5, vec![0.1, 0.2], None);
        let back = read_trajectory(&write_trajectory(&[r.clone()], 1.0)).unwrap();
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn column_lookup() {
        let text = "omega,P\n0.0e0,1.0e0\n1.0e0,2.5e0\n";
        assert_eq!(read_column(text, "P").unwrap(), vec![1.0, 2.5]);
        assert!(read_column(text, "Q").is_err());
    }

    proptest! {
        #[test]
        fn trajectory_round_trips_exactly(
            rows in prop::collection::vec((0.0f64..1e4, prop::collection::vec(0.0f64..0.7, 4), prop::option::of(0.0f64..2.0)), 1..8)
        ) {
            let records: Vec<EntropyRecord> = rows
                .into_iter()
                .map(|(t, s, h)| EntropyRecord::from_site_entropies(t, s, h))
                .collect();
            let back = read_trajectory(&write_trajectory(&records, 1.0)).unwrap();
            prop_assert_eq!(back, records);
        }
    }
}
