//! Result files. Everything is written to a temporary file in the target
//! directory and renamed into place.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use macov_core::{CoverageMap, Scheme, SchemeDelta};
use serde::Serialize;
use tempfile::NamedTempFile;

pub const SUMMARY_FILE: &str = "summary.json";

pub fn coverage_file(scheme: Scheme) -> String {
    format!("coverage_{}.csv", scheme.name())
}

pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp =
        NamedTempFile::new_in(dir).with_context(|| format!("writing into {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        for row in rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

/// Writes `coverage_<scheme>.csv` into `dir`.
pub fn write_coverage(dir: &Path, map: &CoverageMap) -> Result<PathBuf> {
    let path = dir.join(coverage_file(map.scheme));
    write_csv(&path, &map.records)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub covered: usize,
    pub pro_vol: f64,
    pub file: String,
}

impl SchemeSummary {
    pub fn new(map: &CoverageMap) -> Self {
        Self {
            scheme: map.scheme,
            covered: map.covered,
            pro_vol: map.pro_vol,
            file: coverage_file(map.scheme),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageSummary {
    pub master_seed: u64,
    pub voxels: usize,
    pub noise_power_w: f64,
    pub schemes: Vec<SchemeSummary>,
    pub deltas_pp: Vec<SchemeDelta>,
    pub wall_time_s: f64,
    /// The config that produced this run, as TOML.
    pub config: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub best_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub scheme: Scheme,
    pub master_seed: u64,
    pub covered: usize,
    pub voxels: usize,
    pub pro_vol: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a").join("x.csv");
        write_csv(
            &path,
            &[TracePoint {
                iteration: 0,
                best_snr_db: 1.5,
            }],
        )
        .unwrap();
        write_csv(
            &path,
            &[TracePoint {
                iteration: 1,
                best_snr_db: -2.0,
            }],
        )
        .unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "iteration,best_snr_db\n1,-2.0\n"
        );
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn failed_fill_leaves_nothing_behind() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        let r = write_atomic(&path, |w| {
            w.write_all(b"partial")?;
            anyhow::bail!("boom")
        });
        assert!(r.is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
