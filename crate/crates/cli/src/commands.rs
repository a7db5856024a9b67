//! Subcommand implementations.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Result};
use macov_core::beamforming::linear_to_db;
use macov_core::coverage::scheme_snr;
use macov_core::{compare_schemes, sample_paths, seeds, Comparison, Scheme, TiltAngle, Vec3};

use crate::config::{to_toml, ScenarioConfig};
use crate::output::{self, CoverageSummary, SchemeSummary, SweepRow, TracePoint, SUMMARY_FILE};

/// Default UAV position for single-link runs, meters.
pub const DEFAULT_UAV_POSITION: [f64; 3] = [400.0, 200.0, 300.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SnrReport {
    pub scheme: Scheme,
    pub position: Vec3,
    pub snr_db: f64,
    pub iterations: usize,
    pub tilt: TiltAngle,
    pub trace_db: Vec<f64>,
    pub trace_file: PathBuf,
}

impl fmt::Display for SnrReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.position;
        write!(
            f,
            "{} at ({}, {}, {}): SNR {:.4} dB, {} iterations, tilt {:.2} deg",
            self.scheme,
            p.x,
            p.y,
            p.z,
            self.snr_db,
            self.iterations,
            self.tilt.degrees()
        )
    }
}

/// Best SNR of `scheme` for a UAV at `position`, with the full best-so-far
/// trace written to `snr_<scheme>.csv` in `out`.
pub fn cmd_snr(
    cfg: &ScenarioConfig,
    position: Vec3,
    scheme: Scheme,
    out: &Path,
) -> Result<SnrReport> {
    let scenario = cfg.scenario()?;
    let master = cfg.master_seed;
    let mut rng = seeds::fading(master, 0, scheme, scenario.shared_fading);
    let paths = sample_paths(
        &position,
        &scenario.array.base_position,
        &scenario.channel,
        &mut rng,
    )?;
    let outcome = scheme_snr(
        &scenario,
        scheme,
        &paths,
        seeds::search(master, 0, scheme),
        None,
    )?;
    let trace_db: Vec<f64> = outcome.trace.iter().map(|&s| linear_to_db(s)).collect();
    let rows: Vec<TracePoint> = trace_db
        .iter()
        .enumerate()
        .map(|(iteration, &best_snr_db)| TracePoint {
            iteration,
            best_snr_db,
        })
        .collect();
    let trace_file = out.join(format!("snr_{}.csv", scheme.name()));
    output::write_csv(&trace_file, &rows)?;
    Ok(SnrReport {
        scheme,
        position,
        snr_db: linear_to_db(outcome.snr_linear),
        iterations: outcome.iterations,
        tilt: outcome.tilt,
        trace_db,
        trace_file,
    })
}

/// Coverage maps for `cfg.schemes` under a fixed noise power, written as one
/// CSV per scheme plus `summary.json`.
pub fn run_and_write(
    cfg: &ScenarioConfig,
    noise_power: f64,
    out: &Path,
) -> Result<(Comparison, CoverageSummary)> {
    let start = Instant::now();
    let scenario = cfg.scenario_with_noise(noise_power)?;
    let grid = cfg.grid()?;
    let comparison = compare_schemes(&grid, &scenario, cfg.master_seed, &cfg.schemes)?;
    for map in &comparison.maps {
        output::write_coverage(out, map)?;
    }
    let summary = CoverageSummary {
        master_seed: cfg.master_seed,
        voxels: grid.len(),
        noise_power_w: noise_power,
        schemes: comparison.maps.iter().map(SchemeSummary::new).collect(),
        deltas_pp: comparison.deltas.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        config: to_toml(cfg)?,
    };
    output::write_json(&out.join(SUMMARY_FILE), &summary)?;
    Ok((comparison, summary))
}

pub fn cmd_coverage(cfg: &ScenarioConfig, out: &Path) -> Result<(Comparison, CoverageSummary)> {
    run_and_write(cfg, cfg.noise_watts()?, out)
}

/// Per-voxel dominance count: voxels covered by `a` but not by `b`.
pub fn dominance_violations(comparison: &Comparison, a: Scheme, b: Scheme) -> Option<usize> {
    let find = |s| comparison.maps.iter().find(|m| m.scheme == s);
    let (ma, mb) = (find(a)?, find(b)?);
    Some(
        ma.records
            .iter()
            .zip(&mb.records)
            .filter(|(x, y)| y.covered && !x.covered)
            .count(),
    )
}

/// Runs several schemes on shared seeds and returns a printable report of
/// Pro_vol, pairwise deltas and per-voxel dominance.
pub fn cmd_compare(cfg: &ScenarioConfig, out: &Path) -> Result<(Comparison, String)> {
    ensure!(cfg.schemes.len() >= 2, "compare needs at least two schemes");
    let (comparison, summary) = cmd_coverage(cfg, out)?;
    let mut report = String::new();
    for s in &summary.schemes {
        report += &format!(
            "{:<9} covered {:>6}/{}  Pro_vol {:.4}\n",
            s.scheme.name(),
            s.covered,
            summary.voxels,
            s.pro_vol
        );
    }
    for d in &summary.deltas_pp {
        let lost = dominance_violations(&comparison, d.scheme, d.baseline).unwrap_or(0);
        report += &format!(
            "{:<9} vs {:<9} {:+8.3} pp  ({} voxels covered only by {})\n",
            d.scheme.name(),
            d.baseline.name(),
            d.delta_pp,
            lost,
            d.baseline.name()
        );
    }
    Ok((comparison, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Elements,
    MovementRange,
    NlosPaths,
    Tilt,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Elements => "M",
            SweepAxis::MovementRange => "d_mov",
            SweepAxis::NlosPaths => "L_NLoS",
            SweepAxis::Tilt => "tilt",
        }
    }

    /// Copy of `cfg` with this axis set to `value`. `d_mov` is in wavelengths
    /// and `tilt` in degrees.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = cfg.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                bail!(
                    "{} sweep value {v} must be a non-negative integer",
                    self.name()
                )
            }
        };
        match self {
            SweepAxis::Elements => c.array.elements = count(value)?,
            SweepAxis::MovementRange => c.array.d_mov = value,
            SweepAxis::NlosPaths => c.channel.nlos_paths = count(value)?,
            SweepAxis::Tilt => c.array.tilt_deg = value,
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coverage for each value of `axis`, on the base config's seed and noise
/// power. Each value gets its own directory `sweep_<axis>/<value>/`; the
/// tidy table `sweep_<axis>.csv` lands in `out`.
pub fn cmd_sweep(
    cfg: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    out: &Path,
) -> Result<Vec<SweepRow>> {
    ensure!(!values.is_empty(), "sweep needs at least one value");
    let configs = values
        .iter()
        .map(|&v| axis.apply(cfg, v))
        .collect::<Result<Vec<_>>>()?;
    let noise = cfg.noise_watts()?;
    let mut rows = Vec::new();
    for (&value, c) in values.iter().zip(&configs) {
        let dir = out
            .join(format!("sweep_{}", axis.name()))
            .join(value.to_string());
        let (_, summary) = run_and_write(c, noise, &dir)?;
        log::info!("{axis} = {value}: done in {:.1} s", summary.wall_time_s);
        for s in summary.schemes {
            rows.push(SweepRow {
                axis: axis.name().to_string(),
                value,
                scheme: s.scheme,
                master_seed: c.master_seed,
                covered: s.covered,
                voxels: summary.voxels,
                pro_vol: s.pro_vol,
            });
        }
    }
    output::write_csv(&out.join(format!("sweep_{}.csv", axis.name())), &rows)?;
    Ok(rows)
}

/// Calibrated noise power in watts for `cfg`.
pub fn cmd_calibrate_noise(cfg: &ScenarioConfig) -> Result<f64> {
    cfg.calibrate()
}
