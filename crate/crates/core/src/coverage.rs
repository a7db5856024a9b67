//! Volumetric coverage: voxelization of the airspace, per-voxel SNR
//! maximization for each transmission scheme, and the coverability ratio.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{db_to_linear, linear_to_db, mrt_snr, received_snr, uniform_beam};
use crate::channel::{channel_vector, sample_paths, ChannelParams, PathSet};
use crate::error::{Error, Result};
use crate::geometry::{ArrayConfig, TiltAngle, Vec3};
use crate::optimizer::{optimize, LinkBudget, PsoParams, SearchSpace};
use crate::seeds;

/// Axis-aligned airspace region in the GCS, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

impl Region {
    fn axis(&self, a: usize) -> [f64; 2] {
        [self.x, self.y, self.z][a]
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|a| self.axis(a)[1] - self.axis(a)[0]).product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub region: Region,
    pub resolution: [f64; 3],
    pub counts: [usize; 3],
}

/// Splits `region` into voxels of edge `resolution` along each axis. Every
/// extent must be a whole multiple of its resolution.
pub fn make_grid(region: Region, resolution: [f64; 3]) -> Result<VoxelGrid> {
    let mut counts = [0usize; 3];
    for a in 0..3 {
        let [lo, hi] = region.axis(a);
        let step = resolution[a];
        let extent = hi - lo;
        if !(extent > 0.0 && extent.is_finite()) || !(step > 0.0 && step.is_finite()) {
            return Err(Error::Config(format!(
                "axis {a}: extent {extent} and resolution {step} must be positive"
            )));
        }
        let n = extent / step;
        let rounded = n.round();
        if rounded < 1.0 || (n - rounded).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "axis {a}: extent {extent} is not a multiple of resolution {step}"
            )));
        }
        counts[a] = rounded as usize;
    }
    Ok(VoxelGrid {
        region,
        resolution,
        counts,
    })
}

impl VoxelGrid {
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn voxel_volume(&self) -> f64 {
        self.resolution.iter().product()
    }

    /// Center of voxel `t`; indices run with z fastest, then y, then x.
    pub fn center(&self, t: usize) -> Vec3 {
        let [_, ny, nz] = self.counts;
        let idx = [t / (ny * nz), (t / nz) % ny, t % nz];
        let c = |a: usize| self.region.axis(a)[0] + (idx[a] as f64 + 0.5) * self.resolution[a];
        Vec3::new(c(0), c(1), c(2))
    }

    pub fn centers(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.len()).map(|t| self.center(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    /// Fixed nominal array, equal-phase excitation.
    #[serde(rename = "FPA_noBF")]
    FpaNoBf,
    /// Fixed nominal array with MRT.
    #[serde(rename = "FPA_BF")]
    FpaBf,
    /// Element positions searched, MRT, tilt fixed.
    #[serde(rename = "MA_BF")]
    MaBf,
    /// Element positions and tilt searched, MRT.
    #[serde(rename = "4DMA_BF")]
    Ma4dBf,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::FpaNoBf, Scheme::FpaBf, Scheme::MaBf, Scheme::Ma4dBf];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::FpaNoBf => "FPA_noBF",
            Scheme::FpaBf => "FPA_BF",
            Scheme::MaBf => "MA_BF",
            Scheme::Ma4dBf => "4DMA_BF",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_movable(self) -> bool {
        matches!(self, Scheme::MaBf | Scheme::Ma4dBf)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Input(format!(
                    "unknown scheme {s:?}; expected one of FPA_noBF, FPA_BF, MA_BF, 4DMA_BF"
                ))
            })
    }
}

/// Everything needed to evaluate a voxel, fully resolved to SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub array: ArrayConfig,
    pub channel: ChannelParams,
    /// Transmit power budget, watts.
    pub power_budget: f64,
    /// Receiver noise power, watts.
    pub noise_power: f64,
    pub threshold_db: f64,
    pub pso: PsoParams,
    /// Tilt bounds searched by the 4D scheme.
    pub tilt_range: (TiltAngle, TiltAngle),
    pub shared_fading: bool,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.pso.validate()?;
        if !(self.power_budget > 0.0 && self.power_budget.is_finite()) {
            return Err(Error::Config(format!(
                "power budget {} W must be > 0",
                self.power_budget
            )));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::Config(format!(
                "noise power {} W must be > 0",
                self.noise_power
            )));
        }
        if self.threshold_db.is_nan() {
            return Err(Error::Config("threshold must not be NaN".into()));
        }
        if self.tilt_range.0 > self.tilt_range.1 {
            return Err(Error::Config("tilt range is empty".into()));
        }
        Ok(())
    }

    pub fn link_budget(&self) -> LinkBudget {
        LinkBudget {
            power_budget: self.power_budget,
            noise_power: self.noise_power,
            pattern_sharpness: self.channel.pattern_sharpness,
        }
    }

    pub fn search_space(&self, scheme: Scheme) -> Option<SearchSpace> {
        match scheme {
            Scheme::FpaNoBf | Scheme::FpaBf => None,
            Scheme::MaBf => Some(SearchSpace::Positions),
            Scheme::Ma4dBf => Some(SearchSpace::PositionsAndTilt {
                min: self.tilt_range.0,
                max: self.tilt_range.1,
            }),
        }
    }

    /// Draws the channel realization seen at voxel `t`.
    pub fn voxel_paths(
        &self,
        center: &Vec3,
        t: usize,
        scheme: Scheme,
        master_seed: u64,
    ) -> Result<PathSet> {
        let mut rng = seeds::fading(master_seed, t, scheme, self.shared_fading);
        sample_paths(center, &self.array.base_position, &self.channel, &mut rng)
    }
}

/// Result of running one scheme on one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub snr_linear: f64,
    /// Best-so-far SNR per iteration; a single entry for fixed arrays.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub positions: Vec<Vec3>,
    pub tilt: TiltAngle,
}

/// Best SNR `scheme` reaches on `paths`. Searching schemes stop as soon as
/// `stop_at` (linear SNR) is reached.
pub fn scheme_snr(
    scenario: &Scenario,
    scheme: Scheme,
    paths: &PathSet,
    search_seed: u64,
    stop_at: Option<f64>,
) -> Result<SchemeOutcome> {
    let array = &scenario.array;
    let fixed = |snr: f64| SchemeOutcome {
        snr_linear: snr,
        trace: vec![snr],
        iterations: 0,
        positions: array.local_positions.clone(),
        tilt: array.tilt,
    };
    match scenario.search_space(scheme) {
        None => {
            let h = channel_vector(paths, array, scenario.channel.pattern_sharpness);
            let snr = if scheme == Scheme::FpaBf {
                mrt_snr(&h, scenario.power_budget, scenario.noise_power)?
            } else {
                let w = uniform_beam(array.element_count(), scenario.power_budget);
                received_snr(&h, &w, scenario.noise_power)?.snr_linear
            };
            Ok(fixed(snr))
        }
        Some(space) => {
            let params = PsoParams {
                seed: search_seed,
                ..scenario.pso.clone()
            };
            let r = optimize(
                array,
                paths,
                space,
                &params,
                scenario.link_budget(),
                stop_at,
            )?;
            Ok(SchemeOutcome {
                snr_linear: r.swarm.best_score,
                trace: r.swarm.score_trace,
                iterations: r.swarm.iterations_run,
                positions: r.positions,
                tilt: r.tilt,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoxelRecord {
    pub t: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub covered: bool,
    pub best_snr_db: f64,
    pub iterations_used: usize,
}

/// Decides coverability of voxel `t` centred at `center` under `scheme`.
pub fn evaluate_voxel(
    scenario: &Scenario,
    scheme: Scheme,
    t: usize,
    center: &Vec3,
    master_seed: u64,
) -> Result<VoxelRecord> {
    let paths = scenario.voxel_paths(center, t, scheme, master_seed)?;
    let stop_at = db_to_linear(scenario.threshold_db);
    let outcome = scheme_snr(
        scenario,
        scheme,
        &paths,
        seeds::search(master_seed, t, scheme),
        Some(stop_at),
    )?;
    let best_snr_db = linear_to_db(outcome.snr_linear);
    Ok(VoxelRecord {
        t,
        x: center.x,
        y: center.y,
        z: center.z,
        covered: best_snr_db >= scenario.threshold_db,
        best_snr_db,
        iterations_used: outcome.iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMap {
    pub scheme: Scheme,
    pub records: Vec<VoxelRecord>,
    pub covered: usize,
    pub pro_vol: f64,
    pub master_seed: u64,
    pub grid: VoxelGrid,
    pub scenario: Scenario,
}

impl CoverageMap {
    /// Coverability written as covered volume over total volume.
    pub fn pro_vol_by_volume(&self) -> f64 {
        self.covered as f64 / self.grid.region.volume() * self.grid.voxel_volume()
    }
}

/// Evaluates every voxel of `grid` on the current rayon pool.
pub fn run_coverage(
    grid: &VoxelGrid,
    scheme: Scheme,
    scenario: &Scenario,
    master_seed: u64,
) -> Result<CoverageMap> {
    scenario.validate()?;
    let records = (0..grid.len())
        .into_par_iter()
        .map(|t| evaluate_voxel(scenario, scheme, t, &grid.center(t), master_seed))
        .collect::<Result<Vec<_>>>()?;
    let covered = records.iter().filter(|r| r.covered).count();
    Ok(CoverageMap {
        scheme,
        pro_vol: covered as f64 / grid.len() as f64,
        covered,
        records,
        master_seed,
        grid: grid.clone(),
        scenario: scenario.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeDelta {
    pub scheme: Scheme,
    pub baseline: Scheme,
    /// `100 * (covered(scheme) - covered(baseline)) / T`.
    pub delta_pp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub maps: Vec<CoverageMap>,
    pub deltas: Vec<SchemeDelta>,
}

pub fn scheme_deltas(maps: &[CoverageMap]) -> Vec<SchemeDelta> {
    let mut deltas = Vec::new();
    for (i, base) in maps.iter().enumerate() {
        for map in &maps[i + 1..] {
            deltas.push(SchemeDelta {
                scheme: map.scheme,
                baseline: base.scheme,
                delta_pp: 100.0 * (map.covered as f64 - base.covered as f64)
                    / map.records.len() as f64,
            });
        }
    }
    deltas
}

/// Runs each scheme on the same grid and seed. Fading is shared between
/// schemes when the scenario asks for it.
pub fn compare_schemes(
    grid: &VoxelGrid,
    scenario: &Scenario,
    master_seed: u64,
    schemes: &[Scheme],
) -> Result<Comparison> {
    let maps = schemes
        .iter()
        .map(|&s| run_coverage(grid, s, scenario, master_seed))
        .collect::<Result<Vec<_>>>()?;
    let deltas = scheme_deltas(&maps);
    Ok(Comparison { maps, deltas })
}

pub const CALIBRATION_POINT: [f64; 3] = [500.0, 0.0, 150.0];
pub const CALIBRATION_REALIZATIONS: usize = 1000;
pub const CALIBRATION_SEED: u64 = 0x5eed_ca11;

/// Noise power that puts the fading-averaged FPA_BF SNR at `point` on
/// `target_db`, given the scenario's array, channel and power budget.
pub fn calibrate_noise(
    scenario: &Scenario,
    point: &Vec3,
    target_db: f64,
    realizations: usize,
    seed: u64,
) -> Result<f64> {
    if realizations == 0 {
        return Err(Error::Input(
            "calibration needs at least one realization".into(),
        ));
    }
    scenario.channel.validate()?;
    let mut rng = seeds::stream(seed, 0);
    let mut total = 0.0;
    for _ in 0..realizations {
        let paths = sample_paths(
            point,
            &scenario.array.base_position,
            &scenario.channel,
            &mut rng,
        )?;
        total +=
            channel_vector(&paths, &scenario.array, scenario.channel.pattern_sharpness).norm_sqr();
    }
    let mean_signal = scenario.power_budget * total / realizations as f64;
    let noise = mean_signal / db_to_linear(target_db);
    if !(noise > 0.0 && noise.is_finite()) {
        return Err(Error::DegenerateGeometry(format!(
            "calibration point {point:?} receives no signal"
        )));
    }
    Ok(noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::mrt;
    use approx::assert_relative_eq;

    const LAMBDA: f64 = 0.0857;

    pub(crate) fn scenario(threshold_db: f64) -> Scenario {
        let array = ArrayConfig::planar_grid(
            3,
            3,
            5.0 * LAMBDA,
            5.0 * LAMBDA,
            LAMBDA / 4.0,
            TiltAngle::from_degrees(-15.0).unwrap(),
            Vec3::new(0.0, 0.0, 10.0),
        )
        .unwrap();
        Scenario {
            array,
            channel: ChannelParams {
                rician_k: 3.0,
                pathloss_exponent: 2.0,
                wavelength: LAMBDA,
                nlos_paths: 5,
                pattern_sharpness: 2.0,
            },
            power_budget: 10.0,
            noise_power: 1e-11,
            threshold_db,
            pso: PsoParams {
                particles: 10,
                max_iters: 20,
                ..PsoParams::default()
            },
            tilt_range: (
                TiltAngle::from_degrees(-20.0).unwrap(),
                TiltAngle::from_degrees(20.0).unwrap(),
            ),
            shared_fading: true,
        }
    }

    fn cube(side: f64) -> Region {
        Region {
            x: [0.0, side],
            y: [0.0, side],
            z: [0.0, side],
        }
    }

    #[test]
    fn eight_voxel_grid() {
        let g = make_grid(cube(100.0), [50.0; 3]).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.voxel_volume(), 125_000.0);
        assert_eq!(g.center(0), Vec3::new(25.0, 25.0, 25.0));
        assert_eq!(g.center(1), Vec3::new(25.0, 25.0, 75.0));
        assert_eq!(g.center(7), Vec3::new(75.0, 75.0, 75.0));
    }

    #[test]
    fn airspace_grid_at_desk_resolution() {
        let r = Region {
            x: [0.0, 1000.0],
            y: [-500.0, 500.0],
            z: [0.0, 300.0],
        };
        let g = make_grid(r, [100.0; 3]).unwrap();
        assert_eq!(g.counts, [10, 10, 3]);
        assert_eq!(g.len(), 300);
        assert_relative_eq!(g.voxel_volume() * g.len() as f64, r.volume());
        for c in g.centers() {
            assert!(
                c.x > 0.0
                    && c.x < 1000.0
                    && c.y > -500.0
                    && c.y < 500.0
                    && c.z > 0.0
                    && c.z < 300.0
            );
        }
    }

    #[test]
    fn single_voxel_center_is_midpoint() {
        let r = Region {
            x: [10.0, 30.0],
            y: [-4.0, 4.0],
            z: [100.0, 101.0],
        };
        let g = make_grid(r, [20.0, 8.0, 1.0]).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.center(0), Vec3::new(20.0, 0.0, 100.5));
    }

    #[test]
    fn indivisible_extent_is_rejected() {
        assert!(matches!(
            make_grid(cube(100.0), [30.0, 50.0, 50.0]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            make_grid(cube(100.0), [0.0, 50.0, 50.0]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("3DMA".parse::<Scheme>().is_err());
    }

    #[test]
    fn voxel_at_base_station_is_degenerate() {
        let sc = scenario(10.0);
        let base = sc.array.base_position;
        let r = evaluate_voxel(&sc, Scheme::FpaBf, 0, &base, 1);
        assert!(matches!(r, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn fpa_bf_record_matches_direct_computation() {
        let sc = scenario(10.0);
        let center = Vec3::new(450.0, -150.0, 250.0);
        let rec = evaluate_voxel(&sc, Scheme::FpaBf, 42, &center, 9).unwrap();
        let paths = sample_paths(
            &center,
            &sc.array.base_position,
            &sc.channel,
            &mut seeds::fading(9, 42, Scheme::FpaBf, true),
        )
        .unwrap();
        let h = channel_vector(&paths, &sc.array, 2.0);
        let snr = received_snr(&h, &mrt(&h, 10.0).unwrap(), 1e-11).unwrap();
        assert_eq!(rec.best_snr_db, snr.snr_db);
        assert_eq!(rec.iterations_used, 0);
    }

    #[test]
    fn unbounded_threshold_covers_everything() {
        let sc = scenario(f64::NEG_INFINITY);
        let g = make_grid(cube(100.0), [50.0; 3]).unwrap();
        for s in Scheme::ALL {
            let map = run_coverage(&g, s, &sc, 3).unwrap();
            assert_eq!(map.pro_vol, 1.0);
            assert_eq!(map.records.len(), 8);
            assert!(map.records.iter().all(|r| r.iterations_used == 0));
        }
    }

    #[test]
    fn run_is_independent_of_thread_count() {
        let sc = scenario(25.0);
        let g = make_grid(
            Region {
                x: [0.0, 400.0],
                y: [-200.0, 200.0],
                z: [0.0, 200.0],
            },
            [100.0; 3],
        )
        .unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_coverage(&g, Scheme::MaBf, &sc, 11).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn coverage_identity_and_dominance() {
        let sc = scenario(28.0);
        let g = make_grid(
            Region {
                x: [0.0, 600.0],
                y: [-300.0, 300.0],
                z: [0.0, 200.0],
            },
            [100.0; 3],
        )
        .unwrap();
        let cmp = compare_schemes(&g, &sc, 5, &Scheme::ALL).unwrap();
        for map in &cmp.maps {
            let sum = map.records.iter().filter(|r| r.covered).count();
            assert_eq!(map.pro_vol, sum as f64 / g.len() as f64);
            assert_relative_eq!(map.pro_vol_by_volume(), map.pro_vol, max_relative = 1e-12);
            for r in &map.records {
                assert_eq!(r.covered, r.best_snr_db >= sc.threshold_db);
            }
        }
        let by = |s: Scheme| &cmp.maps[s.index()].records;
        for t in 0..g.len() {
            assert!(by(Scheme::FpaBf)[t].covered >= by(Scheme::FpaNoBf)[t].covered);
            assert!(by(Scheme::MaBf)[t].covered >= by(Scheme::FpaBf)[t].covered);
        }
        assert_eq!(cmp.deltas.len(), 6);
        let d = cmp
            .deltas
            .iter()
            .find(|d| d.scheme == Scheme::MaBf && d.baseline == Scheme::FpaBf)
            .unwrap();
        let expected =
            100.0 * (cmp.maps[2].covered as f64 - cmp.maps[1].covered as f64) / g.len() as f64;
        assert_eq!(d.delta_pp, expected);
    }

    #[test]
    fn threshold_monotonicity() {
        let g = make_grid(
            Region {
                x: [0.0, 800.0],
                y: [-400.0, 400.0],
                z: [0.0, 200.0],
            },
            [200.0, 200.0, 100.0],
        )
        .unwrap();
        let mut last = 1.0;
        for eps in [10.0, 20.0, 25.0, 30.0, 40.0] {
            let p = run_coverage(&g, Scheme::FpaBf, &scenario(eps), 2)
                .unwrap()
                .pro_vol;
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn calibration_hits_target_on_average() {
        let mut sc = scenario(10.0);
        let point = Vec3::from(CALIBRATION_POINT);
        let noise = calibrate_noise(&sc, &point, 10.0, 500, 1).unwrap();
        sc.noise_power = noise;
        let mut rng = seeds::stream(1, 0);
        let mean: f64 = (0..500)
            .map(|_| {
                let paths =
                    sample_paths(&point, &sc.array.base_position, &sc.channel, &mut rng).unwrap();
                scheme_snr(&sc, Scheme::FpaBf, &paths, 0, None)
                    .unwrap()
                    .snr_linear
            })
            .sum::<f64>()
            / 500.0;
        assert_relative_eq!(mean, 10.0, max_relative = 1e-9);
    }
}
