//! Scenario configuration files.
//!
//! A config is a TOML document. Every key is optional; absent keys take the
//! reference scenario defaults. Unknown keys are logged and ignored.

use std::fmt;
use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use macov_core::beamforming::dbm_to_watts;
use macov_core::coverage::{CALIBRATION_POINT, CALIBRATION_REALIZATIONS, CALIBRATION_SEED};
use macov_core::{
    calibrate_noise, make_grid, ArrayConfig, ChannelParams, PsoParams, Region, Scenario, Scheme,
    TiltAngle, Vec3, VoxelGrid,
};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_WAVELENGTH: f64 = 0.0857;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub master_seed: u64,
    /// Coverage threshold, dB.
    pub threshold_db: f64,
    pub schemes: Vec<Scheme>,
    pub array: ArraySection,
    pub channel: ChannelSection,
    pub power: PowerSection,
    pub region: RegionSection,
    pub pso: PsoSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            threshold_db: 10.0,
            schemes: Scheme::ALL.to_vec(),
            array: ArraySection::default(),
            channel: ChannelSection::default(),
            power: PowerSection::default(),
            region: RegionSection::default(),
            pso: PsoSection::default(),
        }
    }
}

/// Array geometry. Lengths are in wavelengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArraySection {
    /// Element count; must be a perfect square.
    pub elements: usize,
    /// Nominal grid spacing. Defaults to the movement range.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    /// Side of each element's cubic movement region.
    pub d_mov: f64,
    pub d_min: f64,
    pub tilt_deg: f64,
    /// Tilt bounds searched by 4DMA_BF.
    pub tilt_range_deg: [f64; 2],
    /// Array centre in the global frame, meters.
    pub base_position: [f64; 3],
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            elements: 9,
            spacing: None,
            d_mov: 5.0,
            d_min: 0.25,
            tilt_deg: -15.0,
            tilt_range_deg: [-20.0, 20.0],
            base_position: [0.0, 0.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelSection {
    /// Carrier wavelength in meters. Mutually exclusive with `frequency_hz`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
    pub pathloss_exponent: f64,
    pub rician_k: f64,
    pub nlos_paths: usize,
    pub pattern_sharpness: f64,
    pub shared_fading: bool,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            wavelength: None,
            frequency_hz: None,
            pathloss_exponent: 2.0,
            rician_k: 3.0,
            nlos_paths: 5,
            pattern_sharpness: 2.0,
            shared_fading: true,
        }
    }
}

impl ChannelSection {
    pub fn wavelength(&self) -> f64 {
        match (self.wavelength, self.frequency_hz) {
            (Some(l), _) => l,
            (None, Some(f)) => SPEED_OF_LIGHT / f,
            (None, None) => DEFAULT_WAVELENGTH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoisePower {
    #[default]
    Calibrate,
    Watts(f64),
}

impl fmt::Display for NoisePower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoisePower::Calibrate => f.write_str("calibrate"),
            NoisePower::Watts(w) => write!(f, "{w} W"),
        }
    }
}

impl Serialize for NoisePower {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NoisePower::Calibrate => s.serialize_str("calibrate"),
            NoisePower::Watts(w) => s.serialize_f64(*w),
        }
    }
}

impl<'de> Deserialize<'de> for NoisePower {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = NoisePower;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a noise power in watts or \"calibrate\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<NoisePower, E> {
                Ok(NoisePower::Watts(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<NoisePower, E> {
                Ok(NoisePower::Watts(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<NoisePower, E> {
                Ok(NoisePower::Watts(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<NoisePower, E> {
                if v.eq_ignore_ascii_case("calibrate") {
                    Ok(NoisePower::Calibrate)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerSection {
    pub p_max_dbm: f64,
    pub noise_power: NoisePower,
    /// Fading-averaged FPA_BF SNR at the calibration point, dB.
    pub calibration_target_db: f64,
}

impl Default for PowerSection {
    fn default() -> Self {
        Self {
            p_max_dbm: 40.0,
            noise_power: NoisePower::Calibrate,
            calibration_target_db: 10.0,
        }
    }
}

/// Airspace box in meters, split into cubic voxels of side `resolution`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegionSection {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
    pub resolution: f64,
}

impl Default for RegionSection {
    fn default() -> Self {
        Self {
            x: [0.0, 1000.0],
            y: [-500.0, 500.0],
            z: [0.0, 300.0],
            resolution: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoSection {
    pub particles: usize,
    pub max_iters: usize,
    pub c1: f64,
    pub c2: f64,
    pub inertia_max: f64,
    pub inertia_min: f64,
    /// Velocity clamp as a fraction of each dimension's range.
    pub velocity_fraction: f64,
    pub tilt_velocity_fraction: f64,
    pub initial_temperature: f64,
    /// Annealing cooling factor.
    pub cooling: f64,
}

impl Default for PsoSection {
    fn default() -> Self {
        let p = PsoParams::default();
        Self {
            particles: p.particles,
            max_iters: p.max_iters,
            c1: p.c1,
            c2: p.c2,
            inertia_max: p.inertia_max,
            inertia_min: p.inertia_min,
            velocity_fraction: p.velocity_fraction,
            tilt_velocity_fraction: p.tilt_velocity_fraction,
            initial_temperature: p.initial_temperature,
            cooling: p.cooling,
        }
    }
}

impl PsoSection {
    pub fn params(&self) -> PsoParams {
        PsoParams {
            particles: self.particles,
            max_iters: self.max_iters,
            c1: self.c1,
            c2: self.c2,
            inertia_max: self.inertia_max,
            inertia_min: self.inertia_min,
            velocity_fraction: self.velocity_fraction,
            tilt_velocity_fraction: self.tilt_velocity_fraction,
            initial_temperature: self.initial_temperature,
            cooling: self.cooling,
            seed: 0,
        }
    }
}

/// Parses a config document, returning it with the dotted paths of any keys
/// that were not recognised.
pub fn parse_config(text: &str) -> Result<(ScenarioConfig, Vec<String>)> {
    let de = toml::Deserializer::parse(text).context("malformed config")?;
    let mut unknown = Vec::new();
    let cfg: ScenarioConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
        .context("malformed config")?;
    Ok((cfg, unknown))
}

/// Reads and validates a config from `path`, or from stdin when `path` is
/// `-`. Unknown keys are logged as warnings.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .context("reading config from stdin")?;
        s
    } else {
        std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?
    };
    let (cfg, unknown) = parse_config(&text)?;
    for key in unknown {
        log::warn!("ignoring unknown config key `{key}`");
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn to_toml(cfg: &ScenarioConfig) -> Result<String> {
    Ok(toml::to_string(cfg)?)
}

fn check(problems: &mut Vec<String>, ok: bool, field: &str, value: impl fmt::Display, bound: &str) {
    if !ok {
        problems.push(format!("{field} = {value}: must be {bound}"));
    }
}

impl ScenarioConfig {
    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        let a = &self.array;
        let rows = (a.elements as f64).sqrt().round() as usize;
        check(
            &mut p,
            a.elements > 0 && rows * rows == a.elements,
            "array.elements",
            a.elements,
            "a positive perfect square",
        );
        if let Some(s) = a.spacing {
            check(&mut p, s > 0.0 && s.is_finite(), "array.spacing", s, "> 0");
        }
        check(
            &mut p,
            a.d_mov >= 0.0 && a.d_mov.is_finite(),
            "array.d_mov",
            a.d_mov,
            ">= 0",
        );
        check(
            &mut p,
            a.d_min > 0.0 && a.d_min.is_finite(),
            "array.d_min",
            a.d_min,
            "> 0",
        );
        let max = macov_core::geometry::MAX_TILT.to_degrees();
        check(
            &mut p,
            a.tilt_deg.abs() <= max,
            "array.tilt_deg",
            a.tilt_deg,
            &format!("within [-{max}, {max}]"),
        );
        let [lo, hi] = a.tilt_range_deg;
        check(
            &mut p,
            lo.abs() <= max && hi.abs() <= max && lo <= hi,
            "array.tilt_range_deg",
            format!("[{lo}, {hi}]"),
            &format!("an ordered pair within [-{max}, {max}]"),
        );
        check(
            &mut p,
            a.base_position.iter().all(|v| v.is_finite()),
            "array.base_position",
            format!("{:?}", a.base_position),
            "finite",
        );

        let c = &self.channel;
        if c.wavelength.is_some() && c.frequency_hz.is_some() {
            p.push("channel.wavelength and channel.frequency_hz: set at most one".into());
        }
        if let Some(l) = c.wavelength {
            check(
                &mut p,
                l > 0.0 && l.is_finite(),
                "channel.wavelength",
                l,
                "> 0",
            );
        }
        if let Some(f) = c.frequency_hz {
            check(
                &mut p,
                f > 0.0 && f.is_finite(),
                "channel.frequency_hz",
                f,
                "> 0",
            );
        }
        check(
            &mut p,
            c.pathloss_exponent > 0.0 && c.pathloss_exponent.is_finite(),
            "channel.pathloss_exponent",
            c.pathloss_exponent,
            "> 0",
        );
        check(
            &mut p,
            c.rician_k >= 0.0,
            "channel.rician_k",
            c.rician_k,
            ">= 0",
        );
        check(
            &mut p,
            c.pattern_sharpness >= 0.0 && c.pattern_sharpness.is_finite(),
            "channel.pattern_sharpness",
            c.pattern_sharpness,
            ">= 0",
        );

        let pw = &self.power;
        check(
            &mut p,
            pw.p_max_dbm.is_finite(),
            "power.p_max_dbm",
            pw.p_max_dbm,
            "finite",
        );
        if let NoisePower::Watts(w) = pw.noise_power {
            check(
                &mut p,
                w > 0.0 && w.is_finite(),
                "power.noise_power",
                w,
                "> 0 or \"calibrate\"",
            );
        }
        check(
            &mut p,
            pw.calibration_target_db.is_finite(),
            "power.calibration_target_db",
            pw.calibration_target_db,
            "finite",
        );
        check(
            &mut p,
            !self.threshold_db.is_nan(),
            "threshold_db",
            self.threshold_db,
            "a number",
        );
        check(
            &mut p,
            !self.schemes.is_empty(),
            "schemes",
            "[]",
            "non-empty",
        );

        let r = &self.region;
        for (name, [lo, hi]) in [("region.x", r.x), ("region.y", r.y), ("region.z", r.z)] {
            check(
                &mut p,
                lo.is_finite() && hi.is_finite() && lo < hi,
                name,
                format!("[{lo}, {hi}]"),
                "an increasing pair",
            );
        }
        check(
            &mut p,
            r.resolution > 0.0 && r.resolution.is_finite(),
            "region.resolution",
            r.resolution,
            "> 0",
        );

        let s = &self.pso;
        check(
            &mut p,
            s.particles >= 1,
            "pso.particles",
            s.particles,
            ">= 1",
        );
        check(
            &mut p,
            s.c1 >= 0.0 && s.c1.is_finite(),
            "pso.c1",
            s.c1,
            ">= 0",
        );
        check(
            &mut p,
            s.c2 >= 0.0 && s.c2.is_finite(),
            "pso.c2",
            s.c2,
            ">= 0",
        );
        check(
            &mut p,
            s.inertia_max.is_finite(),
            "pso.inertia_max",
            s.inertia_max,
            "finite",
        );
        check(
            &mut p,
            s.inertia_min.is_finite(),
            "pso.inertia_min",
            s.inertia_min,
            "finite",
        );
        check(
            &mut p,
            s.velocity_fraction >= 0.0 && s.velocity_fraction.is_finite(),
            "pso.velocity_fraction",
            s.velocity_fraction,
            ">= 0",
        );
        check(
            &mut p,
            s.tilt_velocity_fraction >= 0.0 && s.tilt_velocity_fraction.is_finite(),
            "pso.tilt_velocity_fraction",
            s.tilt_velocity_fraction,
            ">= 0",
        );
        check(
            &mut p,
            s.initial_temperature > 0.0 && s.initial_temperature.is_finite(),
            "pso.initial_temperature",
            s.initial_temperature,
            "> 0",
        );
        check(
            &mut p,
            s.cooling > 0.0 && s.cooling < 1.0,
            "pso.cooling",
            s.cooling,
            "in (0, 1)",
        );

        if !p.is_empty() {
            bail!("invalid config:\n  {}", p.join("\n  "));
        }
        Ok(())
    }

    pub fn power_watts(&self) -> f64 {
        dbm_to_watts(self.power.p_max_dbm)
    }

    pub fn array_config(&self) -> Result<ArrayConfig> {
        let a = &self.array;
        let l = self.channel.wavelength();
        let n = (a.elements as f64).sqrt().round() as usize;
        let d_mov = a.d_mov * l;
        let spacing = a.spacing.map_or(d_mov, |s| s * l);
        let [x, y, z] = a.base_position;
        Ok(ArrayConfig::planar_grid(
            n,
            n,
            spacing,
            d_mov,
            a.d_min * l,
            TiltAngle::from_degrees(a.tilt_deg)?,
            Vec3::new(x, y, z),
        )?)
    }

    pub fn grid(&self) -> Result<VoxelGrid> {
        let r = &self.region;
        let region = Region {
            x: r.x,
            y: r.y,
            z: r.z,
        };
        Ok(make_grid(region, [r.resolution; 3])?)
    }

    /// Builds the scenario with the given noise power in watts.
    pub fn scenario_with_noise(&self, noise_power: f64) -> Result<Scenario> {
        self.validate()?;
        let c = &self.channel;
        let [lo, hi] = self.array.tilt_range_deg;
        let scenario = Scenario {
            array: self.array_config()?,
            channel: ChannelParams {
                rician_k: c.rician_k,
                pathloss_exponent: c.pathloss_exponent,
                wavelength: c.wavelength(),
                nlos_paths: c.nlos_paths,
                pattern_sharpness: c.pattern_sharpness,
            },
            power_budget: self.power_watts(),
            noise_power,
            threshold_db: self.threshold_db,
            pso: self.pso.params(),
            tilt_range: (TiltAngle::from_degrees(lo)?, TiltAngle::from_degrees(hi)?),
            shared_fading: c.shared_fading,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Noise power in watts, running the calibration when asked to.
    pub fn noise_watts(&self) -> Result<f64> {
        match self.power.noise_power {
            NoisePower::Watts(w) => Ok(w),
            NoisePower::Calibrate => self.calibrate(),
        }
    }

    pub fn calibrate(&self) -> Result<f64> {
        let probe = self.scenario_with_noise(1.0)?;
        Ok(calibrate_noise(
            &probe,
            &Vec3::from(CALIBRATION_POINT),
            self.power.calibration_target_db,
            CALIBRATION_REALIZATIONS,
            CALIBRATION_SEED,
        )?)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario_with_noise(self.noise_watts()?)
    }
}
