//! Rician multipath channel between the array and a single-antenna UAV.
//!
//! One realization consists of a deterministic line-of-sight path plus
//! `nlos_paths` scattered paths with random angles and circularly-symmetric
//! Gaussian gains. Every path contributes to element `m` through the phase
//! `2pi/lambda * f_l . q_m` (with `f_l` the unit pointing vector and `q_m` the
//! global element position), weighted by the square root of the element
//! radiation pattern evaluated in the path direction.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{ArrayConfig, TiltAngle, Vec3};

/// Large-scale and multipath parameters shared by every voxel of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Rician factor; `f64::INFINITY` gives a pure line-of-sight channel.
    pub rician_k: f64,
    pub pathloss_exponent: f64,
    pub wavelength: f64,
    pub nlos_paths: usize,
    /// Cosine-pattern sharpness factor.
    pub pattern_sharpness: f64,
}

impl ChannelParams {
    /// Free-space loss at the 1 m reference distance, `(lambda / 4pi)^2`.
    pub fn reference_loss(&self) -> f64 {
        reference_loss(self.wavelength)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rician_k >= 0.0) {
            return Err(Error::Config(format!(
                "rician_k {} must be >= 0",
                self.rician_k
            )));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::Config(format!(
                "wavelength {} must be > 0",
                self.wavelength
            )));
        }
        if !self.pathloss_exponent.is_finite() {
            return Err(Error::Config("pathloss_exponent must be finite".into()));
        }
        if !(self.pattern_sharpness > 0.0 && self.pattern_sharpness.is_finite()) {
            return Err(Error::Config(format!(
                "pattern_sharpness {} must be > 0",
                self.pattern_sharpness
            )));
        }
        Ok(())
    }
}

pub fn reference_loss(wavelength: f64) -> f64 {
    (wavelength / (4.0 * PI)).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub azimuth: f64,
    /// Polar angle from the +z axis.
    pub elevation: f64,
    pub gain: Complex64,
    pub is_los: bool,
}

impl Path {
    pub fn direction(&self) -> Vec3 {
        pointing_vector(self.azimuth, self.elevation)
    }
}

pub fn pointing_vector(azimuth: f64, elevation: f64) -> Vec3 {
    let (st, ct) = elevation.sin_cos();
    let (sp, cp) = azimuth.sin_cos();
    Vec3::new(st * cp, st * sp, ct)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub los: Path,
    pub nlos: Vec<Path>,
    pub distance: f64,
    pub rician_k: f64,
    pub pathloss_exponent: f64,
    pub reference_loss: f64,
    pub wavelength: f64,
}

impl PathSet {
    pub fn path_count(&self) -> usize {
        1 + self.nlos.len()
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        std::iter::once(&self.los).chain(self.nlos.iter())
    }

    /// Mean NLoS per-path power, `beta0 d^-alpha / L`.
    pub fn nlos_path_variance(&self) -> f64 {
        nlos_path_variance(
            self.reference_loss,
            self.distance,
            self.pathloss_exponent,
            self.nlos.len(),
        )
    }
}

fn nlos_path_variance(beta0: f64, d: f64, alpha: f64, paths: usize) -> f64 {
    if paths == 0 {
        0.0
    } else {
        beta0 * d.powf(-alpha) / paths as f64
    }
}

/// Draws one channel realization between the mount at `base` and `uav`.
///
/// The line-of-sight angles follow from the geometry; scattered paths have
/// azimuth uniform on [-pi/2, pi/2], polar angle uniform on [0, pi/2] and
/// gains distributed as CN(0, beta0 d^-alpha / L).
pub fn sample_paths<R: Rng + ?Sized>(
    uav: &Vec3,
    base: &Vec3,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<PathSet> {
    let delta = uav - base;
    let distance = delta.norm();
    if !(distance > 1e-9) {
        return Err(Error::DegenerateGeometry(format!(
            "UAV position {uav:?} coincides with the base station"
        )));
    }
    let u = delta / distance;
    let beta0 = params.reference_loss();
    let los = Path {
        azimuth: u.y.atan2(u.x),
        elevation: u.z.clamp(-1.0, 1.0).acos(),
        gain: Complex64::new(
            beta0.sqrt() * distance.powf(-params.pathloss_exponent / 2.0),
            0.0,
        ),
        is_los: true,
    };

    let variance = nlos_path_variance(beta0, distance, params.pathloss_exponent, params.nlos_paths);
    let scale = (variance / 2.0).sqrt();
    let nlos = (0..params.nlos_paths)
        .map(|_| {
            let azimuth = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
            let elevation = rng.random_range(0.0..=FRAC_PI_2);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Path {
                azimuth,
                elevation,
                gain: Complex64::new(scale * re, scale * im),
                is_los: false,
            }
        })
        .collect();

    Ok(PathSet {
        los,
        nlos,
        distance,
        rician_k: params.rician_k,
        pathloss_exponent: params.pathloss_exponent,
        reference_loss: beta0,
        wavelength: params.wavelength,
    })
}

/// Cosine element pattern `2(1+rho) sin^rho(theta - beta) cos^rho(phi)` on the
/// front hemisphere, zero elsewhere (including wherever `sin(theta - beta)`
/// turns negative).
pub fn radiation_gain(azimuth: f64, elevation: f64, tilt: TiltAngle, rho: f64) -> f64 {
    if !(0.0..=FRAC_PI_2).contains(&elevation) || !(-FRAC_PI_2..=FRAC_PI_2).contains(&azimuth) {
        return 0.0;
    }
    let s = (elevation - tilt.radians()).sin();
    if s <= 0.0 {
        return 0.0;
    }
    let c = azimuth.cos().max(0.0);
    2.0 * (1.0 + rho) * s.powf(rho) * c.powf(rho)
}

/// `(sqrt(k/(k+1)), sqrt(1/(k+1)))`, with the pure-LoS limit for infinite `k`.
pub fn rician_weights(k: f64) -> (f64, f64) {
    if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    }
}

/// Per-path phase response `exp(i 2pi/lambda f_l . q)` of one element.
pub fn steering_vector(paths: &PathSet, element_global: &Vec3, wavelength: f64) -> Vec<Complex64> {
    let k = 2.0 * PI / wavelength;
    paths
        .paths()
        .map(|p| Complex64::cis(k * p.direction().dot(element_global)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(pub Vec<Complex64>);

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|h| h.norm_sqr()).sum()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }
}

/// A path set with the tilt-dependent pattern and Rician weights folded into
/// one complex coefficient per path, ready to be evaluated at many candidate
/// element placements.
#[derive(Debug, Clone)]
pub struct PathWeights {
    wavevectors: Vec<Vec3>,
    coefficients: Vec<Complex64>,
}

impl PathWeights {
    pub fn new(paths: &PathSet, tilt: TiltAngle, rho: f64) -> Self {
        let (w_los, w_nlos) = rician_weights(paths.rician_k);
        Self::with_weights(paths, tilt, rho, w_los, w_nlos)
    }

    fn with_weights(paths: &PathSet, tilt: TiltAngle, rho: f64, w_los: f64, w_nlos: f64) -> Self {
        let k = 2.0 * PI / paths.wavelength;
        let (wavevectors, coefficients) = paths
            .paths()
            .map(|p| {
                let w = if p.is_los { w_los } else { w_nlos };
                let amp = radiation_gain(p.azimuth, p.elevation, tilt, rho).sqrt();
                (p.direction() * k, p.gain * (w * amp))
            })
            .unzip();
        Self {
            wavevectors,
            coefficients,
        }
    }

    pub fn channel(&self, globals: &[Vec3]) -> ChannelVector {
        ChannelVector(
            globals
                .iter()
                .map(|q| {
                    self.wavevectors
                        .iter()
                        .zip(&self.coefficients)
                        .fold(Complex64::new(0.0, 0.0), |acc, (kv, c)| {
                            acc + c * Complex64::cis(kv.dot(q))
                        })
                })
                .collect(),
        )
    }
}

/// Combined Rician channel `sqrt(k/(k+1)) H_LoS + sqrt(1/(k+1)) H_NLoS` for
/// the array at its configured placement and tilt.
pub fn channel_vector(paths: &PathSet, cfg: &ArrayConfig, rho: f64) -> ChannelVector {
    PathWeights::new(paths, cfg.tilt, rho).channel(&cfg.global_positions())
}

/// Line-of-sight component alone, before Rician weighting.
pub fn los_component(paths: &PathSet, cfg: &ArrayConfig, rho: f64) -> ChannelVector {
    let only_los = PathSet {
        nlos: Vec::new(),
        ..paths.clone()
    };
    PathWeights::with_weights(&only_los, cfg.tilt, rho, 1.0, 0.0).channel(&cfg.global_positions())
}

/// Scattered component alone, before Rician weighting.
pub fn nlos_component(paths: &PathSet, cfg: &ArrayConfig, rho: f64) -> ChannelVector {
    PathWeights::with_weights(paths, cfg.tilt, rho, 0.0, 1.0).channel(&cfg.global_positions())
}
