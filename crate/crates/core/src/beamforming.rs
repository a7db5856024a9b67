//! Transmit beamforming and received SNR.

use num_complex::Complex64;

use crate::channel::ChannelVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BeamVector {
    pub weights: Vec<Complex64>,
    pub power_budget: f64,
}

impl BeamVector {
    pub fn power(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrResult {
    pub snr_linear: f64,
    pub snr_db: f64,
    pub noise_power: f64,
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Maximum ratio transmission: `w = sqrt(P) h / |h|`.
pub fn mrt(h: &ChannelVector, power_budget: f64) -> Result<BeamVector> {
    let norm = h.norm_sqr().sqrt();
    if !(norm > 0.0) {
        return Err(Error::DegenerateChannel);
    }
    let scale = power_budget.sqrt() / norm;
    Ok(BeamVector {
        weights: h.as_slice().iter().map(|x| x * scale).collect(),
        power_budget,
    })
}

/// Equal-power, equal-phase excitation used when no beamforming is applied.
pub fn uniform_beam(elements: usize, power_budget: f64) -> BeamVector {
    let amp = (power_budget / elements as f64).sqrt();
    BeamVector {
        weights: vec![Complex64::new(amp, 0.0); elements],
        power_budget,
    }
}

/// `|h^H w|^2 / noise_power`.
pub fn received_snr(h: &ChannelVector, w: &BeamVector, noise_power: f64) -> Result<SnrResult> {
    if h.len() != w.weights.len() {
        return Err(Error::Input(format!(
            "channel has {} entries, beam has {}",
            h.len(),
            w.weights.len()
        )));
    }
    if !(noise_power > 0.0) {
        return Err(Error::Input(format!(
            "noise power {noise_power} must be > 0"
        )));
    }
    let inner: Complex64 = h
        .as_slice()
        .iter()
        .zip(&w.weights)
        .map(|(h, w)| h.conj() * w)
        .sum();
    let snr_linear = inner.norm_sqr() / noise_power;
    Ok(SnrResult {
        snr_linear,
        snr_db: linear_to_db(snr_linear),
        noise_power,
    })
}

/// SNR reached with MRT; a channel with zero norm yields zero SNR rather than
/// an error.
pub fn mrt_snr(h: &ChannelVector, power_budget: f64, noise_power: f64) -> Result<f64> {
    match mrt(h, power_budget) {
        Ok(w) => Ok(received_snr(h, &w, noise_power)?.snr_linear),
        Err(Error::DegenerateChannel) => Ok(0.0),
        Err(e) => Err(e),
    }
}
