use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How hard pulses are modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseMode {
    /// Instantaneous rotations of both spins; offsets and coupling ignored
    /// during the pulse.
    Ideal,
    /// Finite-length pulses of strength `omega1` with the free Hamiltonian
    /// on, which tilts the effective rotation axis.
    Realistic,
}

impl fmt::Display for PulseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PulseMode::Ideal => "ideal",
            PulseMode::Realistic => "realistic",
        })
    }
}

impl FromStr for PulseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(PulseMode::Ideal),
            "realistic" => Ok(PulseMode::Realistic),
            other => Err(Error::InvalidConfig(format!(
                "pulse mode must be 'ideal' or 'realistic', got '{other}'"
            ))),
        }
    }
}

/// A weakly coupled heteronuclear-like spin pair in the rotating frame,
/// plus the knobs of the simulated spectrometer.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    /// Splitting between the two resonances, rad/s. Spin I sits at +omega/2.
    pub omega: f64,
    /// Scalar coupling, Hz.
    pub j: f64,
    /// Transverse relaxation time, s. `f64::INFINITY` disables decay.
    pub t2: f64,
    /// RF nutation rate, rad/s.
    pub omega1: f64,
    /// Relative spread of the pulse amplitude across the sample.
    pub b1_sigma: f64,
    pub ensemble_samples: usize,
    pub pulse_mode: PulseMode,
    pub rng_seed: u64,
    /// Weight of `|00><00|` in the pseudo-pure start state.
    pub polarization: f64,
    /// Quadrature error of the receiver, radians.
    pub receiver_phase_error: f64,
    pub cyclops: bool,
    /// Delays averaged by the zero-quantum filter; 0 turns it off.
    pub zq_filter_steps: usize,
    /// Keep J on during composite-pulse delays in ideal mode. Realistic
    /// mode always keeps it on.
    pub composite_coupling: bool,
}

impl Default for SpinSystem {
    fn default() -> Self {
        SpinSystem {
            omega: 2.0 * PI * 700.0,
            j: 7.0,
            t2: 1.5,
            omega1: 2.0 * PI * 10_000.0,
            b1_sigma: 0.05,
            ensemble_samples: 64,
            pulse_mode: PulseMode::Ideal,
            rng_seed: 0,
            polarization: 1.0,
            receiver_phase_error: 0.0,
            cyclops: true,
            zq_filter_steps: 4,
            composite_coupling: false,
        }
    }
}

impl SpinSystem {
    /// Default frequencies with every imperfection switched off.
    pub fn ideal() -> Self {
        SpinSystem {
            t2: f64::INFINITY,
            b1_sigma: 0.0,
            ensemble_samples: 1,
            pulse_mode: PulseMode::Ideal,
            ..SpinSystem::default()
        }
    }

    /// Default parameters with finite-length, off-resonance pulses.
    pub fn realistic() -> Self {
        SpinSystem {
            pulse_mode: PulseMode::Realistic,
            ..SpinSystem::default()
        }
    }

    pub fn omega_hz(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    pub fn omega1_hz(&self) -> f64 {
        self.omega1 / (2.0 * PI)
    }

    /// Whether J acts during composite-pulse delays.
    pub fn couples_composites(&self) -> bool {
        self.composite_coupling || self.pulse_mode == PulseMode::Realistic
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("omega", self.omega), ("j", self.j), ("omega1", self.omega1)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidSystem(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.t2.is_nan() || self.t2 <= 0.0 {
            return Err(Error::InvalidSystem(format!("t2 must be positive, got {}", self.t2)));
        }
        if !(self.b1_sigma >= 0.0 && self.b1_sigma.is_finite()) {
            return Err(Error::InvalidSystem(format!(
                "b1_sigma must be >= 0, got {}",
                self.b1_sigma
            )));
        }
        if self.ensemble_samples == 0 {
            return Err(Error::InvalidSystem("ensemble_samples must be at least 1".into()));
        }
        if !(self.polarization > 0.0 && self.polarization <= 1.0) {
            return Err(Error::InvalidSystem(format!(
                "polarization must lie in (0, 1], got {}",
                self.polarization
            )));
        }
        if !self.receiver_phase_error.is_finite() {
            return Err(Error::InvalidSystem("receiver_phase_error must be finite".into()));
        }
        if self.omega_hz() < 10.0 * self.j {
            log::warn!(
                "weak coupling is marginal: omega/2pi = {} Hz vs J = {} Hz",
                self.omega_hz(),
                self.j
            );
        }
        Ok(())
    }
}
