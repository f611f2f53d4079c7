//! Trapped-ion layer: drive parameters, the effective two-photon coupling,
//! pulse timing, full bichromatic dynamics and the decoherence behaviour of
//! pair-encoded qubits.
//!
//! All frequencies and times are in units of the trap frequency (`ν = 1`).

pub mod full;
pub mod ode;
pub mod pair;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::Angle;

pub use full::{
    bichromatic_hamiltonian, extract_effective_rabi, simulate_full, simulate_sampled, BichromaticDrive,
    FullSystemState, RabiFit,
};
pub use pair::{collective_dephase, effective_pair_propagator, free_evolution, logical_fidelity, PairLevel, PairState};

/// Trap (centre-of-mass mode) frequency; every other frequency is a multiple.
pub const TRAP_FREQUENCY: f64 = 1.0;

/// Hard Lamb-Dicke limit for validated parameters; above [`LAMB_DICKE_WARN`]
/// a warning is raised.
pub const LAMB_DICKE_MAX: f64 = 0.2;
pub const LAMB_DICKE_WARN: f64 = 0.1;

/// Bichromatic drive: per-ion Rabi frequency `Ω`, Lamb-Dicke parameter `η`
/// and tone detuning `δ` (tones at `ω_eg ± δ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub rabi: f64,
    pub lamb_dicke: f64,
    pub detuning: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegimeWarning {
    /// `η` above the warning threshold but still accepted.
    LambDickeMarginal(f64),
    /// `η` above the hard limit.
    LambDickeViolated(f64),
    /// `Ω ≥ ν`: not weak excitation.
    StrongExcitation(f64),
    /// `ν − δ ≤ 0`: tones at or beyond the motional sideband.
    DetuningBeyondSideband(f64),
    /// `ν − δ ≤ ηΩ`: intermediate phonon states are populated.
    SidebandUnresolved { gap: f64, coupling: f64 },
}

impl fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeWarning::LambDickeMarginal(eta) => {
                write!(f, "Lamb-Dicke parameter {eta} above {LAMB_DICKE_WARN}")
            }
            RegimeWarning::LambDickeViolated(eta) => {
                write!(f, "Lamb-Dicke parameter {eta} above limit {LAMB_DICKE_MAX}")
            }
            RegimeWarning::StrongExcitation(o) => write!(f, "Rabi frequency {o} not below trap frequency"),
            RegimeWarning::DetuningBeyondSideband(gap) => write!(f, "trap minus detuning is {gap}, must be positive"),
            RegimeWarning::SidebandUnresolved { gap, coupling } => {
                write!(f, "trap minus detuning {gap} not above sideband coupling {coupling}")
            }
        }
    }
}

impl PulseParams {
    /// Validated parameters: `0 ≤ η ≤ 0.2`, `0 < Ω < ν`, `ν − δ > ηΩ`.
    pub fn new(rabi: f64, lamb_dicke: f64, detuning: f64) -> Result<Self> {
        let p = Self::unchecked(rabi, lamb_dicke, detuning)?;
        let fatal: Vec<String> = p
            .regime_warnings()
            .into_iter()
            .filter(|w| !matches!(w, RegimeWarning::LambDickeMarginal(_)))
            .map(|w| w.to_string())
            .collect();
        if !fatal.is_empty() {
            return Err(Error::RegimeViolation(fatal.join("; ")));
        }
        Ok(p)
    }

    /// Accepts any finite, non-negative parameters; use
    /// [`regime_warnings`](Self::regime_warnings) to see what is violated.
    pub fn unchecked(rabi: f64, lamb_dicke: f64, detuning: f64) -> Result<Self> {
        for (name, v) in [("rabi", rabi), ("lamb_dicke", lamb_dicke), ("detuning", detuning)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(PulseParams { rabi, lamb_dicke, detuning })
    }

    pub fn regime_warnings(&self) -> Vec<RegimeWarning> {
        let mut out = Vec::new();
        if self.lamb_dicke > LAMB_DICKE_MAX {
            out.push(RegimeWarning::LambDickeViolated(self.lamb_dicke));
        } else if self.lamb_dicke > LAMB_DICKE_WARN {
            out.push(RegimeWarning::LambDickeMarginal(self.lamb_dicke));
        }
        if self.rabi >= TRAP_FREQUENCY {
            out.push(RegimeWarning::StrongExcitation(self.rabi));
        }
        let gap = self.sideband_gap();
        let coupling = self.lamb_dicke * self.rabi;
        if gap <= 0.0 {
            out.push(RegimeWarning::DetuningBeyondSideband(gap));
        } else if gap <= coupling {
            out.push(RegimeWarning::SidebandUnresolved { gap, coupling });
        }
        out
    }

    /// `ν − δ`.
    pub fn sideband_gap(&self) -> f64 {
        TRAP_FREQUENCY - self.detuning
    }
}

/// Signed second-order two-photon coupling `Ω̃`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EffectiveRabi(pub f64);

impl EffectiveRabi {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `Ω̃ = −(Ωη)² / (2(ν − δ))`.
pub fn effective_rabi(p: &PulseParams) -> Result<EffectiveRabi> {
    let gap = p.sideband_gap();
    if gap == 0.0 {
        return Err(Error::Singularity(format!(
            "detuning {} equals the trap frequency; the drive is resonant with the sideband",
            p.detuning
        )));
    }
    let x = p.rabi * p.lamb_dicke;
    Ok(EffectiveRabi(-(x * x) / (2.0 * gap)))
}

/// Pulse length `T = 2θ/|Ω̃|` for a rotation by `θ`.
///
/// The drive realises `U(Ω̃T/2)`; with `Ω̃ < 0` the rotation sense is set by
/// the relative laser phase, so timing only depends on `|Ω̃|`. See
/// [`rotation_angle`] for the inverse.
pub fn pulse_duration_for(p: &PulseParams, theta: Angle) -> Result<f64> {
    let w = effective_rabi(p)?.value().abs();
    if w == 0.0 {
        return Err(Error::invalid("effective Rabi frequency is zero; no pulse length realises a rotation"));
    }
    Ok(2.0 * theta.radians() / w)
}

/// Rotation angle `|Ω̃|T/2` accumulated over a pulse of length `duration`.
pub fn rotation_angle(p: &PulseParams, duration: f64) -> Result<Angle> {
    Angle::new(effective_rabi(p)?.value().abs() * duration / 2.0)
}
