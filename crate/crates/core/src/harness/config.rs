//! Experiment configuration.
//!
//! Config files are flat TOML: one `key = value` per line, no tables.
//! Every key can also be set from the command line, and flags win.
//!
//! ```toml
//! mode = "search"
//! q = 3
//! marked = "111"
//! iters = 18
//! scheme = "paper"
//! out = "run.csv"
//! format = "csv"
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::Scheme;
use crate::error::{Error, Result};
use crate::gates::{TargetIndex, MAX_QUBITS};
use crate::physics::full::{DEFAULT_CUTOFF, DEFAULT_TOL};
use crate::physics::PulseParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Search,
    Figures,
    Validate,
    Physics,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "search" => Ok(Mode::Search),
            "figures" => Ok(Mode::Figures),
            "validate" => Ok(Mode::Validate),
            "physics" => Ok(Mode::Physics),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format {other:?}"))),
        }
    }
}

/// Raw key-value settings, all optional. Both the config file and the
/// command line produce one of these; [`ConfigLayer::merge`] lets the second
/// override the first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigLayer {
    pub mode: Option<Mode>,
    pub q: Option<u32>,
    pub marked: Option<String>,
    /// 1-based ordinal (1 = all ones), alternative to `marked`.
    pub marked_index: Option<usize>,
    pub iters: Option<usize>,
    pub scheme: Option<Scheme>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub fock_cutoff: Option<usize>,
    pub omega: Option<f64>,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    /// Accept out-of-regime physics parameters with a warning.
    pub force: Option<bool>,
    pub q_min: Option<u32>,
    pub q_max: Option<u32>,
    /// Test hook for `validate`: flip one extra sign in the inversion.
    pub inject_fault: Option<bool>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ConfigLayer {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// `self` with every field set in `over` replaced.
    pub fn merge(self, over: ConfigLayer) -> ConfigLayer {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigLayer { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            mode,
            q,
            marked,
            marked_index,
            iters,
            scheme,
            tol,
            seed,
            fock_cutoff,
            omega,
            eta,
            delta,
            force,
            q_min,
            q_max,
            inject_fault,
            out,
            format
        )
    }
}

/// Defaults for the physics run: `Ω = 0.05ν`, `η = 0.05`, `δ = 0.95ν`.
pub const DEFAULT_OMEGA: f64 = 0.05;
pub const DEFAULT_ETA: f64 = 0.05;
pub const DEFAULT_DELTA: f64 = 0.95;
pub const DEFAULT_ITERS: usize = 18;
pub const DEFAULT_SEED: u64 = 2001;

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub q: u32,
    pub marked: TargetIndex,
    pub iters: usize,
    pub scheme: Scheme,
    pub tol: Option<f64>,
    pub seed: u64,
    pub fock_cutoff: usize,
    pub pulse: PulseParams,
    pub force: bool,
    pub q_range: (u32, u32),
    pub inject_fault: bool,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn from_layer(layer: ConfigLayer) -> Result<Self> {
        let mode = layer.mode.ok_or_else(|| Error::invalid("no mode given"))?;
        let marked = match (&layer.marked, layer.marked_index) {
            (Some(_), Some(_)) => return Err(Error::invalid("give either marked or marked-index, not both")),
            (Some(bits), None) => {
                let t = TargetIndex::from_bitstring(bits)?;
                if let Some(q) = layer.q {
                    if q != t.q() {
                        return Err(Error::invalid(format!(
                            "marked bitstring {bits:?} has length {}, but q = {q}",
                            t.q()
                        )));
                    }
                }
                t
            }
            (None, Some(i)) => TargetIndex::from_ordinal(layer.q.unwrap_or(3), i)?,
            (None, None) => TargetIndex::all_ones(layer.q.unwrap_or(3))?,
        };
        let q = marked.q();
        if q > MAX_QUBITS {
            return Err(Error::ResourceLimit(format!("q = {q} exceeds {MAX_QUBITS}")));
        }
        let (omega, eta, delta) = (
            layer.omega.unwrap_or(DEFAULT_OMEGA),
            layer.eta.unwrap_or(DEFAULT_ETA),
            layer.delta.unwrap_or(DEFAULT_DELTA),
        );
        let force = layer.force.unwrap_or(false);
        let pulse = if force || mode != Mode::Physics {
            PulseParams::unchecked(omega, eta, delta)?
        } else {
            PulseParams::new(omega, eta, delta)?
        };
        if let Some(t) = layer.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("tolerance must be positive, got {t}")));
            }
        }
        let q_range = (layer.q_min.unwrap_or(2), layer.q_max.unwrap_or(8));
        if q_range.0 < 2 || q_range.0 > q_range.1 || q_range.1 > 10 {
            return Err(Error::invalid(format!(
                "q range {}..{} must satisfy 2 <= min <= max <= 10",
                q_range.0, q_range.1
            )));
        }
        let fock_cutoff = layer.fock_cutoff.unwrap_or(DEFAULT_CUTOFF);
        if fock_cutoff < 5 {
            return Err(Error::invalid(format!("fock cutoff must be at least 5, got {fock_cutoff}")));
        }
        Ok(ExperimentConfig {
            mode,
            q,
            marked,
            iters: layer.iters.unwrap_or(DEFAULT_ITERS),
            scheme: layer.scheme.unwrap_or(Scheme::Paper),
            tol: layer.tol,
            seed: layer.seed.unwrap_or(DEFAULT_SEED),
            fock_cutoff,
            pulse,
            force,
            q_range,
            inject_fault: layer.inject_fault.unwrap_or(false),
            out: layer.out,
            format: layer.format.unwrap_or_default(),
        })
    }

    /// Integrator tolerance for physics runs.
    pub fn ode_tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }
}
