//! Grover search on trapped-ion pair qubits.
//!
//! Each logical qubit is a pair of ions with `|0> = |eg>` and `|1> = |ge>`.
//! The two logical states are degenerate in energy, so free evolution and
//! collective dephasing only ever contribute a global phase. The only native
//! single-qubit gate is the x-rotation produced by a bichromatic
//! (Mølmer–Sørensen type) drive, so the search uses `W = U(7π/4)` in place of
//! the Hadamard gate and `D_q = W_q P_1 W_q` as its inversion-about-average
//! step.
//!
//! The crate is split into:
//!
//! - [`gates`]: every matrix of the construction (`U(θ)`, `W_q`, `M`, `V_q`,
//!   `P`, `D_q`) with unitarity checks.
//! - [`engine`]: factored state-vector evolution of the search and trajectory
//!   diagnostics (recurrence, co-maximal readout, optimal step count).
//! - [`oracle`]: an independent dense-matrix evolution and the textbook
//!   Grover comparator.
//! - [`physics`]: effective Rabi frequency, pulse timing, full two-ion plus
//!   phonon dynamics and decoherence checks on pair states.
//! - [`harness`]: experiment configuration, trajectory files and the
//!   `search`/`figures`/`validate`/`physics` commands.

pub mod engine;
pub mod error;
pub mod gates;
pub mod harness;
pub mod oracle;
pub mod physics;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Version string written into trajectory file headers.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
