//! Numerical tolerances shared across the crate.

use serde::{Deserialize, Serialize};

/// Every threshold the library compares against, in one place.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Elementwise deviation allowed between an operator and its adjoint.
    pub hermiticity: f64,
    /// |tr ρ − 1| for density matrices.
    pub trace: f64,
    /// Most negative eigenvalue tolerated in a density matrix.
    pub positivity: f64,
    /// |‖ψ‖² − 1| for pure states.
    pub state_norm: f64,
    /// Slack in the analytic feasibility test `β' ≤ λ_max(B)`.
    pub feasibility: f64,
    /// Score-constraint violation allowed for an SDP witness.
    pub constraint: f64,
    /// Target primal-dual gap of the SDP.
    pub duality_gap: f64,
    /// Width of an eigenvalue cluster treated as degenerate.
    pub degeneracy: f64,
    /// Slack used when comparing successive minima and slopes in a sweep.
    pub monotonicity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            trace: 1e-10,
            positivity: 1e-10,
            state_norm: 1e-12,
            feasibility: 1e-10,
            constraint: 1e-8,
            duality_gap: 1e-7,
            degeneracy: 1e-9,
            monotonicity: 1e-9,
        }
    }
}
