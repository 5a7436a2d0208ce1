//! Device-independent lower bounds on the extractable fidelity with the
//! two-qubit maximally entangled state from generalized CHSH scores
//!
//! `β_θ = √2 (cos θ ⟨A_0(B_0+B_1)⟩ + sin θ ⟨A_1(B_0−B_1)⟩)`.
//!
//! The pipeline, bottom-up:
//!
//! * [`linalg`]: 2×2 / 4×4 complex Hermitian algebra and a Jacobi eigensolver.
//! * [`bell`]: generalized CHSH operators in one qubit block.
//! * [`maps`]: the local dephasing extraction channels.
//! * [`sdp`]: worst-case fidelity over two-qubit states at fixed angles.
//! * [`optimizer`]: minimization over measurement angles.
//! * [`bounds`]: score sweeps, convex roof and the trivial score `β_θ^t`.
//! * [`selector`]: choosing `θ` for observed correlators `(X, Y)`.

pub mod bell;
pub mod bounds;
pub mod config;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod neldermead;
pub mod optimizer;
pub mod sdp;
pub mod selector;

pub use error::{Error, Result};
