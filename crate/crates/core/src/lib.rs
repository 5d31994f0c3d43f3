//! Numerical laboratory for self-similar solutions of the radial septic wave
//! equation `u_tt - Δu ± u^7 = 0` on ℝ³⁺¹.
//!
//! The crate constructs profiles `Q(a)` of the self-similar ansatz
//! `u(t,r) = t^{-1/3} Q(r/t)` piece by piece (Picard iteration inside the
//! light cone, singular expansions at the cone, perturbative far fields),
//! glues them into global profiles, regularizes the cone singularity with a
//! smooth cutoff, and verifies the resulting approximate solutions against
//! independent ODE/PDE integrators.
//!
//! Layout:
//! * [`basis`] — closed-form fundamental systems, Wronskians, Green kernels,
//!   and the profile ODE residual.
//! * [`oracle`] — adaptive Runge-Kutta integrator with dense output, used as
//!   an independent check on every fixed-point construction.
//! * [`interior`], [`exterior`], [`large`] — the profile constructions and
//!   connection problems on `[0,1)`, `(1,∞)`, and the large-amplitude regime.
//! * [`regularize`] — cutoff-regularized approximate solutions and their
//!   error fields.
//! * [`wave`] — radial method-of-lines evolution with energy and space-time
//!   norm diagnostics.

pub mod basis;
pub mod cheb;
pub mod config;
pub mod error;
pub mod exterior;
pub mod fit;
pub mod interior;
pub mod large;
pub mod oracle;
pub mod par;
pub mod profile;
pub mod quad;
pub mod regularize;
pub mod septic;
pub mod wave;

pub use basis::{FundamentalPair, GreenKernel, PairKind, Sign};
pub use config::SolverConfig;
pub use error::{Error, Result};
pub use profile::{GlobalProfile, SampledProfile, SingularExpansion};
