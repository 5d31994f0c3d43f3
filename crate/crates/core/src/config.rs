//! Solver configuration. Every tolerance used by the constructions lives
//! here with its shipped default.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Sup-norm increment threshold for fixed-point sweeps.
    pub fixed_point: f64,
    /// Acceptance threshold for ODE residuals of converged profiles.
    pub residual: f64,
    /// Newton residual target for connection problems.
    pub newton: f64,
    /// Minimum distance the adaptive integrator keeps from a ∈ {0, 1}.
    pub sing_standoff: f64,
    /// Relative tolerance for the adaptive integrator.
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            fixed_point: 1e-12,
            residual: 1e-8,
            newton: 1e-10,
            sing_standoff: 1e-3,
            oracle: 1e-11,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tol: Tolerances,
    /// Largest interior amplitude |q₀| accepted by the Picard construction.
    pub q_max: f64,
    /// Smallness bound for expansion coefficients (q₁, q₂, q̃₁, q̃₂, m₁, m₂).
    pub eps_small: f64,
    /// Interval constant for the large near-cone system, ℓ = c|q̃₂|q̃₁^{-4/3}.
    /// Half the empirically calibrated contraction bound (see `calibrate`).
    pub large_c: f64,
    /// Far-field truncation point.
    pub a_max: f64,
    /// Chebyshev degree per dense-output panel.
    pub cheb_degree: usize,
    /// Panels per construction interval.
    pub panels: usize,
    /// Gauss-Legendre points per kernel integral.
    pub quad_points: usize,
    /// Fixed-point sweep cap.
    pub max_sweeps: usize,
    /// Newton iteration cap.
    pub max_newton: usize,
    /// Hard cap for the far matching point a_ε of the large extension.
    pub a_eps_cap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: Tolerances::default(),
            q_max: 0.2,
            eps_small: 0.2,
            large_c: 0.05,
            a_max: 1e4,
            cheb_degree: 20,
            panels: 6,
            quad_points: 40,
            max_sweeps: 200,
            max_newton: 60,
            a_eps_cap: 1e6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let pos = [
            ("fixed_point", self.tol.fixed_point),
            ("residual", self.tol.residual),
            ("newton", self.tol.newton),
            ("sing_standoff", self.tol.sing_standoff),
            ("oracle", self.tol.oracle),
            ("q_max", self.q_max),
            ("eps_small", self.eps_small),
            ("large_c", self.large_c),
            ("a_max", self.a_max),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(crate::Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.tol.fixed_point < f64::EPSILON {
            return Err(crate::Error::Config(
                "fixed_point tolerance below machine floor".into(),
            ));
        }
        if self.a_max < 100.0 {
            return Err(crate::Error::Config("a_max must be at least 100".into()));
        }
        Ok(())
    }
}
