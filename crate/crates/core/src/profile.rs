//! Profile representations: dense-output sampled profiles, singular
//! expansions at the light cone, and glued global profiles.

use crate::basis::Sign;
use crate::cheb::PiecewiseCheb;
use crate::error::{Error, Result};
use serde::Serialize;

/// Construction record attached to every dense-output profile.
#[derive(Debug, Clone, Serialize)]
pub enum Provenance {
    /// Picard fixed point on [0, 1/2]. `integral_sign` is the resolved sign
    /// of the Green-integral term (+σ here; orientation-dependent).
    PicardInterior { q0: f64, sign: Sign, tol: f64, integral_sign: f64 },
    /// Perturbative far field from a_lo with truncation a_max.
    FarField { m1: f64, m2: f64, a_lo: f64, a_max: f64, sign: Sign, integral_sign: f64 },
    /// Defocusing extension of the large near-cone solution.
    Extension { ell: f64, a_start: f64, a_end: f64 },
    /// Resampled from adaptive-integrator dense output.
    Oracle { from_a: f64, to_a: f64 },
    Synthetic { label: String },
}

/// Interpolation order and mesh of a dense representation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorModel {
    pub degree: usize,
    pub panels: usize,
}

/// Dense-output representation of Q, Q' on an interval of the self-similar
/// variable a = r/t.
#[derive(Debug, Clone, Serialize)]
pub struct SampledProfile {
    rep: PiecewiseCheb,
    pub provenance: Provenance,
    pub error_model: ErrorModel,
}

impl SampledProfile {
    pub fn new(rep: PiecewiseCheb, provenance: Provenance) -> Self {
        let error_model = ErrorModel {
            degree: 0,
            panels: rep.panel_count(),
        };
        SampledProfile {
            rep,
            provenance,
            error_model,
        }
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.error_model.degree = degree;
        self
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.rep.lo(), self.rep.hi())
    }

    pub fn eval(&self, a: f64) -> f64 {
        self.rep.eval(a)
    }

    pub fn deriv(&self, a: f64) -> f64 {
        self.rep.deriv(a)
    }

    pub fn second_deriv(&self, a: f64) -> f64 {
        self.rep.second_deriv(a)
    }

    pub fn ode_residual_at(&self, a: f64, sign: Sign) -> f64 {
        crate::basis::ode_residual(self.eval(a), self.deriv(a), self.second_deriv(a), a, sign)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConeSide {
    /// a < 1 (inside the light cone)
    Left,
    /// a > 1
    Right,
}

impl ConeSide {
    /// dz/da for z = |1 − a|.
    pub fn dz_da(self) -> f64 {
        match self {
            ConeSide::Left => -1.0,
            ConeSide::Right => 1.0,
        }
    }

    /// a corresponding to offset z on this side.
    pub fn a_of_z(self, z: f64) -> f64 {
        match self {
            ConeSide::Left => 1.0 - z,
            ConeSide::Right => 1.0 + z,
        }
    }
}

/// Component values of a singular expansion at one point, with derivatives
/// taken in a.
#[derive(Debug, Clone, Copy, Default)]
pub struct Components {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub dq1: f64,
    pub dq2: f64,
    pub dq3: f64,
    /// Exponent on the third component (7/3 or 4/3); 2/3 and 0 are fixed.
    pub expo3: f64,
}

/// The representation Q = z^{2/3} Q₁ + Q₂ + z^{e₃} Q₃ near the cone, with
/// smooth components stored over the offset z = |1 − a| (z = 0 is the cone).
/// Working in z keeps evaluation exact arbitrarily close to a = 1.
#[derive(Debug, Clone, Serialize)]
pub struct SingularExpansion {
    pub side: ConeSide,
    /// Interval length measured from the cone.
    pub z_max: f64,
    /// Components as functions of z on [0, z_max].
    comps: [PiecewiseCheb; 3],
    /// [2/3, 0, e₃]
    pub exponents: [f64; 3],
    /// Leading coefficients (Q₁(cone), Q₂(cone)).
    pub lead: (f64, f64),
}

impl SingularExpansion {
    pub fn new(
        side: ConeSide,
        z_max: f64,
        comps: [PiecewiseCheb; 3],
        expo3: f64,
        lead: (f64, f64),
    ) -> Self {
        SingularExpansion {
            side,
            z_max,
            comps,
            exponents: [2.0 / 3.0, 0.0, expo3],
            lead,
        }
    }

    pub fn expo3(&self) -> f64 {
        self.exponents[2]
    }

    /// Domain in a, cone end first.
    pub fn a_domain(&self) -> (f64, f64) {
        (1.0, self.side.a_of_z(self.z_max))
    }

    pub fn contains(&self, a: f64) -> bool {
        let z = (1.0 - a).abs();
        z <= self.z_max * (1.0 + 1e-12)
            && match self.side {
                ConeSide::Left => a <= 1.0,
                ConeSide::Right => a >= 1.0,
            }
    }

    pub fn components_at_z(&self, z: f64) -> Components {
        let dz = self.side.dz_da();
        Components {
            q1: self.comps[0].eval(z),
            q2: self.comps[1].eval(z),
            q3: self.comps[2].eval(z),
            dq1: dz * self.comps[0].deriv(z),
            dq2: dz * self.comps[1].deriv(z),
            dq3: dz * self.comps[2].deriv(z),
            expo3: self.expo3(),
        }
    }

    pub fn components_at(&self, a: f64) -> Components {
        self.components_at_z((1.0 - a).abs())
    }

    /// Assembled Q(a).
    pub fn q_at(&self, a: f64) -> f64 {
        let z = (1.0 - a).abs();
        let c = self.components_at_z(z);
        z.powf(2.0 / 3.0) * c.q1 + c.q2 + z.powf(c.expo3) * c.q3
    }

    /// Assembled Q'(a); carries the z^{-1/3} blow-up at the cone.
    pub fn dq_at(&self, a: f64) -> f64 {
        let z = (1.0 - a).abs();
        let s = -self.side.dz_da(); // sign(1 - a)
        let c = self.components_at_z(z);
        z.powf(2.0 / 3.0) * c.dq1 - 2.0 / 3.0 * s * z.powf(-1.0 / 3.0) * c.q1
            + c.dq2
            + z.powf(c.expo3) * c.dq3
            - c.expo3 * s * z.powf(c.expo3 - 1.0) * c.q3
    }

    /// ODE residual of the assembled profile, with the z-powers of each term
    /// combined analytically so that no catastrophic intermediates appear
    /// near the cone. Valid for a off the cone.
    pub fn ode_residual_at(&self, a: f64, sign: Sign) -> f64 {
        let z = (1.0 - a).abs();
        let s = -self.side.dz_da(); // sign(1 - a)
        let dz = self.side.dz_da();
        let e3 = self.expo3();
        let q1 = self.comps[0].eval(z);
        let q2 = self.comps[1].eval(z);
        let q3 = self.comps[2].eval(z);
        let (d1, d2, d3) = (
            dz * self.comps[0].deriv(z),
            dz * self.comps[1].deriv(z),
            dz * self.comps[2].deriv(z),
        );
        let (dd1, dd2, dd3) = (
            self.comps[0].second_deriv(z),
            self.comps[1].second_deriv(z),
            self.comps[2].second_deriv(z),
        );
        let z23 = z.powf(2.0 / 3.0);
        let ze = z.powf(e3);
        let q = z23 * q1 + q2 + ze * q3;

        // Q' and Q'' split by power class; (a² − 1) = −s z (a + 1) multiplies
        // Q'' term by term.
        let dq = z23 * d1 - 2.0 / 3.0 * s * q1 / z.powf(1.0 / 3.0)
            + d2
            + ze * d3
            - e3 * s * z.powf(e3 - 1.0) * q3;
        let ap1 = a + 1.0;
        // (a²−1)Q'':
        let t_ddq = -s * ap1
            * (z.powf(5.0 / 3.0) * dd1 + z * dd2 + z.powf(e3 + 1.0) * dd3)
            + ap1 * (4.0 / 3.0 * z23 * d1 + 2.0 / 9.0 * s * q1 / z.powf(1.0 / 3.0))
            + ap1 * (2.0 * e3 * z.powf(e3) * d3 - e3 * (e3 - 1.0) * s * z.powf(e3 - 1.0) * q3);
        let coeff = 8.0 * a / 3.0 - 2.0 / a;
        t_ddq + coeff * dq + 4.0 / 9.0 * q + sign.coefficient() * q.powi(7)
    }

    /// Value and derivative at the endpoint away from the cone.
    pub fn outer_endpoint(&self) -> (f64, f64, f64) {
        let a = self.side.a_of_z(self.z_max);
        (a, self.q_at(a), self.dq_at(a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayClass {
    /// a^{1/3} Q(a) → nonzero constant.
    GenericAMinusOneThird,
    /// leading a^{-1/3} coefficient tuned away; Q ~ m a^{-4/3}.
    TunedAMinusFourThirds,
}

/// Scalar parameters of an assembled global profile.
#[derive(Debug, Clone, Default, Serialize)]
pub struct GlueParams {
    pub q0: Option<f64>,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub qt1: Option<f64>,
    pub qt2: Option<f64>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub ell: Option<f64>,
    pub a_eps: Option<f64>,
    /// Fitted tail coefficients of c₁ a^{-1/3} + c₂ a^{-4/3}.
    pub tail_c1: Option<f64>,
    pub tail_c2: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub enum Piece {
    Smooth(SampledProfile),
    Expansion(SingularExpansion),
}

impl Piece {
    pub fn a_range(&self) -> (f64, f64) {
        match self {
            Piece::Smooth(p) => p.domain(),
            Piece::Expansion(e) => {
                let (c, o) = e.a_domain();
                (c.min(o), c.max(o))
            }
        }
    }

    pub fn eval(&self, a: f64) -> f64 {
        match self {
            Piece::Smooth(p) => p.eval(a),
            Piece::Expansion(e) => e.q_at(a),
        }
    }

    pub fn deriv(&self, a: f64) -> f64 {
        match self {
            Piece::Smooth(p) => p.deriv(a),
            Piece::Expansion(e) => e.dq_at(a),
        }
    }
}

/// Stitched piecewise profile with all matching parameters.
#[derive(Debug, Clone, Serialize)]
pub struct GlobalProfile {
    pieces: Vec<Piece>,
    pub params: GlueParams,
    pub sign: Sign,
    pub decay_class: DecayClass,
}

impl GlobalProfile {
    pub fn new(pieces: Vec<Piece>, params: GlueParams, sign: Sign, decay_class: DecayClass) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Assembly("no pieces".into()));
        }
        for w in pieces.windows(2) {
            let hi = w[0].a_range().1;
            let lo = w[1].a_range().0;
            if (hi - lo).abs() > 1e-9 {
                return Err(Error::Assembly(format!(
                    "pieces do not abut: {hi} vs {lo}"
                )));
            }
        }
        Ok(GlobalProfile {
            pieces,
            params,
            sign,
            decay_class,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (
            self.pieces[0].a_range().0,
            self.pieces[self.pieces.len() - 1].a_range().1,
        )
    }

    /// Value of Q₂ at the cone (q₂ = q̃₂), the continuous trace of Q there.
    pub fn cone_value(&self) -> f64 {
        self.params
            .q2
            .or(self.params.qt2)
            .expect("glued profile carries q2")
    }

    fn piece_for(&self, a: f64) -> Result<&Piece> {
        let (lo, hi) = self.domain();
        let slack = 1e-12 * (1.0 + a.abs());
        if a < lo - slack || a > hi + slack {
            return Err(Error::Domain {
                context: "global profile evaluation",
                a,
            });
        }
        // prefer the piece whose interior contains a; at shared breakpoints
        // take the left piece
        let idx = self
            .pieces
            .partition_point(|p| p.a_range().1 < a)
            .min(self.pieces.len() - 1);
        Ok(&self.pieces[idx])
    }

    pub fn eval(&self, a: f64) -> Result<f64> {
        if (a - 1.0).abs() < 1e-300 {
            return Ok(self.cone_value());
        }
        Ok(self.piece_for(a)?.eval(a))
    }

    pub fn deriv(&self, a: f64) -> Result<f64> {
        self.piece_for(a).map(|p| p.deriv(a))
    }

    /// Expansion components at a, for the cutoff regularization. Smooth
    /// pieces report all content in Q₂.
    pub fn components_at(&self, a: f64) -> Result<Components> {
        match self.piece_for(a)? {
            Piece::Smooth(p) => Ok(Components {
                q2: p.eval(a),
                dq2: p.deriv(a),
                expo3: 7.0 / 3.0,
                ..Default::default()
            }),
            Piece::Expansion(e) => Ok(e.components_at(a)),
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Jumps of Q across the internal interfaces (and across the cone).
    pub fn continuity_jumps(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for w in self.pieces.windows(2) {
            let a = w[0].a_range().1;
            let (left, right) = if (a - 1.0).abs() < 1e-12 {
                // approach the cone from both sides; values extend
                // continuously to Q₂(1) on each side
                (w[0].eval(a), w[1].eval(a))
            } else {
                (w[0].eval(a), w[1].eval(a))
            };
            out.push((a, (left - right).abs()));
        }
        out
    }

    pub fn max_jump(&self) -> f64 {
        self.continuity_jumps()
            .iter()
            .map(|(_, j)| *j)
            .fold(0.0, f64::max)
    }
}
