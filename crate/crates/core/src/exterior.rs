//! Exterior light-cone constructions in the small regime: the singular
//! expansion on (1, 2], the perturbative far field on [2, ∞) truncated at
//! A_max with an analytic tail model, the connection problem at a = 2, the
//! decay-tuning linear relation, and the cross-cone glue.

use crate::basis::{FundamentalPair, Sign, Which};
use crate::cheb::{geometric_mesh, PiecewiseCheb};
use crate::config::SolverConfig;
use crate::error::{Error, Result, StageExt};
use crate::interior::{match_at_half, solve2, solve_near_cone, NearConeSystem};
use crate::profile::{
    ConeSide, DecayClass, GlobalProfile, GlueParams, Piece, Provenance, SampledProfile,
    SingularExpansion,
};
use crate::quad::GaussRule;

/// Singular expansion Q = (a−1)^{2/3}Q̃₁ + Q̃₂ + (a−1)^{7/3}Q̃₃ on (1, 2].
pub fn near_cone_exterior(
    qt1: f64,
    qt2: f64,
    sign: Sign,
    cfg: &SolverConfig,
) -> Result<SingularExpansion> {
    if qt1.abs() > cfg.eps_small || qt2.abs() > cfg.eps_small {
        return Err(Error::Domain {
            context: "near_cone_exterior coefficients exceed eps_small",
            a: qt1.abs().max(qt2.abs()),
        });
    }
    // data at a = 1 integrated outward: Q = lin + σ ∫_1^a G Q⁷ db
    let sys = NearConeSystem {
        side: ConeSide::Right,
        z_max: 1.0,
        beta3: 7,
        third_gains_z: false,
        int_sign: sign.coefficient(),
        lead: (qt1, qt2),
    };
    solve_near_cone(&sys, cfg, qt1.abs().max(qt2.abs()))
}

/// ψ-factors of the separable exterior kernel: G(a,b) = φ̃₁(a)ψ₂(b) − φ₂(a)ψ₁(b)
/// with ψ₂(b) = −(3/4) b (b−1)^{-2/3} and ψ₁(b) = −(3/4) b (1+b)^{-2/3}.
fn psi2(b: f64) -> f64 {
    -0.75 * b * (b - 1.0).powf(-2.0 / 3.0)
}

fn psi1(b: f64) -> f64 {
    -0.75 * b * (1.0 + b).powf(-2.0 / 3.0)
}

/// Far-field fixed point Q = m₁φ̃₁ + m₂φ₂ − σ ∫_a^∞ G Q⁷ db on [a_lo, a_max],
/// with the tail ∫_{a_max}^∞ modeled by the fitted a^{-1/3} asymptote.
fn far_field_impl(
    m1: f64,
    m2: f64,
    sign: Sign,
    a_lo: f64,
    a_max: f64,
    cfg: &SolverConfig,
) -> Result<SampledProfile> {
    if a_lo < 1.0 + 1e-9 {
        return Err(Error::Domain {
            context: "far field lower endpoint",
            a: a_lo,
        });
    }
    let sigma = sign.coefficient();
    let pair = FundamentalPair::exterior();
    let degree = cfg.cheb_degree;
    let mesh = geometric_mesh(a_lo, a_max, 1);
    let nodes = PiecewiseCheb::collocation_nodes(&mesh, degree);
    let rule = GaussRule::new(cfg.quad_points.min(24));

    let lin: Vec<f64> = nodes
        .iter()
        .map(|&a| {
            m1 * pair.eval(Which::First, a).unwrap().0 + m2 * pair.eval(Which::Second, a).unwrap().0
        })
        .collect();
    let mut vals = lin.clone();
    let mut prev_inc = f64::INFINITY;
    for sweep in 0..cfg.max_sweeps {
        let interp = PiecewiseCheb::from_node_values(&mesh, degree, &vals);
        // tail model beyond a_max: Q ≈ c b^{-1/3} with c fitted at a_max
        let c_tail = interp.eval(a_max) * a_max.powf(1.0 / 3.0);
        let tail = |psi: &dyn Fn(f64) -> f64| {
            // substitute b = a_max / x so the integrand is smooth on (0, 1]
            rule.integrate(0.0, 1.0, |x| {
                if x <= 0.0 {
                    return 0.0;
                }
                let b = a_max / x;
                psi(b) * (c_tail * b.powf(-1.0 / 3.0)).powi(7) * a_max / (x * x)
            })
        };
        let tail1 = tail(&|b| psi1(b));
        let tail2 = tail(&|b| psi2(b));

        // suffix integrals over the panels, swept from the far end inward
        let q7 = |b: f64| interp.eval(b).powi(7);
        let mut suffix1 = vec![0.0; mesh.len()];
        let mut suffix2 = vec![0.0; mesh.len()];
        suffix1[mesh.len() - 1] = tail1;
        suffix2[mesh.len() - 1] = tail2;
        for p in (0..mesh.len() - 1).rev() {
            suffix1[p] = suffix1[p + 1] + rule.integrate(mesh[p], mesh[p + 1], |b| psi1(b) * q7(b));
            suffix2[p] = suffix2[p + 1] + rule.integrate(mesh[p], mesh[p + 1], |b| psi2(b) * q7(b));
        }

        let mut inc = 0.0f64;
        let mut panel = 0usize;
        let new_vals: Vec<f64> = nodes
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                while panel + 2 < mesh.len() && a > mesh[panel + 1] * (1.0 + 1e-14) {
                    panel += 1;
                }
                let t1 = suffix1[panel + 1]
                    + rule.integrate(a, mesh[panel + 1], |b| psi1(b) * q7(b));
                let t2 = suffix2[panel + 1]
                    + rule.integrate(a, mesh[panel + 1], |b| psi2(b) * q7(b));
                let p1 = pair.eval(Which::First, a).unwrap().0;
                let p2 = pair.eval(Which::Second, a).unwrap().0;
                lin[i] - sigma * (p1 * t2 - p2 * t1)
            })
            .collect();
        for (n, o) in new_vals.iter().zip(&vals) {
            inc = inc.max((n - o).abs());
        }
        vals = new_vals;
        if inc < cfg.tol.fixed_point {
            break;
        }
        if inc >= prev_inc && sweep > 4 {
            return Err(Error::ContractionFailure {
                iterations: sweep + 1,
                increment: inc,
                hint: "far-field coefficients too large",
            });
        }
        prev_inc = inc;
    }
    let rep = PiecewiseCheb::from_node_values(&mesh, degree, &vals);
    let provenance = Provenance::FarField {
        m1,
        m2,
        a_lo,
        a_max,
        sign,
        integral_sign: -sigma,
    };
    Ok(SampledProfile::new(rep, provenance).with_degree(degree))
}

/// Unique smooth far-field solution on [2, a_max] with prescribed asymptotic
/// coefficients (m₁, m₂) of (φ̃₁, φ₂).
pub fn far_field(
    m1: f64,
    m2: f64,
    sign: Sign,
    a_max: f64,
    cfg: &SolverConfig,
) -> Result<SampledProfile> {
    if m1.abs() > cfg.eps_small || m2.abs() > cfg.eps_small {
        return Err(Error::Domain {
            context: "far_field coefficients exceed eps_small",
            a: m1.abs().max(m2.abs()),
        });
    }
    if a_max < 100.0 {
        return Err(Error::Domain {
            context: "far_field truncation point below 100",
            a: a_max,
        });
    }
    Ok(far_field_impl(m1, m2, sign, 2.0, a_max, cfg)?)
}

/// Far field from an arbitrary anchor point (used by the large-regime
/// rematching).
pub fn far_field_from(
    m1: f64,
    m2: f64,
    sign: Sign,
    a_lo: f64,
    a_max: f64,
    cfg: &SolverConfig,
) -> Result<SampledProfile> {
    Ok(far_field_impl(m1, m2, sign, a_lo, a_max, cfg)?)
}

/// Doubles the truncation point and reports the change of Q at `probe`;
/// errors if it exceeds the tail tolerance.
pub fn verify_far_tail(
    m1: f64,
    m2: f64,
    sign: Sign,
    a_max: f64,
    probe: f64,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let base = far_field_impl(m1, m2, sign, 2.0, a_max, cfg)?;
    let doubled = far_field_impl(m1, m2, sign, 2.0, 2.0 * a_max, cfg)?;
    let delta = (base.eval(probe) - doubled.eval(probe)).abs();
    if delta > tol {
        return Err(Error::TailModel {
            error: delta,
            tol,
            a_max,
        });
    }
    Ok(delta)
}

/// Result of the connection problem at a = 2.
#[derive(Debug, Clone)]
pub struct ExteriorMatch {
    pub qt1: f64,
    pub qt2: f64,
    pub m1: f64,
    pub m2: f64,
    pub newton_residual: f64,
    pub iterations: usize,
    /// Condition number of the final Jacobian of (m₁,m₂) ↦ endpoint data.
    pub jacobian_condition: f64,
    pub expansion: SingularExpansion,
    pub far: SampledProfile,
}

fn cond2(j: [[f64; 2]; 2]) -> f64 {
    // Frobenius-norm condition estimate, adequate for logging
    let det = (j[0][0] * j[1][1] - j[0][1] * j[1][0]).abs();
    let frob2 = j.iter().flatten().map(|x| x * x).sum::<f64>();
    if det == 0.0 {
        f64::INFINITY
    } else {
        frob2 / det
    }
}

/// Newton on (m₁, m₂) so that the far field matches the near-cone expansion
/// values at a = 2.
pub fn match_at_two(
    qt1: f64,
    qt2: f64,
    sign: Sign,
    a_max: f64,
    cfg: &SolverConfig,
) -> Result<ExteriorMatch> {
    let expansion = near_cone_exterior(qt1, qt2, sign, cfg).stage("near_cone_exterior")?;
    let (_, val, deriv) = expansion.outer_endpoint();
    let target = [val, deriv];

    let pair = FundamentalPair::exterior();
    let (p1, d1) = pair.eval(Which::First, 2.0)?;
    let (p2, d2) = pair.eval(Which::Second, 2.0)?;
    // leading Jacobian: plain (φ̃₁, φ₂) data at 2, per the far-field ansatz
    let mut jac = [[p1, p2], [d1, d2]];
    let mut m = solve2(jac, target);
    let mut trail = Vec::new();

    let eval_f = |m: [f64; 2]| -> Result<([f64; 2], SampledProfile)> {
        let ff = far_field_impl(m[0], m[1], sign, 2.0, a_max, cfg)?;
        let q = ff.eval(2.0);
        let dq = ff.deriv(2.0);
        Ok(([q - target[0], dq - target[1]], ff))
    };

    let (mut f, mut far) = eval_f(m)?;
    for it in 0..cfg.max_newton {
        let res = f[0].abs().max(f[1].abs());
        trail.push((m[0], m[1]));
        if res < cfg.tol.newton {
            return Ok(ExteriorMatch {
                qt1,
                qt2,
                m1: m[0],
                m2: m[1],
                newton_residual: res,
                iterations: it,
                jacobian_condition: cond2(jac),
                expansion,
                far,
            });
        }
        let step = solve2(jac, f);
        let m_new = [m[0] - step[0], m[1] - step[1]];
        let (f_new, far_new) = eval_f(m_new)?;
        let dm = [m_new[0] - m[0], m_new[1] - m[1]];
        let df = [f_new[0] - f[0], f_new[1] - f[1]];
        let denom = dm[0] * dm[0] + dm[1] * dm[1];
        if denom > 0.0 {
            let jdm = [
                jac[0][0] * dm[0] + jac[0][1] * dm[1],
                jac[1][0] * dm[0] + jac[1][1] * dm[1],
            ];
            for r in 0..2 {
                for c in 0..2 {
                    jac[r][c] += (df[r] - jdm[r]) * dm[c] / denom;
                }
            }
        }
        m = m_new;
        f = f_new;
        far = far_new;
    }
    Err(Error::NewtonStagnation {
        residual: f[0].abs().max(f[1].abs()),
        iterations: cfg.max_newton,
        trail,
    })
}

/// Fits Q(a) ≈ c₁ a^{-1/3} + c₂ a^{-4/3} over the closing decade of the far
/// field; returns (c₁, c₂).
pub fn fit_tail_coefficients(profile: &SampledProfile, a_max: f64) -> (f64, f64) {
    let samples = crate::quad::logspace(a_max / 10.0, a_max * 0.99, 40);
    // 2x2 normal equations in the basis (a^{-1/3}, a^{-4/3})
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &a in &samples {
        let f1 = a.powf(-1.0 / 3.0);
        let f2 = a.powf(-4.0 / 3.0);
        let y = profile.eval(a);
        s11 += f1 * f1;
        s12 += f1 * f2;
        s22 += f2 * f2;
        b1 += f1 * y;
        b2 += f2 * y;
    }
    let sol = solve2([[s11, s12], [s12, s22]], [b1, b2]);
    (sol[0], sol[1])
}

/// Secant search over m₂/m₁ zeroing the fitted a^{-1/3} coefficient, scaled
/// so the surviving a^{-4/3} coefficient equals `m`. Returns (m₁, m₂).
pub fn decay_tune(m: f64, sign: Sign, a_max: f64, cfg: &SolverConfig) -> Result<(f64, f64)> {
    if m == 0.0 {
        return Ok((0.0, 0.0));
    }
    if m.abs() > cfg.eps_small {
        return Err(Error::Domain {
            context: "decay_tune amplitude exceeds eps_small",
            a: m,
        });
    }
    let probe = m.abs().min(0.01);
    let c1_of = |rho: f64| -> Result<f64> {
        let ff = far_field_impl(probe, rho * probe, sign, 2.0, a_max, cfg)?;
        Ok(fit_tail_coefficients(&ff, a_max).0)
    };
    // linear prediction: φ̃₁ + φ₂ carry equal a^{-1/3} weight, so start at −1
    let tol_c1 = 1e-12 * probe;
    let mut r0 = -1.0;
    let mut r1 = -1.0 + 1e-3;
    let mut f0 = c1_of(r0)?;
    let mut f1 = c1_of(r1)?;
    for _ in 0..50 {
        if f1.abs() < tol_c1 {
            break;
        }
        if (f1 - f0).abs() < 1e-300 {
            return Err(Error::Fit(
                "decay tuning: flat secant (both coefficients near zero)".into(),
            ));
        }
        let r2 = r1 - f1 * (r1 - r0) / (f1 - f0);
        r0 = r1;
        f0 = f1;
        r1 = r2;
        f1 = c1_of(r1)?;
    }
    if f1.abs() >= tol_c1 {
        return Err(Error::Fit(format!(
            "decay tuning did not converge: residual a^(-1/3) coefficient {f1:.3e}"
        )));
    }
    let ff = far_field_impl(probe, r1 * probe, sign, 2.0, a_max, cfg)?;
    let (_, c2) = fit_tail_coefficients(&ff, a_max);
    if c2.abs() < 1e-14 {
        return Err(Error::Fit(
            "decay tuning: vanishing a^{-4/3} coefficient".into(),
        ));
    }
    let scale = m / c2;
    Ok((probe * scale, r1 * probe * scale))
}

/// Full small-data glue: interior match at 1/2, cross-cone coefficient
/// transfer q̃₂ = q₂ (with q̃₁ = q₁ unless overridden), and the exterior
/// match at 2.
pub fn glue_global(
    q0: f64,
    sign: Sign,
    a_max: f64,
    cfg: &SolverConfig,
    qt1_override: Option<f64>,
) -> Result<GlobalProfile> {
    let im = match_at_half(q0, sign, cfg).stage("match_at_half")?;
    let qt1 = qt1_override.unwrap_or(im.q1);
    let qt2 = im.q2;
    let em = match_at_two(qt1, qt2, sign, a_max, cfg).stage("match_at_two")?;
    // Measured decay class. The symmetric default q̃₁ = q₁ continues the
    // interior solution analytically through the cone, which cancels the
    // a^{-1/3} coefficient up to O(q₀⁷): the default glue decays like
    // a^{-4/3}. A non-symmetric override restores the generic a^{-1/3} tail.
    let (c1, c2) = fit_tail_coefficients(&em.far, a_max);
    let decay_class = if c1.abs() * a_max.powf(-1.0 / 3.0) > c2.abs() * a_max.powf(-4.0 / 3.0) {
        DecayClass::GenericAMinusOneThird
    } else {
        DecayClass::TunedAMinusFourThirds
    };
    let params = GlueParams {
        q0: Some(q0),
        q1: Some(im.q1),
        q2: Some(im.q2),
        qt1: Some(qt1),
        qt2: Some(qt2),
        m1: Some(em.m1),
        m2: Some(em.m2),
        ell: None,
        a_eps: None,
        tail_c1: Some(c1),
        tail_c2: Some(c2),
    };
    GlobalProfile::new(
        vec![
            Piece::Smooth(im.profile),
            Piece::Expansion(im.expansion),
            Piece::Expansion(em.expansion),
            Piece::Smooth(em.far),
        ],
        params,
        sign,
        decay_class,
    )
    .stage("assembly")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::fit_singular_exponent;
    use crate::oracle::{oracle_integrate, OdeState};
    use crate::quad::{linspace, logspace};

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn exterior_expansion_endpoint_linear_term() {
        let (qt1, qt2) = (0.01, 0.01);
        let e = near_cone_exterior(qt1, qt2, Sign::Defocusing, &cfg()).unwrap();
        let pair = FundamentalPair::exterior();
        let lin = qt1 * pair.eval(Which::First, 2.0).unwrap().0
            + qt2 * 0.629_960_524_947_436_6 * pair.eval(Which::Second, 2.0).unwrap().0;
        assert!((e.q_at(2.0) - lin).abs() < 1e-12);
    }

    #[test]
    fn exterior_cone_exponent_two_thirds() {
        let e = near_cone_exterior(0.01, 0.01, Sign::Defocusing, &cfg()).unwrap();
        let limit = e.components_at_z(0.0).q2;
        let fit = fit_singular_exponent(|a| e.q_at(a), limit, -1.0, (1e-8, 1e-4), 40).unwrap();
        assert!((fit.slope - 2.0 / 3.0).abs() < 0.01, "slope {}", fit.slope);
    }

    #[test]
    fn exterior_expansion_oracle_equivalence() {
        let e = near_cone_exterior(0.02, 0.01, Sign::Defocusing, &cfg()).unwrap();
        let a0 = 1.8;
        let start = OdeState {
            a: a0,
            q: e.q_at(a0),
            dq: e.dq_at(a0),
        };
        let (_, dense) = oracle_integrate(start, 1.0 + 1e-3, Sign::Defocusing, 1e-12, 1e-3).unwrap();
        for z in logspace(1e-3, 0.7, 25) {
            let a = 1.0 + z;
            let y = dense.eval(a).unwrap();
            assert!(
                (y[0] - e.q_at(a)).abs() < 1e-7,
                "a = {a}: {} vs {}",
                y[0],
                e.q_at(a)
            );
        }
    }

    #[test]
    fn far_field_zero_is_zero() {
        let p = far_field(0.0, 0.0, Sign::Defocusing, 1e4, &cfg()).unwrap();
        for a in logspace(2.0, 1e4, 30) {
            assert_eq!(p.eval(a), 0.0);
        }
    }

    #[test]
    fn far_field_pure_first_mode_asymptotics() {
        // for m₂ = 0 the leading behavior is m₁ a^{-1/3}, approached like
        // m₁ a^{-1/3}(1 − (2/3)/a); the nonlinear correction is a^{-7/3}
        let m1 = 0.01;
        let p = far_field(m1, 0.0, Sign::Defocusing, 1e4, &cfg()).unwrap();
        let pair = FundamentalPair::exterior();
        for a in [1e3f64, 3e3, 5e3] {
            let linear = m1 * pair.eval(Which::First, a).unwrap().0;
            assert!(
                ((p.eval(a) - linear) / linear).abs() < 1e-6,
                "nonlinear residue at a = {a}"
            );
        }
        let a = 9.9e3f64;
        let scaled = a.powf(1.0 / 3.0) * p.eval(a);
        assert!(
            (scaled / m1 - 1.0).abs() < 1e-4,
            "a^(1/3) Q = {scaled} at a = {a}"
        );
    }

    #[test]
    fn far_field_truncation_robustness() {
        let delta = verify_far_tail(0.01, 0.0, Sign::Defocusing, 1e4, 50.0, 1e-10, &cfg()).unwrap();
        assert!(delta < 1e-10, "doubling changed Q(50) by {delta}");
    }

    #[test]
    fn far_field_residual_small() {
        let p = far_field(0.01, 0.008, Sign::Defocusing, 1e4, &cfg()).unwrap();
        for a in logspace(2.5, 5e3, 100) {
            let r = p.ode_residual_at(a, Sign::Defocusing);
            assert!(r.abs() < 1e-6, "residual {r} at a = {a}");
        }
    }

    #[test]
    fn match_at_two_trivial_and_small() {
        let m = match_at_two(0.0, 0.0, Sign::Defocusing, 1e4, &cfg()).unwrap();
        assert_eq!((m.m1, m.m2), (0.0, 0.0));

        let m = match_at_two(0.01, 0.01, Sign::Defocusing, 1e4, &cfg()).unwrap();
        assert!(m.newton_residual < 1e-10);
        assert!(m.m1.abs() > 1e-4 && m.m1.abs() < 0.05);
        assert!(m.m2.abs() > 1e-4 && m.m2.abs() < 0.05);
        assert!(m.jacobian_condition.is_finite());
        // inverse-map consistency: the far field reproduces the endpoint data
        assert!((m.far.eval(2.0) - m.expansion.q_at(2.0)).abs() < 1e-10);
        assert!((m.far.deriv(2.0) - m.expansion.dq_at(2.0)).abs() < 1e-10);
    }

    #[test]
    fn match_jacobian_close_to_fundamental_matrix() {
        // finite-difference Jacobian of the far-field endpoint map at 0
        // equals the (φ̃₁, φ₂) matrix at a = 2 to first order
        let c = cfg();
        let h = 1e-6;
        let pair = FundamentalPair::exterior();
        let f = |m1: f64, m2: f64| {
            let p = far_field_impl(m1, m2, Sign::Defocusing, 2.0, 1e4, &c).unwrap();
            [p.eval(2.0), p.deriv(2.0)]
        };
        let fp = f(h, 0.0);
        let fm = f(-h, 0.0);
        let col1 = [(fp[0] - fm[0]) / (2.0 * h), (fp[1] - fm[1]) / (2.0 * h)];
        let (p1, d1) = pair.eval(Which::First, 2.0).unwrap();
        assert!((col1[0] - p1).abs() < 1e-7);
        assert!((col1[1] - d1).abs() < 1e-7);
    }

    #[test]
    fn decay_tune_zero_and_linearity() {
        assert_eq!(decay_tune(0.0, Sign::Defocusing, 1e4, &cfg()).unwrap(), (0.0, 0.0));
        let (a1, b1) = decay_tune(0.01, Sign::Defocusing, 1e4, &cfg()).unwrap();
        let (a2, b2) = decay_tune(0.02, Sign::Defocusing, 1e4, &cfg()).unwrap();
        assert!(((b1 / a1) - (b2 / a2)).abs() < 1e-6, "tuned ratios differ");
    }

    #[test]
    fn decay_tuned_profile_has_fast_decay() {
        let c = cfg();
        let m = 0.01;
        let (m1, m2) = decay_tune(m, Sign::Defocusing, 1e4, &c).unwrap();
        let p = far_field(m1, m2, Sign::Defocusing, 1e4, &c).unwrap();
        let (c1, c2) = fit_tail_coefficients(&p, 1e4);
        assert!(c1.abs() < 1e-6, "residual a^{{-1/3}} coefficient {c1}");
        assert!((c2 - m).abs() < 1e-6 * m.abs().max(1.0));
        // plateau of a^{4/3} Q over [1e3, 1e4] within 1%
        let vals: Vec<f64> = logspace(1e3, 1e4, 20)
            .iter()
            .map(|&a| a.powf(4.0 / 3.0) * p.eval(a))
            .collect();
        assert!(crate::fit::plateau_deviation(&vals) < 0.01);
    }

    #[test]
    fn glue_zero_gives_zero_profile() {
        let g = glue_global(0.0, Sign::Defocusing, 1e4, &cfg(), None).unwrap();
        for a in linspace(0.0, 3.0, 20) {
            assert_eq!(g.eval(a).unwrap(), 0.0);
        }
    }

    #[test]
    fn glue_small_profile_properties() {
        let g = glue_global(0.01, Sign::Defocusing, 1e4, &cfg(), None).unwrap();
        // continuity across all interfaces
        assert!(g.max_jump() < 1e-9, "max jump {}", g.max_jump());
        // cross-cone: both one-sided limits equal q2
        let q2 = g.params.q2.unwrap();
        assert!((g.eval(1.0).unwrap() - q2).abs() < 1e-12);
        // singular exponents on both sides
        let left = fit_singular_exponent(|a| g.eval(a).unwrap(), q2, 1.0, (1e-8, 1e-4), 40).unwrap();
        let right = fit_singular_exponent(|a| g.eval(a).unwrap(), q2, -1.0, (1e-8, 1e-4), 40).unwrap();
        assert!((left.slope - 2.0 / 3.0).abs() < 0.01, "left {}", left.slope);
        assert!((right.slope - 2.0 / 3.0).abs() < 0.01, "right {}", right.slope);
        // the symmetric default continues the interior solution through the
        // cone and lands on the tuned tail: m₁ + m₂ = O(q₀⁷)
        let (m1, m2) = (g.params.m1.unwrap(), g.params.m2.unwrap());
        assert!((m1 + m2).abs() < 1e-10, "m1 + m2 = {:e}", m1 + m2);
        assert!(matches!(g.decay_class, crate::profile::DecayClass::TunedAMinusFourThirds));
    }

    #[test]
    fn generic_override_restores_slow_decay() {
        // a^{1/3} Q approaches a nonzero constant once q̃₁ is moved off the
        // symmetric value
        let im = crate::interior::match_at_half(0.01, Sign::Defocusing, &cfg()).unwrap();
        let g = glue_global(0.01, Sign::Defocusing, 1e4, &cfg(), Some(0.5 * im.q1)).unwrap();
        assert!(g.max_jump() < 1e-9);
        let vals: Vec<f64> = logspace(1e3, 1e4, 20)
            .iter()
            .map(|&a| a.powf(1.0 / 3.0) * g.eval(a).unwrap())
            .collect();
        assert!(crate::fit::plateau_deviation(&vals) < 0.01, "plateau dev {}", crate::fit::plateau_deviation(&vals));
        assert!(vals[0].abs() > 1e-4, "a^(1/3)Q plateau should be nonzero");
        assert!(matches!(g.decay_class, crate::profile::DecayClass::GenericAMinusOneThird));
    }

    #[test]
    fn glue_derivative_blowup_exponent() {
        // |Q'| ~ |1-a|^{-1/3} on both sides
        let g = glue_global(0.01, Sign::Defocusing, 1e4, &cfg(), None).unwrap();
        let zs = logspace(1e-8, 1e-4, 30);
        let left: Vec<f64> = zs.iter().map(|&z| g.deriv(1.0 - z).unwrap().abs()).collect();
        let right: Vec<f64> = zs.iter().map(|&z| g.deriv(1.0 + z).unwrap().abs()).collect();
        let fl = crate::fit::loglog_fit(&zs, &left).unwrap();
        let fr = crate::fit::loglog_fit(&zs, &right).unwrap();
        assert!((fl.slope + 1.0 / 3.0).abs() < 0.02, "left slope {}", fl.slope);
        assert!((fr.slope + 1.0 / 3.0).abs() < 0.02, "right slope {}", fr.slope);
    }
}
