//! Interior light-cone constructions: the Picard fixed point on [0, 1/2],
//! the singular expansion on [1/2, 1), and the connection problem at a = 1/2.

use crate::basis::{linear_seed, FundamentalPair, GreenKernel, Sign, Which};
use crate::cheb::{graded_mesh, uniform_mesh, GradeToward, PiecewiseCheb};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::profile::{ConeSide, Provenance, SampledProfile, SingularExpansion};
use crate::quad::GaussRule;
use crate::septic::SepticSplit;

pub use crate::fit::fit_singular_exponent;

const TWO_POW_M23: f64 = 0.629_960_524_947_436_6; // 2^{-2/3}

/// Unique smooth even solution of the profile ODE on [0, 1/2] with
/// Q(0) = q₀, Q'(0) = 0, as the fixed point of
/// Q = q₀·(3/4)(φ₂ − φ₁) + σ ∫₀^a G(a,b) Q(b)⁷ db.
pub fn picard_interior(q0: f64, sign: Sign, cfg: &SolverConfig) -> Result<SampledProfile> {
    if q0.abs() > cfg.q_max {
        return Err(Error::Domain {
            context: "picard_interior amplitude exceeds q_max",
            a: q0,
        });
    }
    let sigma = sign.coefficient();
    let mesh = uniform_mesh(0.0, 0.5, cfg.panels.max(2));
    let degree = cfg.cheb_degree;
    let nodes = PiecewiseCheb::collocation_nodes(&mesh, degree);
    let provenance = Provenance::PicardInterior {
        q0,
        sign,
        tol: cfg.tol.fixed_point,
        integral_sign: sigma,
    };

    // amplitudes below the noise floor map to the exact zero profile
    if q0.abs() < 1e-14 {
        let rep = PiecewiseCheb::from_fn(&mesh, degree, |_| 0.0);
        return Ok(SampledProfile::new(rep, provenance).with_degree(degree));
    }

    let seed: Vec<f64> = nodes.iter().map(|&a| q0 * linear_seed(a)).collect();
    let mut vals = seed.clone();
    let green = GreenKernel::interior();
    let rule = GaussRule::new(cfg.quad_points);

    let mut prev_inc = f64::INFINITY;
    let mut bad_streak = 0usize;
    for sweep in 0..cfg.max_sweeps {
        let interp = PiecewiseCheb::from_node_values(&mesh, degree, &vals);
        let mut inc = 0.0f64;
        let new_vals: Vec<f64> = nodes
            .iter()
            .zip(&seed)
            .map(|(&a, &lin)| {
                if a == 0.0 {
                    return lin;
                }
                let integral = rule.integrate(0.0, 1.0, |u| {
                    let b = a * u;
                    if b <= 0.0 {
                        return 0.0;
                    }
                    green.eval(a, b).expect("kernel domain") * interp.eval(b).powi(7)
                });
                lin + sigma * a * integral
            })
            .collect();
        for (n, o) in new_vals.iter().zip(&vals) {
            inc = inc.max((n - o).abs());
        }
        vals = new_vals;
        if inc < cfg.tol.fixed_point {
            let rep = PiecewiseCheb::from_node_values(&mesh, degree, &vals);
            return Ok(SampledProfile::new(rep, provenance).with_degree(degree));
        }
        bad_streak = if inc >= prev_inc { bad_streak + 1 } else { 0 };
        if bad_streak >= 10 {
            return Err(Error::ContractionFailure {
                iterations: sweep + 1,
                increment: inc,
                hint: "q0 too large",
            });
        }
        prev_inc = inc;
    }
    Err(Error::ContractionFailure {
        iterations: cfg.max_sweeps,
        increment: prev_inc,
        hint: "sweep cap reached",
    })
}

/// Shared collocation solver for the near-cone component systems. The three
/// components live over the offset z = |1 − a| on [0, z_max]; `beta3` is the
/// numerator of the third exponent; `third_gains_z` marks the large-regime
/// system, whose third equation carries an extra factor z; `int_sign` is the
/// sign on the Green-integral terms.
pub(crate) struct NearConeSystem {
    pub side: ConeSide,
    pub z_max: f64,
    pub beta3: u32,
    pub third_gains_z: bool,
    pub int_sign: f64,
    /// Linear seeds of (Q₁, Q₂) at offset z.
    pub lead: (f64, f64),
}

pub(crate) fn solve_near_cone(
    sys: &NearConeSystem,
    cfg: &SolverConfig,
    scale: f64,
) -> Result<SingularExpansion> {
    let split = SepticSplit::new(sys.beta3);
    let green = match sys.side {
        ConeSide::Left => GreenKernel::interior(),
        ConeSide::Right => GreenKernel::exterior(),
    };
    let rule = GaussRule::new(cfg.quad_points);
    let mesh = graded_mesh(0.0, sys.z_max, cfg.panels.max(2), 3.0, GradeToward::Lo);
    let degree = cfg.cheb_degree;
    let zs = PiecewiseCheb::collocation_nodes(&mesh, degree);
    let pair = FundamentalPair::interior();
    let (c1, c2) = sys.lead;

    let a_of = |z: f64| sys.side.a_of_z(z);
    // linear parts: Q₁ = c₁/a (since |1−a|^{-2/3}·first solution = 1/a) and
    // Q₂ = c₂·2^{-2/3}φ₂(a), both analytic across the cone
    let lin1: Vec<f64> = zs.iter().map(|&z| c1 / a_of(z)).collect();
    let lin2: Vec<f64> = zs
        .iter()
        .map(|&z| c2 * TWO_POW_M23 * pair.eval(Which::Second, a_of(z)).expect("domain").0)
        .collect();

    let mut v1 = lin1.clone();
    let mut v2 = lin2.clone();
    let mut v3 = vec![0.0; zs.len()];

    let mut prev_inc = f64::INFINITY;
    let mut bad_streak = 0usize;
    for sweep in 0..cfg.max_sweeps {
        let i1 = PiecewiseCheb::from_node_values(&mesh, degree, &v1);
        let i2 = PiecewiseCheb::from_node_values(&mesh, degree, &v2);
        let i3 = PiecewiseCheb::from_node_values(&mesh, degree, &v3);
        let mut inc = 0.0f64;
        let mut n1 = Vec::with_capacity(zs.len());
        let mut n2 = Vec::with_capacity(zs.len());
        let mut n3 = Vec::with_capacity(zs.len());
        for (i, &z) in zs.iter().enumerate() {
            let a = a_of(z);
            let mut t = [0.0f64; 3];
            if z > 0.0 {
                for (tau, w) in rule.mapped(0.0, 1.0) {
                    let zb = z * tau * tau * tau;
                    let (q1b, q2b, q3b) = (i1.eval(zb), i2.eval(zb), i3.eval(zb));
                    let n0 = split.eval(0, zb, q1b, q2b, q3b);
                    let nn1 = split.eval(1, zb, q1b, q2b, q3b);
                    let nn2 = split.eval(2, zb, q1b, q2b, q3b);
                    let k0 = green.tau_kernel(a, tau, 0);
                    let k1 = green.tau_kernel(a, tau, 1);
                    let k2 = green.tau_kernel(a, tau, 2);
                    t[0] += w * k0 * n0;
                    t[1] += w * k1 * nn1;
                    t[2] += w * k2 * nn2;
                }
            }
            let s = sys.int_sign;
            n1.push(lin1[i] + s * z * t[1]);
            n2.push(lin2[i] + s * z * t[0]);
            n3.push(if sys.third_gains_z {
                s * z * t[2]
            } else {
                s * t[2]
            });
        }
        for (n, o) in n1.iter().zip(&v1).chain(n2.iter().zip(&v2)).chain(n3.iter().zip(&v3)) {
            inc = inc.max((n - o).abs());
        }
        v1 = n1;
        v2 = n2;
        v3 = n3;
        if inc < cfg.tol.fixed_point * scale.max(1.0) {
            let comps = [
                PiecewiseCheb::from_node_values(&mesh, degree, &v1),
                PiecewiseCheb::from_node_values(&mesh, degree, &v2),
                PiecewiseCheb::from_node_values(&mesh, degree, &v3),
            ];
            return Ok(SingularExpansion::new(
                sys.side,
                sys.z_max,
                comps,
                sys.beta3 as f64 / 3.0,
                sys.lead,
            ));
        }
        bad_streak = if inc >= prev_inc { bad_streak + 1 } else { 0 };
        if bad_streak >= 10 {
            return Err(Error::ContractionFailure {
                iterations: sweep + 1,
                increment: inc,
                hint: "expansion coefficients too large",
            });
        }
        prev_inc = inc;
    }
    Err(Error::ContractionFailure {
        iterations: cfg.max_sweeps,
        increment: prev_inc,
        hint: "sweep cap reached",
    })
}

/// Singular expansion Q = (1−a)^{2/3}Q₁ + Q₂ + (1−a)^{7/3}Q₃ on [1/2, 1),
/// determined by the leading coefficients (q₁, q₂).
pub fn near_cone_interior(
    q1: f64,
    q2: f64,
    sign: Sign,
    cfg: &SolverConfig,
) -> Result<SingularExpansion> {
    if q1.abs() > cfg.eps_small || q2.abs() > cfg.eps_small {
        return Err(Error::Domain {
            context: "near_cone_interior coefficients exceed eps_small",
            a: q1.abs().max(q2.abs()),
        });
    }
    // data at a = 1 integrated down to a: Q = lin − σ ∫_a^1 G Q⁷ db
    let sys = NearConeSystem {
        side: ConeSide::Left,
        z_max: 0.5,
        beta3: 7,
        third_gains_z: false,
        int_sign: -sign.coefficient(),
        lead: (q1, q2),
    };
    solve_near_cone(&sys, cfg, q1.abs().max(q2.abs()))
}

/// Result of the connection problem at a = 1/2.
#[derive(Debug, Clone)]
pub struct InteriorMatch {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub newton_residual: f64,
    pub iterations: usize,
    pub profile: SampledProfile,
    pub expansion: SingularExpansion,
}

pub(crate) fn solve2(j: [[f64; 2]; 2], rhs: [f64; 2]) -> [f64; 2] {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    [
        (rhs[0] * j[1][1] - rhs[1] * j[0][1]) / det,
        (j[0][0] * rhs[1] - j[1][0] * rhs[0]) / det,
    ]
}

/// Analytic leading Jacobian of the near-cone endpoint values with respect
/// to the leading coefficients: the matrix of (first solution, 2^{-2/3}φ₂)
/// values and derivatives at the matching point.
pub(crate) fn endpoint_jacobian(pair: FundamentalPair, a: f64) -> [[f64; 2]; 2] {
    let (p1, d1) = pair.eval(Which::First, a).expect("domain");
    let (p2, d2) = pair.eval(Which::Second, a).expect("domain");
    [
        [p1, TWO_POW_M23 * p2],
        [d1, TWO_POW_M23 * d2],
    ]
}

/// Newton/Broyden iteration matching the near-cone expansion to the Picard
/// solution at a = 1/2.
pub fn match_at_half(q0: f64, sign: Sign, cfg: &SolverConfig) -> Result<InteriorMatch> {
    let profile = picard_interior(q0, sign, cfg)?;
    if q0.abs() < 1e-14 {
        let expansion = near_cone_interior(0.0, 0.0, sign, cfg)?;
        return Ok(InteriorMatch {
            q0,
            q1: 0.0,
            q2: 0.0,
            newton_residual: 0.0,
            iterations: 0,
            profile,
            expansion,
        });
    }
    let target = [profile.eval(0.5), profile.deriv(0.5)];
    let mut jac = endpoint_jacobian(FundamentalPair::interior(), 0.5);
    let mut q = solve2(jac, target);
    let mut trail: Vec<(f64, f64)> = Vec::new();

    let eval_f = |q: [f64; 2]| -> Result<([f64; 2], SingularExpansion)> {
        let e = near_cone_interior(q[0], q[1], sign, cfg)?;
        let (_, val, deriv) = e.outer_endpoint();
        Ok(([val - target[0], deriv - target[1]], e))
    };

    let (mut f, mut expansion) = eval_f(q)?;
    for it in 0..cfg.max_newton {
        let res = f[0].abs().max(f[1].abs());
        trail.push((q[0], q[1]));
        if res < cfg.tol.newton {
            return Ok(InteriorMatch {
                q0,
                q1: q[0],
                q2: q[1],
                newton_residual: res,
                iterations: it,
                profile,
                expansion,
            });
        }
        let step = solve2(jac, f);
        let q_new = [q[0] - step[0], q[1] - step[1]];
        let (f_new, e_new) = eval_f(q_new)?;
        // Broyden rank-one update of the Jacobian
        let dq = [q_new[0] - q[0], q_new[1] - q[1]];
        let df = [f_new[0] - f[0], f_new[1] - f[1]];
        let denom = dq[0] * dq[0] + dq[1] * dq[1];
        if denom > 0.0 {
            let jdq = [
                jac[0][0] * dq[0] + jac[0][1] * dq[1],
                jac[1][0] * dq[0] + jac[1][1] * dq[1],
            ];
            for r in 0..2 {
                for c in 0..2 {
                    jac[r][c] += (df[r] - jdq[r]) * dq[c] / denom;
                }
            }
        }
        q = q_new;
        f = f_new;
        expansion = e_new;
    }
    Err(Error::NewtonStagnation {
        residual: f[0].abs().max(f[1].abs()),
        iterations: cfg.max_newton,
        trail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::linear_seed_deriv;
    use crate::oracle::{oracle_integrate, OdeState};
    use crate::quad::linspace;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn zero_amplitude_gives_zero_profile() {
        let p = picard_interior(0.0, Sign::Defocusing, &cfg()).unwrap();
        for a in linspace(0.0, 0.5, 20) {
            assert_eq!(p.eval(a), 0.0);
        }
    }

    #[test]
    fn small_amplitude_matches_linear_seed_at_half() {
        // Q(1/2) = q₀·(3/4)(φ₂−φ₁)(1/2) + O(q₀⁷)
        let q0 = 0.01;
        let p = picard_interior(q0, Sign::Defocusing, &cfg()).unwrap();
        let expected = q0 * linear_seed(0.5);
        assert!(
            (p.eval(0.5) - expected).abs() < 5e-14,
            "{} vs {expected}",
            p.eval(0.5)
        );
        assert!((p.eval(0.0) - q0).abs() < 1e-15);
    }

    #[test]
    fn focusing_and_defocusing_differ_at_seventh_order() {
        let q0 = 0.1;
        let pd = picard_interior(q0, Sign::Defocusing, &cfg()).unwrap();
        let pf = picard_interior(q0, Sign::Focusing, &cfg()).unwrap();
        let mut sup = 0.0f64;
        for a in linspace(0.0, 0.5, 101) {
            sup = sup.max((pd.eval(a) - pf.eval(a)).abs());
        }
        assert!(sup > 0.0, "signs must differ");
        assert!(sup < 1e-5, "difference {sup} should be O(q0^7)");
    }

    #[test]
    fn defocusing_solution_is_nondecreasing() {
        let p = picard_interior(0.1, Sign::Defocusing, &cfg()).unwrap();
        for a in linspace(0.0, 0.5, 200) {
            assert!(p.deriv(a) >= -1e-12, "Q' = {} at a = {a}", p.deriv(a));
        }
    }

    #[test]
    fn fixed_point_consistency() {
        // reinserting the converged profile changes it by < 2 tol
        let c = cfg();
        let q0 = 0.05;
        let p = picard_interior(q0, Sign::Defocusing, &c).unwrap();
        let green = GreenKernel::interior();
        let rule = GaussRule::new(c.quad_points);
        let mut worst = 0.0f64;
        for a in linspace(0.01, 0.5, 25) {
            let integral = rule.integrate(0.0, 1.0, |u| {
                green.eval(a, a * u).unwrap() * p.eval(a * u).powi(7)
            });
            let rhs = q0 * linear_seed(a) + a * integral;
            worst = worst.max((rhs - p.eval(a)).abs());
        }
        assert!(worst < 2.0 * c.tol.fixed_point, "defect {worst}");
    }

    #[test]
    fn nonlinear_correction_carries_a_squared_scaling() {
        // |Q − q₀Q₀| ≤ K q₀⁷ a² with a single constant across amplitudes
        let mut ks = Vec::new();
        for &q0 in &[0.05, 0.1, 0.2] {
            let p = picard_interior(q0, Sign::Defocusing, &cfg()).unwrap();
            let mut k = 0.0f64;
            for a in linspace(0.02, 0.5, 49) {
                let h = (p.eval(a) - q0 * linear_seed(a)).abs();
                k = k.max(h / (q0.powi(7) * a * a));
            }
            ks.push(k);
        }
        let kmin = ks.iter().cloned().fold(f64::INFINITY, f64::min);
        let kmax = ks.iter().cloned().fold(0.0f64, f64::max);
        assert!(kmax.is_finite() && kmax / kmin < 1.2, "K spread {ks:?}");
    }

    #[test]
    fn picard_agrees_with_oracle() {
        // mutual validation: q₀ = 0.01, defocusing, compared at a = 0.45
        let q0 = 0.01;
        let p = picard_interior(q0, Sign::Defocusing, &cfg()).unwrap();
        let a0 = 0.01;
        let start = OdeState {
            a: a0,
            q: q0 * linear_seed(a0),
            dq: q0 * linear_seed_deriv(a0),
        };
        let (end, _) = oracle_integrate(start, 0.45, Sign::Defocusing, 1e-12, 1e-3).unwrap();
        assert!(
            (end.q - p.eval(0.45)).abs() < 1e-9,
            "oracle {} vs picard {}",
            end.q,
            p.eval(0.45)
        );
    }

    #[test]
    fn zero_expansion_is_zero() {
        let e = near_cone_interior(0.0, 0.0, Sign::Defocusing, &cfg()).unwrap();
        for a in linspace(0.5, 0.999, 40) {
            assert_eq!(e.q_at(a), 0.0);
        }
    }

    #[test]
    fn expansion_endpoint_matches_linear_term() {
        // Q(1/2) = q₁φ₁(1/2) + q₂2^{-2/3}φ₂(1/2) + O(|q|⁷)
        let (q1, q2) = (0.01, 0.01);
        let e = near_cone_interior(q1, q2, Sign::Defocusing, &cfg()).unwrap();
        let pair = FundamentalPair::interior();
        let lin = q1 * pair.eval(Which::First, 0.5).unwrap().0
            + q2 * TWO_POW_M23 * pair.eval(Which::Second, 0.5).unwrap().0;
        assert!(
            (e.q_at(0.5) - lin).abs() < 1e-12,
            "{} vs {lin}",
            e.q_at(0.5)
        );
    }

    #[test]
    fn expansion_leading_coefficients_at_cone() {
        let (q1, q2) = (0.03, -0.02);
        let e = near_cone_interior(q1, q2, Sign::Defocusing, &cfg()).unwrap();
        let c = e.components_at_z(0.0);
        assert!((c.q1 - q1).abs() < 1e-12);
        assert!((c.q2 - q2).abs() < 1e-12);
    }

    #[test]
    fn expansion_residual_is_small_near_cone() {
        let e = near_cone_interior(0.05, 0.05, Sign::Defocusing, &cfg()).unwrap();
        for z in crate::quad::logspace(1e-3, 0.4, 30) {
            let a = 1.0 - z;
            let r = e.ode_residual_at(a, Sign::Defocusing);
            assert!(r.abs() < 1e-6, "residual {r} at a = {a}");
        }
    }

    #[test]
    fn expansion_agrees_with_oracle_up_to_cone() {
        let e = near_cone_interior(0.01, 0.02, Sign::Defocusing, &cfg()).unwrap();
        let a0 = 0.55;
        let start = OdeState {
            a: a0,
            q: e.q_at(a0),
            dq: e.dq_at(a0),
        };
        let (_, dense) =
            oracle_integrate(start, 1.0 - 1e-3, Sign::Defocusing, 1e-12, 1e-3).unwrap();
        for z in crate::quad::logspace(1e-3, 0.45, 25) {
            let a = 1.0 - z;
            let y = dense.eval(a).unwrap();
            assert!(
                (y[0] - e.q_at(a)).abs() < 1e-7,
                "a = {a}: oracle {} expansion {}",
                y[0],
                e.q_at(a)
            );
        }
    }

    #[test]
    fn fitted_cone_exponent_is_two_thirds() {
        let e = near_cone_interior(0.01, 0.02, Sign::Defocusing, &cfg()).unwrap();
        let limit = e.components_at_z(0.0).q2;
        let fit =
            fit_singular_exponent(|a| e.q_at(a), limit, 1.0, (1e-8, 1e-4), 40).unwrap();
        assert!(
            (fit.slope - 2.0 / 3.0).abs() < 0.01,
            "fitted exponent {}",
            fit.slope
        );
    }

    #[test]
    fn match_at_half_zero_and_small() {
        let m = match_at_half(0.0, Sign::Defocusing, &cfg()).unwrap();
        assert_eq!((m.q1, m.q2), (0.0, 0.0));

        let m = match_at_half(0.01, Sign::Defocusing, &cfg()).unwrap();
        assert!(m.newton_residual < 1e-10);
        assert!(m.q1.abs() > 1e-4 && m.q2.abs() > 1e-4, "q1 = {}, q2 = {}", m.q1, m.q2);
        // magnitudes are O(q0)
        assert!(m.q1.abs() < 0.05 && m.q2.abs() < 0.05);
        // expansion and Picard agree across the matching point
        assert!((m.expansion.q_at(0.5) - m.profile.eval(0.5)).abs() < 1e-10);
    }

    #[test]
    fn match_scales_linearly_for_small_amplitudes() {
        let m1 = match_at_half(0.001, Sign::Defocusing, &cfg()).unwrap();
        let m2 = match_at_half(0.002, Sign::Defocusing, &cfg()).unwrap();
        assert!((m2.q1 / m1.q1 - 2.0).abs() < 1e-3);
        assert!((m2.q2 / m1.q2 - 2.0).abs() < 1e-3);
    }

    #[test]
    fn amplitude_beyond_q_max_is_rejected() {
        assert!(picard_interior(0.5, Sign::Defocusing, &cfg()).is_err());
    }
}
