//! Large-amplitude exterior solutions (defocusing only): the near-cone
//! system on [1, 1+ℓ] with ℓ = c|q̃₂| q̃₁^{-4/3}, the integrating-factor
//! extension to large a with its monotone energy, the rematching onto the
//! far-field ansatz at a point where the solution has become small, and the
//! large global glue.

use crate::basis::{FundamentalPair, Sign, Which};
use crate::cheb::{geometric_mesh, PiecewiseCheb};
use crate::config::SolverConfig;
use crate::error::{Error, Result, StageExt};
use crate::exterior::far_field_from;
use crate::interior::{match_at_half, solve2, solve_near_cone, NearConeSystem};
use crate::oracle::{integrate_adaptive, AdaptiveOptions, DenseOutput, OdeState};
use crate::profile::{
    ConeSide, DecayClass, GlobalProfile, GlueParams, Piece, Provenance, SampledProfile,
    SingularExpansion,
};

/// Interval length of the large near-cone system.
pub fn interval_length(qt1: f64, qt2: f64, c: f64) -> Result<f64> {
    if qt2 == 0.0 {
        return Err(Error::DegenerateInterval(
            "qt2 = 0 gives an empty near-cone interval".into(),
        ));
    }
    if qt1 <= 0.0 {
        return Err(Error::Domain {
            context: "large near-cone coefficient must be positive",
            a: qt1,
        });
    }
    let ell = c * qt2.abs() * qt1.powf(-4.0 / 3.0);
    if ell < 64.0 * f64::EPSILON {
        return Err(Error::DegenerateInterval(format!(
            "interval length {ell:.3e} below the f64 cone resolution"
        )));
    }
    if ell > 0.5 {
        return Err(Error::DegenerateInterval(format!(
            "interval length {ell:.3e} too large; reduce c"
        )));
    }
    Ok(ell)
}

#[derive(Debug, Clone)]
pub struct LargeNearConeResult {
    pub expansion: SingularExpansion,
    pub ell: f64,
    pub c: f64,
    pub a_star: f64,
    pub amplitude_at_star: f64,
    /// Logged constant of the component bounds |Q̃₂| ≤ C|q̃₂|, |Q̃₃| ≤ C q̃₁.
    pub bound_constant: f64,
    /// Whether |Q̃₁| ≥ q̃₁/2 held uniformly on [1, 1+ℓ].
    pub lower_bound_ok: bool,
}

/// Near-cone system on [1, 1+ℓ] with exponents (2/3, 0, 4/3) and a large
/// first coefficient. Defocusing only; the extension that gives this regime
/// meaning depends on the sign.
pub fn large_near_cone(
    qt1: f64,
    qt2: f64,
    c: f64,
    cfg: &SolverConfig,
) -> Result<LargeNearConeResult> {
    if qt2.abs() > cfg.eps_small {
        return Err(Error::Domain {
            context: "large_near_cone second coefficient exceeds eps_small",
            a: qt2,
        });
    }
    let ell = interval_length(qt1, qt2, c)?;
    let sys = NearConeSystem {
        side: ConeSide::Right,
        z_max: ell,
        beta3: 4,
        third_gains_z: true,
        int_sign: Sign::Defocusing.coefficient(),
        lead: (qt1, qt2),
    };
    let expansion = solve_near_cone(&sys, cfg, qt1.abs().max(1.0))?;

    let mut sup2 = 0.0f64;
    let mut sup3 = 0.0f64;
    let mut inf1 = f64::INFINITY;
    for i in 0..=200 {
        let z = ell * i as f64 / 200.0;
        let comps = expansion.components_at_z(z);
        inf1 = inf1.min(comps.q1.abs());
        sup2 = sup2.max(comps.q2.abs());
        sup3 = sup3.max(comps.q3.abs());
    }
    let bound_constant = (sup2 / qt2.abs()).max(sup3 / qt1.abs().max(1e-300));
    let a_star = 1.0 + ell / 2.0;
    let amplitude_at_star = expansion.q_at(a_star).abs();
    Ok(LargeNearConeResult {
        expansion,
        ell,
        c,
        a_star,
        amplitude_at_star,
        bound_constant,
        lower_bound_ok: inf1 >= qt1 / 2.0,
    })
}

/// Auxiliary functions of the integrating-factor transformation X = Q·w:
/// f(a) = (1/2)(8a/3 − 2/a)/(a²−1), g(a) = 5/(9(a²−1)²), and
/// w(a) = exp ∫_{1+ℓ}^a f, in the closed form
/// w(a) = (a/(1+ℓ)) ((a²−1)/(ℓ(2+ℓ)))^{1/6} obtained from the partial
/// fractions f = 1/a + (1/6)(1/(a−1) + 1/(a+1)).
pub fn integrating_factor(a: f64, ell: f64) -> Result<(f64, f64, f64)> {
    if ell <= 0.0 || a < (1.0 + ell) * (1.0 - 1e-14) {
        return Err(Error::Domain {
            context: "integrating factor domain a >= 1 + ell",
            a,
        });
    }
    // (a² − 1) via the exact offset a − 1
    let am1 = a - 1.0;
    let a2m1 = am1 * (a + 1.0);
    let f = (4.0 * a * a - 3.0) / (3.0 * a * a2m1);
    let g = 5.0 / (9.0 * a2m1 * a2m1);
    let w = a / (1.0 + ell) * (a2m1 / (ell * (2.0 + ell))).powf(1.0 / 6.0);
    Ok((f, g, w))
}

/// Coefficient of X⁷ in the transformed equation: e^{-6∫f}/(a²−1) = w⁻⁶/(a²−1),
/// evaluated by the closed form (1+ℓ)⁶ ℓ(2+ℓ) / (a⁶ (a²−1)²).
pub fn septic_coefficient(a: f64, ell: f64) -> f64 {
    let a2m1 = (a - 1.0) * (a + 1.0);
    (1.0 + ell).powi(6) * ell * (2.0 + ell) / (a.powi(6) * a2m1 * a2m1)
}

/// Energy of the transformed oscillator:
/// E = (1/2)X'² + (1/2) g X² + (1/8)(w⁻⁶/(a²−1)) X⁸.
pub fn energy_functional(x: f64, dx: f64, a: f64, ell: f64) -> Result<f64> {
    let (_, g, _) = integrating_factor(a, ell)?;
    Ok(0.5 * dx * dx + 0.5 * g * x * x + 0.125 * septic_coefficient(a, ell) * x.powi(8))
}

/// State of the extension in the transformed variable.
#[derive(Debug, Clone, Copy)]
pub struct ExtensionState {
    pub a: f64,
    pub x: f64,
    pub dx: f64,
}

#[derive(Debug)]
pub struct Extension {
    /// Q = X/w resampled as a dense profile on [1+ℓ, a_far].
    pub profile: SampledProfile,
    pub x_dense: DenseOutput,
    /// (a, E) at every accepted integrator step, time-ordered.
    pub energy_trace: Vec<(f64, f64)>,
    pub zero_crossings: usize,
    pub ell: f64,
    pub initial_energy: f64,
    /// D with |X(a)| ≤ D a^{5/4} from the initial energy.
    pub amplitude_bound: f64,
}

impl Extension {
    pub fn state_at(&self, a: f64) -> Option<ExtensionState> {
        self.x_dense.eval(a).map(|y| ExtensionState {
            a,
            x: y[0],
            dx: y[1],
        })
    }

    /// (Q, Q') recovered from (X, X') via Q = X/w, Q' = (X' − fX)/w.
    pub fn q_state_at(&self, a: f64) -> Option<OdeState> {
        let s = self.state_at(a)?;
        let (f, _, w) = integrating_factor(a, self.ell).ok()?;
        Some(OdeState {
            a,
            q: s.x / w,
            dq: (s.dx - f * s.x) / w,
        })
    }

    /// Residual of the original profile ODE after transforming back from the
    /// oscillator variable: X'' comes from the oscillator equation itself and
    /// Q'' = (X'' − 2fX' + (f² − f')X)/w, so this measures the algebraic
    /// equivalence of the two formulations plus integrator error.
    pub fn q_residual_at(&self, a: f64) -> Option<f64> {
        let s = self.state_at(a)?;
        let ell = self.ell;
        let (f, g, w) = integrating_factor(a, ell).ok()?;
        let am1 = a - 1.0;
        let ap1 = a + 1.0;
        let fprime = -1.0 / (a * a) - (1.0 / (am1 * am1) + 1.0 / (ap1 * ap1)) / 6.0;
        let ddx = -g * s.x - septic_coefficient(a, ell) * s.x.powi(7);
        let q = s.x / w;
        let dq = (s.dx - f * s.x) / w;
        let ddq = (ddx - 2.0 * f * s.dx + (f * f - fprime) * s.x) / w;
        Some(crate::basis::ode_residual(q, dq, ddq, a, Sign::Defocusing))
    }
}

/// Integrates the transformed equation X'' + gX + (w⁻⁶/(a²−1))X⁷ = 0 from
/// a = 1+ℓ to a_far. The boundary state is (Q, Q') of the near-cone solution
/// at 1+ℓ; since w(1+ℓ) = 1, X = Q and X' = Q' + f·Q there.
pub fn extend_defocusing(
    boundary: OdeState,
    ell: f64,
    a_far: f64,
    cfg: &SolverConfig,
) -> Result<Extension> {
    let a0 = boundary.a;
    if (a0 - (1.0 + ell)).abs() > 1e-9 * (1.0 + ell) {
        return Err(Error::Domain {
            context: "extension must start at a = 1 + ell",
            a: a0,
        });
    }
    let (f0, _, _) = integrating_factor(a0, ell)?;
    let x0 = boundary.q;
    let dx0 = boundary.dq + f0 * x0;
    let e0 = energy_functional(x0, dx0, a0, ell)?;

    let rhs = move |a: f64, y: [f64; 2]| {
        let am1 = a - 1.0;
        let a2m1 = am1 * (a + 1.0);
        let g = 5.0 / (9.0 * a2m1 * a2m1);
        [y[1], -g * y[0] - septic_coefficient(a, ell) * y[0].powi(7)]
    };
    let mut trace: Vec<(f64, f64)> = vec![(a0, e0)];
    let sink = std::rc::Rc::new(std::cell::RefCell::new(Vec::new()));
    let opts = AdaptiveOptions {
        rtol: cfg.tol.oracle,
        atol: cfg.tol.oracle * 1e-2,
        observer: Some(Box::new({
            let sink = sink.clone();
            move |a: f64, y: [f64; 2]| {
                if let Ok(e) = energy_functional(y[0], y[1], a, ell) {
                    sink.borrow_mut().push((a, e));
                }
            }
        })),
        ..Default::default()
    };
    let (_, dense) = integrate_adaptive(rhs, a0, [x0, dx0], a_far, opts)?;
    trace.extend(sink.borrow_mut().drain(..));

    // zero crossings of X on a log-spaced scan of the span
    let scan = crate::quad::logspace(a0 - 1.0, a_far - 1.0, 2000);
    let mut crossings = 0usize;
    let mut last = x0;
    for z in scan.iter().skip(1) {
        let x = dense.eval(1.0 + z).map(|y| y[0]).unwrap_or(last);
        if x != 0.0 && last != 0.0 && x.signum() != last.signum() {
            crossings += 1;
        }
        if x != 0.0 {
            last = x;
        }
    }

    // dense profile of Q on a mesh geometric in a − 1
    let mesh: Vec<f64> = geometric_mesh(a0 - 1.0, a_far - 1.0, 1)
        .into_iter()
        .map(|z| 1.0 + z)
        .collect();
    let degree = cfg.cheb_degree;
    let rep = PiecewiseCheb::from_fn(&mesh, degree, |a| {
        let y = dense.eval(a).expect("inside span");
        let (_, _, w) = integrating_factor(a, ell).expect("domain");
        y[0] / w
    });
    let profile = SampledProfile::new(
        rep,
        Provenance::Extension {
            ell,
            a_start: a0,
            a_end: a_far,
        },
    )
    .with_degree(degree);

    let amplitude_bound = (8.0 * e0 / ((1.0 + ell).powi(6) * ell * (2.0 + ell))).powf(1.0 / 8.0);
    Ok(Extension {
        profile,
        x_dense: dense,
        energy_trace: trace,
        zero_crossings: crossings,
        ell,
        initial_energy: e0,
        amplitude_bound,
    })
}

/// Scans the extension at log-spaced points for |Q| + |Q'| < threshold;
/// returns the first admissible point.
pub fn find_small_point(ext: &Extension, threshold: f64, cap: f64) -> Result<f64> {
    let (a0, a1) = ext.x_dense.span();
    let hi = a1.min(cap);
    let mut best = f64::INFINITY;
    let mut best_at = a0;
    for z in crate::quad::logspace((a0 - 1.0) * 1.01, hi - 1.0, 400) {
        let a = 1.0 + z;
        if a <= a0 || a > hi {
            continue;
        }
        if let Some(s) = ext.q_state_at(a) {
            let size = s.q.abs() + s.dq.abs();
            if size < best {
                best = size;
                best_at = a;
            }
            if size < threshold && a > 2.0 {
                return Ok(a);
            }
        }
    }
    Err(Error::NoSmallPoint {
        cap,
        best,
        at: best_at,
    })
}

/// Newton solve for (m₁, m₂) in the far-field ansatz anchored at a_eps so
/// that the tail matches the given state; returns the coefficients and the
/// tail profile on [a_eps, a_max].
pub fn rematch_far(
    state: OdeState,
    sign: Sign,
    a_max: f64,
    cfg: &SolverConfig,
) -> Result<(f64, f64, SampledProfile)> {
    if state.q.abs() + state.dq.abs() > cfg.eps_small {
        return Err(Error::Domain {
            context: "rematch point not in the small regime",
            a: state.a,
        });
    }
    let a_eps = state.a;
    let pair = FundamentalPair::exterior();
    let (p1, d1) = pair.eval(Which::First, a_eps)?;
    let (p2, d2) = pair.eval(Which::Second, a_eps)?;
    let mut jac = [[p1, p2], [d1, d2]];
    let target = [state.q, state.dq];
    let mut m = solve2(jac, target);
    let mut trail = Vec::new();

    let eval_f = |m: [f64; 2]| -> Result<([f64; 2], SampledProfile)> {
        let tail = far_field_from(m[0], m[1], sign, a_eps, a_max, cfg)?;
        Ok((
            [tail.eval(a_eps) - target[0], tail.deriv(a_eps) - target[1]],
            tail,
        ))
    };
    let (mut f, mut tail) = eval_f(m)?;
    for it in 0..cfg.max_newton {
        let res = f[0].abs().max(f[1].abs());
        trail.push((m[0], m[1]));
        if res < cfg.tol.newton {
            let _ = it;
            return Ok((m[0], m[1], tail));
        }
        let step = solve2(jac, f);
        let m_new = [m[0] - step[0], m[1] - step[1]];
        let (f_new, tail_new) = eval_f(m_new)?;
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
        tail = tail_new;
    }
    Err(Error::NewtonStagnation {
        residual: f[0].abs().max(f[1].abs()),
        iterations: cfg.max_newton,
        trail,
    })
}

/// Large global glue: interior pipeline fixes (q₁, q₂), the cross-cone
/// transfer sets q̃₂ = q₂ with q̃₁ free and large, and the defocusing
/// extension is rematched onto a far-field tail.
pub fn glue_large_global(
    q0: f64,
    qt1: f64,
    sign: Sign,
    a_max: f64,
    cfg: &SolverConfig,
) -> Result<GlobalProfile> {
    if sign == Sign::Focusing {
        return Err(Error::FocusingRejected(
            "the large-amplitude extension requires the defocusing energy",
        ));
    }
    let im = match_at_half(q0, sign, cfg).stage("match_at_half")?;
    let qt2 = im.q2;
    let lnc = large_near_cone(qt1, qt2, cfg.large_c, cfg).stage("large_near_cone")?;
    let ell = lnc.ell;
    let a_edge = 1.0 + ell;
    let boundary = OdeState {
        a: a_edge,
        q: lnc.expansion.q_at(a_edge),
        dq: lnc.expansion.dq_at(a_edge),
    };

    let mut a_far = 100.0f64.max(a_edge * 2.0);
    let (extension, a_eps) = loop {
        let ext = extend_defocusing(boundary, ell, a_far, cfg).stage("extend_defocusing")?;
        match find_small_point(&ext, cfg.eps_small / 2.0, cfg.a_eps_cap) {
            Ok(a_eps) => break (ext, a_eps),
            Err(e) => {
                a_far *= 10.0;
                if a_far > cfg.a_eps_cap {
                    return Err(e.in_stage("find_small_point"));
                }
            }
        }
    };
    let state = extension
        .q_state_at(a_eps)
        .ok_or(Error::Domain {
            context: "rematch point outside extension span",
            a: a_eps,
        })?;
    let (m1, m2, tail) = rematch_far(state, sign, a_max, cfg).stage("rematch_far")?;
    let (tail_c1, tail_c2) = crate::exterior::fit_tail_coefficients(&tail, a_max);

    // restrict the extension to [1+ℓ, a_eps] for assembly
    let mesh: Vec<f64> = geometric_mesh(ell, a_eps - 1.0, 1)
        .into_iter()
        .map(|z| 1.0 + z)
        .collect();
    let bridge = SampledProfile::new(
        PiecewiseCheb::from_fn(&mesh, cfg.cheb_degree, |a| {
            extension
                .x_dense
                .eval(a)
                .map(|y| y[0] / integrating_factor(a, ell).expect("domain").2)
                .expect("inside span")
        }),
        Provenance::Extension {
            ell,
            a_start: a_edge,
            a_end: a_eps,
        },
    )
    .with_degree(cfg.cheb_degree);

    let params = GlueParams {
        q0: Some(q0),
        q1: Some(im.q1),
        q2: Some(im.q2),
        qt1: Some(qt1),
        qt2: Some(qt2),
        m1: Some(m1),
        m2: Some(m2),
        ell: Some(ell),
        a_eps: Some(a_eps),
        tail_c1: Some(tail_c1),
        tail_c2: Some(tail_c2),
    };
    GlobalProfile::new(
        vec![
            Piece::Smooth(im.profile),
            Piece::Expansion(im.expansion),
            Piece::Expansion(lnc.expansion),
            Piece::Smooth(bridge),
            Piece::Smooth(tail),
        ],
        params,
        sign,
        DecayClass::GenericAMinusOneThird,
    )
    .stage("assembly")
}

/// Sweep of the near-cone amplitude |Q(a⋆)| against q̃₁, with the log-log
/// exponent fit used to probe the amplitude growth law.
pub fn amplitude_exponent_sweep(
    qt1_list: &[f64],
    qt2: f64,
    c: f64,
    cfg: &SolverConfig,
) -> Result<(crate::fit::FitResult, Vec<(f64, f64)>)> {
    let results: Vec<Result<(f64, f64)>> = crate::par::par_map(qt1_list, |&qt1| {
        large_near_cone(qt1, qt2, c, cfg).map(|r| (qt1, r.amplitude_at_star))
    });
    let mut points = Vec::with_capacity(results.len());
    for r in results {
        points.push(r?);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    Ok((crate::fit::loglog_fit(&xs, &ys)?, points))
}
