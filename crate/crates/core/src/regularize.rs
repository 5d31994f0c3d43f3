//! Light-cone regularization: the smooth cutoff χ(t−r), the approximate
//! solution u(t,r) = t^{-1/3} χ(t−r) |1−a|^{2/3} X(a) + t^{-1/3} Q₂(1), its
//! error fields e₁, e₂, e₃, and the decay diagnostics for them.
//!
//! With the profile in its global representation
//! Q = z^{2/3}Q₁ + Q₂ + z^{β}Q₃ (z = |1−a|), the singular content is
//!     z^{2/3} X(a) = z^{2/3}Q₁ + z^{β}Q₃ + (Q₂(a) − Q₂(1)),
//! which is what the cutoff multiplies. Everything here evaluates that
//! product directly; the individually singular factors never appear alone.

use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::profile::GlobalProfile;
use crate::quad::GaussRule;
use serde::Serialize;

/// Smooth cutoff: χ(v) = 0 for |v| ≤ C, 1 for |v| ≥ 2C, a C^∞ smoothstep in
/// between, built from n(x) = exp(−1/x).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CutoffSpec {
    pub c: f64,
}

impl CutoffSpec {
    pub fn new(c: f64) -> Result<Self> {
        if c > 0.0 && c.is_finite() {
            Ok(CutoffSpec { c })
        } else {
            Err(Error::Config(format!("cutoff width must be positive: {c}")))
        }
    }

    /// χ and its first two derivatives in v.
    pub fn chi(&self, v: f64, deriv_order: u8) -> f64 {
        assert!(deriv_order <= 2, "only derivatives up to order 2");
        let x = (v.abs() - self.c) / self.c;
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return if deriv_order == 0 { 1.0 } else { 0.0 };
        }
        let (s, s1, s2) = smoothstep(x);
        match deriv_order {
            0 => s,
            1 => s1 * v.signum() / self.c,
            _ => s2 / (self.c * self.c),
        }
    }
}

/// C^∞ partition step S(x) = n(x)/(n(x)+n(1−x)) with n(x) = e^{-1/x};
/// returns (S, S', S'') on (0, 1).
fn smoothstep(x: f64) -> (f64, f64, f64) {
    let n = |y: f64| (-1.0 / y).exp();
    let n1 = |y: f64| (-1.0 / y).exp() / (y * y);
    let n2 = |y: f64| (-1.0 / y).exp() * (1.0 - 2.0 * y) / (y * y * y * y);
    let u = n(x);
    let v = n(1.0 - x);
    let du = n1(x);
    let dv = -n1(1.0 - x);
    let ddu = n2(x);
    let ddv = n2(1.0 - x);
    let d = u + v;
    let s = u / d;
    let s1 = (du * v - u * dv) / (d * d);
    let s2 = ((ddu * v - u * ddv) * d - 2.0 * (du * v - u * dv) * (du + dv)) / (d * d * d);
    (s, s1, s2)
}

/// Values of the three error fields at a point, with the two seventh-power
/// arguments of e₂.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorValues {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub u1: f64,
    pub u2: f64,
}

impl ErrorValues {
    pub fn total(&self) -> f64 {
        self.e1 + self.e2 + self.e3
    }
}

/// Evaluator for the cutoff-regularized approximate solution and its error
/// fields.
#[derive(Debug, Clone)]
pub struct ApproxSolutionField {
    pub profile: GlobalProfile,
    pub cutoff: CutoffSpec,
    q2_cone: f64,
}

/// Builds the field; requires the profile to extend beyond a = 2 so the
/// representation with Q₁ = Q₃ = 0 for a ≥ 2 is available.
pub fn build_approx(profile: GlobalProfile, cutoff: CutoffSpec) -> Result<ApproxSolutionField> {
    let (_, hi) = profile.domain();
    if hi < 2.0 {
        return Err(Error::Assembly(
            "profile missing the a >= 2 piece required by the regularization".into(),
        ));
    }
    if profile.params.q2.or(profile.params.qt2).is_none() {
        return Err(Error::Assembly("profile carries no cone trace q2".into()));
    }
    let q2_cone = profile.cone_value();
    Ok(ApproxSolutionField {
        profile,
        cutoff,
        q2_cone,
    })
}

impl ApproxSolutionField {
    pub fn q2_cone(&self) -> f64 {
        self.q2_cone
    }

    /// The bounded product z^{2/3} X(a) = z^{2/3}Q₁ + z^{β}Q₃ + (Q₂ − Q₂(1)).
    pub fn singular_part(&self, a: f64) -> Result<f64> {
        let c = self.profile.components_at(a)?;
        let z = (1.0 - a).abs();
        Ok(z.powf(2.0 / 3.0) * c.q1 + z.powf(c.expo3) * c.q3 + (c.q2 - self.q2_cone))
    }

    /// d/da of the singular part; carries z^{-1/3} blow-up at the cone and
    /// is only used where the cutoff is nonzero.
    fn singular_part_deriv(&self, a: f64) -> Result<f64> {
        let c = self.profile.components_at(a)?;
        let z = (1.0 - a).abs();
        let s = (1.0 - a).signum();
        Ok(z.powf(2.0 / 3.0) * c.dq1 - 2.0 / 3.0 * s * z.powf(-1.0 / 3.0) * c.q1
            + z.powf(c.expo3) * c.dq3
            - c.expo3 * s * z.powf(c.expo3 - 1.0) * c.q3
            + c.dq2)
    }

    /// The bounded combination z^{2/3} X'(a)
    ///   = z^{2/3}Q₁' + z^{β}Q₃' − (β − 2/3) s z^{β−1} Q₃ + Q₂'
    ///     + (2/3) s (Q₂ − Q₂(1))/z,
    /// finite across the cone (the last term tends to −(2/3)Q₂'(1)).
    pub fn z23_xprime(&self, a: f64) -> Result<f64> {
        let c = self.profile.components_at(a)?;
        let z = (1.0 - a).abs();
        let s = (1.0 - a).signum();
        let ratio = if z < 1e-9 {
            -2.0 / 3.0 * c.dq2
        } else {
            2.0 / 3.0 * s * (c.q2 - self.q2_cone) / z
        };
        Ok(z.powf(2.0 / 3.0) * c.dq1 + z.powf(c.expo3) * c.dq3
            - (c.expo3 - 2.0 / 3.0) * s * z.powf(c.expo3 - 1.0) * c.q3
            + c.dq2
            + ratio)
    }

    /// u(t, r). Exactly t^{-1/3}Q(r/t) off the strip |t−r| ≥ 2C and exactly
    /// t^{-1/3}Q₂(1) on |t−r| ≤ C.
    pub fn u(&self, t: f64, r: f64) -> Result<f64> {
        let chi = self.cutoff.chi(t - r, 0);
        let base = t.powf(-1.0 / 3.0);
        if chi == 0.0 {
            return Ok(base * self.q2_cone);
        }
        let a = r / t;
        Ok(base * (chi * self.singular_part(a)? + self.q2_cone))
    }

    /// ∂u/∂t.
    pub fn u_t(&self, t: f64, r: f64) -> Result<f64> {
        let v = t - r;
        let chi = self.cutoff.chi(v, 0);
        let dchi = self.cutoff.chi(v, 1);
        let tm13 = t.powf(-1.0 / 3.0);
        let tm43 = t.powf(-4.0 / 3.0);
        if chi == 0.0 && dchi == 0.0 {
            return Ok(-tm43 / 3.0 * self.q2_cone);
        }
        let a = r / t;
        let s = self.singular_part(a)?;
        let ds = self.singular_part_deriv(a)?;
        Ok(-tm43 / 3.0 * (chi * s + self.q2_cone) + tm13 * (dchi * s - chi * ds * a / t))
    }

    /// ∂u/∂r.
    pub fn u_r(&self, t: f64, r: f64) -> Result<f64> {
        let v = t - r;
        let chi = self.cutoff.chi(v, 0);
        let dchi = self.cutoff.chi(v, 1);
        if chi == 0.0 && dchi == 0.0 {
            return Ok(0.0);
        }
        let a = r / t;
        let tm13 = t.powf(-1.0 / 3.0);
        Ok(tm13 * (-dchi * self.singular_part(a)? + chi * self.singular_part_deriv(a)? / t))
    }

    /// The three error fields of −u_tt + Δu − σu⁷ = e₁ + e₂ + e₃.
    pub fn error_fields(&self, t: f64, r: f64) -> Result<ErrorValues> {
        if r <= 0.0 || t < 1.0 {
            return Err(Error::Domain {
                context: "error fields need r > 0, t >= 1",
                a: if r <= 0.0 { r } else { t },
            });
        }
        let sigma = self.profile.sign.coefficient();
        let v = t - r;
        let chi = self.cutoff.chi(v, 0);
        let dchi = self.cutoff.chi(v, 1);
        let tm13 = t.powf(-1.0 / 3.0);
        let tm73 = t.powf(-7.0 / 3.0);

        // e₁ = (1 − χ)(−∂ₜ²)(t^{-1/3} Q₂(1))
        let e1 = -(1.0 - chi) * 4.0 / 9.0 * tm73 * self.q2_cone;

        // e₂ = σ(χ u₀⁷ − u⁷), supported where χ < 1
        let (e2, u1, u2) = if chi == 1.0 {
            let u0 = tm13 * (self.singular_part(r / t)? + self.q2_cone);
            (0.0, u0, u0)
        } else {
            let s = self.singular_part(r / t)?;
            let u0 = tm13 * (s + self.q2_cone);
            let u = tm13 * (chi * s + self.q2_cone);
            let u1 = chi.powf(1.0 / 7.0) * u0;
            (sigma * (chi * u0.powi(7) - u.powi(7)), u1, u)
        };

        // e₃: all terms with a derivative on χ. The no-derivative-on-X part
        // collapses to −2(t−r)|t−r|^{2/3}χ' X(a)/(rt²); written with
        // X = z^{-2/3}·(singular part) and z^{-2/3}|t−r|^{2/3} = t^{2/3} it
        // needs no singular factors.
        let e3 = if dchi == 0.0 {
            0.0
        } else {
            let a = r / t;
            let s = self.singular_part(a)?;
            let zx = self.z23_xprime(a)?;
            let no_deriv = -2.0 * v * t.powf(2.0 / 3.0) * dchi * s / (r * t * t);
            let one_deriv = 2.0 * tm73 * zx * (r - t) * dchi;
            no_deriv + one_deriv
        };
        Ok(ErrorValues { e1, e2, e3, u1, u2 })
    }
}

/// Both sides of the e₃ simplification for the scalar factor
/// t^{-1/3}|1−a|^{2/3}χ(t−r): the four-term sum in which at least one
/// derivative falls on χ, and the closed form −2(t−r)|t−r|^{2/3}χ'/(rt²).
pub fn e3_identity(t: f64, r: f64, cutoff: &CutoffSpec) -> (f64, f64) {
    let v = t - r;
    let dchi = cutoff.chi(v, 1);
    if dchi == 0.0 {
        return (0.0, 0.0);
    }
    let a = r / t;
    let z = (1.0 - a).abs();
    let s = (1.0 - a).signum();
    let tm13 = t.powf(-1.0 / 3.0);
    let term1 = 2.0 / 3.0 * t.powf(-4.0 / 3.0) * z.powf(2.0 / 3.0) * dchi;
    let term2 = -4.0 / 3.0 * (r / (t * t)) * s * z.powf(-1.0 / 3.0) * dchi * tm13;
    let term3 = 4.0 / 3.0 * (1.0 / t) * s * z.powf(-1.0 / 3.0) * dchi * tm13;
    let term4 = -2.0 / r * tm13 * z.powf(2.0 / 3.0) * dchi;
    let lhs = term1 + term2 + term3 + term4;
    let rhs = -2.0 * v * v.abs().powf(2.0 / 3.0) * dchi / (r * t * t);
    (lhs, rhs)
}

/// Finite-difference residual −u_tt + u_rr + (2/r)u_r − σu⁷ of the field,
/// with 4th-order central stencils of width h. Independent oracle for the
/// error-field assembly.
pub fn pde_residual_fd(field: &ApproxSolutionField, t: f64, r: f64, h: f64) -> Result<f64> {
    let sigma = field.profile.sign.coefficient();
    let d2 = |f: &dyn Fn(f64) -> Result<f64>, x: f64| -> Result<f64> {
        Ok(
            (-f(x - 2.0 * h)? + 16.0 * f(x - h)? - 30.0 * f(x)? + 16.0 * f(x + h)?
                - f(x + 2.0 * h)?)
                / (12.0 * h * h),
        )
    };
    let d1 = |f: &dyn Fn(f64) -> Result<f64>, x: f64| -> Result<f64> {
        Ok((f(x - 2.0 * h)? - 8.0 * f(x - h)? + 8.0 * f(x + h)? - f(x + 2.0 * h)?) / (12.0 * h))
    };
    let u_of_t = |tt: f64| field.u(tt, r);
    let u_of_r = |rr: f64| field.u(t, rr);
    let utt = d2(&u_of_t, t)?;
    let urr = d2(&u_of_r, r)?;
    let ur = d1(&u_of_r, r)?;
    let u = field.u(t, r)?;
    Ok(-utt + urr + 2.0 / r * ur - sigma * u.powi(7))
}

/// Radial L²(ℝ³) norm of a field slice supported on the strip |t−r| ≤ 2C:
/// (∫ 4πr² f(r)² dr)^{1/2} with Gauss panels aligned to the cutoff
/// transition breakpoints.
pub fn strip_l2_norm<F: Fn(f64) -> f64>(t: f64, c: f64, f: F) -> f64 {
    let rule = GaussRule::new(32);
    let breaks = [
        (t - 2.0 * c).max(1e-6),
        (t - c).max(1e-6),
        t,
        t + c,
        t + 2.0 * c,
    ];
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            acc += rule.integrate(w[0], w[1], |r| {
                let v = f(r);
                4.0 * std::f64::consts::PI * r * r * v * v
            });
        }
    }
    acc.sqrt()
}

/// Largest |e₁| + |e₂| + |e₃| over a dense sample of the strip.
pub fn strip_max_error(field: &ApproxSolutionField, t: f64, samples: usize) -> Result<f64> {
    let c = field.cutoff.c;
    let mut worst = 0.0f64;
    for i in 0..=samples {
        let r = (t - 2.0 * c) + 4.0 * c * i as f64 / samples as f64;
        if r <= 0.0 {
            continue;
        }
        let e = field.error_fields(t, r)?;
        worst = worst.max(e.e1.abs() + e.e2.abs() + e.e3.abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub t_list: Vec<f64>,
    /// L²ₓ norms of (e₁, e₂, e₃) per time.
    pub l2_norms: Vec<[f64; 3]>,
    /// Fitted decay exponent of each ‖e_j(t)‖_{L²ₓ}.
    pub l2_fits: [FitResult; 3],
    /// Whether the fitted exponent implies t-integrability (slope < −1).
    pub l1t_integrable: [bool; 3],
    /// Sup of |e₁|+|e₂|+|e₃| over the strip per time, and its fit.
    pub max_strip: Vec<f64>,
    pub max_fit: FitResult,
}

/// Norms and fitted decay exponents of the error fields over a list of
/// times spanning at least 1.5 decades.
pub fn error_decay_report(field: &ApproxSolutionField, t_list: &[f64]) -> Result<DecayReport> {
    if t_list.len() < 4 {
        return Err(Error::Fit("need at least 4 times".into()));
    }
    let span = t_list.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        / t_list.iter().cloned().fold(f64::INFINITY, f64::min);
    if span < 10f64.powf(1.5) {
        return Err(Error::Fit(format!(
            "time window must span 1.5 decades, got ratio {span:.3e}"
        )));
    }
    let c = field.cutoff.c;
    let rows: Vec<Result<([f64; 3], f64)>> = crate::par::par_map(t_list, |&t| {
        let norms = [
            strip_l2_norm(t, c, |r| {
                field.error_fields(t, r).map(|e| e.e1).unwrap_or(0.0)
            }),
            strip_l2_norm(t, c, |r| {
                field.error_fields(t, r).map(|e| e.e2).unwrap_or(0.0)
            }),
            strip_l2_norm(t, c, |r| {
                field.error_fields(t, r).map(|e| e.e3).unwrap_or(0.0)
            }),
        ];
        let max = strip_max_error(field, t, 400)?;
        Ok((norms, max))
    });
    let mut l2_norms = Vec::with_capacity(t_list.len());
    let mut max_strip = Vec::with_capacity(t_list.len());
    for r in rows {
        let (n, m) = r?;
        l2_norms.push(n);
        max_strip.push(m);
    }
    let fit_j = |j: usize| -> Result<FitResult> {
        let ys: Vec<f64> = l2_norms.iter().map(|n| n[j]).collect();
        crate::fit::loglog_fit(t_list, &ys)
    };
    let l2_fits = [fit_j(0)?, fit_j(1)?, fit_j(2)?];
    let l1t_integrable = [
        l2_fits[0].slope < -1.0,
        l2_fits[1].slope < -1.0,
        l2_fits[2].slope < -1.0,
    ];
    let max_fit = crate::fit::loglog_fit(t_list, &max_strip)?;
    Ok(DecayReport {
        t_list: t_list.to_vec(),
        l2_norms,
        l2_fits,
        l1t_integrable,
        max_strip,
        max_fit,
    })
}

/// Discrete ‖u‖_{L^p_t L^q_x} of the field over [t_lo, t_hi], by Gauss
/// quadrature in t and radial log-panel quadrature in x up to r = r_factor·t
/// (the r^{2−q/3} tail integrand beyond is negligible for q ≥ 18).
pub fn field_space_time_norm(
    field: &ApproxSolutionField,
    p: f64,
    q: f64,
    t_lo: f64,
    t_hi: f64,
    r_factor: f64,
) -> Result<f64> {
    let t_rule = GaussRule::new(16);
    let r_rule = GaussRule::new(24);
    let mut acc = 0.0;
    for (t, wt) in t_rule.mapped(t_lo, t_hi) {
        let c = field.cutoff.c;
        let mut breaks = vec![
            1e-9,
            (t - 2.0 * c).max(1e-6),
            (t - c).max(2e-6),
            t,
            t + c,
            t + 2.0 * c,
        ];
        let mut r = t + 2.0 * c;
        while r < r_factor * t {
            r *= 2.0;
            breaks.push(r.min(r_factor * t));
        }
        breaks.dedup_by(|a, b| *a <= *b + 1e-12);
        let mut lq = 0.0;
        for w in breaks.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            lq += r_rule.integrate(w[0], w[1], |rr| {
                let u = field.u(t, rr).unwrap_or(0.0);
                4.0 * std::f64::consts::PI * rr * rr * u.abs().powf(q)
            });
        }
        acc += wt * lq.powf(p / q);
    }
    Ok(acc.powf(1.0 / p))
}
