//! Independent adaptive ODE integrator (Dormand-Prince 5(4) with dense
//! output). Every fixed-point construction in this crate is cross-checked
//! against integrations performed here; the integrator never sees the Green
//! kernels or the collocation machinery.

use crate::basis::Sign;
use crate::error::{Error, Result};

/// Point state of the profile ODE as a first-order system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeState {
    pub a: f64,
    pub q: f64,
    pub dq: f64,
}

#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    cont: [[f64; 2]; 5],
}

impl Segment {
    fn eval(&self, t: f64) -> [f64; 2] {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        let mut out = [0.0; 2];
        for i in 0..2 {
            let c = &self.cont;
            out[i] = c[0][i]
                + theta * (c[1][i] + th1 * (c[2][i] + theta * (c[3][i] + th1 * c[4][i])));
        }
        out
    }
}

/// Dense output of one adaptive integration.
#[derive(Debug, Clone)]
pub struct DenseOutput {
    segments: Vec<Segment>,
    t_start: f64,
    t_end: f64,
}

impl DenseOutput {
    /// Interpolated state at `t`, which must lie inside the integration span.
    pub fn eval(&self, t: f64) -> Option<[f64; 2]> {
        let (lo, hi) = if self.t_start <= self.t_end {
            (self.t_start, self.t_end)
        } else {
            (self.t_end, self.t_start)
        };
        if t < lo - 1e-12 || t > hi + 1e-12 {
            return None;
        }
        let fwd = self.t_end >= self.t_start;
        let idx = self
            .segments
            .partition_point(|s| {
                if fwd {
                    s.t0 + s.h < t
                } else {
                    s.t0 + s.h > t
                }
            })
            .min(self.segments.len() - 1);
        Some(self.segments[idx].eval(t))
    }

    pub fn span(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }
}

/// Dormand-Prince coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Returns Some(error) when the integration may not visit `t`.
    pub guard: Option<Box<dyn Fn(f64) -> Option<Error>>>,
    /// Called after each accepted step with (t, y); used for traces.
    pub observer: Option<Box<dyn FnMut(f64, [f64; 2])>>,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            rtol: 1e-11,
            atol: 1e-13,
            max_steps: 2_000_000,
            guard: None,
            observer: None,
        }
    }
}

/// Integrates y' = f(t, y) from t0 to t_end, returning the final state and
/// dense output over the whole span.
pub fn integrate_adaptive<F>(
    f: F,
    t0: f64,
    y0: [f64; 2],
    t_end: f64,
    mut opts: AdaptiveOptions,
) -> Result<([f64; 2], DenseOutput)>
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, y);
    let span = (t_end - t0).abs();
    let mut h = dir * (span / 100.0).min(1e-2).max(1e-10);
    let mut segments = Vec::new();
    let h_floor = 1e-14 * t0.abs().max(t_end.abs()).max(1.0);

    for _step in 0..opts.max_steps {
        if (t - t_end).abs() <= 1e-15 * span.max(1.0) || (t_end - t) * dir <= 0.0 {
            break;
        }
        if (t_end - t) * dir < h * dir {
            h = t_end - t;
        }
        if let Some(g) = &opts.guard {
            if let Some(err) = g(t + h) {
                return Err(err);
            }
        }
        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        for s in 0..6 {
            let mut ys = y;
            for j in 0..=s {
                for i in 0..2 {
                    ys[i] += h * A[s][j] * k[j][i];
                }
            }
            k[s + 1] = f(t + C[s] * h, ys);
        }
        // 5th-order solution is stage 7's argument (FSAL)
        let mut y1 = y;
        for j in 0..6 {
            for i in 0..2 {
                y1[i] += h * A[5][j] * k[j][i];
            }
        }
        let k7 = k[6];
        let mut err_norm = 0.0f64;
        for i in 0..2 {
            let mut e = 0.0;
            for j in 0..7 {
                e += E[j] * k[j][i];
            }
            e *= h;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err_norm += (e / sc) * (e / sc);
        }
        err_norm = (err_norm / 2.0).sqrt();

        if err_norm <= 1.0 {
            // dense output coefficients for this step
            let ydiff = [y1[0] - y[0], y1[1] - y[1]];
            let mut cont = [[0.0; 2]; 5];
            for i in 0..2 {
                let bspl = h * k[0][i] - ydiff[i];
                cont[0][i] = y[i];
                cont[1][i] = ydiff[i];
                cont[2][i] = bspl;
                cont[3][i] = ydiff[i] - h * k7[i] - bspl;
                let mut d = 0.0;
                for j in 0..7 {
                    d += D[j] * k[j][i];
                }
                cont[4][i] = h * d;
            }
            segments.push(Segment { t0: t, h, cont });
            t += h;
            y = y1;
            k1 = k7;
            if let Some(obs) = &mut opts.observer {
                obs(t, y);
            }
        }
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < h_floor {
            return Err(Error::SingularApproach { a: t });
        }
    }

    if (t - t_end).abs() > 1e-9 * span.max(1.0) {
        return Err(Error::SingularApproach { a: t });
    }
    Ok((
        y,
        DenseOutput {
            segments,
            t_start: t0,
            t_end,
        },
    ))
}

/// Right-hand side of the profile ODE as a first-order system in a.
pub fn profile_rhs(sign: Sign) -> impl Fn(f64, [f64; 2]) -> [f64; 2] {
    let sigma = sign.coefficient();
    move |a, y| {
        let denom = (a - 1.0) * (a + 1.0);
        let ddq = -((8.0 * a / 3.0 - 2.0 / a) * y[1] + 4.0 / 9.0 * y[0] + sigma * y[0].powi(7))
            / denom;
        [y[1], ddq]
    }
}

/// Adaptive high-order integration of the profile ODE. The path must keep
/// the configured standoff from the regular-singular points a ∈ {0, 1}.
pub fn oracle_integrate(
    start: OdeState,
    a_end: f64,
    sign: Sign,
    tol: f64,
    standoff: f64,
) -> Result<(OdeState, DenseOutput)> {
    let lo = start.a.min(a_end);
    let hi = start.a.max(a_end);
    for sing in [0.0, 1.0] {
        if lo - standoff < sing && sing < hi + standoff {
            // the path would pass within the standoff of a singular point
            let offending = if (lo - sing).abs() < (hi - sing).abs() {
                lo
            } else {
                hi
            };
            if !(lo > sing + standoff * (1.0 - 1e-12) || hi < sing - standoff * (1.0 - 1e-12)) {
                return Err(Error::SingularApproach { a: offending });
            }
        }
    }
    let opts = AdaptiveOptions {
        rtol: tol,
        atol: tol * 1e-2,
        guard: Some(Box::new(move |a: f64| {
            if (a - 1.0).abs() < standoff * 0.5 || a.abs() < standoff * 0.5 {
                Some(Error::SingularApproach { a })
            } else {
                None
            }
        })),
        ..Default::default()
    };
    let (y, dense) = integrate_adaptive(profile_rhs(sign), start.a, [start.q, start.dq], a_end, opts)?;
    Ok((
        OdeState {
            a: a_end,
            q: y[0],
            dq: y[1],
        },
        dense,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_harmonic_oscillator() {
        let f = |_t: f64, y: [f64; 2]| [y[1], -y[0]];
        let (y, dense) = integrate_adaptive(f, 0.0, [1.0, 0.0], 10.0, Default::default()).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-9);
        assert!((y[1] + 10f64.sin()).abs() < 1e-9);
        let mid = dense.eval(3.3).unwrap();
        assert!((mid[0] - 3.3f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn zero_profile_stays_zero() {
        let start = OdeState {
            a: 0.01,
            q: 0.0,
            dq: 0.0,
        };
        let (end, _) = oracle_integrate(start, 0.45, Sign::Defocusing, 1e-12, 1e-3).unwrap();
        assert_eq!(end.q, 0.0);
        assert_eq!(end.dq, 0.0);
    }

    #[test]
    fn round_trip_recovers_initial_state() {
        let tol = 1e-11;
        let start = OdeState {
            a: 0.1,
            q: 0.05,
            dq: 0.01,
        };
        let (fwd, _) = oracle_integrate(start, 0.45, Sign::Defocusing, tol, 1e-3).unwrap();
        let (back, _) = oracle_integrate(fwd, 0.1, Sign::Defocusing, tol, 1e-3).unwrap();
        assert!((back.q - start.q).abs() < 10.0 * tol);
        assert!((back.dq - start.dq).abs() < 10.0 * tol);
    }

    #[test]
    fn singular_approach_rejected() {
        let start = OdeState {
            a: 0.5,
            q: 0.01,
            dq: 0.0,
        };
        let err = oracle_integrate(start, 0.9999, Sign::Defocusing, 1e-10, 1e-3).unwrap_err();
        match err {
            Error::SingularApproach { .. } => {}
            other => panic!("expected singular approach, got {other}"),
        }
    }

    #[test]
    fn backward_integration_and_dense_output() {
        let f = |t: f64, y: [f64; 2]| [y[1], -2.0 * t * y[1] - y[0] * 0.0];
        // trivial system: y0' = y1, y1' = -2t y1 => y1 = c exp(-t^2)
        let (y, dense) = integrate_adaptive(f, 2.0, [0.0, (-4.0f64).exp()], 0.0, Default::default())
            .unwrap();
        assert!((y[1] - 1.0).abs() < 1e-9);
        let mid = dense.eval(1.0).unwrap();
        assert!((mid[1] - (-1.0f64).exp()).abs() < 1e-8);
    }
}
