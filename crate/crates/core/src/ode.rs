//! Dormand–Prince 5(4) integrator for autonomous planar systems, with
//! adaptive steps and a boundary-crossing event.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step budget {0} exhausted before the event")]
    Budget(usize),
}

pub type State = [f64; 2];

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// One DOPRI5 step: `(y_{n+1}, error estimate vector)`.
pub fn step<F: Fn(&State) -> State>(f: &F, y: &State, h: f64) -> (State, State) {
    let k1 = f(y);
    let k2 = f(&axpy(y, &[(A21, &k1)], h));
    let k3 = f(&axpy(y, &[(A31, &k1), (A32, &k2)], h));
    let k4 = f(&axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
    let k5 = f(&axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
    let k6 = f(&axpy(y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
    let y1 = axpy(y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
    let k7 = f(&y1);
    let mut err = [0.0; 2];
    for i in 0..2 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y1, err)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Absolute accuracy of the event time.
    pub event_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-12, atol: 1e-14, max_steps: 2_000_000, event_tol: 1e-12 }
    }
}

/// Result of integrating until the event.
#[derive(Clone, Debug, PartialEq)]
pub struct EventRun {
    pub t_event: f64,
    pub y_event: State,
    pub steps: usize,
    /// Largest `|monitor(y) − monitor(y₀)|` over accepted steps.
    pub monitor_drift: f64,
}

/// Integrates `y′ = f(y)` from `y0` until `event(y)` changes from negative to
/// non-negative, then locates the crossing time by bisection on single steps
/// from the last accepted point. `monitor` is tracked for drift reporting;
/// `project`, when given, maps each accepted state back onto the invariant.
pub fn integrate_to_event<F, G, M>(
    f: &F,
    y0: State,
    event: &G,
    monitor: &M,
    project: Option<&dyn Fn(State) -> State>,
    tol: &Tolerances,
) -> Result<EventRun, OdeError>
where
    F: Fn(&State) -> State,
    G: Fn(&State) -> f64,
    M: Fn(&State) -> f64,
{
    let m0 = monitor(&y0);
    let mut drift = 0.0f64;
    let mut t = 0.0;
    let mut y = y0;
    let scale = f(&y0)[0].abs().max(f(&y0)[1].abs()).max(1e-300);
    let mut h = (1e-3 / scale).min(1e-2);
    let mut steps = 0usize;
    while steps < tol.max_steps {
        let (y1, err) = step(f, &y, h);
        let mut e = 0.0f64;
        for i in 0..2 {
            let sc = tol.atol + tol.rtol * y[i].abs().max(y1[i].abs());
            e = e.max((err[i] / sc).abs());
        }
        if e <= 1.0 {
            steps += 1;
            if event(&y1) >= 0.0 && event(&y) < 0.0 {
                // locate the crossing inside (t, t + h]
                let (mut lo, mut hi) = (0.0, h);
                while hi - lo > tol.event_tol {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if event(&step(f, &y, mid).0) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let s = 0.5 * (lo + hi);
                let ye = step(f, &y, s).0;
                drift = drift.max((monitor(&ye) - m0).abs());
                return Ok(EventRun { t_event: t + s, y_event: ye, steps, monitor_drift: drift });
            }
            t += h;
            y = match project {
                Some(p) => p(y1),
                None => y1,
            };
            drift = drift.max((monitor(&y) - m0).abs());
        }
        let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 * t.abs().max(1e-3) {
            return Err(OdeError::StepUnderflow { t });
        }
    }
    Err(OdeError::Budget(tol.max_steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_growth_event() {
        // x′ = x, y′ = −y from (0.01, 1): x reaches 1 at t = ln 100
        let f = |y: &State| [y[0], -y[1]];
        let run = integrate_to_event(
            &f,
            [0.01, 1.0],
            &|y: &State| y[0] - 1.0,
            &|y: &State| y[0] * y[1],
            None,
            &Tolerances::default(),
        )
        .unwrap();
        assert_relative_eq!(run.t_event, 100f64.ln(), max_relative = 1e-10);
        assert!(run.monitor_drift < 1e-12);
    }

    #[test]
    fn harmonic_oscillator_quarter_turn() {
        let f = |y: &State| [y[1], -y[0]];
        let run = integrate_to_event(
            &f,
            [1.0, 0.0],
            &|y: &State| -y[0],
            &|y: &State| y[0] * y[0] + y[1] * y[1],
            None,
            &Tolerances::default(),
        )
        .unwrap();
        assert_relative_eq!(run.t_event, std::f64::consts::FRAC_PI_2, max_relative = 1e-10);
    }
}
