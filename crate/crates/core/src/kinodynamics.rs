//! Affine skid-steer kinodynamic model.
//!
//! The robot is a unicycle whose commanded velocities are scaled by two
//! traction coefficients: `mu` scales the linear velocity and `nu` the
//! angular velocity.
//!
//! ```text
//! px' = mu * v * cos(theta)
//! py' = mu * v * sin(theta)
//! theta' = nu * omega
//! ```
//!
//! Simulator, estimator and controller all share this model.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to TAU for tiny negative inputs
    if wrapped >= PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

/// Planar robot pose.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State2D {
    pub px: f64,
    pub py: f64,
    pub theta: f64,
}

impl State2D {
    pub fn new(px: f64, py: f64, theta: f64) -> Self {
        Self {
            px,
            py,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.px, self.py)
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.px - x).hypot(self.py - y)
    }

    pub fn is_finite(&self) -> bool {
        self.px.is_finite() && self.py.is_finite() && self.theta.is_finite()
    }

    fn offset(&self, d: &StateDerivative, h: f64) -> State2D {
        // Intermediate RK4 stages are not wrapped; only the final state is.
        State2D {
            px: self.px + h * d.dpx,
            py: self.py + h * d.dpy,
            theta: self.theta + h * d.dtheta,
        }
    }
}

/// Time derivative of a [`State2D`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub dpx: f64,
    pub dpy: f64,
    pub dtheta: f64,
}

/// Commanded linear and angular velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub v: f64,
    pub omega: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

/// Actuator limits applied to every commanded control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlBounds {
    pub v_min: f64,
    pub v_max: f64,
    pub omega_max: f64,
}

impl Default for ControlBounds {
    fn default() -> Self {
        Self {
            v_min: 0.0,
            v_max: 1.0,
            omega_max: 1.0,
        }
    }
}

impl ControlBounds {
    pub fn clamp(&self, u: ControlInput) -> ControlInput {
        ControlInput {
            v: u.v.clamp(self.v_min, self.v_max),
            omega: u.omega.clamp(-self.omega_max, self.omega_max),
        }
    }

    pub fn contains(&self, u: &ControlInput) -> bool {
        u.v >= self.v_min && u.v <= self.v_max && u.omega.abs() <= self.omega_max
    }
}

/// Traversability coefficients, both kept inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TractionParams {
    mu: f64,
    nu: f64,
}

impl Default for TractionParams {
    fn default() -> Self {
        Self::FULL
    }
}

impl TractionParams {
    pub const FULL: TractionParams = TractionParams { mu: 1.0, nu: 1.0 };
    pub const STUCK: TractionParams = TractionParams { mu: 0.0, nu: 0.0 };

    /// Builds a parameter pair, clamping both coefficients to `[0, 1]`.
    /// NaN inputs are treated as zero traction.
    pub fn new(mu: f64, nu: f64) -> Self {
        Self {
            mu: clamp_unit(mu),
            nu: clamp_unit(nu),
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

pub(crate) fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Right-hand side of the affine kinodynamic model.
pub fn derivative(state: &State2D, u: &ControlInput, p: &TractionParams) -> StateDerivative {
    let speed = p.mu * u.v;
    StateDerivative {
        dpx: speed * state.theta.cos(),
        dpy: speed * state.theta.sin(),
        dtheta: p.nu * u.omega,
    }
}

/// One fixed-step RK4 step with traction held constant over the step.
pub fn integrate_step(state: &State2D, u: &ControlInput, p: &TractionParams, dt: f64) -> State2D {
    debug_assert!(dt > 0.0);
    let k1 = derivative(state, u, p);
    let k2 = derivative(&state.offset(&k1, 0.5 * dt), u, p);
    let k3 = derivative(&state.offset(&k2, 0.5 * dt), u, p);
    let k4 = derivative(&state.offset(&k3, dt), u, p);
    let w = dt / 6.0;
    State2D {
        px: state.px + w * (k1.dpx + 2.0 * k2.dpx + 2.0 * k3.dpx + k4.dpx),
        py: state.py + w * (k1.dpy + 2.0 * k2.dpy + 2.0 * k3.dpy + k4.dpy),
        theta: wrap_angle(state.theta + w * (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta)),
    }
}

/// Forward-simulates a control sequence. Traction is queried once per step at
/// the step's start state. The returned sequence excludes the start state and
/// has one entry per control.
pub fn rollout<F>(start: &State2D, controls: &[ControlInput], mut traction_source: F, dt: f64) -> Vec<State2D>
where
    F: FnMut(&State2D) -> TractionParams,
{
    let mut states = Vec::with_capacity(controls.len());
    let mut current = *start;
    for u in controls {
        let p = traction_source(&current);
        current = integrate_step(&current, u, &p, dt);
        states.push(current);
    }
    states
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &State2D, b: &State2D, tol: f64) -> bool {
        (a.px - b.px).abs() <= tol && (a.py - b.py).abs() <= tol && wrap_angle(a.theta - b.theta).abs() <= tol
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(wrap_angle(0.0), 0.0);
        let w = wrap_angle(-1e-18);
        assert!((-PI..PI).contains(&w));
    }

    #[test]
    fn derivative_examples() {
        let d = derivative(&State2D::new(0.0, 0.0, 0.0), &ControlInput::new(1.0, 0.0), &TractionParams::FULL);
        assert_eq!((d.dpx, d.dpy, d.dtheta), (1.0, 0.0, 0.0));

        let d = derivative(
            &State2D::new(0.0, 0.0, FRAC_PI_2),
            &ControlInput::new(1.0, 1.0),
            &TractionParams::new(0.0, 0.0),
        );
        assert_eq!((d.dpx.abs(), d.dpy, d.dtheta), (0.0, 0.0, 0.0));

        let d = derivative(
            &State2D::new(0.0, 0.0, FRAC_PI_2),
            &ControlInput::new(2.0, 0.0),
            &TractionParams::new(0.5, 1.0),
        );
        assert!(d.dpx.abs() < 1e-15);
        assert!((d.dpy - 1.0).abs() < 1e-15);
        assert_eq!(d.dtheta, 0.0);
    }

    #[test]
    fn traction_is_clamped() {
        let p = TractionParams::new(1.3, -0.2);
        assert_eq!((p.mu(), p.nu()), (1.0, 0.0));
        assert_eq!(TractionParams::new(f64::NAN, 0.5).mu(), 0.0);
    }

    #[test]
    fn straight_step_is_exact() {
        let s = integrate_step(
            &State2D::new(0.0, 0.0, 0.0),
            &ControlInput::new(1.0, 0.0),
            &TractionParams::FULL,
            0.1,
        );
        assert_eq!(s, State2D::new(0.1, 0.0, 0.0));
    }

    #[test]
    fn zero_input_is_a_fixed_point() {
        let start = State2D::new(1.5, -2.0, 0.7);
        let s = integrate_step(&start, &ControlInput::ZERO, &TractionParams::new(0.3, 0.8), 0.1);
        assert_eq!(s, start);
    }

    #[test]
    fn unit_circle_closes() {
        let dt = 0.01;
        let period = TAU;
        let full_steps = (period / dt).floor() as usize;
        let u = ControlInput::new(1.0, 1.0);
        let mut s = State2D::new(0.0, 0.0, 0.0);
        for _ in 0..full_steps {
            s = integrate_step(&s, &u, &TractionParams::FULL, dt);
        }
        s = integrate_step(&s, &u, &TractionParams::FULL, period - full_steps as f64 * dt);
        assert!(close(&s, &State2D::new(0.0, 0.0, 0.0), 1e-4), "{s:?}");
    }

    #[test]
    fn rollout_examples() {
        let controls = vec![ControlInput::new(1.0, 0.0); 10];
        let start = State2D::default();
        let states = rollout(&start, &controls, |_| TractionParams::FULL, 0.1);
        assert_eq!(states.len(), 10);
        for (k, s) in states.iter().enumerate() {
            assert!((s.px - 0.1 * (k + 1) as f64).abs() < 1e-12);
            assert_eq!((s.py, s.theta), (0.0, 0.0));
        }

        let frozen = rollout(&start, &controls, |_| TractionParams::STUCK, 0.1);
        assert!(frozen.iter().all(|s| *s == start));

        // 0.1 m/step while the step starts at x < 0.5, 0.05 m/step afterwards
        let piecewise = rollout(
            &start,
            &controls,
            |s| {
                if s.px < 0.5 {
                    TractionParams::FULL
                } else {
                    TractionParams::new(0.5, 1.0)
                }
            },
            0.1,
        );
        let mut expected = 0.0;
        for s in &piecewise {
            expected += if expected < 0.5 - 1e-12 { 0.1 } else { 0.05 };
            assert!((s.px - expected).abs() < 1e-12, "{} vs {}", s.px, expected);
        }
        assert!((piecewise[9].px - 0.75).abs() < 1e-12);
    }

    /// Closed-form unicycle arc under constant inputs.
    fn arc(s: &State2D, u: &ControlInput, p: &TractionParams, t: f64) -> State2D {
        let speed = p.mu() * u.v;
        let rate = p.nu() * u.omega;
        let th1 = s.theta + rate * t;
        if rate.abs() < 1e-12 {
            State2D::new(s.px + speed * t * s.theta.cos(), s.py + speed * t * s.theta.sin(), th1)
        } else {
            State2D::new(
                s.px + speed / rate * (th1.sin() - s.theta.sin()),
                s.py - speed / rate * (th1.cos() - s.theta.cos()),
                th1,
            )
        }
    }

    proptest! {
        #[test]
        fn rk4_matches_closed_form_arc(
            theta in -3.0f64..3.0, v in -1.0f64..1.0, w in -1.5f64..1.5,
            mu in 0.0f64..1.0, nu in 0.0f64..1.0,
        ) {
            let s = State2D::new(0.3, -0.2, theta);
            let u = ControlInput::new(v, w);
            let p = TractionParams::new(mu, nu);
            let a = integrate_step(&s, &u, &p, 0.1);
            let b = arc(&s, &u, &p, 0.1);
            // local truncation error is O((nu w dt)^5)
            prop_assert!(close(&a, &b, 1e-6));
        }

        #[test]
        fn straight_motion_scales_with_mu(theta in -3.0f64..3.0, c in 0.0f64..1.0, v in 0.0f64..1.0) {
            let s = State2D::new(1.0, 2.0, theta);
            let controls = vec![ControlInput::new(v, 0.0); 8];
            let scaled_mu = rollout(&s, &controls, |_| TractionParams::new(c, 1.0), 0.1);
            let scaled_v: Vec<_> = controls.iter().map(|u| ControlInput::new(u.v * c, 0.0)).collect();
            let scaled_cmd = rollout(&s, &scaled_v, |_| TractionParams::FULL, 0.1);
            prop_assert_eq!(scaled_mu, scaled_cmd);
        }

        #[test]
        fn heading_ignores_mu_and_position_ignores_nu(
            theta in -3.0f64..3.0, w in -1.0f64..1.0, mu1 in 0.0f64..1.0, mu2 in 0.0f64..1.0,
            nu1 in 0.0f64..1.0, nu2 in 0.0f64..1.0,
        ) {
            let s = State2D::new(0.0, 0.0, theta);
            let turning = ControlInput::new(0.7, w);
            let a = integrate_step(&s, &turning, &TractionParams::new(mu1, 0.5), 0.1);
            let b = integrate_step(&s, &turning, &TractionParams::new(mu2, 0.5), 0.1);
            prop_assert_eq!(a.theta, b.theta);
            let straight = ControlInput::new(0.7, 0.0);
            let c = integrate_step(&s, &straight, &TractionParams::new(0.4, nu1), 0.1);
            let d = integrate_step(&s, &straight, &TractionParams::new(0.4, nu2), 0.1);
            prop_assert_eq!((c.px, c.py), (d.px, d.py));
        }

        #[test]
        fn rk4_agrees_with_substepped_rk4(theta in -3.0f64..3.0, v in 0.0f64..1.0, w in -1.0f64..1.0) {
            // smooth, grid-free traction field
            let field = |s: &State2D| TractionParams::new(0.6 + 0.3 * (0.5 * s.px).sin(), 0.8);
            let s = State2D::new(0.2, 0.1, theta);
            let u = ControlInput::new(v, w);
            let coarse = integrate_step(&s, &u, &field(&s), 0.01);
            let p = field(&s);
            let mut fine = s;
            for _ in 0..10 {
                fine = integrate_step(&fine, &u, &p, 0.001);
            }
            prop_assert!(close(&coarse, &fine, 1e-8));
        }
    }
}
