//! Nonlinear moving-horizon estimation of pose, traction coefficients and
//! compass offset.
//!
//! The dynamics equality constraint is eliminated by single shooting, leaving
//! six decision variables: the pose at the start of the window, `mu`, `nu`
//! and the compass offset `delta_theta`. The weighted least-squares problem is
//! solved by Levenberg-Marquardt with box projection of `mu`, `nu` and angle
//! wrapping. Jacobians come from forward sensitivity propagation through the
//! RK4 step.

use super::window::MeasurementWindow;
use super::EstimationError;
use crate::kinodynamics::{wrap_angle, ControlInput, State2D};
use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, SMatrix, Vector3, Vector6};

const IDX_MU: usize = 3;
const IDX_NU: usize = 4;
const N_DECISION: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct NmheConfig {
    pub horizon: usize,
    /// Arrival-cost weight on the window's first pose.
    pub p_x: Matrix3<f64>,
    /// Arrival-cost weight on `(mu, nu, delta_theta)`.
    pub p_p: Matrix3<f64>,
    /// Measurement weight on `(x, y, heading)` residuals.
    pub p_w: Matrix3<f64>,
    pub max_iters: usize,
    pub convergence_tol: f64,
    /// Below this mean |omega| the window does not excite `nu`.
    pub excitation_threshold: f64,
    /// Multiplier on the `nu` arrival weight for poorly excited windows.
    pub low_excitation_nu_scale: f64,
}

impl Default for NmheConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            p_x: Matrix3::identity(),
            p_p: Matrix3::from_diagonal(&Vector3::new(10.0, 10.0, 10.0)),
            p_w: Matrix3::from_diagonal(&Vector3::new(100.0, 100.0, 10.0)),
            max_iters: 50,
            convergence_tol: 1e-9,
            excitation_threshold: 0.05,
            low_excitation_nu_scale: 100.0,
        }
    }
}

impl NmheConfig {
    /// Arrival weights scaled down to `weight * I`, leaving measurement weights alone.
    pub fn with_arrival_weight(mut self, weight: f64) -> Self {
        self.p_x = Matrix3::identity() * weight;
        self.p_p = Matrix3::identity() * weight;
        self
    }
}

/// Slowly varying model parameters estimated over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmheParams {
    pub mu: f64,
    pub nu: f64,
    pub delta_theta: f64,
}

impl Default for NmheParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            nu: 1.0,
            delta_theta: 0.0,
        }
    }
}

/// Arrival-cost anchors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NmhePriors {
    pub state: State2D,
    pub params: NmheParams,
}

/// A point in decision space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub state: State2D,
    pub params: NmheParams,
}

impl Decision {
    fn to_vector(self) -> Vector6<f64> {
        Vector6::new(
            self.state.px,
            self.state.py,
            self.state.theta,
            self.params.mu,
            self.params.nu,
            self.params.delta_theta,
        )
    }

    fn from_vector(z: &Vector6<f64>) -> Self {
        Self {
            state: State2D {
                px: z[0],
                py: z[1],
                theta: z[2],
            },
            params: NmheParams {
                mu: z[3],
                nu: z[4],
                delta_theta: z[5],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmheSolution {
    /// Reconstructed poses at every sample of the window, oldest first.
    pub states: Vec<State2D>,
    pub mu: f64,
    pub nu: f64,
    pub delta_theta: f64,
    pub final_cost: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl NmheSolution {
    pub fn params(&self) -> NmheParams {
        NmheParams {
            mu: self.mu,
            nu: self.nu,
            delta_theta: self.delta_theta,
        }
    }

    /// Pose at the newest sample of the window.
    pub fn latest_state(&self) -> State2D {
        *self.states.last().expect("solution has states")
    }
}

/// Upper-triangular factor `U` with `U^T U = P`, so `|U r|^2 = r^T P r`.
fn weight_root(p: &Matrix3<f64>, name: &str) -> Result<Matrix3<f64>, EstimationError> {
    let sym = (p + p.transpose()) * 0.5;
    sym.cholesky()
        .map(|c| c.l().transpose())
        .ok_or_else(|| EstimationError::InvalidConfig(format!("{name} is not positive definite")))
}

/// Moving-horizon estimator with precomputed weight factors.
#[derive(Debug, Clone)]
pub struct Nmhe {
    config: NmheConfig,
    root_x: Matrix3<f64>,
    root_p: Matrix3<f64>,
    root_p_low: Matrix3<f64>,
    root_w: Matrix3<f64>,
}

type Sens = SMatrix<f64, 3, 5>;

struct Evaluation {
    residuals: DVector<f64>,
    jacobian: Option<DMatrix<f64>>,
    states: Vec<State2D>,
}

impl Nmhe {
    pub fn new(config: NmheConfig) -> Result<Self, EstimationError> {
        if config.horizon < 4 {
            return Err(EstimationError::InvalidConfig(format!(
                "horizon must be at least 4, got {}",
                config.horizon
            )));
        }
        let root_x = weight_root(&config.p_x, "P_x")?;
        let root_p = weight_root(&config.p_p, "P_p")?;
        let root_w = weight_root(&config.p_w, "P_w")?;
        let s = config.low_excitation_nu_scale.sqrt();
        let scale = Matrix3::from_diagonal(&Vector3::new(1.0, s, 1.0));
        let root_p_low = weight_root(&(scale * config.p_p * scale), "P_p")?;
        Ok(Self {
            config,
            root_x,
            root_p,
            root_p_low,
            root_w,
        })
    }

    pub fn config(&self) -> &NmheConfig {
        &self.config
    }

    /// Residual length for a full window: measurements plus both arrival terms.
    pub fn residual_len(&self) -> usize {
        3 * (self.config.horizon + 1) + 6
    }

    fn check_window(&self, window: &MeasurementWindow) -> Result<(), EstimationError> {
        if !window.is_full() || window.horizon() != self.config.horizon {
            return Err(EstimationError::WindowNotFull {
                have: window.len(),
                need: self.config.horizon + 1,
            });
        }
        Ok(())
    }

    fn param_root(&self, window: &MeasurementWindow) -> &Matrix3<f64> {
        if window.mean_abs_omega() < self.config.excitation_threshold {
            &self.root_p_low
        } else {
            &self.root_p
        }
    }

    /// Stacked weighted residuals at a decision point.
    pub fn residuals(
        &self,
        decision: &Decision,
        window: &MeasurementWindow,
        priors: &NmhePriors,
    ) -> Result<DVector<f64>, EstimationError> {
        self.check_window(window)?;
        Ok(self.evaluate(&decision.to_vector(), window, priors, false).residuals)
    }

    /// Analytic Jacobian of [`Nmhe::residuals`] with respect to
    /// `(px, py, theta, mu, nu, delta_theta)`.
    pub fn jacobian(
        &self,
        decision: &Decision,
        window: &MeasurementWindow,
        priors: &NmhePriors,
    ) -> Result<DMatrix<f64>, EstimationError> {
        self.check_window(window)?;
        Ok(self
            .evaluate(&decision.to_vector(), window, priors, true)
            .jacobian
            .expect("requested"))
    }

    /// Forward-simulates the window from a decision point.
    pub fn reconstruct(&self, decision: &Decision, window: &MeasurementWindow) -> Vec<State2D> {
        let z = decision.to_vector();
        let mut s = Vector3::new(z[0], z[1], z[2]);
        let mut states = Vec::with_capacity(window.len());
        states.push(State2D::new(s[0], s[1], s[2]));
        for i in 0..window.len().saturating_sub(1) {
            s = rk4_step(&s, window.control(i), z[3], z[4], window.dt());
            states.push(State2D::new(s[0], s[1], s[2]));
        }
        states
    }

    fn evaluate(&self, z: &Vector6<f64>, window: &MeasurementWindow, priors: &NmhePriors, want_jac: bool) -> Evaluation {
        let n = window.len();
        let rows = 3 * n + 6;
        let mut r = DVector::zeros(rows);
        let mut jac = if want_jac { Some(DMatrix::zeros(rows, N_DECISION)) } else { None };
        let (mu, nu, dtheta) = (z[3], z[4], z[5]);
        let dt = window.dt();

        let mut s = Vector3::new(z[0], z[1], wrap_angle(z[2]));
        let mut sens = Sens::zeros();
        sens[(0, 0)] = 1.0;
        sens[(1, 1)] = 1.0;
        sens[(2, 2)] = 1.0;
        let mut states = Vec::with_capacity(n);

        for i in 0..n {
            let meas = window.measurement(i);
            let raw = Vector3::new(
                s[0] - meas.z_x,
                s[1] - meas.z_y,
                wrap_angle(s[2] - (meas.z_theta + dtheta)),
            );
            r.fixed_rows_mut::<3>(3 * i).copy_from(&(self.root_w * raw));
            if let Some(j) = jac.as_mut() {
                let mut d = SMatrix::<f64, 3, 6>::zeros();
                d.fixed_columns_mut::<5>(0).copy_from(&sens);
                d[(2, 5)] = -1.0;
                j.fixed_view_mut::<3, 6>(3 * i, 0).copy_from(&(self.root_w * d));
            }
            states.push(State2D {
                px: s[0],
                py: s[1],
                theta: s[2],
            });
            if i + 1 < n {
                let u = window.control(i);
                if want_jac {
                    let (ns, nsens) = rk4_step_with_sensitivity(&s, &sens, u, mu, nu, dt);
                    s = ns;
                    sens = nsens;
                } else {
                    s = rk4_step(&s, u, mu, nu, dt);
                }
            }
        }

        let base = 3 * n;
        let x_err = Vector3::new(
            z[0] - priors.state.px,
            z[1] - priors.state.py,
            wrap_angle(z[2] - priors.state.theta),
        );
        r.fixed_rows_mut::<3>(base).copy_from(&(self.root_x * x_err));
        let p_root = self.param_root(window);
        let p_err = Vector3::new(
            mu - priors.params.mu,
            nu - priors.params.nu,
            wrap_angle(dtheta - priors.params.delta_theta),
        );
        r.fixed_rows_mut::<3>(base + 3).copy_from(&(p_root * p_err));
        if let Some(j) = jac.as_mut() {
            j.fixed_view_mut::<3, 3>(base, 0).copy_from(&self.root_x);
            j.fixed_view_mut::<3, 3>(base + 3, 3).copy_from(p_root);
        }

        Evaluation {
            residuals: r,
            jacobian: jac,
            states,
        }
    }

    /// Solves the windowed estimation problem.
    pub fn solve(&self, window: &MeasurementWindow, priors: &NmhePriors) -> Result<NmheSolution, EstimationError> {
        self.check_window(window)?;
        let mut z = project(&initial_guess(window, priors));
        let mut eval = self.evaluate(&z, window, priors, true);
        let mut cost = eval.residuals.norm_squared();
        let mut damping = 1e-4;
        let mut converged = false;
        let mut iterations = 0;

        while iterations < self.config.max_iters {
            iterations += 1;
            let j = eval.jacobian.as_ref().expect("jacobian requested");
            let hess: Matrix6<f64> = Matrix6::from_iterator((j.transpose() * j).iter().copied());
            let grad: Vector6<f64> = Vector6::from_iterator((j.transpose() * &eval.residuals).iter().copied());

            let fixed = active_bounds(&z, &grad);
            let mut h = hess;
            let mut g = grad;
            for (idx, is_fixed) in fixed.iter().enumerate() {
                if *is_fixed {
                    h.row_mut(idx).fill(0.0);
                    h.column_mut(idx).fill(0.0);
                    h[(idx, idx)] = 1.0;
                    g[idx] = 0.0;
                }
            }

            let mut accepted = false;
            let mut step_norm = f64::INFINITY;
            while damping < 1e12 {
                let mut aug = h;
                for k in 0..N_DECISION {
                    aug[(k, k)] += damping * h[(k, k)].max(1e-9);
                }
                let Some(chol) = aug.cholesky() else {
                    damping *= 10.0;
                    continue;
                };
                let delta = chol.solve(&(-g));
                let candidate = project(&(z + delta));
                step_norm = step_difference(&candidate, &z).norm();
                let cand_eval = self.evaluate(&candidate, window, priors, true);
                let cand_cost = cand_eval.residuals.norm_squared();
                if cand_cost <= cost {
                    z = candidate;
                    eval = cand_eval;
                    cost = cand_cost;
                    damping = (damping / 3.0).max(1e-12);
                    accepted = true;
                    break;
                }
                if step_norm < self.config.convergence_tol {
                    // At the numerical floor of the cost.
                    break;
                }
                damping *= 4.0;
            }
            if step_norm < self.config.convergence_tol {
                converged = true;
                break;
            }
            if !accepted {
                break;
            }
        }

        let decision = Decision::from_vector(&z);
        Ok(NmheSolution {
            states: eval.states,
            mu: decision.params.mu,
            nu: decision.params.nu,
            delta_theta: decision.params.delta_theta,
            final_cost: cost,
            converged,
            iterations,
        })
    }
}

/// Flags `mu` / `nu` sitting on a bound with the descent direction pointing
/// out of the box.
fn active_bounds(z: &Vector6<f64>, grad: &Vector6<f64>) -> [bool; N_DECISION] {
    let mut fixed = [false; N_DECISION];
    for idx in [IDX_MU, IDX_NU] {
        let at_lower = z[idx] <= 0.0 && grad[idx] > 0.0;
        let at_upper = z[idx] >= 1.0 && grad[idx] < 0.0;
        fixed[idx] = at_lower || at_upper;
    }
    fixed
}

fn project(z: &Vector6<f64>) -> Vector6<f64> {
    Vector6::new(
        z[0],
        z[1],
        wrap_angle(z[2]),
        z[3].clamp(0.0, 1.0),
        z[4].clamp(0.0, 1.0),
        wrap_angle(z[5]),
    )
}

fn step_difference(a: &Vector6<f64>, b: &Vector6<f64>) -> Vector6<f64> {
    let mut d = a - b;
    d[2] = wrap_angle(d[2]);
    d[5] = wrap_angle(d[5]);
    d
}

fn model(s: &Vector3<f64>, u: &ControlInput, mu: f64, nu: f64) -> Vector3<f64> {
    let speed = mu * u.v;
    Vector3::new(speed * s[2].cos(), speed * s[2].sin(), nu * u.omega)
}

/// Sensitivity of the model output to `(state, mu, nu)` chained through `sens`.
fn model_sensitivity(s: &Vector3<f64>, sens: &Sens, u: &ControlInput, mu: f64) -> Sens {
    let (sin, cos) = s[2].sin_cos();
    let dth = Vector3::new(-mu * u.v * sin, mu * u.v * cos, 0.0);
    let mut d = dth * sens.row(2);
    d[(0, 3)] += u.v * cos;
    d[(1, 3)] += u.v * sin;
    d[(2, 4)] += u.omega;
    d
}

/// RK4 step of the affine model without clamping `mu`, `nu`.
fn rk4_step(s: &Vector3<f64>, u: &ControlInput, mu: f64, nu: f64, dt: f64) -> Vector3<f64> {
    let k1 = model(s, u, mu, nu);
    let k2 = model(&(s + k1 * (0.5 * dt)), u, mu, nu);
    let k3 = model(&(s + k2 * (0.5 * dt)), u, mu, nu);
    let k4 = model(&(s + k3 * dt), u, mu, nu);
    let mut next = s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    next[2] = wrap_angle(next[2]);
    next
}

fn rk4_step_with_sensitivity(
    s: &Vector3<f64>,
    sens: &Sens,
    u: &ControlInput,
    mu: f64,
    nu: f64,
    dt: f64,
) -> (Vector3<f64>, Sens) {
    let half = 0.5 * dt;
    let k1 = model(s, u, mu, nu);
    let d1 = model_sensitivity(s, sens, u, mu);
    let s2 = s + k1 * half;
    let sens2 = sens + d1 * half;
    let k2 = model(&s2, u, mu, nu);
    let d2 = model_sensitivity(&s2, &sens2, u, mu);
    let s3 = s + k2 * half;
    let sens3 = sens + d2 * half;
    let k3 = model(&s3, u, mu, nu);
    let d3 = model_sensitivity(&s3, &sens3, u, mu);
    let s4 = s + k3 * dt;
    let sens4 = sens + d3 * dt;
    let k4 = model(&s4, u, mu, nu);
    let d4 = model_sensitivity(&s4, &sens4, u, mu);
    let w = dt / 6.0;
    let mut next = s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * w;
    next[2] = wrap_angle(next[2]);
    let next_sens = sens + (d1 + d2 * 2.0 + d3 * 2.0 + d4) * w;
    (next, next_sens)
}

/// Data-driven starting point: chord directions of the GNSS track against
/// compass readings give the offset, and least-squares ratios of travelled
/// distance / turned angle to commanded ones give `mu` / `nu`. Falls back to
/// the priors for anything the window does not excite.
fn initial_guess(window: &MeasurementWindow, priors: &NmhePriors) -> Vector6<f64> {
    let dt = window.dt();
    let n = window.len();
    let (mut sin_sum, mut cos_sum) = (0.0, 0.0);
    let (mut mu_num, mut mu_den) = (0.0, 0.0);
    let (mut nu_num, mut nu_den) = (0.0, 0.0);
    for i in 0..n - 1 {
        let a = window.measurement(i);
        let b = window.measurement(i + 1);
        let u = window.control(i);
        let dx = b.z_x - a.z_x;
        let dy = b.z_y - a.z_y;
        let chord = dx.hypot(dy);
        let turned = wrap_angle(b.z_theta - a.z_theta);
        let commanded_len = u.v * dt;
        mu_num += chord * commanded_len.abs();
        mu_den += commanded_len * commanded_len;
        let commanded_turn = u.omega * dt;
        nu_num += turned * commanded_turn;
        nu_den += commanded_turn * commanded_turn;
        if chord > 1e-6 {
            let mut track = dy.atan2(dx);
            if u.v < 0.0 {
                track += std::f64::consts::PI;
            }
            let offset = wrap_angle(track - (a.z_theta + 0.5 * turned));
            sin_sum += chord * offset.sin();
            cos_sum += chord * offset.cos();
        }
    }
    let delta_theta = if sin_sum.hypot(cos_sum) > 1e-6 {
        sin_sum.atan2(cos_sum)
    } else {
        priors.params.delta_theta
    };
    let mu = if mu_den > 1e-9 { mu_num / mu_den } else { priors.params.mu };
    let nu = if nu_den > 1e-9 { nu_num / nu_den } else { priors.params.nu };
    let first = window.measurement(0);
    Vector6::new(
        first.z_x,
        first.z_y,
        wrap_angle(first.z_theta + delta_theta),
        mu,
        nu,
        delta_theta,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinodynamics::{integrate_step, TractionParams};
    use crate::world::MeasurementSample;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn straight_window(n: usize) -> MeasurementWindow {
        MeasurementWindow::from_samples(
            n,
            0.1,
            (0..=n).map(|k| {
                (
                    MeasurementSample {
                        z_x: 0.1 * k as f64,
                        z_y: 0.0,
                        z_theta: 0.0,
                        timestamp: 0.1 * k as f64,
                    },
                    ControlInput::new(1.0, 0.0),
                )
            }),
        )
    }

    #[test]
    fn rejects_short_horizon_and_bad_weights() {
        let cfg = NmheConfig {
            horizon: 3,
            ..NmheConfig::default()
        };
        assert!(matches!(Nmhe::new(cfg), Err(EstimationError::InvalidConfig(_))));
        let cfg = NmheConfig {
            p_w: Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0)),
            ..NmheConfig::default()
        };
        assert!(Nmhe::new(cfg).is_err());
    }

    #[test]
    fn partial_window_is_an_error() {
        let nmhe = Nmhe::new(NmheConfig::default()).unwrap();
        let mut w = MeasurementWindow::new(20, 0.1);
        w.push(MeasurementSample::default(), ControlInput::ZERO);
        let err = nmhe.solve(&w, &NmhePriors::default()).unwrap_err();
        assert!(matches!(err, EstimationError::WindowNotFull { have: 1, need: 21 }));
    }

    #[test]
    fn residual_dimensions() {
        let cfg = NmheConfig {
            horizon: 6,
            ..NmheConfig::default()
        };
        let nmhe = Nmhe::new(cfg).unwrap();
        let w = straight_window(6);
        let d = Decision {
            state: State2D::default(),
            params: NmheParams::default(),
        };
        let r = nmhe.residuals(&d, &w, &NmhePriors::default()).unwrap();
        assert_eq!(r.len(), 3 * 7 + 6);
        assert_eq!(nmhe.residual_len(), r.len());
        // exact decision: only arrival terms could be nonzero, and priors match
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn shooting_matches_shared_integrator() {
        let s = Vector3::new(0.5, -1.0, 2.9);
        let u = ControlInput::new(0.8, 0.9);
        let a = rk4_step(&s, &u, 0.6, 0.7, 0.1);
        let b = integrate_step(&State2D::new(0.5, -1.0, 2.9), &u, &TractionParams::new(0.6, 0.7), 0.1);
        assert!((a[0] - b.px).abs() < 1e-15 && (a[1] - b.py).abs() < 1e-15);
        assert!(wrap_angle(a[2] - b.theta).abs() < 1e-15);
    }

    #[test]
    fn straight_line_recovers_full_traction() {
        let nmhe = Nmhe::new(NmheConfig::default().with_arrival_weight(1e-6)).unwrap();
        let sol = nmhe.solve(&straight_window(20), &NmhePriors::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.mu - 1.0).abs() < 1e-6);
        assert!(sol.delta_theta.abs() < 1e-6);
        assert_eq!(sol.states.len(), 21);
    }

    /// Noiseless window from the exact model with a wavy control sequence.
    /// `mu > 1` is emulated by driving faster than the recorded command.
    fn generated(first: State2D, mu: f64, nu: f64, delta_theta: f64, compass_bias: f64) -> MeasurementWindow {
        let p = TractionParams::new(mu, nu);
        let boost = mu.max(1.0);
        let mut s = first;
        let samples: Vec<_> = (0..=20)
            .map(|k| {
                let u = ControlInput::new(0.8 + 0.2 * (0.3 * k as f64).cos(), 0.8 * (0.4 * k as f64).sin());
                let z = MeasurementSample {
                    z_x: s.px,
                    z_y: s.py,
                    z_theta: wrap_angle(s.theta - delta_theta + compass_bias),
                    timestamp: 0.1 * k as f64,
                };
                s = integrate_step(&s, &ControlInput::new(boost * u.v, u.omega), &p, 0.1);
                (z, u)
            })
            .collect();
        MeasurementWindow::from_samples(20, 0.1, samples)
    }

    fn weak() -> Nmhe {
        Nmhe::new(NmheConfig::default().with_arrival_weight(1e-6)).unwrap()
    }

    fn truth(first: State2D, mu: f64, nu: f64, delta_theta: f64) -> Decision {
        Decision {
            state: first,
            params: NmheParams { mu, nu, delta_theta },
        }
    }

    #[test]
    fn measurement_residuals_vanish_at_truth() {
        let first = State2D::new(1.0, 2.0, 0.4);
        let w = generated(first, 0.6, 0.8, -1.1, 0.0);
        let d = truth(first, 0.6, 0.8, -1.1);
        let nmhe = Nmhe::new(NmheConfig::default()).unwrap();
        let priors = NmhePriors::default();
        let r = nmhe.residuals(&d, &w, &priors).unwrap();
        let measured = r.len() - 6;
        assert!(r.rows(0, measured).norm() < 1e-12);
        assert!(r.rows(measured, 6).norm() > 0.0);
    }

    #[test]
    fn cost_rises_when_mu_moves_off_truth() {
        let first = State2D::new(0.0, 0.0, 0.0);
        let w = generated(first, 0.7, 0.9, 0.3, 0.0);
        let nmhe = weak();
        let priors = NmhePriors {
            state: first,
            params: NmheParams {
                mu: 0.7,
                nu: 0.9,
                delta_theta: 0.3,
            },
        };
        let at = nmhe.residuals(&truth(first, 0.7, 0.9, 0.3), &w, &priors).unwrap().norm_squared();
        let off = nmhe.residuals(&truth(first, 0.8, 0.9, 0.3), &w, &priors).unwrap().norm_squared();
        assert!(off > at);
    }

    #[test]
    fn recovers_reference_parameters() {
        let w = generated(State2D::new(3.0, -1.0, 2.0), 0.7, 0.9, 0.3, 0.0);
        let sol = weak().solve(&w, &NmhePriors::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.mu - 0.7).abs() < 1e-3);
        assert!((sol.nu - 0.9).abs() < 1e-3);
        assert!((sol.delta_theta - 0.3).abs() < 1e-3);
    }

    #[test]
    fn frozen_gnss_means_stuck() {
        let samples = (0..=20).map(|k| {
            (
                MeasurementSample {
                    z_x: 4.0,
                    z_y: -2.0,
                    z_theta: 0.5,
                    timestamp: 0.1 * k as f64,
                },
                ControlInput::new(1.0, 0.0),
            )
        });
        let w = MeasurementWindow::from_samples(20, 0.1, samples);
        let sol = weak().solve(&w, &NmhePriors::default()).unwrap();
        assert!(sol.mu <= 0.05, "{}", sol.mu);
    }

    #[test]
    fn overperforming_robot_hits_upper_bound() {
        let w = generated(State2D::new(0.0, 0.0, 0.0), 1.2, 0.9, 0.0, 0.0);
        let sol = weak().solve(&w, &NmhePriors::default()).unwrap();
        assert_eq!(sol.mu, 1.0);
        assert!(sol.nu <= 1.0 && sol.nu >= 0.0);
    }

    #[test]
    fn solution_states_follow_model() {
        let w = generated(State2D::new(0.0, 1.0, -0.5), 0.5, 0.6, 0.2, 0.0);
        let nmhe = weak();
        let sol = nmhe.solve(&w, &NmhePriors::default()).unwrap();
        let p = TractionParams::new(sol.mu, sol.nu);
        for k in 0..20 {
            let next = integrate_step(&sol.states[k], w.control(k), &p, 0.1);
            assert!(next.distance_to(sol.states[k + 1].px, sol.states[k + 1].py) < 1e-12);
            assert!(wrap_angle(next.theta - sol.states[k + 1].theta).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn noiseless_windows_are_recovered(
            mu in 0.2f64..=1.0,
            nu in 0.3f64..=1.0,
            dt in -3.14f64..3.14,
            th in -3.14f64..3.14,
        ) {
            let w = generated(State2D::new(1.0, -4.0, th), mu, nu, dt, 0.0);
            let sol = weak().solve(&w, &NmhePriors::default()).unwrap();
            prop_assert!(sol.converged);
            prop_assert!((sol.mu - mu).abs() < 1e-3);
            prop_assert!((sol.nu - nu).abs() < 1e-3);
            prop_assert!(wrap_angle(sol.delta_theta - dt).abs() < 1e-3);
        }

        #[test]
        fn compass_bias_shifts_offset(bias in -3.0f64..3.0, th in -3.14f64..3.14) {
            let first = State2D::new(0.0, 0.0, th);
            let a = weak().solve(&generated(first, 0.6, 0.7, 0.4, 0.0), &NmhePriors::default()).unwrap();
            let b = weak().solve(&generated(first, 0.6, 0.7, 0.4, bias), &NmhePriors::default()).unwrap();
            prop_assert!(wrap_angle(a.delta_theta - b.delta_theta - bias).abs() < 1e-6);
        }
    }
}
