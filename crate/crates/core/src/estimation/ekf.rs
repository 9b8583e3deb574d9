//! Planar EKF: gyro-rate prediction corrected by moving-horizon pose estimates.

use super::EstimationError;
use crate::kinodynamics::{wrap_angle, State2D};
use nalgebra::{Matrix3, Vector3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfState {
    pub mean: State2D,
    pub covariance: Matrix3<f64>,
}

impl EkfState {
    pub fn new(mean: State2D, covariance: Matrix3<f64>) -> Self {
        Self { mean, covariance }
    }

    pub fn covariance_diagonal(&self) -> [f64; 3] {
        [self.covariance[(0, 0)], self.covariance[(1, 1)], self.covariance[(2, 2)]]
    }
}

fn symmetrize(p: &Matrix3<f64>) -> Matrix3<f64> {
    (p + p.transpose()) * 0.5
}

/// Propagates the mean with `(mu * v * cos, mu * v * sin, gyro)` over `dt`
/// (explicit Euler) and the covariance through the linearized model plus
/// `q * dt`.
pub fn ekf_predict(ekf: &EkfState, gyro: f64, v_cmd: f64, mu_est: f64, dt: f64, q: &Matrix3<f64>) -> EkfState {
    let th = ekf.mean.theta;
    let (sin, cos) = th.sin_cos();
    let speed = mu_est * v_cmd;
    let mean = State2D {
        px: ekf.mean.px + dt * speed * cos,
        py: ekf.mean.py + dt * speed * sin,
        theta: wrap_angle(th + dt * gyro),
    };
    let mut f = Matrix3::identity();
    f[(0, 2)] = -dt * speed * sin;
    f[(1, 2)] = dt * speed * cos;
    let covariance = symmetrize(&(f * ekf.covariance * f.transpose() + q * dt));
    EkfState { mean, covariance }
}

/// Direct pose measurement update (identity measurement matrix) with the
/// heading innovation wrapped. Uses the Joseph form so the covariance stays
/// positive definite.
pub fn ekf_update(ekf: &EkfState, measured: &State2D, r: &Matrix3<f64>) -> Result<EkfState, EstimationError> {
    let p = &ekf.covariance;
    let s = symmetrize(&(p + r));
    let s_inv = s.cholesky().ok_or(EstimationError::SingularInnovation)?.inverse();
    let gain = p * s_inv;
    let innovation = Vector3::new(
        measured.px - ekf.mean.px,
        measured.py - ekf.mean.py,
        wrap_angle(measured.theta - ekf.mean.theta),
    );
    let dx = gain * innovation;
    let mean = State2D {
        px: ekf.mean.px + dx[0],
        py: ekf.mean.py + dx[1],
        theta: wrap_angle(ekf.mean.theta + dx[2]),
    };
    let i_k = Matrix3::identity() - gain;
    let covariance = symmetrize(&(i_k * p * i_k.transpose() + gain * r * gain.transpose()));
    Ok(EkfState { mean, covariance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag(a: f64, b: f64, c: f64) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(a, b, c))
    }

    #[test]
    fn idle_prediction_only_grows_covariance() {
        let ekf = EkfState::new(State2D::new(1.0, 2.0, 0.3), diag(0.1, 0.2, 0.3));
        let q = diag(0.01, 0.02, 0.03);
        let next = ekf_predict(&ekf, 0.0, 0.0, 0.7, 0.1, &q);
        assert_eq!(next.mean, ekf.mean);
        assert!((next.covariance - (ekf.covariance + q * 0.1)).abs().max() < 1e-15);
        assert!(next.covariance.trace() > ekf.covariance.trace());
    }

    #[test]
    fn prediction_hand_evaluation() {
        let ekf = EkfState::new(State2D::default(), Matrix3::identity());
        let next = ekf_predict(&ekf, 0.0, 1.0, 0.5, 0.1, &Matrix3::zeros());
        assert!((next.mean.px - 0.05).abs() < 1e-15);
        assert_eq!(next.mean.py, 0.0);
    }

    #[test]
    fn consistent_measurement_shrinks_covariance() {
        let ekf = EkfState::new(State2D::new(1.0, 1.0, 0.5), diag(0.5, 0.5, 0.1));
        let next = ekf_update(&ekf, &ekf.mean, &diag(0.1, 0.1, 0.1)).unwrap();
        assert_eq!(next.mean, ekf.mean);
        assert!(next.covariance.trace() < ekf.covariance.trace());
    }

    #[test]
    fn uninformative_measurement_leaves_prior() {
        let ekf = EkfState::new(State2D::new(1.0, 1.0, 0.5), diag(0.5, 0.5, 0.1));
        let next = ekf_update(&ekf, &State2D::new(3.0, -2.0, 2.0), &diag(1e9, 1e9, 1e9)).unwrap();
        assert!((next.mean.px - 1.0).abs() < 1e-6);
        assert!((next.mean.py - 1.0).abs() < 1e-6);
        assert!((next.mean.theta - 0.5).abs() < 1e-6);
        assert!((next.covariance - ekf.covariance).abs().max() < 1e-6);
    }

    #[test]
    fn scalar_kalman_gain_on_diagonal_system() {
        let (p, r, x, z) = (0.8, 0.3, 2.0, 2.5);
        let ekf = EkfState::new(State2D::new(x, 0.0, 0.0), diag(p, 1.0, 1.0));
        let next = ekf_update(&ekf, &State2D::new(z, 0.0, 0.0), &diag(r, 1.0, 1.0)).unwrap();
        let k = p / (p + r);
        assert!((next.mean.px - (x + k * (z - x))).abs() < 1e-12);
        assert!((next.covariance[(0, 0)] - (1.0 - k) * p).abs() < 1e-12);
    }

    #[test]
    fn heading_innovation_is_wrapped() {
        let ekf = EkfState::new(State2D::new(0.0, 0.0, 3.1), diag(1.0, 1.0, 1.0));
        let next = ekf_update(&ekf, &State2D::new(0.0, 0.0, -3.1), &diag(1.0, 1.0, 1.0)).unwrap();
        // halfway across the +-pi seam, not through zero
        assert!(next.mean.theta.abs() > 3.1);
    }

    #[test]
    fn singular_innovation_is_reported() {
        let ekf = EkfState::new(State2D::default(), Matrix3::zeros());
        assert!(matches!(
            ekf_update(&ekf, &State2D::default(), &Matrix3::zeros()),
            Err(EstimationError::SingularInnovation)
        ));
    }

    proptest! {
        #[test]
        fn covariance_stays_spd(steps in proptest::collection::vec(
            (any::<bool>(), -2.0f64..2.0, 0.0f64..1.0, 0.0f64..1.0, -5.0f64..5.0, -5.0f64..5.0, -3.0f64..3.0), 1..200)
        ) {
            let q = diag(1e-3, 1e-3, 1e-4);
            let r = diag(0.01, 0.01, 0.005);
            let mut ekf = EkfState::new(State2D::default(), diag(1.0, 1.0, 0.5));
            for (predict, gyro, v, mu, x, y, th) in steps {
                ekf = if predict {
                    ekf_predict(&ekf, gyro, v, mu, 0.01, &q)
                } else {
                    ekf_update(&ekf, &State2D::new(x, y, th), &r).unwrap()
                };
                let p = ekf.covariance;
                prop_assert!((p - p.transpose()).abs().max() == 0.0);
                prop_assert!(p.cholesky().is_some());
            }
        }
    }
}
