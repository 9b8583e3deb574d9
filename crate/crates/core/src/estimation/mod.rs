//! Traction estimation: a moving-horizon estimator recovers pose, `mu`, `nu`
//! and the compass offset over a sliding GNSS window, and an EKF fuses its
//! output with high-rate gyro predictions.

mod ekf;
mod nmhe;
mod window;

pub use ekf::{ekf_predict, ekf_update, EkfState};
pub use nmhe::{Decision, Nmhe, NmheConfig, NmheParams, NmhePriors, NmheSolution};
pub use window::MeasurementWindow;

use crate::kinodynamics::{wrap_angle, ControlInput, State2D};
use crate::world::MeasurementSample;
use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("measurement window not full: {have} of {need} samples")]
    WindowNotFull { have: usize, need: usize },
    #[error("innovation covariance is numerically singular")]
    SingularInnovation,
    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),
}

pub fn nmhe_residuals(
    decision: &Decision,
    window: &MeasurementWindow,
    priors: &NmhePriors,
    config: &NmheConfig,
) -> Result<nalgebra::DVector<f64>, EstimationError> {
    Nmhe::new(config.clone())?.residuals(decision, window, priors)
}

pub fn nmhe_solve(window: &MeasurementWindow, priors: &NmhePriors, config: &NmheConfig) -> Result<NmheSolution, EstimationError> {
    Nmhe::new(config.clone())?.solve(window, priors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub nmhe: NmheConfig,
    /// Sample period of the GNSS / control stream feeding the window.
    pub window_dt: f64,
    /// EKF process noise density.
    pub ekf_q: Matrix3<f64>,
    /// EKF measurement noise on moving-horizon pose outputs.
    pub ekf_r: Matrix3<f64>,
    pub initial_covariance: Matrix3<f64>,
    /// Parameter guess used until the first window is solved.
    pub initial_params: NmheParams,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            nmhe: NmheConfig::default(),
            window_dt: 0.1,
            ekf_q: Matrix3::from_diagonal(&Vector3::new(0.01, 0.01, 0.005)),
            ekf_r: Matrix3::from_diagonal(&Vector3::new(0.005, 0.005, 0.002)),
            initial_covariance: Matrix3::from_diagonal(&Vector3::new(0.05, 0.05, 0.05)),
            initial_params: NmheParams::default(),
        }
    }
}

/// Sequential estimator owned by one robot.
#[derive(Debug, Clone)]
pub struct Estimator {
    config: EstimatorConfig,
    nmhe: Nmhe,
    window: MeasurementWindow,
    ekf: Option<EkfState>,
    priors: Option<NmhePriors>,
    params: NmheParams,
    last_solution: Option<NmheSolution>,
}

impl Estimator {
    pub fn new(config: EstimatorConfig) -> Result<Self, EstimationError> {
        if !(config.window_dt > 0.0) {
            return Err(EstimationError::InvalidConfig("window_dt must be positive".into()));
        }
        let nmhe = Nmhe::new(config.nmhe.clone())?;
        let window = MeasurementWindow::new(config.nmhe.horizon, config.window_dt);
        let params = config.initial_params;
        Ok(Self {
            config,
            nmhe,
            window,
            ekf: None,
            priors: None,
            params,
            last_solution: None,
        })
    }

    /// High-rate EKF prediction from the gyro and the commanded speed.
    pub fn predict(&mut self, gyro: f64, v_cmd: f64, dt: f64) {
        if let Some(ekf) = self.ekf.as_mut() {
            *ekf = ekf_predict(ekf, gyro, v_cmd, self.params.mu, dt, &self.config.ekf_q);
        }
    }

    /// Starts the EKF at a raw measurement if it is not running yet.
    pub fn prime(&mut self, sample: &MeasurementSample) {
        if self.ekf.is_none() {
            let mean = State2D::new(sample.z_x, sample.z_y, sample.z_theta + self.params.delta_theta);
            self.ekf = Some(EkfState::new(mean, self.config.initial_covariance));
        }
    }

    /// Feeds one GNSS/compass sample with the control applied from now until
    /// the next sample. Returns the fresh solution once the window is full.
    pub fn on_measurement(
        &mut self,
        sample: MeasurementSample,
        control: ControlInput,
    ) -> Result<Option<&NmheSolution>, EstimationError> {
        self.prime(&sample);
        self.window.push(sample, control);
        if !self.window.is_full() {
            return Ok(None);
        }
        let priors = self.priors.unwrap_or_else(|| {
            let first = self.window.measurement(0);
            NmhePriors {
                state: State2D::new(first.z_x, first.z_y, wrap_angle(first.z_theta + self.params.delta_theta)),
                params: self.params,
            }
        });
        let solution = self.nmhe.solve(&self.window, &priors)?;
        self.params = solution.params();
        self.priors = Some(NmhePriors {
            state: solution.states[1],
            params: solution.params(),
        });
        if let Some(ekf) = self.ekf.as_mut() {
            *ekf = ekf_update(ekf, &solution.latest_state(), &self.config.ekf_r)?;
        }
        self.last_solution = Some(solution);
        Ok(self.last_solution.as_ref())
    }

    /// Current fused pose, available after the first measurement.
    pub fn pose(&self) -> Option<State2D> {
        self.ekf.map(|e| e.mean)
    }

    pub fn ekf(&self) -> Option<&EkfState> {
        self.ekf.as_ref()
    }

    pub fn params(&self) -> NmheParams {
        self.params
    }

    pub fn last_solution(&self) -> Option<&NmheSolution> {
        self.last_solution.as_ref()
    }

    pub fn window(&self) -> &MeasurementWindow {
        &self.window
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinodynamics::{integrate_step, TractionParams};

    #[test]
    fn estimator_tracks_noiseless_motion() {
        let mut est = Estimator::new(EstimatorConfig::default()).unwrap();
        let p = TractionParams::new(0.6, 0.9);
        let mut truth = State2D::new(1.0, 2.0, 0.4);
        let dtheta = 0.2;
        for k in 0..60 {
            let u = ControlInput::new(0.8, 0.3 * (0.2 * k as f64).sin());
            let z = MeasurementSample {
                z_x: truth.px,
                z_y: truth.py,
                z_theta: wrap_angle(truth.theta - dtheta),
                timestamp: 0.1 * k as f64,
            };
            est.on_measurement(z, u).unwrap();
            for _ in 0..10 {
                est.predict(p.nu() * u.omega, u.v, 0.01);
                truth = integrate_step(&truth, &u, &p, 0.01);
            }
        }
        let params = est.params();
        assert!((params.mu - 0.6).abs() < 1e-3, "{params:?}");
        assert!((params.delta_theta - dtheta).abs() < 1e-3);
        let pose = est.pose().unwrap();
        assert!(pose.distance_to(truth.px, truth.py) < 0.05);
    }
}
