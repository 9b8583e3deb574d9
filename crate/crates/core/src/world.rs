//! Simulated planar environment: ground-truth traction, obstacle heights,
//! process noise and noisy GNSS / compass / gyro measurements.

use crate::kinodynamics::{integrate_step, wrap_angle, ControlInput, State2D, TractionParams};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// A closed disk of terrain with its own traction and height.
///
/// Height 0 models flat hazards (snow, mud); positive heights are geometric
/// obstacles that occlude the camera and show up for range sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub center: (f64, f64),
    pub radius: f64,
    pub mu: f64,
    /// Angular traction inside the patch. Falls back to the field's base value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default)]
    pub height: f64,
}

impl Patch {
    pub fn new(center: (f64, f64), radius: f64, mu: f64, height: f64) -> Self {
        Self {
            center,
            radius,
            mu,
            nu: None,
            height,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractionField {
    pub base_mu: f64,
    pub base_nu: f64,
    #[serde(default)]
    pub patches: Vec<Patch>,
}

impl Default for TractionField {
    fn default() -> Self {
        Self::uniform(0.9, 0.9)
    }
}

impl TractionField {
    pub fn uniform(mu: f64, nu: f64) -> Self {
        Self {
            base_mu: mu,
            base_nu: nu,
            patches: Vec::new(),
        }
    }

    pub fn with_patch(mut self, patch: Patch) -> Self {
        self.patches.push(patch);
        self
    }

    /// The innermost (smallest-radius) patch containing the point, if any.
    /// Equal radii resolve to the patch listed first.
    pub fn patch_at(&self, x: f64, y: f64) -> Option<&Patch> {
        self.patches
            .iter()
            .filter(|p| p.contains(x, y))
            .fold(None, |best: Option<&Patch>, p| match best {
                Some(b) if b.radius <= p.radius => Some(b),
                _ => Some(p),
            })
    }

    pub fn traction_at(&self, x: f64, y: f64) -> TractionParams {
        match self.patch_at(x, y) {
            Some(p) => TractionParams::new(p.mu, p.nu.unwrap_or(self.base_nu)),
            None => TractionParams::new(self.base_mu, self.base_nu),
        }
    }

    /// Height of the innermost patch under the point (0 on open ground).
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        self.patch_at(x, y).map_or(0.0, |p| p.height)
    }
}

/// Additive Gaussian process noise, as standard deviation per square-root second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcessNoise {
    pub position_sigma: f64,
    pub heading_sigma: f64,
}

impl Default for ProcessNoise {
    fn default() -> Self {
        Self {
            position_sigma: 0.005,
            heading_sigma: 0.005,
        }
    }
}

impl ProcessNoise {
    pub const NONE: ProcessNoise = ProcessNoise {
        position_sigma: 0.0,
        heading_sigma: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorNoise {
    pub gnss_sigma: f64,
    pub compass_sigma: f64,
    pub gyro_sigma: f64,
    /// Offset between true north and the compass's north.
    pub delta_theta_true: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        Self {
            gnss_sigma: 0.1,
            compass_sigma: 0.05,
            gyro_sigma: 0.01,
            delta_theta_true: 0.1,
        }
    }
}

impl SensorNoise {
    pub const NONE: SensorNoise = SensorNoise {
        gnss_sigma: 0.0,
        compass_sigma: 0.0,
        gyro_sigma: 0.0,
        delta_theta_true: 0.0,
    };
}

/// One GNSS fix paired with a compass heading.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementSample {
    pub z_x: f64,
    pub z_y: f64,
    pub z_theta: f64,
    pub timestamp: f64,
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let n: f64 = rng.sample(StandardNormal);
    sigma * n
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct World {
    pub field: TractionField,
    #[serde(default)]
    pub process_noise: ProcessNoise,
    #[serde(default)]
    pub sensor_noise: SensorNoise,
}

impl World {
    pub fn new(field: TractionField, process_noise: ProcessNoise, sensor_noise: SensorNoise) -> Self {
        Self {
            field,
            process_noise,
            sensor_noise,
        }
    }

    pub fn noiseless(field: TractionField) -> Self {
        Self::new(field, ProcessNoise::NONE, SensorNoise::NONE)
    }

    pub fn traction_at(&self, x: f64, y: f64) -> TractionParams {
        self.field.traction_at(x, y)
    }

    /// Advances the true plant by `dt`: one RK4 step under the ground-truth
    /// traction at the current position, then additive Gaussian noise.
    pub fn sim_step<R: Rng + ?Sized>(&self, true_state: &State2D, u: &ControlInput, dt: f64, rng: &mut R) -> State2D {
        let p = self.field.traction_at(true_state.px, true_state.py);
        let next = integrate_step(true_state, u, &p, dt);
        let scale = dt.sqrt();
        let pos_sigma = self.process_noise.position_sigma * scale;
        let head_sigma = self.process_noise.heading_sigma * scale;
        let nx = gaussian(rng, pos_sigma);
        let ny = gaussian(rng, pos_sigma);
        let nt = gaussian(rng, head_sigma);
        State2D {
            px: next.px + nx,
            py: next.py + ny,
            theta: wrap_angle(next.theta + nt),
        }
    }

    /// Samples GNSS, compass and gyro. The compass reads `theta - delta_theta`
    /// so that `theta = z_theta + delta_theta` holds in expectation.
    pub fn sample_sensors<R: Rng + ?Sized>(
        &self,
        true_state: &State2D,
        true_yaw_rate: f64,
        timestamp: f64,
        rng: &mut R,
    ) -> (MeasurementSample, f64) {
        sample_sensors(true_state, true_yaw_rate, &self.sensor_noise, timestamp, rng)
    }
}

pub fn sample_sensors<R: Rng + ?Sized>(
    true_state: &State2D,
    true_yaw_rate: f64,
    noise: &SensorNoise,
    timestamp: f64,
    rng: &mut R,
) -> (MeasurementSample, f64) {
    let z_x = true_state.px + gaussian(rng, noise.gnss_sigma);
    let z_y = true_state.py + gaussian(rng, noise.gnss_sigma);
    let z_theta = wrap_angle(true_state.theta - noise.delta_theta_true + gaussian(rng, noise.compass_sigma));
    let gyro = true_yaw_rate + gaussian(rng, noise.gyro_sigma);
    (
        MeasurementSample {
            z_x,
            z_y,
            z_theta,
            timestamp,
        },
        gyro,
    )
}
