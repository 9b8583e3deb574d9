//! TOML configuration. One file describes the world, the episode and every
//! module's parameters; every field has a default.

use super::HarnessError;
use crate::camera::{Camera, RenderSettings};
use crate::control::{MpcConfig, MppiConfig};
use crate::estimation::{EstimatorConfig, NmheConfig, NmheParams};
use crate::kinodynamics::{ControlBounds, State2D};
use crate::labeling::LabelingConfig;
use crate::world::{Patch, ProcessNoise, SensorNoise};
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Wayfast,
    Blind,
    Geometric,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [ControllerKind::Wayfast, ControllerKind::Blind, ControllerKind::Geometric];

    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Wayfast => "wayfast",
            ControllerKind::Blind => "blind",
            ControllerKind::Geometric => "geometric",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wayfast" => Ok(ControllerKind::Wayfast),
            "blind" => Ok(ControllerKind::Blind),
            "geometric" => Ok(ControllerKind::Geometric),
            other => Err(HarnessError::UnknownController(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorldKind {
    /// Only the patches listed in the file.
    Custom,
    /// Listed patches plus randomly placed trees, some on the direct route.
    Forest,
    /// Listed patches, scattered trees and a flat low-traction band across
    /// the direct route, with detours around either end.
    Snow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub kind: WorldKind,
    /// Field extent `[x_min, x_max, y_min, y_max]`.
    pub bounds: [f64; 4],
    pub base_mu: f64,
    pub base_nu: f64,
    pub patches: Vec<Patch>,
    /// Seed for the generated layout; the episode seed is used when absent.
    pub layout_seed: Option<u64>,
    pub trees: usize,
    /// Trees forced onto the route.
    pub trees_on_route: usize,
    /// Lateral offset of the route at the start, tapering to 0 at the goal.
    /// Positive is to the left when facing the goal.
    pub route_offset: f64,
    pub tree_radius: [f64; 2],
    pub tree_height: f64,
    /// Center x of the band and its width along x.
    pub band_x: f64,
    pub band_width: f64,
    /// The band covers `y` from `band_start_y` up to `band_end_y`.
    pub band_start_y: f64,
    pub band_end_y: f64,
    pub band_mu: f64,
    pub process_noise: ProcessNoise,
    pub sensor_noise: SensorNoise,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            kind: WorldKind::Custom,
            bounds: [-20.0, 20.0, -10.0, 10.0],
            base_mu: 0.9,
            base_nu: 0.9,
            patches: Vec::new(),
            layout_seed: None,
            trees: 12,
            trees_on_route: 4,
            route_offset: 0.0,
            tree_radius: [0.4, 0.8],
            tree_height: 1.0,
            band_x: 0.0,
            band_width: 3.0,
            band_start_y: -3.0,
            band_end_y: 3.0,
            band_mu: 0.08,
            process_noise: ProcessNoise::default(),
            sensor_noise: SensorNoise::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    /// `[x, y, heading]`.
    pub start: [f64; 3],
    pub goal: [f64; 2],
    pub goal_radius: f64,
    pub time_budget: f64,
    pub controller: ControllerKind,
    pub seed: u64,
    pub control_rate: f64,
    pub sim_rate: f64,
    /// Stuck when the robot moves less than `stuck_distance` over `stuck_window` seconds.
    pub stuck_window: f64,
    pub stuck_distance: f64,
    /// Patches with `mu` below this count as low traction for the depth trace.
    pub low_mu_threshold: f64,
    /// Writes one PGM of the controller's image every this many steps (0 = never).
    pub image_dump_every: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            start: [-15.0, 0.0, std::f64::consts::PI],
            goal: [15.0, 0.0],
            goal_radius: 0.5,
            time_budget: 90.0,
            controller: ControllerKind::Wayfast,
            seed: 0,
            control_rate: 10.0,
            sim_rate: 100.0,
            stuck_window: 5.0,
            stuck_distance: 0.05,
            low_mu_threshold: 0.3,
            image_dump_every: 0,
        }
    }
}

impl EpisodeConfig {
    pub fn start_state(&self) -> State2D {
        State2D::new(self.start[0], self.start[1], self.start[2])
    }

    pub fn goal_point(&self) -> (f64, f64) {
        (self.goal[0], self.goal[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorSection {
    pub horizon: usize,
    pub p_x_diag: [f64; 3],
    pub p_p_diag: [f64; 3],
    pub p_w_diag: [f64; 3],
    pub max_iters: usize,
    pub convergence_tol: f64,
    pub excitation_threshold: f64,
    pub low_excitation_nu_scale: f64,
    pub ekf_q_diag: [f64; 3],
    pub ekf_r_diag: [f64; 3],
    pub initial_covariance_diag: [f64; 3],
    /// `[mu, nu, delta_theta]` guess before the first window is solved.
    pub initial_params: [f64; 3],
}

fn diag3(d: [f64; 3]) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::from(d))
}

fn diag_of(m: &Matrix3<f64>) -> [f64; 3] {
    [m[(0, 0)], m[(1, 1)], m[(2, 2)]]
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let e = EstimatorConfig::default();
        let n = &e.nmhe;
        Self {
            horizon: n.horizon,
            p_x_diag: diag_of(&n.p_x),
            p_p_diag: diag_of(&n.p_p),
            p_w_diag: diag_of(&n.p_w),
            max_iters: n.max_iters,
            convergence_tol: n.convergence_tol,
            excitation_threshold: n.excitation_threshold,
            low_excitation_nu_scale: n.low_excitation_nu_scale,
            ekf_q_diag: diag_of(&e.ekf_q),
            ekf_r_diag: diag_of(&e.ekf_r),
            initial_covariance_diag: diag_of(&e.initial_covariance),
            initial_params: [e.initial_params.mu, e.initial_params.nu, e.initial_params.delta_theta],
        }
    }
}

impl EstimatorSection {
    /// Estimator configuration for a GNSS stream at `window_dt`.
    pub fn to_config(&self, window_dt: f64) -> EstimatorConfig {
        EstimatorConfig {
            nmhe: NmheConfig {
                horizon: self.horizon,
                p_x: diag3(self.p_x_diag),
                p_p: diag3(self.p_p_diag),
                p_w: diag3(self.p_w_diag),
                max_iters: self.max_iters,
                convergence_tol: self.convergence_tol,
                excitation_threshold: self.excitation_threshold,
                low_excitation_nu_scale: self.low_excitation_nu_scale,
            },
            window_dt,
            ekf_q: diag3(self.ekf_q_diag),
            ekf_r: diag3(self.ekf_r_diag),
            initial_covariance: diag3(self.initial_covariance_diag),
            initial_params: NmheParams {
                mu: self.initial_params[0],
                nu: self.initial_params[1],
                delta_theta: self.initial_params[2],
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpcSection {
    pub horizon: usize,
    pub dt: f64,
    pub q_diag: [f64; 3],
    pub q_terminal_diag: [f64; 3],
    pub r_diag: [f64; 2],
    pub clearance_weight: f64,
    pub clearance_samples: usize,
    pub clearance_radius: f64,
    /// Angular traction assumed by the planner; the world's base value when absent.
    pub nu_bar: Option<f64>,
    pub reference_distance: f64,
    pub bounds: ControlBounds,
}

impl Default for MpcSection {
    fn default() -> Self {
        let m = MpcConfig::default();
        Self {
            horizon: m.horizon,
            dt: m.dt,
            q_diag: diag_of(&m.q),
            q_terminal_diag: diag_of(&m.q_terminal),
            r_diag: [m.r[(0, 0)], m.r[(1, 1)]],
            clearance_weight: m.clearance_weight,
            clearance_samples: m.clearance_samples,
            clearance_radius: m.clearance_radius,
            nu_bar: None,
            reference_distance: m.reference_distance,
            bounds: m.bounds,
        }
    }
}

impl MpcSection {
    pub fn to_config(&self, base_nu: f64) -> MpcConfig {
        MpcConfig {
            horizon: self.horizon,
            dt: self.dt,
            q: diag3(self.q_diag),
            q_terminal: diag3(self.q_terminal_diag),
            r: Matrix2::from_diagonal(&Vector2::from(self.r_diag)),
            clearance_weight: self.clearance_weight,
            clearance_samples: self.clearance_samples,
            clearance_radius: self.clearance_radius,
            nu_bar: self.nu_bar.unwrap_or(base_nu),
            reference_distance: self.reference_distance,
            bounds: self.bounds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MppiSection {
    pub num_samples: usize,
    pub lambda: f64,
    pub sigma_v: f64,
    pub sigma_omega: f64,
}

impl Default for MppiSection {
    fn default() -> Self {
        let m = MppiConfig::default();
        Self {
            num_samples: m.num_samples,
            lambda: m.lambda,
            sigma_v: m.sigma_v,
            sigma_omega: m.sigma_omega,
        }
    }
}

impl MppiSection {
    pub fn to_config(&self, seed: u64) -> MppiConfig {
        MppiConfig {
            num_samples: self.num_samples,
            lambda: self.lambda,
            sigma_v: self.sigma_v,
            sigma_omega: self.sigma_omega,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorSection {
    pub render: RenderSettings,
    /// The geometric baseline marks patches taller than this as blocked.
    pub geometric_height: f64,
}

impl Default for PredictorSection {
    fn default() -> Self {
        Self {
            render: RenderSettings::default(),
            geometric_height: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectSection {
    /// Waypoints `[x, y]` visited in order, then looped.
    pub waypoints: Vec<[f64; 2]>,
    pub cruise_speed: f64,
    pub heading_gain: f64,
    pub waypoint_radius: f64,
    /// Standard deviations added to `(v, omega)`.
    pub control_noise: [f64; 2],
}

impl Default for CollectSection {
    fn default() -> Self {
        Self {
            waypoints: vec![[6.0, 0.0], [6.0, 6.0], [0.0, 6.0], [0.0, 0.0]],
            cruise_speed: 0.8,
            heading_gain: 1.5,
            waypoint_radius: 0.5,
            control_noise: [0.05, 0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub episode: EpisodeConfig,
    pub world: WorldConfig,
    pub camera: Camera,
    pub predictor: PredictorSection,
    pub estimator: EstimatorSection,
    pub mpc: MpcSection,
    pub mppi: MppiSection,
    pub labeling: LabelingConfig,
    pub collect: CollectSection,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Config = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn control_dt(&self) -> f64 {
        1.0 / self.episode.control_rate
    }

    /// Simulation substeps per control period.
    pub fn substeps(&self) -> usize {
        (self.episode.sim_rate / self.episode.control_rate).round().max(1.0) as usize
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        self.estimator.to_config(self.control_dt())
    }

    pub fn mpc_config(&self) -> MpcConfig {
        self.mpc.to_config(self.world.base_nu)
    }

    pub fn mppi_config(&self) -> MppiConfig {
        self.mppi.to_config(self.episode.seed)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        let e = &self.episode;
        if !(e.goal_radius > 0.0) {
            return bad("episode.goal_radius must be positive");
        }
        if !(e.time_budget > 0.0) {
            return bad("episode.time_budget must be positive");
        }
        if !(e.control_rate > 0.0 && e.sim_rate >= e.control_rate) {
            return bad("episode rates must satisfy 0 < control_rate <= sim_rate");
        }
        if !(e.stuck_window > 0.0 && e.stuck_distance >= 0.0) {
            return bad("stuck detector parameters must be positive");
        }
        if !e.start.iter().chain(&e.goal).all(|v| v.is_finite()) {
            return bad("start and goal must be finite");
        }
        let w = &self.world;
        if !(w.bounds[0] < w.bounds[1] && w.bounds[2] < w.bounds[3]) {
            return bad("world.bounds must be [x_min, x_max, y_min, y_max]");
        }
        if !(w.tree_radius[0] > 0.0 && w.tree_radius[0] <= w.tree_radius[1]) {
            return bad("world.tree_radius must be [min, max] with 0 < min <= max");
        }
        if self.camera.intrinsics.width == 0 || self.camera.intrinsics.height == 0 {
            return bad("camera image must be non-empty");
        }
        if self.estimator.horizon < 4 {
            return bad("estimator.horizon must be at least 4");
        }
        self.mpc_config().validate()?;
        self.mppi_config().validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = Config::from_toml_str("").unwrap();
        assert_eq!(cfg, Config::default());
    }

    #[test]
    fn roundtrip_through_toml() {
        let mut cfg = Config::default();
        cfg.world.patches.push(Patch::new((1.0, 2.0), 0.5, 0.1, 0.0));
        cfg.episode.controller = ControllerKind::Geometric;
        cfg.mpc.nu_bar = Some(0.7);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(Config::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let cfg = Config::from_toml_str("[episode]\ngoal = [5.0, 0.0]\ncontroller = \"blind\"\n[mppi]\nnum_samples = 64\n").unwrap();
        assert_eq!(cfg.episode.goal, [5.0, 0.0]);
        assert_eq!(cfg.episode.controller, ControllerKind::Blind);
        assert_eq!(cfg.mppi.num_samples, 64);
        assert_eq!(cfg.mppi.lambda, MppiSection::default().lambda);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(Config::from_toml_str("[episode]\ngoal_radius = 0.0\n").is_err());
        assert!(Config::from_toml_str("[episode]\ntime_budget = -1.0\n").is_err());
        assert!(Config::from_toml_str("[episode]\ncontroller = \"lidar\"\n").is_err());
        assert!(Config::from_toml_str("[mppi]\nlambda = 0.0\n").is_err());
    }

    #[test]
    fn controller_names_parse() {
        for k in ControllerKind::ALL {
            assert_eq!(k.name().parse::<ControllerKind>().unwrap(), k);
        }
        assert!("lidar".parse::<ControllerKind>().is_err());
    }

    #[test]
    fn planner_nu_defaults_to_base() {
        let mut cfg = Config::default();
        cfg.world.base_nu = 0.65;
        assert_eq!(cfg.mpc_config().nu_bar, 0.65);
    }
}
