//! Dataset collection: a scripted driver wanders the field while the
//! estimator runs; its poses and traction estimates become path labels.

use super::config::{CollectSection, Config};
use super::scenario::build_field;
use super::HarnessError;
use crate::estimation::Estimator;
use crate::kinodynamics::{wrap_angle, ControlBounds, ControlInput, State2D};
use crate::labeling::{generate_labels, write_dataset, LabeledFrame, TrajectoryEntry, TrajectoryLog};
use crate::world::World;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fs;
use std::path::Path;

const PROCESS_STREAM: u64 = 11;
const SENSOR_STREAM: u64 = 12;
const DRIVER_STREAM: u64 = 13;

/// Waypoint follower with Gaussian control noise.
#[derive(Debug, Clone)]
pub struct ScriptedDriver {
    settings: CollectSection,
    bounds: ControlBounds,
    target: usize,
    rng: ChaCha8Rng,
}

impl ScriptedDriver {
    pub fn new(settings: CollectSection, bounds: ControlBounds, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(DRIVER_STREAM);
        Self {
            settings,
            bounds,
            target: 0,
            rng,
        }
    }

    pub fn target(&self) -> Option<(f64, f64)> {
        self.settings.waypoints.get(self.target).map(|w| (w[0], w[1]))
    }

    /// Control for the current pose estimate; advances to the next waypoint
    /// (cyclically) once within the waypoint radius.
    pub fn control(&mut self, pose: &State2D) -> ControlInput {
        let n = self.settings.waypoints.len();
        if n == 0 {
            return ControlInput::ZERO;
        }
        let mut goal = self.target().unwrap();
        if pose.distance_to(goal.0, goal.1) < self.settings.waypoint_radius {
            self.target = (self.target + 1) % n;
            goal = self.target().unwrap();
        }
        let err = wrap_angle((goal.1 - pose.py).atan2(goal.0 - pose.px) - pose.theta);
        let v = self.settings.cruise_speed * err.cos().max(0.0);
        let omega = self.settings.heading_gain * err;
        let nv: f64 = self.rng.sample(StandardNormal);
        let nw: f64 = self.rng.sample(StandardNormal);
        let [sv, sw] = self.settings.control_noise;
        self.bounds.clamp(ControlInput::new(v + sv * nv, omega + sw * nw))
    }
}

#[derive(Debug, Clone)]
pub struct Collection {
    pub log: TrajectoryLog,
    pub frames: Vec<LabeledFrame>,
}

/// Drives for `duration` seconds and labels the recorded frames. One frame
/// is captured per control step; steps before the estimator's first window
/// solution carry no traction estimate and are not logged.
pub fn collect_dataset(cfg: &Config, duration: f64) -> Result<Collection, HarnessError> {
    if !(duration > 0.0) {
        return Err(HarnessError::Config("duration must be positive".into()));
    }
    cfg.validate()?;
    let ep = &cfg.episode;
    let start = ep.start_state();
    let field = build_field(&cfg.world, start.position(), ep.goal_point(), ep.seed);
    let world = World::new(field, cfg.world.process_noise, cfg.world.sensor_noise);
    let mut estimator = Estimator::new(cfg.estimator_config())?;
    let mut driver = ScriptedDriver::new(cfg.collect.clone(), cfg.mpc.bounds, ep.seed);
    let mut process_rng = ChaCha8Rng::seed_from_u64(ep.seed);
    process_rng.set_stream(PROCESS_STREAM);
    let mut sensor_rng = ChaCha8Rng::seed_from_u64(ep.seed);
    sensor_rng.set_stream(SENSOR_STREAM);

    let control_dt = cfg.control_dt();
    let substeps = cfg.substeps();
    let sim_dt = control_dt / substeps as f64;
    let steps = (duration / control_dt).round() as usize;
    let mut truth = start;
    let mut yaw_rate = 0.0;
    let mut entries = Vec::new();
    for k in 0..steps {
        let t = k as f64 * control_dt;
        let (z, _) = world.sample_sensors(&truth, yaw_rate, t, &mut sensor_rng);
        estimator.prime(&z);
        let u = driver.control(&estimator.pose().expect("estimator primed"));
        estimator.on_measurement(z, u)?;
        if estimator.last_solution().is_some() {
            let pose = estimator.pose().expect("estimator primed");
            entries.push(TrajectoryEntry::new(t, pose, estimator.params().mu));
        }
        for _ in 0..substeps {
            yaw_rate = world.traction_at(truth.px, truth.py).nu() * u.omega;
            let n: f64 = sensor_rng.sample(StandardNormal);
            estimator.predict(yaw_rate + world.sensor_noise.gyro_sigma * n, u.v, sim_dt);
            truth = world.sim_step(&truth, &u, sim_dt, &mut process_rng);
        }
    }
    let log = TrajectoryLog::new(entries)?;
    let frames = generate_labels(&log, &cfg.camera.ground_lut(), &cfg.labeling);
    Ok(Collection { log, frames })
}

/// Writes `trajectory.csv`, `config.toml` and the labeled dataset under
/// `<out>/dataset`.
pub fn write_collection(out: &Path, cfg: &Config, collection: &Collection) -> Result<(), HarnessError> {
    fs::create_dir_all(out)?;
    collection.log.write_csv(&out.join("trajectory.csv"))?;
    fs::write(out.join("config.toml"), cfg.to_toml_string()?)?;
    write_dataset(&out.join("dataset"), &collection.frames, &cfg.labeling)?;
    Ok(())
}

/// Regenerates labels from a collection directory (`trajectory.csv` plus
/// `config.toml`) into `out`.
pub fn labelgen(log_dir: &Path, out: &Path) -> Result<Vec<LabeledFrame>, HarnessError> {
    let cfg = Config::load(&log_dir.join("config.toml"))?;
    let log = TrajectoryLog::read_csv(&log_dir.join("trajectory.csv"))?;
    let frames = generate_labels(&log, &cfg.camera.ground_lut(), &cfg.labeling);
    write_dataset(out, &frames, &cfg.labeling)?;
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{ProcessNoise, SensorNoise};

    fn noiseless(mu: f64) -> Config {
        let mut cfg = Config::default();
        cfg.world.base_mu = mu;
        cfg.world.process_noise = ProcessNoise::NONE;
        cfg.world.sensor_noise = SensorNoise::NONE;
        cfg.collect.control_noise = [0.0, 0.0];
        cfg.episode.start = [0.0, 0.0, 0.0];
        cfg
    }

    #[test]
    fn driver_heads_for_waypoint() {
        let mut d = ScriptedDriver::new(
            CollectSection {
                control_noise: [0.0, 0.0],
                ..CollectSection::default()
            },
            ControlBounds::default(),
            0,
        );
        let u = d.control(&State2D::new(0.0, 0.0, 0.0));
        assert!(u.v > 0.7 && u.omega.abs() < 1e-12);
        let u = d.control(&State2D::new(5.9, 0.0, 0.0));
        assert!(u.omega > 0.0, "switched to the next waypoint and turns left");
    }

    #[test]
    fn frame_count_respects_rate() {
        let c = collect_dataset(&noiseless(0.8), 20.0).unwrap();
        assert!(c.frames.len() <= 41);
        assert!(c.frames.len() >= 30);
    }

    #[test]
    fn write_and_regenerate() {
        let cfg = noiseless(0.8);
        let c = collect_dataset(&cfg, 8.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_collection(dir.path(), &cfg, &c).unwrap();
        let again = labelgen(dir.path(), &dir.path().join("relabeled")).unwrap();
        assert_eq!(again.len(), c.frames.len());
        for (a, b) in again.iter().zip(&c.frames) {
            assert_eq!(a.label.mask, b.label.mask);
        }
        assert!(dir.path().join("relabeled/index.csv").exists());
        assert!(dir.path().join("dataset/weights.csv").exists());
    }
}
