//! Closed-loop episodes: render, plan, step the plant, estimate.

use super::config::{Config, ControllerKind};
use super::predictor::predictor_for;
use super::scenario::{build_field, low_mu_depth};
use super::HarnessError;
use crate::control::MppiPlanner;
use crate::estimation::Estimator;
use crate::kinodynamics::State2D;
use crate::world::World;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

const PROCESS_STREAM: u64 = 1;
const SENSOR_STREAM: u64 = 2;
const RENDER_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Reached,
    Stuck,
    Timeout,
    /// The episode aborted with an error; counted as a failure.
    Error,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Reached => "reached",
            Outcome::Stuck => "stuck",
            Outcome::Timeout => "timeout",
            Outcome::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub controller: ControllerKind,
    pub seed: u64,
    pub outcome: Outcome,
    pub path_length: f64,
    pub elapsed: f64,
    pub final_distance: f64,
    pub steps: usize,
    /// Deepest excursion into low-traction patches along the true path.
    pub max_low_mu_depth: f64,
    pub failure_reason: Option<String>,
    pub log_path: Option<PathBuf>,
}

impl EpisodeResult {
    pub fn success(&self) -> bool {
        self.outcome == Outcome::Reached
    }

    pub(crate) fn failed(controller: ControllerKind, seed: u64, err: &HarnessError) -> Self {
        Self {
            controller,
            seed,
            outcome: Outcome::Error,
            path_length: 0.0,
            elapsed: 0.0,
            final_distance: f64::NAN,
            steps: 0,
            max_low_mu_depth: 0.0,
            failure_reason: Some(err.to_string()),
            log_path: None,
        }
    }
}

/// One row of the episode log, written once per control step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub true_x: f64,
    pub true_y: f64,
    pub true_theta: f64,
    pub true_mu: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub est_theta: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub var_theta: f64,
    pub mhe_mu: Option<f64>,
    pub mhe_nu: Option<f64>,
    pub mhe_delta_theta: Option<f64>,
    pub mhe_cost: Option<f64>,
    pub mhe_iterations: Option<usize>,
    pub mhe_converged: Option<bool>,
    pub cmd_v: f64,
    pub cmd_omega: f64,
    pub cost_min: f64,
    pub cost_mean: f64,
    pub weight_entropy: f64,
    pub goal_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub records: Vec<StepRecord>,
    /// True poses at every control step boundary, including start and end.
    pub path: Vec<State2D>,
}

impl EpisodeTrace {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct EpisodeOptions {
    /// Directory for controller image dumps, written every
    /// `episode.image_dump_every` steps.
    pub image_dir: Option<PathBuf>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Runs one closed-loop episode with the controller and seed from `cfg.episode`.
pub fn run_episode(cfg: &Config, options: &EpisodeOptions) -> Result<(EpisodeResult, EpisodeTrace), HarnessError> {
    cfg.validate()?;
    let ep = &cfg.episode;
    let start = ep.start_state();
    let goal = ep.goal_point();
    let field = build_field(&cfg.world, start.position(), goal, ep.seed);
    let world = World::new(field, cfg.world.process_noise, cfg.world.sensor_noise);
    let predictor = predictor_for(ep.controller, &world.field, &cfg.predictor);
    let lut = cfg.camera.ground_lut();
    let mut estimator = Estimator::new(cfg.estimator_config())?;
    let mut planner = MppiPlanner::new(cfg.mpc_config(), cfg.mppi_config())?;

    let mut process_rng = stream(ep.seed, PROCESS_STREAM);
    let mut sensor_rng = stream(ep.seed, SENSOR_STREAM);
    let mut render_rng = stream(ep.seed, RENDER_STREAM);

    let control_dt = cfg.control_dt();
    let substeps = cfg.substeps();
    let sim_dt = control_dt / substeps as f64;
    let stuck_steps = (ep.stuck_window * ep.control_rate).round().max(1.0) as usize;
    let gyro_sigma = world.sensor_noise.gyro_sigma;
    if let Some(dir) = &options.image_dir {
        fs::create_dir_all(dir)?;
    }

    let mut truth = start;
    let mut trace = EpisodeTrace {
        records: Vec::new(),
        path: vec![truth],
    };
    let mut path_length = 0.0;
    let mut yaw_rate = 0.0;
    let mut max_depth = low_mu_depth(&world.field, truth.px, truth.py, ep.low_mu_threshold);
    let mut step = 0usize;
    let outcome = loop {
        let t = step as f64 * control_dt;
        if truth.distance_to(goal.0, goal.1) <= ep.goal_radius {
            break Outcome::Reached;
        }
        if t >= ep.time_budget - 1e-9 {
            break Outcome::Timeout;
        }
        if step >= stuck_steps {
            let then = trace.path[step - stuck_steps];
            if truth.distance_to(then.px, then.py) < ep.stuck_distance {
                break Outcome::Stuck;
            }
        }

        let (z, _) = world.sample_sensors(&truth, yaw_rate, t, &mut sensor_rng);
        estimator.prime(&z);
        let est = estimator.pose().expect("estimator primed");
        let img = predictor.render(&truth, &lut, &mut render_rng).with_frame_pose(est);
        if let Some(dir) = &options.image_dir {
            if ep.image_dump_every > 0 && step % ep.image_dump_every == 0 {
                let f = fs::File::create(dir.join(format!("step_{step:05}.pgm")))?;
                img.write_pgm(BufWriter::new(f))?;
            }
        }
        let plan = planner.step(&est, goal, &img)?;
        let u = plan.applied;
        estimator.on_measurement(z, u)?;
        let sol = estimator.last_solution();
        let ekf = estimator.ekf().expect("estimator primed");
        let var = ekf.covariance_diagonal();
        trace.records.push(StepRecord {
            step,
            time: t,
            true_x: truth.px,
            true_y: truth.py,
            true_theta: truth.theta,
            true_mu: world.traction_at(truth.px, truth.py).mu(),
            est_x: est.px,
            est_y: est.py,
            est_theta: est.theta,
            var_x: var[0],
            var_y: var[1],
            var_theta: var[2],
            mhe_mu: sol.map(|s| s.mu),
            mhe_nu: sol.map(|s| s.nu),
            mhe_delta_theta: sol.map(|s| s.delta_theta),
            mhe_cost: sol.map(|s| s.final_cost),
            mhe_iterations: sol.map(|s| s.iterations),
            mhe_converged: sol.map(|s| s.converged),
            cmd_v: u.v,
            cmd_omega: u.omega,
            cost_min: plan.stats.min_cost,
            cost_mean: plan.stats.mean_cost,
            weight_entropy: plan.stats.weight_entropy,
            goal_distance: truth.distance_to(goal.0, goal.1),
        });

        let before = truth;
        for _ in 0..substeps {
            yaw_rate = world.traction_at(truth.px, truth.py).nu() * u.omega;
            let n: f64 = sensor_rng.sample(StandardNormal);
            estimator.predict(yaw_rate + gyro_sigma * n, u.v, sim_dt);
            truth = world.sim_step(&truth, &u, sim_dt, &mut process_rng);
        }
        path_length += before.distance_to(truth.px, truth.py);
        max_depth = max_depth.max(low_mu_depth(&world.field, truth.px, truth.py, ep.low_mu_threshold));
        trace.path.push(truth);
        step += 1;
    };

    let result = EpisodeResult {
        controller: ep.controller,
        seed: ep.seed,
        outcome,
        path_length,
        elapsed: step as f64 * control_dt,
        final_distance: truth.distance_to(goal.0, goal.1),
        steps: step,
        max_low_mu_depth: max_depth,
        failure_reason: None,
        log_path: None,
    };
    Ok((result, trace))
}

/// Writes `episode.csv` and `summary.json` into `out`.
pub fn write_episode(out: &Path, result: &EpisodeResult, trace: &EpisodeTrace) -> Result<EpisodeResult, HarnessError> {
    fs::create_dir_all(out)?;
    let log = out.join("episode.csv");
    trace.write_csv(BufWriter::new(fs::File::create(&log)?))?;
    let result = EpisodeResult {
        log_path: Some(log),
        ..result.clone()
    };
    serde_json::to_writer_pretty(BufWriter::new(fs::File::create(out.join("summary.json"))?), &result)?;
    Ok(result)
}
