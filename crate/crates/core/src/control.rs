//! Sampling-based MPC on an image-space traction map.
//!
//! Rollouts use the affine model with `mu` read from a traversability image
//! frozen at capture time and a constant `nu`. Points outside the camera's
//! view have `mu = 0`, so predicted motion stops once a rollout leaves it.

use crate::camera::TraversabilityImage;
use crate::kinodynamics::{integrate_step, wrap_angle, ControlBounds, ControlInput, State2D, TractionParams};
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("invalid controller configuration: {0}")]
    InvalidConfig(String),
    #[error("control sequence has {have} steps, horizon is {need}")]
    HorizonMismatch { have: usize, need: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcConfig {
    pub horizon: usize,
    pub dt: f64,
    /// Stage weight on (x - gx, y - gy, heading error to the goal bearing).
    pub q: Matrix3<f64>,
    pub q_terminal: Matrix3<f64>,
    pub r: Matrix2<f64>,
    pub clearance_weight: f64,
    pub clearance_samples: usize,
    pub clearance_radius: f64,
    /// Constant angular traction used in the prediction model.
    pub nu_bar: f64,
    /// The tracked point is the goal pulled back to at most this distance
    /// from the current position.
    pub reference_distance: f64,
    pub bounds: ControlBounds,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            dt: 0.15,
            q: Matrix3::from_diagonal(&Vector3::new(0.1, 0.1, 0.05)),
            q_terminal: Matrix3::from_diagonal(&Vector3::new(0.5, 0.5, 0.05)),
            r: Matrix2::from_diagonal(&Vector2::new(0.005, 0.005)),
            clearance_weight: 2.0,
            clearance_samples: 16,
            clearance_radius: 0.3,
            nu_bar: 0.8,
            reference_distance: 4.0,
            bounds: ControlBounds::default(),
        }
    }
}

fn is_psd(m: &Matrix3<f64>) -> bool {
    let sym = (m + m.transpose()) * 0.5;
    (m - m.transpose()).abs().max() < 1e-12 && sym.symmetric_eigenvalues().iter().all(|&e| e >= -1e-12)
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |msg: &str| Err(ControlError::InvalidConfig(msg.into()));
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !is_psd(&self.q) || !is_psd(&self.q_terminal) {
            return bad("Q and Q_N must be symmetric positive semidefinite");
        }
        if (self.r - self.r.transpose()).abs().max() > 1e-12 || self.r.cholesky().is_none() {
            return bad("R must be symmetric positive definite");
        }
        if !(self.clearance_weight >= 0.0) {
            return bad("clearance weight must be non-negative");
        }
        if self.clearance_samples == 0 {
            return bad("clearance_samples must be at least 1");
        }
        if !(self.clearance_radius >= 0.0) {
            return bad("clearance radius must be non-negative");
        }
        if !(self.reference_distance > 0.0) {
            return bad("reference distance must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MppiConfig {
    pub num_samples: usize,
    pub lambda: f64,
    pub sigma_v: f64,
    pub sigma_omega: f64,
    pub seed: u64,
}

impl Default for MppiConfig {
    fn default() -> Self {
        Self {
            num_samples: 4096,
            lambda: 0.1,
            sigma_v: 0.3,
            sigma_omega: 0.5,
            seed: 0,
        }
    }
}

impl MppiConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        if self.num_samples == 0 {
            return Err(ControlError::InvalidConfig("num_samples must be at least 1".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(ControlError::InvalidConfig("lambda must be positive".into()));
        }
        if !(self.sigma_v >= 0.0 && self.sigma_omega >= 0.0) {
            return Err(ControlError::InvalidConfig("sigmas must be non-negative".into()));
        }
        Ok(())
    }
}

/// Controls over the horizon, each inside the actuator bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence {
    controls: Vec<ControlInput>,
}

impl ControlSequence {
    pub fn new(controls: Vec<ControlInput>, bounds: &ControlBounds) -> Self {
        Self {
            controls: controls.into_iter().map(|u| bounds.clamp(u)).collect(),
        }
    }

    pub fn constant(u: ControlInput, len: usize, bounds: &ControlBounds) -> Self {
        Self::new(vec![u; len], bounds)
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            controls: vec![ControlInput::ZERO; len],
        }
    }

    pub fn controls(&self) -> &[ControlInput] {
        &self.controls
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn first(&self) -> ControlInput {
        self.controls.first().copied().unwrap_or(ControlInput::ZERO)
    }

    /// Drops the first control and repeats the last one.
    pub fn shifted(&self) -> Self {
        let mut controls = self.controls.clone();
        if !controls.is_empty() {
            controls.remove(0);
            let last = *self.controls.last().unwrap();
            controls.push(last);
        }
        Self { controls }
    }
}

/// Traction at a world point from a frozen image; 0 outside the view.
#[inline]
pub fn mu_lookup(img: &TraversabilityImage, world_pt: (f64, f64)) -> f64 {
    img.lookup(world_pt)
}

/// Offsets drawn uniformly in a disk, `per_state` for each of `states` states.
#[derive(Debug, Clone, PartialEq)]
struct DiskOffsets {
    per_state: usize,
    offsets: Vec<(f64, f64)>,
}

impl DiskOffsets {
    fn draw<R: Rng + ?Sized>(states: usize, per_state: usize, radius: f64, rng: &mut R) -> Self {
        let offsets = (0..states * per_state)
            .map(|_| {
                let r = radius * rng.random::<f64>().sqrt();
                let phi = std::f64::consts::TAU * rng.random::<f64>();
                (r * phi.cos(), r * phi.sin())
            })
            .collect();
        Self { per_state, offsets }
    }

    fn cost(&self, states: &[State2D], img: &TraversabilityImage) -> f64 {
        states
            .iter()
            .zip(self.offsets.chunks(self.per_state))
            .map(|(s, offs)| {
                let sum: f64 = offs.iter().map(|&(dx, dy)| img.lookup((s.px + dx, s.py + dy))).sum();
                1.0 - sum / self.per_state as f64
            })
            .sum()
    }
}

/// `sum_k (1 - mean mu over samples_per_state points in a disk around state k)`.
pub fn clearance_cost<R: Rng + ?Sized>(
    states: &[State2D],
    img: &TraversabilityImage,
    samples_per_state: usize,
    radius: f64,
    rng: &mut R,
) -> f64 {
    if samples_per_state == 0 {
        return 0.0;
    }
    DiskOffsets::draw(states.len(), samples_per_state, radius, rng).cost(states, img)
}

#[inline]
fn quad3(e: &Vector3<f64>, m: &Matrix3<f64>) -> f64 {
    e.dot(&(m * e))
}

#[inline]
fn tracking_error(s: &State2D, goal: (f64, f64)) -> Vector3<f64> {
    let dx = s.px - goal.0;
    let dy = s.py - goal.1;
    let heading = if dx * dx + dy * dy > 1e-18 {
        wrap_angle(s.theta - (-dy).atan2(-dx))
    } else {
        0.0
    };
    Vector3::new(dx, dy, heading)
}

/// Predicted states `x_1..x_N` under the prediction model.
pub fn predict_states(x0: &State2D, controls: &[ControlInput], img: &TraversabilityImage, nu_bar: f64, dt: f64) -> Vec<State2D> {
    let mut out = Vec::with_capacity(controls.len());
    let mut s = *x0;
    for u in controls {
        let p = TractionParams::new(img.lookup((s.px, s.py)), nu_bar);
        s = integrate_step(&s, u, &p, dt);
        out.push(s);
    }
    out
}

/// Point tracked by the cost: the goal, or the point `max_distance` along
/// the segment from `x0` to the goal when the goal is farther.
pub fn reference_point(x0: &State2D, goal: (f64, f64), max_distance: f64) -> (f64, f64) {
    let d = x0.distance_to(goal.0, goal.1);
    if d <= max_distance {
        return goal;
    }
    let k = max_distance / d;
    (x0.px + k * (goal.0 - x0.px), x0.py + k * (goal.1 - x0.py))
}

/// Tracking, control and terminal terms against a fixed point, without clearance.
pub fn tracking_cost(x0: &State2D, states: &[State2D], controls: &[ControlInput], goal: (f64, f64), cfg: &MpcConfig) -> f64 {
    let mut cost = 0.0;
    let mut prev = x0;
    for (u, s) in controls.iter().zip(states) {
        let uv = Vector2::new(u.v, u.omega);
        cost += quad3(&tracking_error(prev, goal), &cfg.q) + uv.dot(&(cfg.r * uv));
        prev = s;
    }
    cost + quad3(&tracking_error(prev, goal), &cfg.q_terminal)
}

fn rollout_cost_with(
    controls: &[ControlInput],
    x0: &State2D,
    goal: (f64, f64),
    img: &TraversabilityImage,
    cfg: &MpcConfig,
    offsets: &DiskOffsets,
) -> (Vec<State2D>, f64) {
    let states = predict_states(x0, controls, img, cfg.nu_bar, cfg.dt);
    let reference = reference_point(x0, goal, cfg.reference_distance);
    let mut cost = tracking_cost(x0, &states, controls, reference, cfg);
    if cfg.clearance_weight > 0.0 {
        cost += cfg.clearance_weight * offsets.cost(&states, img);
    }
    (states, cost)
}

/// Predicted states and total cost of one control sequence.
pub fn rollout_cost<R: Rng + ?Sized>(
    u_seq: &ControlSequence,
    x0: &State2D,
    goal: (f64, f64),
    img: &TraversabilityImage,
    cfg: &MpcConfig,
    rng: &mut R,
) -> Result<(Vec<State2D>, f64), ControlError> {
    if u_seq.len() != cfg.horizon {
        return Err(ControlError::HorizonMismatch {
            have: u_seq.len(),
            need: cfg.horizon,
        });
    }
    let offsets = DiskOffsets::draw(cfg.horizon, cfg.clearance_samples, cfg.clearance_radius, rng);
    Ok(rollout_cost_with(u_seq.controls(), x0, goal, img, cfg, &offsets))
}

/// Normalized `exp(-(c - c_min) / lambda)`. Non-finite costs get zero weight;
/// if no cost is finite the weights are uniform.
pub fn mppi_weights(costs: &[f64], lambda: f64) -> Vec<f64> {
    let c_min = costs.iter().copied().filter(|c| c.is_finite()).fold(f64::INFINITY, f64::min);
    if !c_min.is_finite() {
        return vec![1.0 / costs.len() as f64; costs.len()];
    }
    let raw: Vec<f64> = costs
        .iter()
        .map(|&c| if c.is_finite() { (-(c - c_min) / lambda).exp() } else { 0.0 })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn entropy(weights: &[f64]) -> f64 {
    -weights.iter().filter(|&&w| w > 0.0).map(|&w| w * w.ln()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MppiStats {
    pub min_cost: f64,
    pub mean_cost: f64,
    pub weight_entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MppiOutput {
    pub sequence: ControlSequence,
    pub applied: ControlInput,
    pub next_warm_start: ControlSequence,
    pub stats: MppiStats,
}

const CLEARANCE_STREAM: u64 = u64::MAX;

fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One MPPI solve. Sample 0 is the warm start itself; sample `i > 0` draws
/// its perturbation from stream `i` of a generator seeded with `mcfg.seed`.
/// Clearance disk samples are shared by all rollouts of the call.
pub fn mppi_step(
    x0: &State2D,
    goal: (f64, f64),
    img: &TraversabilityImage,
    warm_start: &ControlSequence,
    mcfg: &MppiConfig,
    cfg: &MpcConfig,
) -> Result<MppiOutput, ControlError> {
    mcfg.validate()?;
    cfg.validate()?;
    if warm_start.len() != cfg.horizon {
        return Err(ControlError::HorizonMismatch {
            have: warm_start.len(),
            need: cfg.horizon,
        });
    }
    let offsets = DiskOffsets::draw(
        cfg.horizon,
        cfg.clearance_samples,
        cfg.clearance_radius,
        &mut sample_rng(mcfg.seed, CLEARANCE_STREAM),
    );
    let bounds = cfg.bounds;
    let samples: Vec<(Vec<ControlInput>, f64)> = (0..mcfg.num_samples)
        .into_par_iter()
        .map(|i| {
            let controls: Vec<ControlInput> = if i == 0 {
                warm_start.controls().to_vec()
            } else {
                let mut rng = sample_rng(mcfg.seed, i as u64);
                warm_start
                    .controls()
                    .iter()
                    .map(|u| {
                        let ev: f64 = rng.sample(StandardNormal);
                        let ew: f64 = rng.sample(StandardNormal);
                        bounds.clamp(ControlInput::new(u.v + mcfg.sigma_v * ev, u.omega + mcfg.sigma_omega * ew))
                    })
                    .collect()
            };
            let (_, cost) = rollout_cost_with(&controls, x0, goal, img, cfg, &offsets);
            (controls, if cost.is_nan() { f64::INFINITY } else { cost })
        })
        .collect();

    let costs: Vec<f64> = samples.iter().map(|(_, c)| *c).collect();
    let weights = mppi_weights(&costs, mcfg.lambda);
    let mut acc = vec![(0.0, 0.0); cfg.horizon];
    for ((controls, _), &w) in samples.iter().zip(&weights) {
        if w == 0.0 {
            continue;
        }
        for (a, u) in acc.iter_mut().zip(controls) {
            a.0 += w * u.v;
            a.1 += w * u.omega;
        }
    }
    let sequence = ControlSequence::new(acc.into_iter().map(|(v, w)| ControlInput::new(v, w)).collect(), &bounds);
    let finite: Vec<f64> = costs.iter().copied().filter(|c| c.is_finite()).collect();
    let stats = MppiStats {
        min_cost: finite.iter().copied().fold(f64::INFINITY, f64::min),
        mean_cost: if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        },
        weight_entropy: entropy(&weights),
    };
    Ok(MppiOutput {
        applied: sequence.first(),
        next_warm_start: sequence.shifted(),
        sequence,
        stats,
    })
}

/// Receding-horizon wrapper that carries the warm start between calls and
/// derives a fresh seed for every step.
#[derive(Debug, Clone)]
pub struct MppiPlanner {
    mpc: MpcConfig,
    mppi: MppiConfig,
    warm_start: ControlSequence,
    step: u64,
}

fn mix_seed(seed: u64, step: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl MppiPlanner {
    pub fn new(mpc: MpcConfig, mppi: MppiConfig) -> Result<Self, ControlError> {
        mpc.validate()?;
        mppi.validate()?;
        Ok(Self {
            warm_start: ControlSequence::zeros(mpc.horizon),
            mpc,
            mppi,
            step: 0,
        })
    }

    pub fn mpc_config(&self) -> &MpcConfig {
        &self.mpc
    }

    pub fn mppi_config(&self) -> &MppiConfig {
        &self.mppi
    }

    pub fn warm_start(&self) -> &ControlSequence {
        &self.warm_start
    }

    pub fn reset(&mut self) {
        self.warm_start = ControlSequence::zeros(self.mpc.horizon);
        self.step = 0;
    }

    pub fn step(&mut self, x0: &State2D, goal: (f64, f64), img: &TraversabilityImage) -> Result<MppiOutput, ControlError> {
        let mcfg = MppiConfig {
            seed: mix_seed(self.mppi.seed, self.step),
            ..self.mppi
        };
        let out = mppi_step(x0, goal, img, &self.warm_start, &mcfg, &self.mpc)?;
        self.warm_start = out.next_warm_start.clone();
        self.step += 1;
        Ok(out)
    }
}
