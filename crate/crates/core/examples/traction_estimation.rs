//! Simulates a robot crossing from grass onto a slippery patch and prints
//! the moving-horizon traction estimates as they adapt.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use travnav::estimation::{Estimator, EstimatorConfig};
use travnav::kinodynamics::{ControlInput, State2D};
use travnav::world::{Patch, ProcessNoise, SensorNoise, TractionField, World};

fn main() {
    let field = TractionField::uniform(0.9, 0.9).with_patch(Patch::new((8.0, 0.0), 4.0, 0.3, 0.0));
    let world = World::new(field, ProcessNoise::default(), SensorNoise::default());
    let mut est = Estimator::new(EstimatorConfig::default()).expect("valid config");
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let dt = 0.1;
    let substeps = 10;
    let mut truth = State2D::new(0.0, 0.0, 0.0);
    let mut yaw_rate = 0.0;
    for k in 0..180 {
        let t = k as f64 * dt;
        let u = ControlInput::new(0.8, 0.3 * t.sin());
        let (z, _) = world.sample_sensors(&truth, yaw_rate, t, &mut rng);
        if let Some(sol) = est.on_measurement(z, u).expect("solve") {
            if k % 10 == 0 {
                println!(
                    "t {t:5.1}  true mu {:.2}  est mu {:.3} nu {:.3} offset {:+.3}  ({} iters)",
                    world.traction_at(truth.px, truth.py).mu(),
                    sol.mu,
                    sol.nu,
                    sol.delta_theta,
                    sol.iterations
                );
            }
        }
        for _ in 0..substeps {
            yaw_rate = world.traction_at(truth.px, truth.py).nu() * u.omega;
            est.predict(yaw_rate, u.v, dt / substeps as f64);
            truth = world.sim_step(&truth, &u, dt / substeps as f64, &mut rng);
        }
    }
    let pose = est.pose().unwrap();
    println!(
        "final pose error {:.3} m",
        truth.distance_to(pose.px, pose.py)
    );
}
