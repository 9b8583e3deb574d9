//! One sampling MPC step in front of a slippery patch, then a short closed
//! loop that steers around it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use travnav::camera::{render_oracle_image, Camera, RenderSettings};
use travnav::control::{mppi_step, ControlSequence, MpcConfig, MppiConfig, MppiPlanner};
use travnav::kinodynamics::{integrate_step, State2D};
use travnav::world::{Patch, TractionField};

fn main() {
    let field = TractionField::uniform(0.9, 0.9).with_patch(Patch::new((3.0, 0.0), 1.0, 0.05, 0.0));
    let lut = Camera::default().ground_lut();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let goal = (8.0, 0.0);
    let mpc = MpcConfig::default();
    let mppi = MppiConfig::default();

    let x0 = State2D::new(0.0, 0.0, 0.0);
    let img = render_oracle_image(&x0, &field, &lut, &RenderSettings::default(), &mut rng);
    let warm = ControlSequence::zeros(mpc.horizon);
    let t = Instant::now();
    let out = mppi_step(&x0, goal, &img, &warm, &mppi, &mpc).expect("valid configuration");
    println!(
        "K = {}: {:.1} ms, first control v {:.3} w {:+.3}, min cost {:.2}, entropy {:.2}",
        mppi.num_samples,
        t.elapsed().as_secs_f64() * 1e3,
        out.applied.v,
        out.applied.omega,
        out.stats.min_cost,
        out.stats.weight_entropy
    );

    let mut planner = MppiPlanner::new(mpc, MppiConfig { num_samples: 512, ..mppi }).unwrap();
    let mut x = x0;
    for k in 0..120 {
        let img = render_oracle_image(&x, &field, &lut, &RenderSettings::default(), &mut rng);
        let u = planner.step(&x, goal, &img).unwrap().applied;
        let p = field.traction_at(x.px, x.py);
        for _ in 0..10 {
            x = integrate_step(&x, &u, &p, 0.01);
        }
        if k % 10 == 0 {
            println!("t {:4.1}: ({:5.2}, {:+5.2}) mu {:.2}", k as f64 * 0.1, x.px, x.py, p.mu());
        }
        if x.distance_to(goal.0, goal.1) < 0.5 {
            println!("reached goal at t {:.1}", k as f64 * 0.1);
            break;
        }
    }
}
