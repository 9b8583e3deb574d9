//! Drives the same arc on grass and on ice and prints where each run ends.

use travnav::kinodynamics::{rollout, ControlInput, State2D, TractionParams};

fn main() {
    let start = State2D::new(0.0, 0.0, 0.0);
    let controls = vec![ControlInput::new(1.0, 0.5); 50];
    for (name, mu, nu) in [("grass", 0.9, 0.9), ("mud", 0.4, 0.6), ("ice", 0.1, 0.2)] {
        let p = TractionParams::new(mu, nu);
        let path = rollout(&start, &controls, |_| p, 0.1);
        let end = path.last().unwrap();
        println!(
            "{name:>6}: end ({:6.3}, {:6.3}) heading {:6.3} rad",
            end.px, end.py, end.theta
        );
    }
}
