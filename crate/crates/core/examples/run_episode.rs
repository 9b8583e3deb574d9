//! Runs one forest episode per controller and prints the outcomes.
//!
//! `cargo run --release --example run_episode -- [config] [seed]`

use travnav::harness::{run_episode, Config, ControllerKind, EpisodeOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/forest.toml").into());
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let mut cfg = Config::load(path.as_ref())?;
    cfg.episode.seed = seed;
    for kind in ControllerKind::ALL {
        cfg.episode.controller = kind;
        let (r, trace) = run_episode(&cfg, &EpisodeOptions::default())?;
        let mhe_steps = trace.records.iter().filter(|s| s.mhe_mu.is_some()).count();
        println!(
            "{:>9}: {:7} in {:5.1} s, path {:5.2} m, {:5.2} m from goal, low-traction depth {:.2} m, {} estimator solves",
            kind.name(),
            r.outcome.name(),
            r.elapsed,
            r.path_length,
            r.final_distance,
            r.max_low_mu_depth,
            mhe_steps
        );
    }
    Ok(())
}
