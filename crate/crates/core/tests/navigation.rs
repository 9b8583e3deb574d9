use travnav::harness::{collect_dataset, run_episode, Config, ControllerKind, EpisodeOptions, Outcome};
use travnav::world::{Patch, ProcessNoise, SensorNoise};

fn blocked_route() -> Config {
    let mut cfg = Config::default();
    cfg.episode.start = [0.0, 0.0, 0.0];
    cfg.episode.goal = [7.0, 0.0];
    cfg.episode.time_budget = 30.0;
    cfg.mppi.num_samples = 512;
    cfg.world.patches.push(Patch::new((3.5, 0.0), 0.6, 0.0, 0.0));
    cfg
}

#[test]
fn planner_keeps_out_of_stuck_disk() {
    let mut cfg = blocked_route();
    for seed in 0..20 {
        cfg.episode.seed = seed;
        let (r, trace) = run_episode(&cfg, &EpisodeOptions::default()).unwrap();
        let clearance = trace
            .path
            .iter()
            .map(|s| s.distance_to(3.5, 0.0))
            .fold(f64::INFINITY, f64::min);
        assert!(clearance > 0.6, "seed {seed}: came within {clearance:.3} m");
        assert_eq!(r.outcome, Outcome::Reached, "seed {seed}");
    }
}

#[test]
fn blind_controller_drives_into_disk() {
    let mut cfg = blocked_route();
    cfg.episode.controller = ControllerKind::Blind;
    let (r, _) = run_episode(&cfg, &EpisodeOptions::default()).unwrap();
    assert_eq!(r.outcome, Outcome::Stuck);
}

fn quiet(mu: f64) -> Config {
    let mut cfg = Config::default();
    cfg.world.base_mu = mu;
    cfg.world.process_noise = ProcessNoise::NONE;
    cfg.world.sensor_noise = SensorNoise::NONE;
    cfg.collect.control_noise = [0.0, 0.0];
    cfg.episode.start = [0.0, 0.0, 0.0];
    cfg
}

#[test]
fn minute_of_collection_at_two_fps() {
    let c = collect_dataset(&quiet(0.8), 60.0).unwrap();
    assert!(c.frames.len() <= 121);
    assert!(c.frames.len() >= 100);
}

#[test]
fn uniform_world_labels_match_traction() {
    let c = collect_dataset(&quiet(0.8), 40.0).unwrap();
    let mut n = 0;
    for f in &c.frames {
        for v in f.label.labeled_values() {
            assert!((0.75..=0.85).contains(&v), "label {v}");
            n += 1;
        }
    }
    assert!(n > 0);
}

#[test]
fn stuck_patch_yields_failure_labels() {
    let cfg = Config::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/collect.toml").as_ref()).unwrap();
    let c = collect_dataset(&cfg, 90.0).unwrap();
    let low = c
        .frames
        .iter()
        .flat_map(|f| f.label.labeled_values())
        .filter(|&v| v <= 0.1)
        .count();
    assert!(low > 0);
}
