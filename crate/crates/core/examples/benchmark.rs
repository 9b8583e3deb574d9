//! Small batch over a few seeds for every controller.
//!
//! `cargo run --release --example benchmark -- [config] [runs]`

use travnav::harness::{run_batch, Config, ControllerKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/snow.toml").into());
    let runs: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let cfg = Config::load(path.as_ref())?;
    let seeds: Vec<u64> = (0..runs).collect();
    let report = run_batch(&cfg, &ControllerKind::ALL, &seeds, None)?;
    print!("{report}");
    Ok(())
}
