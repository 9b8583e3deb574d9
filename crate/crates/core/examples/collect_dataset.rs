//! Drives the scripted collection route, then regenerates labels from the
//! saved log the same way the `labelgen` subcommand does.

use travnav::harness::{collect_dataset, labelgen, write_collection, Config};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/collect.toml").as_ref())?;
    let c = collect_dataset(&cfg, 60.0)?;
    let mus: Vec<f64> = c.log.entries().iter().map(|e| e.mu_label).collect();
    let lo = mus.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("{} log entries, estimated mu in [{lo:.2}, {hi:.2}]", mus.len());

    let dir = std::env::temp_dir().join("travnav_collect");
    write_collection(&dir, &cfg, &c)?;
    let frames = labelgen(&dir, &dir.join("relabeled"))?;
    println!("{} frames collected, {} regenerated under {}", c.frames.len(), frames.len(), dir.display());
    Ok(())
}
