//! Builds a synthetic trajectory log with traction estimates, projects the
//! future path into each kept frame and writes the dataset.

use travnav::camera::Camera;
use travnav::kinodynamics::State2D;
use travnav::labeling::{generate_labels, lds_weights, write_dataset, LabelingConfig, TrajectoryEntry, TrajectoryLog};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let entries: Vec<TrajectoryEntry> = (0..200)
        .map(|k| {
            let t = k as f64 * 0.1;
            let theta = 0.05 * t;
            let pose = State2D::new(4.0 * theta.sin() / 0.2, 4.0 * (1.0 - theta.cos()) / 0.2, theta);
            let mu = if (6.0..9.0).contains(&t) { 0.25 } else { 0.85 };
            TrajectoryEntry::new(t, pose, mu)
        })
        .collect();
    let log = TrajectoryLog::new(entries)?;
    let cfg = LabelingConfig::default();
    let frames = generate_labels(&log, &Camera::default().ground_lut(), &cfg);
    for f in frames.iter().step_by(8) {
        println!(
            "t {:5.1}: {:6} labeled pixels, centroid {:?}",
            f.time,
            f.label.labeled_count(),
            f.label.mask_centroid().map(|(r, c)| (r.round(), c.round()))
        );
    }
    let labels: Vec<f64> = frames.iter().flat_map(|f| f.label.labeled_values()).map(f64::from).collect();
    let w = lds_weights(&labels, cfg.lds_bins, cfg.lds_sigma)?;
    println!("weight for mu 0.25: {:.3}, for mu 0.85: {:.3}", w.weight_for(0.25), w.weight_for(0.85));

    let out = std::env::temp_dir().join("travnav_labels");
    write_dataset(&out, &frames, &cfg)?;
    println!("{} frames written to {}", frames.len(), out.display());
    Ok(())
}
