//! Self-supervised label generation.
//!
//! The path the robot actually drove, annotated with the traction it
//! experienced, is projected into the images captured before it got there.
//! The result is a sparse label image per kept frame, a label-distribution
//! smoothing (LDS) reweighting that boosts rare low-traction labels, and a
//! sparse weighted L1 loss for scoring any predictor against the labels.

use crate::camera::{world_to_robot, write_pgm, GroundLut, TraversabilityImage};
use crate::kinodynamics::State2D;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{self, BufWriter};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabelingError {
    #[error("label set is empty")]
    EmptyLabels,
    #[error("need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("label {0} outside [0, 1]")]
    LabelOutOfRange(f64),
    #[error("dimension mismatch: prediction {pred:?} vs label {label:?}")]
    DimensionMismatch { pred: (usize, usize), label: (usize, usize) },
    #[error("trajectory timestamps must be strictly increasing (at entry {0})")]
    NonMonotonicLog(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub timestamp: f64,
    pub px: f64,
    pub py: f64,
    pub theta: f64,
    pub mu_label: f64,
}

impl TrajectoryEntry {
    pub fn new(timestamp: f64, pose: State2D, mu_label: f64) -> Self {
        Self {
            timestamp,
            px: pose.px,
            py: pose.py,
            theta: pose.theta,
            mu_label,
        }
    }

    pub fn pose(&self) -> State2D {
        State2D {
            px: self.px,
            py: self.py,
            theta: self.theta,
        }
    }
}

/// Recorded poses and traction labels, strictly increasing in time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    entries: Vec<TrajectoryEntry>,
}

impl TrajectoryLog {
    pub fn new(entries: Vec<TrajectoryEntry>) -> Result<Self, LabelingError> {
        if let Some(i) = entries
            .windows(2)
            .position(|w| !(w[1].timestamp > w[0].timestamp))
        {
            return Err(LabelingError::NonMonotonicLog(i + 1));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[TrajectoryEntry] {
        &self.entries
    }

    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.timestamp).collect()
    }

    /// Entries at or after `t`.
    pub fn from_time(&self, t: f64) -> &[TrajectoryEntry] {
        let start = self.entries.partition_point(|e| e.timestamp < t);
        &self.entries[start..]
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), LabelingError> {
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, LabelingError> {
        let mut r = csv::Reader::from_path(path)?;
        let entries: Result<Vec<TrajectoryEntry>, _> = r.deserialize().collect();
        Self::new(entries?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelingConfig {
    /// Frames kept per second after downsampling.
    pub target_rate: f64,
    /// Width of the projected wheel track, meters.
    pub track_width: f64,
    /// Only path within this distance of the frame pose is projected.
    pub horizon: f64,
    pub lds_bins: usize,
    /// Gaussian smoothing kernel width, in bins.
    pub lds_sigma: f64,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        Self {
            target_rate: 2.0,
            track_width: 0.4,
            horizon: 5.0,
            lds_bins: 20,
            lds_sigma: 2.0,
        }
    }
}

/// Greedy frame selection: the first frame is kept, then any frame at least
/// `1 / target_rate` seconds after the last kept one.
pub fn downsample_frames(frame_times: &[f64], target_rate: f64) -> Vec<usize> {
    const EPS: f64 = 1e-9;
    let period = 1.0 / target_rate;
    let mut kept = Vec::new();
    let mut last: Option<f64> = None;
    for (i, &t) in frame_times.iter().enumerate() {
        if last.is_none_or(|l| t - l >= period - EPS) {
            kept.push(i);
            last = Some(t);
        }
    }
    kept
}

/// Sparse label image: `values` are meaningful only where `mask` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
    pub mask: Vec<bool>,
    pub source_frame_time: f64,
}

impl LabelImage {
    pub fn empty(width: usize, height: usize, source_frame_time: f64) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
            mask: vec![false; width * height],
            source_frame_time,
        }
    }

    pub fn labeled_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn is_labeled(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.width + col]
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f32> {
        let i = row * self.width + col;
        self.mask[i].then(|| self.values[i])
    }

    /// Mean `(u, v)` of labeled pixels.
    pub fn mask_centroid(&self) -> Option<(f64, f64)> {
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
        for (i, m) in self.mask.iter().enumerate() {
            if *m {
                su += (i % self.width) as f64;
                sv += (i / self.width) as f64;
                n += 1;
            }
        }
        (n > 0).then(|| (su / n as f64, sv / n as f64))
    }

    pub fn labeled_values(&self) -> impl Iterator<Item = f32> + '_ {
        self.values.iter().zip(&self.mask).filter(|(_, m)| **m).map(|(v, _)| *v)
    }
}

struct Segment {
    a: (f64, f64),
    b: (f64, f64),
    label: f32,
    bbox: [f64; 4],
}

impl Segment {
    fn new(a: (f64, f64), b: (f64, f64), label: f64, half_width: f64) -> Self {
        let bbox = [
            a.0.min(b.0) - half_width,
            a.0.max(b.0) + half_width,
            a.1.min(b.1) - half_width,
            a.1.max(b.1) + half_width,
        ];
        Self {
            a,
            b,
            label: label.clamp(0.0, 1.0) as f32,
            bbox,
        }
    }

    fn distance2(&self, p: (f64, f64)) -> f64 {
        let dx = self.b.0 - self.a.0;
        let dy = self.b.1 - self.a.1;
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((p.0 - self.a.0) * dx + (p.1 - self.a.1) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let ex = self.a.0 + t * dx - p.0;
        let ey = self.a.1 + t * dy - p.1;
        ex * ex + ey * ey
    }
}

/// Rasterizes the future path as a ribbon of width `track_width` into the
/// image of a frame captured at `frame_pose`. Each segment joins consecutive
/// poses and carries the label of its first pose; where segments overlap the
/// later one wins. Projection stops at the first pose farther than `horizon`
/// from the frame pose.
pub fn project_path_labels(
    frame_pose: &State2D,
    frame_time: f64,
    future: &[TrajectoryEntry],
    lut: &GroundLut,
    config: &LabelingConfig,
) -> LabelImage {
    let camera = lut.camera();
    let mut image = LabelImage::empty(camera.width(), camera.height(), frame_time);
    let half = 0.5 * config.track_width;
    let in_horizon = future
        .iter()
        .take_while(|e| frame_pose.distance_to(e.px, e.py) <= config.horizon)
        .count();
    let path = &future[..in_horizon];
    if path.is_empty() {
        return image;
    }
    let local: Vec<(f64, f64)> = path.iter().map(|e| world_to_robot((e.px, e.py), frame_pose)).collect();
    let segments: Vec<Segment> = if local.len() == 1 {
        vec![Segment::new(local[0], local[0], path[0].mu_label, half)]
    } else {
        (0..local.len() - 1)
            .map(|i| Segment::new(local[i], local[i + 1], path[i].mu_label, half))
            .collect()
    };
    let bbox = segments.iter().fold(
        [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY],
        |acc, s| [acc[0].min(s.bbox[0]), acc[1].max(s.bbox[1]), acc[2].min(s.bbox[2]), acc[3].max(s.bbox[3])],
    );
    let half2 = half * half;
    for (i, cell) in lut.cells().iter().enumerate() {
        let Some([f, l]) = cell else { continue };
        if *f < bbox[0] || *f > bbox[1] || *l < bbox[2] || *l > bbox[3] {
            continue;
        }
        let p = (*f, *l);
        let hit = segments.iter().rev().find(|s| {
            p.0 >= s.bbox[0] && p.0 <= s.bbox[1] && p.1 >= s.bbox[2] && p.1 <= s.bbox[3] && s.distance2(p) <= half2
        });
        if let Some(s) = hit {
            image.values[i] = s.label;
            image.mask[i] = true;
        }
    }
    image
}

/// Per-bin inverse-density weights from label distribution smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct LdsWeighting {
    pub bin_edges: Vec<f64>,
    pub effective_density: Vec<f64>,
    pub weight_per_bin: Vec<f64>,
}

impl LdsWeighting {
    /// Uniform weights, useful as a neutral loss weighting.
    pub fn uniform(bins: usize) -> Self {
        Self {
            bin_edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
            effective_density: vec![1.0 / bins as f64; bins],
            weight_per_bin: vec![1.0; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.weight_per_bin.len()
    }

    pub fn bin_of(&self, label: f64) -> usize {
        bin_index(label, self.bins())
    }

    pub fn weight_for(&self, label: f64) -> f64 {
        self.weight_per_bin[self.bin_of(label)]
    }
}

fn bin_index(label: f64, bins: usize) -> usize {
    ((label * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

/// Histograms labels into `bins` bins on `[0, 1]`, smooths with a discrete
/// Gaussian truncated at 3 sigma (renormalized where it hangs off the edges)
/// and weights bins by inverse effective density, normalized to mean 1 over
/// occupied bins. `sigma_bins = 0` disables smoothing.
pub fn lds_weights(labels: &[f64], bins: usize, sigma_bins: f64) -> Result<LdsWeighting, LabelingError> {
    if bins < 2 {
        return Err(LabelingError::TooFewBins(bins));
    }
    if labels.is_empty() {
        return Err(LabelingError::EmptyLabels);
    }
    if let Some(&bad) = labels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(LabelingError::LabelOutOfRange(bad));
    }
    let mut hist = vec![0.0; bins];
    for &l in labels {
        hist[bin_index(l, bins)] += 1.0;
    }
    let total = labels.len() as f64;
    hist.iter_mut().for_each(|h| *h /= total);

    let radius = if sigma_bins > 0.0 { (3.0 * sigma_bins).ceil() as i64 } else { 0 };
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| {
            if sigma_bins > 0.0 {
                (-(k * k) as f64 / (2.0 * sigma_bins * sigma_bins)).exp()
            } else {
                1.0
            }
        })
        .collect();
    let effective_density: Vec<f64> = (0..bins as i64)
        .map(|b| {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (ki, k) in (-radius..=radius).enumerate() {
                let j = b + k;
                if (0..bins as i64).contains(&j) {
                    acc += kernel[ki] * hist[j as usize];
                    norm += kernel[ki];
                }
            }
            acc / norm
        })
        .collect();

    let occupied: Vec<usize> = (0..bins).filter(|&b| hist[b] > 0.0).collect();
    let raw: Vec<f64> = effective_density
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { f64::NAN })
        .collect();
    let mean = occupied.iter().map(|&b| raw[b]).sum::<f64>() / occupied.len() as f64;
    let max_weight = occupied.iter().map(|&b| raw[b] / mean).fold(0.0, f64::max);
    let weight_per_bin = raw
        .iter()
        .map(|&w| if w.is_finite() { w / mean } else { max_weight })
        .collect();
    Ok(LdsWeighting {
        bin_edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
        effective_density,
        weight_per_bin,
    })
}

/// Mean over labeled pixels of `weight(label) * |prediction - label|`; zero
/// when nothing is labeled.
pub fn sparse_l1_loss(
    prediction: &TraversabilityImage,
    label: &LabelImage,
    weights: &LdsWeighting,
) -> Result<f64, LabelingError> {
    if prediction.width() != label.width || prediction.height() != label.height {
        return Err(LabelingError::DimensionMismatch {
            pred: (prediction.width(), prediction.height()),
            label: (label.width, label.height),
        });
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for ((p, l), m) in prediction.values().iter().zip(&label.values).zip(&label.mask) {
        if *m {
            let l = f64::from(*l);
            sum += weights.weight_for(l) * (f64::from(*p) - l).abs();
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// One downsampled frame with its projected labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    /// Index of the frame in the original stream.
    pub source_index: usize,
    pub time: f64,
    pub pose: State2D,
    pub label: LabelImage,
}

/// Downsamples the log's frame stream and projects the future path into every
/// kept frame. Frames are taken at the log's own timestamps.
pub fn generate_labels(log: &TrajectoryLog, lut: &GroundLut, config: &LabelingConfig) -> Vec<LabeledFrame> {
    let times = log.times();
    let kept = downsample_frames(&times, config.target_rate);
    kept.par_iter()
        .map(|&i| {
            let entry = log.entries()[i];
            let future = &log.entries()[i..];
            LabeledFrame {
                source_index: i,
                time: entry.timestamp,
                pose: entry.pose(),
                label: project_path_labels(&entry.pose(), entry.timestamp, future, lut, config),
            }
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexRow {
    frame: usize,
    time: f64,
    px: f64,
    py: f64,
    theta: f64,
    label_file: String,
    mask_file: String,
    labeled_pixels: usize,
}

/// Writes a dataset directory:
///
/// ```text
/// <out>/index.csv              frame,time,px,py,theta,label_file,mask_file,labeled_pixels
/// <out>/labels/frame_NNNNN.pgm label values scaled to 0..255 (0 where unlabeled)
/// <out>/masks/frame_NNNNN.pgm  255 where labeled, 0 elsewhere
/// <out>/weights.csv            bin_low,bin_high,effective_density,weight
/// ```
pub fn write_dataset(out: &Path, frames: &[LabeledFrame], config: &LabelingConfig) -> Result<(), LabelingError> {
    fs::create_dir_all(out.join("labels"))?;
    fs::create_dir_all(out.join("masks"))?;
    let mut index = csv::Writer::from_path(out.join("index.csv"))?;
    for (k, f) in frames.iter().enumerate() {
        let label_file = format!("labels/frame_{k:05}.pgm");
        let mask_file = format!("masks/frame_{k:05}.pgm");
        let lbl = &f.label;
        write_pgm(
            BufWriter::new(fs::File::create(out.join(&label_file))?),
            lbl.width,
            lbl.height,
            lbl.values.iter().zip(&lbl.mask).map(|(v, m)| if *m { *v } else { 0.0 }),
        )?;
        write_pgm(
            BufWriter::new(fs::File::create(out.join(&mask_file))?),
            lbl.width,
            lbl.height,
            lbl.mask.iter().map(|m| if *m { 1.0 } else { 0.0 }),
        )?;
        index.serialize(IndexRow {
            frame: k,
            time: f.time,
            px: f.pose.px,
            py: f.pose.py,
            theta: f.pose.theta,
            label_file,
            mask_file,
            labeled_pixels: lbl.labeled_count(),
        })?;
    }
    index.flush()?;

    let all: Vec<f64> = frames
        .iter()
        .flat_map(|f| f.label.labeled_values().map(f64::from))
        .collect();
    let mut w = csv::Writer::from_path(out.join("weights.csv"))?;
    w.write_record(["bin_low", "bin_high", "effective_density", "weight"])?;
    if let Ok(lds) = lds_weights(&all, config.lds_bins, config.lds_sigma) {
        for b in 0..lds.bins() {
            w.write_record([
                lds.bin_edges[b].to_string(),
                lds.bin_edges[b + 1].to_string(),
                lds.effective_density[b].to_string(),
                lds.weight_per_bin[b].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Camera;

    #[test]
    fn downsample_regular_stream() {
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        let kept = downsample_frames(&times, 2.0);
        let kept_times: Vec<f64> = kept.iter().map(|&i| times[i]).collect();
        let expected = [0.0, 0.5, 1.0, 1.5, 2.0];
        assert_eq!(kept_times.len(), expected.len());
        for (a, b) in kept_times.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn downsample_edge_cases() {
        assert_eq!(downsample_frames(&[], 2.0), Vec::<usize>::new());
        assert_eq!(downsample_frames(&[3.0], 2.0), vec![0]);
        assert_eq!(downsample_frames(&[0.0, 0.4, 0.6, 1.2], 2.0), vec![0, 2, 3]);
    }

    #[test]
    fn log_rejects_non_increasing_times() {
        let e = |t| TrajectoryEntry::new(t, State2D::default(), 1.0);
        assert!(TrajectoryLog::new(vec![e(0.0), e(0.1)]).is_ok());
        assert!(matches!(
            TrajectoryLog::new(vec![e(0.0), e(0.1), e(0.1)]),
            Err(LabelingError::NonMonotonicLog(2))
        ));
    }

    #[test]
    fn lds_uniform_histogram_gives_unit_weights() {
        let labels: Vec<f64> = (0..10).map(|b| b as f64 / 10.0 + 0.05).collect();
        let lds = lds_weights(&labels, 10, 2.0).unwrap();
        for w in &lds.weight_per_bin {
            assert!((w - 1.0).abs() < 1e-12, "{w}");
        }
    }

    #[test]
    fn lds_rare_failures_weigh_more() {
        let mut labels = vec![0.98; 90];
        labels.extend(vec![0.02; 10]);
        let lds = lds_weights(&labels, 10, 2.0).unwrap();
        assert!(lds.weight_for(0.02) > lds.weight_for(0.98));
    }

    #[test]
    fn lds_two_bin_hand_computation() {
        let mut labels = vec![0.25; 9];
        labels.push(0.75);
        let lds = lds_weights(&labels, 2, 0.0).unwrap();
        assert!((lds.weight_per_bin[0] - 0.2).abs() < 1e-12);
        assert!((lds.weight_per_bin[1] - 1.8).abs() < 1e-12);
    }

    #[test]
    fn lds_input_errors() {
        assert!(matches!(lds_weights(&[], 10, 2.0), Err(LabelingError::EmptyLabels)));
        assert!(matches!(lds_weights(&[0.5], 1, 2.0), Err(LabelingError::TooFewBins(1))));
        assert!(matches!(lds_weights(&[1.5], 10, 2.0), Err(LabelingError::LabelOutOfRange(_))));
    }

    #[test]
    fn lds_weights_positive_even_for_empty_bins() {
        let labels = vec![0.0, 0.0, 1.0];
        let lds = lds_weights(&labels, 20, 0.0).unwrap();
        assert!(lds.weight_per_bin.iter().all(|w| *w > 0.0));
    }

    fn masked(values: Vec<f32>, mask: Vec<bool>, w: usize) -> LabelImage {
        LabelImage {
            width: w,
            height: values.len() / w,
            values,
            mask,
            source_frame_time: 0.0,
        }
    }

    #[test]
    fn sparse_loss_examples() {
        let cam = Camera::default();
        let uniform = LdsWeighting::uniform(20);
        let label = masked(vec![1.0, 0.5, 0.8, 0.0], vec![true, true, false, true], 2);
        let pred = TraversabilityImage::from_values(cam, State2D::default(), 2, 2, vec![1.0, 0.5, 0.1, 0.0]);
        assert_eq!(sparse_l1_loss(&pred, &label, &uniform).unwrap(), 0.0);

        let label = masked(vec![1.0; 4], vec![true, true, false, true], 2);
        let zero = TraversabilityImage::from_values(cam, State2D::default(), 2, 2, vec![0.0; 4]);
        assert!((sparse_l1_loss(&zero, &label, &uniform).unwrap() - 1.0).abs() < 1e-12);

        let label = masked(vec![0.5; 4], vec![true; 4], 2);
        let half_off = TraversabilityImage::from_values(cam, State2D::default(), 2, 2, vec![0.7, 0.5, 0.3, 0.5]);
        assert!((sparse_l1_loss(&half_off, &label, &uniform).unwrap() - 0.1).abs() < 1e-6);

        let empty = masked(vec![0.5; 4], vec![false; 4], 2);
        assert_eq!(sparse_l1_loss(&half_off, &empty, &uniform).unwrap(), 0.0);

        let wrong = masked(vec![0.5; 6], vec![true; 6], 3);
        assert!(matches!(
            sparse_l1_loss(&half_off, &wrong, &uniform),
            Err(LabelingError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn path_behind_camera_gives_empty_mask() {
        let lut = Camera::default().ground_lut();
        let future: Vec<TrajectoryEntry> = (0..10)
            .map(|k| TrajectoryEntry::new(k as f64 * 0.1, State2D::new(-0.5 - 0.1 * k as f64, 0.0, 0.0), 1.0))
            .collect();
        let img = project_path_labels(&State2D::default(), 0.0, &future, &lut, &LabelingConfig::default());
        assert_eq!(img.labeled_count(), 0);
        let empty = project_path_labels(&State2D::default(), 0.0, &[], &lut, &LabelingConfig::default());
        assert_eq!(empty.labeled_count(), 0);
    }

    #[test]
    fn straight_path_gives_centered_tapered_ribbon() {
        let lut = Camera::default().ground_lut();
        let future: Vec<TrajectoryEntry> = (0..50)
            .map(|k| TrajectoryEntry::new(k as f64 * 0.1, State2D::new(0.1 * k as f64, 0.0, 0.0), 1.0))
            .collect();
        let img = project_path_labels(&State2D::default(), 0.0, &future, &lut, &LabelingConfig::default());
        assert!(img.labeled_count() > 0);
        let (cu, _) = img.mask_centroid().unwrap();
        assert!((cu - lut.camera().intrinsics.cx).abs() < 1.0);
        let row_width = |row: usize| (0..img.width).filter(|&c| img.is_labeled(row, c)).count();
        let bottom = row_width(img.height - 1);
        let labeled_rows: Vec<usize> = (0..img.height).filter(|&r| row_width(r) > 0).collect();
        let top = row_width(labeled_rows[0]);
        assert!(bottom > 2 * top, "bottom {bottom} top {top}");
        assert!(img.labeled_values().all(|v| v == 1.0));
    }

    #[test]
    fn later_segments_win_on_overlap() {
        let lut = Camera::default().ground_lut();
        // drive out and come back over the same ground with a lower label
        let mut future = Vec::new();
        for k in 0..=20 {
            future.push(TrajectoryEntry::new(k as f64 * 0.1, State2D::new(1.5 + 0.1 * k as f64, 0.0, 0.0), 1.0));
        }
        for k in 0..=10 {
            future.push(TrajectoryEntry::new(2.1 + k as f64 * 0.1, State2D::new(3.5 - 0.1 * k as f64, 0.0, 0.0), 0.3));
        }
        let img = project_path_labels(&State2D::default(), 0.0, &future, &lut, &LabelingConfig::default());
        let p = lut.camera().project_ground_point((3.0, 0.0), &State2D::default()).unwrap();
        let v = img.value(p.1.round() as usize, p.0.round() as usize).unwrap();
        assert!((v - 0.3).abs() < 1e-6);
        let q = lut.camera().project_ground_point((2.0, 0.0), &State2D::default()).unwrap();
        assert_eq!(img.value(q.1.round() as usize, q.0.round() as usize), Some(1.0));
    }

    #[test]
    fn stationary_robot_labels_its_footprint() {
        let lut = Camera::default().ground_lut();
        let spot = State2D::new(2.5, 0.0, 0.0);
        let future = vec![
            TrajectoryEntry::new(0.0, spot, 0.0),
            TrajectoryEntry::new(0.1, spot, 0.0),
        ];
        let img = project_path_labels(&State2D::default(), 0.0, &future, &lut, &LabelingConfig::default());
        assert!(img.labeled_count() > 0);
        assert!(img.labeled_values().all(|v| v == 0.0));
    }
}
