use crate::kinodynamics::ControlInput;
use crate::world::MeasurementSample;
use std::collections::VecDeque;

/// Fixed-capacity ring buffer of `(measurement, applied control)` pairs,
/// oldest first. The control at index `i` acts between samples `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementWindow {
    capacity: usize,
    dt: f64,
    samples: VecDeque<(MeasurementSample, ControlInput)>,
}

impl MeasurementWindow {
    /// A window for a horizon of `horizon` steps holds `horizon + 1` samples.
    pub fn new(horizon: usize, dt: f64) -> Self {
        Self {
            capacity: horizon + 1,
            dt,
            samples: VecDeque::with_capacity(horizon + 1),
        }
    }

    pub fn from_samples(horizon: usize, dt: f64, samples: impl IntoIterator<Item = (MeasurementSample, ControlInput)>) -> Self {
        let mut w = Self::new(horizon, dt);
        for (z, u) in samples {
            w.push(z, u);
        }
        w
    }

    pub fn push(&mut self, sample: MeasurementSample, control: ControlInput) {
        debug_assert!(self
            .samples
            .back()
            .is_none_or(|(last, _)| sample.timestamp > last.timestamp));
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back((sample, control));
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() == self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.capacity - 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn iter(&self) -> impl Iterator<Item = &(MeasurementSample, ControlInput)> {
        self.samples.iter()
    }

    pub fn measurement(&self, i: usize) -> &MeasurementSample {
        &self.samples[i].0
    }

    pub fn control(&self, i: usize) -> &ControlInput {
        &self.samples[i].1
    }

    /// Timestamp of the oldest sample.
    pub fn start_time(&self) -> Option<f64> {
        self.samples.front().map(|(z, _)| z.timestamp)
    }

    /// Timestamp of the newest sample.
    pub fn end_time(&self) -> Option<f64> {
        self.samples.back().map(|(z, _)| z.timestamp)
    }

    /// Mean absolute commanded yaw rate over the controls that act inside
    /// the window.
    pub fn mean_abs_omega(&self) -> f64 {
        let n = self.samples.len().saturating_sub(1);
        if n == 0 {
            return 0.0;
        }
        self.samples.iter().take(n).map(|(_, u)| u.omega.abs()).sum::<f64>() / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64) -> MeasurementSample {
        MeasurementSample {
            timestamp: t,
            ..Default::default()
        }
    }

    #[test]
    fn ring_buffer_keeps_latest() {
        let mut w = MeasurementWindow::new(4, 0.1);
        for k in 0..7 {
            w.push(sample(k as f64 * 0.1), ControlInput::new(1.0, k as f64));
            assert_eq!(w.is_full(), k >= 4);
        }
        assert_eq!(w.len(), 5);
        assert!((w.start_time().unwrap() - 0.2).abs() < 1e-12);
        assert!((w.end_time().unwrap() - 0.6).abs() < 1e-12);
        let times: Vec<f64> = w.iter().map(|(z, _)| z.timestamp).collect();
        assert!(times.windows(2).all(|p| p[0] < p[1]));
        // last control is excluded from the excitation measure
        assert!((w.mean_abs_omega() - (2.0 + 3.0 + 4.0 + 5.0) / 4.0).abs() < 1e-12);
    }
}
