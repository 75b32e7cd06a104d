use serde::{Deserialize, Serialize};

/// Multiplicative δ ramp: constant for `delay` iterations, then multiplied by
/// `rate` every `step` iterations, capped at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaScheduler {
    pub initial: f64,
    pub delay: u64,
    pub step: u64,
    pub rate: f64,
}

impl DeltaScheduler {
    pub fn value(&self, iteration: u64) -> f64 {
        if iteration < self.delay {
            return self.initial.min(1.0);
        }
        let m = (iteration - self.delay) / self.step.max(1) + 1;
        let v = self.initial * self.rate.powi(m.min(i32::MAX as u64) as i32);
        if v.is_finite() {
            v.min(1.0)
        } else {
            1.0
        }
    }

    /// First iteration at which the schedule reaches the cap.
    pub fn iterations_to_cap(&self) -> Option<u64> {
        if self.initial >= 1.0 {
            return Some(0);
        }
        if self.rate <= 1.0 {
            return None;
        }
        let m = ((1.0 / self.initial).ln() / self.rate.ln()).ceil() as u64;
        let mut i = self.delay + (m.saturating_sub(1)) * self.step.max(1);
        // Guard against rounding in the closed form.
        while self.value(i) < 1.0 {
            i += 1;
        }
        while i > 0 && self.value(i - 1) >= 1.0 {
            i -= 1;
        }
        Some(i)
    }
}
