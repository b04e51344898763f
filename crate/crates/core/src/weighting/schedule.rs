//! Learning-rate schedules for the weight update.
//!
//! `constant` emits `base_rate` forever; `polynomial` emits
//! `base_rate / (t + 1)^power` with `power > 1`, so the total step size converges
//! to `base_rate * zeta(power)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Polynomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: ScheduleKind,
    pub base_rate: f64,
    #[serde(default = "default_power")]
    pub power: f64,
}

fn default_power() -> f64 {
    1.03
}

impl ScheduleConfig {
    pub fn constant(base_rate: f64) -> Self {
        Self { kind: ScheduleKind::Constant, base_rate, power: default_power() }
    }

    pub fn polynomial(base_rate: f64, power: f64) -> Self {
        Self { kind: ScheduleKind::Polynomial, base_rate, power }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_rate > 0.0 && self.base_rate.is_finite()) {
            return Err(Error::config(format!(
                "schedule base_rate must be positive, got {}",
                self.base_rate
            )));
        }
        if self.kind == ScheduleKind::Polynomial && !(self.power > 1.0 && self.power.is_finite()) {
            return Err(Error::config(format!(
                "polynomial schedule needs power > 1 for a convergent step-size sum, got {}",
                self.power
            )));
        }
        Ok(())
    }

    pub fn rate_at(&self, step: u64) -> f64 {
        match self.kind {
            ScheduleKind::Constant => self.base_rate,
            ScheduleKind::Polynomial => self.base_rate / ((step + 1) as f64).powf(self.power),
        }
    }

    /// Sum of every rate the schedule will ever emit; `None` when it diverges.
    pub fn total_sum(&self) -> Option<f64> {
        match self.kind {
            ScheduleKind::Constant => None,
            ScheduleKind::Polynomial => Some(self.base_rate * riemann_zeta(self.power)),
        }
    }

    pub fn start(self) -> Result<ScheduleState> {
        self.validate()?;
        Ok(ScheduleState { config: self, step: 0 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleState {
    pub config: ScheduleConfig,
    pub step: u64,
}

impl ScheduleState {
    /// Emits the current rate and the advanced state.
    pub fn next_rate(self) -> (f64, ScheduleState) {
        let rate = self.config.rate_at(self.step);
        (rate, ScheduleState { step: self.step + 1, ..self })
    }
}

/// `zeta(s) = sum_{n>=1} n^-s` for `s > 1`, by Euler–Maclaurin summation.
pub fn riemann_zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta diverges for s <= 1");
    const N: usize = 64;
    let head: f64 = (1..N).map(|n| (n as f64).powf(-s)).sum();
    let n = N as f64;
    // Tail: integral + half endpoint + Bernoulli corrections B2, B4, B6.
    let mut tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let bernoulli = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0];
    let mut rising = s; // s (s+1) ... (s + 2j - 2)
    let mut factorial = 2.0;
    let mut power = n.powf(-s - 1.0);
    for (j, b) in bernoulli.iter().enumerate() {
        tail += b / factorial * rising * power;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        factorial *= (m + 3.0) * (m + 4.0);
        power /= n * n;
    }
    head + tail
}
