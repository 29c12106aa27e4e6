//! Simulated time in integer microseconds, quantized to the simulation step.

use std::fmt;
use std::ops::{Add, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    /// Rounds to the nearest microsecond.
    pub fn from_secs(s: f64) -> Self {
        SimTime((s * 1e6).round().max(0.0) as u64)
    }

    pub fn micros(self) -> u64 {
        self.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_secs())
    }
}

/// The simulation time step; sampled durations snap to multiples of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    quantum_us: u64,
}

impl TimeGrid {
    pub fn new(step_secs: f64) -> Result<Self> {
        let quantum_us = (step_secs * 1e6).round();
        if !(quantum_us >= 1.0) || !quantum_us.is_finite() {
            return Err(Error::InvalidScenario(format!("time step {step_secs} s is below 1 us")));
        }
        Ok(Self {
            quantum_us: quantum_us as u64,
        })
    }

    pub fn quantum(&self) -> SimTime {
        SimTime(self.quantum_us)
    }

    /// Nearest grid point to `secs`.
    pub fn snap(&self, secs: f64) -> SimTime {
        let steps = (secs * 1e6 / self.quantum_us as f64).round().max(0.0) as u64;
        SimTime(steps * self.quantum_us)
    }

    /// A strictly positive duration on the grid.
    pub fn duration(&self, secs: f64) -> SimTime {
        let t = self.snap(secs);
        if t.0 == 0 {
            SimTime(self.quantum_us)
        } else {
            t
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping() {
        let g = TimeGrid::new(0.01).unwrap();
        assert_eq!(g.snap(5.004), SimTime::from_micros(5_000_000));
        assert_eq!(g.snap(5.006), SimTime::from_micros(5_010_000));
        assert_eq!(g.duration(0.001), SimTime::from_micros(10_000));
        assert!(TimeGrid::new(0.0).is_err());
        assert_eq!(SimTime::from_micros(12_340_000).to_string(), "12.34");
    }
}
