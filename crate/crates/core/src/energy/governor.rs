//! Frame-rate governor with a hysteresis band on the store voltage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Measured or simulated accuracy at each frame rate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCurve {
    pub points: Vec<(u32, f64)>,
}

impl AccuracyCurve {
    pub fn accuracy_at(&self, fps: u32) -> Option<f64> {
        self.points.iter().find(|(f, _)| *f == fps).map(|&(_, a)| a)
    }

    /// Lowest frame rate reaching `target`.
    pub fn floor_fps(&self, target: f64) -> Option<u32> {
        self.points
            .iter()
            .filter(|(_, a)| *a >= target)
            .map(|&(f, _)| f)
            .min()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GovernorPolicy {
    /// Step down below this store voltage.
    pub v_low: f64,
    /// Step up above this store voltage.
    pub v_high: f64,
    pub min_fps: u32,
    pub max_fps: u32,
    /// Seconds between decisions.
    pub interval: f64,
}

impl Default for GovernorPolicy {
    fn default() -> Self {
        Self {
            v_low: 3.9,
            v_high: 4.7,
            min_fps: 1,
            max_fps: 10,
            interval: 1.0,
        }
    }
}

impl GovernorPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_low < self.v_high)
            || self.min_fps == 0
            || self.min_fps > self.max_fps
            || !(self.interval > 0.0)
        {
            return Err(Error::config(
                "governor needs v_low < v_high, 1 <= min_fps <= max_fps, interval > 0",
            ));
        }
        Ok(())
    }

    /// Raises the lower bound to the cheapest rate meeting `target` on `curve`.
    pub fn with_accuracy_floor(mut self, curve: &AccuracyCurve, target: f64) -> Self {
        if let Some(f) = curve.floor_fps(target) {
            self.min_fps = f.clamp(self.min_fps, self.max_fps);
        }
        self
    }

    /// One decision: a single step down or up outside the band, hold inside.
    pub fn setpoint<T: Scalar>(&self, current: u32, v_store: T) -> u32 {
        let v = v_store.to_f64_lossy();
        let next = if v < self.v_low {
            current.saturating_sub(1)
        } else if v > self.v_high {
            current + 1
        } else {
            current
        };
        next.clamp(self.min_fps, self.max_fps)
    }
}

/// Stateful wrapper deciding once per `interval`.
#[derive(Clone, Debug)]
pub struct Governor {
    policy: GovernorPolicy,
    fps: u32,
    elapsed: f64,
}

impl Governor {
    pub fn new(policy: GovernorPolicy, initial_fps: u32) -> Result<Self> {
        policy.validate()?;
        Ok(Self {
            fps: initial_fps.clamp(policy.min_fps, policy.max_fps),
            policy,
            elapsed: 0.0,
        })
    }

    pub fn fps(&self) -> u32 {
        self.fps
    }

    pub fn policy(&self) -> &GovernorPolicy {
        &self.policy
    }

    pub fn update<T: Scalar>(&mut self, v_store: T, dt: f64) -> u32 {
        self.elapsed += dt;
        if self.elapsed + 1e-9 >= self.policy.interval {
            self.elapsed = 0.0;
            self.fps = self.policy.setpoint(self.fps, v_store);
        }
        self.fps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturates_at_bounds() {
        let mut g = Governor::new(GovernorPolicy::default(), 5).unwrap();
        for _ in 0..30 {
            g.update(5.0f64, 1.0);
        }
        assert_eq!(g.fps(), 10);
        for _ in 0..30 {
            g.update(3.0f64, 1.0);
        }
        assert_eq!(g.fps(), 1);
    }

    #[test]
    fn holds_inside_band() {
        let p = GovernorPolicy::default();
        assert_eq!(p.setpoint(4, 4.3f64), 4);
    }

    #[test]
    fn accuracy_floor() {
        let curve = AccuracyCurve {
            points: vec![(1, 0.4), (3, 0.7), (5, 0.84), (10, 0.9)],
        };
        let p = GovernorPolicy::default().with_accuracy_floor(&curve, 0.8);
        assert_eq!(p.min_fps, 5);
        assert_eq!(curve.accuracy_at(3), Some(0.7));
        assert!(GovernorPolicy {
            v_low: 5.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
