use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Camera plus processor load, affine in the number of measurements.
///
/// Stored around a reference point so that the energy at
/// `reference_measurements` is exactly `reference_energy`:
/// `E(M) = reference_energy + per_measurement · (M − reference_measurements)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct LoadModel<T> {
    pub reference_measurements: usize,
    /// Energy per frame at the reference point, J.
    pub reference_energy: T,
    /// Incremental energy per measurement, J.
    pub per_measurement: T,
    /// Operating measurement count.
    pub measurements: usize,
    pub fps: T,
}

impl<T: Scalar> Default for LoadModel<T> {
    fn default() -> Self {
        Self {
            reference_measurements: 400,
            reference_energy: T::lit(0.095),
            per_measurement: T::lit(50e-6),
            measurements: 400,
            fps: T::lit(10.0),
        }
    }
}

impl<T: Scalar> LoadModel<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.per_measurement >= T::zero())
            || !(self.e0() >= T::zero())
            || !(self.fps >= T::zero())
        {
            return Err(Error::config(
                "load energies and frame rate must be non-negative",
            ));
        }
        Ok(())
    }

    /// Fixed energy per frame (the `M = 0` intercept).
    pub fn e0(&self) -> T {
        self.reference_energy
            - self.per_measurement * T::from_usize_lossy(self.reference_measurements)
    }

    pub fn energy_per_frame(&self, m: usize) -> T {
        let delta =
            T::from_usize_lossy(m.abs_diff(self.reference_measurements)) * self.per_measurement;
        if m >= self.reference_measurements {
            self.reference_energy + delta
        } else {
            self.reference_energy - delta
        }
    }

    /// Average load power at the operating point, W.
    pub fn power(&self) -> T {
        self.power_at(self.fps)
    }

    pub fn power_at(&self, fps: T) -> T {
        fps * self.energy_per_frame(self.measurements)
    }

    pub fn with_fps(&self, fps: T) -> Self {
        Self { fps, ..*self }
    }
}
