//! Single-diode photovoltaic cell model and its operating points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_ITER: usize = 200;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Single-diode cell constants at reference conditions.
///
/// The defaults were fitted (see `scripts/fit_pv_cell.py`) to a small
/// amorphous module: about 5 V and 108 mW at the maximum power point under
/// 600 W/m², with the maximum power point near 80 % of open circuit voltage
/// between 300 and 1000 W/m².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct PvCellParams<T> {
    /// Photocurrent at `g_ref`, A.
    pub ipv_ref: T,
    /// Reference irradiance, W/m².
    pub g_ref: T,
    /// Dark saturation current, A.
    pub i0: T,
    /// Series resistance, Ω.
    pub rs: T,
    /// Shunt resistance, Ω.
    pub rsh: T,
    /// Diode ideality factor.
    pub ideality: T,
    /// Cells in series.
    pub cells_series: usize,
    /// Thermal voltage, V.
    pub thermal_voltage: T,
}

impl<T: Scalar> Default for PvCellParams<T> {
    fn default() -> Self {
        Self {
            ipv_ref: T::lit(0.04024),
            g_ref: T::lit(1000.0),
            i0: T::lit(4.53e-8),
            rs: T::lit(3.64),
            rsh: T::lit(1.0e4),
            ideality: T::lit(2.307),
            cells_series: 8,
            thermal_voltage: T::lit(0.025693),
        }
    }
}

/// Maximum power point of a cell or array.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerPoint<T> {
    pub voltage: T,
    pub power: T,
}

impl<T: Scalar> PvCellParams<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        if !(self.rs > z
            && self.rsh > z
            && self.i0 > z
            && self.g_ref > z
            && self.thermal_voltage > z)
        {
            return Err(Error::config(
                "PV resistances, saturation current and references must be positive",
            ));
        }
        if !(self.ideality >= T::one()) || self.cells_series == 0 || !(self.ipv_ref >= z) {
            return Err(Error::config(
                "PV ideality must be >= 1, with at least one series cell",
            ));
        }
        Ok(())
    }

    pub fn photocurrent(&self, g: T) -> T {
        self.ipv_ref * (g / self.g_ref)
    }

    fn diode_scale(&self) -> T {
        self.ideality * T::from_usize_lossy(self.cells_series) * self.thermal_voltage
    }

    /// `I_pv − I_0 (exp((V + I R_s) / (a N_s V_T)) − 1) − (V + I R_s) / R_sh − I`.
    pub fn residual(&self, v: T, g: T, i: T) -> T {
        let vd = v + i * self.rs;
        self.photocurrent(g)
            - self.i0 * ((vd / self.diode_scale()).exp() - T::one())
            - vd / self.rsh
            - i
    }

    /// Output current at terminal voltage `v` under irradiance `g`.
    ///
    /// The residual is strictly decreasing in `I`, positive at `I = −V/R_s`
    /// and non-positive at `I = I_pv`, so safeguarded Newton inside that
    /// bracket always converges.
    pub fn cell_current(&self, v: T, g: T) -> Result<T> {
        if !(v >= T::zero()) || !(g >= T::zero()) {
            return Err(Error::config(format!(
                "cell current needs V >= 0 and G >= 0, got V={v}, G={g}"
            )));
        }
        let tol = T::current_tolerance();
        let scale = self.diode_scale();
        let mut lo = -v / self.rs;
        let mut hi = self.photocurrent(g);
        if self.residual(v, g, hi) >= T::zero() {
            return Ok(hi);
        }
        let mut i = hi;
        for _ in 0..MAX_ITER {
            let f = self.residual(v, g, i);
            if f.abs() < tol {
                return Ok(i);
            }
            if f > T::zero() {
                lo = i;
            } else {
                hi = i;
            }
            let slope = -self.i0 * self.rs / scale * ((v + i * self.rs) / scale).exp()
                - self.rs / self.rsh
                - T::one();
            let newton = i - f / slope;
            i = if newton > lo && newton < hi {
                newton
            } else {
                (lo + hi) * T::lit(0.5)
            };
            if hi - lo <= T::epsilon() * hi.abs().max(T::one()) {
                break;
            }
        }
        let f = self.residual(v, g, i);
        if f.abs() < tol {
            return Ok(i);
        }
        Err(Error::Numerical(format!(
            "cell current did not converge at V={v}, G={g}: residual {f} after {MAX_ITER} iterations"
        )))
    }

    /// Terminal power `V·I`.
    pub fn power(&self, v: T, g: T) -> Result<T> {
        Ok(v * self.cell_current(v, g)?)
    }

    /// Open-circuit voltage. Zero when there is no photocurrent.
    pub fn find_voc(&self, g: T) -> Result<T> {
        if !(g > T::zero()) || !(self.photocurrent(g) > T::zero()) {
            return Ok(T::zero());
        }
        let mut lo = T::zero();
        // with infinite shunt resistance this is exact; a finite shunt only lowers Voc
        let mut hi = self.diode_scale() * (self.photocurrent(g) / self.i0 + T::one()).ln();
        if self.cell_current(hi, g)? > T::zero() {
            return Err(Error::Numerical(format!(
                "open-circuit bracket failed at G={g}"
            )));
        }
        for _ in 0..MAX_ITER {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cell_current(mid, g)? > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // bisection stops at adjacent floats; pick whichever side is closer to I = 0
        let (il, ih) = (self.cell_current(lo, g)?, self.cell_current(hi, g)?);
        Ok(if il.abs() <= ih.abs() { lo } else { hi })
    }

    /// Maximum power point by golden-section search on `[0, Voc]`, to `tol_v` volts.
    pub fn find_mpp_with(&self, g: T, tol_v: T) -> Result<PowerPoint<T>> {
        let voc = self.find_voc(g)?;
        if !(voc > T::zero()) {
            return Ok(PowerPoint {
                voltage: T::zero(),
                power: T::zero(),
            });
        }
        let r = T::lit(GOLDEN);
        let (mut a, mut b) = (T::zero(), voc);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let mut pc = self.power(c, g)?;
        let mut pd = self.power(d, g)?;
        while b - a > tol_v {
            if pc > pd {
                b = d;
                d = c;
                pd = pc;
                c = b - r * (b - a);
                pc = self.power(c, g)?;
            } else {
                a = c;
                c = d;
                pc = pd;
                d = a + r * (b - a);
                pd = self.power(d, g)?;
            }
        }
        let v = (a + b) * T::lit(0.5);
        Ok(PowerPoint {
            voltage: v,
            power: self.power(v, g)?,
        })
    }

    pub fn find_mpp(&self, g: T) -> Result<PowerPoint<T>> {
        self.find_mpp_with(g, T::lit(1e-3))
    }
}

/// Identical cells wired in parallel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct ArrayConfig<T> {
    pub cells_parallel: usize,
    pub params: PvCellParams<T>,
}

impl<T: Scalar> Default for ArrayConfig<T> {
    fn default() -> Self {
        Self {
            cells_parallel: 6,
            params: PvCellParams::default(),
        }
    }
}

impl<T: Scalar> ArrayConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.cells_parallel == 0 {
            return Err(Error::config("array needs at least one cell"));
        }
        self.params.validate()
    }

    fn n(&self) -> T {
        T::from_usize_lossy(self.cells_parallel)
    }

    pub fn current(&self, v: T, g: T) -> Result<T> {
        Ok(self.n() * self.params.cell_current(v, g)?)
    }

    pub fn power(&self, v: T, g: T) -> Result<T> {
        Ok(v * self.current(v, g)?)
    }

    /// Parallel cells share the open-circuit voltage of one cell.
    pub fn find_voc(&self, g: T) -> Result<T> {
        self.params.find_voc(g)
    }

    pub fn find_mpp(&self, g: T) -> Result<PowerPoint<T>> {
        let p = self.params.find_mpp(g)?;
        Ok(PowerPoint {
            voltage: p.voltage,
            power: self.n() * p.power,
        })
    }
}
