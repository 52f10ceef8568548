//! Behavioral model of the two-stage harvesting converter: a fractional-Voc
//! MPPT boost stage charging a supercapacitor, and a buck stage holding the
//! regulated output while the store stays above brown-out.

use serde::{Deserialize, Serialize};

use super::load::LoadModel;
use super::pv::ArrayConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest step the explicit energy integration accepts, s.
pub const MAX_DT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct HarvesterConfig<T> {
    /// Supercapacitor, F.
    pub capacitance: T,
    pub v_store_max: T,
    /// Load is shed at or below this store voltage.
    pub v_brownout: T,
    /// Load is restored at or above this store voltage.
    pub v_recover: T,
    /// Regulated output, V.
    pub v_out: T,
    pub eta_boost: T,
    pub eta_buck: T,
    /// Interval between open-circuit samples, s.
    pub sample_period: T,
    /// Harvest is suspended this long while sampling, s.
    pub sample_window: T,
    /// MPPT setpoint as a fraction of the sampled Voc.
    pub mppt_fraction: T,
    /// Supply ceiling of the load (170 mA at 3.3 V), W. Exceeding it is flagged.
    pub power_ceiling: T,
}

impl<T: Scalar> Default for HarvesterConfig<T> {
    fn default() -> Self {
        Self {
            capacitance: T::lit(0.1),
            v_store_max: T::lit(5.25),
            v_brownout: T::lit(3.4),
            v_recover: T::lit(3.6),
            v_out: T::lit(3.3),
            eta_boost: T::lit(0.93),
            eta_buck: T::lit(0.93),
            sample_period: T::lit(16.0),
            sample_window: T::lit(0.256),
            mppt_fraction: T::lit(0.8),
            power_ceiling: T::lit(0.170 * 3.3),
        }
    }
}

impl<T: Scalar> HarvesterConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let (z, one) = (T::zero(), T::one());
        let eff_ok = |e: T| e > z && e <= one;
        if !(self.capacitance > z)
            || !(self.v_store_max > self.v_recover)
            || !(self.v_recover >= self.v_brownout)
            || !(self.v_brownout >= z)
            || !eff_ok(self.eta_boost)
            || !eff_ok(self.eta_buck)
            || !(self.sample_period > self.sample_window)
            || !(self.sample_window >= z)
            || !(self.mppt_fraction > z && self.mppt_fraction < one)
        {
            return Err(Error::config("harvester parameters out of range"));
        }
        Ok(())
    }

    pub fn stored_energy(&self, v: T) -> T {
        T::lit(0.5) * self.capacitance * v * v
    }

    fn voltage_of(&self, e: T) -> T {
        (T::lit(2.0) * e / self.capacitance).sqrt()
    }

    /// Share of time the boost stage harvests, accounting for sample windows.
    pub fn harvest_duty(&self) -> T {
        T::one() - self.sample_window / self.sample_period
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarvesterState<T> {
    pub time: T,
    pub v_store: T,
    /// Current MPPT operating voltage.
    pub v_mpp_ref: T,
    pub t_since_sample: T,
    /// Remaining part of an open-circuit sample window.
    pub sample_remaining: T,
    pub load_on: bool,
}

impl<T: Scalar> HarvesterState<T> {
    /// Starts at `v_store`; the first step takes an open-circuit sample.
    pub fn new(config: &HarvesterConfig<T>, v_store: T) -> Self {
        Self {
            time: T::zero(),
            v_store,
            v_mpp_ref: T::zero(),
            t_since_sample: config.sample_period,
            sample_remaining: T::zero(),
            load_on: v_store > config.v_brownout,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HarvestEvent<T> {
    VocSample {
        voc: T,
    },
    /// Store hit its upper bound; surplus discarded.
    Saturated,
    BrownOut,
    Recovered,
    /// Load power above the supply ceiling.
    OverCeiling,
    /// Store emptied before the step's demand was met.
    Depleted,
}

impl<T> HarvestEvent<T> {
    pub fn tag(&self) -> &'static str {
        match self {
            HarvestEvent::VocSample { .. } => "voc-sample",
            HarvestEvent::Saturated => "saturated",
            HarvestEvent::BrownOut => "brown-out",
            HarvestEvent::Recovered => "recovered",
            HarvestEvent::OverCeiling => "over-ceiling",
            HarvestEvent::Depleted => "depleted",
        }
    }
}

/// Per-step record. Energies are the step's contributions in joules.
#[derive(Clone, Debug, PartialEq)]
pub struct Telemetry<T> {
    pub t: T,
    pub v_store: T,
    pub v_mpp_ref: T,
    /// Average power into the store over the step.
    pub p_in: T,
    /// Power drawn from the store by the output stage.
    pub p_out: T,
    pub fps: T,
    pub spilled: T,
    pub unmet: T,
    pub events: Vec<HarvestEvent<T>>,
}

/// Advances the harvester by `dt` seconds under irradiance `g`.
pub fn step_harvester<T: Scalar>(
    state: &HarvesterState<T>,
    config: &HarvesterConfig<T>,
    array: &ArrayConfig<T>,
    load: &LoadModel<T>,
    g: T,
    dt: T,
) -> Result<(HarvesterState<T>, Telemetry<T>)> {
    if !(dt > T::zero() && dt <= T::lit(MAX_DT)) {
        return Err(Error::config(format!(
            "time step {dt} s outside (0, {MAX_DT}]"
        )));
    }
    let mut next = *state;
    let mut events = Vec::new();

    // slack keeps accumulated rounding from pushing a sample one step late
    if next.t_since_sample >= config.sample_period - dt * T::lit(1e-6) {
        let voc = array.find_voc(g)?;
        next.v_mpp_ref = config.mppt_fraction * voc;
        next.sample_remaining = config.sample_window;
        next.t_since_sample = T::zero();
        events.push(HarvestEvent::VocSample { voc });
    }
    let blackout = next.sample_remaining.min(dt);
    next.sample_remaining = next.sample_remaining - blackout;

    let p_array = if next.v_mpp_ref > T::zero() {
        array.power(next.v_mpp_ref, g)?.max(T::zero())
    } else {
        T::zero()
    };
    let p_in = p_array * config.eta_boost * (dt - blackout) / dt;

    if next.load_on && next.v_store <= config.v_brownout {
        next.load_on = false;
        events.push(HarvestEvent::BrownOut);
    } else if !next.load_on && next.v_store >= config.v_recover {
        next.load_on = true;
        events.push(HarvestEvent::Recovered);
    }
    let p_load = load.power();
    if next.load_on && p_load > config.power_ceiling {
        events.push(HarvestEvent::OverCeiling);
    }
    let p_out = if next.load_on {
        p_load / config.eta_buck
    } else {
        T::zero()
    };

    let mut energy = config.stored_energy(next.v_store) + (p_in - p_out) * dt;
    let e_max = config.stored_energy(config.v_store_max);
    let (mut spilled, mut unmet) = (T::zero(), T::zero());
    if energy > e_max {
        spilled = energy - e_max;
        energy = e_max;
        events.push(HarvestEvent::Saturated);
    } else if energy < T::zero() {
        unmet = -energy;
        energy = T::zero();
        events.push(HarvestEvent::Depleted);
    }
    next.v_store = config.voltage_of(energy);
    next.time = next.time + dt;
    next.t_since_sample = next.t_since_sample + dt;

    let telemetry = Telemetry {
        t: next.time,
        v_store: next.v_store,
        v_mpp_ref: next.v_mpp_ref,
        p_in,
        p_out,
        fps: if next.load_on { load.fps } else { T::zero() },
        spilled,
        unmet,
        events,
    };
    Ok((next, telemetry))
}

/// Highest whole frame rate (up to `max_fps`) whose load the average harvest
/// covers in steady state.
pub fn sustainable_fps<T: Scalar>(
    array: &ArrayConfig<T>,
    load: &LoadModel<T>,
    config: &HarvesterConfig<T>,
    g: T,
    max_fps: u32,
) -> Result<u32> {
    if !(g > T::zero()) {
        return Ok(0);
    }
    let v_ref = config.mppt_fraction * array.find_voc(g)?;
    let p_in = array.power(v_ref, g)?.max(T::zero()) * config.eta_boost * config.harvest_duty();
    Ok((1..=max_fps)
        .rev()
        .find(|&f| load.power_at(T::from_u32(f).unwrap_or_else(T::zero)) / config.eta_buck <= p_in)
        .unwrap_or(0))
}
