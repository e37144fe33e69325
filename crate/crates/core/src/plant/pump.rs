//! Microstepped syringe pump.
//!
//! A 1.8 degree stepper (200 full steps/rev) driven at 32 microsteps per full
//! step turns a lead screw that displaces 0.4 mL per revolution, so one
//! microstep moves 62.5 nL and 450 rpm delivers 3 mL/s. Volume is committed
//! in whole microsteps; the fractional remainder is carried in `residue` so
//! that the committed count always equals the rounded exact displacement.

use serde::{Deserialize, Serialize};

use super::PlantError;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct PumpConfig<T> {
    pub full_steps_per_rev: u32,
    pub microsteps_per_step: u32,
    pub ml_per_rev: T,
    pub max_rpm: T,
    /// Largest volume the syringe can push into the balloon, mL.
    pub capacity_ml: T,
}

impl<T: Real> Default for PumpConfig<T> {
    fn default() -> Self {
        Self {
            full_steps_per_rev: 200,
            microsteps_per_step: 32,
            ml_per_rev: T::lit(0.4),
            max_rpm: T::lit(450.0),
            capacity_ml: T::lit(4.0),
        }
    }
}

impl<T: Real> PumpConfig<T> {
    pub fn validate(&self) -> Result<(), PlantError> {
        if self.full_steps_per_rev == 0 || self.microsteps_per_step == 0 {
            return Err(PlantError::InvalidPump("step counts must be positive".into()));
        }
        if !(self.ml_per_rev > T::zero() && self.max_rpm > T::zero() && self.capacity_ml > T::zero()) {
            return Err(PlantError::InvalidPump(
                "ml_per_rev, max_rpm and capacity_ml must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn microsteps_per_rev(&self) -> i64 {
        i64::from(self.full_steps_per_rev) * i64::from(self.microsteps_per_step)
    }

    /// Volume displaced by one microstep, mL.
    pub fn volume_quantum_ml(&self) -> T {
        self.ml_per_rev / T::from_i64(self.microsteps_per_rev()).unwrap()
    }

    /// Continuous flow at shaft speed `rpm`, mL/s.
    pub fn flow_ml_per_s(&self, rpm: T) -> T {
        rpm / T::lit(60.0) * self.ml_per_rev
    }

    /// Microstep count corresponding to the full syringe capacity.
    pub fn capacity_microsteps(&self) -> i64 {
        (self.capacity_ml / self.volume_quantum_ml())
            .floor()
            .to_i64()
            .unwrap_or(i64::MAX)
    }

    /// Whole microsteps needed to reach `volume_ml` (rounded to nearest).
    pub fn microsteps_for_volume(&self, volume_ml: T) -> i64 {
        (volume_ml / self.volume_quantum_ml()).round().to_i64().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpLimit {
    /// Nothing left to withdraw: the balloon is empty.
    Empty,
    /// Syringe capacity fully delivered.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpState<T> {
    pub microstep_count: i64,
    /// Uncommitted fraction of a microstep, always within [-0.5, 0.5].
    pub residue: T,
    pub rpm: T,
    /// Set when the last step was clamped at a syringe limit.
    pub saturated: Option<PumpLimit>,
}

impl<T: Real> Default for PumpState<T> {
    fn default() -> Self {
        Self {
            microstep_count: 0,
            residue: T::zero(),
            rpm: T::zero(),
            saturated: None,
        }
    }
}

impl<T: Real> PumpState<T> {
    pub fn at_microsteps(count: i64) -> Self {
        Self {
            microstep_count: count,
            ..Self::default()
        }
    }

    pub fn infused_volume(&self, cfg: &PumpConfig<T>) -> T {
        T::from_i64(self.microstep_count).unwrap() * cfg.volume_quantum_ml()
    }
}

fn check_command<T: Real>(cfg: &PumpConfig<T>, rpm: T, dt: T) -> Result<(), PlantError> {
    if !rpm.is_finite() || rpm.abs() > cfg.max_rpm {
        return Err(PlantError::SpeedOutOfRange {
            rpm: rpm.to_f64_lossy(),
            max_rpm: cfg.max_rpm.to_f64_lossy(),
        });
    }
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(PlantError::NonPositiveStep { dt: dt.to_f64_lossy() });
    }
    Ok(())
}

/// Advances the pump by `dt` seconds at shaft speed `rpm`.
pub fn step_pump<T: Real>(cfg: &PumpConfig<T>, pump: &PumpState<T>, rpm: T, dt: T) -> Result<PumpState<T>, PlantError> {
    check_command(cfg, rpm, dt)?;
    let exact = pump.residue + rpm / T::lit(60.0) * dt * T::from_i64(cfg.microsteps_per_rev()).unwrap();
    let whole = exact.round();
    let residue = exact - whole;
    let target = pump.microstep_count + whole.to_i64().unwrap_or(0);
    Ok(clamp(target, residue, rpm, 0, cfg.capacity_microsteps()))
}

/// Like [`step_pump`], but stops exactly on `target_count` instead of passing it.
pub fn step_pump_toward<T: Real>(
    cfg: &PumpConfig<T>,
    pump: &PumpState<T>,
    rpm: T,
    dt: T,
    target_count: i64,
) -> Result<PumpState<T>, PlantError> {
    let next = step_pump(cfg, pump, rpm, dt)?;
    let start = pump.microstep_count;
    let passed = (start <= target_count && next.microstep_count >= target_count)
        || (start >= target_count && next.microstep_count <= target_count);
    if passed {
        Ok(PumpState {
            microstep_count: target_count,
            residue: T::zero(),
            rpm,
            saturated: None,
        })
    } else {
        Ok(next)
    }
}

fn clamp<T: Real>(target: i64, residue: T, rpm: T, lo: i64, hi: i64) -> PumpState<T> {
    if target < lo {
        PumpState {
            microstep_count: lo,
            residue: T::zero(),
            rpm,
            saturated: Some(PumpLimit::Empty),
        }
    } else if target > hi {
        PumpState {
            microstep_count: hi,
            residue: T::zero(),
            rpm,
            saturated: Some(PumpLimit::Full),
        }
    } else {
        PumpState {
            microstep_count: target,
            residue,
            rpm,
            saturated: None,
        }
    }
}
