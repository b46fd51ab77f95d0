//! Per-step UAV energy: basic aviation draw and coverage-dependent
//! surveillance draw, plus battery bookkeeping.
//!
//! One simulation step lasts `step_minutes`; energies are in watt-minutes,
//! so with one-minute steps they are numerically equal to the power table.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("coverage radius {radius} outside (0, {max}]")]
    InvalidRadius { radius: f64, max: f64 },
    #[error("invalid energy parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyParams {
    /// Power drawn while hovering, W.
    pub hover_power: f64,
    /// Power drawn while flying, W.
    pub fly_power: f64,
    /// Surveillance power at the largest coverage radius, W.
    pub surveil_power_max: f64,
    pub step_minutes: f64,
    /// Minimum power to stay airborne, W. Symbolic model only.
    pub delta: Option<f64>,
    /// Motor multiplier per meter of altitude, W/m. Symbolic model only.
    pub zeta: Option<f64>,
    /// Flight altitude, m. Symbolic model only.
    pub altitude: Option<f64>,
    /// Lift power for reaching the altitude, W. Symbolic model only.
    pub lift_power: Option<f64>,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            hover_power: 128.89,
            fly_power: 170.32,
            surveil_power_max: 5.0,
            step_minutes: 1.0,
            delta: None,
            zeta: None,
            altitude: None,
            lift_power: None,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let powers = [self.hover_power, self.fly_power, self.surveil_power_max];
        if powers.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(EnergyError::InvalidParams("powers must be finite and >= 0"));
        }
        if self.fly_power < self.hover_power {
            return Err(EnergyError::InvalidParams("fly_power must be >= hover_power"));
        }
        if !(self.step_minutes > 0.0) || !self.step_minutes.is_finite() {
            return Err(EnergyError::InvalidParams("step_minutes must be > 0"));
        }
        let symbolic = [self.delta, self.zeta, self.altitude, self.lift_power];
        if symbolic.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(EnergyError::InvalidParams("symbolic terms must be finite and >= 0"));
        }
        Ok(())
    }

    fn symbolic(&self) -> Option<(f64, f64, f64, f64)> {
        Some((self.delta?, self.zeta?, self.altitude?, self.lift_power?))
    }

    /// Largest per-step draw: flying at the widest coverage.
    pub fn max_step_draw(&self) -> f64 {
        base_energy(true, self) + self.surveil_power_max * self.step_minutes
    }
}

/// Aviation energy for one step.
///
/// When every symbolic term is configured this is
/// `(delta + zeta * altitude) * t + lift_power * t` and the hover/fly table
/// is ignored; otherwise it is the table entry for the flight mode.
pub fn base_energy(moved: bool, params: &EnergyParams) -> f64 {
    let t = params.step_minutes;
    if let Some((delta, zeta, altitude, lift)) = params.symbolic() {
        return (delta + zeta * altitude) * t + lift * t;
    }
    let power = if moved { params.fly_power } else { params.hover_power };
    power * t
}

/// Surveillance energy for one step at coverage `radius`: linear in the
/// radius, reaching `surveil_power_max` at `r_max`.
pub fn surveillance_energy(radius: f64, r_max: f64, params: &EnergyParams) -> Result<f64, EnergyError> {
    if !(radius > 0.0) || radius > r_max {
        return Err(EnergyError::InvalidRadius { radius, max: r_max });
    }
    Ok(params.surveil_power_max * radius / r_max * params.step_minutes)
}

/// Battery state of one UAV.
///
/// Total consumption is kept with Neumaier compensated summation, so an
/// episode of identical draws reports the correctly rounded product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub capacity: f64,
    /// Aviation energy of the most recent step.
    pub e_b: f64,
    /// Surveillance energy of the most recent step.
    pub e_c: f64,
    consumed: f64,
    compensation: f64,
}

impl EnergyLedger {
    pub fn full(capacity: f64) -> Self {
        Self {
            capacity,
            e_b: 0.0,
            e_c: 0.0,
            consumed: 0.0,
            compensation: 0.0,
        }
    }

    pub fn consumed(&self) -> f64 {
        self.consumed + self.compensation
    }

    pub fn battery_remaining(&self) -> f64 {
        (self.capacity - self.consumed()).max(0.0)
    }

    pub fn is_depleted(&self) -> bool {
        self.battery_remaining() <= 0.0
    }

    fn accumulate(&mut self, value: f64) {
        let sum = self.consumed + value;
        if self.consumed.abs() >= value.abs() {
            self.compensation += (self.consumed - sum) + value;
        } else {
            self.compensation += (value - sum) + self.consumed;
        }
        self.consumed = sum;
    }
}

/// Charge one step of `e_b + e_c` against the battery. The remaining charge
/// floors at zero and an empty battery stays empty.
pub fn drain(ledger: EnergyLedger, e_b: f64, e_c: f64) -> EnergyLedger {
    let mut next = ledger;
    next.e_b = e_b;
    next.e_c = e_c;
    let available = ledger.battery_remaining();
    let draw = e_b + e_c;
    if draw >= available {
        next.consumed = ledger.capacity;
        next.compensation = 0.0;
    } else {
        next.accumulate(draw);
    }
    next
}
