use crate::grid::{discrete_h1_seminorm_sq, inner_product, GridError};

use super::State;

/// Per-step quantities whose running sums the a-priori bounds control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub step: usize,
    pub norm_u_sq: f64,
    pub norm_v_sq: f64,
    /// `‖uⁿ - uⁿ⁻¹‖²`
    pub incr_u_sq: f64,
    pub incr_v_sq: f64,
    /// `Δt·|uⁿ|²_{1,h}`
    pub dt_h1_u: f64,
    pub dt_h1_v: f64,
}

pub fn energy_diagnostics(prev: &State, next: &State, dt: f64) -> Result<EnergyRecord, GridError> {
    let du = next.u.sub(&prev.u)?;
    let dv = next.v.sub(&prev.v)?;
    Ok(EnergyRecord {
        step: next.step,
        norm_u_sq: inner_product(&next.u, &next.u)?,
        norm_v_sq: inner_product(&next.v, &next.v)?,
        incr_u_sq: inner_product(&du, &du)?,
        incr_v_sq: inner_product(&dv, &dv)?,
        dt_h1_u: dt * discrete_h1_seminorm_sq(&next.u),
        dt_h1_v: dt * discrete_h1_seminorm_sq(&next.v),
    })
}

/// Running log of [`EnergyRecord`]s with accumulated sums.
#[derive(Debug, Clone, Default)]
pub struct EnergyTracker {
    dt: f64,
    records: Vec<EnergyRecord>,
    sum_incr_u: f64,
    sum_incr_v: f64,
    sum_dt_h1_u: f64,
    sum_dt_h1_v: f64,
}

impl EnergyTracker {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            ..Default::default()
        }
    }

    pub fn record(&mut self, prev: &State, next: &State) -> Result<&EnergyRecord, GridError> {
        let r = energy_diagnostics(prev, next, self.dt)?;
        self.sum_incr_u += r.incr_u_sq;
        self.sum_incr_v += r.incr_v_sq;
        self.sum_dt_h1_u += r.dt_h1_u;
        self.sum_dt_h1_v += r.dt_h1_v;
        self.records.push(r);
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn records(&self) -> &[EnergyRecord] {
        &self.records
    }

    /// `(Σ‖uⁿ-uⁿ⁻¹‖², Σ‖vⁿ-vⁿ⁻¹‖²)`
    pub fn increment_sums(&self) -> (f64, f64) {
        (self.sum_incr_u, self.sum_incr_v)
    }

    /// `(Σ Δt|uⁿ|²_{1,h}, Σ Δt|vⁿ|²_{1,h})`
    pub fn gradient_sums(&self) -> (f64, f64) {
        (self.sum_dt_h1_u, self.sum_dt_h1_v)
    }

    /// `max_n (‖uⁿ‖² + ‖vⁿ‖²)`
    pub fn max_mass(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.norm_u_sq + r.norm_v_sq)
            .fold(0.0, f64::max)
    }
}
