use std::fmt;

use super::{ModelParams, NudgingParams};

/// Default interpolation constant `2/π²`: the mean-zero Poincaré constant
/// `(diam/π)²/H²` of a square cell with `diam = H√2`.
pub const DEFAULT_GAMMA0: f64 = 2.0 / (std::f64::consts::PI * std::f64::consts::PI);

/// Constants entering the synchronization conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    /// A-priori bound on `v`.
    pub v_max: f64,
    pub gamma0: f64,
}

impl Default for TheoryConstants {
    fn default() -> Self {
        Self {
            v_max: 1.0,
            gamma0: DEFAULT_GAMMA0,
        }
    }
}

impl TheoryConstants {
    /// Nonlinear coupling constant `2(v_max² + 2 v_max)`.
    pub fn c_nl(&self) -> f64 {
        2.0 * (self.v_max * self.v_max + 2.0 * self.v_max)
    }
}

/// One inequality `lhs > rhs` (or `≤`, see `holds`) with its margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

impl Condition {
    fn greater(lhs: f64, rhs: f64) -> Self {
        Self {
            holds: lhs > rhs,
            lhs,
            rhs,
        }
    }

    fn at_most(lhs: f64, rhs: f64) -> Self {
        Self {
            holds: lhs <= rhs,
            lhs,
            rhs,
        }
    }

    /// Signed distance from the threshold, positive when the condition holds.
    pub fn margin(&self, holds_when_greater: bool) -> f64 {
        if holds_when_greater {
            self.lhs - self.rhs
        } else {
            self.rhs - self.lhs
        }
    }
}

/// Evaluation of the sufficient conditions for discrete synchronization.
/// Failing them does not mean a run will fail to synchronize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub c_nl: f64,
    pub d_lower: f64,
    pub mu_bar: f64,
    pub coarse_h: f64,
    /// `d̲ > ¼ μ̄ γ0 H²`
    pub coercivity: Condition,
    /// `Δt ≤ (½(F + k + μ̄) + C_NL)⁻¹`
    pub time_step: Condition,
    /// `μ̄ > C_NL − F`
    pub gain: Condition,
    /// `δ = F + μ̄ − C_NL`
    pub delta: f64,
    /// `e^{−2δΔt}`, the guaranteed contraction of `‖e‖² + ‖f‖²` per step.
    pub per_step_factor: f64,
}

impl ConditionReport {
    pub fn guarantees_synchronization(&self) -> bool {
        self.coercivity.holds && self.time_step.holds && self.gain.holds
    }

    /// Flat `key = value` lines.
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("theory_c_nl", self.c_nl.to_string()),
            ("theory_d_lower", self.d_lower.to_string()),
            ("theory_mu_bar", self.mu_bar.to_string()),
            ("theory_coarse_h", self.coarse_h.to_string()),
            ("theory_coercivity", self.coercivity.holds.to_string()),
            ("theory_coercivity_lhs", self.coercivity.lhs.to_string()),
            ("theory_coercivity_rhs", self.coercivity.rhs.to_string()),
            ("theory_coercivity_margin", self.coercivity.margin(true).to_string()),
            ("theory_dt", self.time_step.holds.to_string()),
            ("theory_dt_value", self.time_step.lhs.to_string()),
            ("theory_dt_bound", self.time_step.rhs.to_string()),
            ("theory_dt_margin", self.time_step.margin(false).to_string()),
            ("theory_gain", self.gain.holds.to_string()),
            ("theory_gain_mu_bar", self.gain.lhs.to_string()),
            ("theory_gain_threshold", self.gain.rhs.to_string()),
            ("theory_gain_margin", self.gain.margin(true).to_string()),
            ("theory_delta", self.delta.to_string()),
            ("theory_per_step_factor", self.per_step_factor.to_string()),
            ("theory_guarantee", self.guarantees_synchronization().to_string()),
        ]
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |b: bool| if b { "holds" } else { "fails" };
        writeln!(f, "sufficient (not necessary) conditions for synchronization")?;
        writeln!(
            f,
            "  C_NL = {}   d_lower = {:e}   mu_bar = {}   H = {}",
            self.c_nl, self.d_lower, self.mu_bar, self.coarse_h
        )?;
        writeln!(
            f,
            "  coercivity  d_lower > mu_bar*gamma0*H^2/4 : {:e} > {:e}  {} (margin {:e})",
            self.coercivity.lhs,
            self.coercivity.rhs,
            mark(self.coercivity.holds),
            self.coercivity.margin(true)
        )?;
        writeln!(
            f,
            "  time step   dt <= 1/((F+k+mu_bar)/2 + C_NL) : {} <= {:.6}  {} (margin {:.6})",
            self.time_step.lhs,
            self.time_step.rhs,
            mark(self.time_step.holds),
            self.time_step.margin(false)
        )?;
        writeln!(
            f,
            "  gain        mu_bar > C_NL - F : {} > {}  {} (margin {})",
            self.gain.lhs,
            self.gain.rhs,
            mark(self.gain.holds),
            self.gain.margin(true)
        )?;
        writeln!(f, "  delta = F + mu_bar - C_NL = {}", self.delta)?;
        writeln!(f, "  per-step factor exp(-2 delta dt) = {}", self.per_step_factor)?;
        write!(
            f,
            "  guaranteed synchronization: {}",
            if self.guarantees_synchronization() { "yes" } else { "no" }
        )
    }
}

/// Evaluates the three sufficient conditions and the predicted decay rate.
pub fn check_theory(
    model: &ModelParams,
    nudging: &NudgingParams,
    constants: &TheoryConstants,
    dt: f64,
    coarse_h: f64,
) -> ConditionReport {
    let c_nl = constants.c_nl();
    let d_lower = model.d_u.min(model.d_v);
    let mu_bar = nudging.mu_bar();
    let delta = model.feed + mu_bar - c_nl;
    ConditionReport {
        c_nl,
        d_lower,
        mu_bar,
        coarse_h,
        coercivity: Condition::greater(d_lower, 0.25 * mu_bar * constants.gamma0 * coarse_h * coarse_h),
        time_step: Condition::at_most(dt, 1.0 / (0.5 * (model.feed + model.kill + mu_bar) + c_nl)),
        gain: Condition::greater(mu_bar, c_nl - model.feed),
        delta,
        per_step_factor: (-2.0 * delta * dt).exp(),
    }
}
