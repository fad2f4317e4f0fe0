//! DC actuating mechanism: a DC motor driving a load link through a gearbox.
//!
//! The physical constants are reduced to the second-order model
//!
//! ```text
//! a2·θ̈ + a1·θ̇ + a0·cos θ = v
//! ```
//!
//! where θ is the load angle and v the armature voltage. The armature
//! inductance is kept in [`PhysicalParams`] but does not enter the model;
//! the electrical time constant is assumed negligible.

use crate::error::{Error, Result};

/// Physical motor, gearbox and load constants (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Load-link inertia about the joint, excluding the point mass.
    pub load_inertia: f64,
    /// Point mass at the end of the arm.
    pub mass: f64,
    pub arm_length: f64,
    /// Viscous friction on the load side.
    pub load_friction: f64,
    pub gravity: f64,
    pub motor_inertia: f64,
    pub motor_friction: f64,
    /// θ_m = gear_ratio · θ.
    pub gear_ratio: f64,
    pub resistance: f64,
    /// Stored only; the reduced model neglects it.
    pub inductance: f64,
    pub torque_constant: f64,
    pub back_emf_constant: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("load_inertia", self.load_inertia),
            ("mass", self.mass),
            ("arm_length", self.arm_length),
            ("load_friction", self.load_friction),
            ("motor_friction", self.motor_friction),
            ("back_emf_constant", self.back_emf_constant),
            ("inductance", self.inductance),
        ];
        for (name, value) in nonneg {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::domain(name, format!("must be finite and >= 0, got {value}")));
            }
        }
        let positive = [
            ("motor_inertia", self.motor_inertia),
            ("gear_ratio", self.gear_ratio),
            ("resistance", self.resistance),
            ("torque_constant", self.torque_constant),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::domain(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if !self.gravity.is_finite() {
            return Err(Error::domain("gravity", "must be finite"));
        }
        Ok(())
    }

    /// Total load inertia J = J_c + m·r².
    pub fn total_load_inertia(&self) -> f64 {
        self.load_inertia + self.mass * self.arm_length * self.arm_length
    }

    /// Inertia reflected to the motor shaft, J_e = J_m + J/j².
    pub fn reflected_inertia(&self) -> f64 {
        self.motor_inertia + self.total_load_inertia() / (self.gear_ratio * self.gear_ratio)
    }

    /// Friction reflected to the motor shaft, B_e = B_m + B/j².
    pub fn reflected_friction(&self) -> f64 {
        self.motor_friction + self.load_friction / (self.gear_ratio * self.gear_ratio)
    }
}

/// Coefficients of the reduced model `a2·θ̈ + a1·θ̇ + a0·cos θ = v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumpedParams {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl LumpedParams {
    pub fn new(a2: f64, a1: f64, a0: f64) -> Result<Self> {
        let lp = LumpedParams { a2, a1, a0 };
        lp.validate()?;
        Ok(lp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a2.is_finite() && self.a2 > 0.0) {
            return Err(Error::domain("a2", format!("must be > 0, got {}", self.a2)));
        }
        if !(self.a1.is_finite() && self.a1 >= 0.0) {
            return Err(Error::domain("a1", format!("must be >= 0, got {}", self.a1)));
        }
        if !(self.a0.is_finite() && self.a0 >= 0.0) {
            return Err(Error::domain("a0", format!("must be >= 0, got {}", self.a0)));
        }
        Ok(())
    }
}

impl Default for LumpedParams {
    /// The reference actuator: a2 = 7.6, a1 = 0.0234, a0 = 0.26.
    fn default() -> Self {
        LumpedParams {
            a2: 7.6,
            a1: 0.0234,
            a0: 0.26,
        }
    }
}

/// Nominal estimates (â2, â1) used by the linear model `â2·θ̈ + â1·θ̇ = v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NominalParams {
    pub a2_hat: f64,
    pub a1_hat: f64,
}

impl NominalParams {
    pub fn new(a2_hat: f64, a1_hat: f64) -> Result<Self> {
        let np = NominalParams { a2_hat, a1_hat };
        np.validate()?;
        Ok(np)
    }

    /// Nominal model that matches the inertia and damping exactly.
    pub fn exact(lp: &LumpedParams) -> Self {
        NominalParams {
            a2_hat: lp.a2,
            a1_hat: lp.a1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a2_hat.is_finite() && self.a2_hat > 0.0) {
            return Err(Error::domain("a2_hat", format!("must be > 0, got {}", self.a2_hat)));
        }
        if !self.a1_hat.is_finite() {
            return Err(Error::domain("a1_hat", "must be finite"));
        }
        Ok(())
    }
}

/// Load angle (rad) and angular velocity (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub theta: f64,
    pub theta_dot: f64,
}

impl PlantState {
    pub fn new(theta: f64, theta_dot: f64) -> Self {
        PlantState { theta, theta_dot }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.theta_dot.is_finite()
    }
}

/// Reduce physical constants to (a2, a1, a0).
pub fn lump(p: &PhysicalParams) -> Result<LumpedParams> {
    p.validate()?;
    let j = p.gear_ratio;
    let a2 = j * p.reflected_inertia() * p.resistance / p.torque_constant;
    let a1 = j * (p.reflected_friction() * p.resistance + p.back_emf_constant * p.torque_constant)
        / p.torque_constant;
    let a0 = p.resistance * p.mass * p.gravity * p.arm_length / (j * p.torque_constant);
    LumpedParams::new(a2, a1, a0)
}

/// θ̈ = (v − a1·θ̇ − a0·cos θ) / a2.
#[inline]
pub fn dynamics_rhs(s: &PlantState, v: f64, lp: &LumpedParams) -> f64 {
    (v - lp.a1 * s.theta_dot - lp.a0 * s.theta.cos()) / lp.a2
}

/// d = Δa2·θ̈ + Δa1·θ̇ + a0·cos θ with Δa = a − â.
///
/// With θ̈ from [`dynamics_rhs`], `â2·θ̈ + â1·θ̇ + d == v`.
#[inline]
pub fn equivalent_disturbance(
    theta_ddot: f64,
    theta_dot: f64,
    theta: f64,
    lp: &LumpedParams,
    np: &NominalParams,
) -> f64 {
    (lp.a2 - np.a2_hat) * theta_ddot + (lp.a1 - np.a1_hat) * theta_dot + lp.a0 * theta.cos()
}

/// One classical RK4 step with the voltage held over the interval.
pub fn step(s: &PlantState, v: f64, lp: &LumpedParams, dt: f64) -> Result<PlantState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain("dt", format!("must be > 0, got {dt}")));
    }
    let deriv = |st: &PlantState| (st.theta_dot, dynamics_rhs(st, v, lp));
    let shifted = |k: (f64, f64), h: f64| PlantState {
        theta: s.theta + h * k.0,
        theta_dot: s.theta_dot + h * k.1,
    };

    let k1 = deriv(s);
    let k2 = deriv(&shifted(k1, 0.5 * dt));
    let k3 = deriv(&shifted(k2, 0.5 * dt));
    let k4 = deriv(&shifted(k3, dt));

    let next = PlantState {
        theta: s.theta + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        theta_dot: s.theta_dot + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFinite { t: f64::NAN })
    }
}
