//! Immune feedback control laws.
//!
//! The general immune law scales a helper response by a suppression factor,
//! `u = P_h(e)·[1 − f_h(e)·f_s(u̇)]`. The PD form used here splits it into
//! additive helper and suppressor terms, `u = u_h − u_s`, with
//! `u_h = K_P·e + K_D·ė`. For trajectory tracking the helper term also
//! carries nominal-model feedforward, see [`tracking_helper`].

use crate::error::{Error, Result};
use crate::plant::NominalParams;

/// Relative tolerance used by [`Gains::is_critically_damped`].
pub const CRITICAL_DAMPING_RTOL: f64 = 1e-9;

/// PD feedback gains (K_P in 1/s², K_D in 1/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub kp: f64,
    pub kd: f64,
}

impl Gains {
    pub fn new(kp: f64, kd: f64) -> Result<Self> {
        let g = Gains { kp, kd };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kp.is_finite() && self.kp > 0.0) {
            return Err(Error::domain("K_P", format!("must be > 0, got {}", self.kp)));
        }
        if !(self.kd.is_finite() && self.kd > 0.0) {
            return Err(Error::domain("K_D", format!("must be > 0, got {}", self.kd)));
        }
        Ok(())
    }

    /// Critically damped gains for a double closed-loop pole at `-rate`.
    pub fn critically_damped(rate: f64) -> Result<Self> {
        Gains::new(rate * rate, 2.0 * rate)
    }

    /// `K_D² = 4·K_P` with both gains positive, to a relative tolerance.
    pub fn is_critically_damped(&self) -> bool {
        self.kp > 0.0
            && self.kd > 0.0
            && (self.kd * self.kd - 4.0 * self.kp).abs() <= CRITICAL_DAMPING_RTOL * 4.0 * self.kp
    }
}

impl Default for Gains {
    /// K_P = 100, K_D = 20 (double pole at −10).
    fn default() -> Self {
        Gains { kp: 100.0, kd: 20.0 }
    }
}

pub fn check_critical_damping(g: &Gains) -> bool {
    g.is_critically_damped()
}

/// Signals available to the controller at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlSample {
    pub e: f64,
    pub e_dot: f64,
    /// Rate of the applied control voltage.
    pub u_dot: f64,
    pub theta_dot: f64,
    /// Desired acceleration θ̈_d.
    pub theta_dd_d: f64,
}

/// `u = P_h(e)·[1 − f_h(e)·f_s(u̇)]` for caller-supplied scalar maps.
pub fn general_immune_law<P, H, S>(helper: P, helper_inverse: H, suppressor: S, e: f64, u_dot: f64) -> f64
where
    P: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    helper(e) * (1.0 - helper_inverse(e) * suppressor(u_dot))
}

/// Helper T-cell output in PD form, `K_P·e + K_D·ė`.
#[inline]
pub fn helper_pd(e: f64, e_dot: f64, g: &Gains) -> f64 {
    g.kp * e + g.kd * e_dot
}

#[inline]
pub fn immune_combine(u_h: f64, u_s: f64) -> f64 {
    u_h - u_s
}

/// Tracking helper voltage `â2·[θ̈_d + K_D·ė + K_P·e] + â1·θ̇`.
///
/// The damping term uses the measured velocity θ̇, not ė.
#[inline]
pub fn tracking_helper(cs: &ControlSample, np: &NominalParams, g: &Gains) -> f64 {
    np.a2_hat * (cs.theta_dd_d + g.kd * cs.e_dot + g.kp * cs.e) + np.a1_hat * cs.theta_dot
}

/// Suppression shape `1 − exp(−x²/σ²)`, even, in [0, 1).
#[inline]
pub fn suppression_shape(x: f64, sigma: f64) -> f64 {
    1.0 - (-(x * x) / (sigma * sigma)).exp()
}

/// Parameters of the immune-PID reference controller.
///
/// `u(k) = K0·[1 − eta·f(Δu(k−1))]·u_pid(k)` with `f` = [`suppression_shape`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImmunePidBaselineParams {
    pub k0: f64,
    /// Suppression strength in [0, 1).
    pub eta: f64,
    /// Width of the suppression shape, in volts per step.
    pub sigma: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl ImmunePidBaselineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k0.is_finite() && self.k0 > 0.0) {
            return Err(Error::domain("K0", format!("must be > 0, got {}", self.k0)));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::domain("suppression", format!("must lie in [0, 1), got {}", self.eta)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::domain("sigma", format!("must be > 0, got {}", self.sigma)));
        }
        for (name, v) in [("Kp_i", self.kp), ("Ki_i", self.ki), ("Kd_i", self.kd)] {
            if !v.is_finite() {
                return Err(Error::domain(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// The multiplicative suppression factor, always in (1 − eta, 1].
    #[inline]
    pub fn suppression_factor(&self, delta_u: f64) -> f64 {
        1.0 - self.eta * suppression_shape(delta_u, self.sigma)
    }
}

impl Default for ImmunePidBaselineParams {
    /// Inner PID equal to the default PD gains scaled by a2 = 7.6, plus a
    /// modest integral term.
    fn default() -> Self {
        ImmunePidBaselineParams {
            k0: 1.0,
            eta: 0.3,
            sigma: 1.0,
            kp: 760.0,
            ki: 400.0,
            kd: 152.0,
        }
    }
}

/// Stateful immune-PID controller. One instance per episode.
#[derive(Debug, Clone)]
pub struct ImmunePidBaseline {
    params: ImmunePidBaselineParams,
    dt: f64,
    integral: f64,
    prev_error: Option<f64>,
    // u(k−1), u(k−2)
    u_prev: [f64; 2],
}

/// Output of one baseline update: the unsuppressed helper and applied control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineOutput {
    pub helper: f64,
    pub control: f64,
}

impl ImmunePidBaseline {
    pub fn new(params: ImmunePidBaselineParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain("dt", format!("must be > 0, got {dt}")));
        }
        Ok(ImmunePidBaseline {
            params,
            dt,
            integral: 0.0,
            prev_error: None,
            u_prev: [0.0; 2],
        })
    }

    pub fn params(&self) -> &ImmunePidBaselineParams {
        &self.params
    }

    /// Discrete PID on `e`: rectangle-rule integral, backward-difference
    /// derivative (zero on the first sample).
    fn pid(&mut self, e: f64) -> f64 {
        let p = &self.params;
        self.integral += e * self.dt;
        let derivative = match self.prev_error {
            Some(prev) => (e - prev) / self.dt,
            None => 0.0,
        };
        self.prev_error = Some(e);
        p.kp * e + p.ki * self.integral + p.kd * derivative
    }

    pub fn update(&mut self, e: f64) -> BaselineOutput {
        let helper = self.params.k0 * self.pid(e);
        let delta_u = self.u_prev[0] - self.u_prev[1];
        let control = self.params.suppression_factor(delta_u) * helper;
        self.u_prev = [control, self.u_prev[0]];
        BaselineOutput { helper, control }
    }
}

/// Replay an error history through a fresh baseline and return the last control.
pub fn immune_pid_baseline(e_history: &[f64], p: &ImmunePidBaselineParams, dt: f64) -> Result<f64> {
    let mut ctl = ImmunePidBaseline::new(*p, dt)?;
    Ok(e_history.iter().fold(0.0, |_, &e| ctl.update(e).control))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn general_law_examples() {
        let id = |x: f64| x;
        assert_eq!(general_immune_law(id, id, |_| 0.0, 0.7, 3.0), 0.7);
        assert_eq!(general_immune_law(id, id, |_| 1.0, 0.3, 3.0), 0.3 * (1.0 - 0.3));
        let u = general_immune_law(|e| 2.0 * e, |x| x / 2.0, |ud| ud, 1.0, 0.5);
        assert_relative_eq!(u, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn helper_pd_examples() {
        let g = Gains::default();
        assert_eq!(helper_pd(0.0, 0.0, &g), 0.0);
        assert_relative_eq!(helper_pd(0.1, 0.0, &g), 10.0, epsilon = 1e-12);
        assert!(helper_pd(0.01, -0.05, &g).abs() < 1e-15);
    }

    #[test]
    fn combine_examples() {
        assert_eq!(immune_combine(5.0, 0.0), 5.0);
        assert_eq!(immune_combine(5.0, 5.0), 0.0);
        assert_relative_eq!(immune_combine(10.0, 2.2), 7.8, epsilon = 1e-15);
    }

    #[test]
    fn tracking_helper_examples() {
        let np = NominalParams::new(7.6, 0.0234).unwrap();
        let g = Gains::default();
        assert_eq!(tracking_helper(&ControlSample::default(), &np, &g), 0.0);
        let cs = ControlSample { e: 0.01, theta_dot: 1.0, ..Default::default() };
        assert_relative_eq!(tracking_helper(&cs, &np, &g), 7.6234, epsilon = 1e-12);
        let cs = ControlSample { theta_dd_d: 1.0, ..Default::default() };
        assert_relative_eq!(tracking_helper(&cs, &np, &g), 7.6, epsilon = 1e-15);
    }

    #[test]
    fn critical_damping_examples() {
        assert!(Gains::new(100.0, 20.0).unwrap().is_critically_damped());
        assert!(!Gains::new(100.0, 10.0).unwrap().is_critically_damped());
        assert!(check_critical_damping(&Gains { kp: 1.0, kd: 2.0 }));
        assert!(!check_critical_damping(&Gains { kp: -1.0, kd: 2.0 }));
        assert!(Gains::critically_damped(7.0).unwrap().is_critically_damped());
    }

    #[test]
    fn gains_reject_nonpositive() {
        assert!(Gains::new(0.0, 1.0).is_err());
        assert!(Gains::new(1.0, -1.0).is_err());
        assert!(Gains::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn baseline_zero_error_gives_zero() {
        let out = immune_pid_baseline(&[0.0; 50], &ImmunePidBaselineParams::default(), 1e-3).unwrap();
        assert_eq!(out, 0.0);
    }

    #[test]
    fn baseline_without_suppression_is_scaled_pid() {
        let p = ImmunePidBaselineParams { eta: 0.0, k0: 2.0, ..Default::default() };
        let dt = 1e-2;
        let errors = [0.3, 0.1, -0.2, 0.05];
        let mut ctl = ImmunePidBaseline::new(p, dt).unwrap();
        let mut integral = 0.0;
        for (k, &e) in errors.iter().enumerate() {
            integral += e * dt;
            let deriv = if k == 0 { 0.0 } else { (e - errors[k - 1]) / dt };
            let expected = p.k0 * (p.kp * e + p.ki * integral + p.kd * deriv);
            assert_eq!(ctl.update(e).control, expected);
        }
    }

    #[test]
    fn suppression_shape_properties() {
        assert_eq!(suppression_shape(0.0, 0.7), 0.0);
        assert!(suppression_shape(50.0, 1.0) > 1.0 - 1e-12);
        for x in [0.1, 1.0, 3.0] {
            assert_eq!(suppression_shape(x, 2.0), suppression_shape(-x, 2.0));
        }
        let mut prev = 0.0;
        for i in 1..100 {
            let f = suppression_shape(i as f64 * 0.05, 1.0);
            assert!(f > prev && f < 1.0);
            prev = f;
        }
    }

    #[test]
    fn baseline_rejects_bad_params() {
        let bad = ImmunePidBaselineParams { eta: 1.0, ..Default::default() };
        assert!(ImmunePidBaseline::new(bad, 1e-3).is_err());
        let bad = ImmunePidBaselineParams { sigma: 0.0, ..Default::default() };
        assert!(ImmunePidBaseline::new(bad, 1e-3).is_err());
        assert!(ImmunePidBaseline::new(Default::default(), 0.0).is_err());
    }

    proptest! {
        #[test]
        fn helper_pd_superposition(
            e1 in -10.0..10.0f64, ed1 in -10.0..10.0f64,
            e2 in -10.0..10.0f64, ed2 in -10.0..10.0f64,
            kp in 0.1..500.0f64, kd in 0.1..50.0f64,
        ) {
            let g = Gains::new(kp, kd).unwrap();
            let lhs = helper_pd(e1 + e2, ed1 + ed2, &g);
            let rhs = helper_pd(e1, ed1, &g) + helper_pd(e2, ed2, &g);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn tracking_helper_superposition(
            acc1 in -10.0..10.0f64, w1 in -10.0..10.0f64,
            acc2 in -10.0..10.0f64, w2 in -10.0..10.0f64,
        ) {
            let np = NominalParams::new(7.6, 0.0234).unwrap();
            let g = Gains::default();
            let s = |acc, w| ControlSample { theta_dd_d: acc, theta_dot: w, ..Default::default() };
            let lhs = tracking_helper(&s(acc1 + acc2, w1 + w2), &np, &g);
            let rhs = tracking_helper(&s(acc1, w1), &np, &g) + tracking_helper(&s(acc2, w2), &np, &g);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn combine_identities(u in -1e6..1e6f64) {
            prop_assert_eq!(immune_combine(u, 0.0), u);
            prop_assert_eq!(immune_combine(u, u), 0.0);
        }

        #[test]
        fn suppression_off_reduces_to_helper(e in -5.0..5.0f64, ud in -5.0..5.0f64, c in -3.0..3.0f64) {
            let u = general_immune_law(|x| c * x + x * x, |x| x, |_| 0.0, e, ud);
            prop_assert_eq!(u, c * e + e * e);
        }

        #[test]
        fn critical_damping_scale_invariant(rate in 0.1..100.0f64, c in 0.01..100.0f64, off in 0.5..1.5f64) {
            let g = Gains::critically_damped(rate).unwrap();
            let scaled = Gains::new(c * c * g.kp, c * g.kd).unwrap();
            prop_assert!(scaled.is_critically_damped());
            let skew = Gains::new(g.kp * off, g.kd).unwrap();
            let skew_scaled = Gains::new(c * c * skew.kp, c * skew.kd).unwrap();
            prop_assert_eq!(skew.is_critically_damped(), skew_scaled.is_critically_damped());
        }

        #[test]
        fn suppression_factor_bounds(eta in 0.0..0.999f64, sigma in 0.01..10.0f64, du in -100.0..100.0f64) {
            let p = ImmunePidBaselineParams { eta, sigma, ..Default::default() };
            let f = p.suppression_factor(du);
            prop_assert!(f <= 1.0);
            // Strict in exact arithmetic; the shape rounds to 1.0 for |du| >> sigma.
            prop_assert!(f >= 1.0 - eta);
        }
    }
}
