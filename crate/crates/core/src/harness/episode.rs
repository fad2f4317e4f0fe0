use crate::error::{Error, Result};
use crate::immune::{tracking_helper, ControlSample, Gains, ImmunePidBaseline, ImmunePidBaselineParams};
use crate::plant::{self, LumpedParams, NominalParams, PlantState};
use crate::suppressor::{immune_error, InputScale, NetState, NetTopology, NetWeights, SuppressorRun};

use super::trajectory::Trajectory;

/// Time grid and initial condition of one closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeConfig {
    pub t0: f64,
    pub tf: f64,
    /// Control period; the voltage is held constant over it.
    pub dt: f64,
    /// Starting state; `None` starts on the reference at `t0`.
    pub initial: Option<PlantState>,
    /// RK4 sub-steps per control period. 1 means controller and integrator
    /// share `dt`.
    pub substeps: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            t0: 0.0,
            tf: 10.0,
            dt: 1e-3,
            initial: None,
            substeps: 1,
        }
    }
}

impl EpisodeConfig {
    /// Number of control steps `kf − k0`; `(tf − t0)/dt` must be a positive integer.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t0.is_finite() && self.tf.is_finite() && self.tf > self.t0) {
            return Err(Error::domain("tf", format!("must exceed t0 = {}, got {}", self.t0, self.tf)));
        }
        if self.substeps == 0 {
            return Err(Error::domain("substeps", "must be >= 1"));
        }
        if self.initial.is_some_and(|s| !s.is_finite()) {
            return Err(Error::domain("initial state", "must be finite"));
        }
        let ratio = (self.tf - self.t0) / self.dt;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-6 * n.max(1.0) {
            return Err(Error::domain(
                "dt",
                format!("(tf - t0)/dt = {ratio} is not a positive integer"),
            ));
        }
        Ok(n as usize)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// The configured initial state, or the reference position and velocity at `t0`.
    pub fn initial_state(&self, trajectory: &Trajectory) -> PlantState {
        self.initial.unwrap_or_else(|| {
            let r = trajectory.eval(self.t0);
            PlantState::new(r.pos, r.vel)
        })
    }
}

/// Plant, its nominal model, the feedback gains and the desired trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub trajectory: Trajectory,
    pub lumped: LumpedParams,
    pub nominal: NominalParams,
    pub gains: Gains,
}

impl Default for Scenario {
    fn default() -> Self {
        let lumped = LumpedParams::default();
        Scenario {
            trajectory: Trajectory::default(),
            lumped,
            nominal: NominalParams::exact(&lumped),
            gains: Gains::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.trajectory.validate()?;
        self.lumped.validate()?;
        self.nominal.validate()?;
        self.gains.validate()
    }
}

/// Control law applied during an episode.
#[derive(Debug, Clone, Copy)]
pub enum Controller<'a> {
    /// Helper voltage minus the recurrent suppressor output.
    NeuralImmunePd {
        topology: &'a NetTopology,
        weights: &'a NetWeights,
        input_scale: InputScale,
    },
    /// Helper voltage only (suppressor switched off).
    PdOnly,
    /// Helper voltage with the exact equivalent disturbance cancelled.
    OracleCompensation,
    /// Immune-PID reference controller; `v_h` logs its unsuppressed output.
    ImmunePid(ImmunePidBaselineParams),
}

impl Controller<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            Controller::NeuralImmunePd { .. } => "neural-immune-pd",
            Controller::PdOnly => "pd-only",
            Controller::OracleCompensation => "oracle-compensation",
            Controller::ImmunePid(_) => "immune-pid-baseline",
        }
    }
}

/// One logged control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRow {
    pub t: f64,
    pub theta_d: f64,
    pub theta: f64,
    pub e: f64,
    pub e_dot: f64,
    pub v: f64,
    pub v_h: f64,
    pub v_s: f64,
    /// Immune error `K_D·ė + K_P·e`.
    pub big_e: f64,
    /// Equivalent disturbance under the applied voltage.
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeLog {
    pub rows: Vec<EpisodeRow>,
}

impl EpisodeLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.e)
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    /// Rows for `k = k0 .. kf−1`.
    pub log: EpisodeLog,
    pub final_state: PlantState,
    /// Immune errors `E(k0+1) .. E(kf)`, measured after each control step.
    pub errors: Vec<f64>,
    /// Suppressor states `x(k0) .. x(kf)` for the neural controller.
    pub net_states: Option<Vec<NetState>>,
}

enum Runtime<'a> {
    Neural(SuppressorRun<'a>, InputScale),
    Pd,
    Oracle,
    Pid(ImmunePidBaseline),
}

/// Run one closed-loop episode.
///
/// Per step: evaluate the trajectory, form `e = θ_d − θ` and `ė = θ̇_d − θ̇`,
/// estimate `v̇` from the two previous applied voltages, compute `v_h`,
/// the suppressor `v_s`, apply `v = v_h − v_s` and advance the plant.
pub fn run_episode(cfg: &EpisodeConfig, scenario: &Scenario, controller: Controller<'_>) -> Result<EpisodeOutcome> {
    let steps = cfg.steps()?;
    scenario.validate()?;
    let Scenario {
        trajectory,
        lumped,
        nominal,
        gains,
    } = scenario;

    let mut runtime = match controller {
        Controller::NeuralImmunePd {
            topology,
            weights,
            input_scale,
        } => {
            topology.validate()?;
            input_scale.validate()?;
            Runtime::Neural(SuppressorRun::new(topology, weights)?, input_scale)
        }
        Controller::PdOnly => Runtime::Pd,
        Controller::OracleCompensation => Runtime::Oracle,
        Controller::ImmunePid(params) => Runtime::Pid(ImmunePidBaseline::new(params, cfg.dt)?),
    };

    let sub_dt = cfg.dt / cfg.substeps as f64;
    let mut state = cfg.initial_state(trajectory);
    let mut rows = Vec::with_capacity(steps);
    let mut errors = Vec::with_capacity(steps);
    // v(k−1), v(k−2)
    let mut v_hist: [Option<f64>; 2] = [None, None];

    for k in 0..steps {
        let t = cfg.time(k);
        let r = trajectory.eval(t);
        let e = r.pos - state.theta;
        let e_dot = r.vel - state.theta_dot;
        let v_rate = match v_hist {
            [Some(v1), Some(v2)] => (v1 - v2) / cfg.dt,
            _ => 0.0,
        };
        let sample = ControlSample {
            e,
            e_dot,
            u_dot: v_rate,
            theta_dot: state.theta_dot,
            theta_dd_d: r.acc,
        };

        let (v_h, v_s) = match &mut runtime {
            Runtime::Neural(net, scale) => (
                tracking_helper(&sample, nominal, gains),
                net.feed(scale.apply(e, e_dot, v_rate))?,
            ),
            Runtime::Pd => (tracking_helper(&sample, nominal, gains), 0.0),
            Runtime::Oracle => {
                let v_h = tracking_helper(&sample, nominal, gains);
                // Under exact cancellation the plant follows the nominal model,
                // â2·θ̈ + â1·θ̇ = v_h, which fixes θ̈ without an algebraic loop.
                let acc = (v_h - nominal.a1_hat * state.theta_dot) / nominal.a2_hat;
                let d = plant::equivalent_disturbance(acc, state.theta_dot, state.theta, lumped, nominal);
                (v_h, -d)
            }
            Runtime::Pid(pid) => {
                let out = pid.update(e);
                (out.helper, out.helper - out.control)
            }
        };
        let v = v_h - v_s;
        if !v.is_finite() {
            return Err(Error::NonFinite { t });
        }

        let acc = plant::dynamics_rhs(&state, v, lumped);
        let d = plant::equivalent_disturbance(acc, state.theta_dot, state.theta, lumped, nominal);
        rows.push(EpisodeRow {
            t,
            theta_d: r.pos,
            theta: state.theta,
            e,
            e_dot,
            v,
            v_h,
            v_s,
            big_e: immune_error(e, e_dot, gains),
            d,
        });

        for _ in 0..cfg.substeps {
            state = plant::step(&state, v, lumped, sub_dt).map_err(|err| match err {
                Error::NonFinite { .. } => Error::NonFinite { t },
                other => other,
            })?;
        }
        v_hist = [Some(v), v_hist[0]];

        let r_next = trajectory.eval(cfg.time(k + 1));
        errors.push(immune_error(r_next.pos - state.theta, r_next.vel - state.theta_dot, gains));
    }

    let net_states = match runtime {
        Runtime::Neural(net, _) => Some(net.finish()),
        _ => None,
    };
    Ok(EpisodeOutcome {
        log: EpisodeLog { rows },
        final_state: state,
        errors,
        net_states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suppressor::init_weights;

    fn oracle_setup(e0: f64) -> (EpisodeConfig, Scenario) {
        let target = 0.5;
        let cfg = EpisodeConfig {
            t0: 0.0,
            tf: 1.0,
            dt: 1e-4,
            initial: Some(PlantState::new(target - e0, 0.0)),
            substeps: 1,
        };
        let sc = Scenario {
            trajectory: Trajectory::Constant { value: target },
            ..Scenario::default()
        };
        (cfg, sc)
    }

    #[test]
    fn steps_validation() {
        assert_eq!(EpisodeConfig::default().steps().unwrap(), 10_000);
        let bad = EpisodeConfig { dt: 0.3, tf: 1.0, ..Default::default() };
        assert!(bad.steps().is_err());
        let bad = EpisodeConfig { dt: -1.0, ..Default::default() };
        assert!(bad.steps().is_err());
        let bad = EpisodeConfig { tf: 0.0, ..Default::default() };
        assert!(bad.steps().is_err());
    }

    #[test]
    fn oracle_holds_gravity_equilibrium() {
        let (cfg, sc) = oracle_setup(0.0);
        let out = run_episode(&cfg, &sc, Controller::OracleCompensation).unwrap();
        assert!(out.log.errors().all(|e| e.abs() < 1e-13));
    }

    #[test]
    fn oracle_follows_critically_damped_solution() {
        let (cfg, sc) = oracle_setup(0.1);
        let out = run_episode(&cfg, &sc, Controller::OracleCompensation).unwrap();
        let worst = out
            .log
            .rows
            .iter()
            .map(|r| (r.e - (0.1 + r.t) * (-10.0 * r.t).exp()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "max deviation {worst}");
    }

    #[test]
    fn log_columns_are_consistent() {
        let t = NetTopology::default();
        let w = init_weights(&t, 0.1, 3).unwrap();
        let cfg = EpisodeConfig { tf: 1.0, ..Default::default() };
        let sc = Scenario::default();
        let controllers = [
            Controller::NeuralImmunePd { topology: &t, weights: &w, input_scale: InputScale::default() },
            Controller::PdOnly,
            Controller::OracleCompensation,
            Controller::ImmunePid(ImmunePidBaselineParams::default()),
        ];
        for c in controllers {
            let out = run_episode(&cfg, &sc, c).unwrap();
            assert_eq!(out.log.len(), 1000);
            assert_eq!(out.errors.len(), 1000);
            for r in &out.log.rows {
                assert_eq!(r.v, r.v_h - r.v_s, "{}", c.label());
                assert_eq!(r.e, r.theta_d - r.theta);
            }
        }
    }

    #[test]
    fn pd_only_has_zero_suppressor() {
        let out = run_episode(&EpisodeConfig { tf: 0.1, ..Default::default() }, &Scenario::default(), Controller::PdOnly).unwrap();
        assert!(out.log.rows.iter().all(|r| r.v_s == 0.0));
        assert!(out.net_states.is_none());
    }

    #[test]
    fn neural_records_states_and_lags_voltage_rate() {
        let t = NetTopology::default();
        let w = init_weights(&t, 0.2, 5).unwrap();
        let cfg = EpisodeConfig { tf: 0.01, ..Default::default() };
        let out = run_episode(&cfg, &Scenario::default(), Controller::NeuralImmunePd { topology: &t, weights: &w, input_scale: InputScale::default() }).unwrap();
        let states = out.net_states.unwrap();
        assert_eq!(states.len(), 11);
        let rows = &out.log.rows;
        assert_eq!(states[0].x[2], 0.0);
        assert_eq!(states[1].x[2], 0.0);
        let scale = InputScale::default();
        assert_eq!(states[2].x[2], scale.v_dot * ((rows[1].v - rows[0].v) / cfg.dt));
        assert_eq!(states[5].x[0], scale.e * rows[5].e);
        assert_eq!(states[5].x[1], scale.e_dot * rows[5].e_dot);
    }

    #[test]
    fn instability_is_reported() {
        let t = NetTopology::default();
        let w = init_weights(&t, 1e6, 5).unwrap();
        let cfg = EpisodeConfig { tf: 1.0, ..Default::default() };
        let err = run_episode(&cfg, &Scenario::default(), Controller::NeuralImmunePd { topology: &t, weights: &w, input_scale: InputScale::default() });
        assert!(matches!(err, Err(Error::NonFinite { .. })), "{err:?}");
    }
}
