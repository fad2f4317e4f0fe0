use nipd_core::suppressor::init_weights;
use nipd_core::{
    metrics, run_episode, Controller, EpisodeConfig, EpisodeLog, Gains, InputScale, LumpedParams, NetTopology,
    NominalParams, PlantState, Scenario, Trajectory,
};

fn oracle_run(dt: f64) -> (EpisodeLog, Scenario) {
    let cfg = EpisodeConfig {
        t0: 0.0,
        tf: 1.0,
        dt,
        initial: Some(PlantState::new(0.4, 0.0)),
        substeps: 1,
    };
    let sc = Scenario {
        trajectory: Trajectory::Constant { value: 0.5 },
        ..Scenario::default()
    };
    (run_episode(&cfg, &sc, Controller::OracleCompensation).unwrap().log, sc)
}

/// Largest |â2·(ë + K_D·ė + K_P·e)| with ë from central differences of the logged ė.
fn error_dynamics_residual(log: &EpisodeLog, sc: &Scenario, dt: f64) -> f64 {
    let g = sc.gains;
    log.rows
        .windows(3)
        .map(|w| {
            let e_dd = (w[2].e_dot - w[0].e_dot) / (2.0 * dt);
            (sc.nominal.a2_hat * (e_dd + g.kd * w[1].e_dot + g.kp * w[1].e)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn oracle_mode_obeys_error_dynamics() {
    let (coarse, sc) = oracle_run(1e-3);
    let (fine, _) = oracle_run(5e-4);
    let r_coarse = error_dynamics_residual(&coarse, &sc, 1e-3);
    let r_fine = error_dynamics_residual(&fine, &sc, 5e-4);
    // Scale of the terms being cancelled.
    let scale = sc.nominal.a2_hat * sc.gains.kp * 0.1;
    assert!(r_coarse < 2e-2 * scale, "residual {r_coarse}");
    // The held voltage puts a kink in θ̈ at every sample, so the sampled
    // residual converges at first order.
    let ratio = r_coarse / r_fine;
    assert!((1.8..2.2).contains(&ratio), "residual ratio {ratio}");
}

#[test]
fn oracle_rmse_matches_closed_form_integral() {
    let dt = 1e-4;
    let (log, _) = oracle_run(dt);
    let m = metrics(&log).unwrap();
    // ∫₀¹ (c + t)² e^{−αt} dt with c = 0.1, α = 20.
    let (c, a): (f64, f64) = (0.1, 20.0);
    let prim = |t: f64| -(-a * t).exp() * ((c + t).powi(2) / a + 2.0 * (c + t) / (a * a) + 2.0 / (a * a * a));
    let rmse = (prim(1.0) - prim(0.0)).sqrt();
    assert!((m.rmse - rmse).abs() / rmse < 1e-3, "{} vs {}", m.rmse, rmse);
}

#[test]
fn pure_feedforward_without_disturbance() {
    let lumped = LumpedParams::new(7.6, 0.0234, 0.0).unwrap();
    let sc = Scenario {
        trajectory: Trajectory::Sinusoid { amplitude: 1.0, omega: 0.1 },
        lumped,
        nominal: NominalParams::exact(&lumped),
        gains: Gains::default(),
    };
    let out = run_episode(&EpisodeConfig::default(), &sc, Controller::PdOnly).unwrap();
    let worst = out.log.errors().map(f64::abs).fold(0.0, f64::max);
    assert!(worst < 1e-8, "max |e| = {worst}");
}

#[test]
fn feedforward_error_shrinks_with_control_period() {
    let lumped = LumpedParams::new(7.6, 0.0234, 0.0).unwrap();
    let sc = Scenario {
        lumped,
        nominal: NominalParams::exact(&lumped),
        ..Scenario::default()
    };
    let worst = |dt: f64| {
        let cfg = EpisodeConfig { tf: 2.0, dt, ..Default::default() };
        let out = run_episode(&cfg, &sc, Controller::PdOnly).unwrap();
        out.log.errors().map(f64::abs).fold(0.0, f64::max)
    };
    let (a, b) = (worst(2e-3), worst(1e-3));
    assert!(a / b > 1.8, "{a} vs {b}");
}

#[test]
fn episodes_are_deterministic() {
    let topo = NetTopology::default();
    let w = init_weights(&topo, 0.1, 4).unwrap();
    let cfg = EpisodeConfig { tf: 2.0, ..Default::default() };
    let run = || {
        run_episode(
            &cfg,
            &Scenario::default(),
            Controller::NeuralImmunePd { topology: &topo, weights: &w, input_scale: InputScale::default() },
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.log, b.log);
    assert_eq!(a.errors, b.errors);
}

#[test]
fn default_start_is_on_the_reference() {
    let cfg = EpisodeConfig::default();
    let sc = Scenario::default();
    let out = run_episode(&EpisodeConfig { tf: 0.01, ..cfg }, &sc, Controller::PdOnly).unwrap();
    assert_eq!(out.log.rows[0].e, 0.0);
    assert_eq!(out.log.rows[0].e_dot, 0.0);
}
