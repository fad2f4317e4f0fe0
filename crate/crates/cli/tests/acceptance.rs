//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nipd_cli::commands::{cmd_compare, cmd_gradcheck, cmd_simulate, cmd_train};
use nipd_cli::{RawConfig, RunConfig};
use nipd_core::harness::csvio::read_episode_csv;
use nipd_core::immune::check_critical_damping;
use nipd_core::plant::{dynamics_rhs, equivalent_disturbance, step};
use nipd_core::{Gains, LumpedParams, NominalParams, PlantState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn config(text: &str, out: &Path) -> RunConfig {
    let mut raw = RawConfig::parse(text).expect("acceptance config parses");
    raw.set(&format!("out={}", out.display())).unwrap();
    raw.build().expect("acceptance config is valid").0
}

fn gains_consistency() -> Outcome {
    let g = Gains::new(100.0, 20.0).unwrap();
    let exact = g.kd * g.kd == 4.0 * g.kp;
    Outcome {
        pass: exact && check_critical_damping(&g),
        detail: format!("K_D^2 = {}, 4 K_P = {}", g.kd * g.kd, 4.0 * g.kp),
    }
}

/// Oracle-mode episode from e(0) = 0.1, ė(0) = 0; returns (max deviation, bound ok, sign changes).
fn oracle_episode(out: &Path) -> Result<(f64, bool, usize), String> {
    let cfg = config(
        "a2 = 7.6\na1 = 0.0234\na0 = 0.26\na2_hat = 7.6\na1_hat = 0.0234\n\
         trajectory = constant\nvalue = 0\ntheta0 = -0.1\ntheta_dot0 = 0\n\
         tf = 1\ndt = 1e-4\ncontroller = oracle-compensation\n",
        out,
    );
    cmd_simulate(&cfg).map_err(|e| e.to_string())?;
    let log = read_episode_csv(fs::File::open(out.join("episode.csv")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    let mut bounded = true;
    let mut sign_changes = 0;
    let mut prev: Option<f64> = None;
    for r in &log.rows {
        let ideal = (0.1 + r.t) * (-10.0 * r.t).exp();
        worst = worst.max((r.e - ideal).abs());
        bounded &= r.e.abs() <= 1.01 * ideal + 1e-6;
        if let Some(p) = prev {
            if p.signum() != r.e.signum() && p != 0.0 && r.e != 0.0 {
                sign_changes += 1;
            }
        }
        prev = Some(r.e);
    }
    Ok((worst, bounded, sign_changes))
}

fn ideal_compensation(out: &Path) -> Outcome {
    match oracle_episode(out) {
        Ok((worst, _, _)) => Outcome {
            pass: worst < 1e-4,
            detail: format!("max |e - (0.1+t)e^(-10t)| = {worst:.3e} rad (< 1e-4)"),
        },
        Err(e) => Outcome { pass: false, detail: e },
    }
}

fn exponential_convergence(out: &Path) -> Outcome {
    match oracle_episode(out) {
        Ok((_, bounded, changes)) => Outcome {
            pass: bounded && changes == 0,
            detail: format!("envelope respected: {bounded}, sign changes: {changes}"),
        },
        Err(e) => Outcome { pass: false, detail: e },
    }
}

fn gradient_oracle(out: &Path) -> Outcome {
    let cfg = config("gc_hidden = 1, 3, 5\ngc_seeds = 10\ngc_steps = 20\n", out);
    match cmd_gradcheck(&cfg) {
        Ok(s) => Outcome {
            pass: s.max_rel_error < 1e-5 && s.cases.len() == 30,
            detail: format!("{} cases, max relative error {:.3e} (< 1e-5)", s.cases.len(), s.max_rel_error),
        },
        Err(e) => Outcome { pass: false, detail: e.to_string() },
    }
}

fn training_progress(out: &Path) -> Outcome {
    let cfg = config("", out);
    match cmd_train(&cfg) {
        Ok(s) => {
            let j0 = s.report.initial_cost();
            let last = s.report.final_record();
            let ratio = last.cost / j0;
            Outcome {
                pass: last.epoch == 50 && ratio <= 0.5 && s.trained.rmse < s.suppressor_off.rmse,
                detail: format!(
                    "J({})/J(0) = {ratio:.4} (<= 0.5), rmse {:.3e} vs suppressor off {:.3e}",
                    last.epoch, s.trained.rmse, s.suppressor_off.rmse
                ),
            }
        }
        Err(e) => Outcome { pass: false, detail: e.to_string() },
    }
}

fn comparison(out: &Path) -> Outcome {
    let cfg = config("against = immune-pid-baseline\ntune_baseline = true\n", out);
    match cmd_compare(&cfg) {
        Ok(s) => {
            let b = s.baseline.expect("baseline side");
            Outcome {
                pass: s.left.metrics.rmse < s.right.metrics.rmse,
                detail: format!(
                    "neural rmse {:.3e} vs tuned baseline rmse {:.3e} (K0 {}, suppression {}, sigma {})",
                    s.left.metrics.rmse, s.right.metrics.rmse, b.k0, b.eta, b.sigma
                ),
            }
        }
        Err(e) => Outcome { pass: false, detail: e.to_string() },
    }
}

/// Max state error of RK4 on a2·θ̈ + a1·θ̇ = v against the closed form at t = 1.
fn linear_error(a2: f64, a1: f64, dt: f64) -> f64 {
    let lp = LumpedParams::new(a2, a1, 0.0).unwrap();
    let (v, s0) = (3.0, PlantState::new(0.2, -1.0));
    let mut s = s0;
    for _ in 0..(1.0 / dt).round() as usize {
        s = step(&s, v, &lp, dt).unwrap();
    }
    let lam = a1 / a2;
    let (w_inf, c) = (v / a1, s0.theta_dot - v / a1);
    let theta = s0.theta + w_inf + c * (-(-lam).exp_m1()) / lam;
    let omega = w_inf + c * (-lam).exp();
    (s.theta - theta).abs().max((s.theta_dot - omega).abs())
}

fn integrator_order() -> Outcome {
    let dts = [1e-2, 5e-3, 2.5e-3];
    let errs: Vec<f64> = dts.iter().map(|&dt| linear_error(1.0, 5.0, dt)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let nominal = dts.iter().map(|&dt| linear_error(7.6, 0.0234, dt)).fold(0.0, f64::max);
    Outcome {
        pass: orders.iter().all(|&p| p >= 3.8),
        detail: format!(
            "a1/a2 = 5: orders {:.3} / {:.3} (>= 3.8); nominal a2, a1: max error {nominal:.1e}",
            orders[0], orders[1]
        ),
    }
}

fn algebraic_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let lp = LumpedParams::new(rng.gen_range(0.1..10.0), rng.gen_range(0.0..2.0), rng.gen_range(0.0..5.0)).unwrap();
        let np = NominalParams::new(rng.gen_range(0.1..10.0), rng.gen_range(0.0..2.0)).unwrap();
        let s = PlantState::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let v = rng.gen_range(-20.0..20.0);
        let acc = dynamics_rhs(&s, v, &lp);
        let d = equivalent_disturbance(acc, s.theta_dot, s.theta, &lp, &np);
        worst = worst.max((v - np.a2_hat * acc - np.a1_hat * s.theta_dot - d).abs());
    }
    Outcome {
        pass: worst < 1e-12,
        detail: format!("1000 draws, max |v - a2_hat th_dd - a1_hat th_d - d| = {worst:.1e} (< 1e-12)"),
    }
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let sub = |name: &str| dir.path().join(name);

    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Duration, Check)> = vec![
        ("gains-consistency", Duration::from_secs(1), Box::new(gains_consistency)),
        ("ideal-compensation", Duration::from_secs(1), Box::new(|| ideal_compensation(&sub("oracle")))),
        ("exponential-convergence", Duration::from_secs(1), Box::new(|| exponential_convergence(&sub("oracle")))),
        ("gradient-oracle", Duration::from_secs(10), Box::new(|| gradient_oracle(&sub("gradcheck")))),
        ("training-progress", Duration::from_secs(60), Box::new(|| training_progress(&sub("train")))),
        ("comparison", Duration::from_secs(300), Box::new(|| comparison(&sub("compare")))),
        ("integrator-order", Duration::from_secs(1), Box::new(integrator_order)),
        ("algebraic-identity", Duration::from_secs(1), Box::new(algebraic_identity)),
    ];

    let mut failures = 0;
    for (name, budget, check) in &criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let pass = outcome.pass && elapsed <= *budget;
        if !pass {
            failures += 1;
        }
        println!(
            "{} {:<24} {} [{:.2} s / {} s]",
            if pass { "PASS" } else { "FAIL" },
            name,
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
