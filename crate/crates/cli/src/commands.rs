use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nipd_core::gradcheck::{check_with, random_case, GradCheckReport};
use nipd_core::harness::csvio::{fmt_f64, write_episode_csv, write_train_csv};
use nipd_core::harness::tune_baseline;
use nipd_core::suppressor::{init_weights, read_checkpoint, write_checkpoint, CellKind};
use nipd_core::{
    metrics, run_episode, train, Controller, EpisodeLog, Gains, ImmunePidBaselineParams, Metrics, NetTopology,
    NetWeights, Scenario, TrainReport,
};
use rayon::prelude::*;

use crate::config::{render_config, ControllerKind, RunConfig};
use crate::error::CliError;

/// Largest relative gradient error accepted by `gradcheck`.
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

fn prepare_out(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::config(format!("cannot create output directory {}: {e}", cfg.out.display())))?;
    fs::write(cfg.out.join("config.txt"), render_config(cfg))?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn write_log(path: &Path, log: &EpisodeLog) -> Result<(), CliError> {
    let mut w = create(path)?;
    write_episode_csv(log, &mut w)?;
    w.flush()?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Weights from the configured checkpoint, or a fresh seeded initialisation.
pub fn load_weights(cfg: &RunConfig) -> Result<(NetTopology, NetWeights), CliError> {
    match &cfg.checkpoint {
        Some(path) => {
            let f = File::open(path)
                .map_err(|e| CliError::config(format!("checkpoint {}: {e}", path.display())))?;
            read_checkpoint(BufReader::new(f))
                .map_err(|e| CliError::config(format!("checkpoint {}: {e}", path.display())))
        }
        None => Ok((
            cfg.topology,
            init_weights(&cfg.topology, cfg.training.init_scale, cfg.training.seed)?,
        )),
    }
}

/// Resolve a controller kind against the loaded network.
fn controller<'a>(
    kind: ControllerKind,
    cfg: &RunConfig,
    net: &'a (NetTopology, NetWeights),
    baseline: ImmunePidBaselineParams,
) -> Controller<'a> {
    match kind {
        ControllerKind::NeuralImmunePd if cfg.suppressor => Controller::NeuralImmunePd {
            topology: &net.0,
            weights: &net.1,
            input_scale: cfg.training.input_scale,
        },
        ControllerKind::NeuralImmunePd | ControllerKind::PdOnly => Controller::PdOnly,
        ControllerKind::ImmunePidBaseline => Controller::ImmunePid(baseline),
        ControllerKind::OracleCompensation => Controller::OracleCompensation,
    }
}

/// Run the configured controller once and write `episode.csv`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Metrics, CliError> {
    let scenario = cfg.scenario()?;
    let net = match cfg.controller {
        ControllerKind::NeuralImmunePd => load_weights(cfg)?,
        _ => (cfg.topology, NetWeights::zeros(&cfg.topology)),
    };
    let out = run_episode(&cfg.episode, &scenario, controller(cfg.controller, cfg, &net, cfg.baseline))?;
    prepare_out(cfg)?;
    write_log(&cfg.out.join("episode.csv"), &out.log)?;
    Ok(metrics(&out.log)?)
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub report: TrainReport,
    /// Tracking with the final weights.
    pub trained: Metrics,
    /// Same trajectory with the suppressor switched off.
    pub suppressor_off: Metrics,
}

/// Train the suppressor; writes `train.csv`, `weights.txt` and the final `episode.csv`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary, CliError> {
    let scenario = cfg.scenario()?;
    prepare_out(cfg)?;
    let report = train(&cfg.episode, &scenario, &cfg.topology, &cfg.training)?;

    let mut w = create(&cfg.out.join("train.csv"))?;
    write_train_csv(&report.records, &mut w)?;
    w.flush()?;
    let mut w = create(&cfg.out.join("weights.txt"))?;
    write_checkpoint(&report.topology, &report.weights, &mut w)?;
    w.flush()?;

    let final_run = run_episode(
        &cfg.episode,
        &scenario,
        Controller::NeuralImmunePd {
            topology: &report.topology,
            weights: &report.weights,
            input_scale: cfg.training.input_scale,
        },
    )?;
    write_log(&cfg.out.join("episode.csv"), &final_run.log)?;
    let off = run_episode(&cfg.episode, &scenario, Controller::PdOnly)?;
    Ok(TrainSummary {
        report,
        trained: metrics(&final_run.log)?,
        suppressor_off: metrics(&off.log)?,
    })
}

#[derive(Debug, Clone)]
pub struct CompareSide {
    pub label: &'static str,
    pub metrics: Metrics,
}

#[derive(Debug, Clone)]
pub struct CompareSummary {
    pub left: CompareSide,
    pub right: CompareSide,
    /// Baseline parameters used on the right, when it is the immune-PID controller.
    pub baseline: Option<ImmunePidBaselineParams>,
}

impl CompareSummary {
    /// Label of the lower-RMSE side; `None` on a tie.
    pub fn winner(&self) -> Option<&'static str> {
        let (l, r) = (self.left.metrics.rmse, self.right.metrics.rmse);
        if l < r {
            Some(self.left.label)
        } else if r < l {
            Some(self.right.label)
        } else {
            None
        }
    }
}

fn neural_for_compare(cfg: &RunConfig, scenario: &Scenario) -> Result<(NetTopology, NetWeights), CliError> {
    if cfg.checkpoint.is_some() {
        return load_weights(cfg);
    }
    let report = train(&cfg.episode, scenario, &cfg.topology, &cfg.training)?;
    Ok((report.topology, report.weights))
}

/// Neural immune PD (checkpoint, or trained in-process) against `against`.
///
/// Writes `compare_left.csv`, `compare_right.csv` and `compare_summary.csv`.
pub fn cmd_compare(cfg: &RunConfig) -> Result<CompareSummary, CliError> {
    let scenario = cfg.scenario()?;
    let net = neural_for_compare(cfg, &scenario)?;

    let baseline = if cfg.against == ControllerKind::ImmunePidBaseline {
        Some(if cfg.tune_baseline {
            tune_baseline(&cfg.episode, &scenario, &cfg.baseline_grid())?.0
        } else {
            cfg.baseline
        })
    } else {
        None
    };

    let left_ctrl = Controller::NeuralImmunePd {
        topology: &net.0,
        weights: &net.1,
        input_scale: cfg.training.input_scale,
    };
    let right_ctrl = controller(cfg.against, cfg, &net, baseline.unwrap_or(cfg.baseline));
    let left = run_episode(&cfg.episode, &scenario, left_ctrl)?;
    let right = run_episode(&cfg.episode, &scenario, right_ctrl)?;

    prepare_out(cfg)?;
    write_log(&cfg.out.join("compare_left.csv"), &left.log)?;
    write_log(&cfg.out.join("compare_right.csv"), &right.log)?;
    let summary = CompareSummary {
        left: CompareSide { label: left_ctrl.label(), metrics: metrics(&left.log)? },
        right: CompareSide { label: right_ctrl.label(), metrics: metrics(&right.log)? },
        baseline,
    };

    let mut w = csv_writer(&cfg.out.join("compare_summary.csv"))?;
    w.write_record(["side", "method", "rmse", "max_abs_e", "settle_time", "lower_rmse"])
        .map_err(csv_err)?;
    for (side, s, other) in [
        ("left", &summary.left, &summary.right),
        ("right", &summary.right, &summary.left),
    ] {
        w.write_record([
            side.to_string(),
            s.label.to_string(),
            fmt_f64(s.metrics.rmse),
            fmt_f64(s.metrics.max_abs_e),
            opt(s.metrics.settle_time),
            (s.metrics.rmse < other.metrics.rmse).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(summary)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::config(format!("csv: {e}"))
}

#[derive(Debug, Clone)]
pub struct GradcheckCase {
    pub hidden: usize,
    pub seed: u64,
    pub report: GradCheckReport,
}

#[derive(Debug, Clone)]
pub struct GradcheckSummary {
    pub cases: Vec<GradcheckCase>,
    pub max_rel_error: f64,
}

/// Compare BPTT against central differences on random teacher-forced episodes.
///
/// Writes `gradcheck.csv`; fails with a numerical error above [`GRADCHECK_TOLERANCE`].
pub fn cmd_gradcheck(cfg: &RunConfig) -> Result<GradcheckSummary, CliError> {
    let g = &cfg.gradcheck;
    let mut cases = Vec::new();
    for &p in &g.hidden {
        let topo = NetTopology { hidden: p, ..cfg.topology };
        for seed in 0..g.seeds {
            let (w, ep) = random_case(&topo, g.steps, seed, g.weight_scale)?;
            let factor = g.corrupt_derivative;
            let report = check_with(&topo, &w, &ep, |kind, x| match kind {
                CellKind::Hidden => factor * topo.derivative(kind, x),
                _ => topo.derivative(kind, x),
            })?;
            cases.push(GradcheckCase { hidden: p, seed, report });
        }
    }
    let max_rel_error = cases.iter().map(|c| c.report.max_rel_error).fold(0.0, f64::max);

    prepare_out(cfg)?;
    let mut w = csv_writer(&cfg.out.join("gradcheck.csv"))?;
    w.write_record(["p", "seed", "max_rel_error", "checked", "skipped"]).map_err(csv_err)?;
    for c in &cases {
        w.write_record([
            c.hidden.to_string(),
            c.seed.to_string(),
            fmt_f64(c.report.max_rel_error),
            c.report.checked.to_string(),
            c.report.skipped.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    if max_rel_error < GRADCHECK_TOLERANCE {
        Ok(GradcheckSummary { cases, max_rel_error })
    } else {
        Err(CliError::Numerical(format!(
            "gradient check failed: max relative error {max_rel_error:e} >= {GRADCHECK_TOLERANCE:e}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gains: Gains,
    pub critically_damped: bool,
    pub metrics: Metrics,
}

/// One episode per (K_P, K_D) grid point, run in parallel; writes `sweep.csv`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>, CliError> {
    let base = cfg.scenario()?;
    let net = match cfg.controller {
        ControllerKind::NeuralImmunePd => load_weights(cfg)?,
        _ => (cfg.topology, NetWeights::zeros(&cfg.topology)),
    };
    let rows: Vec<SweepRow> = cfg
        .sweep_grid
        .par_iter()
        .map(|&(kp, kd)| {
            let gains = Gains::new(kp, kd)?;
            let scenario = Scenario { gains, ..base };
            let out = run_episode(&cfg.episode, &scenario, controller(cfg.controller, cfg, &net, cfg.baseline))?;
            Ok(SweepRow {
                gains,
                critically_damped: gains.is_critically_damped(),
                metrics: metrics(&out.log)?,
            })
        })
        .collect::<nipd_core::Result<_>>()?;

    prepare_out(cfg)?;
    let mut w = csv_writer(&cfg.out.join("sweep.csv"))?;
    w.write_record(["K_P", "K_D", "critically_damped", "rmse", "max_abs_e", "settle_time"])
        .map_err(csv_err)?;
    for r in &rows {
        w.write_record([
            fmt_f64(r.gains.kp),
            fmt_f64(r.gains.kd),
            r.critically_damped.to_string(),
            fmt_f64(r.metrics.rmse),
            fmt_f64(r.metrics.max_abs_e),
            opt(r.metrics.settle_time),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(rows)
}
