use crate::error::{Error, Result};
use crate::suppressor::{
    apply_update, bptt_deltas, cost, init_weights, weight_gradient, InputScale, NetTopology, NetWeights,
};

use super::episode::{run_episode, Controller, EpisodeConfig, EpisodeOutcome, Scenario};
use super::metrics::metrics;

/// Training stops with [`Error::Diverged`] once `J` exceeds this multiple of `J(0)`.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    /// Number of weight updates.
    pub epochs: usize,
    pub eta: f64,
    pub seed: u64,
    pub init_scale: f64,
    /// +1 or −1; multiplies the injected immune error.
    pub error_sign: f64,
    pub input_scale: InputScale,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 50,
            eta: 1e-3,
            seed: 0,
            init_scale: 0.1,
            error_sign: 1.0,
            input_scale: InputScale::default(),
        }
    }
}

impl TrainOptions {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::domain("epochs", "must be >= 1"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::domain("eta", format!("must be >= 0, got {}", self.eta)));
        }
        if self.error_sign != 1.0 && self.error_sign != -1.0 {
            return Err(Error::domain("error_sign", format!("must be +1 or -1, got {}", self.error_sign)));
        }
        self.input_scale.validate()
    }
}

/// Cost and tracking figures of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub cost: f64,
    pub rmse: f64,
    pub max_abs_e: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Records `0 ..= epochs`. Record `l` is the episode run with the weights
    /// after `l` updates; the last one is evaluated without a further update.
    pub records: Vec<EpochRecord>,
    pub topology: NetTopology,
    pub weights: NetWeights,
}

impl TrainReport {
    pub fn initial_cost(&self) -> f64 {
        self.records[0].cost
    }

    pub fn final_record(&self) -> &EpochRecord {
        self.records.last().expect("report has at least one record")
    }
}

fn record(epoch: usize, outcome: &EpisodeOutcome) -> Result<EpochRecord> {
    let m = metrics(&outcome.log)?;
    Ok(EpochRecord {
        epoch,
        cost: cost(&outcome.errors)?,
        rmse: m.rmse,
        max_abs_e: m.max_abs_e,
    })
}

/// Run one episode with `weights` and return its record with the updated weights.
pub fn train_epoch(
    cfg: &EpisodeConfig,
    scenario: &Scenario,
    topo: &NetTopology,
    weights: &NetWeights,
    opts: &TrainOptions,
    epoch: usize,
) -> Result<(EpochRecord, NetWeights)> {
    let outcome = run_episode(
        cfg,
        scenario,
        Controller::NeuralImmunePd {
            topology: topo,
            weights,
            input_scale: opts.input_scale,
        },
    )?;
    let rec = record(epoch, &outcome)?;
    let states = outcome.net_states.as_deref().expect("neural episode records states");
    let injected: Vec<f64> = outcome.errors.iter().map(|e| opts.error_sign * e).collect();
    let deltas = bptt_deltas(topo, weights, states, &injected)?;
    let grad = weight_gradient(&deltas, states)?;
    Ok((rec, apply_update(weights, &grad, opts.eta)?))
}

/// Episode-batch training: initialise, then repeat run → BPTT → update.
pub fn train(cfg: &EpisodeConfig, scenario: &Scenario, topo: &NetTopology, opts: &TrainOptions) -> Result<TrainReport> {
    opts.validate()?;
    topo.validate()?;
    let mut weights = init_weights(topo, opts.init_scale, opts.seed)?;
    let mut records = Vec::with_capacity(opts.epochs + 1);

    for epoch in 0..=opts.epochs {
        let rec = if epoch < opts.epochs {
            let (rec, next) = train_epoch(cfg, scenario, topo, &weights, opts, epoch)?;
            weights = next;
            rec
        } else {
            let outcome = run_episode(
                cfg,
                scenario,
                Controller::NeuralImmunePd {
                    topology: topo,
                    weights: &weights,
                    input_scale: opts.input_scale,
                },
            )?;
            record(epoch, &outcome)?
        };
        let initial = records.first().map_or(rec.cost, |r: &EpochRecord| r.cost);
        if !rec.cost.is_finite() || rec.cost > DIVERGENCE_FACTOR * initial {
            return Err(Error::Diverged {
                epoch,
                cost: rec.cost,
                initial,
            });
        }
        records.push(rec);
    }

    Ok(TrainReport {
        records,
        topology: *topo,
        weights,
    })
}
