use crate::error::{Error, Result};
use crate::immune::ImmunePidBaselineParams;

use super::episode::{run_episode, Controller, EpisodeConfig, EpisodeLog, Scenario};
use super::metrics::{metrics, Metrics};

/// One controller's result in a comparison.
#[derive(Debug, Clone)]
pub struct Side {
    pub label: &'static str,
    pub metrics: Metrics,
    pub log: EpisodeLog,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub left: Side,
    pub right: Side,
}

impl Comparison {
    /// The side with the strictly lower RMSE, if any.
    pub fn lower_rmse(&self) -> Option<&Side> {
        use std::cmp::Ordering::*;
        match self.left.metrics.rmse.partial_cmp(&self.right.metrics.rmse) {
            Some(Less) => Some(&self.left),
            Some(Greater) => Some(&self.right),
            _ => None,
        }
    }
}

fn side(cfg: &EpisodeConfig, scenario: &Scenario, controller: Controller<'_>) -> Result<Side> {
    let outcome = run_episode(cfg, scenario, controller)?;
    Ok(Side {
        label: controller.label(),
        metrics: metrics(&outcome.log)?,
        log: outcome.log,
    })
}

/// Run two controllers on the same trajectory and initial state.
pub fn compare(cfg: &EpisodeConfig, scenario: &Scenario, left: Controller<'_>, right: Controller<'_>) -> Result<Comparison> {
    Ok(Comparison {
        left: side(cfg, scenario, left)?,
        right: side(cfg, scenario, right)?,
    })
}

/// Search grid for the immune-PID baseline; the inner PID stays fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineGrid {
    pub k0: Vec<f64>,
    pub eta: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Inner PID gains (kp, ki, kd).
    pub inner: (f64, f64, f64),
}

impl Default for BaselineGrid {
    fn default() -> Self {
        let d = ImmunePidBaselineParams::default();
        BaselineGrid {
            k0: vec![0.5, 1.0, 2.0, 5.0],
            eta: vec![0.0, 0.3, 0.6],
            sigma: vec![0.1, 1.0, 10.0],
            inner: (d.kp, d.ki, d.kd),
        }
    }
}

impl BaselineGrid {
    pub fn candidates(&self) -> impl Iterator<Item = ImmunePidBaselineParams> + '_ {
        let (kp, ki, kd) = self.inner;
        self.k0.iter().flat_map(move |&k0| {
            self.eta.iter().flat_map(move |&eta| {
                self.sigma.iter().map(move |&sigma| ImmunePidBaselineParams {
                    k0,
                    eta,
                    sigma,
                    kp,
                    ki,
                    kd,
                })
            })
        })
    }
}

/// Grid-search the baseline for the lowest RMSE. Unstable candidates are skipped.
pub fn tune_baseline(
    cfg: &EpisodeConfig,
    scenario: &Scenario,
    grid: &BaselineGrid,
) -> Result<(ImmunePidBaselineParams, Metrics)> {
    let mut best: Option<(ImmunePidBaselineParams, Metrics)> = None;
    for params in grid.candidates() {
        let outcome = match run_episode(cfg, scenario, Controller::ImmunePid(params)) {
            Ok(o) => o,
            Err(e) if e.is_numerical() => continue,
            Err(e) => return Err(e),
        };
        let m = metrics(&outcome.log)?;
        if m.rmse.is_finite() && best.as_ref().is_none_or(|(_, b)| m.rmse < b.rmse) {
            best = Some((params, m));
        }
    }
    best.ok_or_else(|| Error::domain("baseline grid", "no stable candidate"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_controllers_give_identical_metrics() {
        let cfg = EpisodeConfig { tf: 1.0, ..Default::default() };
        let c = compare(&cfg, &Scenario::default(), Controller::PdOnly, Controller::PdOnly).unwrap();
        assert_eq!(c.left.metrics, c.right.metrics);
        assert!(c.lower_rmse().is_none());
    }

    #[test]
    fn oracle_beats_uncompensated_pd() {
        let cfg = EpisodeConfig { tf: 2.0, ..Default::default() };
        let c = compare(&cfg, &Scenario::default(), Controller::PdOnly, Controller::OracleCompensation).unwrap();
        assert!(c.right.metrics.rmse <= c.left.metrics.rmse);
        assert_eq!(c.lower_rmse().unwrap().label, "oracle-compensation");
    }

    #[test]
    fn grid_has_all_combinations() {
        assert_eq!(BaselineGrid::default().candidates().count(), 36);
    }
}
