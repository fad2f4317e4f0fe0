use crate::error::{Error, Result};

use super::episode::EpisodeLog;

/// Settling band as a fraction of the largest desired position magnitude.
pub const SETTLE_FRACTION: f64 = 0.02;

/// Tracking summary of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rmse: f64,
    pub max_abs_e: f64,
    /// First logged time after which `|e|` stays inside the settling band;
    /// `None` if the last sample is still outside it.
    pub settle_time: Option<f64>,
}

pub fn metrics(log: &EpisodeLog) -> Result<Metrics> {
    if log.is_empty() {
        return Err(Error::Empty("episode log"));
    }
    let n = log.len() as f64;
    let rmse = (log.errors().map(|e| e * e).sum::<f64>() / n).sqrt();
    let max_abs_e = log.errors().map(f64::abs).fold(0.0, f64::max);
    let reference = log.rows.iter().map(|r| r.theta_d.abs()).fold(0.0, f64::max).max(1e-9);
    let band = SETTLE_FRACTION * reference;

    // Walk back from the end to the last sample outside the band.
    let settle_time = match log.rows.iter().rposition(|r| r.e.abs() >= band) {
        None => Some(log.rows[0].t),
        Some(i) if i + 1 < log.len() => Some(log.rows[i + 1].t),
        Some(_) => None,
    };
    Ok(Metrics {
        rmse,
        max_abs_e,
        settle_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::EpisodeRow;

    fn log_from(errors: &[f64], theta_d: f64) -> EpisodeLog {
        let rows = errors
            .iter()
            .enumerate()
            .map(|(k, &e)| EpisodeRow {
                t: 0.5 + k as f64 * 0.1,
                theta_d,
                theta: theta_d - e,
                e,
                e_dot: 0.0,
                v: 0.0,
                v_h: 0.0,
                v_s: 0.0,
                big_e: 0.0,
                d: 0.0,
            })
            .collect();
        EpisodeLog { rows }
    }

    #[test]
    fn zero_error() {
        let m = metrics(&log_from(&[0.0; 5], 1.0)).unwrap();
        assert_eq!(m, Metrics { rmse: 0.0, max_abs_e: 0.0, settle_time: Some(0.5) });
    }

    #[test]
    fn constant_error() {
        let m = metrics(&log_from(&[0.1; 10], 1.0)).unwrap();
        assert!((m.rmse - 0.1).abs() < 1e-15);
        assert_eq!(m.max_abs_e, 0.1);
        assert_eq!(m.settle_time, None);
    }

    #[test]
    fn settles_after_last_excursion() {
        let m = metrics(&log_from(&[0.5, 0.001, 0.03, 0.01, 0.0], 1.0)).unwrap();
        assert!((m.settle_time.unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn empty_log_is_an_error() {
        assert!(matches!(metrics(&EpisodeLog::default()), Err(Error::Empty(_))));
    }
}
