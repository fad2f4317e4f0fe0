//! CSV emission for episode logs and training reports.
//!
//! Floats are written with 17 significant digits, which round-trips `f64`.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::episode::{EpisodeLog, EpisodeRow};
use super::train::EpochRecord;

pub const EPISODE_HEADER: [&str; 10] = ["t", "theta_d", "theta", "e", "e_dot", "v", "v_h", "v_s", "E", "d"];
pub const TRAIN_HEADER: [&str; 4] = ["epoch", "J", "rmse", "max_abs_e"];

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_episode_csv<W: Write>(log: &EpisodeLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EPISODE_HEADER)?;
    for r in &log.rows {
        w.write_record(
            [r.t, r.theta_d, r.theta, r.e, r.e_dot, r.v, r.v_h, r.v_s, r.big_e, r.d].map(fmt_f64),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_episode_csv<R: Read>(input: R) -> Result<EpisodeLog> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(EPISODE_HEADER) {
        return Err(Error::domain("episode csv", format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::domain("episode csv", format!("{s:?}: {e}"))))
            .collect::<Result<_>>()?;
        rows.push(EpisodeRow {
            t: v[0],
            theta_d: v[1],
            theta: v[2],
            e: v[3],
            e_dot: v[4],
            v: v[5],
            v_h: v[6],
            v_s: v[7],
            big_e: v[8],
            d: v[9],
        });
    }
    Ok(EpisodeLog { rows })
}

pub fn write_train_csv<W: Write>(records: &[EpochRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAIN_HEADER)?;
    for r in records {
        w.write_record([
            r.epoch.to_string(),
            fmt_f64(r.cost),
            fmt_f64(r.rmse),
            fmt_f64(r.max_abs_e),
        ])?;
    }
    w.flush()?;
    Ok(())
}
