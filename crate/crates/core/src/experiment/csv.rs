//! Per-epoch telemetry as CSV.
//!
//! Columns:
//!
//! * `epoch`: completed epochs, starting at 1.
//! * `oracle_units`: cumulative component-gradient evaluations, with a full
//!   gradient counted as n units.
//! * `grad_norm_sq`: squared norm of the exact gradient at the point the
//!   next epoch starts from (the reference point for the SVRG variants,
//!   x^0 for the SARAH variants, the last iterate for SGD, SAG and SAGA).
//! * `loss_gap`: f - f* at that point; empty when f* is unknown.
//! * `running_mean_grad_sq`: mean of `grad_norm_sq` over rows so far.
//! * `seconds`: elapsed wall-clock time, or 0 when timing is off.
//!
//! Reals are written in scientific notation with 17 significant digits,
//! which round-trips every f64 exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{contract, ParseError, Result};

pub const CSV_HEADER: &str = "epoch,oracle_units,grad_norm_sq,loss_gap,running_mean_grad_sq,seconds";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub epoch: usize,
    pub oracle_units: u64,
    pub grad_norm_sq: f64,
    pub loss_gap: Option<f64>,
    pub running_mean_grad_sq: f64,
    pub seconds: f64,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn emit_csv(records: &[RunRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(contract("cannot emit CSV for an empty run"));
    }
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let gap = r.loss_gap.map(real).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.epoch,
            r.oracle_units,
            real(r.grad_norm_sq),
            gap,
            real(r.running_mean_grad_sq),
            real(r.seconds)
        )
        .expect("writing to a String cannot fail");
    }
    Ok(out)
}

pub fn parse_csv(text: &str) -> Result<Vec<RunRecord>, ParseError> {
    let mut lines = text.split('\n').enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(ParseError::new(1, 1, "missing or unexpected header")),
    }
    let mut records = Vec::new();
    for (k, line) in lines {
        let line_no = k + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(ParseError::new(line_no, 1, format!("expected 6 fields, found {}", fields.len())));
        }
        let mut column = 1;
        let mut columns = Vec::with_capacity(6);
        for f in &fields {
            columns.push(column);
            column += f.chars().count() + 1;
        }
        let bad = |i: usize, what: &str| ParseError::new(line_no, columns[i], format!("invalid {what} '{}'", fields[i]));
        let epoch = fields[0].parse().map_err(|_| bad(0, "epoch"))?;
        let oracle_units = fields[1].parse().map_err(|_| bad(1, "oracle_units"))?;
        let grad_norm_sq = fields[2].parse().map_err(|_| bad(2, "grad_norm_sq"))?;
        let loss_gap = if fields[3].is_empty() {
            None
        } else {
            Some(fields[3].parse().map_err(|_| bad(3, "loss_gap"))?)
        };
        let running_mean_grad_sq = fields[4].parse().map_err(|_| bad(4, "running_mean_grad_sq"))?;
        let seconds = fields[5].parse().map_err(|_| bad(5, "seconds"))?;
        records.push(RunRecord { epoch, oracle_units, grad_norm_sq, loss_gap, running_mean_grad_sq, seconds });
    }
    Ok(records)
}
