use std::io::{Read, Write};

use super::{fmt_f64, IoError};
use crate::analysis::convergence::NORM_COLUMNS;
use crate::analysis::{ErrorLevel, ErrorTable, Ladder};
use crate::scheme::Diagnostics;

pub const TIMESERIES_HEADER: [&str; 10] = [
    "step",
    "time",
    "energy_total",
    "energy_kin_c",
    "energy_kin_m",
    "energy_interfacial",
    "dissipation",
    "mass",
    "newton_iters",
    "residual",
];

/// Leading columns of the error table; the norm columns follow, then
/// [`SOLVER_COLUMNS`]
pub const ERROR_TABLE_HEADER: [&str; 6] = ["ladder", "level", "h", "tau", "steps", "status"];

pub const SOLVER_COLUMNS: [&str; 2] = ["newton_max", "linear_residual_max"];

/// One parsed time-series line
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeseriesRow {
    pub step: usize,
    pub time: f64,
    pub energy_total: f64,
    pub energy_kin_c: f64,
    pub energy_kin_m: f64,
    pub energy_interfacial: f64,
    pub dissipation: f64,
    pub mass: f64,
    pub newton_iters: usize,
    pub residual: f64,
}

impl From<&Diagnostics> for TimeseriesRow {
    fn from(d: &Diagnostics) -> Self {
        TimeseriesRow {
            step: d.step,
            time: d.time,
            energy_total: d.energy.total,
            energy_kin_c: d.energy.kinetic_conduit,
            energy_kin_m: d.energy.kinetic_matrix,
            energy_interfacial: d.energy.interfacial,
            dissipation: d.energy.dissipation,
            mass: d.mass,
            newton_iters: d.newton_iterations,
            residual: d.residual,
        }
    }
}

pub fn write_timeseries<W: Write>(out: W, rows: &[Diagnostics]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIMESERIES_HEADER)?;
    for d in rows {
        let r = TimeseriesRow::from(d);
        w.write_record([
            r.step.to_string(),
            fmt_f64(r.time),
            fmt_f64(r.energy_total),
            fmt_f64(r.energy_kin_c),
            fmt_f64(r.energy_kin_m),
            fmt_f64(r.energy_interfacial),
            fmt_f64(r.dissipation),
            fmt_f64(r.mass),
            r.newton_iters.to_string(),
            fmt_f64(r.residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T, IoError> {
    let raw = rec.get(i).ok_or_else(|| IoError::Format { line, reason: format!("missing column {i}") })?;
    raw.parse().map_err(|_| IoError::Format { line, reason: format!("cannot parse {raw:?}") })
}

fn check_header(rec: &csv::StringRecord, expected: &[&str]) -> Result<(), IoError> {
    if rec.iter().ne(expected.iter().copied()) {
        return Err(IoError::Format { line: 1, reason: format!("unexpected header {:?}", rec.iter().collect::<Vec<_>>()) });
    }
    Ok(())
}

pub fn read_timeseries<R: Read>(input: R) -> Result<Vec<TimeseriesRow>, IoError> {
    let mut r = csv::Reader::from_reader(input);
    check_header(r.headers()?, &TIMESERIES_HEADER)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        rows.push(TimeseriesRow {
            step: field(&rec, 0, line)?,
            time: field(&rec, 1, line)?,
            energy_total: field(&rec, 2, line)?,
            energy_kin_c: field(&rec, 3, line)?,
            energy_kin_m: field(&rec, 4, line)?,
            energy_interfacial: field(&rec, 5, line)?,
            dissipation: field(&rec, 6, line)?,
            mass: field(&rec, 7, line)?,
            newton_iters: field(&rec, 8, line)?,
            residual: field(&rec, 9, line)?,
        });
    }
    Ok(rows)
}

/// Writes one row per level followed by a `slope` row. Failed levels carry
/// `failed: <reason>` in `status` and empty norms; undefined slopes are
/// empty cells.
pub fn write_error_table<W: Write>(out: W, table: &ErrorTable) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ERROR_TABLE_HEADER.iter().chain(&NORM_COLUMNS).chain(&SOLVER_COLUMNS))?;
    let ladder = table.ladder.name();
    for l in &table.levels {
        let mut rec = vec![ladder.to_string(), l.level.to_string(), fmt_f64(l.h), fmt_f64(l.tau), l.steps.to_string()];
        match &l.failure {
            None => {
                rec.push("ok".into());
                rec.extend(l.norms.iter().map(|&v| fmt_f64(v)));
            }
            Some(reason) => {
                rec.push(format!("failed: {reason}"));
                rec.extend(std::iter::repeat_n(String::new(), NORM_COLUMNS.len()));
            }
        }
        rec.push(l.newton_max.to_string());
        rec.push(fmt_f64(l.linear_residual_max));
        w.write_record(&rec)?;
    }
    let mut slope = vec![ladder.to_string(), "slope".into(), String::new(), String::new(), String::new(), String::new()];
    slope.extend(table.slopes.iter().map(|s| s.map(fmt_f64).unwrap_or_default()));
    slope.extend([String::new(), String::new()]);
    w.write_record(&slope)?;
    w.flush()?;
    Ok(())
}

/// Reads an error table back. Slopes are taken from the file, not refitted.
pub fn read_error_table<R: Read>(input: R) -> Result<ErrorTable, IoError> {
    let mut r = csv::Reader::from_reader(input);
    let expected: Vec<&str> = ERROR_TABLE_HEADER.iter().chain(&NORM_COLUMNS).chain(&SOLVER_COLUMNS).copied().collect();
    check_header(r.headers()?, &expected)?;
    let mut ladder = None;
    let mut levels = Vec::new();
    let mut slopes = None;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let name = rec.get(0).unwrap_or("");
        let l = Ladder::parse(name).ok_or_else(|| IoError::Format { line, reason: format!("unknown ladder {name:?}") })?;
        ladder = Some(l);
        let optional = |c: usize| -> Result<Option<f64>, IoError> {
            match rec.get(c) {
                None | Some("") => Ok(None),
                Some(_) => field(&rec, c, line).map(Some),
            }
        };
        if rec.get(1) == Some("slope") {
            let mut s = [None; 4];
            for (c, v) in s.iter_mut().enumerate() {
                *v = optional(ERROR_TABLE_HEADER.len() + c)?;
            }
            slopes = Some(s);
            continue;
        }
        let status = rec.get(5).unwrap_or("");
        let failure = match status {
            "ok" => None,
            s => Some(s.strip_prefix("failed: ").unwrap_or(s).to_string()),
        };
        let mut norms = [f64::NAN; 4];
        for (c, v) in norms.iter_mut().enumerate() {
            *v = optional(ERROR_TABLE_HEADER.len() + c)?.unwrap_or(f64::NAN);
        }
        levels.push(ErrorLevel {
            level: field(&rec, 1, line)?,
            h: field(&rec, 2, line)?,
            tau: field(&rec, 3, line)?,
            steps: field(&rec, 4, line)?,
            failure,
            norms,
            newton_max: field(&rec, ERROR_TABLE_HEADER.len() + NORM_COLUMNS.len(), line)?,
            linear_residual_max: field(&rec, ERROR_TABLE_HEADER.len() + NORM_COLUMNS.len() + 1, line)?,
        });
    }
    let ladder = ladder.ok_or(IoError::Format { line: 1, reason: "empty error table".into() })?;
    let slopes = slopes.ok_or(IoError::Format { line: 1, reason: "missing slope row".into() })?;
    Ok(ErrorTable { ladder, levels, slopes })
}
