//! File formats written by the command-line tool: time-series and error
//! table CSV, legacy ASCII VTK.

pub mod csv_tables;
pub mod vtk;

pub use csv_tables::{
    read_error_table, read_timeseries, write_error_table, write_timeseries, TimeseriesRow, ERROR_TABLE_HEADER,
    SOLVER_COLUMNS, TIMESERIES_HEADER,
};
pub use vtk::{parse_vtk, write_vtk, VtkData};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
}

/// Float formatting shared by every writer
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
