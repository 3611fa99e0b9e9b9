use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{SweepResult, SweepRow};
use crate::timeloop::RunRecord;

pub const RESULTS_HEADER: [&str; 14] = [
    "epsilon",
    "nu",
    "h",
    "n_cells",
    "scheme",
    "l1_error",
    "l2_error",
    "sup_error",
    "tv",
    "half_line_mass",
    "min",
    "max",
    "runtime_s",
    "status",
];

pub const SNAPSHOTS_HEADER: [&str; 3] = ["t", "x", "u"];

fn io_error(path: Option<&Path>, e: impl std::fmt::Display) -> Error {
    match path {
        Some(p) => Error::Io(format!("{}: {e}", p.display())),
        None => Error::Io(e.to_string()),
    }
}

/// Shortest decimal that parses back to `v`, in exponent form for tiny or
/// huge magnitudes.
fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn row_record(row: &SweepRow, timing: bool) -> Vec<String> {
    let mut out = vec![
        row.epsilon.map(num).unwrap_or_default(),
        num(row.nu),
        num(row.h),
        row.n_cells.to_string(),
        row.scheme.clone(),
    ];
    match &row.outcome {
        Ok(m) => out.extend(
            [
                m.l1_error,
                m.l2_error,
                m.sup_error,
                m.tv,
                m.half_line_mass,
                m.min,
                m.max,
            ]
            .into_iter()
            .map(num),
        ),
        Err(_) => out.extend(std::iter::repeat_n(String::new(), 7)),
    }
    out.push(if timing {
        num(row.runtime_s)
    } else {
        String::new()
    });
    out.push(match &row.outcome {
        Ok(_) => "ok".to_string(),
        Err(e) => format!("failed: {e}"),
    });
    out
}

/// Writes sweep rows in their stored order. Runtimes are left empty unless
/// `timing` is set, which keeps reruns byte-identical.
pub fn write_results<W: Write>(result: &SweepResult, writer: W, timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULTS_HEADER)
        .map_err(|e| io_error(None, e))?;
    for row in &result.rows {
        w.write_record(row_record(row, timing))
            .map_err(|e| io_error(None, e))?;
    }
    w.flush().map_err(|e| io_error(None, e))
}

pub fn write_results_csv(result: &SweepResult, path: &Path, timing: bool) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_error(Some(path), e))?;
    write_results(result, std::io::BufWriter::new(file), timing)
        .map_err(|e| io_error(Some(path), e))
}

/// One `t,x,u` line per cell center and recorded time.
pub fn write_snapshots<W: Write>(record: &RunRecord, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SNAPSHOTS_HEADER)
        .map_err(|e| io_error(None, e))?;
    for (t, snap) in record.times.iter().zip(&record.snapshots) {
        let g = snap.grid();
        for (j, u) in snap.values().iter().enumerate() {
            w.write_record([num(*t), num(g.center(j)), num(*u)])
                .map_err(|e| io_error(None, e))?;
        }
    }
    w.flush().map_err(|e| io_error(None, e))
}

pub fn write_snapshots_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_error(Some(path), e))?;
    write_snapshots(record, std::io::BufWriter::new(file)).map_err(|e| io_error(Some(path), e))
}
