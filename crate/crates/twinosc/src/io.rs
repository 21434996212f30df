//! CSV and JSON writers.
//!
//! CSV: comma separated, LF line endings, floats in shortest round-trip
//! form (`NaN` for failed cells), independent of locale.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use twinosc_core::sweep::Interferogram;

use crate::error::CliError;

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Shortest round-trip decimal; exponent form outside `[1e-5, 1e16)`.
fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Matrix layout: the header row holds the x values after a corner cell
/// `<y>\eps0`; each following row starts with its y value.
pub fn write_matrix<W: Write>(ig: &Interferogram, w: W) -> Result<(), CliError> {
    let g = &ig.grid;
    let mut out = writer(w);
    let mut header = vec![format!("{}\\eps0", g.y_axis.name())];
    header.extend(g.x_values.iter().map(|&x| num(x)));
    out.write_record(&header)?;
    for (j, &y) in g.y_values.iter().enumerate() {
        let mut rec = vec![num(y)];
        rec.extend(ig.row(j).iter().map(|&v| num(v)));
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| CliError::io("cannot write CSV", e))?;
    Ok(())
}

/// Long layout: one row per cell with columns `x, y, value, n_failures`.
pub fn write_long<W: Write>(ig: &Interferogram, w: W) -> Result<(), CliError> {
    let g = &ig.grid;
    let nx = g.x_values.len();
    let mut out = writer(w);
    out.write_record(["x", "y", "value", "n_failures"])?;
    for (j, &y) in g.y_values.iter().enumerate() {
        for (i, &x) in g.x_values.iter().enumerate() {
            let d = &ig.diagnostics[j * nx + i];
            let failures = d.failed_realizations + u32::from(!ig.value(i, j).is_finite() && d.failed_realizations == 0);
            out.write_record([num(x), num(y), num(ig.value(i, j)), failures.to_string()])?;
        }
    }
    out.flush().map_err(|e| CliError::io("cannot write CSV", e))?;
    Ok(())
}

/// Column-oriented table with a header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = writer(w);
        out.write_record(&self.columns)?;
        for r in &self.rows {
            out.write_record(r.iter().map(|&v| num(v)))?;
        }
        out.flush().map_err(|e| CliError::io("cannot write CSV", e))?;
        Ok(())
    }
}

/// Switching instants, one `t_switch` per row.
pub fn write_switch_times<W: Write>(times: &[f64], w: W) -> Result<(), CliError> {
    let mut t = Table::new(vec!["t_switch".into()]);
    for &s in times {
        t.push(vec![s]);
    }
    t.write(w)
}

/// Creates `dir` and writes `bytes` to `dir/name`.
pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
    Ok(path)
}

pub fn to_json_pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("metadata serializes");
    s.push(b'\n');
    s
}
