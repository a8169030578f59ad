//! CSV formats. Numbers are written with 12 significant digits.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pde::{ScalarField, SpatialGrid};
use crate::pde_control::RiccatiDiagnostics;
use crate::severity::WeatherSample;

/// `{:.11e}`: 12 significant digits, round-trip stable across platforms.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

/// Writes a header row and numeric rows.
pub fn write_table(path: &Path, headers: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(headers)?;
    for row in rows {
        if row.len() != headers.len() {
            return Err(Error::GridMismatch {
                expected: headers.len(),
                actual: row.len(),
            });
        }
        w.write_record(row.iter().map(|&v| fmt_num(v)))?;
    }
    w.flush()?;
    Ok(())
}

fn coordinate_headers(grid: &SpatialGrid) -> &'static [&'static str] {
    if grid.dim() == 1 {
        &["x"]
    } else {
        &["x", "y"]
    }
}

/// Columns `cell, x[, y], value`.
pub fn write_field_csv(path: &Path, grid: &SpatialGrid, field: &ScalarField) -> Result<()> {
    field.check_len(grid.cell_count())?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["cell"];
    header.extend(coordinate_headers(grid));
    header.push("value");
    w.write_record(&header)?;
    for (i, v) in field.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(grid.center(i).into_iter().map(fmt_num));
        rec.push(fmt_num(*v));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the `cell` and `value` columns; every cell must appear once.
pub fn read_field_csv(path: &Path, grid: &SpatialGrid) -> Result<ScalarField> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Io(format!("{}: missing column `{name}`", path.display())))
    };
    let (ci, vi) = (col("cell")?, col("value")?);
    let n = grid.cell_count();
    let mut values = vec![f64::NAN; n];
    for rec in r.records() {
        let rec = rec?;
        let parse_err = |what: &str| Error::Io(format!("{}: bad {what} in row {:?}", path.display(), rec.position()));
        let cell: usize = rec[ci].trim().parse().map_err(|_| parse_err("cell"))?;
        let value: f64 = rec[vi].trim().parse().map_err(|_| parse_err("value"))?;
        if cell >= n {
            return Err(Error::GridMismatch { expected: n, actual: cell + 1 });
        }
        values[cell] = value;
    }
    if let Some(missing) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Io(format!("{}: no value for cell {missing}", path.display())));
    }
    Ok(ScalarField::new(values))
}

/// Long format `t, cell, value`.
pub fn write_path_csv(path: &Path, times: &[f64], fields: &[ScalarField]) -> Result<()> {
    if times.len() != fields.len() {
        return Err(Error::GridMismatch {
            expected: times.len(),
            actual: fields.len(),
        });
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "cell", "value"])?;
    for (t, f) in times.iter().zip(fields) {
        for (i, v) in f.iter().enumerate() {
            w.write_record([fmt_num(*t), i.to_string(), fmt_num(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, trace, min_eigenvalue, max_eigenvalue`.
pub fn write_riccati_diagnostics(path: &Path, diags: &[RiccatiDiagnostics]) -> Result<()> {
    write_table(
        path,
        &["t", "trace", "min_eigenvalue", "max_eigenvalue"],
        diags.iter().map(|d| vec![d.t, d.trace, d.min_eigenvalue, d.max_eigenvalue]),
    )
}

/// Columns `t, T, W, H`, times strictly increasing.
pub fn read_weather_csv(path: &Path) -> Result<Vec<WeatherSample>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let samples = r.deserialize().collect::<std::result::Result<Vec<WeatherSample>, _>>()?;
    if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::Io(format!("{}: times must be strictly increasing", path.display())));
    }
    Ok(samples)
}
