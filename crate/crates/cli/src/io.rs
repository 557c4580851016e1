//! CSV ingestion and export for variables-by-samples matrices.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use nrpca_core::DataMatrix;

/// Reads a rectangular numeric CSV with one variable per row and one sample
/// per column.
///
/// A header row is detected when any cell of the first row other than the
/// first is non-numeric. A label column is detected when the first cell of
/// the first data row is non-numeric. Blank lines are skipped; fields are
/// trimmed.
pub fn load_matrix(path: &Path) -> Result<DataMatrix> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    parse_matrix(file).with_context(|| format!("while reading {}", path.display()))
}

pub fn parse_matrix(reader: impl std::io::Read) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.context("malformed CSV")?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    if records.is_empty() {
        bail!("no data rows");
    }
    let is_num = |s: &str| s.parse::<f64>().is_ok();
    if records[0].1.iter().skip(1).any(|c| !is_num(c)) || (records[0].1.len() == 1 && !is_num(&records[0].1[0])) {
        records.remove(0);
    }
    let Some((_, first)) = records.first() else {
        bail!("no data rows after the header");
    };
    let skip = usize::from(!is_num(&first[0]));
    let width = first.len();
    let n = width - skip;
    if n < 3 {
        bail!("need at least 3 sample columns, found {n}");
    }
    let d = records.len();
    let mut values = vec![0.0; d * n];
    for (i, (line, rec)) in records.iter().enumerate() {
        if rec.len() != width {
            bail!("line {line}: expected {width} fields, found {}", rec.len());
        }
        for (j, cell) in rec.iter().skip(skip).enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .with_context(|| format!("line {line}, field {}: {cell:?} is not a finite number", j + skip + 1))?;
            values[j * d + i] = v;
        }
    }
    Ok(DataMatrix::from_column_major(d, n, values)?)
}

/// Writes `x` as a headerless CSV, one variable per row, each value with 17
/// significant digits so that reloading is bit-exact.
pub fn save_matrix(x: &DataMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for i in 0..x.d() {
        let row: Vec<String> = x.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Scales every variable to unit sample variance, so `tr(S_D) = d`.
/// Row means are left in place; they do not enter `S_D`.
pub fn standardize_rows(x: &DataMatrix) -> Result<DataMatrix> {
    let n = x.n() as f64;
    let mut scale = Vec::with_capacity(x.d());
    for i in 0..x.d() {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        if !(var > 0.0) {
            bail!("row {} has zero sample variance and cannot be standardized", i + 1);
        }
        scale.push(var.sqrt().recip());
    }
    Ok(x.map_rows(|i, v| v * scale[i])?)
}
