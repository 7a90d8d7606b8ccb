//! CSV and JSON artifacts. CSV files use `.` decimals, LF line endings and a
//! header row; floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::diagonal::EigenSample;
use crate::eigensearch::StepRecord;
use crate::error::{Error, Result};

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = BufWriter::new(File::create(path)?);
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

/// `x1,...,xn,lambda,epsilon`
pub fn write_cloud(path: &Path, samples: &[EigenSample]) -> Result<()> {
    let n = samples.first().map(|s| s.point.len()).unwrap_or(0);
    let mut w = writer(path)?;
    let mut header: Vec<String> = indexed("x", n).collect();
    header.extend(["lambda".to_string(), "epsilon".to_string()]);
    w.write_record(&header)?;
    for s in samples {
        let mut row: Vec<String> = s.point.iter().map(|&x| fmt(x)).collect();
        row.push(fmt(s.lambda));
        row.push(fmt(s.error));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_field(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| format_err(path, format!("row {line}: `{field}`: {e}")))
}

/// Reads a cloud written by [`write_cloud`].
pub fn read_cloud(path: &Path) -> Result<Vec<EigenSample>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let n = header.iter().take_while(|h| h.starts_with('x')).count();
    if n == 0 || header.len() != n + 2 || header[n] != "lambda" || header[n + 1] != "epsilon" {
        return Err(format_err(
            path,
            format!("unexpected cloud header {header:?}"),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|f| parse_field(path, i + 2, f))
            .collect::<Result<Vec<_>>>()?;
        out.push(EigenSample {
            point: vals[..n].to_vec(),
            lambda: vals[n],
            error: vals[n + 1],
        });
    }
    Ok(out)
}

/// Reads the `x1..xn` columns of any CSV with a header row.
pub fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let cols: Vec<usize> = (1..)
        .map_while(|i| header.iter().position(|h| *h == format!("x{i}")))
        .collect();
    if cols.is_empty() {
        return Err(format_err(path, "no x1..xn columns"));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let p = cols
            .iter()
            .map(|&c| parse_field(path, i + 2, rec.get(c).unwrap_or("")))
            .collect::<Result<Vec<_>>>()?;
        out.push(p);
    }
    Ok(out)
}

/// `step,mean_epsilon`
pub fn write_history(path: &Path, history: &[StepRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["step", "mean_epsilon"])?;
    for h in history {
        w.write_record([h.step.to_string(), fmt(h.mean_error)])?;
    }
    w.flush()?;
    Ok(())
}

/// `step,survivor,epsilon`: one row per survivor per step.
pub fn write_trace(path: &Path, history: &[StepRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["step", "survivor", "epsilon"])?;
    for h in history {
        for (i, e) in h.errors.iter().enumerate() {
            w.write_record([h.step.to_string(), i.to_string(), fmt(*e)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One evaluated grid row: ambient point, ambient interpolant, frame-coordinate bound.
pub struct GridRow {
    pub point: Vec<f64>,
    pub fhat: Vec<f64>,
    pub bound: Vec<f64>,
}

/// `x1..xn,fhat1..fhatn,bound1..boundn`
pub fn write_grid(path: &Path, rows: &[GridRow]) -> Result<()> {
    let n = rows.first().map(|r| r.point.len()).unwrap_or(0);
    let mut w = writer(path)?;
    let header: Vec<String> = indexed("x", n)
        .chain(indexed("fhat", n))
        .chain(indexed("bound", n))
        .collect();
    w.write_record(&header)?;
    for r in rows {
        let row: Vec<String> = r
            .point
            .iter()
            .chain(&r.fhat)
            .chain(&r.bound)
            .map(|&x| fmt(x))
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `metric,value`
pub fn write_metrics(path: &Path, rows: &[(String, f64)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["metric", "value"])?;
    for (k, v) in rows {
        w.write_record([k.clone(), fmt(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cloud_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.csv");
        let samples = vec![
            EigenSample {
                point: vec![0.1, -1.0 / 3.0],
                lambda: 1e-300,
                error: 0.0,
            },
            EigenSample {
                point: vec![4.999999999999999, 2.0],
                lambda: -7.25,
                error: 1.2,
            },
        ];
        write_cloud(&path, &samples).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x1,x2,lambda,epsilon\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_cloud(&path).unwrap(), samples);
        assert_eq!(read_points(&path).unwrap()[1], vec![4.999999999999999, 2.0]);
    }

    #[test]
    fn bad_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_cloud(&path), Err(Error::Format { .. })));
        assert!(matches!(read_points(&path), Err(Error::Format { .. })));
    }
}
