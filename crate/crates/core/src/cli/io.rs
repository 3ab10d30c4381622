//! CSV and JSON files.
//!
//! * data: `t,y,x1,...,xp`, one row per time step, `t = 1..n` in order.
//! * truth: `t,z,theta1,...,thetap`.
//! * results: `t,coord,method,mean,sd`.
//! * bands: `t,coord,method,mean,lower,upper` with `lower/upper = mean -/+ sd`.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a
//! written file returns the exact in-memory values.

use std::fs::File;
use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use super::CliError;
use crate::model::BinarySeries;
use crate::summary::MomentSummary;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| io_err(path, e))
}

fn write_rows<I>(path: &Path, header: Vec<String>, rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = writer(path)?;
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads a data CSV into covariate vectors and responses.
pub fn read_data(path: &Path) -> Result<(Vec<DVector<f64>>, BinarySeries), CliError> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    read_data_from(file)
}

pub fn read_data_from<R: std::io::Read>(source: R) -> Result<(Vec<DVector<f64>>, BinarySeries), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| CliError::Data(format!("unreadable header: {e}")))?
        .clone();
    let fields: Vec<&str> = header.iter().collect();
    let p = fields.len().saturating_sub(2);
    let expected: Vec<String> = ["t".to_string(), "y".to_string()]
        .into_iter()
        .chain((1..=p).map(|k| format!("x{k}")))
        .collect();
    if p == 0 || fields != expected {
        return Err(CliError::Data(format!(
            "header must be t,y,x1,...,xp; found {}",
            fields.join(",")
        )));
    }

    let mut x = Vec::new();
    let mut y = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| CliError::Data(format!("row {row}: {e}")))?;
        if record.len() != p + 2 {
            return Err(CliError::Data(format!(
                "row {row}: expected {} fields, found {}",
                p + 2,
                record.len()
            )));
        }
        let t: usize = record[0]
            .parse()
            .map_err(|_| CliError::Data(format!("row {row}: t '{}' is not an integer", &record[0])))?;
        if t != row {
            return Err(CliError::Data(format!("row {row}: t is {t}, expected {row}")));
        }
        let yt = match &record[1] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(CliError::Data(format!("row {row}: y '{other}' is not 0 or 1")));
            }
        };
        let mut xt = DVector::zeros(p);
        for k in 0..p {
            let raw = &record[k + 2];
            let v: f64 = raw
                .parse()
                .map_err(|_| CliError::Data(format!("row {row}: x{} '{raw}' is not a number", k + 1)))?;
            if !v.is_finite() {
                return Err(CliError::Data(format!("row {row}: x{} is not finite", k + 1)));
            }
            xt[k] = v;
        }
        x.push(xt);
        y.push(yt);
    }
    if x.is_empty() {
        return Err(CliError::Data("data file has no rows".into()));
    }
    let y = BinarySeries::new(y).map_err(|e| CliError::Data(e.to_string()))?;
    Ok((x, y))
}

pub fn write_data(path: &Path, x: &[DVector<f64>], y: &BinarySeries) -> Result<(), CliError> {
    let p = x.first().map_or(0, |v| v.len());
    let header = ["t", "y"]
        .iter()
        .map(|s| s.to_string())
        .chain((1..=p).map(|k| format!("x{k}")))
        .collect();
    let rows = x.iter().enumerate().map(|(t, xt)| {
        [(t + 1).to_string(), y.values()[t].to_string()]
            .into_iter()
            .chain(xt.iter().map(|&v| fmt_f64(v)))
            .collect()
    });
    write_rows(path, header, rows)
}

pub fn write_truth(path: &Path, theta: &[DVector<f64>], z: &DVector<f64>) -> Result<(), CliError> {
    let p = theta.first().map_or(0, |v| v.len());
    let header = ["t", "z"]
        .iter()
        .map(|s| s.to_string())
        .chain((1..=p).map(|k| format!("theta{k}")))
        .collect();
    let rows = theta.iter().enumerate().map(|(t, th)| {
        [(t + 1).to_string(), fmt_f64(z[t])]
            .into_iter()
            .chain(th.iter().map(|&v| fmt_f64(v)))
            .collect()
    });
    write_rows(path, header, rows)
}

fn per_coordinate<'a>(
    summaries: &'a [MomentSummary],
    p: usize,
) -> impl Iterator<Item = (usize, usize, &'a MomentSummary, usize)> + 'a {
    summaries.iter().flat_map(move |s| {
        (0..s.mean.len()).map(move |i| (i / p + 1, i % p + 1, s, i))
    })
}

pub fn write_results(path: &Path, summaries: &[MomentSummary], p: usize) -> Result<(), CliError> {
    let header = ["t", "coord", "method", "mean", "sd"].map(String::from).to_vec();
    let rows = per_coordinate(summaries, p).map(|(t, k, s, i)| {
        vec![
            t.to_string(),
            k.to_string(),
            s.method.to_string(),
            fmt_f64(s.mean[i]),
            fmt_f64(s.sd[i]),
        ]
    });
    write_rows(path, header, rows)
}

pub fn write_bands(path: &Path, summaries: &[MomentSummary], p: usize) -> Result<(), CliError> {
    let header = ["t", "coord", "method", "mean", "lower", "upper"].map(String::from).to_vec();
    let rows = per_coordinate(summaries, p).map(|(t, k, s, i)| {
        vec![
            t.to_string(),
            k.to_string(),
            s.method.to_string(),
            fmt_f64(s.mean[i]),
            fmt_f64(s.mean[i] - s.sd[i]),
            fmt_f64(s.mean[i] + s.sd[i]),
        ]
    });
    write_rows(path, header, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}
