//! CSV input and output.
//!
//! Floats are written in shortest round-trip form, so every value read back
//! parses to the identical `f64`.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::SolveReport;
use crate::types::{BangBangSignal, Impulse, SampleTable, SampledSeries, Sign, SpikeTrain, Trial};

/// Column names for derivatives 0..=3; higher ones are `d4`, `d5`, ...
const DERIVATIVE_NAMES: [&str; 4] = ["x", "v", "a", "j"];

/// Shortest round-trip text for `v`, in exponent form when the plain
/// decimal would be very long.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn finish(mut writer: csv::Writer<File>, path: &Path) -> Result<()> {
    writer.flush().map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    parse_error(path, line, err.to_string())
}

/// Reads every record, pairing it with its 1-based line number.
fn records(path: &Path) -> Result<(csv::StringRecord, Vec<(u64, csv::StringRecord)>)> {
    let mut reader = open(path)?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push((line, record));
    }
    Ok((header, rows))
}

fn expect_header(path: &Path, header: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if header.iter().eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(parse_error(
            path,
            1,
            format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ))
    }
}

fn float(path: &Path, line: u64, record: &csv::StringRecord, column: usize) -> Result<f64> {
    let field = record
        .get(column)
        .ok_or_else(|| parse_error(path, line, format!("missing column {}", column + 1)))?;
    field
        .parse()
        .map_err(|_| parse_error(path, line, format!("`{field}` is not a number")))
}

/// Writes any serializable rows; the header comes from the field names.
pub fn write_records<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = create(path)?;
    for row in rows {
        writer.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    finish(writer, path)
}

/// Writes only a header line: used when a table has no rows, since serde
/// cannot derive a header from an empty slice.
pub fn write_header(path: &Path, columns: &[&str]) -> Result<()> {
    let mut writer = create(path)?;
    writer
        .write_record(columns)
        .map_err(|e| csv_error(path, e))?;
    finish(writer, path)
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut reader = open(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row.map_err(|e| csv_error(path, e))?);
    }
    Ok(rows)
}

/// Reads a trial file `t,x`. Files with more position columns
/// (`t,x,y[,z...]`) are projected onto their first-to-last axis.
pub fn read_trial(
    path: &Path,
    id: impl Into<String>,
    subject: impl Into<String>,
    movement_type: impl Into<String>,
) -> Result<Trial> {
    let (header, rows) = records(path)?;
    if header.len() < 2 || &header[0] != "t" {
        return Err(parse_error(
            path,
            1,
            "expected header starting with `t` and at least one position column",
        ));
    }
    let dims = header.len() - 1;
    let mut times = Vec::with_capacity(rows.len());
    let mut points = Vec::with_capacity(rows.len());
    for (line, record) in &rows {
        if record.len() != header.len() {
            return Err(parse_error(
                path,
                *line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let t = float(path, *line, record, 0)?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(parse_error(path, *line, "time not strictly increasing"));
            }
        }
        times.push(t);
        points.push(
            (1..=dims)
                .map(|c| float(path, *line, record, c))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    if dims == 1 {
        let positions = points.into_iter().map(|p| p[0]).collect();
        Trial::new(id, times, positions, subject, movement_type)
    } else {
        Trial::from_projection(id, times, &points, subject, movement_type)
    }
}

pub fn write_trial(path: &Path, trial: &Trial) -> Result<()> {
    let mut writer = create(path)?;
    writer
        .write_record(["t", "x"])
        .map_err(|e| csv_error(path, e))?;
    for (t, x) in trial.times().iter().zip(trial.positions()) {
        writer
            .write_record([format_float(*t), format_float(*x)])
            .map_err(|e| csv_error(path, e))?;
    }
    finish(writer, path)
}

/// One row of a trial manifest. `file` is relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub subject: String,
    pub movement_type: String,
}

impl ManifestEntry {
    /// Trial id: the file stem.
    pub fn id(&self) -> String {
        Path::new(&self.file)
            .file_stem()
            .map_or_else(|| self.file.clone(), |s| s.to_string_lossy().into_owned())
    }

    pub fn resolve(&self, manifest: &Path) -> PathBuf {
        manifest.parent().unwrap_or(Path::new("")).join(&self.file)
    }
}

pub const MANIFEST_HEADER: [&str; 3] = ["file", "subject", "movement_type"];

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let (header, rows) = records(path)?;
    expect_header(path, &header, &MANIFEST_HEADER)?;
    rows.into_iter()
        .map(|(line, record)| {
            if record.len() != 3 || record[0].is_empty() {
                return Err(parse_error(
                    path,
                    line,
                    "expected `file,subject,movement_type`",
                ));
            }
            Ok(ManifestEntry {
                file: record[0].to_string(),
                subject: record[1].to_string(),
                movement_type: record[2].to_string(),
            })
        })
        .collect()
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    if entries.is_empty() {
        write_header(path, &MANIFEST_HEADER)
    } else {
        write_records(path, entries)
    }
}

/// Writes one row per constant interval: `t_start,t_end,u`.
pub fn write_signal(path: &Path, signal: &BangBangSignal) -> Result<()> {
    let mut writer = create(path)?;
    writer
        .write_record(["t_start", "t_end", "u"])
        .map_err(|e| csv_error(path, e))?;
    let times = signal.switch_times();
    for i in 0..signal.interval_count() {
        writer
            .write_record([
                format_float(times[i]),
                format_float(times[i + 1]),
                format_float(signal.interval_value(i)),
            ])
            .map_err(|e| csv_error(path, e))?;
    }
    finish(writer, path)
}

pub fn read_signal(path: &Path) -> Result<BangBangSignal> {
    let (header, rows) = records(path)?;
    expect_header(path, &header, &["t_start", "t_end", "u"])?;
    let mut switch_times = Vec::with_capacity(rows.len() + 1);
    let mut values = Vec::with_capacity(rows.len());
    for (line, record) in &rows {
        let (start, end) = (
            float(path, *line, record, 0)?,
            float(path, *line, record, 1)?,
        );
        match switch_times.last() {
            None => switch_times.push(start),
            Some(&prev) if prev != start => {
                return Err(parse_error(
                    path,
                    *line,
                    "interval does not start where the previous one ended",
                ));
            }
            Some(_) => {}
        }
        switch_times.push(end);
        values.push(float(path, *line, record, 2)?);
    }
    let Some(&first) = values.first() else {
        return Err(parse_error(path, 1, "signal has no intervals"));
    };
    let amplitude = first.abs();
    let first_sign = Sign::of(first);
    let expected =
        |i: usize| first_sign.as_f64() * amplitude * if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    if let Some(i) = (0..values.len()).find(|&i| values[i] != expected(i)) {
        return Err(parse_error(
            path,
            rows[i].0,
            "values do not alternate at constant amplitude",
        ));
    }
    BangBangSignal::new(amplitude, switch_times, first_sign)
}

pub fn write_spikes(path: &Path, spikes: &SpikeTrain) -> Result<()> {
    let mut writer = create(path)?;
    writer
        .write_record(["t", "weight"])
        .map_err(|e| csv_error(path, e))?;
    for s in spikes.impulses() {
        writer
            .write_record([format_float(s.time), format_float(s.weight)])
            .map_err(|e| csv_error(path, e))?;
    }
    finish(writer, path)
}

/// The duration is not part of the file and must be supplied.
pub fn read_spikes(path: &Path, duration: f64) -> Result<SpikeTrain> {
    let (header, rows) = records(path)?;
    expect_header(path, &header, &["t", "weight"])?;
    let impulses = rows
        .iter()
        .map(|(line, record)| {
            Ok(Impulse {
                time: float(path, *line, record, 0)?,
                weight: float(path, *line, record, 1)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SpikeTrain::new(impulses, duration)
}

fn derivative_name(d: usize) -> String {
    DERIVATIVE_NAMES
        .get(d)
        .map_or_else(|| format!("d{d}"), |s| s.to_string())
}

/// Writes `t,x,v,a,...`, one column per sampled derivative.
pub fn write_trajectory(path: &Path, table: &SampleTable) -> Result<()> {
    let mut writer = create(path)?;
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..table.columns.len()).map(derivative_name))
        .collect();
    writer
        .write_record(&header)
        .map_err(|e| csv_error(path, e))?;
    for (i, t) in table.times.iter().enumerate() {
        let row = std::iter::once(format_float(*t))
            .chain(table.columns.iter().map(|c| format_float(c[i])));
        writer.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    finish(writer, path)
}

pub fn read_trajectory(path: &Path) -> Result<SampleTable> {
    let (header, rows) = records(path)?;
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((0..header.len().saturating_sub(1)).map(derivative_name))
        .collect();
    if header.len() < 2 || !header.iter().eq(expected.iter().map(String::as_str)) {
        return Err(parse_error(path, 1, "expected header `t,x[,v,a,...]`"));
    }
    let mut table = SampleTable {
        times: Vec::with_capacity(rows.len()),
        columns: vec![Vec::with_capacity(rows.len()); header.len() - 1],
    };
    for (line, record) in &rows {
        table.times.push(float(path, *line, record, 0)?);
        for (c, column) in table.columns.iter_mut().enumerate() {
            column.push(float(path, *line, record, c + 1)?);
        }
    }
    Ok(table)
}

/// Writes a sampled series as `t,<name>`.
pub fn write_series(path: &Path, name: &str, series: &SampledSeries) -> Result<()> {
    let mut writer = create(path)?;
    writer
        .write_record(["t", name])
        .map_err(|e| csv_error(path, e))?;
    for (t, v) in series.times().iter().zip(series.values()) {
        writer
            .write_record([format_float(*t), format_float(*v)])
            .map_err(|e| csv_error(path, e))?;
    }
    finish(writer, path)
}

pub fn read_series(path: &Path) -> Result<SampledSeries> {
    let (header, rows) = records(path)?;
    if header.len() != 2 || &header[0] != "t" {
        return Err(parse_error(
            path,
            1,
            "expected a two-column header starting with `t`",
        ));
    }
    let mut times = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (line, record) in &rows {
        times.push(float(path, *line, record, 0)?);
        values.push(float(path, *line, record, 1)?);
    }
    SampledSeries::new(times, values)
}

/// Writes the discrete control as `k,t,u`.
pub fn write_controls(path: &Path, report: &SolveReport) -> Result<()> {
    let mut writer = create(path)?;
    writer
        .write_record(["k", "t", "u"])
        .map_err(|e| csv_error(path, e))?;
    let control = &report.control;
    for (k, (t, u)) in control.times().iter().zip(control.values()).enumerate() {
        writer
            .write_record([k.to_string(), format_float(*t), format_float(*u)])
            .map_err(|e| csv_error(path, e))?;
    }
    finish(writer, path)
}

/// Summary row of a solve: `K,K1,K2,status,iterations`. `K1`/`K2` are the
/// weighted effort and terminal-cost terms and are left empty outside soft
/// mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    #[serde(rename = "K")]
    pub bound: f64,
    #[serde(rename = "K1")]
    pub effort_cost: Option<f64>,
    #[serde(rename = "K2")]
    pub terminal_cost: Option<f64>,
    pub status: String,
    pub iterations: usize,
}

impl From<&SolveReport> for SolveSummary {
    fn from(report: &SolveReport) -> Self {
        Self {
            bound: report.bound,
            effort_cost: report.soft.as_ref().map(|s| s.effort_cost),
            terminal_cost: report.soft.as_ref().map(|s| s.terminal_cost),
            status: report.status.to_string(),
            iterations: report.iterations,
        }
    }
}

/// One row of the flagged-trial report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagRecord {
    pub id: String,
    pub flag: String,
    pub reason: String,
}

pub const FLAG_HEADER: [&str; 3] = ["id", "flag", "reason"];
