//! LIBSVM datasets, enumerated-sampling files and trace output.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use saga_core::solver::{Trace, TraceRecord};
use saga_core::Dataset;

/// Parse and file errors; line numbers are 1-based.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("line {line}: malformed ({reason})")]
    MalformedLine { line: usize, reason: String },
    #[error("labels are not binary: found {found}")]
    NonBinaryLabels { found: String },
    #[error("line {line}: feature index {index} does not increase")]
    DecreasingIndex { line: usize, index: usize },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Data(#[from] saga_core::Error),
}

fn file_error(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.to_path_buf(), source }
}

/// One parsed line: label and 1-based, strictly increasing feature indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LibsvmRecord {
    pub label: f64,
    pub features: Vec<(usize, f64)>,
}

/// Strips a trailing `#` comment and surrounding whitespace.
fn content(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn parse_record(text: &str, line: usize) -> Result<LibsvmRecord, IoError> {
    let malformed = |reason: String| IoError::MalformedLine { line, reason };
    let mut tokens = text.split_whitespace();
    let head = tokens.next().ok_or_else(|| malformed("empty record".into()))?;
    let label: f64 = head.parse().map_err(|_| malformed(format!("label {head:?}")))?;
    if !label.is_finite() {
        return Err(malformed(format!("label {head:?}")));
    }
    let mut features = Vec::new();
    let mut last = 0;
    for tok in tokens {
        let (idx, val) = tok.split_once(':').ok_or_else(|| malformed(format!("token {tok:?}")))?;
        let index: usize = idx.parse().map_err(|_| malformed(format!("index {idx:?}")))?;
        let value: f64 = val.parse().map_err(|_| malformed(format!("value {val:?}")))?;
        if index == 0 {
            return Err(malformed("feature indices start at 1".into()));
        }
        if !value.is_finite() {
            return Err(malformed(format!("value {val:?}")));
        }
        if index <= last {
            return Err(IoError::DecreasingIndex { line, index });
        }
        last = index;
        features.push((index, value));
    }
    Ok(LibsvmRecord { label, features })
}

/// Reads LIBSVM records, skipping blank and comment-only lines, stopping
/// after `max_rows` records when given.
pub fn read_records<R: BufRead>(reader: R, max_rows: Option<usize>) -> Result<Vec<LibsvmRecord>, IoError> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        if max_rows.is_some_and(|m| out.len() >= m) {
            break;
        }
        let line = line.map_err(|e| IoError::MalformedLine { line: k + 1, reason: e.to_string() })?;
        let text = content(&line);
        if !text.is_empty() {
            out.push(parse_record(text, k + 1)?);
        }
    }
    Ok(out)
}

/// Maps binary label sets to `{-1, +1}`: `{0, 1}` is remapped and
/// `{-1, +1}` kept. Other label sets are left alone unless `require_binary`.
pub fn binarize_labels(labels: &mut [f64], require_binary: bool) -> Result<(), IoError> {
    let set: BTreeSet<u64> = labels.iter().map(|b| b.to_bits()).collect();
    let within = |allowed: &[f64]| set.iter().all(|b| allowed.iter().any(|a| a.to_bits() == *b));
    if within(&[-1.0, 1.0]) {
        return Ok(());
    }
    if within(&[0.0, 1.0]) {
        labels.iter_mut().for_each(|b| *b = if *b == 0.0 { -1.0 } else { 1.0 });
        return Ok(());
    }
    if require_binary {
        let found: Vec<String> = set.iter().take(5).map(|b| f64::from_bits(*b).to_string()).collect();
        return Err(IoError::NonBinaryLabels { found: found.join(", ") });
    }
    Ok(())
}

/// Builds a dataset from records; `d` is the largest index seen.
pub fn records_to_dataset(records: Vec<LibsvmRecord>, require_binary: bool) -> Result<Dataset, IoError> {
    let d = records.iter().filter_map(|r| r.features.last().map(|f| f.0)).max().unwrap_or(0);
    let mut labels: Vec<f64> = records.iter().map(|r| r.label).collect();
    binarize_labels(&mut labels, require_binary)?;
    let rows = records.into_iter().map(|r| r.features.into_iter().map(|(j, v)| (j - 1, v)).collect()).collect();
    Ok(Dataset::from_rows(d.max(1), rows, labels)?)
}

/// Parses LIBSVM text into a dataset.
pub fn parse_libsvm<R: BufRead>(reader: R, require_binary: bool, max_rows: Option<usize>) -> Result<Dataset, IoError> {
    records_to_dataset(read_records(reader, max_rows)?, require_binary)
}

pub fn read_libsvm_file(path: &Path, require_binary: bool, max_rows: Option<usize>) -> Result<Dataset, IoError> {
    let file = fs::File::open(path).map_err(file_error(path))?;
    parse_libsvm(std::io::BufReader::new(file), require_binary, max_rows)
}

/// Serializes a dataset as LIBSVM text with 1-based indices.
pub fn write_libsvm(data: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..data.n() {
        let row = data.row(i);
        let _ = write!(out, "{}", data.targets()[i]);
        for (j, v) in row.indices.iter().zip(row.values) {
            let _ = write!(out, " {}:{}", j + 1, v);
        }
        out.push('\n');
    }
    out
}

/// Parses an enumerated sampling: one subset per line, `p_C i1 i2 ... ik`
/// with 1-based indices. Returns 0-based subsets.
pub fn parse_subsets<R: BufRead>(reader: R) -> Result<Vec<(Vec<usize>, f64)>, IoError> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| IoError::MalformedLine { line: line_no, reason: e.to_string() })?;
        let text = content(&line);
        if text.is_empty() {
            continue;
        }
        let malformed = |reason: String| IoError::MalformedLine { line: line_no, reason };
        let mut tokens = text.split_whitespace();
        let head = tokens.next().unwrap_or_default();
        let p: f64 = head.parse().map_err(|_| malformed(format!("probability {head:?}")))?;
        let mut subset = Vec::new();
        for tok in tokens {
            let i: usize = tok.parse().map_err(|_| malformed(format!("index {tok:?}")))?;
            if i == 0 {
                return Err(malformed("indices start at 1".into()));
            }
            subset.push(i - 1);
        }
        out.push((subset, p));
    }
    Ok(out)
}

pub fn read_subsets_file(path: &Path) -> Result<Vec<(Vec<usize>, f64)>, IoError> {
    let file = fs::File::open(path).map_err(file_error(path))?;
    parse_subsets(std::io::BufReader::new(file))
}

pub const TRACE_HEADER: &str = "k,passes,objective,dist_sq,lyapunov,wall_ms";

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Trace as CSV; absent optional values are empty cells.
pub fn trace_csv(trace: &Trace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            r.passes,
            r.objective,
            cell(r.dist_sq),
            cell(r.lyapunov),
            cell(r.wall_ms)
        );
    }
    out
}

/// Parses the CSV written by [`trace_csv`].
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => return Err(IoError::MalformedLine { line: 1, reason: "missing trace header".into() }),
    }
    let mut out = Vec::new();
    for (k, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| IoError::MalformedLine { line: k + 1, reason: what.into() };
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(bad("expected 6 cells"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("number"));
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        out.push(TraceRecord {
            k: cells[0].parse().map_err(|_| bad("iteration"))?,
            passes: num(cells[1])?,
            objective: num(cells[2])?,
            dist_sq: opt(cells[3])?,
            lyapunov: opt(cells[4])?,
            wall_ms: opt(cells[5])?,
        });
    }
    Ok(out)
}

/// Output format for traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Json,
}

/// Writes a trace, creating parent directories.
pub fn write_trace(trace: &Trace, path: &Path, format: TraceFormat) -> Result<(), IoError> {
    let text = match format {
        TraceFormat::Csv => trace_csv(trace),
        TraceFormat::Json => {
            let mut s = serde_json::to_string_pretty(&trace.records).expect("trace records serialize");
            s.push('\n');
            s
        }
    };
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(file_error(dir))?;
    }
    fs::write(path, text).map_err(file_error(path))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    write_text(path, &s)
}
