//! Text formats for instances and distributions, CSV output for results and
//! traces.
//!
//! Instance file:
//!
//! ```text
//! format mcmu-instance
//! version 1
//! # id criticality p1 .. pX [; q1 .. qX]
//! 1 2 4 9 ; 0.8 0.2
//! 2 1 3
//! ```
//!
//! The optional `q` values after `;` are the probabilities of running at
//! each level, used by `simulate`.
//!
//! Distribution file:
//!
//! ```text
//! format mcmu-distributions
//! version 1
//! levels 0.5 0.9 1.0
//! # id criticality time:mass ..
//! 1 3 2:0.5 4:0.4 9:0.1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use mcmu::{ConfidenceLevels, DiscreteDistribution, FShape, Instance, TaskId, Time, TraceRecord};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INSTANCE_FORMAT: &str = "mcmu-instance";
pub const DISTRIBUTION_FORMAT: &str = "mcmu-distributions";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}{}: {message}", field.as_ref().map(|f| format!(", field {f}")).unwrap_or_default())]
pub struct ParseError {
    pub line: usize,
    pub field: Option<String>,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            field: None,
            message: message.into(),
        }
    }

    fn field(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError {
            line,
            field: Some(field.into()),
            message: message.into(),
        }
    }
}

/// An instance plus optional per-task level probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub instance: Instance,
    pub level_probabilities: BTreeMap<TaskId, Vec<f64>>,
}

impl InstanceFile {
    pub fn new(instance: Instance) -> Self {
        InstanceFile {
            instance,
            level_probabilities: BTreeMap::new(),
        }
    }

    /// Probabilities for every task; tasks without any get the uniform
    /// vector over their levels.
    pub fn probabilities_or_uniform(&self) -> BTreeMap<TaskId, Vec<f64>> {
        self.instance
            .tasks()
            .iter()
            .map(|t| {
                let p = self
                    .level_probabilities
                    .get(&t.id())
                    .cloned()
                    .unwrap_or_else(|| vec![1.0 / t.criticality() as f64; t.criticality()]);
                (t.id(), p)
            })
            .collect()
    }
}

/// Non-empty, non-comment lines with their 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn expect_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    format: &str,
) -> Result<usize, ParseError> {
    let (no, line) = lines.next().ok_or_else(|| ParseError::at(1, "empty file"))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some("format") {
        return Err(ParseError::field(no, "format", format!("expected `format {format}`")));
    }
    match parts.next() {
        Some(f) if f == format => {}
        other => {
            return Err(ParseError::field(
                no,
                "format",
                format!("expected `{format}`, found `{}`", other.unwrap_or("")),
            ))
        }
    }
    let (no, line) = lines
        .next()
        .ok_or_else(|| ParseError::at(no + 1, "missing version line"))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some("version") {
        return Err(ParseError::field(no, "version", "expected `version <n>`"));
    }
    let v: u32 = parse_num(no, "version", parts.next().unwrap_or(""))?;
    if v != VERSION {
        return Err(ParseError::field(no, "version", format!("unsupported version {v}")));
    }
    Ok(no)
}

fn parse_num<T: std::str::FromStr>(line: usize, field: &str, tok: &str) -> Result<T, ParseError>
where
    T::Err: std::fmt::Display,
{
    tok.parse()
        .map_err(|e| ParseError::field(line, field, format!("`{tok}`: {e}")))
}

pub fn read_instance(text: &str) -> Result<InstanceFile, ParseError> {
    let mut lines = content_lines(text);
    let mut last = expect_header(&mut lines, INSTANCE_FORMAT)?;
    let mut tasks = Vec::new();
    let mut probs = BTreeMap::new();
    let mut seen = BTreeMap::new();
    for (no, line) in lines {
        last = no;
        let (main, tail) = match line.split_once(';') {
            Some((a, b)) => (a, Some(b)),
            None => (line, None),
        };
        let toks: Vec<&str> = main.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(ParseError::at(no, "expected `id criticality p1 .. pX`"));
        }
        let id: u32 = parse_num(no, "id", toks[0])?;
        let x: usize = parse_num(no, "criticality", toks[1])?;
        if x == 0 {
            return Err(ParseError::field(no, "criticality", "must be at least 1"));
        }
        if toks.len() - 2 != x {
            return Err(ParseError::field(
                no,
                "processing times",
                format!("criticality {x} needs {x} values, found {}", toks.len() - 2),
            ));
        }
        let proc = toks[2..]
            .iter()
            .enumerate()
            .map(|(l, t)| parse_num::<Time>(no, &format!("p{}", l + 1), t))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(prev) = seen.insert(id, no) {
            return Err(ParseError::field(no, "id", format!("task {id} already defined on line {prev}")));
        }
        let shape = FShape::new(id, proc).map_err(|e| ParseError::field(no, "processing times", e.to_string()))?;
        if let Some(tail) = tail {
            let q = tail
                .split_whitespace()
                .enumerate()
                .map(|(l, t)| parse_num::<f64>(no, &format!("q{}", l + 1), t))
                .collect::<Result<Vec<_>, _>>()?;
            if q.len() != x {
                return Err(ParseError::field(
                    no,
                    "probabilities",
                    format!("criticality {x} needs {x} values, found {}", q.len()),
                ));
            }
            if q.iter().any(|p| !p.is_finite() || *p < 0.0) || ((q.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
                return Err(ParseError::field(
                    no,
                    "probabilities",
                    "must be non-negative and sum to 1",
                ));
            }
            probs.insert(TaskId(id), q);
        }
        tasks.push(shape);
    }
    let instance = Instance::new(tasks).map_err(|e| ParseError::at(last, e.to_string()))?;
    Ok(InstanceFile {
        instance,
        level_probabilities: probs,
    })
}

pub fn write_instance(file: &InstanceFile) -> String {
    let mut out = format!("format {INSTANCE_FORMAT}\nversion {VERSION}\n# id criticality p1 .. pX [; q1 .. qX]\n");
    for t in file.instance.tasks() {
        let _ = write!(out, "{} {}", t.id(), t.criticality());
        for p in t.proc() {
            let _ = write!(out, " {p}");
        }
        if let Some(q) = file.level_probabilities.get(&t.id()) {
            out.push_str(" ;");
            for v in q {
                // shortest representation that parses back to the same value
                let _ = write!(out, " {v:?}");
            }
        }
        out.push('\n');
    }
    out
}

/// One task of a distribution file.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDistribution {
    pub id: TaskId,
    pub criticality: usize,
    pub dist: DiscreteDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFile {
    pub levels: ConfidenceLevels,
    pub tasks: Vec<TaskDistribution>,
}

pub fn read_distributions(text: &str) -> Result<DistributionFile, ParseError> {
    let mut lines = content_lines(text);
    let header = expect_header(&mut lines, DISTRIBUTION_FORMAT)?;
    let (no, line) = lines
        .next()
        .ok_or_else(|| ParseError::at(header + 1, "missing `levels` line"))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some("levels") {
        return Err(ParseError::field(no, "levels", "expected `levels c1 .. cL`"));
    }
    let raw = parts
        .enumerate()
        .map(|(l, t)| parse_num::<f64>(no, &format!("c{}", l + 1), t))
        .collect::<Result<Vec<_>, _>>()?;
    let levels = ConfidenceLevels::new(raw).map_err(|e| ParseError::field(no, "levels", e.to_string()))?;

    let mut tasks = Vec::new();
    let mut seen = BTreeMap::new();
    for (no, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(ParseError::at(no, "expected `id criticality time:mass ..`"));
        }
        let id: u32 = parse_num(no, "id", toks[0])?;
        let criticality: usize = parse_num(no, "criticality", toks[1])?;
        if criticality == 0 || criticality > levels.len() {
            return Err(ParseError::field(
                no,
                "criticality",
                format!("must be within 1..={}", levels.len()),
            ));
        }
        let pairs = toks[2..]
            .iter()
            .map(|tok| {
                let (t, m) = tok
                    .split_once(':')
                    .ok_or_else(|| ParseError::field(no, "support", format!("`{tok}` is not `time:mass`")))?;
                Ok((parse_num::<Time>(no, "time", t)?, parse_num::<f64>(no, "mass", m)?))
            })
            .collect::<Result<Vec<_>, ParseError>>()?;
        let dist =
            DiscreteDistribution::from_pairs(&pairs).map_err(|e| ParseError::field(no, "support", e.to_string()))?;
        if let Some(prev) = seen.insert(id, no) {
            return Err(ParseError::field(no, "id", format!("task {id} already defined on line {prev}")));
        }
        tasks.push(TaskDistribution {
            id: TaskId(id),
            criticality,
            dist,
        });
    }
    Ok(DistributionFile { levels, tasks })
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: String,
    pub n: usize,
    pub solver: String,
    pub elapsed_s: f64,
    pub makespan: Option<Time>,
    pub optimal: bool,
    /// Percent; present exactly when `optimal` is false.
    pub gap_pct: Option<f64>,
    pub certificate: Option<String>,
    pub note: Option<String>,
}

pub const RESULT_COLUMNS: [&str; 9] = [
    "instance",
    "n",
    "solver",
    "elapsed_s",
    "makespan",
    "optimal",
    "gap_pct",
    "certificate",
    "note",
];

pub const TRACE_COLUMNS: [&str; 4] = ["task", "start", "end", "status"];

pub fn write_results<W: Write>(out: W, records: &[BenchRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(RESULT_COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(text: &str) -> csv::Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

#[derive(Serialize)]
struct TraceRow {
    task: u32,
    start: Time,
    end: Time,
    status: &'static str,
}

pub fn write_trace<W: Write>(out: W, records: &[TraceRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(TRACE_COLUMNS)?;
    }
    for r in records {
        w.serialize(TraceRow {
            task: r.task.0,
            start: r.start,
            end: r.end,
            status: if r.executed { "executed" } else { "skipped" },
        })?;
    }
    w.flush()?;
    Ok(())
}
