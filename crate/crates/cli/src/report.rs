//! Tabular reports with CSV and JSON writers.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(u64),
    Float(f64),
    Text(String),
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as u64)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Text(v.to_string())
    }
}

/// Formats `x` with six significant digits, in fixed notation where that
/// stays readable.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-4..6).contains(&exp) {
        format!("{:.*}", (5 - exp).max(0) as usize, x)
    } else {
        sci
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => f.write_str(&sig6(*v)),
            Value::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// A named pass/fail assertion attached to a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// Scalar results that do not fit the row layout. JSON only.
    pub summary: Vec<(String, Value)>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Report {
            command: command.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Report::default()
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.push((key.into(), value.into()));
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> anyhow::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Value::to_string))?;
                }
                w.flush()?;
            }
            Format::Json => {
                let mut out = out;
                serde_json::to_writer_pretty(&mut out, self)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    /// Reads back a CSV report. Cells are typed by parse attempt, so the
    /// result matches the in-memory report up to the six-digit rounding.
    pub fn read_csv<R: std::io::Read>(command: &str, input: R) -> anyhow::Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let columns = r.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(parse_cell).collect());
        }
        Ok(Report {
            command: command.into(),
            columns,
            rows,
            ..Report::default()
        })
    }

    /// The in-memory report as it would read back from CSV.
    pub fn rounded(&self) -> Self {
        Report {
            rows: self
                .rows
                .iter()
                .map(|row| row.iter().map(|v| parse_cell(&v.to_string())).collect())
                .collect(),
            summary: Vec::new(),
            checks: Vec::new(),
            ..self.clone()
        }
    }
}

fn parse_cell(s: &str) -> Value {
    if let Ok(v) = s.parse::<u64>() {
        Value::Int(v)
    } else if let Ok(v) = s.parse::<f64>() {
        Value::Float(v)
    } else {
        Value::Text(s.to_string())
    }
}
