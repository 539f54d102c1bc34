//! Tables rendered as CSV or JSON with a provenance header.

use std::str::FromStr;

use crate::config::fmt_float;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Usage(format!("unknown --format '{other}' (expected csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    /// Rendered as `none` in CSV and `null` in JSON.
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Float(x) => fmt_float(*x),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => csv_field(s),
        Cell::Bool(b) => b.to_string(),
        Cell::Missing => "none".into(),
    }
}

fn json_string(s: &str) -> String {
    serde_json::Value::String(s.to_string()).to_string()
}

fn json_cell(c: &Cell) -> String {
    match c {
        Cell::Float(x) if x.is_finite() => fmt_float(*x),
        Cell::Float(_) | Cell::Missing => "null".into(),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => json_string(s),
        Cell::Bool(b) => b.to_string(),
    }
}

/// `meta` is written first: `command`, `version`, then the resolved config.
pub fn render(format: Format, command: &str, config: &[(String, String)], table: &Table) -> String {
    let version = sasakian_core::VERSION;
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&format!("# command={command}\n# version={version}\n"));
            for (k, v) in config {
                out.push_str(&format!("# {k}={v}\n"));
            }
            out.push_str(&table.columns.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
            out.push('\n');
            for row in &table.rows {
                out.push_str(&row.iter().map(csv_cell).collect::<Vec<_>>().join(","));
                out.push('\n');
            }
        }
        Format::Json => {
            let cfg = config
                .iter()
                .map(|(k, v)| format!("{}: {}", json_string(k), json_string(v)))
                .collect::<Vec<_>>()
                .join(", ");
            out.push_str(&format!(
                "{{\n  \"meta\": {{\"command\": {}, \"version\": {}, \"config\": {{{cfg}}}}},\n  \"rows\": [",
                json_string(command),
                json_string(version)
            ));
            for (i, row) in table.rows.iter().enumerate() {
                let fields = table
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| format!("{}: {}", json_string(c), json_cell(v)))
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push_str(if i == 0 { "\n    {" } else { ",\n    {" });
                out.push_str(&fields);
                out.push('}');
            }
            out.push_str(if table.rows.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(vec!["t".into(), "note".into(), "v".into()]);
        t.push(vec![0.1.into(), "a, \"b\"".into(), Cell::Missing]);
        t.push(vec![f64::INFINITY.into(), "c".into(), 3usize.into()]);
        t
    }

    #[test]
    fn csv_layout() {
        let s = render(Format::Csv, "demo", &[("n".into(), "1".into())], &sample());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# command=demo");
        assert_eq!(lines[2], "# n=1");
        assert_eq!(lines[3], "t,note,v");
        assert_eq!(lines[4], "1.0000000000000001e-1,\"a, \"\"b\"\"\",none");
        assert_eq!(lines[5], "inf,c,3");
    }

    #[test]
    fn json_parses_and_round_trips_floats() {
        let s = render(Format::Json, "demo", &[("n".into(), "1".into())], &sample());
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["meta"]["config"]["n"], "1");
        assert_eq!(v["rows"][0]["t"].as_f64().unwrap(), 0.1);
        assert!(v["rows"][0]["v"].is_null());
        assert!(v["rows"][1]["t"].is_null());
        let empty = render(Format::Json, "demo", &[], &Table::new(vec!["t".into()]));
        let v: serde_json::Value = serde_json::from_str(&empty).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 0);
    }
}
