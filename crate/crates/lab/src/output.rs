//! Tabular CLI output as CSV or canonical JSON, headed by the resolved config.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Result;
use crate::report::{to_canonical_json, to_canonical_json_compact, Histogram};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Whether CSV output carries a column-name line.
    pub csv_header: bool,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            csv_header: true,
        }
    }
}

/// `# tbm <command>` and `# config: {...}` lines, then the table.
pub fn write_csv<W: Write, C: Serialize>(out: W, command: &str, config: &C, table: &Table) -> Result<()> {
    let mut out = out;
    let echo = to_canonical_json_compact(config)?;
    writeln!(out, "# tbm {command}").map_err(csv::Error::from)?;
    writeln!(out, "# config: {echo}").map_err(csv::Error::from)?;
    let mut w = csv::WriterBuilder::new().flexible(false).from_writer(out);
    if table.csv_header {
        w.write_record(&table.columns)?;
    }
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `{"command", "config", "rows": [{column: value}]}` in canonical form.
pub fn write_json<W: Write, C: Serialize>(mut out: W, command: &str, config: &C, table: &Table) -> Result<()> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| ((*c).to_owned(), v.json()))
                .collect();
            Value::Object(obj)
        })
        .collect();
    let doc = serde_json::json!({
        "command": command,
        "config": serde_json::to_value(config)?,
        "rows": rows,
    });
    let text = to_canonical_json(&doc)?;
    writeln!(out, "{text}").map_err(csv::Error::from)?;
    Ok(())
}

pub fn histogram_table(h: &Histogram) -> Table {
    let mut t = Table::new(vec![
        "bin_left",
        "bin_right",
        "count",
        "empirical_density",
        "reference_density",
    ]);
    for i in 0..h.counts.len() {
        let (a, b) = h.bin_edges(i);
        t.rows.push(vec![
            Cell::Float(a),
            Cell::Float(b),
            Cell::Int(h.counts[i] as i64),
            Cell::Float(h.empirical_density[i]),
            Cell::Float(h.reference_density[i]),
        ]);
    }
    t
}
