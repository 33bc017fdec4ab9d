use std::io::Write;

use clap::ValueEnum;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// One command result: a JSON document plus the same values as a table.
pub struct Rendered {
    pub json: Value,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Exit status: false when a requested check did not pass.
    pub ok: bool,
}

impl Rendered {
    pub fn new(json: Value, headers: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        Rendered { json, headers, rows, ok: true }
    }

    pub fn with_status(mut self, ok: bool) -> Self {
        self.ok = ok;
        self
    }

    pub fn write(&self, format: Format, out: &mut impl Write) -> anyhow::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.json)?;
                writeln!(out)?;
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.headers)?;
                for row in &self.rows {
                    w.write_record(row)?;
                }
                w.flush()?;
            }
            Format::Text => {
                let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
                for row in &self.rows {
                    for (w, cell) in widths.iter_mut().zip(row) {
                        *w = (*w).max(cell.len());
                    }
                }
                let line = |cells: Vec<&str>| -> String {
                    cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ")
                };
                writeln!(out, "{}", line(self.headers.clone()).trim_end())?;
                for row in &self.rows {
                    writeln!(out, "{}", line(row.iter().map(String::as_str).collect()).trim_end())?;
                }
            }
        }
        Ok(())
    }
}

/// Renders a JSON scalar as a table cell.
pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
