//! Table assembly and emission.
//!
//! Every sweep produces one table: a fixed column list plus rows of cells.
//! CSV output is one `#`-prefixed metadata line, the header row, then data;
//! JSON output is `{"metadata": {...}, "rows": [{column: value, ...}]}`.
//! Floats are rendered with the shortest round-trip representation, so
//! re-ingesting either format reproduces the values bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            // Non-finite numbers have no JSON representation and map to null.
            Cell::Num(v) => serde_json::Value::from(*v),
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::Bool(v) => serde_json::Value::from(*v),
            Cell::Text(v) => serde_json::Value::from(v.as_str()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

/// Where a table goes; sweeps default to stdout, presets always to files.
#[derive(Debug, Clone)]
pub enum Dest {
    Stdout,
    File(PathBuf),
}

pub fn emit(
    table: &Table,
    metadata: &[(String, String)],
    format: Format,
    dest: &Dest,
) -> Result<(), Failure> {
    if table.rows.is_empty() {
        return Err(Failure::Validation("refusing to emit an empty table".into()));
    }
    for row in &table.rows {
        assert_eq!(row.len(), table.columns.len(), "row width must match the header");
    }
    let text = match format {
        Format::Csv => render_csv(table, metadata),
        Format::Json => render_json(table, metadata),
    };
    match dest {
        Dest::Stdout => {
            print!("{text}");
            Ok(())
        }
        Dest::File(path) => fs::write(path, text).map_err(|e| {
            Failure::Validation(format!("cannot write `{}`: {e}", path.display()))
        }),
    }
}

fn render_csv(table: &Table, metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    let meta: Vec<String> = metadata.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let _ = writeln!(out, "# {}", meta.join(" "));
    let _ = writeln!(out, "{}", table.columns.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn render_json(table: &Table, metadata: &[(String, String)]) -> String {
    let mut meta = serde_json::Map::new();
    for (k, v) in metadata {
        meta.insert(k.clone(), serde_json::Value::String(v.clone()));
    }
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut object = serde_json::Map::new();
            for (column, cell) in table.columns.iter().zip(row) {
                object.insert(column.to_string(), cell.json());
            }
            serde_json::Value::Object(object)
        })
        .collect();
    let mut root = serde_json::Map::new();
    root.insert("metadata".to_string(), serde_json::Value::Object(meta));
    root.insert("rows".to_string(), serde_json::Value::Array(rows));
    let mut text = serde_json::Value::Object(root).to_string();
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        Table {
            columns: &["a", "b", "c"],
            rows: vec![
                vec![Cell::Num(0.05), Cell::Int(3), Cell::Text("x".into())],
                vec![Cell::Num(1e-9), Cell::Int(-1), Cell::Text("y".into())],
            ],
        }
    }

    #[test]
    fn csv_layout_is_metadata_header_rows() {
        let meta = vec![("version".to_string(), "0.1.0".to_string())];
        let text = render_csv(&sample(), &meta);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# version=0.1.0");
        assert_eq!(lines[1], "a,b,c");
        assert_eq!(lines[2], "0.05,3,x");
        assert_eq!(lines[3], "1e-9,-1,y");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn json_round_trips_rows_exactly() {
        let meta = vec![("version".to_string(), "0.1.0".to_string())];
        let text = render_json(&sample(), &meta);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let reprinted = serde_json::from_str::<serde_json::Value>(&value.to_string()).unwrap();
        assert_eq!(value, reprinted);
        assert_eq!(value["rows"][0]["a"].as_f64(), Some(0.05));
        assert_eq!(value["rows"][1]["a"].as_f64(), Some(1e-9));
        assert_eq!(value["metadata"]["version"].as_str(), Some("0.1.0"));
    }

    #[test]
    fn empty_tables_are_rejected() {
        let table = Table { columns: &["a"], rows: vec![] };
        let err = emit(&table, &[], Format::Csv, &Dest::Stdout).unwrap_err();
        assert!(matches!(err, Failure::Validation(_)));
    }

    #[test]
    fn csv_floats_round_trip() {
        for v in [0.1, 2.0 / 3.0, 1.38e8, 5.259e8, -3.2e-20, f64::MAX] {
            let cell = Cell::Num(v);
            let parsed: f64 = cell.csv().parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits());
        }
    }
}
