//! Column tables written as versioned CSV or JSON.
//!
//! CSV files start with a `# schema: <name> v<version>` line ahead of the
//! header; readers reject any other name or version.

use serde::Serialize;

use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(x) => serde_json::json!(x),
            Cell::Int(i) => serde_json::json!(i),
            Cell::Bool(b) => serde_json::json!(b),
            Cell::Text(s) => serde_json::json!(s),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            Cell::Bool(b) => Some(f64::from(u8::from(*b))),
            Cell::Text(s) => s.parse().ok(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
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

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Num(x.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    /// Appends a row; panics if its width differs from the header, which is
    /// always a programming error.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn schema_line(&self) -> String {
        format!("# schema: {} v{}", self.name, SCHEMA_VERSION)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = format!("{}\n", self.schema_line()).into_bytes();
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
        drop(w);
        out
    }

    pub fn to_json(&self) -> Vec<u8> {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> =
            self.rows.iter().map(|r| self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()).collect();
        json_document(&self.name, &serde_json::json!({ "columns": self.columns, "rows": rows }))
    }

    /// Parses CSV written by [`Table::to_csv`]; cells come back as text.
    pub fn from_csv(bytes: &[u8], expected: &str) -> Result<Table> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Schema(e.to_string()))?;
        let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
        let want = format!("# schema: {expected} v{SCHEMA_VERSION}");
        if first.trim_end() != want {
            return Err(Error::Schema(format!("expected `{want}`, found `{first}`")));
        }
        let mut r = csv::Reader::from_reader(rest.as_bytes());
        let columns: Vec<String> =
            r.headers().map_err(|e| Error::Schema(e.to_string()))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Schema(e.to_string()))?;
            rows.push(rec.iter().map(|c| Cell::Text(c.to_string())).collect());
        }
        Ok(Table { name: expected.to_string(), columns, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Schema(format!("table {} has no column `{name}`", self.name)))
    }

    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| r[i].as_f64().ok_or_else(|| Error::Schema(format!("non-numeric value in column `{name}`"))))
            .collect()
    }
}

/// A JSON document wrapping `data` with its schema name and version.
pub fn json_document<T: Serialize + ?Sized>(schema: &str, data: &T) -> Vec<u8> {
    let doc = serde_json::json!({ "schema": schema, "schema_version": SCHEMA_VERSION, "data": data });
    let mut out = serde_json::to_vec_pretty(&doc).expect("serializable output");
    out.push(b'\n');
    out
}

/// Reads a document written by [`json_document`], checking the schema.
pub fn read_json_document(bytes: &[u8], expected: &str) -> Result<serde_json::Value> {
    let mut doc: serde_json::Value = serde_json::from_slice(bytes)?;
    let schema = doc.get("schema").and_then(|s| s.as_str());
    let version = doc.get("schema_version").and_then(|v| v.as_u64());
    if schema != Some(expected) || version != Some(u64::from(SCHEMA_VERSION)) {
        return Err(Error::Schema(format!("expected {expected} v{SCHEMA_VERSION}, found {schema:?} v{version:?}")));
    }
    Ok(doc["data"].take())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", &["x", "label", "flag"]);
        t.push(vec![0.1.into(), "a,b".into(), true.into()]);
        t.push(vec![(1.0 / 3.0).into(), "c".into(), false.into()]);
        t
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        let back = Table::from_csv(&t.to_csv(), "demo").unwrap();
        assert_eq!(back.columns, t.columns);
        assert_eq!(back.column_f64("x").unwrap(), vec![0.1, 1.0 / 3.0]);
        assert_eq!(back.rows[0][1], Cell::Text("a,b".into()));
    }

    #[test]
    fn csv_rejects_other_schemas() {
        let bytes = sample().to_csv();
        assert!(matches!(Table::from_csv(&bytes, "other"), Err(Error::Schema(_))));
        let bumped = String::from_utf8(bytes).unwrap().replace(" v1\n", " v2\n");
        assert!(matches!(Table::from_csv(bumped.as_bytes(), "demo"), Err(Error::Schema(_))));
    }

    #[test]
    fn missing_columns_are_schema_errors() {
        assert!(matches!(sample().column_f64("y"), Err(Error::Schema(_))));
    }

    #[test]
    fn json_documents_check_their_schema() {
        let bytes = sample().to_json();
        let data = read_json_document(&bytes, "demo").unwrap();
        assert_eq!(data["rows"][1]["label"], "c");
        assert!(read_json_document(&bytes, "other").is_err());
    }
}
