//! Column-labelled tables rendered as CSV or JSON.
//!
//! CSV numbers carry 17 significant digits; JSON numbers use the shortest
//! representation that round-trips. Both render a double back to itself.

use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

/// `{:.16e}` with the exponent kept as Rust prints it.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            let fields = row.iter().map(|c| match c {
                Cell::Num(v) => format_number(*v),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s.clone(),
                Cell::Bool(b) => b.to_string(),
                Cell::Empty => String::new(),
            });
            w.write_record(fields).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    /// `{"columns": [...], "rows": [[...], ...]}`; empty and non-finite
    /// cells become `null`.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c {
                        Cell::Num(v) => json!(v),
                        Cell::Int(v) => json!(v),
                        Cell::Text(s) => json!(s),
                        Cell::Bool(b) => json!(b),
                        Cell::Empty => Value::Null,
                    })
                    .collect()
            })
            .collect();
        json!({ "columns": self.columns, "rows": rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_number(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_and_json_layout() {
        let mut t = Table::new(["t", "ok", "note", "count"]);
        t.push(vec![0.5.into(), true.into(), Cell::Empty, 3usize.into()]);
        t.push(vec![Cell::Num(f64::NAN), false.into(), "a,b".into(), 0usize.into()]);
        assert_eq!(t.to_csv(), "t,ok,note,count\n5.0000000000000000e-1,true,,3\nNaN,false,\"a,b\",0\n");
        let j = t.to_json();
        assert_eq!(j["columns"][1], json!("ok"));
        assert_eq!(j["rows"][0][0], json!(0.5));
        assert!(j["rows"][0][2].is_null() && j["rows"][1][0].is_null());
        assert_eq!(j["rows"][0][3], json!(3));
    }
}
