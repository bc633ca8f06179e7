//! Rectangular output tables and their CSV encoding.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl fmt::Display for Cell {
    /// Floats use the shortest digits that parse back to the same binary
    /// float (`0.5`, `0.3333333333333333`); exponent form outside `[1e-5, 1e16)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) if *v != 0.0 && v.is_finite() && !(1e-5..1e16).contains(&v.abs()) => write!(f, "{v:e}"),
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }
}

/// Header block lines, each written as `# key: value` above the CSV.
#[derive(Debug, Clone, Default)]
pub struct Header {
    pub lines: Vec<(String, String)>,
}

impl Header {
    pub fn add(&mut self, key: &str, value: impl fmt::Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }
}

/// `\n`-terminated UTF-8 CSV with the header block, then the column row.
pub fn to_csv(header: &Header, table: &Table) -> String {
    let mut out = String::new();
    for (k, v) in &header.lines {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&table.columns).expect("in-memory write");
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::to_string)).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(t: &Table) -> String {
        to_csv(&Header::default(), t)
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(body(&Table::new(&["a", "b"])), "a,b\n");
    }

    #[test]
    fn floats_are_shortest_round_trip() {
        let mut t = Table::new(&["v"]);
        t.push(vec![0.5.into()]);
        t.push(vec![(1.0 / 3.0).into()]);
        t.push(vec![1e-300.into()]);
        let s = body(&t);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[1], "0.5");
        assert_eq!(lines[2].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(lines[3], "1e-300");
    }

    proptest::proptest! {
        #[test]
        fn any_finite_float_round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = Cell::Num(v).to_string();
            proptest::prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn labels_with_commas_are_quoted() {
        let mut t = Table::new(&["family", "n"]);
        t.push(vec!["{1},{2}".into(), 2usize.into()]);
        assert_eq!(body(&t), "family,n\n\"{1},{2}\",2\n");
    }

    #[test]
    fn header_block_precedes_columns() {
        let mut h = Header::default();
        h.add("seed", 7);
        assert_eq!(to_csv(&h, &Table::new(&["x"])), "# seed: 7\nx\n");
    }
}
