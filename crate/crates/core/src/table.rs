//! Flat tables written as CSV with a header row and LF line endings. Floats
//! are written with 17 significant digits so they parse back bit-exactly.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
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

/// 17 significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::InvalidParams(format!(
                "row has {} cells, header has {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    /// Header and raw string records of a CSV document.
    pub fn read_csv_records<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<String>>)> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut records = Vec::new();
        for rec in r.records() {
            records.push(rec?.iter().map(str::to_string).collect());
        }
        Ok((header, records))
    }

    /// Rows as JSON-ready objects keyed by column name.
    pub fn records(&self) -> Vec<serde_json_like::Record<'_>> {
        self.rows
            .iter()
            .map(|row| serde_json_like::Record {
                header: &self.header,
                row,
            })
            .collect()
    }
}

pub mod serde_json_like {
    //! Serializes a row as a map without pulling a JSON crate into the core.
    use serde::ser::{SerializeMap, Serializer};
    use serde::Serialize;

    use super::Cell;

    #[derive(Debug)]
    pub struct Record<'a> {
        pub header: &'a [String],
        pub row: &'a [Cell],
    }

    impl Serialize for Record<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let mut map = s.serialize_map(Some(self.header.len()))?;
            for (k, v) in self.header.iter().zip(self.row) {
                map.serialize_entry(k, v)?;
            }
            map.end()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_lf() {
        let mut t = Table::new(["p", "x", "tag"]);
        t.push(vec![5u64.into(), 0.25.into(), "a,b".into()]).unwrap();
        let s = t.to_csv_string().unwrap();
        assert_eq!(s, "p,x,tag\n5,2.5000000000000000e-1,\"a,b\"\n");
        assert!(t.push(vec![1u64.into()]).is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip_bit_exactly(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let mut t = Table::new(["v"]);
            t.push(vec![v.into()]).unwrap();
            let s = t.to_csv_string().unwrap();
            let (_, recs) = Table::read_csv_records(s.as_bytes()).unwrap();
            let back: f64 = recs[0][0].parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
