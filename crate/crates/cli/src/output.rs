//! CSV and JSON rendering.
//!
//! Every output carries the tool version, a SHA-256 of the scenario and the
//! master seed. CSV files start with one `#` metadata line followed by a
//! fixed header; JSON floats are written with 17 significant digits.

use std::io;

use npsd_core::Scenario;
use serde::Serialize;
use serde_json::ser::Formatter;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the scenario's canonical JSON form.
pub fn scenario_hash(sc: &Scenario) -> String {
    let bytes = serde_json::to_vec(sc).expect("scenario serializes");
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub command: &'static str,
    pub scenario_hash: String,
    pub master_seed: u64,
    pub warnings: Vec<String>,
}

impl Meta {
    pub fn csv_line(&self) -> String {
        format!(
            "# npsd {VERSION} scenario={} seed={} warnings={}",
            self.scenario_hash,
            self.master_seed,
            self.warnings.len()
        )
    }
}

/// A table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Real(f64),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as u64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}
impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            // shortest round-trip form, '.' decimal regardless of locale
            Cell::Real(v) => format!("{v:?}"),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn render_csv(meta: &Meta, table: &Table) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(meta.csv_line().as_bytes());
    out.push(b'\n');
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table.header).expect("in-memory write");
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// Compact JSON with every float printed to 17 significant digits.
struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json17<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17);
    value.serialize(&mut ser).expect("in-memory write");
    out.push(b'\n');
    out
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    scenario_hash: &'a str,
    master_seed: u64,
    warnings: &'a [String],
    result: &'a T,
}

pub fn render_json<T: Serialize>(meta: &Meta, result: &T) -> Vec<u8> {
    to_json17(&Document {
        tool: "npsd",
        version: VERSION,
        command: meta.command,
        scenario_hash: &meta.scenario_hash,
        master_seed: meta.master_seed,
        warnings: &meta.warnings,
        result,
    })
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        let s = String::from_utf8(to_json17(&vec![0.1, 1.0 / 3.0, -2.5e-300, f64::NAN])).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,3.3333333333333331e-1,-2.5000000000000000e-300,null]\n");
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[1], Some(1.0 / 3.0));
    }

    #[test]
    fn csv_cells() {
        let meta = Meta {
            command: "simulate",
            scenario_hash: "ab".into(),
            master_seed: 4,
            warnings: vec!["w".into()],
        };
        let mut t = Table::new(&["a", "b", "c", "d"]);
        t.push(vec!["x,y".into(), 3u64.into(), 0.5.into(), None.into()]);
        let s = String::from_utf8(render_csv(&meta, &t)).unwrap();
        assert_eq!(s, format!("# npsd {VERSION} scenario=ab seed=4 warnings=1\na,b,c,d\n\"x,y\",3,0.5,\n"));
    }
}
