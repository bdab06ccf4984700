//! CSV tables and pass/fail assertions.
//!
//! Floats are written with Rust's shortest round-trip formatting so that a
//! value read back from a cell is the value that was computed.

use serde::{Deserialize, Serialize};

pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        let a = self.abs();
        if *self == 0.0 || !self.is_finite() || (1e-4..1e16).contains(&a) {
            self.to_string()
        } else {
            format!("{self:e}")
        }
    }
}

impl Cell for usize {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for u64 {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for bool {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for &str {
    fn cell(&self) -> String {
        (*self).to_string()
    }
}

impl Cell for String {
    fn cell(&self) -> String {
        self.clone()
    }
}

impl<T: Cell> Cell for Option<T> {
    fn cell(&self) -> String {
        self.as_ref().map(Cell::cell).unwrap_or_default()
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::table::Cell::cell(&$x)),*] };
}

#[derive(Debug, Clone)]
pub struct Table {
    /// File name inside the artifact directory.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Relation::Le => a <= b,
            Relation::Lt => a < b,
            Relation::Ge => a >= b,
            Relation::Gt => a > b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

/// One checked claim: `measured relation threshold`. NaN never passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Assertion {
    pub fn new(name: impl Into<String>, measured: f64, relation: Relation, threshold: f64) -> Self {
        let pass = relation.holds(measured, threshold);
        Self { name: name.into(), measured, relation, threshold, pass }
    }

    pub fn le(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::Le, threshold)
    }

    pub fn lt(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::Lt, threshold)
    }

    pub fn ge(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::Ge, threshold)
    }

    pub fn gt(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::Gt, threshold)
    }
}

pub const ASSERTIONS_FILE: &str = "assertions.csv";

pub fn assertions_table(list: &[Assertion]) -> Table {
    let mut t = Table::new(ASSERTIONS_FILE, &["name", "measured", "relation", "threshold", "pass"]);
    for a in list {
        t.push(row![a.name.as_str(), a.measured, a.relation.symbol(), a.threshold, a.pass]);
    }
    t
}
