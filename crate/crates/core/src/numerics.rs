//! Compensated summation and fixed-precision CSV tables.

use std::fmt::Write as _;

/// Error-free transform: `a + b = s + e` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.sum, x);
        self.sum = s;
        self.comp += e;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A real number kept as an unevaluated sum `hi + lo` and reduced mod 1, so
/// phases `s·S_n f mod 1` stay accurate after millions of additions.
#[derive(Clone, Copy, Debug, Default)]
pub struct PhaseAccumulator {
    hi: f64,
    lo: f64,
}

impl PhaseAccumulator {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let lo = self.lo + e;
        let (hi, lo) = two_sum(s, lo);
        let k = hi.floor();
        let (hi, e2) = two_sum(hi, -k);
        let (hi, lo) = two_sum(hi, lo + e2);
        self.hi = hi;
        self.lo = lo;
    }

    /// Fractional part in `[0, 1)` up to rounding.
    pub fn fraction(&self) -> f64 {
        let v = self.hi + self.lo;
        v - v.floor()
    }
}

/// Fixed-precision float formatting for deterministic CSV output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.15e}")
}

/// A CSV table with LF line endings, written by hand so float formatting and
/// row order are fully deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Renders the table; `comment` lines (without the leading `#`) come first.
    pub fn render(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.iter().map(|f| escape(f)).collect::<Vec<_>>().join(","));
        }
        out
    }
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
