//! Minimal numeric CSV tables.
//!
//! Every table can carry comment lines (prefixed with `# `) written before
//! the header row. Floats use Rust's shortest round-trip formatting, so the
//! byte output is a pure function of the values.

use std::fmt::Write as _;
use std::path::Path;

use crate::esc::Trace;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { comments: Vec::new(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn comment(mut self, c: impl Into<String>) -> Self {
        self.comments.push(c.into());
        self
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push_row(row.iter().map(|x| fmt_f64(*x)).collect());
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }

    /// Parse a table produced by [`CsvTable::render`].
    pub fn parse(text: &str) -> Option<Self> {
        let mut t = CsvTable::default();
        let mut lines = text.lines();
        for line in lines.by_ref() {
            if let Some(c) = line.strip_prefix("# ") {
                t.comments.push(c.to_string());
            } else {
                t.header = line.split(',').map(str::to_string).collect();
                break;
            }
        }
        if t.header.is_empty() {
            return None;
        }
        for line in lines {
            t.rows.push(line.split(',').map(str::to_string).collect());
        }
        Some(t)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r.get(idx)?.parse().ok()).collect()
    }
}

/// Optimizer trace as `step,time,u_1..u_n,v_1..v_n,j` (plus cumulative `queries`).
pub fn trace_table(trace: &Trace) -> CsvTable {
    let n = trace.rows.first().map_or(0, |r| r.v.len());
    let mut header = vec!["step".to_string(), "time".to_string()];
    header.extend((1..=n).map(|i| format!("u_{i}")));
    header.extend((1..=n).map(|i| format!("v_{i}")));
    header.push("j".into());
    header.push("queries".into());
    let mut t = CsvTable::new(header);
    for (r, q) in trace.rows.iter().zip(&trace.queries) {
        let mut row = vec![r.step.to_string(), fmt_f64(r.time)];
        row.extend(r.u.iter().map(|x| fmt_f64(*x)));
        row.extend(r.v.iter().map(|x| fmt_f64(*x)));
        row.push(fmt_f64(r.j));
        row.push(q.to_string());
        t.push_row(row);
    }
    t
}
