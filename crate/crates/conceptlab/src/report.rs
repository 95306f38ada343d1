//! Tab-separated report tables.

use crate::format::Stamp;

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    notes: Vec<String>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), notes: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn note(&mut self, text: &str) {
        self.notes.push(text.to_string());
    }

    /// Hash comment lines, notes, header row, data rows.
    pub fn render(&self, stamp: &Stamp) -> String {
        let mut out = format!("# vocab {}\n# config {}\n", stamp.vocab, stamp.config);
        for n in &self.notes {
            out.push_str(&format!("# {n}\n"));
        }
        for r in std::iter::once(&self.header).chain(&self.rows) {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Parses a rendered table back into (header, rows), skipping comments.
pub fn parse_table(text: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let header: Vec<String> = lines.next()?.split('\t').map(str::to_string).collect();
    let rows = lines.map(|l| l.split('\t').map(str::to_string).collect()).collect();
    Some((header, rows))
}
