//! Delimiter-separated tables with `#` metadata lines.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Csv,
}

impl Format {
    pub fn delimiter(self) -> char {
        match self {
            Format::Tsv => '\t',
            Format::Csv => ',',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Tsv => "tsv",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(usize),
    Float(f64),
    Bool(bool),
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub meta: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn set_columns(&mut self, columns: &[&str]) {
        self.columns = columns.iter().map(|c| c.to_string()).collect();
    }

    pub fn meta(&mut self, line: impl Into<String>) {
        self.meta.push(line.into());
    }

    pub fn render(&self, format: Format, precision: usize) -> String {
        let sep = format.delimiter().to_string();
        let mut out = String::new();
        for line in &self.meta {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&self.columns.join(&sep));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| render_cell(*c, precision)).collect();
            out.push_str(&cells.join(&sep));
            out.push('\n');
        }
        out
    }
}

/// Scientific notation with `precision` significant digits.
pub fn render_float(x: f64, precision: usize) -> String {
    format!("{:.*e}", precision.max(1) - 1, x)
}

fn render_cell(cell: Cell, precision: usize) -> String {
    match cell {
        Cell::Int(i) => i.to_string(),
        Cell::Float(x) => render_float(x, precision),
        Cell::Bool(b) => b.to_string(),
    }
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> io::Result<()> {
    match path {
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            fs::create_dir_all(dir)?;
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).map_err(|e| e.error)?;
            Ok(())
        }
    }
}
