//! Output plumbing: CSV files with 17-significant-digit floats, resolved-config echoes, and
//! optional aligned tables on stdout.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Write CSV files and print a short summary.
    Csv,
    /// Additionally print the emitted tables, aligned, to stdout.
    Table,
}

pub struct Sink {
    dir: PathBuf,
    format: Format,
}

/// Full-precision cell: round-trips f64 exactly.
pub fn e(v: f64) -> String {
    format!("{v:.16e}")
}

impl Sink {
    pub fn new(dir: &Path, format: Format) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Sink { dir: dir.to_path_buf(), format })
    }

    /// Writes a file into the output directory and reports the path.
    pub fn write(&self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    /// Assembles and writes a CSV: a header row plus one row per record.
    pub fn csv(&self, name: &str, header: &str, rows: &[Vec<String>]) -> anyhow::Result<PathBuf> {
        let mut out = String::from(header);
        out.push('\n');
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        let path = self.write(name, &out)?;
        if self.format == Format::Table {
            print_table(header, rows);
        }
        Ok(path)
    }

    /// Echoes the resolved configuration so the run can be reproduced from it.
    pub fn resolved<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<()> {
        self.write(name, &crate::config::to_toml(value)?)?;
        Ok(())
    }
}

fn print_table(header: &str, rows: &[Vec<String>]) {
    let cols: Vec<&str> = header.split(',').collect();
    let mut widths: Vec<usize> = cols.iter().map(|c| c.len()).collect();
    // Shorten float cells for display; files keep full precision.
    let disp: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|cell| match cell.parse::<f64>() {
                    Ok(v) if cell.contains('e') || cell.contains('.') => format!("{v:.6e}"),
                    _ => cell.clone(),
                })
                .collect()
        })
        .collect();
    for row in &disp {
        for (i, cell) in row.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(cell.len());
            }
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> =
            cells.iter().enumerate().map(|(i, c)| format!("{c:>width$}", width = widths[i])).collect();
        println!("  {}", padded.join("  "));
    };
    line(&cols.iter().map(|c| c.to_string()).collect::<Vec<_>>());
    for row in &disp {
        line(row);
    }
}
