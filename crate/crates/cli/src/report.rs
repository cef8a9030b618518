//! Run reports and their text/CSV renderings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use conley_core::catalog::CATALOG_VERSION;
use conley_core::z2_chain::GradedDims;

use crate::config::Task;
use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
}

/// A named graded-dimension table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub dims: GradedDims,
}

impl Table {
    pub fn new(name: impl Into<String>, dims: GradedDims) -> Self {
        Self { name: name.into(), dims }
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("degree,dim\n");
        for (k, d) in self.dims.nonzero() {
            let _ = writeln!(s, "{k},{d}");
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub task: Task,
    pub system: String,
    pub config_hash: String,
    pub tables: Vec<Table>,
    /// Task-specific lines, in computation order.
    pub details: Vec<String>,
    pub violations: Vec<String>,
    /// False when a checked hypothesis or comparison failed.
    pub ok: bool,
    /// `(file stem, snapshot text)` pairs written with `--dump-cells`.
    pub snapshots: Vec<(String, String)>,
    /// Wall-clock time; never part of the rendered report.
    pub timing: Duration,
    /// Per-stage wall-clock times, likewise kept out of the report.
    pub stage_timings: Vec<(String, Duration)>,
}

impl RunReport {
    pub fn new(task: Task, system: impl Into<String>, config_hash: String) -> Self {
        Self {
            task,
            system: system.into(),
            config_hash,
            tables: Vec::new(),
            details: Vec::new(),
            violations: Vec::new(),
            ok: true,
            snapshots: Vec::new(),
            timing: Duration::ZERO,
            stage_timings: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&GradedDims> {
        self.tables.iter().find(|t| t.name == name).map(|t| &t.dims)
    }

    pub fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            2
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.render_text(),
            Format::Csv => self.render_csv(),
        }
    }

    fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "task: {}", self.task);
        let _ = writeln!(s, "system: {}", self.system);
        let _ = writeln!(s, "config_sha256: {}", self.config_hash);
        let _ = writeln!(s, "catalog_version: {CATALOG_VERSION}");
        for t in &self.tables {
            let _ = writeln!(s, "\n[{}] {}", t.name, t.dims);
            let _ = writeln!(s, "degree dim");
            for (k, d) in t.dims.nonzero() {
                let _ = writeln!(s, "{k} {d}");
            }
        }
        if !self.details.is_empty() {
            s.push('\n');
            for line in &self.details {
                let _ = writeln!(s, "{line}");
            }
        }
        let _ = writeln!(s, "\nviolations: {}", self.violations.len());
        for v in &self.violations {
            let _ = writeln!(s, "  {v}");
        }
        let _ = writeln!(s, "result: {}", if self.ok { "OK" } else { "FAILED" });
        s
    }

    fn render_csv(&self) -> String {
        let mut s = String::new();
        for t in &self.tables {
            let _ = writeln!(s, "# {}", t.name);
            s.push_str(&t.csv());
        }
        s
    }
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    Ok(path)
}

/// Writes `report.txt`, one `<table>.csv` per table when `format` is CSV,
/// and the cell snapshots. Returns the written paths in order.
pub fn emit_tables(report: &RunReport, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
    let mut out = vec![write(dir.join("report.txt"), &report.render(Format::Text))?];
    if format == Format::Csv {
        for t in &report.tables {
            out.push(write(dir.join(format!("{}.csv", t.name)), &t.csv())?);
        }
    }
    for (stem, text) in &report.snapshots {
        out.push(write(dir.join(format!("{stem}.cells")), text)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_of_empty_table_is_header_only() {
        assert_eq!(Table::new("e_graded", GradedDims::zero()).csv(), "degree,dim\n");
        let t = Table::new("classical", GradedDims::from_pairs(&[(1, 1)]));
        assert_eq!(t.csv(), "degree,dim\n1,1\n");
    }

    #[test]
    fn text_rendering_omits_timing() {
        let mut r = RunReport::new(Task::Index, "saddle2d", "0".repeat(64));
        r.tables.push(Table::new("classical", GradedDims::from_pairs(&[(1, 1)])));
        let a = r.render(Format::Text);
        r.timing = Duration::from_secs(3);
        assert_eq!(a, r.render(Format::Text));
        assert!(a.contains("[classical] {1: 1}\ndegree dim\n1 1\n"));
        assert!(a.ends_with("result: OK\n"));
    }

    #[test]
    fn emitted_files() {
        let dir = std::env::temp_dir().join(format!("conley-emit-{}", std::process::id()));
        let mut r = RunReport::new(Task::Index, "x", String::new());
        r.tables.push(Table::new("classical", GradedDims::zero()));
        r.snapshots.push(("N".into(), "# N\n".into()));
        let paths = emit_tables(&r, Format::Csv, &dir).unwrap();
        let names: Vec<_> = paths.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["report.txt", "classical.csv", "N.cells"]);
        assert_eq!(fs::read_to_string(dir.join("classical.csv")).unwrap(), "degree,dim\n");
        fs::remove_dir_all(dir).unwrap();
    }
}
