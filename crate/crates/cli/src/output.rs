//! CSV tables with self-describing headers, and the run manifest.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use slicing_core::{RegionCurve, ScenarioConfig};

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// Everything needed to reproduce an output file.
#[derive(Debug, Clone)]
pub struct RunHeader {
    pub command: String,
    pub config: Option<ScenarioConfig>,
    pub seed: u64,
    pub trials: u64,
    pub fast: bool,
}

impl RunHeader {
    fn lines(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# slicing {VERSION}");
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# seed: {}", self.seed);
        let _ = writeln!(s, "# trials: {}", self.trials);
        let _ = writeln!(s, "# fast: {}", self.fast);
        if let Some(cfg) = &self.config {
            for line in cfg.to_key_values().lines() {
                let _ = writeln!(s, "# config: {line}");
            }
        }
        s
    }
}

/// Shortest text with 17 significant digits; round-trips every `f64`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    pub notes: Vec<String>,
}

impl Table {
    /// One row per point: `x`, `y`, then every diagnostic key in sorted order.
    pub fn from_curve(curve: &RegionCurve) -> Self {
        let keys: BTreeSet<&str> =
            curve.points.iter().flat_map(|p| p.diagnostics.keys().map(String::as_str)).collect();
        let mut columns = vec![curve.axes.0.to_string(), curve.axes.1.to_string()];
        columns.extend(keys.iter().map(|k| k.to_string()));
        let rows = curve
            .points
            .iter()
            .map(|p| {
                let mut row = vec![Some(p.x), Some(p.y)];
                row.extend(keys.iter().map(|k| p.diag(k)));
                row
            })
            .collect();
        Table { title: curve.scheme.tag().to_string(), columns, rows, notes: curve.notes.clone() }
    }

    pub fn render(&self, header: &RunHeader) -> String {
        let mut s = header.lines();
        let _ = writeln!(s, "# curve: {}", self.title);
        for n in &self.notes {
            let _ = writeln!(s, "# note: {}", n.replace('\n', " "));
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.map(fmt_num).unwrap_or_default()).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// Collects written files for the manifest.
#[derive(Debug)]
pub struct OutDir {
    pub root: PathBuf,
    pub written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> io::Result<()> {
        fs::write(self.root.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, table: &Table, header: &RunHeader) -> io::Result<()> {
        if table.rows.is_empty() {
            log::warn!("{name}: curve {} is empty", table.title);
        }
        self.write(name, &table.render(header))
    }

    /// Sidecar with the wall time, kept out of the CSVs so that those stay
    /// byte-identical across reruns.
    pub fn write_manifest(&mut self, header: &RunHeader, config_path: Option<&Path>, wall_secs: f64) -> io::Result<()> {
        let mut s = header.lines();
        if let Some(p) = config_path {
            let _ = writeln!(s, "# config_path: {}", p.display());
        }
        let _ = writeln!(s, "# wall_time_s: {wall_secs:.3}");
        for f in &self.written {
            let _ = writeln!(s, "{f}");
        }
        fs::write(self.root.join("manifest.txt"), s)
    }
}
