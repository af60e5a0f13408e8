//! Comma-separated tables preceded by `# key=value` metadata lines.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use biphoton::constants;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Twelve significant digits, printed in shortest round-trip form.
///
/// Rounding before printing keeps files stable against last-bit
/// differences in libm.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if (1e-4..1e9).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Default)]
pub struct Document {
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Document {
    /// Starts with tool, version, command, scenario identity and constants.
    pub fn new(command: &str, scenario_name: &str, scenario_source: &str) -> Self {
        let mut d = Document::default();
        d.meta("tool", "biphoton");
        d.meta("version", VERSION);
        d.meta("command", command);
        d.meta("scenario", scenario_name);
        d.meta("scenario_sha256", sha256_hex(scenario_source));
        for (k, v) in constants::ALL {
            d.meta(&format!("const_{k}"), num(v));
        }
        d
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string().replace('\n', " ");
        self.meta.push((key.to_string(), value));
        self
    }

    pub fn meta_num(&mut self, key: &str, value: f64) -> &mut Self {
        self.meta(key, num(value))
    }

    pub fn columns<S: AsRef<str>>(&mut self, names: &[S]) -> &mut Self {
        self.columns = names.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    pub fn row_nums(&mut self, values: &[f64]) -> &mut Self {
        self.rows.push(values.iter().map(|&v| num(v)).collect());
        self
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        self.rows.push(cells);
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        if !self.columns.is_empty() {
            let _ = writeln!(out, "{}", self.columns.join(","));
        }
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

/// Write to `path`, or standard output when absent.
pub fn emit(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            lock.flush()
        }
    }
}

/// `<out>.svg` next to the data file.
pub fn svg_path(out: &Path) -> PathBuf {
    out.with_extension("svg")
}
