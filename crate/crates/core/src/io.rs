//! Plain-text tables and matrix files.
//!
//! Tables carry `# key value` header lines followed by whitespace-separated
//! numeric rows. Numbers are written with 17 significant digits so that
//! output is bit-reproducible.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::operator::{c64, ComplexMatrix};

/// `{:.16e}` formatting of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A header plus numeric columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            header: Vec::new(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.header.push((key.to_string(), value.to_string()));
        self
    }

    pub fn meta_f64(self, key: &str, value: f64) -> Self {
        self.meta(key, fmt_f64(value))
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(s, "# {k} {v}");
        }
        let _ = writeln!(s, "# columns {}", self.columns.join(" "));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.render().as_bytes())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Table::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                let (k, v) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                if k == "columns" {
                    t.columns = v.split_whitespace().map(str::to_string).collect();
                } else {
                    t.header.push((k.to_string(), v.trim().to_string()));
                }
                continue;
            }
            let row = parse_numbers(line)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            if !t.columns.is_empty() && row.len() != t.columns.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected {} columns, found {}",
                    lineno + 1,
                    t.columns.len(),
                    row.len()
                )));
            }
            t.rows.push(row);
        }
        Ok(t)
    }
}

fn parse_numbers(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| format!("bad number `{tok}`"))
        })
        .collect()
}

/// One matrix row per line, each entry written as `re im`.
pub fn render_matrix(m: &ComplexMatrix) -> String {
    let mut s = format!("# dim {}\n", m.nrows());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{} {}", fmt_f64(m[(i, j)].re), fmt_f64(m[(i, j)].im)))
            .collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

/// Inverse of [`render_matrix`]. Lines holding `n` numbers instead of `2n`
/// are read as real entries.
pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums =
            parse_numbers(line).map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        rows.push(nums);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse("empty matrix file".into()));
    }
    let mut m = ComplexMatrix::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        if r.len() == 2 * n {
            for j in 0..n {
                m[(i, j)] = c64(r[2 * j], r[2 * j + 1]);
            }
        } else if r.len() == n {
            for j in 0..n {
                m[(i, j)] = c64(r[j], 0.0);
            }
        } else {
            return Err(Error::Parse(format!(
                "row {} has {} numbers; expected {} or {}",
                i + 1,
                r.len(),
                n,
                2 * n
            )));
        }
    }
    Ok(m)
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}
