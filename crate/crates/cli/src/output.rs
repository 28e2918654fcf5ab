//! Result files: CSV tables, `.dat` plot columns and the run manifest.
//!
//! Everything is buffered in memory and written once at the end, each file
//! through a temporary file in the output directory and a rename, so an
//! interrupted or failed run leaves no partial results behind.

use std::fs;
use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

/// Shortest round-trip scientific notation; `NaN`/`inf` spelled out.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Default)]
pub struct Output {
    files: Vec<(String, Vec<u8>)>,
    /// Summary values that are not columns of any table.
    pub derived: Vec<(String, String)>,
}

impl Output {
    pub fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(&row).expect("in-memory write");
        }
        self.files.push((name.to_string(), w.into_inner().expect("in-memory flush")));
    }

    /// Whitespace-separated columns with a `#` header line.
    pub fn dat(&mut self, name: &str, columns: &[&str], rows: Vec<Vec<f64>>) {
        let mut text = format!("# {}\n", columns.join(" "));
        for row in rows {
            let line: Vec<String> = row.into_iter().map(num).collect();
            text.push_str(&line.join(" "));
            text.push('\n');
        }
        self.files.push((name.to_string(), text.into_bytes()));
    }

    pub fn derive(&mut self, key: &str, value: impl ToString) {
        self.derived.push((key.to_string(), value.to_string()));
    }

    pub fn manifest(&mut self, subcommand: &str, seed: u64, config: &[(String, String)]) {
        let mut m = String::new();
        m.push_str(&format!("program = lamelab-cli {}\n", env!("CARGO_PKG_VERSION")));
        m.push_str(&format!("library = lamelab {}\n", lamelab::VERSION));
        m.push_str(&format!("subcommand = {subcommand}\n"));
        m.push_str(&format!("seed = {seed}\n"));
        m.push_str("\n[config]\n");
        for (k, v) in config {
            m.push_str(&format!("{k} = {v}\n"));
        }
        m.push_str("\n[derived]\n");
        for (k, v) in &self.derived {
            m.push_str(&format!("{k} = {v}\n"));
        }
        m.push_str("\n[files]\n");
        for (name, _) in &self.files {
            m.push_str(&format!("{name}\n"));
        }
        self.files.push(("manifest.txt".to_string(), m.into_bytes()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write_all(&self, dir: &Path) -> std::io::Result<()> {
        for (name, bytes) in &self.files {
            let mut tmp = NamedTempFile::new_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(dir.join(name)).map_err(|e| e.error)?;
        }
        Ok(())
    }
}

/// Creates `dir` if needed and checks that files can be created in it.
pub fn probe_dir(dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    NamedTempFile::new_in(dir).map(drop)
}
