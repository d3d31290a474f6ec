//! Output plumbing: CSV tables with full-precision floats and a JSON
//! manifest describing each run.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

/// Format a float for CSV at full round-trip precision.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A created output directory collecting files and manifest entries.
pub struct OutDir {
    root: PathBuf,
    outputs: Vec<Value>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    /// Write a CSV file (header plus rows, LF line endings) and register it.
    pub fn csv<I>(&mut self, name: &str, header: &str, rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = String>,
    {
        let path = self.root.join(name);
        let mut file = BufWriter::new(
            File::create(&path).with_context(|| format!("cannot create {}", path.display()))?,
        );
        let mut count = 0usize;
        writeln!(file, "{header}")?;
        for row in rows {
            writeln!(file, "{row}")?;
            count += 1;
        }
        file.flush()?;
        self.outputs.push(json!({
            "file": name,
            "kind": "csv",
            "rows": count,
        }));
        Ok(path)
    }

    /// Write a standalone JSON document and register it.
    pub fn json(&mut self, name: &str, value: &Value) -> Result<PathBuf> {
        let path = self.root.join(name);
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(&path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(json!({
            "file": name,
            "kind": "json",
        }));
        Ok(path)
    }

    /// Finish the run: write `manifest.json` summarising command, inputs,
    /// and produced files.
    pub fn manifest(self, command: &str, parameters: Value, summary: Value) -> Result<PathBuf> {
        let path = self.root.join("manifest.json");
        let doc = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "parameters": parameters,
            "summary": summary,
            "outputs": self.outputs,
        });
        let text = serde_json::to_string_pretty(&doc)?;
        std::fs::write(&path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
