//! Files written by a run: data CSVs, JSON documents, the summary and the
//! manifest that lists them.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

/// One emitted file. `columns` names the CSV axes for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub description: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
}

/// A closed-form comparison made during a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub summary: String,
    pub files: Vec<FileEntry>,
}

pub struct Outputs {
    dir: PathBuf,
    files: Vec<FileEntry>,
    values: Map<String, Value>,
    checks: Vec<Check>,
}

impl Outputs {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            values: Map::new(),
            checks: Vec::new(),
        })
    }

    pub fn csv(
        &mut self,
        name: &str,
        description: &str,
        write: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    ) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        write(&mut w)?;
        w.flush()?;
        // the header row doubles as the axis description
        let header = fs::read_to_string(self.dir.join(name))?
            .lines()
            .next()
            .unwrap_or_default()
            .to_string();
        self.files.push(FileEntry {
            path: name.to_string(),
            description: description.to_string(),
            columns: header.split(',').map(str::to_string).collect(),
        });
        Ok(())
    }

    pub fn json(&mut self, name: &str, description: &str, value: &impl Serialize) -> io::Result<()> {
        write_json(&self.dir.join(name), value)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            description: description.to_string(),
            columns: Vec::new(),
        });
        Ok(())
    }

    pub fn value(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).unwrap_or(Value::Null);
        self.values.insert(key.to_string(), v);
    }

    /// Records `|value - expected| <= tolerance`.
    pub fn check_close(&mut self, name: &str, value: f64, expected: f64, tolerance: f64) {
        let passed = (value - expected).abs() <= tolerance;
        self.push_check(name, value, expected, tolerance, passed);
    }

    /// Records `value <= bound`.
    pub fn check_below(&mut self, name: &str, value: f64, bound: f64) {
        self.push_check(name, value, 0.0, bound, value <= bound);
    }

    /// Records `value >= bound`.
    pub fn check_at_least(&mut self, name: &str, value: f64, bound: f64) {
        self.push_check(name, value, bound, 0.0, value >= bound);
    }

    fn push_check(&mut self, name: &str, value: f64, expected: f64, tolerance: f64, passed: bool) {
        self.checks.push(Check {
            name: name.to_string(),
            value,
            expected,
            tolerance,
            passed,
        });
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    /// Writes `summary.json` and `manifest.json`.
    pub fn finish(self, scenario: &str, config: &impl Serialize) -> io::Result<Manifest> {
        let summary = serde_json::json!({
            "scenario": scenario,
            "config": config,
            "values": self.values,
            "checks": self.checks,
            "all_checks_passed": self.checks.iter().all(|c| c.passed),
        });
        write_json(&self.dir.join("summary.json"), &summary)?;
        let manifest = Manifest {
            scenario: scenario.to_string(),
            summary: "summary.json".to_string(),
            files: self.files,
        };
        write_json(&self.dir.join("manifest.json"), &manifest)?;
        Ok(manifest)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}
