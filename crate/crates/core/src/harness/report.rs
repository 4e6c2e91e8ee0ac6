use std::path::{Path, PathBuf};

use serde::Serialize;

use super::HarnessError;

/// A table of labelled rows plus a metadata snapshot. Values are stored
/// already formatted so the CSV is byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub metadata: serde_json::Value,
}

/// Fixed four-decimal rendering used for every ratio in reports.
pub fn ratio(x: f64) -> String {
    format!("{x:.4}")
}

impl ExperimentReport {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        ExperimentReport {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: serde_json::Value::Object(Default::default()),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn set_meta(&mut self, key: &str, value: impl Serialize) {
        if let serde_json::Value::Object(map) = &mut self.metadata {
            map.insert(
                key.to_string(),
                serde_json::to_value(value).expect("serializable"),
            );
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// First row whose column `key` equals `value`.
    pub fn row_where(&self, key: &str, value: &str) -> Option<&[String]> {
        let k = self.column(key)?;
        self.rows.iter().find(|r| r[k] == value).map(Vec::as_slice)
    }

    pub fn value(&self, row: &[String], column: &str) -> Option<f64> {
        row.get(self.column(column)?)?.parse().ok()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Writes `<name>.csv` and `<name>.meta.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(PathBuf, PathBuf), HarnessError> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.name));
        let meta_path = dir.join(format!("{}.meta.json", self.name));
        std::fs::write(&csv_path, self.to_csv())?;
        let meta = serde_json::to_string_pretty(&self.metadata).expect("serializable") + "\n";
        std::fs::write(&meta_path, meta)?;
        Ok((csv_path, meta_path))
    }
}
