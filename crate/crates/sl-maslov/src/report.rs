//! Report envelopes and CSV artifacts.
//!
//! Every file starts with (JSON) or carries in `#` comment lines (CSV) the
//! config hash, seed and tolerances. Floats in CSV bodies use 17
//! significant digits so identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sl_maslov_core::Tolerances;

use crate::error::{CliError, ErrorRecord};

pub const REPORT_SCHEMA: &str = "sl-maslov/report/v1";
pub const CSV_SCHEMA: &str = "sl-maslov/csv/v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The computation finished but a checked invariant failed.
    CheckFailed,
}

#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub schema: &'static str,
    pub command: &'a str,
    pub config_hash: &'a str,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub problem: &'a str,
    pub bc: &'a str,
    pub status: Status,
    /// Why the check failed, when it did.
    pub failures: Vec<String>,
    pub artifacts: Vec<String>,
    pub result: &'a T,
}

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Writes artifacts into one output directory and remembers their names.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    config_hash: String,
    seed: u64,
    tolerances: Tolerances,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(
        dir: &Path,
        config_hash: &str,
        seed: u64,
        tolerances: Tolerances,
    ) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            config_hash: config_hash.to_string(),
            seed,
            tolerances,
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(
        &mut self,
        name: &str,
        value: &T,
    ) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::invalid(name, &e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// CSV with a `#` preamble; `rows` must match `header` in length.
    pub fn write_csv<I>(&mut self, name: &str, header: &[String], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let t = &self.tolerances;
        let mut buf = format!(
            "# schema={CSV_SCHEMA}\n# config_hash={}\n# seed={}\n# tolerances=rank:{:e};unit:{:e};symp:{:e};eig:{:e};lambda:{:e};integrator:{:e}\n",
            self.config_hash, self.seed, t.rank, t.unit, t.symp, t.eig, t.lambda, t.integrator
        )
        .into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let csv_err = |e: csv::Error| CliError::invalid(name, &e.to_string());
            w.write_record(header).map_err(csv_err)?;
            for row in rows {
                w.write_record(&row).map_err(csv_err)?;
            }
            w.flush()
                .map_err(|e| CliError::invalid(name, &e.to_string()))?;
        }
        self.write(name, &buf)
    }

    pub fn write_error(&mut self, record: &ErrorRecord) -> Result<(), CliError> {
        self.write_json("error.json", record)
    }
}

/// Strips the `#` preamble of a CSV artifact.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        let x = std::f64::consts::PI * 1e-7;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_has_preamble_and_body() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path(), "abc", 5, Tolerances::default()).unwrap();
        out.write_csv(
            "t.csv",
            &["a".into(), "b".into()],
            vec![vec!["1".into(), fmt_f64(2.0)]],
        )
        .unwrap();
        let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert!(text.contains("# config_hash=abc\n# seed=5\n"));
        assert_eq!(csv_body(&text), "a,b\n1,2.0000000000000000e0\n");
        assert_eq!(out.written(), ["t.csv"]);
    }
}
