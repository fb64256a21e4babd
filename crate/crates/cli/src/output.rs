//! Stamped JSON and CSV artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    result: &'a T,
}

/// Writes every artifact of one run into the output directory.
#[derive(Debug, Clone)]
pub struct OutputSink {
    dir: PathBuf,
    command: String,
    config_hash: String,
    json: bool,
    csv: bool,
    written: Vec<PathBuf>,
}

impl OutputSink {
    /// Creates the directory and writes `config.resolved.json`.
    pub fn create(config: &ExperimentConfig, command: &str) -> CliResult<Self> {
        let dir = config.output_dir();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let mut sink = Self {
            dir,
            command: command.to_string(),
            config_hash: config.hash(),
            json: config.wants(OutputFormat::Json),
            csv: config.wants(OutputFormat::Csv),
            written: Vec::new(),
        };
        let text = serde_json::to_string_pretty(config).expect("config serializes");
        sink.write_text("config.resolved.json", &(text + "\n"))?;
        Ok(sink)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// `{"schema": 1, "command", "config_hash", "seed", "result"}`; skipped
    /// unless JSON output is enabled.
    pub fn write_json<T: Serialize>(&mut self, name: &str, seed: u64, result: &T) -> CliResult<Option<PathBuf>> {
        if !self.json {
            return Ok(None);
        }
        self.write_json_always(name, seed, result).map(Some)
    }

    /// As [`Self::write_json`] regardless of the configured formats.
    pub fn write_json_always<T: Serialize>(&mut self, name: &str, seed: u64, result: &T) -> CliResult<PathBuf> {
        let envelope = Envelope {
            schema: SCHEMA_VERSION,
            command: &self.command,
            config_hash: &self.config_hash,
            seed,
            result,
        };
        let text = serde_json::to_string_pretty(&envelope).expect("results serialize");
        self.write_text(name, &(text + "\n"))
    }

    /// Numeric table with `#` stamp lines above the header row.
    pub fn write_csv(&mut self, name: &str, seed: u64, header: &[&str], rows: &[Vec<f64>]) -> CliResult<Option<PathBuf>> {
        if !self.csv {
            return Ok(None);
        }
        let path = self.dir.join(name);
        let mut file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        writeln!(
            file,
            "# schema: {SCHEMA_VERSION}\n# command: {}\n# config_hash: {}\n# seed: {seed}",
            self.command, self.config_hash
        )
        .map_err(|e| CliError::io(&path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(Some(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_in(dir: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.output.directory = Some(dir.to_path_buf());
        c
    }

    #[test]
    fn json_is_stamped() {
        let dir = tempfile::tempdir().unwrap();
        let c = config_in(dir.path());
        let mut sink = OutputSink::create(&c, "demo").unwrap();
        let path = sink.write_json("x.json", 7, &serde_json::json!({"a": 1.5})).unwrap().unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["seed"], 7);
        assert_eq!(v["config_hash"], c.hash());
        assert_eq!(v["result"]["a"], 1.5);
        let resolved: ExperimentConfig =
            serde_json::from_str(&fs::read_to_string(dir.path().join("config.resolved.json")).unwrap()).unwrap();
        assert_eq!(resolved, c);
    }

    #[test]
    fn csv_has_comment_stamp_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut sink = OutputSink::create(&config_in(dir.path()), "demo").unwrap();
        let path = sink.write_csv("t.csv", 3, &["t", "x"], &[vec![0.0, 1.25], vec![0.5, -2.0]]).unwrap().unwrap();
        let text = fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[..4].iter().all(|l| l.starts_with('#')));
        assert_eq!(lines[4], "t,x");
        assert_eq!(lines[5], "0,1.25");
        assert_eq!(lines[6], "0.5,-2");
    }

    #[test]
    fn formats_filter_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config_in(dir.path());
        c.output.formats = vec![OutputFormat::Json];
        let mut sink = OutputSink::create(&c, "demo").unwrap();
        assert!(sink.write_csv("t.csv", 0, &["t"], &[vec![1.0]]).unwrap().is_none());
        assert!(!dir.path().join("t.csv").exists());
    }
}
