//! Output files and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Git-style content hash: sha256 of `"blob <len>\0" + bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

pub enum Cell<'a> {
    Num(f64),
    Int(i64),
    Text(&'a str),
}

/// CSV text with a header row and a fixed column order.
#[derive(Debug, Clone)]
pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            columns: header.len(),
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.columns, "csv row width");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Num(x) => self.text.push_str(&fmt_num(*x)),
                Cell::Int(k) => write!(self.text, "{k}").expect("string write"),
                Cell::Text(s) => self.text.push_str(s),
            }
        }
        self.text.push('\n');
    }

    pub fn nums(&mut self, values: &[f64]) {
        let cells: Vec<Cell> = values.iter().map(|&v| Cell::Num(v)).collect();
        self.row(&cells);
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// A file to be written under the output directory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            contents: contents.into(),
        }
    }

    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Result<Self> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        Ok(Self::new(name, text))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub phase: String,
    pub seconds: f64,
}

/// Wall-clock timings by phase.
#[derive(Debug, Default)]
pub struct Timer {
    phases: Vec<Timing>,
}

impl Timer {
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.phases.push(Timing {
            phase: phase.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn into_vec(self) -> Vec<Timing> {
        self.phases
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub input_hash: String,
    pub outputs: Vec<OutputRecord>,
    pub timings: Vec<Timing>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes every artifact under `out_dir`, then `manifest.json` last.
pub fn emit_outputs<C: Serialize>(
    out_dir: &Path,
    command: &str,
    config: &C,
    artifacts: &[Artifact],
    timings: Vec<Timing>,
) -> Result<RunManifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let echo = serde_json::to_value(config)?;
    let canonical = serde_json::to_string(&echo)?;
    let mut outputs = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path: PathBuf = out_dir.join(&a.name);
        std::fs::write(&path, a.contents.as_bytes()).map_err(|e| Error::io(&path, e))?;
        outputs.push(OutputRecord {
            path: a.name.clone(),
            hash: content_hash(a.contents.as_bytes()),
        });
    }
    let manifest = RunManifest {
        tool_version: format!("mixkpp {}", env!("CARGO_PKG_VERSION")),
        command: command.into(),
        config: echo,
        input_hash: content_hash(canonical.as_bytes()),
        outputs,
        timings,
    };
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn git_style_hash() {
        // `git hash-object` uses sha1; the framing is the same.
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }

    #[test]
    fn manifest_lists_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut csv = Csv::new(&["t", "u"]);
        csv.nums(&[0.0, 1.0]);
        let arts = vec![Artifact::new("a.csv", csv.into_string())];
        let m = emit_outputs(dir.path(), "test", &serde_json::json!({"k": 1}), &arts, vec![]).unwrap();
        assert_eq!(m.outputs.len(), 1);
        let back = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(back, m);
        let text = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert_eq!(text, "t,u\n0.0000000000000000e0,1.0000000000000000e0\n");
    }
}
