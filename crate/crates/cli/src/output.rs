use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::args::{Cli, Format};
use crate::Failure;

/// Writes row tables under the output directory and remembers what it wrote.
pub struct Sink {
    dir: PathBuf,
    format: Format,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, format: Format) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        Ok(Sink { dir: dir.to_path_buf(), format, written: Vec::new() })
    }

    pub fn path_for(&self, stem: &str) -> PathBuf {
        self.dir.join(format!("{stem}.{}", self.format.extension()))
    }

    /// Writes `rows` to `path` (or `<dir>/<stem>.<ext>`). JSONL mirrors CSV row for row.
    pub fn write<T: Serialize>(&mut self, stem: &str, path: Option<&Path>, rows: &[T]) -> Result<PathBuf, Failure> {
        let path = path.map(Path::to_path_buf).unwrap_or_else(|| self.path_for(stem));
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| Failure::io(&path, e))?;
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(file);
                for row in rows {
                    w.serialize(row).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
                }
                w.flush().map_err(|e| Failure::io(&path, e))?;
            }
            Format::Jsonl => {
                let mut w = BufWriter::new(file);
                for row in rows {
                    serde_json::to_writer(&mut w, row).map_err(|e| Failure::Io(e.to_string()))?;
                    w.write_all(b"\n").map_err(|e| Failure::io(&path, e))?;
                }
                w.flush().map_err(|e| Failure::io(&path, e))?;
            }
        }
        self.written.push(path.clone());
        Ok(path)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    seed: Option<u64>,
    threads: usize,
    invocation: &'a Cli,
    /// Fully resolved experiment configuration, when the subcommand has one.
    resolved: Option<serde_json::Value>,
    outputs: Vec<String>,
}

pub fn write_manifest(
    cli: &Cli,
    threads: usize,
    resolved: Option<serde_json::Value>,
    outputs: &[PathBuf],
) -> Result<PathBuf, Failure> {
    let manifest = Manifest {
        tool: "crp",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cli.command.name(),
        seed: cli.seed,
        threads,
        invocation: cli,
        resolved,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let path = cli.out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Io(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| Failure::io(&path, e))?;
    Ok(path)
}

/// The invocation recorded in a manifest.
pub fn read_manifest(path: &Path) -> Result<Cli, Failure> {
    #[derive(serde::Deserialize)]
    struct Recorded {
        invocation: Cli,
    }
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let rec: Recorded =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: not a manifest: {e}", path.display())))?;
    Ok(rec.invocation)
}
