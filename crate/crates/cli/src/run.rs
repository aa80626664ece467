//! Output files and the manifest that accompanies them.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Config;

pub struct Run {
    dir: PathBuf,
    command: &'static str,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a, A: Serialize> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a Config,
    args: &'a A,
    outputs: &'a [String],
}

impl Run {
    pub fn new(dir: &Path, command: &'static str) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Run {
            dir: dir.to_path_buf(),
            command,
            outputs: Vec::new(),
        })
    }

    /// Creates `name` in the output directory and records it.
    pub fn create(&mut self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path)?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    /// Writes `<command>.manifest.json`: the resolved configuration, the
    /// subcommand arguments and the files produced. No timestamps, so
    /// repeated runs are byte-identical.
    pub fn finish<A: Serialize>(self, cfg: &Config, args: &A) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(format!("{}.manifest.json", self.command));
        let m = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            config: cfg,
            args,
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        for o in &self.outputs {
            println!("wrote {}", self.dir.join(o).display());
        }
        Ok(path)
    }
}
