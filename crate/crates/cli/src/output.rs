use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Marks an error as the caller's fault; exits with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// What a successful command produced.
#[derive(Debug, Default)]
pub struct CommandResult {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

impl CommandResult {
    /// Writes the summary and file list; a closed stdout is not an error.
    pub fn print(&self) {
        let _ = self.write_to(&mut std::io::stdout().lock());
    }

    fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        if !self.summary.is_empty() {
            write!(w, "{}", self.summary)?;
            if !self.summary.ends_with('\n') {
                writeln!(w)?;
            }
        }
        for f in &self.files {
            writeln!(w, "wrote {}", f.display())?;
        }
        Ok(())
    }
}

/// Output directory: `--out` when given, else a fresh `runs/<timestamp>-seed<seed>`.
pub fn run_dir(out: Option<&Path>, seed: u64) -> Result<PathBuf> {
    let dir = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
            let base = PathBuf::from("runs").join(format!("{stamp}-seed{seed}"));
            let mut dir = base.clone();
            let mut n = 2;
            while dir.exists() {
                dir = PathBuf::from(format!("{}-{n}", base.display()));
                n += 1;
            }
            dir
        }
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

/// Files written by one command, collected for the summary.
pub struct Writer {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: PathBuf) -> Self {
        Self {
            dir,
            written: Vec::new(),
        }
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn finish(self, summary: String) -> CommandResult {
        CommandResult {
            summary,
            files: self.written,
        }
    }
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Parses a TOML settings file into `T`; malformed files are usage errors.
pub fn load_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read(path).map_err(|e| usage(format!("{e:#}")))?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}
