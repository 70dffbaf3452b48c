use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Formats {
    /// `None` selects all three.
    pub fn parse(spec: Option<&str>) -> Result<Self, CliError> {
        let Some(spec) = spec else {
            return Ok(Self { csv: true, json: true, svg: true });
        };
        let mut f = Self { csv: false, json: false, svg: false };
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "svg" => f.svg = true,
                other => return Err(CliError::Usage(format!("unknown output format {other:?} (expected csv, json, svg)"))),
            }
        }
        if !(f.csv || f.json || f.svg) {
            return Err(CliError::Usage("--formats needs at least one of csv, json, svg".into()));
        }
        Ok(f)
    }
}

/// Writes into `dir`, creating it if needed. Files appear whole or not at all.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let target = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(contents.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target).map_err(|e| CliError::Runtime(format!("{}: {}", target.display(), e.error)))?;
        log::info!("wrote {}", target.display());
        self.written.push(target);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Keeps file names to `[A-Za-z0-9._-]`.
pub fn file_stem(s: &str) -> String {
    s.chars()
        .filter_map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '.' | '_' | '-' => Some(c),
            '(' => Some('_'),
            _ => None,
        })
        .collect()
}
