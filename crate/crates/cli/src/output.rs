use std::fmt::Display;
use std::path::{Path, PathBuf};

use tvarx_core::TvError;

/// Failure carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn io(message: impl Display) -> Self {
        CliError {
            code: 2,
            message: message.to_string(),
        }
    }

    pub fn validation(message: impl Display) -> Self {
        CliError {
            code: 3,
            message: message.to_string(),
        }
    }
}

impl From<TvError> for CliError {
    fn from(e: TvError) -> Self {
        let code = match &e {
            TvError::Io(_) | TvError::Parse(_) => 2,
            TvError::InvalidInput(_) | TvError::LengthMismatch { .. } | TvError::Sampling(_) => 3,
            TvError::UnsupportedModel(_) | TvError::InterpolationRefused(_) => 4,
            TvError::NumericalFailure { .. } | TvError::Diverged { .. } => 5,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Read errors name the file they came from.
pub fn reading<T>(path: &Path, r: tvarx_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

/// Output paths of one command, checked before any computation starts.
pub struct Outputs {
    force: bool,
}

impl Outputs {
    pub fn new(force: bool) -> Self {
        Outputs { force }
    }

    pub fn check(&self, path: &Path) -> CliResult<()> {
        if path.exists() && !self.force {
            return Err(CliError::io(format!(
                "{} already exists (pass --force to overwrite)",
                path.display()
            )));
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            if !dir.is_dir() {
                return Err(CliError::io(format!("directory {} does not exist", dir.display())));
            }
        }
        Ok(())
    }

    pub fn check_all<'a>(&self, paths: impl IntoIterator<Item = &'a PathBuf>) -> CliResult<()> {
        paths.into_iter().try_for_each(|p| self.check(p))
    }
}

/// `<path>.<suffix>` next to `path`, e.g. `model.json` -> `model.residuals.csv`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Plain `key: value` report lines.
#[derive(Default)]
pub struct Report {
    lines: Vec<String>,
}

impl Report {
    pub fn add(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.lines.push(format!("{key}: {value}"));
        self
    }

    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}
