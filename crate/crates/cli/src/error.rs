use std::fmt;
use std::path::{Path, PathBuf};

use qrm::QrmError;

/// Where in an input file a problem was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub file: PathBuf,
    pub line: Option<usize>,
}

impl Location {
    pub fn file(path: &Path) -> Self {
        Location {
            file: path.to_path_buf(),
            line: None,
        }
    }

    pub fn line(path: &Path, line: usize) -> Self {
        Location {
            file: path.to_path_buf(),
            line: Some(line),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config keys or values.
    #[error("{message}")]
    Config {
        at: Option<Location>,
        message: String,
    },
    /// Missing, corrupt or incompatible data files.
    #[error("{message}")]
    Data {
        at: Option<Location>,
        message: String,
    },
    /// The computation itself failed (CFL, NaN, broken descent).
    #[error("{0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config {
            at: None,
            message: message.into(),
        }
    }

    pub fn config_at(at: Location, message: impl Into<String>) -> Self {
        CliError::Config {
            at: Some(at),
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError::Data {
            at: None,
            message: message.into(),
        }
    }

    pub fn data_at(at: Location, message: impl Into<String>) -> Self {
        CliError::Data {
            at: Some(at),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Data { .. } | CliError::Io { .. } => "data",
            CliError::Numeric(_) => "numeric",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Data { .. } | CliError::Io { .. } => 3,
            CliError::Numeric(_) => 4,
        }
    }

    /// The single-line form printed on stderr.
    pub fn line(&self) -> String {
        ErrorLine(self).to_string()
    }
}

struct ErrorLine<'a>(&'a CliError);

impl fmt::Display for ErrorLine<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.0;
        write!(f, "error kind={} code={}", e.kind(), e.exit_code())?;
        let at = match e {
            CliError::Config { at, .. } | CliError::Data { at, .. } => at.clone(),
            CliError::Io { path, .. } => Some(Location::file(path)),
            CliError::Numeric(_) => None,
        };
        if let Some(at) = at {
            write!(f, " file={}", quote(&at.file.display().to_string()))?;
            if let Some(line) = at.line {
                write!(f, " line={line}")?;
            }
        }
        let message = match e {
            CliError::Io { source, .. } => source.to_string(),
            other => other.to_string(),
        };
        write!(f, " message={}", quote(&message))
    }
}

/// Double-quoted, with quotes, backslashes and line breaks escaped so the
/// result stays on one line.
fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl From<QrmError> for CliError {
    fn from(e: QrmError) -> Self {
        let message = e.to_string();
        match e {
            QrmError::CflViolation(_)
            | QrmError::NonFiniteEncountered(_)
            | QrmError::DegenerateCurvature(_)
            | QrmError::NonDescentDirection(_)
            | QrmError::IndexOutOfInterior { .. } => CliError::Numeric(message),
            QrmError::GridMismatch(_) => CliError::data(message),
            QrmError::NonCommensurate { .. }
            | QrmError::InvalidGrid(_)
            | QrmError::SupportViolation { .. }
            | QrmError::NodeMisaligned { .. }
            | QrmError::InvalidArgument(_) => CliError::config(message),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_line_is_single_line_key_value() {
        let e = CliError::config_at(Location::line(Path::new("a b.cfg"), 4), "bad \"x\"\nnext");
        assert_eq!(
            e.line(),
            r#"error kind=config code=2 file="a b.cfg" line=4 message="bad \"x\"\nnext""#
        );
        assert_eq!(CliError::from(QrmError::CflViolation(1.5)).exit_code(), 4);
        assert_eq!(CliError::from(QrmError::GridMismatch("x".into())).exit_code(), 3);
    }
}
