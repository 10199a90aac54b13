use std::fmt;
use std::path::Path;

use chanimg_core::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Io,
    Malformed,
    Version,
    Domain,
    Diverged,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Usage => 2,
            Kind::Io => 3,
            Kind::Malformed => 4,
            Kind::Version => 5,
            Kind::Domain => 6,
            Kind::Diverged => 7,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Usage => "usage",
            Kind::Io => "io",
            Kind::Malformed => "malformed",
            Kind::Version => "version",
            Kind::Domain => "domain",
            Kind::Diverged => "diverged",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(Kind::Io, format!("{}: {e}", path.display()))
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(Kind::Malformed, message)
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Kind::Usage, message)
    }

    /// Attaches a file name to the message.
    pub fn at(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Io(_) => Kind::Io,
            Error::Version { .. } => Kind::Version,
            Error::Diverged { .. } => Kind::Diverged,
            Error::Format { .. } | Error::Shape { .. } | Error::CorruptImage(_) | Error::InvalidLink(_) => {
                Kind::Malformed
            }
            Error::DegenerateGeometry(_)
            | Error::Domain(_)
            | Error::EmptyDataset
            | Error::EmptyLink
            | Error::TooManyPaths(_)
            | Error::DegenerateFeature(_)
            | Error::Config(_) => Kind::Domain,
        };
        Self::new(kind, e.to_string())
    }
}

impl fmt::Display for CliError {
    /// One line: `error: code=<kind> exit=<n> msg=<message>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.message.replace(['\n', '\r'], " ");
        write!(
            f,
            "error: code={} exit={} msg={}",
            self.kind.name(),
            self.kind.exit_code(),
            msg
        )
    }
}
