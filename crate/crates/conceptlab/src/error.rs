use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] conceptlab_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("missing artifact(s): {}", list_paths(.0))]
    Missing(Vec<PathBuf>),
    #[error("{}: {what} hash {found} does not match {expected}", artifact.display())]
    HashMismatch { artifact: PathBuf, what: &'static str, expected: String, found: String },
    #[error("config: {0}")]
    Config(String),
    #[error("service: {0}")]
    Serve(String),
}

fn list_paths(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn format(path: impl AsRef<Path>, msg: impl Into<String>) -> Self {
        Error::Format { path: path.as_ref().to_path_buf(), msg: msg.into() }
    }

    /// Process exit status: 2 for a missing upstream artifact, 64 for an
    /// unusable configuration, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Missing(_) => 2,
            Error::Config(_) | Error::Core(conceptlab_core::Error::Config(_)) => 64,
            _ => 1,
        }
    }
}
