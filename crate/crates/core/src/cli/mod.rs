//! Configuration-driven pipeline behind the `rotdev` binary.
//!
//! Every subcommand runs the stages it depends on, writes its artifacts into
//! the output directory and finishes with `manifest.json`. Outputs contain no
//! timestamps or timings, so repeated runs are byte-identical; timings go to
//! the log only.

pub mod cache;
pub mod config;
mod pipeline;
pub mod render;
pub mod report;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::deviations::DeviationError;
use crate::pseudofoliation::FoliationError;
use crate::rotation_set::RotationSetError;
use crate::stable_sets::StableSetError;
use crate::torus_maps::MapError;

pub use config::{CachePolicy, RunConfig};
pub use pipeline::{run, Manifest, MANIFEST_FILE};
pub use verify::{VerifyCheck, VerifyReport};

pub const LOCK_FILE: &str = ".rotdev.lock";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Rotset,
    Deviation,
    Stableset,
    Foliation,
    Verify,
    Render,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Rotset => "rotset",
            Subcommand::Deviation => "deviation",
            Subcommand::Stableset => "stableset",
            Subcommand::Foliation => "foliation",
            Subcommand::Verify => "verify",
            Subcommand::Render => "render",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("numerical precondition failed: {0}")]
    Numerical(String),
    #[error("stage dependency unmet: {0}")]
    Dependency(String),
    #[error("unknown artifact: {0}")]
    UnknownArtifact(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), message: e.to_string() }
    }

    /// 1 for configuration and I/O problems, 2 for numerical precondition
    /// failures, 3 for unmet stage dependencies.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::UnknownArtifact(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Dependency(_) => 3,
        }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::InvalidParameter(_) | MapError::InvalidInverseMode(_) | MapError::HorizonExceeded { .. } => {
                CliError::Config(e.to_string())
            }
            MapError::ContractionViolated { .. } | MapError::NoConvergence { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<RotationSetError> for CliError {
    fn from(e: RotationSetError) -> Self {
        match e {
            RotationSetError::NotLineLike(_) => CliError::Dependency(format!("deviations need a carrier line: {e}")),
            RotationSetError::Map(m) => m.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<DeviationError> for CliError {
    fn from(e: DeviationError) -> Self {
        match e {
            DeviationError::SandwichViolated { .. } => CliError::Numerical(e.to_string()),
            DeviationError::Map(m) => m.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<StableSetError> for CliError {
    fn from(e: StableSetError) -> Self {
        match e {
            StableSetError::Map(m) => m.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<FoliationError> for CliError {
    fn from(e: FoliationError) -> Self {
        match e {
            FoliationError::SeedEmpty { .. } | FoliationError::InsufficientResolution { .. } => CliError::Numerical(e.to_string()),
            FoliationError::StableSet(s) => s.into(),
            FoliationError::Map(m) => m.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Io { path, message: "output directory is locked by another run".into() })
            }
            Err(e) => Err(CliError::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let lock = DirLock::acquire(dir.path()).unwrap();
        assert_eq!(DirLock::acquire(dir.path()).unwrap_err().exit_code(), 1);
        drop(lock);
        assert!(DirLock::acquire(dir.path()).is_ok());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(MapError::ContractionViolated { bound: 1.2 }).exit_code(), 2);
        let not_line = RotationSetError::NotLineLike(crate::rotation_set::Classification::Interior);
        assert_eq!(CliError::from(not_line).exit_code(), 3);
        assert_eq!(CliError::from(FoliationError::SeedEmpty { r: 0.0 }).exit_code(), 2);
        assert_eq!(CliError::Config("x".into()).exit_code(), 1);
    }
}
