//! TOML config documents.
//!
//! Every section of [`SessionConfig`] may be omitted; missing keys take the
//! built-in defaults and unknown keys are rejected. The `maze` key names a
//! map file relative to the config file; when empty the built-in reference
//! maze is used.
//!
//! The config digest is the SHA-256 of a canonical JSON document holding the
//! parsed config (with the maze path blanked) and the SHA-256 of the maze
//! text, so moving files around does not change it but editing any value
//! or any maze cell does.

use std::fs;
use std::path::{Path, PathBuf};

use posepilot_core::session::{ConfigError as CoreConfigError, ZonesConfig};
use posepilot_core::world::MazeError;
use posepilot_core::{Maze, SessionConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// The shipped reference course.
pub const REFERENCE_MAZE: &str = include_str!("../../../assets/reference.maze");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Syntax { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: CoreConfigError,
    },
    #[error("{path}:{}:{}: {}", .source.line, .source.column, .source.kind)]
    Maze {
        path: PathBuf,
        #[source]
        source: MazeError,
    },
}

impl ConfigError {
    /// I/O problems as opposed to bad content.
    pub fn is_io(&self) -> bool {
        matches!(self, ConfigError::Io { .. })
    }
}

/// A validated config together with its maze and digests.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: SessionConfig,
    pub maze: Maze,
    pub maze_text: String,
    pub digest: String,
    pub zone_digest: String,
}

/// 1-based line and column of a byte offset.
pub fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Serialize)]
struct Canonical<'a> {
    config: &'a SessionConfig,
    maze_sha256: String,
}

/// Digest of a config + maze pair.
pub fn config_digest(config: &SessionConfig, maze_text: &str) -> String {
    let mut config = config.clone();
    config.maze.clear();
    let doc = Canonical { config: &config, maze_sha256: sha256_hex(maze_text.as_bytes()) };
    let json = serde_json::to_string(&doc).expect("config serializes");
    sha256_hex(json.as_bytes())
}

/// Digest of the zone geometry alone, echoed in every telemetry snapshot so
/// a client can check its overlay against the server.
pub fn zone_digest(zones: &ZonesConfig) -> String {
    sha256_hex(serde_json::to_string(zones).expect("zones serialize").as_bytes())
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

impl LoadedConfig {
    /// Load and validate a config file and the maze it names.
    pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
        let text = read(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, path, base)
    }

    /// Parse `text`; `path` is only used in diagnostics, `base` resolves the
    /// maze path.
    pub fn from_toml(text: &str, path: &Path, base: &Path) -> Result<LoadedConfig, ConfigError> {
        let config: SessionConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
            ConfigError::Syntax { path: path.to_path_buf(), line, column, message: e.message().to_string() }
        })?;
        config.validate().map_err(|source| ConfigError::Invalid { path: path.to_path_buf(), source })?;
        let (maze_path, maze_text) = if config.maze.is_empty() {
            (PathBuf::from("<reference maze>"), REFERENCE_MAZE.to_string())
        } else {
            let p = base.join(&config.maze);
            let t = read(&p)?;
            (p, t)
        };
        Self::assemble(config, maze_text, &maze_path)
    }

    /// Built-in defaults on the reference maze.
    pub fn defaults() -> LoadedConfig {
        Self::with_maze(SessionConfig::default(), REFERENCE_MAZE).expect("built-in config is valid")
    }

    /// Validate an in-memory config against the given maze text.
    pub fn with_maze(config: SessionConfig, maze_text: &str) -> Result<LoadedConfig, ConfigError> {
        let path = PathBuf::from("<config>");
        config.validate().map_err(|source| ConfigError::Invalid { path: path.clone(), source })?;
        Self::assemble(config, maze_text.to_string(), &PathBuf::from("<maze>"))
    }

    fn assemble(config: SessionConfig, maze_text: String, maze_path: &Path) -> Result<LoadedConfig, ConfigError> {
        let maze =
            Maze::parse(&maze_text).map_err(|source| ConfigError::Maze { path: maze_path.to_path_buf(), source })?;
        Ok(LoadedConfig {
            digest: config_digest(&config, &maze_text),
            zone_digest: zone_digest(&config.zones),
            config,
            maze,
            maze_text,
        })
    }
}
