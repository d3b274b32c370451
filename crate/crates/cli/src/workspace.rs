use std::env;
use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

/// Root directory that every path a command touches must live under.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: &Path) -> Result<Self> {
        let absolute = if root.is_absolute() {
            root.to_path_buf()
        } else {
            env::current_dir()
                .context("cannot determine current directory")?
                .join(root)
        };
        Ok(Workspace {
            root: normalize(&absolute),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Resolves `path` against the workspace root and rejects anything outside it.
    pub fn resolve(&self, path: &Path) -> Result<PathBuf> {
        let joined = normalize(&self.root.join(path));
        if !joined.starts_with(&self.root) {
            bail!(
                "{} is outside the workspace {}",
                path.display(),
                self.root.display()
            );
        }
        Ok(joined)
    }

    /// Workspace-relative form of an already resolved path, with `/` separators.
    pub fn relative(&self, resolved: &Path) -> String {
        let rel = resolved.strip_prefix(&self.root).unwrap_or(resolved);
        rel.components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/")
    }
}

/// Lexical normalization: drops `.` and folds `..` without touching the filesystem.
fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for component in path.components() {
        match component {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

/// Record of one command's inputs and outputs, written as JSON next to its outputs.
///
/// All paths are workspace-relative so reruns in another directory produce
/// identical bytes.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunManifest {
    #[serde(skip)]
    pub workspace: PathBuf,
    pub command: String,
    pub seed: u64,
    pub member_ids: Vec<String>,
    pub corpora: Vec<String>,
    pub models: Vec<String>,
    pub histories: Vec<String>,
    pub probability_tables: Vec<String>,
    pub spec: Option<String>,
    pub reports: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> Result<String> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        Ok(json)
    }
}
