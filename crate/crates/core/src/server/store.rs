//! Project and dataset files under the data directory.
//!
//! ```text
//! <data_dir>/config.json
//! <data_dir>/<project>/project.json
//! <data_dir>/<project>/datasets/<dataset>.json
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use crate::error::Error;
use crate::model::{Dataset, Project, VideoSource};
use crate::persistence::{load_dataset, save_dataset};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("{0} already exists")]
    Exists(String),
    #[error("invalid id `{0}`")]
    BadId(String),
    #[error(transparent)]
    Engine(#[from] Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Ids become file names, so only a conservative character set is allowed.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'))
}

fn check_id(id: &str) -> Result<(), StoreError> {
    if valid_id(id) {
        Ok(())
    } else {
        Err(StoreError::BadId(id.to_string()))
    }
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn read_if_exists(path: &Path, what: impl FnOnce() -> String) -> Result<Vec<u8>, StoreError> {
    fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => StoreError::NotFound(what()),
        _ => StoreError::Io(e),
    })
}

type LockMap = HashMap<(String, String), Arc<tokio::sync::Mutex<()>>>;

pub struct Store {
    root: PathBuf,
    locks: Mutex<LockMap>,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Store {
            root: root.into(),
            locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.json")
    }

    fn project_path(&self, p: &str) -> PathBuf {
        self.root.join(p).join("project.json")
    }

    fn dataset_path(&self, p: &str, d: &str) -> PathBuf {
        self.root.join(p).join("datasets").join(format!("{d}.json"))
    }

    /// The writer lock for one dataset.
    pub fn lock(&self, p: &str, d: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock map poisoned");
        locks
            .entry((p.to_string(), d.to_string()))
            .or_default()
            .clone()
    }

    pub fn list_projects(&self) -> Result<Vec<Project>, StoreError> {
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(vec![]),
            Err(e) => return Err(e.into()),
        };
        let mut ids = Vec::new();
        for entry in entries {
            let entry = entry?;
            if let Some(name) = entry.file_name().to_str() {
                if valid_id(name) && self.project_path(name).is_file() {
                    ids.push(name.to_string());
                }
            }
        }
        ids.sort();
        ids.iter().map(|id| self.load_project(id)).collect()
    }

    pub fn load_project(&self, p: &str) -> Result<Project, StoreError> {
        check_id(p)?;
        let bytes = read_if_exists(&self.project_path(p), || format!("project `{p}`"))?;
        let project: Project =
            serde_json::from_slice(&bytes).map_err(|e| Error::MalformedDocument(e.to_string()))?;
        project.validate()?;
        Ok(project)
    }

    /// Stores a new project and an empty dataset for each of its dataset refs.
    pub fn create_project(&self, project: &Project) -> Result<(), StoreError> {
        check_id(&project.id)?;
        project.dataset_refs.iter().try_for_each(|d| check_id(d))?;
        project.validate()?;
        let path = self.project_path(&project.id);
        if path.exists() {
            return Err(StoreError::Exists(format!("project `{}`", project.id)));
        }
        for d in &project.dataset_refs {
            let dpath = self.dataset_path(&project.id, d);
            if !dpath.exists() {
                write_atomic(&dpath, &save_dataset(&Dataset::with_defaults()))?;
            }
        }
        let mut bytes =
            serde_json::to_vec_pretty(project).expect("project serialization is infallible");
        bytes.push(b'\n');
        write_atomic(&path, &bytes)?;
        Ok(())
    }

    pub fn load_dataset(&self, p: &str, d: &str) -> Result<Dataset, StoreError> {
        check_id(p)?;
        check_id(d)?;
        let bytes = read_if_exists(&self.dataset_path(p, d), || format!("dataset `{p}/{d}`"))?;
        Ok(load_dataset(&bytes)?)
    }

    pub fn dataset_exists(&self, p: &str, d: &str) -> bool {
        valid_id(p) && valid_id(d) && self.dataset_path(p, d).is_file()
    }

    /// Callers must hold [`Store::lock`] for `(p, d)`.
    pub fn write_dataset(&self, p: &str, d: &str, dataset: &Dataset) -> Result<(), StoreError> {
        check_id(p)?;
        check_id(d)?;
        write_atomic(&self.dataset_path(p, d), &save_dataset(dataset))?;
        Ok(())
    }

    /// Finds a source by id across all projects.
    pub fn find_source(&self, source_id: &str) -> Result<Option<VideoSource>, StoreError> {
        Ok(self
            .list_projects()?
            .into_iter()
            .find_map(|p| p.source(source_id).cloned()))
    }
}
