//! Directory-backed registry: one document per `(user, date, kind)`, named
//! `<user>_<yyyy-mm-dd>_<kind>.json`.
//!
//! Writes go to a hidden temporary file in the same directory and are renamed
//! into place, so readers only ever see complete documents. Writers take an
//! exclusive advisory lock on `.registry.lock`.

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use super::document::{parse_sessions, serialize_sessions, DocumentError, DocumentKind};
use crate::scalar::Scalar;
use crate::types::{Session, SessionDate, UserLabel, ValidationError};

const LOCK_FILE: &str = ".registry.lock";
const TEMP_PREFIX: &str = ".tmp-";

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Document { path: PathBuf, source: DocumentError },
    #[error("{}: expected exactly one session record, found {count}", path.display())]
    RecordCount { path: PathBuf, count: usize },
    #[error("session {0} already exists")]
    Duplicate(RegistryKey),
    #[error("session {0} not found")]
    NotFound(RegistryKey),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RegistryError + '_ {
    move |source| RegistryError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegistryKey {
    pub user: UserLabel,
    pub date: SessionDate,
    pub kind: DocumentKind,
}

impl RegistryKey {
    pub fn new(user: UserLabel, date: SessionDate, kind: DocumentKind) -> Self {
        Self { user, date, kind }
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}_{}.json", self.user, self.date.iso(), self.kind)
    }

    /// Inverse of [`RegistryKey::file_name`]; `None` for anything else.
    pub fn from_file_name(name: &str) -> Option<Self> {
        let stem = name.strip_suffix(".json")?;
        let mut parts = stem.rsplitn(3, '_');
        let kind = match parts.next()? {
            "movement" => DocumentKind::Movement,
            "emotion" => DocumentKind::Emotion,
            _ => return None,
        };
        let date = SessionDate::parse_iso(parts.next()?).ok()?;
        let user = UserLabel::new(parts.next()?).ok()?;
        Some(Self { user, date, kind })
    }
}

impl fmt::Display for RegistryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.user, self.date.iso(), self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RegistryEntry {
    pub user_label: String,
    /// ISO `yyyy-mm-dd`, as used in file names and URLs.
    pub date: String,
    pub kind: DocumentKind,
    pub event_count: usize,
}

#[derive(Debug, Clone)]
pub struct Registry {
    root: PathBuf,
}

impl Registry {
    /// Opens a registry directory, creating it if needed.
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, RegistryError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Self { root })
    }

    /// Opens an existing registry directory.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, RegistryError> {
        let root = root.into();
        let meta = fs::metadata(&root).map_err(io_err(&root))?;
        if !meta.is_dir() {
            return Err(RegistryError::Io {
                path: root,
                source: io::Error::new(io::ErrorKind::NotADirectory, "registry is not a directory"),
            });
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_of(&self, key: &RegistryKey) -> PathBuf {
        self.root.join(key.file_name())
    }

    /// Saves one kind of a session. The session must carry a valid user label.
    pub fn save_session<T: Scalar>(
        &self,
        session: &Session<T>,
        kind: DocumentKind,
        overwrite: bool,
    ) -> Result<PathBuf, RegistryError> {
        self.save_with(session, kind, overwrite, |_| Ok(()))
    }

    /// Save with a hook run after the temporary file is written and before it is renamed.
    pub(crate) fn save_with<T: Scalar>(
        &self,
        session: &Session<T>,
        kind: DocumentKind,
        overwrite: bool,
        before_rename: impl FnOnce(&Path) -> io::Result<()>,
    ) -> Result<PathBuf, RegistryError> {
        session.validate()?;
        let key = RegistryKey::new(UserLabel::new(session.user_label.clone())?, session.date, kind);
        let target = self.path_of(&key);
        let text = serialize_sessions(std::slice::from_ref(session), kind);

        let _lock = self.lock()?;
        if !overwrite && target.exists() {
            return Err(RegistryError::Duplicate(key));
        }
        let mut tmp = tempfile::Builder::new()
            .prefix(TEMP_PREFIX)
            .suffix(".partial")
            .tempfile_in(&self.root)
            .map_err(io_err(&self.root))?;
        tmp.write_all(text.as_bytes()).map_err(io_err(tmp.path()))?;
        tmp.as_file().sync_all().map_err(io_err(tmp.path()))?;
        before_rename(tmp.path()).map_err(io_err(tmp.path()))?;
        tmp.persist(&target).map_err(|e| RegistryError::Io { path: target.clone(), source: e.error })?;
        Ok(target)
    }

    fn lock(&self) -> Result<File, RegistryError> {
        let path = self.root.join(LOCK_FILE);
        let file = OpenOptions::new().create(true).truncate(false).write(true).open(&path).map_err(io_err(&path))?;
        file.lock().map_err(io_err(&path))?;
        Ok(file)
    }

    pub fn load_document(&self, key: &RegistryKey) -> Result<String, RegistryError> {
        let path = self.path_of(key);
        fs::read_to_string(&path).map_err(|source| {
            if source.kind() == io::ErrorKind::NotFound {
                RegistryError::NotFound(key.clone())
            } else {
                RegistryError::Io { path: path.clone(), source }
            }
        })
    }

    pub fn load_session<T: Scalar>(&self, key: &RegistryKey) -> Result<Session<T>, RegistryError> {
        let text = self.load_document(key)?;
        let path = self.path_of(key);
        let mut sessions = parse_sessions::<T>(&text, key.kind)
            .map_err(|source| RegistryError::Document { path: path.clone(), source })?;
        if sessions.len() != 1 {
            return Err(RegistryError::RecordCount { path, count: sessions.len() });
        }
        let mut session = sessions.pop().expect("length checked");
        session.user_label = key.user.to_string();
        Ok(session)
    }

    /// Keys of every complete document, sorted. Temporary files and foreign names are ignored.
    pub fn keys(&self) -> Result<Vec<RegistryKey>, RegistryError> {
        let mut keys = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io_err(&self.root))? {
            let entry = entry.map_err(io_err(&self.root))?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            if name.starts_with('.') {
                continue;
            }
            if let Some(key) = RegistryKey::from_file_name(name) {
                keys.push(key);
            }
        }
        keys.sort();
        Ok(keys)
    }

    pub fn list_sessions(&self) -> Result<Vec<RegistryEntry>, RegistryError> {
        self.keys()?
            .into_iter()
            .map(|key| {
                let session = self.load_session::<f64>(&key)?;
                let event_count = match key.kind {
                    DocumentKind::Movement => session.movements.len(),
                    DocumentKind::Emotion => session.emotions.len(),
                };
                Ok(RegistryEntry {
                    user_label: key.user.to_string(),
                    date: key.date.iso(),
                    kind: key.kind,
                    event_count,
                })
            })
            .collect()
    }

    /// All sessions of one kind, with user labels filled in from the keys.
    pub fn load_all<T: Scalar>(&self, kind: DocumentKind) -> Result<Vec<Session<T>>, RegistryError> {
        self.keys()?.iter().filter(|k| k.kind == kind).map(|k| self.load_session(k)).collect()
    }

    /// Concatenates every session of one kind into a single document.
    pub fn export<T: Scalar>(&self, kind: DocumentKind) -> Result<String, RegistryError> {
        Ok(serialize_sessions(&self.load_all::<T>(kind)?, kind))
    }
}
