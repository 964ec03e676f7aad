//! One JSON document per record, replaced atomically.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct RecordDir {
    dir: PathBuf,
}

impl RecordDir {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(RecordDir { dir })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    fn file(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    /// Writes to a temporary sibling and renames it over the record.
    pub fn write<T: Serialize>(&self, id: &str, value: &T) -> io::Result<()> {
        let mut body = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
        body.push(b'\n');
        let tmp = self.dir.join(format!(".{id}.json.tmp"));
        fs::write(&tmp, &body)?;
        fs::rename(&tmp, self.file(id)).inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })
    }

    pub fn read_bytes(&self, id: &str) -> io::Result<Vec<u8>> {
        fs::read(self.file(id))
    }

    /// Every record in the directory, sorted by id. Temporary files left by
    /// an interrupted write are ignored.
    pub fn load_all<T: DeserializeOwned>(&self) -> io::Result<Vec<(String, T)>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if name.starts_with('.') || !name.ends_with(".json") {
                continue;
            }
            let id = name.trim_end_matches(".json").to_string();
            let value = serde_json::from_slice(&fs::read(&path)?).map_err(|e| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{}: {e}", path.display()),
                )
            })?;
            out.push((id, value));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }
}
