//! On-disk fixture store for recorded model responses.
//!
//! One JSON file per request, named `<key>.json`, where the key is the
//! SHA-256 of the canonical request encoding (tier plus ordered messages).

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{ChatMessage, LlmError, ModelTier};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRequest {
    pub tier: ModelTier,
    pub messages: Vec<ChatMessage>,
}

impl FixtureRequest {
    pub fn key(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayFixture {
    pub key: String,
    pub request: FixtureRequest,
    pub response: String,
    #[serde(default)]
    pub metadata: Value,
}

#[derive(Debug)]
pub struct FixtureStore {
    dir: PathBuf,
    loaded: RwLock<HashMap<String, ReplayFixture>>,
    write_lock: Mutex<()>,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            loaded: RwLock::new(HashMap::new()),
            write_lock: Mutex::new(()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<ReplayFixture>, LlmError> {
        if let Some(f) = self.loaded.read().unwrap().get(key) {
            return Ok(Some(f.clone()));
        }
        let path = self.path_for(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(LlmError::Fixture(format!("{}: {e}", path.display()))),
        };
        let fixture: ReplayFixture = serde_json::from_str(&text)
            .map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))?;
        if fixture.key != key {
            return Err(LlmError::Fixture(format!(
                "{}: stored key {} does not match file name",
                path.display(),
                fixture.key
            )));
        }
        self.loaded
            .write()
            .unwrap()
            .insert(key.to_string(), fixture.clone());
        Ok(Some(fixture))
    }

    /// Writes (or replaces) a fixture. Writes are serialized and atomic per
    /// file.
    pub fn put(&self, fixture: ReplayFixture) -> Result<(), LlmError> {
        let _guard = self.write_lock.lock().unwrap();
        fs::create_dir_all(&self.dir)
            .map_err(|e| LlmError::Fixture(format!("{}: {e}", self.dir.display())))?;
        let path = self.path_for(&fixture.key);
        let tmp = path.with_extension("json.tmp");
        let body = serde_json::to_string_pretty(&fixture).expect("fixture serializes");
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(body.as_bytes())?;
            f.write_all(b"\n")?;
            fs::rename(&tmp, &path)
        };
        write().map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))?;
        self.loaded
            .write()
            .unwrap()
            .insert(fixture.key.clone(), fixture);
        Ok(())
    }
}
