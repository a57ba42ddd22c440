use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use reconplan_core::{Dataset, Scenario, TrainedModel};
use serde::{Deserialize, Serialize};

/// Everything the service remembers between requests.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
pub struct Session {
    pub datasets: BTreeMap<String, Dataset>,
    pub models: BTreeMap<String, TrainedModel>,
    pub scenarios: BTreeMap<String, Scenario>,
    #[serde(default)]
    counters: BTreeMap<String, u64>,
}

impl Session {
    /// Next sequential id with the given prefix: `ds-1`, `ds-2`, …
    pub fn next_id(&mut self, prefix: &str) -> String {
        let n = self.counters.entry(prefix.to_string()).or_insert(0);
        *n += 1;
        format!("{prefix}-{n}")
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Upper bound on request bodies, in bytes.
    pub max_body_bytes: usize,
    /// When set, the session is loaded from and saved to this JSON file.
    pub state_file: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            max_body_bytes: 16 * 1024 * 1024,
            state_file: None,
        }
    }
}

/// Shared handle to the session. Cheap to clone.
#[derive(Debug, Clone)]
pub struct AppState {
    session: Arc<RwLock<Session>>,
    config: Arc<ServiceConfig>,
}

impl AppState {
    /// Starts from the state file if one is configured and exists.
    pub fn open(config: ServiceConfig) -> io::Result<Self> {
        let session = match &config.state_file {
            Some(path) if path.exists() => {
                let text = fs::read_to_string(path)?;
                serde_json::from_str(&text)
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?
            }
            _ => Session::default(),
        };
        Ok(AppState {
            session: Arc::new(RwLock::new(session)),
            config: Arc::new(config),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn read(&self) -> RwLockReadGuard<'_, Session> {
        self.session.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Applies `f` under the write lock and snapshots the result, so ids are
    /// handed out and persisted in one order.
    pub fn mutate<T>(&self, f: impl FnOnce(&mut Session) -> T) -> io::Result<T> {
        let mut guard: RwLockWriteGuard<'_, Session> =
            self.session.write().unwrap_or_else(|e| e.into_inner());
        let out = f(&mut guard);
        if let Some(path) = &self.config.state_file {
            save_snapshot(path, &guard)?;
        }
        Ok(out)
    }
}

/// Writes to a sibling temp file first so a crash never leaves a torn snapshot.
fn save_snapshot(path: &Path, session: &Session) -> io::Result<()> {
    let json = serde_json::to_vec(session).map_err(io::Error::other)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, json)?;
    fs::rename(&tmp, path)
}
