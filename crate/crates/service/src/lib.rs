//! HTTP front end for `cogtop-core`.
//!
//! Corpora live in memory as [`Index`] values keyed by id; when an index
//! directory is configured, every `*.index.json` snapshot in it is loaded at
//! startup and new corpora are written back there. Sessions are kept in memory,
//! each behind its own mutex, and are written to the sessions file on shutdown.

pub mod error;
mod routes;
pub mod session;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::future::Future;
use std::io::{BufReader, BufWriter};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::Router;
use cogtop_core::{Index, IndexError, Lexicon};
use tokio::sync::Mutex;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

pub use error::{ApiError, ErrorBody};
pub use session::{HistoryEntry, Session, NOT_APPLICABLE};

/// File suffix of index snapshots inside the index directory.
pub const INDEX_SUFFIX: &str = ".index.json";

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Lexicon used by `POST /corpora` when the request names none.
    pub lexicon: Option<PathBuf>,
    pub index_dir: Option<PathBuf>,
    pub sessions_file: Option<PathBuf>,
    /// Static files served for any path the API does not claim.
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{path}: {source}")]
    Index { path: PathBuf, source: IndexError },
    #[error("lexicon {path}: {source}")]
    Lexicon {
        path: PathBuf,
        source: cogtop_core::LexiconError,
    },
    #[error("sessions file {path}: {message}")]
    Sessions { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type SharedSession = Arc<Mutex<Session>>;

#[derive(Default)]
pub struct AppState {
    pub config: ServiceConfig,
    pub default_lexicon: Option<Arc<Lexicon>>,
    pub corpora: RwLock<BTreeMap<String, Arc<Index>>>,
    pub sessions: RwLock<BTreeMap<String, SharedSession>>,
}

impl AppState {
    /// Loads the default lexicon, stored indexes and saved sessions named by `config`.
    pub fn load(config: ServiceConfig) -> Result<Self, ServiceError> {
        let default_lexicon = match &config.lexicon {
            Some(path) => {
                let file = File::open(path).map_err(|e| ServiceError::Lexicon {
                    path: path.clone(),
                    source: e.into(),
                })?;
                let lexicon = Lexicon::load(BufReader::new(file)).map_err(|source| {
                    ServiceError::Lexicon {
                        path: path.clone(),
                        source,
                    }
                })?;
                Some(Arc::new(lexicon))
            }
            None => None,
        };
        let mut corpora = BTreeMap::new();
        if let Some(dir) = &config.index_dir {
            for (id, index) in load_index_dir(dir)? {
                corpora.insert(id, Arc::new(index));
            }
        }
        let mut sessions = BTreeMap::new();
        if let Some(path) = &config.sessions_file {
            if path.exists() {
                for s in read_sessions(path)? {
                    sessions.insert(s.id.clone(), Arc::new(Mutex::new(s)));
                }
            }
        }
        Ok(Self {
            config,
            default_lexicon,
            corpora: RwLock::new(corpora),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn with_corpus(self, id: impl Into<String>, index: Index) -> Self {
        self.insert_corpus(id.into(), Arc::new(index));
        self
    }

    pub fn corpus(&self, id: &str) -> Option<Arc<Index>> {
        self.corpora.read().expect("corpora lock").get(id).cloned()
    }

    pub fn insert_corpus(&self, id: String, index: Arc<Index>) {
        self.corpora
            .write()
            .expect("corpora lock")
            .insert(id, index);
    }

    pub fn session(&self, id: &str) -> Option<SharedSession> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
    }

    /// Copies every session, waiting for in-flight refinements to finish.
    pub async fn session_snapshot(&self) -> Vec<Session> {
        let handles: Vec<SharedSession> = self
            .sessions
            .read()
            .expect("sessions lock")
            .values()
            .cloned()
            .collect();
        let mut out = Vec::with_capacity(handles.len());
        for h in handles {
            out.push(h.lock().await.clone());
        }
        out
    }

    pub async fn save_sessions(&self) -> Result<(), ServiceError> {
        let Some(path) = &self.config.sessions_file else {
            return Ok(());
        };
        let sessions = self.session_snapshot().await;
        let write = || -> std::io::Result<()> {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            let out = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(out, &sessions).map_err(std::io::Error::other)
        };
        write().map_err(|e| ServiceError::Sessions {
            path: path.clone(),
            message: e.to_string(),
        })
    }
}

pub fn load_index_dir(dir: &Path) -> Result<Vec<(String, Index)>, ServiceError> {
    let mut out = Vec::new();
    if !dir.exists() {
        return Ok(out);
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        let Some(id) = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_suffix(INDEX_SUFFIX))
        else {
            continue;
        };
        let index = File::open(&path)
            .map_err(IndexError::from)
            .and_then(|f| Index::read_snapshot(BufReader::new(f)))
            .map_err(|source| ServiceError::Index {
                path: path.clone(),
                source,
            })?;
        out.push((id.to_string(), index));
    }
    Ok(out)
}

pub fn index_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}{INDEX_SUFFIX}"))
}

fn read_sessions(path: &Path) -> Result<Vec<Session>, ServiceError> {
    let err = |message: String| ServiceError::Sessions {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| err(e.to_string()))
}

pub fn router(state: Arc<AppState>) -> Router {
    let ui_dir = state.config.ui_dir.clone();
    let app = routes::api().with_state(state);
    let app = match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    };
    app.layer(CorsLayer::permissive())
}

/// Serves until `shutdown` resolves, then writes the sessions file.
pub async fn serve<F>(
    state: Arc<AppState>,
    addr: SocketAddr,
    shutdown: F,
) -> Result<(), ServiceError>
where
    F: Future<Output = ()> + Send + 'static,
{
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await?;
    state.save_sessions().await?;
    tracing::info!("sessions saved");
    Ok(())
}
