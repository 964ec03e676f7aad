//! HTTP JSON facade over the AMQ pipeline: persisted review sessions,
//! dictionary search and background evaluation runs.
//!
//! The server holds one immutable (dictionary, embedding store) pair. Each
//! session and run is a JSON document in the data directory; the in-memory
//! copy is only a cache of what is on disk.

mod api;
pub mod error;
pub mod runs;
pub mod session;
pub mod storage;

use std::collections::HashMap;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use amq_core::pipeline::ProbeTable;
use amq_core::{Dictionary, EmbeddingStore};
use axum::Router;

pub use error::ApiError;
pub use runs::{EvalRequest, EvalRun, RunStatus};
pub use session::{DecisionState, ExportFormat, ReviewSession, SessionStatus};
use storage::RecordDir;

/// Read-only data loaded at startup.
#[derive(Debug)]
pub struct Corpus {
    pub dictionary: Dictionary,
    pub store: EmbeddingStore,
    pub probes: ProbeTable,
}

pub(crate) type Shared<T> = Arc<Mutex<T>>;

struct Inner {
    corpus: Corpus,
    sessions_dir: RecordDir,
    runs_dir: RecordDir,
    artifacts_root: PathBuf,
    sessions: RwLock<HashMap<String, Shared<ReviewSession>>>,
    runs: RwLock<HashMap<String, Shared<EvalRun>>>,
}

/// Cheaply clonable handle shared by all handlers.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// Opens (or creates) `data_dir` and loads every persisted record. Runs
    /// left `running` by a previous process are marked failed.
    pub fn open(corpus: Corpus, data_dir: impl AsRef<Path>) -> io::Result<Self> {
        let data_dir = data_dir.as_ref();
        let sessions_dir = RecordDir::open(data_dir.join("sessions"))?;
        let runs_dir = RecordDir::open(data_dir.join("runs"))?;
        let artifacts_root = data_dir.join("artifacts");

        let sessions = sessions_dir
            .load_all::<ReviewSession>()?
            .into_iter()
            .map(|(id, s)| (id, Arc::new(Mutex::new(s))))
            .collect();
        let mut runs = HashMap::new();
        for (id, mut run) in runs_dir.load_all::<EvalRun>()? {
            if run.status == RunStatus::Running {
                run.finish(Err("interrupted by server restart".into()));
                runs_dir.write(&id, &run)?;
            }
            runs.insert(id, Arc::new(Mutex::new(run)));
        }
        Ok(AppState(Arc::new(Inner {
            corpus,
            sessions_dir,
            runs_dir,
            artifacts_root,
            sessions: RwLock::new(sessions),
            runs: RwLock::new(runs),
        })))
    }

    pub fn corpus(&self) -> &Corpus {
        &self.0.corpus
    }

    pub(crate) fn session(&self, id: &str) -> Result<Shared<ReviewSession>, ApiError> {
        self.0
            .sessions
            .read()
            .expect("session index poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))
    }

    pub(crate) fn insert_session(
        &self,
        session: ReviewSession,
    ) -> Result<Shared<ReviewSession>, ApiError> {
        self.0.sessions_dir.write(&session.session_id, &session)?;
        let id = session.session_id.clone();
        let shared = Arc::new(Mutex::new(session));
        self.0
            .sessions
            .write()
            .expect("session index poisoned")
            .insert(id, shared.clone());
        Ok(shared)
    }

    pub(crate) fn persist_session(&self, session: &ReviewSession) -> io::Result<()> {
        self.0.sessions_dir.write(&session.session_id, session)
    }

    /// Raw stored bytes of a session record.
    pub fn session_bytes(&self, id: &str) -> io::Result<Vec<u8>> {
        self.0.sessions_dir.read_bytes(id)
    }

    pub(crate) fn run(&self, id: &str) -> Result<Shared<EvalRun>, ApiError> {
        self.0
            .runs
            .read()
            .expect("run index poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown eval run {id}")))
    }

    pub(crate) fn insert_run(&self, run: EvalRun) -> Result<Shared<EvalRun>, ApiError> {
        self.0.runs_dir.write(&run.run_id, &run)?;
        let id = run.run_id.clone();
        let shared = Arc::new(Mutex::new(run));
        self.0
            .runs
            .write()
            .expect("run index poisoned")
            .insert(id, shared.clone());
        Ok(shared)
    }

    pub(crate) fn persist_run(&self, run: &EvalRun) -> io::Result<()> {
        self.0.runs_dir.write(&run.run_id, run)
    }

    pub(crate) fn artifacts_dir(&self, run_id: &str) -> PathBuf {
        self.0.artifacts_root.join(run_id)
    }
}

/// All API routes, plus static files from `ui_dir` when given.
pub fn router(state: AppState, ui_dir: Option<&Path>) -> Router {
    let app = api::routes().with_state(state);
    match ui_dir {
        Some(dir) => app.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => app,
    }
}

/// Serves until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr, ui_dir: Option<PathBuf>) -> io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state, ui_dir.as_deref()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
